#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "dyadlab/runner.hpp"
#include "dyadlab/version.hpp"

namespace {

int dispatch(const std::string& command, const std::string& config_path,
             const std::string& out_dir, bool seed_set, std::uint64_t seed, int threads) {
  using dyadlab::json;
  try {
    std::ifstream is(config_path);
    if (!is) dyadlab::fail(dyadlab::errc::io_error, "cannot read config '" + config_path + "'");
    std::stringstream buffer;
    buffer << is.rdbuf();
    dyadlab::Config cfg = dyadlab::parse_config(buffer.str());
    if (seed_set) cfg.seed = seed;
    cfg.threads = threads >= 1 ? threads : dyadlab::thread_count_from_env();

    dyadlab::RunResult result = dyadlab::run_command(command, cfg, out_dir);
    std::cout << result.summary.dump() << "\n";
    return result.exit_code;
  } catch (const dyadlab::Error& e) {
    json err;
    err["error"] = {{"code", dyadlab::errc_name(e.code())}, {"message", e.what()}};
    std::cout << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"code", "internal"}, {"message", e.what()}};
    std::cout << err.dump() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyadlab: dyadic harmonic analysis experiments with matrix weights"};
  app.set_version_flag("--version", dyadlab::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory for reports");
    sub->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--threads", threads,
                    "worker threads (DYADLAB_THREADS honored when absent)");
  };

  for (const char* name : {"analyze-weight", "stopping-time", "paraproduct-test",
                           "haar-selftest", "apply"})
    add_common(app.add_subcommand(name));

  CLI11_PARSE(app, argc, argv);
  return dispatch(app.get_subcommands().front()->get_name(), config_path, out_dir, seed_set, seed,
                  threads);
}
