#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dyadlab/config.hpp"
#include "dyadlab/parallel.hpp"
#include "dyadlab/reports.hpp"
#include "dyadlab/rng.hpp"

namespace dyadlab {

struct RunResult {
  int exit_code = 0;
  json summary;
};

namespace detail {

inline void check_writable(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const std::string probe = out_dir + "/.write_probe";
  {
    std::ofstream os(probe);
    if (!os) fail(errc::io_error, "output directory '" + out_dir + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

inline SymbolCoefficients cli_symbol(const Config& cfg, int resolution) {
  if (cfg.symbol_source == "root") {
    SymbolCoefficients b = SymbolCoefficients::zero(resolution, 1, 1);
    b.coeff(DyadicInterval::root())(0, 0) = 1.0;
    return b;
  }
  Rng rng(derive_seed(cfg.seed, 1000));
  return make_bmo_symbol(resolution, rng);
}

inline json selftest_report(const Config& cfg) {
  json checks = json::array();
  bool all_pass = true;
  Rng rng(cfg.seed);
  const int n = cfg.resolution;

  double worst_rt = 0.0, worst_parseval = 0.0;
  for (int trial = 0; trial < cfg.selftest_trials; ++trial) {
    StepFunction f = random_step_function(n, 1, 1, rng);
    auto coeffs = haar_transform(f);
    worst_rt = std::max(worst_rt, sup_diff(haar_synthesize(coeffs), f) / f.max_abs());
    double energy = coeffs.mean(0, 0) * coeffs.mean(0, 0);
    for (const auto& lvl : coeffs.levels) energy += lvl.squaredNorm();
    const double l2 = lp_norm(f, 2.0);
    worst_parseval = std::max(worst_parseval, std::abs(energy - l2 * l2) / (l2 * l2));
  }
  const bool rt_ok = worst_rt <= 1e-12;
  const bool parseval_ok = worst_parseval <= 1e-10;
  checks.push_back({{"name", "round_trip"}, {"pass", rt_ok}, {"worst", worst_rt}});
  checks.push_back({{"name", "parseval"}, {"pass", parseval_ok}, {"worst", worst_parseval}});

  double worst_ortho = 0.0;
  {
    const int m = std::min(n, 6);
    auto all = intervals_to_level(m - 1);
    for (const auto& I : all)
      for (const auto& J : all) {
        StepFunction hi = haar_function(I, m), hj = haar_function(J, m);
        double ip = 0.0;
        for (Eigen::Index c = 0; c < hi.cell_count(); ++c)
          ip += hi.scalar(c) * hj.scalar(c);
        ip *= std::ldexp(1.0, -m);
        worst_ortho = std::max(worst_ortho, std::abs(ip - (I == J ? 1.0 : 0.0)));
      }
  }
  const bool ortho_ok = worst_ortho <= 1e-12;
  checks.push_back({{"name", "orthonormality"}, {"pass", ortho_ok}, {"worst", worst_ortho}});

  double worst_nesting = 0.0;
  {
    StepFunction f = random_step_function(n, 1, 1, rng);
    for (const auto& I : intervals_to_level(n - 1)) {
      const double parent = mean_on_scalar(f, I) * I.length();
      const double kids = mean_on_scalar(f, I.left_half()) * I.left_half().length() +
                          mean_on_scalar(f, I.right_half()) * I.right_half().length();
      worst_nesting = std::max(worst_nesting, std::abs(parent - kids));
    }
  }
  const bool nesting_ok = worst_nesting <= 1e-13;
  checks.push_back({{"name", "mean_nesting"}, {"pass", nesting_ok}, {"worst", worst_nesting}});

  all_pass = rt_ok && parseval_ok && ortho_ok && nesting_ok;
  json j;
  j["report"] = "haar_selftest";
  detail::wrap_report(j, cfg);
  j["trials"] = cfg.selftest_trials;
  j["checks"] = checks;
  j["pass"] = all_pass;
  return j;
}

inline StepFunction apply_named_operator(const Config& cfg, const StepFunction& input) {
  const std::string& name = cfg.operator_name;
  const Exponent p(cfg.p);
  const int n = input.resolution();

  if (name == "square") return square_function(input);
  if (name == "maximal") return dyadic_maximal(input);
  if (name == "paraproduct") return paraproduct(cli_symbol(cfg, n), input);
  if (name == "matrix_paraproduct") {
    Rng rng(derive_seed(cfg.seed, 1000));
    return matrix_paraproduct(make_carleson_symbol(n, input.rows(), rng), input);
  }

  MatrixWeight W = make_weight(cfg.family, n, cfg.sampling);
  if (W.dim() != input.rows())
    fail(errc::shape_mismatch, "input dimension does not match the weight family");
  const auto opt = cfg.reducing_options();
  if (name == "multiplier:reducing")
    return haar_multiplier(
        build_multiplier(W, p, MultiplierSpec::Provenance::reducing, cfg.backend, false, opt),
        input);
  if (name == "multiplier:inverse_reducing")
    return haar_multiplier(build_multiplier(W, p, MultiplierSpec::Provenance::inverse_reducing,
                                            cfg.backend, false, opt),
                           input);
  if (name == "multiplier:naive_average")
    return haar_multiplier(
        build_multiplier(W, p, MultiplierSpec::Provenance::naive_average, cfg.backend, false, opt),
        input);
  if (name == "conjugated") return conjugated_paraproduct(W, p, cli_symbol(cfg, n), input);
  if (name == "conjugated_M")
    return conjugated_paraproduct_m(W, p, cli_symbol(cfg, n), input, cfg.backend, opt);
  fail(errc::invalid_input, "unknown operator '" + name + "' for apply");
}

}  // namespace detail

/// Execute one CLI command. Reports land in out_dir; the returned summary
/// lists them. Progress goes to stderr only.
inline RunResult run_command(const std::string& command, const Config& cfg,
                             const std::string& out_dir) {
  detail::check_writable(out_dir);
  RunResult result;
  result.summary["command"] = command;
  json outputs = json::array();

  if (command == "haar-selftest") {
    json rep = detail::selftest_report(cfg);
    const std::string path = out_dir + "/selftest.json";
    write_json_file(path, rep);
    outputs.push_back(path);
    result.exit_code = rep["pass"].get<bool>() ? 0 : 1;
  } else if (command == "analyze-weight") {
    MatrixWeight W = make_weight(cfg.family, cfg.resolution, cfg.sampling);
    std::cerr << "analyze-weight: scanning " << ((std::int64_t{2} << cfg.depth) - 1)
              << " intervals to depth " << cfg.depth << "\n";
    ApReport ap = ap_characteristic(W, Exponent(cfg.p), cfg.depth, cfg.backend,
                                    cfg.reducing_options(), cfg.threads);
    ReverseHolderReport rh =
        reverse_holder_scan(W, Exponent(cfg.p), cfg.q_grid, cfg.depth, cfg.backend,
                            cfg.reducing_options(), cfg.rh_growth_threshold);
    write_json_file(out_dir + "/ap_report.json", ap_report_json(ap, cfg));
    write_text_file(out_dir + "/ap_per_level.csv", ap_report_csv(ap));
    write_json_file(out_dir + "/reverse_holder.json", reverse_holder_json(rh, cfg));
    write_text_file(out_dir + "/reverse_holder.csv", reverse_holder_csv(rh));
    for (const char* f :
         {"/ap_report.json", "/ap_per_level.csv", "/reverse_holder.json", "/reverse_holder.csv"})
      outputs.push_back(out_dir + f);
  } else if (command == "stopping-time") {
    MatrixWeight W = make_weight(cfg.family, cfg.resolution, cfg.sampling);
    StoppingConfig scfg;
    scfg.lambda = cfg.lambda;
    scfg.lambda_factor = cfg.lambda_factor;
    scfg.max_generations = cfg.max_generations;
    scfg.backend = cfg.backend;
    scfg.reducing = cfg.reducing_options();
    auto [tree, decay] = build_stopping_tree(W, Exponent(cfg.p), scfg);
    std::cerr << "stopping-time: " << tree.generations.size() << " generations at lambda "
              << tree.lambda << "\n";
    write_json_file(out_dir + "/stopping_tree.json", stopping_json(tree, decay, cfg));
    write_text_file(out_dir + "/decay.csv", decay_csv(decay));
    outputs.push_back(out_dir + "/stopping_tree.json");
    outputs.push_back(out_dir + "/decay.csv");
  } else if (command == "paraproduct-test") {
    SweepConfig scfg;
    scfg.resolutions = cfg.resolutions;
    scfg.plateau_threshold = cfg.plateau_threshold;
    scfg.growth_threshold = cfg.growth_threshold;
    scfg.corpus = cfg.corpus;
    scfg.seed = cfg.seed;
    scfg.sampling = cfg.sampling;
    scfg.backend = cfg.backend;
    scfg.reducing = cfg.reducing_options();
    scfg.estimator.trials = cfg.trials;
    scfg.estimator.seed = cfg.seed;
    scfg.symbol_source = cfg.symbol_source;
    scfg.threads = cfg.threads;
    SweepReport rep = boundedness_sweep(cfg.family, Exponent(cfg.p), cfg.operator_name, scfg);
    write_json_file(out_dir + "/sweep.json", sweep_json(rep, cfg));
    write_text_file(out_dir + "/sweep.csv", sweep_csv(rep));
    outputs.push_back(out_dir + "/sweep.json");
    outputs.push_back(out_dir + "/sweep.csv");
    result.summary["verdict"] = verdict_name(rep.verdict);
  } else if (command == "apply") {
    if (cfg.input_path.empty()) fail(errc::invalid_input, "apply needs an 'input' CSV path");
    std::ifstream is(cfg.input_path);
    if (!is) fail(errc::io_error, "cannot read input '" + cfg.input_path + "'");
    StepFunction input = read_step_function_csv(is);
    StepFunction output = detail::apply_named_operator(cfg, input);
    std::ostringstream os;
    write_csv(output, os);
    const std::string path = out_dir + "/applied.csv";
    write_text_file(path, os.str());
    outputs.push_back(path);
  } else {
    fail(errc::invalid_input, "unknown command '" + command + "'");
  }

  result.summary["outputs"] = outputs;
  result.summary["status"] = result.exit_code == 0 ? "ok" : "failed";
  return result;
}

}  // namespace dyadlab
