#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/estimators.hpp"
#include "dyadlab/reducing.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

using json = nlohmann::ordered_json;

/// Validated experiment configuration. Defaults: p=2, N=10, depth=8, auto
/// backend, estimator thresholds 1.1 / 1.5.
struct Config {
  WeightFamily family = WeightFamily::constant(Eigen::MatrixXd::Identity(1, 1));
  std::string family_name = "constant";
  double p = 2.0;
  int resolution = 10;
  std::vector<int> resolutions;  // sweep ladder; defaults to {N-4, N-2, N}
  int depth = 8;
  std::vector<double> q_grid = {2.0, 2.5, 3.0};
  double lambda = 0.0;  // 0: lambda_factor times the root baseline
  double lambda_factor = 4.0;
  int max_generations = 64;
  ReducingBackend backend = ReducingBackend::auto_select;
  SamplingMode sampling = SamplingMode::midpoint;
  std::uint64_t seed = 1;
  int directions = 0;  // 0: dimension default
  double mvee_tol = 1e-5;
  double plateau_threshold = 1.1;
  double growth_threshold = 1.5;
  double rh_growth_threshold = 1.5;
  std::string operator_name = "conjugated";
  std::string symbol_source = "bmo_corpus";
  int corpus = 10;
  int trials = 16;
  int selftest_trials = 100;
  int threads = 1;
  std::string input_path;  // `apply` input step function CSV

  ReducingOptions reducing_options() const {
    ReducingOptions opt;
    opt.directions = directions;
    opt.mvee_tol = mvee_tol;
    opt.seed = seed;
    return opt;
  }
};

namespace detail {

inline Eigen::MatrixXd parse_matrix(const json& j) {
  if (!j.is_array() || j.empty()) fail(errc::invalid_input, "matrix must be a 2D array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols)
      fail(errc::invalid_input, "matrix rows have unequal lengths");
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

inline std::vector<double> parse_doubles(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.get<double>());
  return out;
}

}  // namespace detail

inline Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(errc::io_error, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.contains("schema_version"))
    fail(errc::config_version, "config lacks a schema_version field");
  if (j["schema_version"].get<int>() != 1)
    fail(errc::config_version,
         "unsupported schema_version " + j["schema_version"].dump() + ", expected 1");

  Config cfg;
  const std::string family = j.value("family", "constant");
  cfg.family_name = family;
  const double x0 = j.value("x0", 0.5);
  if (family == "constant") {
    const Eigen::MatrixXd m = j.contains("matrix") ? detail::parse_matrix(j["matrix"])
                                                   : Eigen::MatrixXd::Identity(1, 1);
    cfg.family = WeightFamily::constant(m);
  } else if (family == "scalar_power") {
    cfg.family = WeightFamily::scalar_power(j.value("alpha", 0.5), x0,
                                            j.value("n", static_cast<Eigen::Index>(1)));
  } else if (family == "diagonal_powers") {
    if (!j.contains("alphas")) fail(errc::invalid_input, "diagonal_powers needs alphas");
    cfg.family = WeightFamily::diagonal_powers(detail::parse_doubles(j["alphas"]), x0);
  } else if (family == "rotated_powers") {
    if (!j.contains("alphas")) fail(errc::invalid_input, "rotated_powers needs alphas");
    cfg.family = WeightFamily::rotated_powers(detail::parse_doubles(j["alphas"]), x0,
                                              j.value("theta0", 0.0), j.value("omega", 0.0));
  } else {
    fail(errc::unknown_family, "unknown weight family '" + family + "'");
  }

  cfg.p = j.value("p", 2.0);
  if (!(cfg.p > 1.0)) fail(errc::invalid_exponent, "config requires p > 1");
  cfg.resolution = j.value("N", 10);
  if (cfg.resolution < 1 || cfg.resolution > 14)
    fail(errc::invalid_input, "N must lie in [1, 14] (guard against runaway grids)");
  if (j.contains("resolutions")) {
    for (const auto& r : j["resolutions"]) {
      const int n = r.get<int>();
      if (n < 1 || n > 14) fail(errc::invalid_input, "every sweep resolution must lie in [1, 14]");
      cfg.resolutions.push_back(n);
    }
  } else {
    cfg.resolutions = {std::max(2, cfg.resolution - 4), std::max(3, cfg.resolution - 2),
                       cfg.resolution};
  }
  cfg.depth = j.value("depth", std::min(8, cfg.resolution));
  if (cfg.depth < 0 || cfg.depth > cfg.resolution)
    fail(errc::invalid_input, "depth must lie in [0, N]");
  if (j.contains("q_grid")) cfg.q_grid = detail::parse_doubles(j["q_grid"]);
  cfg.lambda = j.value("lambda", 0.0);
  cfg.lambda_factor = j.value("lambda_factor", 4.0);
  cfg.max_generations = j.value("max_generations", 64);
  cfg.backend = parse_backend(j.value("backend", "auto"));
  const std::string sampling = j.value("sampling", "midpoint");
  if (sampling == "midpoint")
    cfg.sampling = SamplingMode::midpoint;
  else if (sampling == "exact_average")
    cfg.sampling = SamplingMode::exact_average;
  else
    fail(errc::invalid_input, "unknown sampling mode '" + sampling + "'");
  cfg.seed = j.value("seed", static_cast<std::uint64_t>(1));
  cfg.directions = j.value("directions", 0);
  cfg.mvee_tol = j.value("mvee_tol", 1e-5);
  if (j.contains("thresholds")) {
    cfg.plateau_threshold = j["thresholds"].value("plateau", 1.1);
    cfg.growth_threshold = j["thresholds"].value("growth", 1.5);
  }
  cfg.rh_growth_threshold = j.value("rh_growth_threshold", 1.5);
  cfg.operator_name = j.value("operator", "conjugated");
  cfg.symbol_source = j.value("symbol_source", "bmo_corpus");
  cfg.corpus = j.value("corpus", 10);
  cfg.trials = j.value("trials", 16);
  cfg.selftest_trials = j.value("selftest_trials", 100);
  cfg.threads = j.value("threads", 1);
  cfg.input_path = j.value("input", "");
  return cfg;
}

/// Normalized echo embedded in every report.
inline json config_echo(const Config& cfg) {
  json j;
  j["schema_version"] = 1;
  j["family"] = cfg.family_name;
  switch (cfg.family.kind) {
    case WeightFamily::Kind::constant: {
      json rows = json::array();
      for (Eigen::Index i = 0; i < cfg.family.constant_value.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < cfg.family.constant_value.cols(); ++k)
          row.push_back(cfg.family.constant_value(i, k));
        rows.push_back(row);
      }
      j["matrix"] = rows;
      break;
    }
    case WeightFamily::Kind::scalar_power:
      j["alpha"] = cfg.family.alphas[0];
      j["x0"] = cfg.family.x0;
      j["n"] = cfg.family.dim();
      break;
    case WeightFamily::Kind::diagonal_powers:
      j["alphas"] = cfg.family.alphas;
      j["x0"] = cfg.family.x0;
      break;
    case WeightFamily::Kind::rotated_powers:
      j["alphas"] = cfg.family.alphas;
      j["x0"] = cfg.family.x0;
      j["theta0"] = cfg.family.theta0;
      j["omega"] = cfg.family.omega;
      break;
  }
  j["p"] = cfg.p;
  j["N"] = cfg.resolution;
  j["resolutions"] = cfg.resolutions;
  j["depth"] = cfg.depth;
  j["q_grid"] = cfg.q_grid;
  j["lambda"] = cfg.lambda;
  j["lambda_factor"] = cfg.lambda_factor;
  j["max_generations"] = cfg.max_generations;
  j["backend"] = backend_name(cfg.backend);
  j["sampling"] = sampling_name(cfg.sampling);
  j["seed"] = cfg.seed;
  j["directions"] = cfg.directions;
  j["mvee_tol"] = cfg.mvee_tol;
  j["thresholds"] = {{"plateau", cfg.plateau_threshold}, {"growth", cfg.growth_threshold}};
  j["rh_growth_threshold"] = cfg.rh_growth_threshold;
  j["operator"] = cfg.operator_name;
  j["symbol_source"] = cfg.symbol_source;
  j["corpus"] = cfg.corpus;
  j["trials"] = cfg.trials;
  j["threads"] = cfg.threads;
  return j;
}

}  // namespace dyadlab
