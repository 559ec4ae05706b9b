#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/operators.hpp"
#include "dyadlab/parallel.hpp"
#include "dyadlab/rng.hpp"
#include "dyadlab/step_function.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

/// A linear operator on the cell space of n-vector step functions. The
/// adjoint (w.r.t. the L^2 pairing) is optional; estimation falls back to a
/// derivative-free ascent without it.
struct LinearOperator {
  std::string name;
  int resolution = 0;
  Eigen::Index dim = 1;
  std::function<StepFunction(const StepFunction&)> apply;
  std::function<StepFunction(const StepFunction&)> adjoint;
};

struct EstimatorConfig {
  int trials = 16;                   // multistart count for the ascent
  int max_iterations = 200;          // per start
  double tol = 1e-10;                // relative improvement stop
  std::uint64_t seed = 1;
  Eigen::Index dense_dim_cap = 768;  // p=2 dense SVD applies up to this dimension
  int power_iterations = 400;
  bool force_ascent = false;         // validation hook: always run the ascent
};

struct NormEstimate {
  enum class Method { dense_svd, power_iteration_p2, multistart_ascent };

  double value = 0.0;
  Method method = Method::multistart_ascent;
  int trials = 0;
  std::uint64_t seed = 0;
  StepFunction witness{0, 1, 1};
  double witness_ratio = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline const char* method_name(NormEstimate::Method m) {
  switch (m) {
    case NormEstimate::Method::dense_svd: return "dense_svd";
    case NormEstimate::Method::power_iteration_p2: return "power_iteration_p2";
    case NormEstimate::Method::multistart_ascent: return "multistart_ascent";
  }
  return "unknown";
}

namespace detail {

inline void check_linearity(const LinearOperator& op, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xabcdef));
  for (int probe = 0; probe < 2; ++probe) {
    StepFunction f = random_step_function(op.resolution, op.dim, 1, rng);
    StepFunction g = random_step_function(op.resolution, op.dim, 1, rng);
    StepFunction sum = op.apply(f + g);
    StepFunction parts = op.apply(f) + op.apply(g);
    const double scale = 1.0 + parts.max_abs();
    if (sup_diff(sum, parts) > 1e-8 * scale)
      fail(errc::nonlinear_operator, "operator '" + op.name + "' fails additivity probes");
  }
}

/// Duality map of the L^p cell norm: per cell |y|^{p-2} y.
inline StepFunction duality_map(const StepFunction& y, double p) {
  StepFunction out = y;
  for (Eigen::Index c = 0; c < y.cell_count(); ++c) {
    const double m = y.data().col(c).norm();
    out.data().col(c) *= (m > 0.0) ? std::pow(m, p - 2.0) : 0.0;
  }
  return out;
}

inline Eigen::VectorXd flatten(const StepFunction& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.data().data(), f.data().size());
}

inline StepFunction unflatten(const Eigen::VectorXd& v, int resolution, Eigen::Index dim) {
  StepFunction f(resolution, dim, 1);
  Eigen::Map<Eigen::VectorXd>(f.data().data(), f.data().size()) = v;
  return f;
}

}  // namespace detail

/// Best lower bound on the finite-section L^p -> L^p operator norm, with the
/// achieving witness. p = 2 uses an exact dense SVD on small sections or a
/// power iteration on the normal operator; general p runs a multistart
/// duality-map ascent (a nonlinear power method), falling back to random
/// direction search when no adjoint is available.
inline NormEstimate operator_norm_estimate(const LinearOperator& op, const Exponent& p,
                                           const EstimatorConfig& cfg = {}) {
  detail::check_linearity(op, cfg.seed);
  NormEstimate est;
  est.seed = cfg.seed;
  est.trials = cfg.trials;

  const Eigen::Index dim = (Eigen::Index{1} << op.resolution) * op.dim;

  if (!cfg.force_ascent && p.p == 2.0 && dim <= cfg.dense_dim_cap) {
    Eigen::MatrixXd dense(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e(j) = 1.0;
      dense.col(j) = detail::flatten(op.apply(detail::unflatten(e, op.resolution, op.dim)));
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinV);
    est.method = NormEstimate::Method::dense_svd;
    est.value = svd.singularValues()(0);
    est.witness = detail::unflatten(svd.matrixV().col(0), op.resolution, op.dim);
    est.converged = true;
    est.iterations = 1;
  } else if (!cfg.force_ascent && p.p == 2.0 && op.adjoint) {
    Rng rng(derive_seed(cfg.seed, 0x9e11));
    est.method = NormEstimate::Method::power_iteration_p2;
    double best = -1.0;
    for (int start = 0; start < 3; ++start) {
      StepFunction v = random_step_function(op.resolution, op.dim, 1, rng);
      double sigma = 0.0, prev = -1.0;
      StepFunction tv = op.apply(v);
      for (int it = 0; it < cfg.power_iterations; ++it) {
        StepFunction w = op.adjoint(tv);
        const double nw = lp_norm(w, 2.0);
        if (nw == 0.0) break;
        v = w * (1.0 / nw);
        tv = op.apply(v);
        sigma = lp_norm(tv, 2.0) / lp_norm(v, 2.0);
        ++est.iterations;
        if (prev >= 0.0 && std::abs(sigma - prev) <= cfg.tol * std::max(1.0, sigma)) {
          est.converged = true;
          break;
        }
        prev = sigma;
      }
      if (sigma > best) {
        best = sigma;
        est.witness = v;
      }
    }
    est.value = best;
  } else {
    Rng rng(derive_seed(cfg.seed, 0xa5ce));
    est.method = NormEstimate::Method::multistart_ascent;
    double best = -1.0;
    for (int start = 0; start < cfg.trials; ++start) {
      StepFunction f = random_step_function(op.resolution, op.dim, 1, rng);
      double nf = lp_norm(f, p.p);
      if (nf == 0.0) continue;
      f *= 1.0 / nf;
      double ratio = 0.0, prev = -1.0;
      for (int it = 0; it < cfg.max_iterations; ++it) {
        StepFunction y = op.apply(f);
        ratio = lp_norm(y, p.p);
        if (ratio > best) {
          best = ratio;
          est.witness = f;
        }
        if (prev >= 0.0 && ratio <= prev * (1.0 + cfg.tol)) {
          est.converged = true;
          break;
        }
        prev = ratio;
        ++est.iterations;

        StepFunction next{0, 1, 1};
        if (op.adjoint) {
          StepFunction z = op.adjoint(detail::duality_map(y, p.p));
          next = detail::duality_map(z, p.conj);
        } else {
          // derivative-free fallback: best of a few random perturbations
          StepFunction cand = f;
          double cand_ratio = ratio;
          for (int probe = 0; probe < 16; ++probe) {
            StepFunction dir = random_step_function(op.resolution, op.dim, 1, rng);
            for (double stepsize : {0.5, 0.125}) {
              StepFunction trial = f + dir * (stepsize / std::max(1.0, dir.max_abs()));
              const double nt = lp_norm(trial, p.p);
              if (nt == 0.0) continue;
              trial *= 1.0 / nt;
              const double r = lp_norm(op.apply(trial), p.p);
              if (r > cand_ratio) {
                cand_ratio = r;
                cand = trial;
              }
            }
          }
          next = cand;
        }
        const double nn = lp_norm(next, p.p);
        if (nn == 0.0) break;
        f = next * (1.0 / nn);
      }
    }
    est.value = std::max(best, 0.0);
  }

  if (est.witness.cell_count() > 0 && est.witness.max_abs() > 0.0) {
    const double nw = lp_norm(est.witness, p.p);
    est.witness_ratio = nw > 0.0 ? lp_norm(op.apply(est.witness), p.p) / nw : 0.0;
    est.value = std::max(est.value, est.witness_ratio);
  }
  return est;
}

/// Random BMO symbol: b_I = |I|^{1/2} g_I, rescaled to unit Carleson-sum
/// seminorm.
inline SymbolCoefficients make_bmo_symbol(int resolution, Rng& rng) {
  SymbolCoefficients b = SymbolCoefficients::zero(resolution, 1, 1);
  for (int lvl = 0; lvl < resolution; ++lvl) {
    auto& row = b.levels[static_cast<std::size_t>(lvl)];
    const double scale = std::pow(2.0, -0.5 * lvl);
    for (Eigen::Index k = 0; k < row.cols(); ++k) row(0, k) = scale * rng.normal();
  }
  const double nrm = bmo_norm(b, resolution - 1);
  if (nrm > 0.0)
    for (auto& lvl : b.levels) lvl /= nrm;
  return b;
}

/// Matrix analogue normalized by the matrix Carleson seminorm.
inline SymbolCoefficients make_carleson_symbol(int resolution, Eigen::Index n, Rng& rng) {
  SymbolCoefficients B = SymbolCoefficients::zero(resolution, n, n);
  for (int lvl = 0; lvl < resolution; ++lvl) {
    const double scale = std::pow(2.0, -0.5 * lvl);
    for (std::int64_t k = 0; k < (std::int64_t{1} << lvl); ++k)
      B.coeff(DyadicInterval(lvl, k)) = scale * rng.normal_matrix(n, n);
  }
  const double nrm = matrix_carleson_norm(B, resolution - 1);
  if (nrm > 0.0)
    for (auto& lvl : B.levels) lvl /= nrm;
  return B;
}

/// Named operator factories shared by the sweeps and the CLI. Scalar-symbol
/// operators take `b`; `matrix_conjugated` takes `B`; the multiplier-based
/// ones ignore both.
inline LinearOperator make_sweep_operator(const std::string& name, const MatrixWeight& W,
                                          const Exponent& p, const SymbolCoefficients* b,
                                          const SymbolCoefficients* B,
                                          ReducingBackend backend = ReducingBackend::auto_select,
                                          const ReducingOptions& opt = {},
                                          std::shared_ptr<const MultiplierSpec> prebuilt = {}) {
  LinearOperator op;
  op.name = name;
  op.resolution = W.resolution();
  op.dim = W.dim();
  const auto wpow = W.power(p.primal_power());
  const auto winv = W.power(p.dual_power());

  auto need_scalar_symbol = [&]() {
    if (b == nullptr) fail(errc::invalid_input, "operator '" + name + "' needs a scalar symbol");
    return *b;
  };

  if (name == "conjugated") {
    SymbolCoefficients sym = need_scalar_symbol();
    op.apply = [wpow, winv, sym](const StepFunction& f) {
      return multiply_pointwise(*wpow, paraproduct(sym, multiply_pointwise(*winv, f)));
    };
    op.adjoint = [wpow, winv, sym](const StepFunction& g) {
      return multiply_pointwise(*winv,
                                detail::paraproduct_adjoint(sym, multiply_pointwise(*wpow, g)));
    };
  } else if (name == "conjugated_M") {
    SymbolCoefficients sym = need_scalar_symbol();
    std::shared_ptr<const MultiplierSpec> mult =
        prebuilt ? prebuilt
                 : std::make_shared<const MultiplierSpec>(build_multiplier(
                       W, p, MultiplierSpec::Provenance::reducing, backend, false, opt));
    op.apply = [winv, sym, mult](const StepFunction& f) {
      return haar_multiplier(*mult, paraproduct(sym, multiply_pointwise(*winv, f)));
    };
    op.adjoint = [winv, sym, mult](const StepFunction& g) {
      return multiply_pointwise(
          *winv, detail::paraproduct_adjoint(sym, haar_multiplier(*mult, g, /*transpose=*/true)));
    };
  } else if (name == "inverse_multiplier") {
    std::shared_ptr<const MultiplierSpec> mult =
        prebuilt ? prebuilt
                 : std::make_shared<const MultiplierSpec>(build_multiplier(
                       W, p, MultiplierSpec::Provenance::inverse_reducing, backend, false, opt));
    op.apply = [wpow, mult](const StepFunction& f) {
      return multiply_pointwise(*wpow, haar_multiplier(*mult, f));
    };
    op.adjoint = [wpow, mult](const StepFunction& g) {
      return haar_multiplier(*mult, multiply_pointwise(*wpow, g), /*transpose=*/true);
    };
  } else if (name == "naive_inverse") {
    std::shared_ptr<const MultiplierSpec> mult =
        prebuilt ? prebuilt
                 : std::make_shared<const MultiplierSpec>(build_multiplier(
                       W, p, MultiplierSpec::Provenance::naive_average, backend,
                       /*invert=*/true, opt));
    op.apply = [wpow, mult](const StepFunction& f) {
      return multiply_pointwise(*wpow, haar_multiplier(*mult, f));
    };
    op.adjoint = [wpow, mult](const StepFunction& g) {
      return haar_multiplier(*mult, multiply_pointwise(*wpow, g), /*transpose=*/true);
    };
  } else if (name == "matrix_conjugated") {
    if (B == nullptr) fail(errc::invalid_input, "matrix_conjugated needs a matrix symbol");
    SymbolCoefficients sym = *B;
    op.apply = [wpow, winv, sym](const StepFunction& f) {
      return multiply_pointwise(*wpow, matrix_paraproduct(sym, multiply_pointwise(*winv, f)));
    };
    op.adjoint = [wpow, winv, sym](const StepFunction& g) {
      return multiply_pointwise(
          *winv, detail::matrix_paraproduct_adjoint(sym, multiply_pointwise(*wpow, g)));
    };
  } else {
    fail(errc::invalid_input, "unknown sweep operator '" + name + "'");
  }
  return op;
}

inline bool is_open_question_probe(const std::string& operator_name) {
  return operator_name == "naive_inverse" || operator_name == "matrix_conjugated";
}

struct SweepConfig {
  std::vector<int> resolutions = {6, 8, 10};
  int threads = 1;
  std::string symbol_source = "bmo_corpus";  // or "root": b = the root Haar coefficient
  double plateau_threshold = 1.1;
  double growth_threshold = 1.5;
  int corpus = 10;  // symbols per resolution for symbol-driven operators
  std::uint64_t seed = 1;
  SamplingMode sampling = SamplingMode::midpoint;
  ReducingBackend backend = ReducingBackend::auto_select;
  ReducingOptions reducing;
  EstimatorConfig estimator;
};

struct SweepPoint {
  int resolution = 0;
  double estimate = 0.0;               // max over the symbol corpus
  std::vector<double> per_symbol;      // empty for symbol-free operators
  std::vector<std::uint64_t> witness_seeds;
  std::string method;
};

struct SweepReport {
  enum class Verdict { bounded_plateau, growing, inconclusive };

  std::string operator_name;
  double p = 2.0;
  std::vector<SweepPoint> points;
  double growth_ratio = 0.0;
  int ratio_from = 0, ratio_to = 0;  // the resolutions compared
  Verdict verdict = Verdict::inconclusive;
  bool open_question_probe = false;
  double plateau_threshold = 1.1, growth_threshold = 1.5;
  int corpus = 0;
  std::uint64_t seed = 0;
};

inline const char* verdict_name(SweepReport::Verdict v) {
  switch (v) {
    case SweepReport::Verdict::bounded_plateau: return "bounded-plateau";
    case SweepReport::Verdict::growing: return "growing";
    case SweepReport::Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

/// Cross-resolution boundedness experiment: estimate the finite-section norm
/// of the named operator at each resolution (sup over a fresh normalized
/// symbol corpus where the operator takes one) and classify the growth ratio
/// between the last two resolutions.
inline SweepReport boundedness_sweep(const WeightFamily& family, const Exponent& p,
                                     const std::string& operator_name, const SweepConfig& cfg) {
  if (cfg.resolutions.size() < 2)
    fail(errc::invalid_input, "boundedness_sweep needs at least two resolutions");
  std::vector<int> res = cfg.resolutions;
  std::sort(res.begin(), res.end());

  SweepReport report;
  report.operator_name = operator_name;
  report.p = p.p;
  report.plateau_threshold = cfg.plateau_threshold;
  report.growth_threshold = cfg.growth_threshold;
  report.corpus = cfg.corpus;
  report.seed = cfg.seed;
  report.open_question_probe = is_open_question_probe(operator_name);

  const bool scalar_symbols = operator_name == "conjugated" || operator_name == "conjugated_M";
  const bool matrix_symbols = operator_name == "matrix_conjugated";

  const bool needs_multiplier = operator_name == "conjugated_M" ||
                                operator_name == "inverse_multiplier" ||
                                operator_name == "naive_inverse";
  for (int n : res) {
    MatrixWeight W = make_weight(family, n, cfg.sampling);
    SweepPoint point;
    point.resolution = n;
    std::shared_ptr<const MultiplierSpec> shared_mult;
    if (needs_multiplier) {
      const auto variant = operator_name == "conjugated_M"
                               ? MultiplierSpec::Provenance::reducing
                               : (operator_name == "inverse_multiplier"
                                      ? MultiplierSpec::Provenance::inverse_reducing
                                      : MultiplierSpec::Provenance::naive_average);
      shared_mult = std::make_shared<const MultiplierSpec>(
          build_multiplier(W, p, variant, cfg.backend, operator_name == "naive_inverse",
                           cfg.reducing));
    }
    const int symbols = (scalar_symbols && cfg.symbol_source != "root") || matrix_symbols
                            ? cfg.corpus
                            : 1;
    std::vector<double> values(static_cast<std::size_t>(symbols), 0.0);
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(symbols), 0);
    std::string method;
    parallel_for(static_cast<std::size_t>(symbols), cfg.threads, [&](std::size_t s) {
      Rng srng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(s)));
      SymbolCoefficients scalar_sym = SymbolCoefficients::zero(1, 1, 1);
      SymbolCoefficients matrix_sym = SymbolCoefficients::zero(1, 1, 1);
      const SymbolCoefficients* bptr = nullptr;
      const SymbolCoefficients* Bptr = nullptr;
      if (scalar_symbols) {
        if (cfg.symbol_source == "root") {
          scalar_sym = SymbolCoefficients::zero(n, 1, 1);
          scalar_sym.coeff(DyadicInterval::root())(0, 0) = 1.0;
        } else {
          scalar_sym = make_bmo_symbol(n, srng);
        }
        bptr = &scalar_sym;
      } else if (matrix_symbols) {
        matrix_sym = make_carleson_symbol(n, W.dim(), srng);
        Bptr = &matrix_sym;
      }
      LinearOperator op = make_sweep_operator(operator_name, W, p, bptr, Bptr, cfg.backend,
                                              cfg.reducing, shared_mult);
      EstimatorConfig ecfg = cfg.estimator;
      ecfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(n) * 131 +
                                            static_cast<std::uint64_t>(s));
      NormEstimate est = operator_norm_estimate(op, p, ecfg);
      values[s] = est.value;
      seeds[s] = ecfg.seed;
      if (s == 0) method = method_name(est.method);
    });
    point.per_symbol.assign(values.begin(), values.end());
    point.witness_seeds.assign(seeds.begin(), seeds.end());
    point.method = method;
    for (double v : values) point.estimate = std::max(point.estimate, v);
    if (!scalar_symbols && !matrix_symbols) point.per_symbol.clear();
    report.points.push_back(std::move(point));
  }

  // ratio between the top resolution and the entry two dyadic levels below it
  // (or the previous entry when that exact resolution was not requested)
  const auto& last = report.points.back();
  const SweepPoint* base = &report.points[report.points.size() - 2];
  for (const auto& pt : report.points)
    if (pt.resolution == last.resolution - 2) base = &pt;
  report.ratio_from = base->resolution;
  report.ratio_to = last.resolution;
  report.growth_ratio = base->estimate > 0.0 ? last.estimate / base->estimate : 0.0;
  if (report.growth_ratio <= cfg.plateau_threshold)
    report.verdict = SweepReport::Verdict::bounded_plateau;
  else if (report.growth_ratio >= cfg.growth_threshold)
    report.verdict = SweepReport::Verdict::growing;
  else
    report.verdict = SweepReport::Verdict::inconclusive;
  return report;
}

}  // namespace dyadlab
