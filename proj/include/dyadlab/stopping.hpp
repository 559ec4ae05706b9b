#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/haar.hpp"
#include "dyadlab/interval.hpp"
#include "dyadlab/linalg.hpp"
#include "dyadlab/operators.hpp"
#include "dyadlab/reducing.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

struct StoppingConfig {
  double lambda = 0.0;        // <= 0 means lambda_factor times the root baseline
  double lambda_factor = 4.0;
  int max_generations = 64;
  ReducingBackend backend = ReducingBackend::auto_select;
  ReducingOptions reducing;
};

namespace detail {

/// Per-node integrand machinery: averages over subintervals J of I of
///   a(x) = ||W^{1/p}(x) V_I'||^p   and   b(x) = ||V_I W^{-1/p}(x)||^{p'},
/// with V_I, V_I' held fixed while J varies.
struct StoppingAverages {
  std::int64_t begin = 0;
  std::vector<double> prefix_a, prefix_b;  // prefix sums over the cells of I
  int resolution = 0;

  StoppingAverages(const MatrixWeight& W, const Exponent& p, const DyadicInterval& I,
                   const ReducingPair& pair) {
    resolution = W.resolution();
    begin = I.cell_begin(resolution);
    const auto count = I.cell_count(resolution);
    const auto wpow = W.power(p.primal_power());
    const auto winv = W.power(p.dual_power());
    prefix_a.assign(static_cast<std::size_t>(count) + 1, 0.0);
    prefix_b.assign(static_cast<std::size_t>(count) + 1, 0.0);
    for (std::int64_t c = 0; c < count; ++c) {
      const double na = spectral_norm(wpow->cell(begin + c) * pair.Vprime);
      const double nb = spectral_norm(pair.V * winv->cell(begin + c));
      prefix_a[static_cast<std::size_t>(c) + 1] =
          prefix_a[static_cast<std::size_t>(c)] + std::pow(na, p.p);
      prefix_b[static_cast<std::size_t>(c) + 1] =
          prefix_b[static_cast<std::size_t>(c)] + std::pow(nb, p.conj);
    }
  }

  double average_a(const DyadicInterval& J) const {
    const auto lo = J.cell_begin(resolution) - begin;
    const auto hi = lo + J.cell_count(resolution);
    return (prefix_a[static_cast<std::size_t>(hi)] - prefix_a[static_cast<std::size_t>(lo)]) /
           static_cast<double>(hi - lo);
  }
  double average_b(const DyadicInterval& J) const {
    const auto lo = J.cell_begin(resolution) - begin;
    const auto hi = lo + J.cell_count(resolution);
    return (prefix_b[static_cast<std::size_t>(hi)] - prefix_b[static_cast<std::size_t>(lo)]) /
           static_cast<double>(hi - lo);
  }
  bool exceeds(const DyadicInterval& J, double lambda) const {
    return average_a(J) > lambda || average_b(J) > lambda;
  }
};

inline void collect_children(const StoppingAverages& avg, const DyadicInterval& J, double lambda,
                             int max_level, std::vector<DyadicInterval>& out) {
  if (J.level >= max_level) return;
  for (const DyadicInterval& K : {J.left_half(), J.right_half()}) {
    if (avg.exceeds(K, lambda))
      out.push_back(K);
    else
      collect_children(avg, K, lambda, max_level, out);
  }
}

}  // namespace detail

/// Root averages of the two stopping integrands over I itself; the default
/// lambda policy scales their maximum.
inline std::pair<double, double> stopping_baselines(const MatrixWeight& W, const Exponent& p,
                                                    const DyadicInterval& I,
                                                    ReducingBackend backend,
                                                    const ReducingOptions& opt = {}) {
  const ReducingPair pair = reducing_operator(W, p, I, backend, opt);
  detail::StoppingAverages avg(W, p, I, pair);
  return {avg.average_a(I), avg.average_b(I)};
}

/// Maximal dyadic subintervals of I (strictly below I, levels <= N-1) on
/// which either weighted average exceeds lambda. Throws lambda-too-small if I
/// itself already exceeds lambda, which breaks the construction's premise.
inline std::vector<DyadicInterval> stopping_children(const MatrixWeight& W, const Exponent& p,
                                                     const DyadicInterval& I, double lambda,
                                                     ReducingBackend backend =
                                                         ReducingBackend::auto_select,
                                                     const ReducingOptions& opt = {}) {
  if (I.level >= W.resolution())
    fail(errc::resolution_too_coarse, "stopping_children needs level(I) < resolution");
  const ReducingPair pair = reducing_operator(W, p, I, backend, opt);
  detail::StoppingAverages avg(W, p, I, pair);
  if (avg.exceeds(I, lambda))
    fail(errc::lambda_too_small,
         "interval " + I.to_string() + " exceeds lambda = " + std::to_string(lambda) +
             " (averages " + std::to_string(avg.average_a(I)) + ", " +
             std::to_string(avg.average_b(I)) + ")");
  std::vector<DyadicInterval> out;
  detail::collect_children(avg, I, lambda, W.resolution() - 1, out);
  return out;
}

struct StoppingNode {
  DyadicInterval interval;
  std::vector<DyadicInterval> children;  // the stopping set J(I)
  std::vector<DyadicInterval> fset;      // F(I): subintervals above the children
};

struct StoppingGeneration {
  std::vector<StoppingNode> nodes;  // intervals form J^j (generation 0 is the root)
  double measure = 0.0;             // |U J^j|
};

/// Stopping-time decomposition of the dyadic tree under a weight. Generation
/// j carries the interval set J^j and, per node I, the projection set F(I);
/// the union of the F-sets over one generation is the coefficient set F^j
/// used by the projections Delta_j (0-based: Delta_0 lives on F(root)).
struct StoppingTree {
  int resolution = 0;
  double p = 2.0;
  double lambda = 0.0;
  double baseline_a = 0.0, baseline_b = 0.0;  // root averages
  std::vector<StoppingGeneration> generations;
  bool truncated_by_max_generations = false;

  std::size_t generation_count() const { return generations.size(); }

  /// All coefficient intervals of generation j (the set F^j).
  std::vector<DyadicInterval> fset(std::size_t j) const {
    std::vector<DyadicInterval> out;
    if (j >= generations.size()) return out;
    for (const auto& node : generations[j].nodes)
      out.insert(out.end(), node.fset.begin(), node.fset.end());
    return out;
  }
};

struct DecayReport {
  std::vector<double> mu;   // measures of J^1, J^2, ...
  double rate = 0.0;        // max over j of mu_{j+1}/mu_j (mu_0 = 1)
  bool halving = false;     // mu_1 <= 1/2
  double lambda = 0.0;
  bool truncated = false;
};

inline std::pair<StoppingTree, DecayReport> build_stopping_tree(const MatrixWeight& W,
                                                                const Exponent& p,
                                                                const StoppingConfig& cfg) {
  StoppingTree tree;
  tree.resolution = W.resolution();
  tree.p = p.p;

  const auto [base_a, base_b] =
      stopping_baselines(W, p, DyadicInterval::root(), cfg.backend, cfg.reducing);
  tree.baseline_a = base_a;
  tree.baseline_b = base_b;
  tree.lambda = cfg.lambda > 0.0 ? cfg.lambda : cfg.lambda_factor * std::max(base_a, base_b);

  auto make_node = [&](const DyadicInterval& I) {
    StoppingNode node;
    node.interval = I;
    if (I.level < W.resolution() - 1)
      node.children = stopping_children(W, p, I, tree.lambda, cfg.backend, cfg.reducing);
    else if (I.level == W.resolution() - 1) {
      // leaf-level node: check its own average, no descent left
      const ReducingPair pair = reducing_operator(W, p, I, cfg.backend, cfg.reducing);
      detail::StoppingAverages avg(W, p, I, pair);
      if (avg.exceeds(I, tree.lambda))
        fail(errc::lambda_too_small, "interval " + I.to_string() + " exceeds lambda = " +
                                         std::to_string(tree.lambda));
    }
    // F(I): walk down, stopping at (and excluding) the children of I
    std::vector<DyadicInterval> stack = {I};
    while (!stack.empty()) {
      DyadicInterval J = stack.back();
      stack.pop_back();
      node.fset.push_back(J);
      if (J.level >= W.resolution() - 1) continue;
      for (const DyadicInterval& K : {J.left_half(), J.right_half()})
        if (std::find(node.children.begin(), node.children.end(), K) == node.children.end())
          stack.push_back(K);
    }
    std::sort(node.fset.begin(), node.fset.end());
    return node;
  };

  StoppingGeneration gen0;
  gen0.nodes.push_back(make_node(DyadicInterval::root()));
  gen0.measure = 1.0;
  tree.generations.push_back(std::move(gen0));

  while (true) {
    const auto& prev = tree.generations.back();
    std::vector<DyadicInterval> next_intervals;
    for (const auto& node : prev.nodes)
      next_intervals.insert(next_intervals.end(), node.children.begin(), node.children.end());
    if (next_intervals.empty()) break;
    if (static_cast<int>(tree.generations.size()) > cfg.max_generations) {
      tree.truncated_by_max_generations = true;
      break;
    }
    StoppingGeneration gen;
    for (const auto& I : next_intervals) {
      gen.nodes.push_back(make_node(I));
      gen.measure += I.length();
    }
    tree.generations.push_back(std::move(gen));
  }

  DecayReport decay;
  decay.lambda = tree.lambda;
  decay.truncated = tree.truncated_by_max_generations;
  for (std::size_t j = 1; j < tree.generations.size(); ++j)
    decay.mu.push_back(tree.generations[j].measure);
  double rate = 0.0;
  for (std::size_t j = 0; j < tree.generations.size(); ++j) {
    const double here = tree.generations[j].measure;
    if (here <= 0.0) continue;
    double next = 0.0;
    if (j + 1 < tree.generations.size())
      next = tree.generations[j + 1].measure;
    else if (tree.truncated_by_max_generations)
      continue;  // unknown continuation
    rate = std::max(rate, next / here);
  }
  decay.rate = rate;
  decay.halving = decay.mu.empty() || decay.mu.front() <= 0.5;
  return {std::move(tree), decay};
}

/// Haar projection onto the coefficient set F^j. Generations beyond the tree
/// are structurally empty and give the zero function.
inline StepFunction delta_projection(const StepFunction& f, const StoppingTree& tree,
                                     std::size_t j) {
  if (f.resolution() != tree.resolution)
    fail(errc::shape_mismatch, "delta_projection resolution mismatch");
  auto coeffs = haar_transform(f);
  HaarCoefficients masked = HaarCoefficients::zero(f.resolution(), f.rows(), f.cols());
  if (j < tree.generations.size())
    for (const auto& node : tree.generations[j].nodes)
      for (const auto& J : node.fset) masked.coeff(J) = coeffs.coeff(J);
  return haar_synthesize(masked);
}

/// The decomposed operator and its pieces. All of them multiply Haar
/// coefficients by V_I^{-1} and then apply W^{1/p} pointwise; T_j restricts to
/// the coefficient set F^j, M_I to F(I) without the weight factor.
inline StepFunction operator_T(const MatrixWeight& W, const Exponent& p, const StepFunction& f,
                               const MultiplierSpec& inverse_reducing) {
  return multiply_pointwise(*W.power(p.primal_power()),
                            haar_multiplier(inverse_reducing, f));
}

inline StepFunction operator_T(const MatrixWeight& W, const Exponent& p, const StepFunction& f,
                               ReducingBackend backend = ReducingBackend::auto_select,
                               const ReducingOptions& opt = {}) {
  return operator_T(W, p, f,
                    build_multiplier(W, p, MultiplierSpec::Provenance::inverse_reducing, backend,
                                     false, opt));
}

namespace detail {

inline StepFunction masked_inverse_multiplier(const StepFunction& f,
                                              const MultiplierSpec& inverse_reducing,
                                              const std::vector<DyadicInterval>& mask) {
  auto coeffs = haar_transform(f);
  HaarCoefficients out = HaarCoefficients::zero(f.resolution(), f.rows(), f.cols());
  for (const auto& J : mask)
    out.coeff(J) = inverse_reducing.at(J) * Eigen::VectorXd(coeffs.coeff(J));
  return haar_synthesize(out);
}

}  // namespace detail

/// M_I f = sum_{J in F(I)} V_J^{-1} f_J h_J for a stopping node I.
inline StepFunction operator_MI(const MatrixWeight& W, const Exponent& p, const StepFunction& f,
                                const DyadicInterval& I, const StoppingTree& tree,
                                const MultiplierSpec& inverse_reducing) {
  (void)W;
  (void)p;
  for (const auto& gen : tree.generations)
    for (const auto& node : gen.nodes)
      if (node.interval == I)
        return detail::masked_inverse_multiplier(f, inverse_reducing, node.fset);
  fail(errc::invalid_input, "interval " + I.to_string() + " is not a stopping node");
}

/// T_j f = sum_{I in generation j} W^{1/p} M_I f (0-based, T = sum_j T_j).
inline StepFunction operator_Tj(const MatrixWeight& W, const Exponent& p, const StepFunction& f,
                                const StoppingTree& tree, std::size_t j,
                                const MultiplierSpec& inverse_reducing) {
  if (f.resolution() != tree.resolution)
    fail(errc::shape_mismatch, "operator_Tj resolution mismatch");
  if (j >= tree.generations.size()) return StepFunction(f.resolution(), f.rows(), f.cols());
  return multiply_pointwise(
      *W.power(p.primal_power()),
      detail::masked_inverse_multiplier(f, inverse_reducing, tree.fset(j)));
}

/// Cell-sum approximation of int |T_j f|^{p/2} |T_k f|^{p/2} dx.
inline double cotlar_cross_term(const MatrixWeight& W, const Exponent& p, const StepFunction& f,
                                const StoppingTree& tree, std::size_t j, std::size_t k,
                                const MultiplierSpec& inverse_reducing) {
  StepFunction tj = operator_Tj(W, p, f, tree, j, inverse_reducing);
  StepFunction tk = j == k ? tj : operator_Tj(W, p, f, tree, k, inverse_reducing);
  const double half_p = 0.5 * p.p;
  const double cell_measure = std::ldexp(1.0, -f.resolution());
  double acc = 0.0;
  for (Eigen::Index c = 0; c < f.cell_count(); ++c)
    acc += std::pow(tj.data().col(c).norm(), half_p) * std::pow(tk.data().col(c).norm(), half_p);
  return acc * cell_measure;
}

}  // namespace dyadlab
