#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "dyadlab/rng.hpp"
#include "dyadlab/stopping.hpp"
#include "helpers.hpp"

using namespace dyadlab;

namespace {

// Brute-force oracle for the stopping set: evaluate both averages directly on
// every strict subinterval and keep the inclusion-maximal exceeders.
std::vector<DyadicInterval> stopping_oracle(const MatrixWeight& W, const Exponent& p,
                                            const DyadicInterval& I, double lambda,
                                            ReducingBackend backend) {
  const int n = W.resolution();
  const ReducingPair pair = reducing_operator(W, p, I, backend);
  const auto wpow = W.power(1.0 / p.p);
  const auto winv = W.power(-1.0 / p.p);
  auto exceeds = [&](const DyadicInterval& J) {
    double a = 0.0, b = 0.0;
    for (std::int64_t c = J.cell_begin(n); c < J.cell_begin(n) + J.cell_count(n); ++c) {
      a += std::pow(spectral_norm(wpow->cell(c) * pair.Vprime), p.p);
      b += std::pow(spectral_norm(pair.V * winv->cell(c)), p.conj);
    }
    const double cells = static_cast<double>(J.cell_count(n));
    return a / cells > lambda || b / cells > lambda;
  };
  std::vector<DyadicInterval> exceeders;
  for (int lvl = I.level + 1; lvl <= n - 1; ++lvl)
    for (std::int64_t k = 0; k < (std::int64_t{1} << lvl); ++k) {
      DyadicInterval J(lvl, k);
      if (I.contains(J) && exceeds(J)) exceeders.push_back(J);
    }
  std::vector<DyadicInterval> maximal;
  for (const auto& J : exceeders) {
    bool dominated = false;
    for (const auto& K : exceeders)
      if (!(K == J) && K.contains(J)) {
        dominated = true;
        break;
      }
    if (!dominated) maximal.push_back(J);
  }
  std::sort(maximal.begin(), maximal.end());
  return maximal;
}

MatrixWeight a2_weight(int resolution) {
  return make_weight(WeightFamily::scalar_power(0.5, 0.5), resolution);
}

}  // namespace

TEST_CASE("stopping children of the identity weight", "[stopping]") {
  MatrixWeight id = make_weight(WeightFamily::constant(Eigen::Matrix2d::Identity()), 6);
  Exponent p2(2.0);
  CHECK(stopping_children(id, p2, DyadicInterval::root(), 4.0).empty());
  CHECK(stopping_children(id, p2, DyadicInterval::root(), 1.5).empty());
  CHECK_THROWS_AS(stopping_children(id, p2, DyadicInterval::root(), 0.5), Error);
}

TEST_CASE("stopping children match the brute-force maximality oracle", "[stopping]") {
  Exponent p2(2.0);
  const int n = 8;
  SECTION("singular scalar weight, several lambdas") {
    MatrixWeight w = make_weight(WeightFamily::scalar_power(1.5, 0.5), n);
    const auto [ba, bb] = stopping_baselines(w, p2, DyadicInterval::root(),
                                             ReducingBackend::auto_select);
    for (double factor : {1.5, 3.0, 10.0}) {
      const double lambda = factor * std::max(ba, bb);
      auto got = stopping_children(w, p2, DyadicInterval::root(), lambda);
      std::sort(got.begin(), got.end());
      auto want = stopping_oracle(w, p2, DyadicInterval::root(), lambda,
                                  ReducingBackend::auto_select);
      REQUIRE(got == want);
    }
  }
  SECTION("randomized weights, lambdas, and root intervals") {
    Rng rng(7777);
    int checked = 0;
    for (int trial = 0; trial < 12; ++trial) {
      const double a0 = rng.uniform() * 1.2 - 0.3;
      const double a1 = rng.uniform() * 1.2 - 0.6;
      MatrixWeight w = make_weight(
          WeightFamily::rotated_powers({a0, a1}, 0.25 + 0.5 * rng.uniform(),
                                       rng.uniform(), 4.0 * rng.uniform()),
          n);
      DyadicInterval I = trial % 3 == 0 ? DyadicInterval(1, rng.raw() % 2)
                                        : DyadicInterval::root();
      const auto [ba, bb] = stopping_baselines(w, p2, I, ReducingBackend::exact_p2);
      const double lambda = (1.5 + 6.0 * rng.uniform()) * std::max(ba, bb);
      auto got = stopping_children(w, p2, I, lambda, ReducingBackend::exact_p2);
      std::sort(got.begin(), got.end());
      auto want = stopping_oracle(w, p2, I, lambda, ReducingBackend::exact_p2);
      REQUIRE(got == want);
      checked += static_cast<int>(got.size());
    }
    CHECK(checked > 0);  // the instances must exercise nonempty stopping sets
  }
}

TEST_CASE("identity tree is trivial", "[stopping]") {
  MatrixWeight id = make_weight(WeightFamily::constant(Eigen::Matrix2d::Identity()), 6);
  StoppingConfig cfg;
  cfg.lambda = 4.0;
  auto [tree, decay] = build_stopping_tree(id, Exponent(2.0), cfg);
  REQUIRE(tree.generations.size() == 1);
  CHECK(tree.generations[0].nodes[0].fset.size() == 63);  // all intervals to level 5
  CHECK(decay.rate == 0.0);
  CHECK(decay.halving);
  CHECK(decay.mu.empty());
}

TEST_CASE("stopping tree structural invariants", "[stopping]") {
  const int n = 10;
  MatrixWeight w = a2_weight(n);
  StoppingConfig cfg;  // default 4x baseline
  auto [tree, decay] = build_stopping_tree(w, Exponent(2.0), cfg);
  REQUIRE(tree.generations.size() >= 2);

  SECTION("intervals within a generation are pairwise disjoint") {
    for (const auto& gen : tree.generations)
      for (std::size_t i = 0; i < gen.nodes.size(); ++i)
        for (std::size_t j = i + 1; j < gen.nodes.size(); ++j) {
          const auto& A = gen.nodes[i].interval;
          const auto& B = gen.nodes[j].interval;
          CHECK_FALSE(A.contains(B));
          CHECK_FALSE(B.contains(A));
        }
  }
  SECTION("every generation-j interval is strictly inside a generation-(j-1) one") {
    for (std::size_t j = 1; j < tree.generations.size(); ++j)
      for (const auto& node : tree.generations[j].nodes) {
        bool nested = false;
        for (const auto& up : tree.generations[j - 1].nodes)
          if (up.interval.contains(node.interval) && !(up.interval == node.interval))
            nested = true;
        CHECK(nested);
      }
  }
  SECTION("F-sets partition all coefficient intervals exactly once") {
    std::multiset<DyadicInterval> seen;
    for (std::size_t j = 0; j < tree.generations.size(); ++j)
      for (const auto& J : tree.fset(j)) seen.insert(J);
    auto all = intervals_to_level(n - 1);
    REQUIRE(seen.size() == all.size());
    for (const auto& J : all) CHECK(seen.count(J) == 1);
  }
  SECTION("measures do not increase") {
    for (std::size_t j = 1; j < tree.generations.size(); ++j)
      CHECK(tree.generations[j].measure <= tree.generations[j - 1].measure + 1e-15);
  }
  SECTION("decay report is consistent") {
    CHECK(decay.rate >= 0.0);
    CHECK(decay.rate <= 1.0);
    CHECK(decay.lambda == tree.lambda);
  }
}

TEST_CASE("delta projections", "[stopping]") {
  const int n = 8;
  Rng rng(99);
  SECTION("identity weight: delta_0 removes the mean, the rest vanish") {
    MatrixWeight id = make_weight(WeightFamily::constant(Eigen::Matrix2d::Identity()), n);
    StoppingConfig cfg;
    cfg.lambda = 4.0;
    auto [tree, decay] = build_stopping_tree(id, Exponent(2.0), cfg);
    StepFunction f = random_step_function(n, 2, 1, rng);
    StepFunction d0 = delta_projection(f, tree, 0);
    StepFunction centered = f;
    const Eigen::MatrixXd m = f.mean_value();
    for (Eigen::Index c = 0; c < centered.cell_count(); ++c) centered.cell(c) -= m;
    CHECK(sup_diff(d0, centered) <= 1e-13 * f.max_abs());
    CHECK(delta_projection(f, tree, 1).max_abs() == 0.0);
    CHECK(delta_projection(f, tree, 7).max_abs() == 0.0);
  }
  SECTION("projections telescope and carry the full energy") {
    MatrixWeight w = a2_weight(n);
    StoppingConfig cfg;
    auto [tree, decay] = build_stopping_tree(w, Exponent(2.0), cfg);
    StepFunction f = random_step_function(n, 1, 1, rng);

    StepFunction sum(n, 1, 1);
    double energy = 0.0;
    for (std::size_t j = 0; j < tree.generations.size(); ++j) {
      StepFunction dj = delta_projection(f, tree, j);
      sum += dj;
      const double nrm = lp_norm(dj, 2.0);
      energy += nrm * nrm;
    }
    StepFunction centered = f;
    const Eigen::MatrixXd m = f.mean_value();
    for (Eigen::Index c = 0; c < centered.cell_count(); ++c) centered.cell(c) -= m;
    CHECK(sup_diff(sum, centered) <= 1e-12 * f.max_abs());
    const double total = lp_norm(centered, 2.0);
    CHECK(testutil::rel_err(energy, total * total) <= 1e-10);
  }
  SECTION("projection agrees with a direct scan over the reported F-sets") {
    MatrixWeight w = a2_weight(n);
    StoppingConfig cfg;
    auto [tree, decay] = build_stopping_tree(w, Exponent(2.0), cfg);
    StepFunction f = random_step_function(n, 1, 1, rng);
    auto coeffs = haar_transform(f);
    for (std::size_t j = 0; j < tree.generations.size(); ++j) {
      StepFunction want(n, 1, 1);
      for (const auto& J : tree.fset(j))
        want += coeffs.coeff_scalar(J) * haar_function(J, n);
      CHECK(sup_diff(delta_projection(f, tree, j), want) <= 1e-12 * (1.0 + want.max_abs()));
    }
  }
}

TEST_CASE("operator T and its generations", "[stopping]") {
  const int n = 8;
  Rng rng(1234);
  Exponent p2(2.0);

  SECTION("identity weight: T removes the mean") {
    MatrixWeight id = make_weight(WeightFamily::constant(Eigen::Matrix2d::Identity()), n);
    StepFunction f = random_step_function(n, 2, 1, rng);
    StepFunction tf = operator_T(id, p2, f, ReducingBackend::exact_p2);
    StepFunction centered = f;
    const Eigen::MatrixXd m = f.mean_value();
    for (Eigen::Index c = 0; c < centered.cell_count(); ++c) centered.cell(c) -= m;
    CHECK(sup_diff(tf, centered) <= 1e-12 * f.max_abs());
  }
  SECTION("constant weight acts as the identity on a mean-zero input") {
    Eigen::Matrix2d d49;
    d49 << 4, 0, 0, 9;
    MatrixWeight w = make_weight(WeightFamily::constant(d49), n);
    StepFunction h = haar_function(DyadicInterval::root(), n);
    StepFunction f(n, 2, 1);
    for (Eigen::Index c = 0; c < f.cell_count(); ++c) f.cell(c)(0, 0) = h.scalar(c);
    StepFunction tf = operator_T(w, p2, f, ReducingBackend::exact_p2);
    CHECK(sup_diff(tf, f) <= 1e-12);
  }
  SECTION("T equals the sum of its generations; T_k is supported on its stopping set") {
    MatrixWeight w = make_weight(
        WeightFamily::rotated_powers({0.5, -0.5}, 0.5, 0.0, 2.0 * M_PI), n);
    StoppingConfig cfg;
    auto [tree, decay] = build_stopping_tree(w, p2, cfg);
    REQUIRE(tree.generations.size() >= 2);
    MultiplierSpec inv = build_multiplier(w, p2, MultiplierSpec::Provenance::inverse_reducing,
                                          ReducingBackend::exact_p2);
    StepFunction f = random_step_function(n, 2, 1, rng);

    StepFunction total = operator_T(w, p2, f, inv);
    StepFunction sum(n, 2, 1);
    for (std::size_t j = 0; j < tree.generations.size(); ++j)
      sum += operator_Tj(w, p2, f, tree, j, inv);
    CHECK(sup_diff(total, sum) <= 1e-10 * (1.0 + total.max_abs()));

    for (std::size_t k = 0; k < tree.generations.size(); ++k) {
      StepFunction tk = operator_Tj(w, p2, f, tree, k, inv);
      std::vector<bool> covered(static_cast<std::size_t>(tk.cell_count()), false);
      for (const auto& node : tree.generations[k].nodes)
        for (std::int64_t c = node.interval.cell_begin(n);
             c < node.interval.cell_begin(n) + node.interval.cell_count(n); ++c)
          covered[static_cast<std::size_t>(c)] = true;
      for (Eigen::Index c = 0; c < tk.cell_count(); ++c)
        if (!covered[static_cast<std::size_t>(c)])
          CHECK(tk.data().col(c).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SECTION("M_I matches a coefficient-level recomputation") {
    MatrixWeight w = a2_weight(n);
    StoppingConfig cfg;
    auto [tree, decay] = build_stopping_tree(w, p2, cfg);
    MultiplierSpec inv = build_multiplier(w, p2, MultiplierSpec::Provenance::inverse_reducing,
                                          ReducingBackend::exact_p2);
    StepFunction f = random_step_function(n, 1, 1, rng);
    const auto& node = tree.generations[0].nodes[0];
    StepFunction got = operator_MI(w, p2, f, node.interval, tree, inv);
    auto coeffs = haar_transform(f);
    StepFunction want(n, 1, 1);
    for (const auto& J : node.fset)
      want += (inv.at(J)(0, 0) * coeffs.coeff_scalar(J)) * haar_function(J, n);
    CHECK(sup_diff(got, want) <= 1e-11 * (1.0 + want.max_abs()));
    CHECK_THROWS_AS(operator_MI(w, p2, f, DyadicInterval(n - 1, 1), tree, inv), Error);
  }
}

TEST_CASE("cotlar cross terms", "[stopping]") {
  const int n = 8;
  Exponent p2(2.0);
  MatrixWeight w = make_weight(WeightFamily::rotated_powers({0.5, -0.5}, 0.5, 0.0, 2.0 * M_PI), n);
  StoppingConfig cfg;
  auto [tree, decay] = build_stopping_tree(w, p2, cfg);
  MultiplierSpec inv = build_multiplier(w, p2, MultiplierSpec::Provenance::inverse_reducing,
                                        ReducingBackend::exact_p2);
  Rng rng(4321);
  StepFunction f = random_step_function(n, 2, 1, rng);

  // diagonal term equals ||T_j f||_p^p
  for (std::size_t j = 0; j < tree.generations.size(); ++j) {
    const double self = cotlar_cross_term(w, p2, f, tree, j, j, inv);
    const double nrm = lp_norm(operator_Tj(w, p2, f, tree, j, inv), p2.p);
    CHECK(testutil::rel_err(self, std::pow(nrm, p2.p)) <= 1e-12);
  }
  // symmetry and empty generations
  if (tree.generations.size() >= 2) {
    CHECK(cotlar_cross_term(w, p2, f, tree, 0, 1, inv) ==
          Catch::Approx(cotlar_cross_term(w, p2, f, tree, 1, 0, inv)));
  }
  CHECK(cotlar_cross_term(w, p2, f, tree, 0, tree.generations.size() + 3, inv) == 0.0);
}

TEST_CASE("decay of an A2 weight at the default lambda", "[stopping]") {
  const int n = 12;
  MatrixWeight w = a2_weight(n);
  StoppingConfig cfg;  // lambda = 4x root baseline
  auto [tree, decay] = build_stopping_tree(w, Exponent(2.0), cfg);
  REQUIRE_FALSE(decay.truncated);
  for (std::size_t j = 0; j + 1 < decay.mu.size(); ++j)
    CHECK(decay.mu[j + 1] <= 0.9 * decay.mu[j]);
  CHECK(decay.rate < 1.0);
}
