#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dyadlab/estimators.hpp"
#include "dyadlab/rng.hpp"
#include "helpers.hpp"

using namespace dyadlab;

namespace {

LinearOperator scaling_operator(int resolution, Eigen::Index dim, double factor) {
  LinearOperator op;
  op.name = "scale";
  op.resolution = resolution;
  op.dim = dim;
  op.apply = [factor](const StepFunction& f) { return f * factor; };
  op.adjoint = op.apply;
  return op;
}

WeightFamily rotated_a2() {
  return WeightFamily::rotated_powers({0.5, -0.5}, 0.5, 0.0, 2.0 * M_PI);
}

}  // namespace

TEST_CASE("norm estimate on trivial operators", "[estimators]") {
  for (double p : {1.5, 2.0, 3.0}) {
    NormEstimate one = operator_norm_estimate(scaling_operator(4, 1, 1.0), Exponent(p));
    CHECK(std::abs(one.value - 1.0) <= (p == 2.0 ? 1e-9 : 1e-6));
    NormEstimate two = operator_norm_estimate(scaling_operator(4, 2, 2.0), Exponent(p));
    CHECK(std::abs(two.value - 2.0) <= 1e-6);
  }
}

TEST_CASE("dense oracle for the reducing multiplier of a constant weight", "[estimators]") {
  Eigen::Matrix2d d49;
  d49 << 4, 0, 0, 9;
  MatrixWeight w = make_weight(WeightFamily::constant(d49), 4);
  MultiplierSpec spec = build_multiplier(w, Exponent(2.0),
                                         MultiplierSpec::Provenance::reducing,
                                         ReducingBackend::exact_p2);
  LinearOperator op;
  op.name = "reducing multiplier";
  op.resolution = 4;
  op.dim = 2;
  op.apply = [spec](const StepFunction& f) { return haar_multiplier(spec, f); };
  op.adjoint = [spec](const StepFunction& g) { return haar_multiplier(spec, g, true); };
  NormEstimate est = operator_norm_estimate(op, Exponent(2.0));
  CHECK(est.method == NormEstimate::Method::dense_svd);
  CHECK(est.value == Catch::Approx(3.0).margin(1e-6));
}

TEST_CASE("nonlinear operators are rejected", "[estimators]") {
  LinearOperator sq;
  sq.name = "square";
  sq.resolution = 4;
  sq.dim = 1;
  sq.apply = [](const StepFunction& f) { return square_function(f); };
  CHECK_THROWS_AS(operator_norm_estimate(sq, Exponent(2.0)), Error);

  LinearOperator mx;
  mx.name = "maximal of abs";
  mx.resolution = 4;
  mx.dim = 1;
  mx.apply = [](const StepFunction& f) {
    StepFunction g = f;
    g.data() = g.data().cwiseAbs();
    return dyadic_maximal(g);
  };
  CHECK_THROWS_AS(operator_norm_estimate(mx, Exponent(2.0)), Error);
}

TEST_CASE("ascent agrees with the dense SVD at p=2", "[estimators]") {
  const int n = 4;
  MatrixWeight w = make_weight(rotated_a2(), n);
  Exponent p2(2.0);
  Rng srng(5);
  SymbolCoefficients b = make_bmo_symbol(n, srng);
  SymbolCoefficients B = make_carleson_symbol(n, 2, srng);

  for (const std::string name :
       {"conjugated", "conjugated_M", "inverse_multiplier", "naive_inverse",
        "matrix_conjugated"}) {
    LinearOperator op = make_sweep_operator(name, w, p2, &b, &B, ReducingBackend::exact_p2);
    NormEstimate dense = operator_norm_estimate(op, p2);
    REQUIRE(dense.method == NormEstimate::Method::dense_svd);

    EstimatorConfig ascent_cfg;
    ascent_cfg.force_ascent = true;
    ascent_cfg.max_iterations = 4000;
    ascent_cfg.tol = 1e-14;
    NormEstimate ascent = operator_norm_estimate(op, p2, ascent_cfg);
    REQUIRE(ascent.method == NormEstimate::Method::multistart_ascent);
    INFO(name << ": dense " << dense.value << " ascent " << ascent.value);
    CHECK(ascent.value >= dense.value - 1e-6);
    CHECK(ascent.value <= dense.value + 1e-9);
  }
}

TEST_CASE("power iteration path agrees with the dense SVD", "[estimators]") {
  const int n = 4;
  MatrixWeight w = make_weight(rotated_a2(), n);
  Rng srng(6);
  SymbolCoefficients b = make_bmo_symbol(n, srng);
  LinearOperator op = make_sweep_operator("conjugated", w, Exponent(2.0), &b, nullptr);
  NormEstimate dense = operator_norm_estimate(op, Exponent(2.0));
  EstimatorConfig cfg;
  cfg.dense_dim_cap = 0;  // force the iterative path
  cfg.power_iterations = 4000;
  cfg.tol = 1e-14;
  NormEstimate iter = operator_norm_estimate(op, Exponent(2.0), cfg);
  REQUIRE(iter.method == NormEstimate::Method::power_iteration_p2);
  CHECK(iter.value >= dense.value - 1e-6);
  CHECK(iter.value <= dense.value + 1e-9);
}

TEST_CASE("witnesses reproduce their reported ratio", "[estimators]") {
  const int n = 5;
  MatrixWeight w = make_weight(WeightFamily::diagonal_powers({0.5, -0.5}, 0.5), n);
  Rng srng(7);
  SymbolCoefficients b = make_bmo_symbol(n, srng);
  for (double p : {1.5, 2.0, 3.0}) {
    LinearOperator op = make_sweep_operator("conjugated", w, Exponent(p), &b, nullptr);
    NormEstimate est = operator_norm_estimate(op, Exponent(p));
    REQUIRE(est.witness.max_abs() > 0.0);
    const double ratio =
        lp_norm(op.apply(est.witness), p) / lp_norm(est.witness, p);
    CHECK(testutil::rel_err(ratio, est.value) <= 1e-9);
  }
}

TEST_CASE("finite sections are nondecreasing under refinement", "[estimators]") {
  // the coarse section embeds in the finer one when the weight cells refine
  const int coarse = 4, fine = 5;
  MatrixWeight wc = make_weight(rotated_a2(), coarse);
  MatrixWeight wf{wc.base().refined(fine)};
  Rng srng(8);
  SymbolCoefficients b = make_bmo_symbol(coarse, srng);
  SymbolCoefficients bf = SymbolCoefficients::zero(fine, 1, 1);
  for (const auto& I : intervals_to_level(coarse - 1)) bf.coeff(I) = b.coeff(I);

  for (const std::string name : {"conjugated", "inverse_multiplier"}) {
    LinearOperator opc =
        make_sweep_operator(name, wc, Exponent(2.0), &b, nullptr, ReducingBackend::exact_p2);
    LinearOperator opf =
        make_sweep_operator(name, wf, Exponent(2.0), &bf, nullptr, ReducingBackend::exact_p2);
    const double nc = operator_norm_estimate(opc, Exponent(2.0)).value;
    const double nf = operator_norm_estimate(opf, Exponent(2.0)).value;
    CHECK(nf >= nc - 1e-8);
  }
}

TEST_CASE("factorization through the constant Haar multiplier", "[estimators]") {
  const int n = 5;
  MatrixWeight w = make_weight(rotated_a2(), n);
  Exponent p2(2.0);
  Rng srng(9);
  SymbolCoefficients b = make_bmo_symbol(n, srng);

  LinearOperator conj = make_sweep_operator("conjugated", w, p2, &b, nullptr,
                                            ReducingBackend::exact_p2);
  LinearOperator conj_m = make_sweep_operator("conjugated_M", w, p2, &b, nullptr,
                                              ReducingBackend::exact_p2);
  LinearOperator invm = make_sweep_operator("inverse_multiplier", w, p2, nullptr, nullptr,
                                            ReducingBackend::exact_p2);

  // exact composition: the conjugated operator factors through the multiplier
  Rng rng(10);
  const double inv_norm = operator_norm_estimate(invm, p2).value;
  for (int trial = 0; trial < 8; ++trial) {
    StepFunction f = random_step_function(n, 2, 1, rng);
    StepFunction lhs = conj.apply(f);
    StepFunction mid = conj_m.apply(f);
    StepFunction composed = invm.apply(mid);
    CHECK(sup_diff(lhs, composed) <= 1e-11 * (1.0 + lhs.max_abs()));
    CHECK(lp_norm(lhs, 2.0) <= inv_norm * lp_norm(mid, 2.0) * (1.0 + 1e-9));
  }
}

TEST_CASE("bmo corpus is normalized and deterministic", "[estimators]") {
  Rng a(42), b(42);
  SymbolCoefficients s1 = make_bmo_symbol(8, a);
  SymbolCoefficients s2 = make_bmo_symbol(8, b);
  CHECK(bmo_norm(s1, 7) == Catch::Approx(1.0).margin(1e-12));
  for (int lvl = 0; lvl < 8; ++lvl)
    CHECK((s1.levels[lvl] - s2.levels[lvl]).cwiseAbs().maxCoeff() == 0.0);

  Rng c(43);
  SymbolCoefficients m = make_carleson_symbol(6, 2, c);
  CHECK(matrix_carleson_norm(m, 5) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sweep with the rank-one root symbol is flat", "[estimators]") {
  SweepConfig cfg;
  cfg.resolutions = {4, 6, 8};
  cfg.symbol_source = "root";
  cfg.seed = 11;
  WeightFamily id = WeightFamily::constant(Eigen::Matrix2d::Identity());
  SweepReport rep = boundedness_sweep(id, Exponent(2.0), "conjugated", cfg);
  REQUIRE(rep.points.size() == 3);
  for (const auto& pt : rep.points) CHECK(pt.estimate == Catch::Approx(1.0).margin(1e-8));
  CHECK(rep.verdict == SweepReport::Verdict::bounded_plateau);
  CHECK(rep.ratio_from == 6);
  CHECK(rep.ratio_to == 8);
  CHECK_FALSE(rep.open_question_probe);
}

TEST_CASE("sweep determinism", "[estimators]") {
  SweepConfig cfg;
  cfg.resolutions = {4, 6};
  cfg.corpus = 3;
  cfg.seed = 77;
  cfg.estimator.trials = 4;
  SweepReport r1 = boundedness_sweep(rotated_a2(), Exponent(2.0), "conjugated", cfg);
  SweepReport r2 = boundedness_sweep(rotated_a2(), Exponent(2.0), "conjugated", cfg);
  REQUIRE(r1.points.size() == r2.points.size());
  for (std::size_t i = 0; i < r1.points.size(); ++i)
    CHECK(r1.points[i].estimate == r2.points[i].estimate);
}

TEST_CASE("open-question probes are labeled", "[estimators]") {
  CHECK(is_open_question_probe("naive_inverse"));
  CHECK(is_open_question_probe("matrix_conjugated"));
  CHECK_FALSE(is_open_question_probe("conjugated"));
  CHECK_FALSE(is_open_question_probe("conjugated_M"));
  CHECK_FALSE(is_open_question_probe("inverse_multiplier"));
}
