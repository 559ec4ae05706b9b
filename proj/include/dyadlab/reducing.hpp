#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dyadlab/errors.hpp"
#include "dyadlab/interval.hpp"
#include "dyadlab/linalg.hpp"
#include "dyadlab/mvee.hpp"
#include "dyadlab/parallel.hpp"
#include "dyadlab/sphere.hpp"
#include "dyadlab/step_function.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

enum class ReducingBackend { auto_select, exact_p2, scalar_closed_form, ellipsoid };

inline const char* backend_name(ReducingBackend b) {
  switch (b) {
    case ReducingBackend::auto_select: return "auto";
    case ReducingBackend::exact_p2: return "exact_p2";
    case ReducingBackend::scalar_closed_form: return "scalar_closed_form";
    case ReducingBackend::ellipsoid: return "ellipsoid";
  }
  return "unknown";
}

inline ReducingBackend parse_backend(const std::string& name) {
  if (name == "auto") return ReducingBackend::auto_select;
  if (name == "exact_p2") return ReducingBackend::exact_p2;
  if (name == "scalar_closed_form") return ReducingBackend::scalar_closed_form;
  if (name == "ellipsoid") return ReducingBackend::ellipsoid;
  fail(errc::invalid_backend, "unknown reducing backend '" + name + "'");
}

struct ReducingOptions {
  int directions = 0;        // 0 = default_direction_count(n)
  double mvee_tol = 1e-5;
  std::uint64_t seed = 1;    // direction-sequence seed
};

/// Reducing pair (V_I, V_I') of an interval, with backend provenance.
struct ReducingPair {
  DyadicInterval interval;
  Eigen::MatrixXd V;
  Eigen::MatrixXd Vprime;
  ReducingBackend backend = ReducingBackend::exact_p2;
  double backend_tolerance = 0.0;
};

/// Directional L^p average of the weight over I:
///   primal: |I|^{-1/p}  || chi_I W^{ 1/p} v ||_{L^p}
///   dual:   |I|^{-1/p'} || chi_I W^{-1/p} v ||_{L^p'}
inline double directional_norm(const MatrixWeight& W, const Exponent& p, const DyadicInterval& I,
                               const Eigen::VectorXd& v, bool dual = false) {
  const double expo = dual ? p.conj : p.p;
  const auto Wp = W.power(dual ? p.dual_power() : p.primal_power());
  const auto begin = I.cell_begin(W.resolution());
  const auto count = I.cell_count(W.resolution());
  const double cell_measure = std::ldexp(1.0, -W.resolution());
  double acc = 0.0;
  for (Eigen::Index c = begin; c < begin + count; ++c)
    acc += std::pow((Wp->cell(c) * v).norm(), expo);
  return std::pow(acc * cell_measure, 1.0 / expo) / std::pow(I.length(), 1.0 / expo);
}

namespace detail {

inline Eigen::MatrixXd ellipsoid_gauge(const MatrixWeight& W, const Exponent& p,
                                       const DyadicInterval& I, bool dual,
                                       const ReducingOptions& opt) {
  const Eigen::Index n = W.dim();
  const int count = opt.directions > 0 ? opt.directions : default_direction_count(n);
  const auto dirs = sphere_directions(n, count, opt.seed);

  // Whiten by the p=2 closed form so the unit ball of the directional norm is
  // near-round: deep singular intervals otherwise produce bodies too eccentric
  // for uniform direction sampling. The sampled boundary points are still
  // +-u/rho(u), along the preconditioned direction set.
  const Eigen::MatrixXd precond =
      matrix_power(mean_on(dual ? *W.power(-1.0) : W.base(), I), 0.5);
  const Eigen::MatrixXd precond_inv = precond.inverse();

  std::vector<Eigen::VectorXd> boundary;
  boundary.reserve(dirs.size() * 2);
  for (const auto& u : dirs) {
    const Eigen::VectorXd dir = precond_inv * u;
    const double rho_hat = directional_norm(W, p, I, dir, dual);
    if (!(rho_hat > 0.0)) fail(errc::invalid_weight, "zero directional norm on an SPD weight");
    boundary.push_back(u / rho_hat);
    boundary.push_back(-u / rho_hat);
  }
  const Eigen::MatrixXd gauge_white = mvee(boundary, opt.mvee_tol);
  // symmetric gauge with the same quadratic form as gauge_white * precond
  return matrix_power(precond * gauge_white.transpose() * gauge_white * precond, 0.5);
}

}  // namespace detail

inline ReducingBackend resolve_backend(ReducingBackend backend, double p, Eigen::Index n) {
  if (backend != ReducingBackend::auto_select) return backend;
  if (p == 2.0) return ReducingBackend::exact_p2;
  if (n == 1) return ReducingBackend::scalar_closed_form;
  return ReducingBackend::ellipsoid;
}

/// One side of the reducing pair: V_I (dual = false) or V_I' (dual = true).
inline Eigen::MatrixXd reducing_matrix(const MatrixWeight& W, const Exponent& p,
                                       const DyadicInterval& I, bool dual,
                                       ReducingBackend backend = ReducingBackend::auto_select,
                                       const ReducingOptions& opt = {}) {
  const Eigen::Index n = W.dim();
  switch (resolve_backend(backend, p.p, n)) {
    case ReducingBackend::exact_p2:
      if (p.p != 2.0)
        fail(errc::invalid_backend,
             "exact_p2 backend requires p = 2, got p = " + std::to_string(p.p));
      return matrix_power(mean_on(dual ? *W.power(-1.0) : W.base(), I), 0.5);
    case ReducingBackend::scalar_closed_form: {
      if (n != 1)
        fail(errc::invalid_backend, "scalar_closed_form backend requires n = 1, got n = " +
                                        std::to_string(n));
      const double value =
          dual ? std::pow(mean_on_scalar(*W.power(p.dual_density_power()), I), 1.0 / p.conj)
               : std::pow(mean_on_scalar(W.base(), I), 1.0 / p.p);
      return Eigen::MatrixXd::Constant(1, 1, value);
    }
    case ReducingBackend::ellipsoid:
      return std::sqrt(static_cast<double>(n)) * detail::ellipsoid_gauge(W, p, I, dual, opt);
    case ReducingBackend::auto_select: break;  // resolved above
  }
  fail(errc::invalid_backend, "unresolved reducing backend");
}

/// Reducing operators of I. exact_p2 is the closed form at p=2,
/// scalar_closed_form the n=1 closed form at any p, and ellipsoid the
/// John-ellipsoid construction from sampled directional norms (scaled by
/// sqrt(n) so rho_I(v) <= |V_I v| <= sqrt(n) rho_I(v) on the samples).
inline ReducingPair reducing_operator(const MatrixWeight& W, const Exponent& p,
                                      const DyadicInterval& I,
                                      ReducingBackend backend = ReducingBackend::auto_select,
                                      const ReducingOptions& opt = {}) {
  ReducingPair pair;
  pair.interval = I;
  pair.backend = resolve_backend(backend, p.p, W.dim());
  pair.V = reducing_matrix(W, p, I, false, pair.backend, opt);
  pair.Vprime = reducing_matrix(W, p, I, true, pair.backend, opt);
  pair.backend_tolerance = pair.backend == ReducingBackend::ellipsoid ? opt.mvee_tol : 1e-12;
  return pair;
}

struct ApLevelRow {
  int level = 0;
  double max_characteristic = 0.0;
  double max_strong = 0.0;
  std::int64_t argmax_characteristic = 0;
  std::int64_t argmax_strong = 0;
};

/// Scan of sup_I ||V_I V_I'|| and sup_I ||V_I|| ||V_I'|| over dyadic
/// intervals of level <= depth.
struct ApReport {
  int depth = 0;
  double characteristic = 0.0;
  double strong_product = 0.0;
  double duality_floor = 0.0;  // min over I of the smallest singular value of V_I V_I'
  DyadicInterval argmax_characteristic;
  DyadicInterval argmax_strong;
  std::vector<ApLevelRow> per_level;
  ReducingBackend backend = ReducingBackend::auto_select;
};

inline ApReport ap_characteristic(const MatrixWeight& W, const Exponent& p, int depth,
                                  ReducingBackend backend = ReducingBackend::auto_select,
                                  const ReducingOptions& opt = {}, int threads = 1) {
  if (depth > W.resolution())
    fail(errc::resolution_too_coarse, "ap_characteristic depth exceeds weight resolution");
  if (backend == ReducingBackend::ellipsoid || threads > 1) {
    // materialize the needed powers before the data-parallel scan
    W.power(p.primal_power());
    W.power(p.dual_power());
  }
  if (backend == ReducingBackend::exact_p2 ||
      (backend == ReducingBackend::auto_select && p.p == 2.0))
    W.power(-1.0);
  if (backend == ReducingBackend::scalar_closed_form ||
      (backend == ReducingBackend::auto_select && p.p != 2.0 && W.dim() == 1))
    W.power(p.dual_density_power());
  ApReport report;
  report.depth = depth;
  report.backend = backend;
  report.duality_floor = std::numeric_limits<double>::infinity();
  for (int lvl = 0; lvl <= depth; ++lvl) {
    ApLevelRow row;
    row.level = lvl;
    const std::size_t count = std::size_t{1} << lvl;
    std::vector<std::pair<double, double>> values(count);
    std::vector<double> floors(count);
    parallel_for(count, threads, [&](std::size_t k) {
      const DyadicInterval I(lvl, static_cast<std::int64_t>(k));
      const ReducingPair pair = reducing_operator(W, p, I, backend, opt);
      const Eigen::MatrixXd prod = pair.V * pair.Vprime;
      values[k] = {spectral_norm(prod),
                   spectral_norm(pair.V) * spectral_norm(pair.Vprime)};
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram(prod.transpose() * prod);
      floors[k] = std::sqrt(std::max(0.0, gram.eigenvalues().minCoeff()));
    });
    for (std::size_t k = 0; k < count; ++k) {
      report.duality_floor = std::min(report.duality_floor, floors[k]);
      if (values[k].first > row.max_characteristic) {
        row.max_characteristic = values[k].first;
        row.argmax_characteristic = static_cast<std::int64_t>(k);
      }
      if (values[k].second > row.max_strong) {
        row.max_strong = values[k].second;
        row.argmax_strong = static_cast<std::int64_t>(k);
      }
    }
    if (row.max_characteristic > report.characteristic) {
      report.characteristic = row.max_characteristic;
      report.argmax_characteristic = DyadicInterval(lvl, row.argmax_characteristic);
    }
    if (row.max_strong > report.strong_product) {
      report.strong_product = row.max_strong;
      report.argmax_strong = DyadicInterval(lvl, row.argmax_strong);
    }
    report.per_level.push_back(row);
  }
  return report;
}

/// One scanned average family of the reverse-Hoelder scan.
struct ReverseHolderFamily {
  std::string name;
  double baseline = 0.0;                    // p' for the V W^{-1/p} side, p for the other
  std::vector<std::vector<double>> C;       // [depth][q] sup of the average
  std::vector<std::vector<double>> C_norm;  // C^{1/q}, comparable across q
  std::vector<double> growth_ratio;         // per q: C at last depth / previous depth
  std::vector<bool> growing;                // ratio >= growth threshold
  std::optional<double> critical_q;         // smallest growing q
  bool margin_found = false;
  double margin = 0.0;                      // largest stable q minus baseline, when positive
};

/// Reverse-Hoelder scan. Each depth d in the ladder re-discretizes the weight
/// at resolution min(d+2, N) by cell averaging, so the singular-cell cutoff
/// scales with the scan depth and unbounded families reveal themselves as
/// depth growth instead of hiding behind a fixed-resolution cutoff. Growth
/// flags are only informative while the ladder resolutions still differ;
/// the per-entry resolutions are recorded for that reason.
struct ReverseHolderReport {
  std::vector<int> depths;
  std::vector<int> resolutions;  // grid resolution used per ladder entry
  std::vector<double> q_grid;
  double growth_threshold = 1.5;
  ReverseHolderFamily side_v_winv;   // (1/|I|) int_I ||V_I W^{-1/p}||^q
  ReverseHolderFamily side_w_vdual;  // (1/|I|) int_I ||W^{1/p} V_I'||^q
  ReducingBackend backend = ReducingBackend::auto_select;
};

inline ReverseHolderReport reverse_holder_scan(const MatrixWeight& W, const Exponent& p,
                                               const std::vector<double>& q_grid, int depth,
                                               ReducingBackend backend = ReducingBackend::auto_select,
                                               const ReducingOptions& opt = {},
                                               double growth_threshold = 1.5) {
  if (q_grid.empty()) fail(errc::invalid_input, "reverse_holder_scan needs a nonempty q grid");
  for (double q : q_grid)
    if (q < 1.0) fail(errc::invalid_exponent, "reverse_holder_scan requires q >= 1");
  if (depth > W.resolution())
    fail(errc::resolution_too_coarse, "reverse_holder_scan depth exceeds weight resolution");

  std::vector<double> qs = q_grid;
  std::sort(qs.begin(), qs.end());
  ReverseHolderReport report;
  report.q_grid = qs;
  report.growth_threshold = growth_threshold;
  report.backend = backend;
  for (int d = std::max(2, depth % 2 + 2); d <= depth; d += 2) report.depths.push_back(d);
  if (report.depths.empty() || report.depths.back() != depth) report.depths.push_back(depth);

  report.side_v_winv.name = "V.W^{-1/p}";
  report.side_v_winv.baseline = p.conj;
  report.side_w_vdual.name = "W^{1/p}.V'";
  report.side_w_vdual.baseline = p.p;

  for (int d : report.depths) {
    const int res = std::min(W.resolution(), d + 2);
    report.resolutions.push_back(res);
    const MatrixWeight Wd = res == W.resolution() ? MatrixWeight(W.base()) : W.coarsened(res);
    const auto winv = Wd.power(p.dual_power());
    const auto wpow = Wd.power(p.primal_power());
    const double cell_measure = std::ldexp(1.0, -res);
    std::vector<double> sup_vwinv(qs.size(), 0.0), sup_wvdual(qs.size(), 0.0);
    for (int lvl = 0; lvl <= d; ++lvl) {
      for (std::int64_t k = 0; k < (std::int64_t{1} << lvl); ++k) {
        const DyadicInterval I(lvl, k);
        const ReducingPair pair = reducing_operator(Wd, p, I, backend, opt);
        const auto begin = I.cell_begin(res);
        const auto count = I.cell_count(res);
        std::vector<double> avg_a(qs.size(), 0.0), avg_b(qs.size(), 0.0);
        for (Eigen::Index c = begin; c < begin + count; ++c) {
          const double na = spectral_norm(pair.V * winv->cell(c));
          const double nb = spectral_norm(wpow->cell(c) * pair.Vprime);
          for (std::size_t qi = 0; qi < qs.size(); ++qi) {
            avg_a[qi] += std::pow(na, qs[qi]);
            avg_b[qi] += std::pow(nb, qs[qi]);
          }
        }
        for (std::size_t qi = 0; qi < qs.size(); ++qi) {
          sup_vwinv[qi] = std::max(sup_vwinv[qi], avg_a[qi] * cell_measure / I.length());
          sup_wvdual[qi] = std::max(sup_wvdual[qi], avg_b[qi] * cell_measure / I.length());
        }
      }
    }
    report.side_v_winv.C.push_back(sup_vwinv);
    report.side_w_vdual.C.push_back(sup_wvdual);
  }

  auto finish = [&](ReverseHolderFamily& fam) {
    fam.C_norm.resize(fam.C.size());
    for (std::size_t di = 0; di < fam.C.size(); ++di) {
      fam.C_norm[di].resize(qs.size());
      for (std::size_t qi = 0; qi < qs.size(); ++qi)
        fam.C_norm[di][qi] = std::pow(fam.C[di][qi], 1.0 / qs[qi]);
    }
    fam.growth_ratio.assign(qs.size(), 1.0);
    fam.growing.assign(qs.size(), false);
    if (fam.C.size() >= 2) {
      const auto& last = fam.C.back();
      const auto& prev = fam.C[fam.C.size() - 2];
      for (std::size_t qi = 0; qi < qs.size(); ++qi) {
        fam.growth_ratio[qi] = prev[qi] > 0.0 ? last[qi] / prev[qi] : 1.0;
        fam.growing[qi] = fam.growth_ratio[qi] >= growth_threshold;
      }
    }
    double stable_max = -1.0;
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
      if (fam.growing[qi] && !fam.critical_q) fam.critical_q = qs[qi];
      if (!fam.growing[qi]) stable_max = std::max(stable_max, qs[qi]);
    }
    if (stable_max > fam.baseline) {
      fam.margin_found = true;
      fam.margin = stable_max - fam.baseline;
    }
  };
  finish(report.side_v_winv);
  finish(report.side_w_vdual);
  return report;
}

}  // namespace dyadlab
