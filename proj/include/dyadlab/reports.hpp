#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include "dyadlab/config.hpp"
#include "dyadlab/errors.hpp"
#include "dyadlab/estimators.hpp"
#include "dyadlab/reducing.hpp"
#include "dyadlab/stopping.hpp"
#include "dyadlab/version.hpp"

namespace dyadlab {

namespace detail {

inline std::string csv_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline json interval_json(const DyadicInterval& I) { return json::array({I.level, I.index}); }

inline void wrap_report(json& j, const Config& cfg) {
  j["toolkit_version"] = kVersion;
  j["domain"] = "[0,1) dyadic grid, no wraparound";
  j["config"] = config_echo(cfg);
}

}  // namespace detail

inline json ap_report_json(const ApReport& rep, const Config& cfg) {
  json j;
  j["report"] = "ap_characteristic";
  detail::wrap_report(j, cfg);
  j["depth"] = rep.depth;
  j["backend"] = backend_name(rep.backend);
  j["characteristic"] = rep.characteristic;
  j["strong_product"] = rep.strong_product;
  j["duality_floor"] = rep.duality_floor;
  j["argmax_characteristic"] = detail::interval_json(rep.argmax_characteristic);
  j["argmax_strong"] = detail::interval_json(rep.argmax_strong);
  json levels = json::array();
  for (const auto& row : rep.per_level)
    levels.push_back({{"level", row.level},
                      {"max_characteristic", row.max_characteristic},
                      {"argmax_characteristic", row.argmax_characteristic},
                      {"max_strong", row.max_strong},
                      {"argmax_strong", row.argmax_strong}});
  j["per_level"] = levels;
  return j;
}

inline std::string ap_report_csv(const ApReport& rep) {
  std::string out = "level,max_characteristic,argmax_characteristic,max_strong,argmax_strong\n";
  for (const auto& row : rep.per_level)
    out += std::to_string(row.level) + "," + detail::csv_double(row.max_characteristic) + "," +
           std::to_string(row.argmax_characteristic) + "," + detail::csv_double(row.max_strong) +
           "," + std::to_string(row.argmax_strong) + "\n";
  return out;
}

namespace detail {

inline json rh_family_json(const ReverseHolderFamily& fam, const std::vector<double>& q_grid) {
  json j;
  j["name"] = fam.name;
  j["baseline"] = fam.baseline;
  j["C"] = fam.C;
  j["C_normalized"] = fam.C_norm;
  j["growth_ratio"] = fam.growth_ratio;
  std::vector<int> growing;
  for (bool g : fam.growing) growing.push_back(g ? 1 : 0);
  j["growing"] = growing;
  if (fam.critical_q)
    j["critical_q"] = *fam.critical_q;
  else
    j["critical_q"] = nullptr;
  j["margin_found"] = fam.margin_found;
  j["margin"] = fam.margin;
  (void)q_grid;
  return j;
}

}  // namespace detail

inline json reverse_holder_json(const ReverseHolderReport& rep, const Config& cfg) {
  json j;
  j["report"] = "reverse_holder";
  detail::wrap_report(j, cfg);
  j["depths"] = rep.depths;
  j["resolutions"] = rep.resolutions;
  j["q_grid"] = rep.q_grid;
  j["growth_threshold"] = rep.growth_threshold;
  j["backend"] = backend_name(rep.backend);
  j["side_v_winv"] = detail::rh_family_json(rep.side_v_winv, rep.q_grid);
  j["side_w_vdual"] = detail::rh_family_json(rep.side_w_vdual, rep.q_grid);
  return j;
}

inline std::string reverse_holder_csv(const ReverseHolderReport& rep) {
  std::string out = "side,depth,resolution,q,C,C_normalized\n";
  auto emit = [&](const ReverseHolderFamily& fam, const std::string& side) {
    for (std::size_t di = 0; di < rep.depths.size(); ++di)
      for (std::size_t qi = 0; qi < rep.q_grid.size(); ++qi)
        out += side + "," + std::to_string(rep.depths[di]) + "," +
               std::to_string(rep.resolutions[di]) + "," + detail::csv_double(rep.q_grid[qi]) +
               "," + detail::csv_double(fam.C[di][qi]) + "," +
               detail::csv_double(fam.C_norm[di][qi]) + "\n";
  };
  emit(rep.side_v_winv, "v_winv");
  emit(rep.side_w_vdual, "w_vdual");
  return out;
}

inline json stopping_json(const StoppingTree& tree, const DecayReport& decay, const Config& cfg) {
  json j;
  j["report"] = "stopping_time";
  detail::wrap_report(j, cfg);
  j["resolution"] = tree.resolution;
  j["p"] = tree.p;
  j["lambda"] = tree.lambda;
  j["baselines"] = {tree.baseline_a, tree.baseline_b};
  json gens = json::array();
  for (const auto& gen : tree.generations) {
    json intervals = json::array();
    for (const auto& node : gen.nodes) intervals.push_back(detail::interval_json(node.interval));
    gens.push_back({{"intervals", intervals}, {"measure", gen.measure}});
  }
  j["generations"] = gens;
  j["truncated_by_max_generations"] = tree.truncated_by_max_generations;
  j["decay"] = {{"mu", decay.mu},
                {"rate", decay.rate},
                {"halving", decay.halving},
                {"lambda", decay.lambda},
                {"truncated", decay.truncated}};
  return j;
}

inline std::string decay_csv(const DecayReport& decay) {
  std::string out = "generation,mu\n";
  for (std::size_t i = 0; i < decay.mu.size(); ++i)
    out += std::to_string(i + 1) + "," + detail::csv_double(decay.mu[i]) + "\n";
  return out;
}

inline json sweep_json(const SweepReport& rep, const Config& cfg) {
  json j;
  j["report"] = "boundedness_sweep";
  detail::wrap_report(j, cfg);
  j["operator"] = rep.operator_name;
  j["p"] = rep.p;
  j["open_question_probe"] = rep.open_question_probe;
  json points = json::array();
  for (const auto& pt : rep.points) {
    json pj;
    pj["resolution"] = pt.resolution;
    pj["estimate"] = pt.estimate;
    pj["method"] = pt.method;
    if (!pt.per_symbol.empty()) pj["per_symbol"] = pt.per_symbol;
    pj["witness_seeds"] = pt.witness_seeds;
    points.push_back(pj);
  }
  j["points"] = points;
  j["growth_ratio"] = rep.growth_ratio;
  j["ratio_resolutions"] = {rep.ratio_from, rep.ratio_to};
  j["verdict"] = verdict_name(rep.verdict);
  j["thresholds"] = {{"plateau", rep.plateau_threshold}, {"growth", rep.growth_threshold}};
  return j;
}

inline std::string sweep_csv(const SweepReport& rep) {
  std::string out = "resolution,estimate\n";
  for (const auto& pt : rep.points)
    out += std::to_string(pt.resolution) + "," + detail::csv_double(pt.estimate) + "\n";
  return out;
}

inline void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(errc::io_error, "cannot open '" + path + "' for writing");
  os << contents;
  if (!os) fail(errc::io_error, "short write to '" + path + "'");
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace dyadlab
