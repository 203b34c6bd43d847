#pragma once

// JSON and CSV renderings of partitions, observation assignments, tuning
// traces and gain grids, plus the experiment configuration schema.

#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "covloc/localize.hpp"
#include "covloc/netgraph.hpp"
#include "covloc/tune.hpp"
#include "covloc/twinlab.hpp"

namespace covloc::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* kExperimentSchema = "covloc.experiment/1";

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json partition_json(const ClusterPartition& part, double performance) {
  return Json{{"p", part.cluster_count()}, {"labels", part.labels()}, {"performance", performance}};
}

/// Reads {p, labels, ...}; extra keys (performance) are ignored.
inline ClusterPartition partition_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("p") || !j.contains("labels"))
    throw FormatError("partition JSON needs keys 'p' and 'labels'");
  try {
    return ClusterPartition(j.at("labels").get<std::vector<int>>(), j.at("p").get<int>());
  } catch (const Json::exception& e) {
    throw FormatError(std::string("partition JSON: ") + e.what());
  }
}

inline Json performance_curve_json(const std::vector<PerformancePoint>& curve) {
  Json a = Json::array();
  for (const auto& pt : curve) a.push_back({{"p", pt.p}, {"best", pt.best}, {"mean", pt.mean}});
  return a;
}

inline void write_performance_csv(std::ostream& out, const std::vector<PerformancePoint>& curve) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "p,best,mean\n";
  for (const auto& pt : curve) out << pt.p << ',' << pt.best << ',' << pt.mean << '\n';
}

/// Per-observation classification and a per-cluster summary: states,
/// observations kept by reduction (single rows) and by adjustment (all
/// non-empty rows by strongest cluster).
inline Json assignment_json(const ObservationAssignment& a, const ClusterPartition& part) {
  Json obs = Json::array();
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    const auto& r = a.rows[k];
    obs.push_back({{"index", k}, {"status", to_string(r.status)}, {"clusters", r.clusters}, {"strongest", r.strongest}});
  }
  const auto sizes = part.cluster_sizes();
  std::vector<std::size_t> reduction(static_cast<std::size_t>(a.cluster_count), 0);
  std::vector<std::size_t> adjustment(static_cast<std::size_t>(a.cluster_count), 0);
  for (const auto& r : a.rows) {
    if (r.status == ObservationStatus::Empty) continue;
    ++adjustment[static_cast<std::size_t>(r.strongest - 1)];
    if (r.status == ObservationStatus::Single) ++reduction[static_cast<std::size_t>(r.strongest - 1)];
  }
  Json clusters = Json::array();
  for (int c = 1; c <= a.cluster_count; ++c) {
    const auto uc = static_cast<std::size_t>(c - 1);
    clusters.push_back({{"cluster", c},
                        {"states", sizes[uc]},
                        {"observations_reduction", reduction[uc]},
                        {"observations_adjustment", adjustment[uc]}});
  }
  return Json{{"observations", obs},
              {"summary",
               {{"clusters", clusters},
                {"single", a.count(ObservationStatus::Single)},
                {"straddling", a.count(ObservationStatus::Straddling)},
                {"empty", a.count(ObservationStatus::Empty)}}},
              {"warnings", a.warnings}};
}

inline Json record_json(const TuningRecord& r) {
  return Json{{"cluster", r.cluster}, {"iteration", r.iteration}, {"s_b", r.s_b}, {"s_o", r.s_o}};
}

/// One JSON object per line, one line per (cluster, iteration).
inline void write_trace_jsonl(std::ostream& out, const TuningTrace& trace) {
  for (const auto& r : trace.records) out << record_json(r).dump() << '\n';
}

inline Json trace_summary_json(const TuningTrace& trace) {
  Json skipped = Json::array();
  for (const auto& s : trace.skipped) skipped.push_back({{"cluster", s.cluster}, {"reason", s.reason}});
  return Json{{"converged", trace.converged},
              {"records", trace.records.size()},
              {"skipped", skipped},
              {"cluster_state_counts", trace.cluster_state_counts},
              {"cluster_observation_counts", trace.cluster_observation_counts},
              {"background_scaling", to_json(trace.background_scaling)},
              {"observation_scaling", to_json(trace.observation_scaling)}};
}

// Experiment configuration ------------------------------------------------

inline Json config_json(const twin::ExperimentConfig& c) {
  Json j;
  j["schema"] = kExperimentSchema;
  j["state_cluster_sizes"] = c.state_cluster_sizes;
  j["observation_cluster_sizes"] = c.observation_cluster_sizes;
  j["intra_probability"] = c.intra_probability;
  j["cross_probability"] = c.cross_probability;
  j["shuffle"] = c.shuffle;
  j["max_resample"] = c.max_resample;
  j["balgovind_length"] = c.balgovind_length;
  j["correlation_indexing"] = c.correlation_indexing == twin::CorrelationIndexing::Planted ? "planted" : "shuffled";
  j["assumed_sigma_b"] = c.assumed_sigma_b;
  j["assumed_sigma_o"] = c.assumed_sigma_o;
  j["grid_min"] = c.grid_min;
  j["grid_max"] = c.grid_max;
  j["grid_points"] = c.grid_points;
  j["grid_spacing"] = c.grid_spacing == twin::GridSpacing::Geometric ? "geometric" : "linear";
  j["observation_ratio"] = c.observation_ratio;
  j["ensemble_pairs"] = c.ensemble_pairs;
  j["repetitions"] = c.repetitions;
  j["q_max"] = c.tuning.q_max;
  j["rel_tol"] = c.tuning.rel_tol;
  j["adjustment_reference"] =
      c.adjustment_reference == AdjustmentReference::EnsembleMean ? "ensemble_mean" : "pair_background";
  if (c.cluster_count == 0)
    j["cluster_count"] = "auto";
  else
    j["cluster_count"] = c.cluster_count;
  j["p_max"] = c.p_max;
  j["seeds_per_p"] = c.seeds_per_p;
  j["elbow_tau"] = c.elbow_tau;
  j["fluid_max_iter"] = c.fluid.max_iter;
  j["fluid_weighted"] = c.fluid.weighted;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

/// Parses a configuration object. Missing keys keep their defaults; the
/// schema key is required; unknown keys are rejected all at once.
inline twin::ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("experiment config must be a JSON object");
  const twin::ExperimentConfig defaults;
  const Json known = config_json(defaults);
  std::vector<std::string> unknown;
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) unknown.push_back(k);
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw FormatError(msg);
  }
  if (!j.contains("schema")) throw FormatError(std::string("config is missing the 'schema' key (expected \"") + kExperimentSchema + "\")");
  if (!j["schema"].is_string() || j["schema"].get<std::string>() != kExperimentSchema)
    throw FormatError(std::string("unsupported config schema ") + j["schema"].dump() + " (expected \"" + kExperimentSchema + "\")");

  twin::ExperimentConfig c = defaults;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    } catch (const Json::exception&) {
      throw FormatError(std::string("config key '") + key + "' has the wrong type: " + j.at(key).dump());
    }
  };
  auto get_choice = [&](const char* key, std::initializer_list<const char*> choices) -> std::string {
    std::string v;
    get(key, v);
    for (const char* ch : choices)
      if (v == ch) return v;
    std::string msg = std::string("config key '") + key + "' must be one of:";
    for (const char* ch : choices) msg += std::string(" ") + ch;
    throw FormatError(msg);
  };

  get("state_cluster_sizes", c.state_cluster_sizes);
  get("observation_cluster_sizes", c.observation_cluster_sizes);
  get("intra_probability", c.intra_probability);
  get("cross_probability", c.cross_probability);
  get("shuffle", c.shuffle);
  get("max_resample", c.max_resample);
  get("balgovind_length", c.balgovind_length);
  if (j.contains("correlation_indexing"))
    c.correlation_indexing = get_choice("correlation_indexing", {"planted", "shuffled"}) == "planted"
                                 ? twin::CorrelationIndexing::Planted
                                 : twin::CorrelationIndexing::Shuffled;
  get("assumed_sigma_b", c.assumed_sigma_b);
  get("assumed_sigma_o", c.assumed_sigma_o);
  get("grid_min", c.grid_min);
  get("grid_max", c.grid_max);
  get("grid_points", c.grid_points);
  if (j.contains("grid_spacing"))
    c.grid_spacing = get_choice("grid_spacing", {"geometric", "linear"}) == "geometric" ? twin::GridSpacing::Geometric
                                                                                     : twin::GridSpacing::Linear;
  get("observation_ratio", c.observation_ratio);
  get("ensemble_pairs", c.ensemble_pairs);
  get("repetitions", c.repetitions);
  get("q_max", c.tuning.q_max);
  get("rel_tol", c.tuning.rel_tol);
  if (j.contains("adjustment_reference"))
    c.adjustment_reference = get_choice("adjustment_reference", {"ensemble_mean", "pair_background"}) == "ensemble_mean"
                                 ? AdjustmentReference::EnsembleMean
                                 : AdjustmentReference::PairBackground;
  if (j.contains("cluster_count")) {
    const Json& v = j["cluster_count"];
    if (v.is_string() && v.get<std::string>() == "auto")
      c.cluster_count = 0;
    else if (v.is_number_integer() && v.get<int>() >= 1)
      c.cluster_count = v.get<int>();
    else
      throw FormatError("config key 'cluster_count' must be \"auto\" or a positive integer");
  }
  get("p_max", c.p_max);
  get("seeds_per_p", c.seeds_per_p);
  get("elbow_tau", c.elbow_tau);
  get("fluid_max_iter", c.fluid.max_iter);
  get("fluid_weighted", c.fluid.weighted);
  get("seed", c.seed);
  get("workers", c.workers);
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
  return c;
}

// Gain grids ----------------------------------------------------------------

inline void write_gain_csv(std::ostream& out, const twin::GainReport& r) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "sigma_bE,sigma_oE,gamma_B_reduction,gamma_R_reduction,gamma_B_adjustment,gamma_R_adjustment,"
         "se_gamma_B_reduction,se_gamma_R_reduction,se_gamma_B_adjustment,se_gamma_R_adjustment\n";
  for (const auto& c : r.cells) {
    out << c.sigma_b << ',' << c.sigma_o;
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < 2; ++k) out << ',' << c.gamma[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < 2; ++k) out << ',' << c.gamma_se[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
    out << '\n';
  }
}

namespace detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json strategy_pair(const std::array<double, 2>& v) {
  return Json{{"B", number_or_null(v[0])}, {"R", number_or_null(v[1])}};
}

}  // namespace detail

/// Partition statistics, quadrant means and per-cell raw values.
inline Json gain_summary_json(const twin::GainReport& r) {
  Json table1 = Json::array();
  for (std::size_t c = 0; c < r.detected_sizes.size(); ++c)
    table1.push_back({{"cluster", c + 1},
                      {"states", r.detected_sizes[c]},
                      {"observations_reduction", c < r.reduction_observations.size() ? r.reduction_observations[c] : 0},
                      {"observations_adjustment", c < r.adjustment_observations.size() ? r.adjustment_observations[c] : 0}});
  Json quadrants = Json::array();
  for (const auto& q : r.quadrants)
    quadrants.push_back({{"sigma_b", q.background_under ? "assumed_below_exact" : "assumed_above_exact"},
                         {"sigma_o", q.observation_under ? "assumed_below_exact" : "assumed_above_exact"},
                         {"cells", q.cells},
                         {"reduction", detail::strategy_pair(q.gamma[0])},
                         {"adjustment", detail::strategy_pair(q.gamma[1])}});
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json delta = Json::object(), delta_se = Json::object();
    for (int m = 0; m < twin::kMethods; ++m) {
      delta[twin::kMethodNames[m]] = detail::strategy_pair(c.delta_mean[static_cast<std::size_t>(m)]);
      delta_se[twin::kMethodNames[m]] = detail::strategy_pair(c.delta_se[static_cast<std::size_t>(m)]);
    }
    cells.push_back({{"i", c.i},
                     {"j", c.j},
                     {"sigma_bE", c.sigma_b},
                     {"sigma_oE", c.sigma_o},
                     {"valid_repetitions", c.valid_repetitions},
                     {"gamma", {{"reduction", detail::strategy_pair(c.gamma[0])}, {"adjustment", detail::strategy_pair(c.gamma[1])}}},
                     {"gamma_se",
                      {{"reduction", detail::strategy_pair(c.gamma_se[0])}, {"adjustment", detail::strategy_pair(c.gamma_se[1])}}},
                     {"delta", delta},
                     {"delta_se", delta_se},
                     {"errors", c.errors}});
  }
  return Json{{"partition",
               {{"p", r.chosen_clusters},
                {"performance", r.detected_performance},
                {"misassigned_states", r.misassigned_states},
                {"curve", performance_curve_json(r.performance_curve)},
                {"clusters", table1}}},
              {"grid", r.grid},
              {"quadrants", quadrants},
              {"error_count", r.error_count},
              {"cells", cells}};
}

}  // namespace covloc::report
