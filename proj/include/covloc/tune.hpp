#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "covloc/assimilate.hpp"
#include "covloc/core.hpp"
#include "covloc/localize.hpp"
#include "covloc/log.hpp"
#include "covloc/netgraph.hpp"

namespace covloc {

struct Di01Indicators {
  double s_b = 0.0;
  double s_o = 0.0;
  double trace_kh = 0.0;
  double trace_i_minus_hk = 0.0;
};

/// s_b = mean(2 J_b(x_a)) / Tr(KH), s_o = mean(2 J_o(x_a)) / Tr(I - HK),
/// the means running over the ensemble under the current (B, R).
inline Di01Indicators di01_step(const InnovationEnsemble& ens, const Matrix& background_cov,
                                const Matrix& observation_cov, const Matrix& op) {
  if (ens.empty()) throw DomainError("di01_step: empty ensemble");
  if (ens.state_size() != op.cols() || ens.observation_size() != op.rows())
    throw DomainError("di01_step: ensemble dimensions do not match H");
  const LinearAnalysis sys(background_cov, observation_cov, op);
  Di01Indicators out;
  out.trace_kh = sys.trace_kh();
  out.trace_i_minus_hk = sys.trace_i_minus_hk();
  if (!(out.trace_kh > 0.0) || !(out.trace_i_minus_hk > 0.0)) {
    std::ostringstream msg;
    msg << "di01_step: non-positive trace denominator (Tr(KH) = " << out.trace_kh
        << ", Tr(I - HK) = " << out.trace_i_minus_hk << ")";
    throw DegenerateError(msg.str());
  }
  double jb = 0.0, jo = 0.0;
  for (const auto& pr : ens.pairs()) {
    const StateVector xa = sys.analysis(pr.background, pr.observation);
    const auto [b, o] = sys.costs(pr.background, pr.observation, xa);
    jb += 2.0 * b;
    jo += 2.0 * o;
  }
  const double n = static_cast<double>(ens.size());
  out.s_b = jb / n / out.trace_kh;
  out.s_o = jo / n / out.trace_i_minus_hk;
  return out;
}

struct TuningOptions {
  int q_max = 10;
  double rel_tol = 1e-3;
};

/// One (cluster, iteration) record; cluster 0 denotes the global system.
struct TuningRecord {
  int cluster = 0;
  int iteration = 0;
  double s_b = 0.0;
  double s_o = 0.0;
};

struct SkippedCluster {
  int cluster = 0;
  std::string reason;
};

struct TuningTrace {
  std::vector<TuningRecord> records;
  bool converged = false;
  Vector background_scaling;   // diagonal of the accumulated D_B
  Vector observation_scaling;  // diagonal of the accumulated D_R
  std::vector<SkippedCluster> skipped;
  std::vector<Index> cluster_state_counts;        // |x^i| for localized runs
  std::vector<Index> cluster_observation_counts;  // |y^i| for localized runs
};

/// Raised when an iteration produces s <= 0 or a non-finite s; the partial
/// trace up to the failure is attached.
class TuningAborted : public DegenerateError {
 public:
  TuningAborted(const std::string& what, TuningTrace trace)
      : DegenerateError(what), trace_(std::move(trace)) {}
  const TuningTrace& trace() const noexcept { return trace_; }

 private:
  TuningTrace trace_;
};

struct TuningResult {
  CovarianceModel background;
  CovarianceModel observation;
  TuningTrace trace;
};

namespace detail {

struct SystemScaling {
  double background = 1.0;
  double observation = 1.0;
  bool converged = false;
};

// Iterates DI01 on one (sub)system, scaling working copies of the variances.
// Returns the cumulative products of s_b and s_o.
inline SystemScaling tune_system(const InnovationEnsemble& ens, CovarianceModel background,
                                 CovarianceModel observation, const Matrix& op, const TuningOptions& opts,
                                 int cluster, TuningTrace& trace) {
  SystemScaling out;
  for (int q = 1; q <= opts.q_max; ++q) {
    const Di01Indicators s = di01_step(ens, background.compose(), observation.compose(), op);
    trace.records.push_back({cluster, q, s.s_b, s.s_o});
    if (!(s.s_b > 0.0) || !(s.s_o > 0.0) || !std::isfinite(s.s_b) || !std::isfinite(s.s_o)) {
      std::ostringstream msg;
      msg << "DI01 produced a degenerate scaling (cluster " << cluster << ", iteration " << q
          << ": s_b = " << s.s_b << ", s_o = " << s.s_o << ")";
      throw TuningAborted(msg.str(), trace);
    }
    background.scale_variances(s.s_b);
    observation.scale_variances(s.s_o);
    out.background *= s.s_b;
    out.observation *= s.s_o;
    if (std::max(std::abs(s.s_b - 1.0), std::abs(s.s_o - 1.0)) < opts.rel_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

inline void check_options(const TuningOptions& opts) {
  if (opts.q_max < 1) throw DomainError("tuning: q_max must be at least 1");
  if (!(opts.rel_tol >= 0.0)) throw DomainError("tuning: rel_tol must be non-negative");
}

}  // namespace detail

/// Global DI01: B <- s_b B, R <- s_o R on the variances only, until q_max
/// iterations or max(|s_b - 1|, |s_o - 1|) < rel_tol.
inline TuningResult di01_global(const InnovationEnsemble& ens, const CovarianceModel& background,
                                const CovarianceModel& observation, const Matrix& op,
                                const TuningOptions& opts = {}) {
  detail::check_options(opts);
  if (background.size() != op.cols() || observation.size() != op.rows())
    throw DomainError("di01_global: covariance dimensions do not match H");
  TuningResult out{background, observation, {}};
  const auto scaling = detail::tune_system(ens, background, observation, op, opts, 0, out.trace);
  out.trace.converged = scaling.converged;
  out.trace.background_scaling = Vector::Constant(background.size(), scaling.background);
  out.trace.observation_scaling = Vector::Constant(observation.size(), scaling.observation);
  out.background.scale_variances(out.trace.background_scaling);
  out.observation.scale_variances(out.trace.observation_scaling);
  return out;
}

/// Background estimate subtracted by the adjustment strategy: the mean of
/// the ensemble's backgrounds, or each pair's own background.
enum class AdjustmentReference { EnsembleMean, PairBackground };

/// Precomputed strategy outputs so that repeated localized runs on the same
/// operator and partition skip the classification work.
struct LocalizationPlan {
  Strategy strategy = Strategy::Reduction;
  ClusterPartition partition;
  ObservationAssignment assignment;
  Matrix op;                                // H for reduction, H^ for adjustment
  Matrix correction_operator;               // adjustment only: H - H^
  std::vector<SelectionOperator> clusters;  // observation selection per cluster
  AdjustmentReference reference = AdjustmentReference::EnsembleMean;

  static LocalizationPlan make(const Matrix& full_op, const ClusterPartition& part, Strategy strategy,
                               double zero_tol = 0.0) {
    LocalizationPlan plan;
    plan.strategy = strategy;
    plan.partition = part;
    if (strategy == Strategy::Reduction) {
      ReductionResult red = reduce_observations(full_op, part, zero_tol);
      plan.assignment = std::move(red.assignment);
      plan.op = full_op;
      plan.clusters = std::move(red.clusters);
    } else {
      AdjustmentPlan adj = plan_adjustment(full_op, part, zero_tol);
      plan.assignment = std::move(adj.assignment);
      plan.op = std::move(adj.adjusted_operator);
      plan.correction_operator = std::move(adj.correction_operator);
      plan.clusters = std::move(adj.clusters);
    }
    return plan;
  }

  /// The ensemble as seen by the local systems (adjusted observations for
  /// the adjustment strategy).
  InnovationEnsemble prepare(const InnovationEnsemble& ens) const {
    if (strategy == Strategy::Reduction || correction_operator.isZero(0.0)) return ens;
    const ObservationVector shift = correction_operator * ens.background_mean();
    std::vector<InnovationPair> pairs;
    pairs.reserve(ens.size());
    for (const auto& pr : ens.pairs()) {
      if (reference == AdjustmentReference::PairBackground)
        pairs.push_back({pr.background, pr.observation - correction_operator * pr.background});
      else
        pairs.push_back({pr.background, pr.observation - shift});
    }
    return InnovationEnsemble(std::move(pairs));
  }
};

/// Cluster-localized DI01. Clusters are processed in ascending id; each
/// cluster's accumulated products scale only its own state variances and
/// its own observation variances. A cluster without observations is skipped
/// and left untouched.
inline TuningResult di01_localized(const InnovationEnsemble& ens, const CovarianceModel& background,
                                   const CovarianceModel& observation, const LocalizationPlan& plan,
                                   const TuningOptions& opts = {}) {
  detail::check_options(opts);
  const Matrix& op = plan.op;
  if (background.size() != op.cols() || observation.size() != op.rows())
    throw DomainError("di01_localized: covariance dimensions do not match H");
  if (plan.partition.size() != op.cols())
    throw DomainError("di01_localized: partition does not cover the state indices");

  const InnovationEnsemble local_ens = plan.prepare(ens);
  TuningResult out{background, observation, {}};
  TuningTrace& trace = out.trace;
  trace.background_scaling = Vector::Ones(background.size());
  trace.observation_scaling = Vector::Ones(observation.size());
  trace.converged = true;
  bool any_tuned = false;

  const int p = plan.partition.cluster_count();
  for (int c = 1; c <= p; ++c) {
    const SelectionOperator& ysel = plan.clusters[static_cast<std::size_t>(c - 1)];
    trace.cluster_state_counts.push_back(static_cast<Index>(plan.partition.members(c).size()));
    trace.cluster_observation_counts.push_back(ysel.size());
    LocalProblem lp;
    try {
      lp = extract_subproblem(c, plan.partition, ysel, local_ens, out.background, out.observation, op);
    } catch (const StrategyError& e) {
      trace.skipped.push_back({c, e.what()});
      log::info(std::string("skipping cluster: ") + e.what());
      continue;
    }
    const auto scaling =
        detail::tune_system(lp.ensemble, lp.background, lp.observation, lp.op, opts, c, trace);
    any_tuned = true;
    trace.converged = trace.converged && scaling.converged;
    Vector db = Vector::Ones(background.size());
    Vector dr = Vector::Ones(observation.size());
    for (Index i : lp.states.indices()) db(i) = scaling.background;
    for (Index l : lp.observations.indices()) dr(l) = scaling.observation;
    out.background.scale_variances(db);
    out.observation.scale_variances(dr);
    trace.background_scaling.array() *= db.array();
    trace.observation_scaling.array() *= dr.array();
  }
  if (!any_tuned) trace.converged = false;
  return out;
}

inline TuningResult di01_localized(const InnovationEnsemble& ens, const CovarianceModel& background,
                                   const CovarianceModel& observation, const Matrix& op,
                                   const ClusterPartition& part, Strategy strategy,
                                   const TuningOptions& opts = {}, double zero_tol = 0.0) {
  return di01_localized(ens, background, observation, LocalizationPlan::make(op, part, strategy, zero_tol),
                        opts);
}

}  // namespace covloc
