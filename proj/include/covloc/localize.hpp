#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "covloc/assimilate.hpp"
#include "covloc/core.hpp"
#include "covloc/log.hpp"
#include "covloc/netgraph.hpp"

namespace covloc {

enum class ObservationStatus { Single, Straddling, Empty };

inline const char* to_string(ObservationStatus s) {
  switch (s) {
    case ObservationStatus::Single: return "single";
    case ObservationStatus::Straddling: return "straddling";
    case ObservationStatus::Empty: return "empty";
  }
  return "?";
}

struct ObservationClass {
  ObservationStatus status = ObservationStatus::Empty;
  std::vector<int> clusters;  // touched clusters, ascending
  int strongest = 0;          // 0 when Empty
};

struct ObservationAssignment {
  int cluster_count = 0;
  std::vector<ObservationClass> rows;
  std::vector<std::string> warnings;

  std::size_t count(ObservationStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [s](const auto& r) { return r.status == s; }));
  }
};

/// Domain of dependence of each row against the partition. The strongest
/// cluster carries the largest row mass sum |H_ki| (ties: lowest id).
inline ObservationAssignment classify_observations(const Matrix& op, const ClusterPartition& part,
                                                   double zero_tol = 0.0) {
  if (part.size() != op.cols())
    throw DomainError("classify_observations: partition does not cover the state indices");
  const int p = part.cluster_count();
  ObservationAssignment out;
  out.cluster_count = p;
  out.rows.resize(static_cast<std::size_t>(op.rows()));
  std::vector<double> mass(static_cast<std::size_t>(p) + 1);
  for (Index k = 0; k < op.rows(); ++k) {
    std::fill(mass.begin(), mass.end(), 0.0);
    bool any = false;
    for (Index i = 0; i < op.cols(); ++i) {
      const double a = std::abs(op(k, i));
      if (a > zero_tol) {
        mass[static_cast<std::size_t>(part.label(i))] += a;
        any = true;
      }
    }
    auto& row = out.rows[static_cast<std::size_t>(k)];
    if (!any) {
      row.status = ObservationStatus::Empty;
      std::ostringstream msg;
      msg << "observation " << k << " has an all-zero operator row and is excluded";
      out.warnings.push_back(msg.str());
      log::warn(out.warnings.back());
      continue;
    }
    for (int c = 1; c <= p; ++c) {
      if (mass[static_cast<std::size_t>(c)] > 0.0) {
        row.clusters.push_back(c);
        if (row.strongest == 0 ||
            mass[static_cast<std::size_t>(c)] > mass[static_cast<std::size_t>(row.strongest)])
          row.strongest = c;
      }
    }
    row.status = row.clusters.size() == 1 ? ObservationStatus::Single : ObservationStatus::Straddling;
  }
  return out;
}

/// Ordered subset of indices; realizes the binary selection matrix Phi.
class SelectionOperator {
 public:
  SelectionOperator() = default;
  explicit SelectionOperator(std::vector<Index> indices) : indices_(std::move(indices)) {
    for (std::size_t a = 0; a < indices_.size(); ++a) {
      if (indices_[a] < 0) throw DomainError("SelectionOperator: negative index");
      if (a > 0 && indices_[a] <= indices_[a - 1])
        throw DomainError("SelectionOperator: indices must be strictly increasing");
    }
  }

  const std::vector<Index>& indices() const noexcept { return indices_; }
  Index size() const noexcept { return static_cast<Index>(indices_.size()); }
  bool empty() const noexcept { return indices_.empty(); }

  Matrix matrix(Index full_size) const {
    check_range(full_size);
    Matrix phi = Matrix::Zero(size(), full_size);
    for (Index a = 0; a < size(); ++a) phi(a, indices_[static_cast<std::size_t>(a)]) = 1.0;
    return phi;
  }

  Vector apply(const Vector& v) const {
    check_range(v.size());
    Vector out(size());
    for (Index a = 0; a < size(); ++a) out(a) = v(indices_[static_cast<std::size_t>(a)]);
    return out;
  }

  friend bool operator==(const SelectionOperator&, const SelectionOperator&) = default;

 private:
  void check_range(Index full_size) const {
    if (!indices_.empty() && indices_.back() >= full_size)
      throw DomainError("SelectionOperator: index out of range");
  }

  std::vector<Index> indices_;
};

/// Rows `rows` x columns `cols` of m, i.e. Phi_y M Phi_x^T.
inline Matrix restrict_matrix(const Matrix& m, const SelectionOperator& rows, const SelectionOperator& cols) {
  Matrix out(rows.size(), cols.size());
  for (Index a = 0; a < rows.size(); ++a)
    for (Index b = 0; b < cols.size(); ++b)
      out(a, b) = m(rows.indices()[static_cast<std::size_t>(a)], cols.indices()[static_cast<std::size_t>(b)]);
  return out;
}

enum class Strategy { Reduction, Adjustment };

inline const char* to_string(Strategy s) {
  return s == Strategy::Reduction ? "reduction" : "adjustment";
}

/// Per-cluster observation selections (index c - 1 for cluster c).
struct ReductionResult {
  ObservationAssignment assignment;
  SelectionOperator kept;                  // Single rows, ascending
  Matrix reduced_operator;                 // H~: the kept rows of H
  std::vector<SelectionOperator> clusters; // rows of H whose single cluster is c
};

inline ReductionResult reduce_observations(const Matrix& op, const ClusterPartition& part,
                                           double zero_tol = 0.0) {
  ReductionResult out;
  out.assignment = classify_observations(op, part, zero_tol);
  const int p = part.cluster_count();
  std::vector<Index> kept;
  std::vector<std::vector<Index>> per(static_cast<std::size_t>(p));
  for (Index k = 0; k < op.rows(); ++k) {
    const auto& row = out.assignment.rows[static_cast<std::size_t>(k)];
    if (row.status != ObservationStatus::Single) continue;
    kept.push_back(k);
    per[static_cast<std::size_t>(row.strongest - 1)].push_back(k);
  }
  out.reduced_operator.resize(static_cast<Index>(kept.size()), op.cols());
  for (std::size_t a = 0; a < kept.size(); ++a) out.reduced_operator.row(static_cast<Index>(a)) = op.row(kept[a]);
  out.kept = SelectionOperator(std::move(kept));
  for (auto& v : per) out.clusters.emplace_back(std::move(v));
  return out;
}

/// Structure of the adjustment strategy, independent of observation values:
/// H^ keeps, for every non-empty row, only the entries inside its strongest
/// cluster; the removed part (H - H^) carries the background correction.
struct AdjustmentPlan {
  ObservationAssignment assignment;
  Matrix adjusted_operator;                // H^
  Matrix correction_operator;              // H - H^
  std::vector<SelectionOperator> clusters; // non-empty rows whose strongest cluster is c

  /// y^ = y - (H - H^) E_b[x].
  ObservationVector adjust(const ObservationVector& y, const StateVector& background_mean) const {
    if (y.size() != adjusted_operator.rows() || background_mean.size() != adjusted_operator.cols())
      throw DomainError("adjust_observations: vector dimensions do not match H");
    return y - correction_operator * background_mean;
  }
};

inline AdjustmentPlan plan_adjustment(const Matrix& op, const ClusterPartition& part, double zero_tol = 0.0) {
  AdjustmentPlan out;
  out.assignment = classify_observations(op, part, zero_tol);
  const int p = part.cluster_count();
  out.adjusted_operator = op;
  out.correction_operator = Matrix::Zero(op.rows(), op.cols());
  std::vector<std::vector<Index>> per(static_cast<std::size_t>(p));
  for (Index k = 0; k < op.rows(); ++k) {
    const auto& row = out.assignment.rows[static_cast<std::size_t>(k)];
    if (row.status == ObservationStatus::Empty) continue;
    per[static_cast<std::size_t>(row.strongest - 1)].push_back(k);
    if (row.status != ObservationStatus::Straddling) continue;
    for (Index i = 0; i < op.cols(); ++i) {
      if (part.label(i) != row.strongest) {
        out.correction_operator(k, i) = op(k, i);
        out.adjusted_operator(k, i) = 0.0;
      }
    }
  }
  for (auto& v : per) out.clusters.emplace_back(std::move(v));
  return out;
}

struct AdjustmentResult {
  ObservationVector adjusted_observation;  // y^
  Matrix adjusted_operator;                // H^
  std::vector<SelectionOperator> clusters;
};

inline AdjustmentResult adjust_observations(const Matrix& op, const ClusterPartition& part,
                                            const std::vector<StateVector>& background_ensemble,
                                            const ObservationVector& y, double zero_tol = 0.0) {
  if (background_ensemble.empty()) throw DomainError("adjust_observations: empty background ensemble");
  StateVector mean = StateVector::Zero(op.cols());
  for (const auto& xb : background_ensemble) {
    if (xb.size() != op.cols()) throw DomainError("adjust_observations: ensemble member size mismatch");
    mean += xb;
  }
  mean /= static_cast<double>(background_ensemble.size());
  AdjustmentPlan plan = plan_adjustment(op, part, zero_tol);
  return {plan.adjust(y, mean), std::move(plan.adjusted_operator), std::move(plan.clusters)};
}

/// Cluster subsystem (x_b^i, y^i, B^i, R^i, H^i) for an ensemble of pairs.
struct LocalProblem {
  int cluster = 0;
  SelectionOperator states;
  SelectionOperator observations;
  InnovationEnsemble ensemble;
  CovarianceModel background;
  CovarianceModel observation;
  Matrix op;
};

/// `ensemble` must already carry the strategy's observations (y, or y^ for
/// adjustment) and `op` the strategy's operator (H, H~ laid out on the full
/// row space, or H^).
inline LocalProblem extract_subproblem(int cluster, const ClusterPartition& part,
                                       const SelectionOperator& observation_selection,
                                       const InnovationEnsemble& ensemble, const CovarianceModel& background,
                                       const CovarianceModel& observation, const Matrix& op) {
  if (cluster < 1 || cluster > part.cluster_count())
    throw DomainError("extract_subproblem: cluster id outside 1..p");
  if (observation_selection.empty()) {
    std::ostringstream msg;
    msg << "cluster " << cluster << " has no assigned observations";
    throw StrategyError(msg.str(), cluster);
  }
  if (op.cols() != part.size() || background.size() != op.cols() || observation.size() != op.rows())
    throw DomainError("extract_subproblem: inconsistent dimensions");

  LocalProblem lp;
  lp.cluster = cluster;
  lp.states = SelectionOperator(part.members(cluster));
  lp.observations = observation_selection;
  lp.background = background.restrict(lp.states.indices());
  lp.observation = observation.restrict(lp.observations.indices());
  lp.op = restrict_matrix(op, lp.observations, lp.states);
  std::vector<InnovationPair> pairs;
  pairs.reserve(ensemble.size());
  for (const auto& pr : ensemble.pairs())
    pairs.push_back({lp.states.apply(pr.background), lp.observations.apply(pr.observation)});
  lp.ensemble = InnovationEnsemble(std::move(pairs));
  return lp;
}

}  // namespace covloc
