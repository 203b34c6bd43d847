#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "covloc/core.hpp"

namespace covloc {

/// A set of (background, observation) pairs sharing one observation operator.
struct InnovationPair {
  StateVector background;
  ObservationVector observation;
};

class InnovationEnsemble {
 public:
  InnovationEnsemble() = default;
  explicit InnovationEnsemble(std::vector<InnovationPair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw DomainError("InnovationEnsemble: at least one pair is required");
    const Index nx = pairs_.front().background.size();
    const Index ny = pairs_.front().observation.size();
    if (nx == 0 || ny == 0) throw DomainError("InnovationEnsemble: empty vectors");
    for (const auto& p : pairs_) {
      if (p.background.size() != nx || p.observation.size() != ny)
        throw DomainError("InnovationEnsemble: inconsistent dimensions across pairs");
      if (!p.background.allFinite() || !p.observation.allFinite())
        throw DomainError("InnovationEnsemble: non-finite entries");
    }
  }

  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  Index state_size() const { return pairs_.front().background.size(); }
  Index observation_size() const { return pairs_.front().observation.size(); }
  const std::vector<InnovationPair>& pairs() const noexcept { return pairs_; }
  const InnovationPair& operator[](std::size_t k) const { return pairs_[k]; }

  StateVector background_mean() const {
    StateVector mean = StateVector::Zero(state_size());
    for (const auto& p : pairs_) mean += p.background;
    return mean / static_cast<double>(pairs_.size());
  }

 private:
  std::vector<InnovationPair> pairs_;
};

struct AnalysisResult {
  StateVector analysis;
  Matrix gain;
  double cost_background = 0.0;   // J_b(x_a)
  double cost_observation = 0.0;  // J_o(x_a)
};

/// Linear analysis system for fixed (B, R, H): holds the gain and the
/// Cholesky factors of B and R used for the cost quadratic forms.
class LinearAnalysis {
 public:
  LinearAnalysis(const Matrix& background_cov, const Matrix& observation_cov, const Matrix& op)
      : h_(op) {
    const Index nx = op.cols();
    const Index ny = op.rows();
    if (background_cov.rows() != nx || background_cov.cols() != nx)
      throw DomainError("LinearAnalysis: B dimensions do not match H columns");
    if (observation_cov.rows() != ny || observation_cov.cols() != ny)
      throw DomainError("LinearAnalysis: R dimensions do not match H rows");

    // K^T = S^-1 H B with S = H B H^T + R.
    const Matrix hb = op * background_cov;
    Matrix innovation_cov = hb * op.transpose() + observation_cov;
    innovation_cov = 0.5 * (innovation_cov + innovation_cov.transpose());
    Eigen::LLT<Matrix> llt(innovation_cov);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(innovation_cov, Eigen::EigenvaluesOnly);
      const auto& ev = eig.eigenvalues();
      const double lo = ev.minCoeff();
      const double hi = ev.cwiseAbs().maxCoeff();
      const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
      std::ostringstream msg;
      msg << "kalman_gain: innovation covariance H B H^T + R is singular or indefinite "
          << "(min eigenvalue " << lo << ", condition estimate " << cond << ")";
      throw NumericalError(msg.str(), cond);
    }
    gain_ = llt.solve(hb).transpose();

    b_lower_ = factor_covariance(background_cov).lower;
    r_lower_ = factor_covariance(observation_cov).lower;
  }

  const Matrix& gain() const noexcept { return gain_; }

  double trace_kh() const { return (gain_.array() * h_.transpose().array()).sum(); }
  double trace_hk() const { return (h_.array() * gain_.transpose().array()).sum(); }
  double trace_i_minus_hk() const { return static_cast<double>(h_.rows()) - trace_hk(); }

  AnalysisResult analyze(const StateVector& background, const ObservationVector& observation) const {
    AnalysisResult out;
    out.analysis = analysis(background, observation);
    out.gain = gain_;
    const auto [jb, jo] = costs(background, observation, out.analysis);
    out.cost_background = jb;
    out.cost_observation = jo;
    return out;
  }

  StateVector analysis(const StateVector& background, const ObservationVector& observation) const {
    check_sizes(background, observation);
    return background + gain_ * (observation - h_ * background);
  }

  /// (J_b(x_a), J_o(x_a)) with J_o evaluated on the analysis residual y - H x_a.
  std::pair<double, double> costs(const StateVector& background, const ObservationVector& observation,
                                  const StateVector& analysis) const {
    const Vector increment = analysis - background;
    const Vector residual = observation - h_ * analysis;
    return {0.5 * quadratic_form(b_lower_, increment), 0.5 * quadratic_form(r_lower_, residual)};
  }

 private:
  // v^T M^-1 v through the factor M = L L^T: |L^-1 v|^2.
  static double quadratic_form(const Matrix& lower, const Vector& v) {
    return lower.triangularView<Eigen::Lower>().solve(v).squaredNorm();
  }

  void check_sizes(const StateVector& background, const ObservationVector& observation) const {
    if (background.size() != h_.cols() || observation.size() != h_.rows())
      throw DomainError("blue_analysis: vector dimensions do not match H");
  }

  Matrix h_;
  Matrix gain_;
  Matrix b_lower_;
  Matrix r_lower_;
};

/// K = B H^T (H B H^T + R)^-1, via a Cholesky solve of the innovation covariance.
inline Matrix kalman_gain(const Matrix& background_cov, const Matrix& observation_cov, const Matrix& op) {
  return LinearAnalysis(background_cov, observation_cov, op).gain();
}

inline AnalysisResult blue_analysis(const StateVector& background, const ObservationVector& observation,
                                    const Matrix& background_cov, const Matrix& observation_cov,
                                    const Matrix& op) {
  if (!background.allFinite() || !observation.allFinite())
    throw DomainError("blue_analysis: non-finite input vector");
  return LinearAnalysis(background_cov, observation_cov, op).analyze(background, observation);
}

struct TraceIdentities {
  double trace_kh = 0.0;         // Tr(K H), n_x x n_x
  double trace_i_minus_hk = 0.0; // Tr(I - H K), n_y x n_y
};

inline TraceIdentities trace_identities(const Matrix& background_cov, const Matrix& observation_cov,
                                        const Matrix& op) {
  const LinearAnalysis sys(background_cov, observation_cov, op);
  return {sys.trace_kh(), sys.trace_i_minus_hk()};
}

}  // namespace covloc
