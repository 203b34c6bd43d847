#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "covloc/error.hpp"
#include "covloc/random.hpp"

namespace covloc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using StateVector = Vector;
using ObservationVector = Vector;

namespace detail {

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

inline bool is_symmetric(const Eigen::Ref<const Matrix>& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 1; i < m.rows(); ++i)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
  return true;
}

}  // namespace detail

/// Escalating diagonal jitter used when a Cholesky factorization fails.
/// Jitter starts at max_relative / growth^max_escalations times the largest
/// diagonal entry and grows by `growth` until it reaches max_relative.
struct JitterPolicy {
  double max_relative = 1e-8;
  double growth = 10.0;
  int max_escalations = 3;

  static JitterPolicy none() { return {0.0, 10.0, 0}; }
};

struct CholeskyFactor {
  Matrix lower;
  double jitter = 0.0;  // absolute amount added to the diagonal
  int attempts = 1;     // 1 = succeeded without jitter
};

/// Lower-triangular L with L L^T = cov (+ jitter on the diagonal if needed).
inline CholeskyFactor factor_covariance(const Eigen::Ref<const Matrix>& cov,
                                        const JitterPolicy& policy = {}) {
  if (cov.rows() != cov.cols() || cov.rows() == 0)
    throw DomainError("factor_covariance: matrix must be square and non-empty");
  if (!detail::all_finite(cov)) throw DomainError("factor_covariance: non-finite entries");
  if (!detail::is_symmetric(cov, 1e-12))
    throw DomainError("factor_covariance: matrix is not symmetric");

  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0, 1};

  const double max_diag = cov.diagonal().maxCoeff();
  if (policy.max_escalations > 0 && policy.max_relative > 0.0 && max_diag > 0.0) {
    double jitter = policy.max_relative * max_diag /
                    std::pow(policy.growth, static_cast<double>(policy.max_escalations));
    Matrix work = cov;
    for (int k = 0; k <= policy.max_escalations; ++k) {
      work.diagonal() = cov.diagonal().array() + jitter;
      llt.compute(work);
      if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter, k + 2};
      jitter *= policy.growth;
    }
  }
  std::ostringstream msg;
  msg << "factor_covariance: matrix of order " << cov.rows()
      << " is not positive definite after jitter escalation up to "
      << policy.max_relative << " x max diagonal";
  throw FactorizationError(msg.str());
}

/// Covariance held in decomposed form D^1/2 C D^1/2: a strictly positive
/// variance vector and a symmetric unit-diagonal correlation matrix.
///
/// Tuning only ever touches the variances, so any model derived from a valid
/// one (scaling, restriction) stays positive definite.
class CovarianceModel {
 public:
  CovarianceModel() = default;

  /// Validates every invariant, including positive definiteness of the
  /// composed matrix (Cholesky with the default jitter policy).
  CovarianceModel(Vector variances, Matrix correlation)
      : variances_(std::move(variances)), correlation_(std::move(correlation)) {
    const Index n = variances_.size();
    if (n == 0) throw DomainError("CovarianceModel: empty model");
    if (correlation_.rows() != n || correlation_.cols() != n)
      throw DomainError("CovarianceModel: correlation size does not match variances");
    if (!variances_.allFinite() || !correlation_.allFinite())
      throw DomainError("CovarianceModel: non-finite entries");
    if ((variances_.array() <= 0.0).any())
      throw DomainError("CovarianceModel: variances must be strictly positive");
    if (!detail::is_symmetric(correlation_, 1e-12))
      throw DomainError("CovarianceModel: correlation is not symmetric");
    if (((correlation_.diagonal().array() - 1.0).abs() > 1e-12).any())
      throw DomainError("CovarianceModel: correlation must have a unit diagonal");
    factor_covariance(compose());
  }

  static CovarianceModel homogeneous(double sigma, Matrix correlation) {
    const Index n = correlation.rows();
    return CovarianceModel(Vector::Constant(n, sigma * sigma), std::move(correlation));
  }

  Index size() const noexcept { return variances_.size(); }
  const Vector& variances() const noexcept { return variances_; }
  const Matrix& correlation() const noexcept { return correlation_; }

  Matrix compose() const {
    const Vector sd = variances_.array().sqrt();
    return sd.asDiagonal() * correlation_ * sd.asDiagonal();
  }

  void scale_variances(double factor) {
    check_scale(factor);
    variances_ *= factor;
  }

  void scale_variances(std::span<const Index> indices, double factor) {
    check_scale(factor);
    for (Index i : indices) variances_(i) *= factor;
  }

  /// Multiply variances entrywise (a diagonal scaling D).
  void scale_variances(const Vector& factors) {
    if (factors.size() != size()) throw DomainError("scale_variances: size mismatch");
    if ((factors.array() <= 0.0).any() || !factors.allFinite())
      throw DomainError("scale_variances: factors must be positive and finite");
    variances_.array() *= factors.array();
  }

  /// Phi M Phi^T for the selection of `indices`. The sub-correlation keeps
  /// a unit diagonal and the sub-covariance is a principal submatrix, so no
  /// revalidation is needed.
  CovarianceModel restrict(std::span<const Index> indices) const {
    const auto k = static_cast<Index>(indices.size());
    CovarianceModel out;
    out.variances_.resize(k);
    out.correlation_.resize(k, k);
    for (Index a = 0; a < k; ++a) {
      out.variances_(a) = variances_(indices[a]);
      for (Index b = 0; b < k; ++b) out.correlation_(a, b) = correlation_(indices[a], indices[b]);
    }
    return out;
  }

  friend bool operator==(const CovarianceModel& a, const CovarianceModel& b) {
    return a.variances_.size() == b.variances_.size() &&
           a.correlation_.rows() == b.correlation_.rows() &&
           a.variances_ == b.variances_ && a.correlation_ == b.correlation_;
  }

 private:
  static void check_scale(double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor))
      throw DomainError("scale_variances: factor must be positive and finite");
  }

  Vector variances_;
  Matrix correlation_;
};

inline Matrix compose_covariance(const CovarianceModel& model) { return model.compose(); }

/// Draws mean + L z with z standard normal. One sampler per stream; derive
/// per-stream seeds with derive_seed().
class GaussianSampler {
 public:
  GaussianSampler(Vector mean, Matrix factor, std::uint64_t seed)
      : mean_(std::move(mean)), factor_(std::move(factor)), rng_(seed) {
    if (factor_.rows() != mean_.size() || factor_.cols() != mean_.size())
      throw DomainError("GaussianSampler: factor dimensions do not match mean");
  }

  Index dimension() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& factor() const noexcept { return factor_; }

  Vector draw() {
    Vector z(mean_.size());
    for (Index i = 0; i < z.size(); ++i) z(i) = rng_.normal();
    return mean_ + factor_.triangularView<Eigen::Lower>() * z;
  }

  std::vector<Vector> sample(std::size_t count) {
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(draw());
    return out;
  }

 private:
  Vector mean_;
  Matrix factor_;
  Rng rng_;
};

inline std::vector<Vector> sample_gaussian(GaussianSampler& sampler, std::size_t count) {
  return sampler.sample(count);
}

/// Balgovind (Matern nu = 3/2) correlation on a 1-D index line:
/// C_ij = (1 + r/L) exp(-r/L), r = |i - j|.
inline Matrix balgovind_correlation(Index n, double length_scale) {
  if (n < 1) throw DomainError("balgovind_correlation: n must be at least 1");
  if (!(length_scale > 0.0) || !std::isfinite(length_scale))
    throw DomainError("balgovind_correlation: length scale must be positive");
  Vector by_lag(n);
  for (Index r = 0; r < n; ++r) {
    const double x = static_cast<double>(r) / length_scale;
    by_lag(r) = (1.0 + x) * std::exp(-x);
  }
  Matrix c(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) c(i, j) = by_lag(std::abs(i - j));
  return c;
}

}  // namespace covloc
