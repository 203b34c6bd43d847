#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "covloc/localize.hpp"
#include "generators.hpp"
#include "nine_state.hpp"
#include "oracles.hpp"

using namespace covloc;

namespace {

using Status = ObservationStatus;

Matrix block_diagonal_operator() {
  Matrix h = Matrix::Zero(4, 6);
  h(0, 0) = h(0, 1) = 1.0;
  h(1, 2) = 2.0;
  h(2, 3) = h(2, 5) = 0.5;
  h(3, 4) = 1.0;
  return h;
}

ClusterPartition block_partition() { return ClusterPartition({1, 1, 1, 2, 2, 2}, 2); }

}  // namespace

TEST(Classify, NineStateExample) {
  const auto a = classify_observations(nine_state::op(), nine_state::partition());
  ASSERT_EQ(a.rows.size(), 4u);
  EXPECT_EQ(a.rows[0].status, Status::Single);
  EXPECT_EQ(a.rows[0].strongest, 1);
  EXPECT_EQ(a.rows[3].status, Status::Single);
  EXPECT_EQ(a.rows[3].strongest, 2);
  EXPECT_EQ(a.rows[1].status, Status::Straddling);
  EXPECT_EQ(a.rows[1].clusters, (std::vector<int>{1, 2}));
  EXPECT_EQ(a.rows[1].strongest, 1);
  EXPECT_EQ(a.rows[2].status, Status::Straddling);
  EXPECT_EQ(a.rows[2].strongest, 2);
  EXPECT_TRUE(a.warnings.empty());
}

TEST(Classify, ZeroRowIsEmptyWithWarning) {
  Matrix h = nine_state::op();
  h.row(2).setZero();
  const auto a = classify_observations(h, nine_state::partition());
  EXPECT_EQ(a.rows[2].status, Status::Empty);
  EXPECT_EQ(a.rows[2].strongest, 0);
  EXPECT_EQ(a.warnings.size(), 1u);
  EXPECT_EQ(a.count(Status::Empty), 1u);
}

TEST(Classify, TieGoesToLowerCluster) {
  Matrix h(1, 4);
  h << 0, 1, 0, 1;
  const auto a = classify_observations(h, ClusterPartition({1, 2, 1, 1}, 2));
  EXPECT_EQ(a.rows[0].strongest, 1);
}

TEST(Classify, PartitionSizeMismatch) {
  EXPECT_THROW(classify_observations(nine_state::op(), ClusterPartition({1, 2}, 2)), DomainError);
}

TEST(Reduce, NineStateKeepsUnambiguousRows) {
  const auto r = reduce_observations(nine_state::op(), nine_state::partition());
  EXPECT_EQ(r.kept.indices(), (std::vector<Index>{0, 3}));
  Matrix expected(2, 9);
  expected << 1, 1, 1, 1, 0, 0, 0, 0, 0,
              0, 0, 0, 0, 1, 1, 0, 1, 1;
  EXPECT_EQ(r.reduced_operator, 0.25 * expected);
  ASSERT_EQ(r.clusters.size(), 2u);
  EXPECT_EQ(r.clusters[0].indices(), (std::vector<Index>{0}));
  EXPECT_EQ(r.clusters[1].indices(), (std::vector<Index>{3}));
}

TEST(Reduce, NoStraddlersKeepsEverything) {
  const auto r = reduce_observations(block_diagonal_operator(), block_partition());
  EXPECT_EQ(r.kept.size(), 4);
  EXPECT_EQ(r.reduced_operator, block_diagonal_operator());
}

TEST(Adjust, NineStateAdjustedSystem) {
  const Matrix h = nine_state::op();
  Vector m0 = Vector::LinSpaced(9, 1.0, 9.0), m1 = Vector::LinSpaced(9, 3.0, -5.0);
  const Vector mean = 0.5 * (m0 + m1);
  Vector y(4);
  y << 0.3, -1.2, 2.5, 0.7;
  const auto res = adjust_observations(h, nine_state::partition(), {m0, m1}, y);

  EXPECT_DOUBLE_EQ(res.adjusted_observation(0), y(0));
  EXPECT_DOUBLE_EQ(res.adjusted_observation(1), y(1) - 0.25 * mean(5));
  EXPECT_DOUBLE_EQ(res.adjusted_observation(2), y(2) - 0.25 * mean(3));
  EXPECT_DOUBLE_EQ(res.adjusted_observation(3), y(3));

  Matrix expected(4, 9);
  expected << 1, 1, 1, 1, 0, 0, 0, 0, 0,
              0, 1, 1, 1, 0, 0, 0, 0, 0,
              0, 0, 0, 0, 0, 1, 1, 1, 0,
              0, 0, 0, 0, 1, 1, 0, 1, 1;
  EXPECT_EQ(res.adjusted_operator, 0.25 * expected);
  EXPECT_EQ(res.clusters[0].indices(), (std::vector<Index>{0, 1}));
  EXPECT_EQ(res.clusters[1].indices(), (std::vector<Index>{2, 3}));
}

TEST(Adjust, NoStraddlersIsIdentity) {
  const Matrix h = block_diagonal_operator();
  Vector y(4);
  y << 1, 2, 3, 4;
  const auto res = adjust_observations(h, block_partition(), {Vector::Ones(6)}, y);
  EXPECT_EQ(res.adjusted_observation, y);
  EXPECT_EQ(res.adjusted_operator, h);
}

TEST(Adjust, EmptyEnsemble) {
  EXPECT_THROW(adjust_observations(nine_state::op(), nine_state::partition(), {}, Vector::Zero(4)), DomainError);
}

TEST(Adjust, EmptyRowExcludedFromEveryCluster) {
  Matrix h = nine_state::op();
  h.row(1).setZero();
  const auto plan = plan_adjustment(h, nine_state::partition());
  for (const auto& c : plan.clusters)
    for (Index l : c.indices()) EXPECT_NE(l, 1);
}

TEST(ExtractSubproblem, AdjustmentAndReductionSelections) {
  const Matrix h = nine_state::op();
  const auto part = nine_state::partition();
  const auto red = reduce_observations(h, part);
  const auto adj = plan_adjustment(h, part);
  const CovarianceModel b(Vector::Ones(9), Matrix::Identity(9, 9));
  const CovarianceModel r(Vector::Ones(4), Matrix::Identity(4, 4));
  const InnovationEnsemble ens({{Vector::LinSpaced(9, 0, 8), Vector::LinSpaced(4, 0, 3)}});

  const auto la = extract_subproblem(1, part, adj.clusters[0], ens, b, r, adj.adjusted_operator);
  EXPECT_EQ(la.observations.indices(), (std::vector<Index>{0, 1}));
  EXPECT_EQ(la.states.indices(), (std::vector<Index>{0, 1, 2, 3}));
  Matrix op1(2, 4);
  op1 << 1, 1, 1, 1,
         0, 1, 1, 1;
  EXPECT_EQ(la.op, 0.25 * op1);
  EXPECT_EQ(la.background.compose(), Matrix::Identity(4, 4));
  EXPECT_EQ(la.ensemble[0].observation, Vector::LinSpaced(2, 0, 1));

  const auto lr = extract_subproblem(1, part, red.clusters[0], ens, b, r, h);
  EXPECT_EQ(lr.observations.indices(), (std::vector<Index>{0}));
  EXPECT_EQ(lr.op, 0.25 * Matrix::Ones(1, 4));
}

TEST(ExtractSubproblem, SelectionMatrices) {
  const SelectionOperator phi({0, 3});
  Matrix expected = Matrix::Zero(2, 4);
  expected(0, 0) = expected(1, 3) = 1.0;
  EXPECT_EQ(phi.matrix(4), expected);
  const Matrix h = nine_state::op();
  const SelectionOperator cols({0, 1, 2, 3});
  EXPECT_EQ(restrict_matrix(h, phi, cols), phi.matrix(4) * h * cols.matrix(9).transpose());
}

TEST(ExtractSubproblem, EmptySelectionIsStrategyError) {
  const auto part = nine_state::partition();
  const CovarianceModel b(Vector::Ones(9), Matrix::Identity(9, 9));
  const CovarianceModel r(Vector::Ones(4), Matrix::Identity(4, 4));
  const InnovationEnsemble ens({{Vector::Zero(9), Vector::Zero(4)}});
  try {
    extract_subproblem(2, part, SelectionOperator(), ens, b, r, nine_state::op());
    FAIL();
  } catch (const StrategyError& e) {
    EXPECT_EQ(e.cluster(), 2);
  }
  EXPECT_THROW(extract_subproblem(3, part, SelectionOperator({0}), ens, b, r, nine_state::op()), DomainError);
}

TEST(SelectionOperator, Validation) {
  EXPECT_THROW(SelectionOperator({2, 1}), DomainError);
  EXPECT_THROW(SelectionOperator({1, 1}), DomainError);
  EXPECT_THROW(SelectionOperator({-1}), DomainError);
  EXPECT_THROW(SelectionOperator({5}).matrix(5), DomainError);
}

TEST(LocalizeProperty, StrategySupportsAndCoverage) {
  for (std::uint64_t t = 0; t < 60; ++t) {
    auto rng = gen::rng_for(30, t);
    const Index nx = gen::size(rng, 2, 60), ny = gen::size(rng, 1, 40);
    const int p = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min<Index>(nx, 5))));
    Matrix h = gen::sparse_operator(rng, ny, nx, gen::log_uniform(rng, 0.02, 0.3));
    if (ny > 1 && rng.bernoulli(0.3)) h.row(0).setZero();
    const ClusterPartition part(gen::labels(rng, nx, p), p);

    const auto red = reduce_observations(h, part);
    for (std::size_t c = 0; c < red.clusters.size(); ++c)
      for (Index l : red.clusters[c].indices())
        for (Index i = 0; i < nx; ++i)
          if (part.label(i) != static_cast<int>(c) + 1) EXPECT_EQ(h(l, i), 0.0) << "case " << t;

    const auto adj = plan_adjustment(h, part);
    std::multiset<Index> assigned;
    for (std::size_t c = 0; c < adj.clusters.size(); ++c)
      for (Index l : adj.clusters[c].indices()) {
        assigned.insert(l);
        for (Index i = 0; i < nx; ++i)
          if (part.label(i) != static_cast<int>(c) + 1) EXPECT_EQ(adj.adjusted_operator(l, i), 0.0);
      }
    EXPECT_EQ(adj.adjusted_operator + adj.correction_operator, h);
    for (Index l = 0; l < ny; ++l) {
      const bool empty = h.row(l).isZero(0.0);
      EXPECT_EQ(assigned.count(l), empty ? 0u : 1u) << "case " << t << " row " << l;
    }
  }
}

TEST(LocalizeProperty, RestrictedCovariancesStayPositiveDefinite) {
  for (std::uint64_t t = 0; t < 30; ++t) {
    auto rng = gen::rng_for(31, t);
    const Index nx = gen::size(rng, 3, 50), ny = gen::size(rng, 2, 30);
    const int p = 1 + static_cast<int>(rng.below(3));
    const Matrix h = gen::sparse_operator(rng, ny, nx, 0.1);
    const ClusterPartition part(gen::labels(rng, nx, std::min<int>(p, static_cast<int>(nx))), std::min<int>(p, static_cast<int>(nx)));
    const CovarianceModel b = gen::covariance(rng, nx), r = gen::covariance(rng, ny);
    const InnovationEnsemble ens({{gen::normal_vector(rng, nx), gen::normal_vector(rng, ny)}});
    const auto adj = plan_adjustment(h, part);
    for (int c = 1; c <= part.cluster_count(); ++c) {
      const auto& sel = adj.clusters[static_cast<std::size_t>(c - 1)];
      if (sel.empty()) continue;
      const auto lp = extract_subproblem(c, part, sel, ens, b, r, adj.adjusted_operator);
      EXPECT_NO_THROW(factor_covariance(lp.background.compose(), JitterPolicy::none())) << "case " << t;
      EXPECT_NO_THROW(factor_covariance(lp.observation.compose(), JitterPolicy::none())) << "case " << t;
      EXPECT_TRUE(lp.background.compose().isApprox(lp.background.compose().transpose(), 1e-14));
    }
  }
}

TEST(LocalizeProperty, AdjustedResidualIsUnbiased) {
  // Backgrounds scattered around the truth: E[y^ - H^ x_t] = 0 row by row.
  const Matrix h = nine_state::op();
  const auto plan = plan_adjustment(h, nine_state::partition());
  Rng rng(2024);
  const Vector xt = Vector::LinSpaced(9, -2.0, 3.0);
  const int trials = 4000;
  std::vector<std::vector<double>> res(4);
  for (int k = 0; k < trials; ++k) {
    std::vector<Vector> ensemble;
    for (int m = 0; m < 5; ++m) ensemble.push_back(xt + gen::normal_vector(rng, 9, 0.7));
    const Vector y = h * xt + gen::normal_vector(rng, 4, 0.3);
    Vector mean = Vector::Zero(9);
    for (const auto& x : ensemble) mean += x;
    mean /= 5.0;
    const Vector r = plan.adjust(y, mean) - plan.adjusted_operator * xt;
    for (Index l = 0; l < 4; ++l) res[static_cast<std::size_t>(l)].push_back(r(l));
  }
  for (const auto& v : res) {
    const auto m = oracle::mean_se(v);
    EXPECT_LT(std::abs(m.mean), 3 * m.se);
  }
}
