#pragma once

// Twin experiments: a synthetic clustered observation operator, exact error
// statistics hidden from the tuning methods, and a Monte Carlo grid over the
// exact deviations comparing global and cluster-localized DI01.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "covloc/assimilate.hpp"
#include "covloc/core.hpp"
#include "covloc/localize.hpp"
#include "covloc/log.hpp"
#include "covloc/netgraph.hpp"
#include "covloc/random.hpp"
#include "covloc/tune.hpp"

namespace covloc::twin {

enum class GridSpacing { Geometric, Linear };

// Distance r = |i - j| for the correlation kernels is measured either in the
// planted (pre-shuffle) order, so that correlations travel with the shuffled
// variables, or directly on the shuffled indices.
enum class CorrelationIndexing { Planted, Shuffled };

struct ExperimentConfig {
  std::vector<Index> state_cluster_sizes{50, 50};
  std::vector<Index> observation_cluster_sizes{25, 25};
  double intra_probability = 0.15;
  double cross_probability = 0.01;
  bool shuffle = true;
  int max_resample = 100;

  double balgovind_length = 10.0;
  CorrelationIndexing correlation_indexing = CorrelationIndexing::Planted;
  double assumed_sigma_b = 0.05;
  double assumed_sigma_o = 0.05;
  double grid_min = 0.025;
  double grid_max = 0.1;
  int grid_points = 7;
  GridSpacing grid_spacing = GridSpacing::Geometric;
  double observation_ratio = 10.0;

  int ensemble_pairs = 10;
  int repetitions = 100;
  TuningOptions tuning{10, 1e-3};
  AdjustmentReference adjustment_reference = AdjustmentReference::EnsembleMean;

  // Community detection; cluster_count = 0 selects p automatically.
  int cluster_count = 0;
  int p_max = 6;
  int seeds_per_p = 10;
  double elbow_tau = 0.3;
  FluidOptions fluid{};

  std::uint64_t seed = 20200101;
  int workers = 1;

  Index n_x() const {
    return std::accumulate(state_cluster_sizes.begin(), state_cluster_sizes.end(), Index{0});
  }
  Index n_y() const {
    return std::accumulate(observation_cluster_sizes.begin(), observation_cluster_sizes.end(), Index{0});
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw DomainError("ExperimentConfig: " + m); };
    if (state_cluster_sizes.empty() || state_cluster_sizes.size() != observation_cluster_sizes.size())
      fail("state and observation cluster size lists must be non-empty and of equal length");
    for (Index s : state_cluster_sizes)
      if (s < 1) fail("state cluster sizes must be positive");
    for (Index s : observation_cluster_sizes)
      if (s < 1) fail("observation cluster sizes must be positive");
    if (!(intra_probability >= 0.0 && intra_probability <= 1.0) ||
        !(cross_probability >= 0.0 && cross_probability <= 1.0))
      fail("probabilities must lie in [0, 1]");
    if (!(balgovind_length > 0.0)) fail("balgovind_length must be positive");
    if (!(assumed_sigma_b > 0.0) || !(assumed_sigma_o > 0.0)) fail("assumed deviations must be positive");
    if (!(grid_min > 0.0) || !(grid_max >= grid_min)) fail("grid bounds must satisfy 0 < min <= max");
    if (grid_points < 1) fail("grid_points must be positive");
    if (!(observation_ratio > 0.0)) fail("observation_ratio must be positive");
    if (ensemble_pairs < 1 || repetitions < 1) fail("ensemble_pairs and repetitions must be positive");
    if (tuning.q_max < 1 || !(tuning.rel_tol >= 0.0)) fail("invalid tuning options");
    if (cluster_count < 0 || cluster_count > n_x()) fail("cluster_count must be 0 (auto) or in 1..n_x");
    if (cluster_count == 0 && (p_max < 2 || p_max >= n_x())) fail("p_max must satisfy 2 <= p_max < n_x");
    if (seeds_per_p < 1) fail("seeds_per_p must be positive");
    if (workers < 1) fail("workers must be positive");
    if (max_resample < 1) fail("max_resample must be positive");
  }

  std::vector<double> grid() const {
    std::vector<double> g(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k) {
      const double t = grid_points == 1 ? 0.0 : static_cast<double>(k) / (grid_points - 1);
      g[static_cast<std::size_t>(k)] = grid_spacing == GridSpacing::Geometric
                                           ? grid_min * std::pow(grid_max / grid_min, t)
                                           : grid_min + (grid_max - grid_min) * t;
    }
    return g;
  }
};

/// Generated operator with its planted structure. Labels refer to the
/// shuffled (returned) index order; state_perm[c] / observation_perm[r] give
/// the unshuffled index of column c / row r.
struct TwinJacobian {
  Matrix op;
  ClusterPartition planted_states;
  std::vector<int> planted_observations;
  std::vector<Index> state_perm;
  std::vector<Index> observation_perm;
  int attempts = 1;
};

/// Binary H with Pr(H_kj = 1) = intra_probability inside the diagonal blocks
/// and cross_probability elsewhere, then rows and columns permuted jointly
/// with their planted labels. Draws with an all-zero row are rejected and
/// redrawn from the next sub-seed.
inline TwinJacobian generate_jacobian(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Index nx = cfg.n_x(), ny = cfg.n_y();
  std::vector<int> state_label, obs_label;
  for (std::size_t c = 0; c < cfg.state_cluster_sizes.size(); ++c)
    state_label.insert(state_label.end(), static_cast<std::size_t>(cfg.state_cluster_sizes[c]),
                       static_cast<int>(c) + 1);
  for (std::size_t c = 0; c < cfg.observation_cluster_sizes.size(); ++c)
    obs_label.insert(obs_label.end(), static_cast<std::size_t>(cfg.observation_cluster_sizes[c]),
                     static_cast<int>(c) + 1);

  for (int attempt = 0; attempt < cfg.max_resample; ++attempt) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
    Matrix raw = Matrix::Zero(ny, nx);
    for (Index k = 0; k < ny; ++k)
      for (Index j = 0; j < nx; ++j) {
        const bool intra = obs_label[static_cast<std::size_t>(k)] == state_label[static_cast<std::size_t>(j)];
        if (rng.bernoulli(intra ? cfg.intra_probability : cfg.cross_probability)) raw(k, j) = 1.0;
      }
    bool empty_row = false;
    for (Index k = 0; k < ny && !empty_row; ++k) empty_row = raw.row(k).isZero(0.0);
    if (empty_row) continue;

    TwinJacobian out;
    out.attempts = attempt + 1;
    out.state_perm.resize(static_cast<std::size_t>(nx));
    out.observation_perm.resize(static_cast<std::size_t>(ny));
    std::iota(out.state_perm.begin(), out.state_perm.end(), Index{0});
    std::iota(out.observation_perm.begin(), out.observation_perm.end(), Index{0});
    if (cfg.shuffle) {
      rng.shuffle(std::span<Index>(out.state_perm));
      rng.shuffle(std::span<Index>(out.observation_perm));
    }
    out.op.resize(ny, nx);
    std::vector<int> shuffled_states(static_cast<std::size_t>(nx));
    out.planted_observations.resize(static_cast<std::size_t>(ny));
    for (Index c = 0; c < nx; ++c)
      shuffled_states[static_cast<std::size_t>(c)] =
          state_label[static_cast<std::size_t>(out.state_perm[static_cast<std::size_t>(c)])];
    for (Index r = 0; r < ny; ++r) {
      const Index src = out.observation_perm[static_cast<std::size_t>(r)];
      out.planted_observations[static_cast<std::size_t>(r)] = obs_label[static_cast<std::size_t>(src)];
      for (Index c = 0; c < nx; ++c) out.op(r, c) = raw(src, out.state_perm[static_cast<std::size_t>(c)]);
    }
    out.planted_states =
        ClusterPartition(std::move(shuffled_states), static_cast<int>(cfg.state_cluster_sizes.size()));
    return out;
  }
  throw DomainError("generate_jacobian: no valid operator after max_resample draws");
}

/// Per-cluster observation deviations with geometric mean sigma_o and
/// first-to-last ratio `ratio` (for two clusters: sigma_o*sqrt(ratio),
/// sigma_o/sqrt(ratio)).
inline std::vector<double> observation_deviations(double sigma_o, double ratio, std::size_t clusters) {
  if (!(sigma_o > 0.0) || !(ratio > 0.0) || clusters == 0)
    throw DomainError("observation_deviations: invalid arguments");
  std::vector<double> out(clusters, sigma_o);
  if (clusters == 1) return out;
  const double k = static_cast<double>(clusters - 1);
  for (std::size_t c = 0; c < clusters; ++c)
    out[c] = sigma_o * std::pow(ratio, (0.5 * k - static_cast<double>(c)) / k);
  return out;
}

struct ExactCovariances {
  CovarianceModel background;
  CovarianceModel observation;
};

inline ExactCovariances exact_covariances(const ExperimentConfig& cfg, const TwinJacobian& jac,
                                          const Matrix& background_corr, const Matrix& observation_corr,
                                          double sigma_b, double sigma_o) {
  if (!(sigma_b > 0.0) || !(sigma_o > 0.0)) throw DomainError("exact_covariances: deviations must be positive");
  const auto devs = observation_deviations(sigma_o, cfg.observation_ratio, cfg.observation_cluster_sizes.size());
  Vector r_var(cfg.n_y());
  for (Index r = 0; r < r_var.size(); ++r) {
    const double s = devs[static_cast<std::size_t>(jac.planted_observations[static_cast<std::size_t>(r)] - 1)];
    r_var(r) = s * s;
  }
  return {CovarianceModel::homogeneous(sigma_b, background_corr), CovarianceModel(r_var, observation_corr)};
}

/// Draws pairs x_b = x_t + e_b, y = H x_t + e_y with e_b ~ N(0, B_E),
/// e_y ~ N(0, R_E). Background and observation errors use separate streams.
inline InnovationEnsemble draw_pairs(const Matrix& op, const Matrix& background_factor,
                                     const Matrix& observation_factor, const StateVector& truth, int count,
                                     std::uint64_t seed) {
  GaussianSampler eb(Vector::Zero(op.cols()), background_factor, derive_seed(seed, {0}));
  GaussianSampler ey(Vector::Zero(op.rows()), observation_factor, derive_seed(seed, {1}));
  const ObservationVector ht = op * truth;
  std::vector<InnovationPair> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Vector xb = truth + eb.draw();
    Vector y = ht + ey.draw();
    pairs.push_back({std::move(xb), std::move(y)});
  }
  return InnovationEnsemble(std::move(pairs));
}

struct TwinEnsemble {
  InnovationEnsemble ensemble;
  CovarianceModel exact_background;
  CovarianceModel exact_observation;
};

/// Balgovind correlation over the (possibly shuffled) index set: entry
/// (a, b) uses the distance between perm[a] and perm[b] for Planted.
inline Matrix twin_correlation(Index n, double length, const std::vector<Index>& perm,
                               CorrelationIndexing indexing) {
  const Matrix base = balgovind_correlation(n, length);
  if (indexing == CorrelationIndexing::Shuffled || perm.empty()) return base;
  if (static_cast<Index>(perm.size()) != n) throw DomainError("twin_correlation: permutation has the wrong size");
  Matrix out(n, n);
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b) out(a, b) = base(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
  return out;
}

inline TwinEnsemble generate_ensemble(const ExperimentConfig& cfg, const TwinJacobian& jac, double sigma_b,
                                      double sigma_o, std::uint64_t seed,
                                      std::optional<StateVector> truth = std::nullopt) {
  const Matrix cb = twin_correlation(cfg.n_x(), cfg.balgovind_length, jac.state_perm, cfg.correlation_indexing);
  const Matrix cr =
      twin_correlation(cfg.n_y(), cfg.balgovind_length, jac.observation_perm, cfg.correlation_indexing);
  ExactCovariances exact = exact_covariances(cfg, jac, cb, cr, sigma_b, sigma_o);
  const StateVector xt = truth.value_or(StateVector::Zero(cfg.n_x()));
  if (xt.size() != cfg.n_x()) throw DomainError("generate_ensemble: truth has the wrong size");
  InnovationEnsemble ens = draw_pairs(jac.op, factor_covariance(exact.background.compose()).lower,
                                      factor_covariance(exact.observation.compose()).lower, xt,
                                      cfg.ensemble_pairs, seed);
  return {std::move(ens), std::move(exact.background), std::move(exact.observation)};
}

/// Everything fixed across the Monte Carlo grid: the operator, the detected
/// partition, the strategy plans and the correlation factors.
struct TwinSetup {
  ExperimentConfig cfg;
  TwinJacobian jacobian;
  StateNetwork network;
  std::optional<ClusterCountSelection> selection;
  ClusterPartition detected;
  PartitionQuality detected_quality;
  LocalizationPlan reduction;
  LocalizationPlan adjustment;
  Matrix background_corr;
  Matrix observation_corr;
  Matrix background_corr_factor;
  Matrix observation_corr_factor;

  static TwinSetup make(const ExperimentConfig& cfg) {
    cfg.validate();
    TwinSetup s;
    s.cfg = cfg;
    s.jacobian = generate_jacobian(cfg, derive_seed(cfg.seed, {0}));
    s.network = build_adjacency(s.jacobian.op);
    if (cfg.cluster_count == 0) {
      SelectionOptions so{cfg.seeds_per_p, cfg.elbow_tau, derive_seed(cfg.seed, {1}), cfg.fluid};
      s.selection = select_cluster_count(s.network, cfg.p_max, so);
      s.detected = s.selection->partition();
    } else {
      // Best of seeds_per_p runs at the fixed count.
      double best = -1.0;
      for (int k = 0; k < cfg.seeds_per_p; ++k) {
        auto part = fluid_communities(s.network, cfg.cluster_count,
                                      derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(cfg.cluster_count),
                                                             static_cast<std::uint64_t>(k)}),
                                      cfg.fluid);
        const double perf = partition_performance(s.network, part).performance;
        if (perf > best) {
          best = perf;
          s.detected = std::move(part);
        }
      }
    }
    s.detected_quality = partition_performance(s.network, s.detected);
    s.reduction = LocalizationPlan::make(s.jacobian.op, s.detected, Strategy::Reduction);
    s.adjustment = LocalizationPlan::make(s.jacobian.op, s.detected, Strategy::Adjustment);
    s.adjustment.reference = cfg.adjustment_reference;
    s.background_corr =
        twin_correlation(cfg.n_x(), cfg.balgovind_length, s.jacobian.state_perm, cfg.correlation_indexing);
    s.observation_corr =
        twin_correlation(cfg.n_y(), cfg.balgovind_length, s.jacobian.observation_perm, cfg.correlation_indexing);
    s.background_corr_factor = factor_covariance(s.background_corr).lower;
    s.observation_corr_factor = factor_covariance(s.observation_corr).lower;
    return s;
  }

  CovarianceModel assumed_background() const {
    return CovarianceModel::homogeneous(cfg.assumed_sigma_b, background_corr);
  }
  CovarianceModel assumed_observation() const {
    return CovarianceModel::homogeneous(cfg.assumed_sigma_o, observation_corr);
  }
};

enum Method { Global = 0, Reduction = 1, Adjustment = 2 };
inline constexpr int kMethods = 3;
inline constexpr const char* kMethodNames[kMethods] = {"global", "reduction", "adjustment"};

/// Frobenius distances to the exact matrices, [method][0 = B, 1 = R].
using DeltaTable = std::array<std::array<double, 2>, kMethods>;

struct CellRun {
  std::array<std::optional<TuningResult>, kMethods> tuned;
  DeltaTable deltas{};
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

/// One Monte Carlo repetition of one grid cell: draw an ensemble from the
/// exact statistics, tune (B_A, R_A) with the three methods, measure each
/// result against (B_E, R_E).
inline CellRun run_cell(const TwinSetup& setup, double sigma_b, double sigma_o, std::uint64_t seed,
                        const std::optional<StateVector>& truth = std::nullopt) {
  const auto& cfg = setup.cfg;
  const ExactCovariances exact = exact_covariances(cfg, setup.jacobian, setup.background_corr,
                                                   setup.observation_corr, sigma_b, sigma_o);
  const Matrix lb = sigma_b * setup.background_corr_factor;
  const Vector r_sd = exact.observation.variances().array().sqrt();
  const Matrix lr = r_sd.asDiagonal() * setup.observation_corr_factor;
  const StateVector xt = truth.value_or(StateVector::Zero(cfg.n_x()));
  const InnovationEnsemble ens = draw_pairs(setup.jacobian.op, lb, lr, xt, cfg.ensemble_pairs, seed);

  const CovarianceModel ba = setup.assumed_background();
  const CovarianceModel ra = setup.assumed_observation();
  const Matrix be = exact.background.compose();
  const Matrix re = exact.observation.compose();

  CellRun run;
  for (int m = 0; m < kMethods; ++m) {
    try {
      TuningResult res = m == Global ? di01_global(ens, ba, ra, setup.jacobian.op, cfg.tuning)
                         : m == Reduction ? di01_localized(ens, ba, ra, setup.reduction, cfg.tuning)
                                          : di01_localized(ens, ba, ra, setup.adjustment, cfg.tuning);
      run.deltas[static_cast<std::size_t>(m)] = {(res.background.compose() - be).norm(),
                                                 (res.observation.compose() - re).norm()};
      run.tuned[static_cast<std::size_t>(m)] = std::move(res);
    } catch (const Error& e) {
      run.errors.push_back(std::string(kMethodNames[m]) + ": " + e.what());
      run.deltas[static_cast<std::size_t>(m)] = {std::nan(""), std::nan("")};
    }
  }
  return run;
}

/// gamma = (Delta_global - Delta_local) / Delta_global.
inline double gain(double delta_global, double delta_local) {
  if (delta_global == 0.0) return delta_local == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return (delta_global - delta_local) / delta_global;
}

struct GainCell {
  int i = 0;  // background grid index
  int j = 0;  // observation grid index
  double sigma_b = 0.0;
  double sigma_o = 0.0;
  int valid_repetitions = 0;
  DeltaTable delta_mean{};
  DeltaTable delta_se{};
  // [0 = reduction, 1 = adjustment][0 = B, 1 = R]
  std::array<std::array<double, 2>, 2> gamma{};
  std::array<std::array<double, 2>, 2> gamma_se{};
  std::vector<std::string> errors;
};

struct QuadrantMeans {
  bool background_under = false;   // sigma_bA < sigma_bE
  bool observation_under = false;  // sigma_oA < sigma_oE
  int cells = 0;
  std::array<std::array<double, 2>, 2> gamma{};  // same layout as GainCell::gamma
};

struct GainReport {
  ExperimentConfig cfg;
  std::vector<double> grid;
  std::vector<GainCell> cells;  // row-major in (i, j)
  std::vector<QuadrantMeans> quadrants;
  int chosen_clusters = 0;
  std::vector<PerformancePoint> performance_curve;
  std::vector<Index> detected_sizes;
  std::vector<Index> reduction_observations;
  std::vector<Index> adjustment_observations;
  double detected_performance = 0.0;
  int misassigned_states = 0;
  int error_count = 0;

  const GainCell& cell(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * grid.size() + static_cast<std::size_t>(j)];
  }
};

/// Minimum over label matchings of the number of states whose detected
/// cluster disagrees with the planted one (two-cluster case: min of both
/// labelings; otherwise greedy majority mapping).
inline int misassigned_count(const ClusterPartition& planted, const ClusterPartition& detected) {
  const int pd = detected.cluster_count(), pp = planted.cluster_count();
  std::vector<std::vector<int>> overlap(static_cast<std::size_t>(pd) + 1,
                                        std::vector<int>(static_cast<std::size_t>(pp) + 1, 0));
  for (Index v = 0; v < planted.size(); ++v)
    ++overlap[static_cast<std::size_t>(detected.label(v))][static_cast<std::size_t>(planted.label(v))];
  int agree = 0;
  for (int d = 1; d <= pd; ++d)
    agree += *std::max_element(overlap[static_cast<std::size_t>(d)].begin() + 1,
                               overlap[static_cast<std::size_t>(d)].end());
  return static_cast<int>(planted.size()) - agree;
}

namespace detail {

inline GainCell summarize_cell(int i, int j, double sb, double so, const std::vector<DeltaTable>& reps,
                               std::vector<std::string> errors) {
  GainCell c;
  c.i = i;
  c.j = j;
  c.sigma_b = sb;
  c.sigma_o = so;
  c.errors = std::move(errors);
  const auto n = static_cast<int>(reps.size());
  c.valid_repetitions = n;
  for (int m = 0; m < kMethods; ++m)
    for (int k = 0; k < 2; ++k) {
      double sum = 0.0;
      for (const auto& r : reps) sum += r[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
      const double mean = n > 0 ? sum / n : std::nan("");
      double ss = 0.0;
      for (const auto& r : reps) {
        const double d = r[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] - mean;
        ss += d * d;
      }
      c.delta_mean[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = mean;
      c.delta_se[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] =
          n > 1 ? std::sqrt(ss / (n - 1) / n) : std::nan("");
    }
  for (int s = 0; s < 2; ++s)
    for (int k = 0; k < 2; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const double g = c.delta_mean[Global][ks];
      const double l = c.delta_mean[static_cast<std::size_t>(s + 1)][ks];
      c.gamma[static_cast<std::size_t>(s)][ks] = gain(g, l);
      // Delta-method standard error of 1 - l/g from the paired samples.
      double se = std::nan("");
      if (n > 1 && g != 0.0) {
        double acc = 0.0;
        for (const auto& r : reps) {
          const double dg = r[Global][ks] - g;
          const double dl = r[static_cast<std::size_t>(s + 1)][ks] - l;
          const double infl = -dl / g + l * dg / (g * g);
          acc += infl * infl;
        }
        se = std::sqrt(acc / (n - 1) / n);
      }
      c.gamma_se[static_cast<std::size_t>(s)][ks] = se;
    }
  return c;
}

inline bool nearly_equal(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

}  // namespace detail

/// Seed of repetition `rep` in grid cell (i, j); independent of evaluation order.
inline std::uint64_t cell_seed(std::uint64_t root, int i, int j, int rep) {
  return derive_seed(root, {2, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                            static_cast<std::uint64_t>(rep)});
}

inline GainReport run_grid(const TwinSetup& setup) {
  const auto& cfg = setup.cfg;
  GainReport report;
  report.cfg = cfg;
  report.grid = cfg.grid();
  const int g = static_cast<int>(report.grid.size());
  report.cells.resize(static_cast<std::size_t>(g * g));

  auto work = [&](int cell) {
    const int i = cell / g, j = cell % g;
    const double sb = report.grid[static_cast<std::size_t>(i)];
    const double so = report.grid[static_cast<std::size_t>(j)];
    std::vector<DeltaTable> reps;
    std::vector<std::string> errors;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      CellRun run = run_cell(setup, sb, so, cell_seed(cfg.seed, i, j, rep));
      if (run.ok()) {
        reps.push_back(run.deltas);
      } else {
        for (auto& e : run.errors) errors.push_back("repetition " + std::to_string(rep) + ": " + e);
      }
    }
    report.cells[static_cast<std::size_t>(cell)] = detail::summarize_cell(i, j, sb, so, reps, std::move(errors));
  };

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int c = next++; c < g * g; c = next++) work(c);
  };
  const int nworkers = std::min(cfg.workers, g * g);
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& c : report.cells) report.error_count += static_cast<int>(c.errors.size());

  for (bool b_under : {true, false})
    for (bool o_under : {true, false}) {
      QuadrantMeans q;
      q.background_under = b_under;
      q.observation_under = o_under;
      for (const auto& c : report.cells) {
        if (detail::nearly_equal(c.sigma_b, cfg.assumed_sigma_b) ||
            detail::nearly_equal(c.sigma_o, cfg.assumed_sigma_o))
          continue;
        if ((cfg.assumed_sigma_b < c.sigma_b) != b_under || (cfg.assumed_sigma_o < c.sigma_o) != o_under)
          continue;
        if (c.valid_repetitions == 0) continue;
        ++q.cells;
        for (int s = 0; s < 2; ++s)
          for (int k = 0; k < 2; ++k)
            q.gamma[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] +=
                c.gamma[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
      }
      if (q.cells > 0)
        for (auto& row : q.gamma)
          for (auto& v : row) v /= q.cells;
      report.quadrants.push_back(q);
    }

  report.chosen_clusters = setup.detected.cluster_count();
  if (setup.selection) report.performance_curve = setup.selection->curve;
  report.detected_sizes = setup.detected.cluster_sizes();
  for (const auto& s : setup.reduction.clusters) report.reduction_observations.push_back(s.size());
  for (const auto& s : setup.adjustment.clusters) report.adjustment_observations.push_back(s.size());
  report.detected_performance = setup.detected_quality.performance;
  report.misassigned_states = misassigned_count(setup.jacobian.planted_states, setup.detected);
  return report;
}

inline GainReport run_grid(const ExperimentConfig& cfg) { return run_grid(TwinSetup::make(cfg)); }

}  // namespace covloc::twin
