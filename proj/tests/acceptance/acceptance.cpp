// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "../generators.hpp"
#include "../nine_state.hpp"
#include "../oracles.hpp"
#include "covloc/covloc.hpp"

using namespace covloc;
using namespace covloc::twin;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Per-pair 2 J_b and 2 J_o for a 5000-pair ensemble drawn from the exact
// statistics of the default twin system.
struct ExactRun {
  std::vector<double> jb, jo;
  double trace_kh = 0.0, trace_i_minus_hk = 0.0;
  Di01Indicators step;
};

ExactRun exact_run(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.ensemble_pairs = 5000;
  const auto setup = TwinSetup::make(cfg);
  const auto te = generate_ensemble(cfg, setup.jacobian, cfg.assumed_sigma_b, cfg.assumed_sigma_o, seed);
  const Matrix b = te.exact_background.compose(), r = te.exact_observation.compose();
  const LinearAnalysis sys(b, r, setup.jacobian.op);
  ExactRun out;
  out.trace_kh = sys.trace_kh();
  out.trace_i_minus_hk = sys.trace_i_minus_hk();
  for (const auto& pr : te.ensemble.pairs()) {
    const auto res = sys.analyze(pr.background, pr.observation);
    out.jb.push_back(2 * res.cost_background);
    out.jo.push_back(2 * res.cost_observation);
  }
  out.step = di01_step(te.ensemble, b, r, setup.jacobian.op);
  return out;
}

Outcome check_fixed_point() {
  const auto run = exact_run(101);
  const auto mb = oracle::mean_se(run.jb), mo = oracle::mean_se(run.jo);
  const double se_b = mb.se / run.trace_kh, se_o = mo.se / run.trace_i_minus_hk;
  const double zb = (run.step.s_b - 1.0) / se_b, zo = (run.step.s_o - 1.0) / se_o;
  return {std::abs(zb) < 3 && std::abs(zo) < 3,
          fmt("s_b = %.4f (%.2f SE), s_o = %.4f (%.2f SE)", run.step.s_b, zb, run.step.s_o, zo)};
}

Outcome check_trace_identities() {
  const auto run = exact_run(202);
  const auto mb = oracle::mean_se(run.jb), mo = oracle::mean_se(run.jo);
  const double zb = (mb.mean - run.trace_kh) / mb.se, zo = (mo.mean - run.trace_i_minus_hk) / mo.se;
  return {std::abs(zb) < 3 && std::abs(zo) < 3,
          fmt("mean 2J_b = %.3f vs Tr(KH) = %.3f (%.2f SE); mean 2J_o = %.3f vs Tr(I-HK) = %.3f (%.2f SE)",
              mb.mean, run.trace_kh, zb, mo.mean, run.trace_i_minus_hk, zo)};
}

Outcome check_nine_state_example() {
  const Matrix h = nine_state::op();
  const StateNetwork net = build_adjacency(h);
  const bool exact = Matrix(net.adjacency()) == oracle::similarity(h);
  int hits = 0;
  for (std::uint64_t s = 0; s < 50; ++s)
    if (same_grouping(fluid_communities(net, 2, s), nine_state::partition())) ++hits;
  return {exact && hits >= 30, fmt("adjacency %s oracle; planted split recovered in %d/50 seeds",
                                   exact ? "equals" : "differs from", hits)};
}

std::vector<TwinSetup> twenty_setups() {
  std::vector<TwinSetup> out;
  for (std::uint64_t k = 0; k < 20; ++k) {
    ExperimentConfig cfg;
    cfg.seed = 1000 + k;
    out.push_back(TwinSetup::make(cfg));
  }
  return out;
}

Outcome check_cluster_count(const std::vector<TwinSetup>& setups) {
  int twos = 0;
  std::string chosen;
  for (const auto& s : setups) {
    twos += s.detected.cluster_count() == 2;
    chosen += std::to_string(s.detected.cluster_count());
  }
  return {twos >= 16, fmt("p* = 2 on %d/20 operators (chosen: %s)", twos, chosen.c_str())};
}

Outcome check_table_shape(const std::vector<TwinSetup>& setups) {
  // The two-cluster partition of each operator (the best of the p = 2 runs).
  int sizes_ok = 0;
  double kept_sum = 0.0;
  Index min_size = 1000, max_size = 0;
  for (const auto& s : setups) {
    const ClusterPartition& part = s.selection->best_partitions[1];
    const auto sizes = part.cluster_sizes();
    bool ok = true;
    for (Index z : sizes) {
      ok = ok && std::abs(z - 50) <= 5;
      min_size = std::min(min_size, z);
      max_size = std::max(max_size, z);
    }
    sizes_ok += ok;
    kept_sum += static_cast<double>(reduce_observations(s.jacobian.op, part).kept.size());
  }
  const double kept_mean = kept_sum / static_cast<double>(setups.size());
  return {sizes_ok == static_cast<int>(setups.size()) && std::abs(kept_mean - 25.0) <= 6.0,
          fmt("sizes within 50 +/- 5 on %d/20 (range %ld..%ld); mean reduction keeps %.2f of 50", sizes_ok,
              static_cast<long>(min_size), static_cast<long>(max_size), kept_mean)};
}

GainReport grid_at_ratio(double ratio) {
  ExperimentConfig cfg;
  cfg.observation_ratio = ratio;
  cfg.repetitions = 100;
  return run_grid(cfg);
}

Outcome check_reduction_trend() {
  const auto rep = grid_at_ratio(10.0);
  int positive = 0;
  double lo = 1.0;
  for (const auto& c : rep.cells) {
    positive += c.gamma[0][0] > 0.0;
    lo = std::min(lo, c.gamma[0][0]);
  }
  const int total = static_cast<int>(rep.cells.size());
  return {positive >= static_cast<int>(std::ceil(0.9 * total)),
          fmt("gamma_B(reduction) > 0 in %d/%d cells (min %.3f, p* = %d, errors %d)", positive, total, lo,
              rep.chosen_clusters, rep.error_count)};
}

Outcome check_quadrant_magnitudes() {
  const auto rep = grid_at_ratio(100.0);
  bool reduction_ok = true;
  double red_min = 1.0;
  const QuadrantMeans* target = nullptr;
  double other_min = INFINITY;
  std::string adj;
  for (const auto& q : rep.quadrants) {
    for (int k = 0; k < 2; ++k) {
      reduction_ok = reduction_ok && q.gamma[0][k] >= 0.90;
      red_min = std::min(red_min, q.gamma[0][k]);
    }
    const bool is_target = q.background_under && !q.observation_under;
    if (is_target)
      target = &q;
    else
      other_min = std::min(other_min, q.gamma[1][0]);
    adj += fmt(" [b%s o%s red B %.3f R %.3f adj B %.3f]", q.background_under ? "<" : ">",
               q.observation_under ? "<" : ">", q.gamma[0][0], q.gamma[0][1], q.gamma[1][0]);
  }
  const bool adj_ok = target && target->gamma[1][0] < 0.15 && target->gamma[1][0] < other_min;
  return {reduction_ok && adj_ok,
          fmt("reduction quadrant min %.3f (need >= 0.90: %s); adjustment-B target %.3f vs others min %.3f (%s);",
              red_min, reduction_ok ? "ok" : "no", target ? target->gamma[1][0] : NAN, other_min,
              adj_ok ? "ok" : "no") +
              adj};
}

Outcome check_structural() {
  int failures = 0;
  std::string first;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok && failures++ == 0) first = what;
  };

  for (std::uint64_t t = 0; t < 40; ++t) {
    auto rng = gen::rng_for(900, t);
    const Index nx = gen::size(rng, 2, 40), ny = gen::size(rng, 2, 30);
    const CovarianceModel b = gen::covariance(rng, nx), r = gen::covariance(rng, ny);
    const Matrix h = gen::sparse_operator(rng, ny, nx, 0.3);
    const double kb = gen::log_uniform(rng, 0.3, 3.0), ko = gen::log_uniform(rng, 0.3, 3.0);
    const auto ens = draw_pairs(h, std::sqrt(kb) * factor_covariance(b.compose()).lower,
                                std::sqrt(ko) * factor_covariance(r.compose()).lower, Vector::Zero(nx), 10, t);
    const int p = 1 + static_cast<int>(rng.below(3));
    const ClusterPartition part(gen::labels(rng, nx, p), p);
    const std::string tag = fmt("case %llu", static_cast<unsigned long long>(t));

    std::vector<TuningResult> results;
    results.push_back(di01_global(ens, b, r, h));
    results.push_back(di01_localized(ens, b, r, h, part, Strategy::Reduction));
    results.push_back(di01_localized(ens, b, r, h, part, Strategy::Adjustment));
    for (const auto& res : results) {
      check(res.background.correlation() == b.correlation() && res.observation.correlation() == r.correlation(),
            tag + ": correlation changed");
      bool pd = true;
      try {
        factor_covariance(res.background.compose(), JitterPolicy::none());
        factor_covariance(res.observation.compose(), JitterPolicy::none());
      } catch (const Error&) {
        pd = false;
      }
      check(pd, tag + ": tuned covariance not positive definite");
    }

    // Scaling B and R by c: K and x_a unchanged; s unchanged once the
    // innovations are expressed in the same units; tuned B', R' unchanged.
    const double c = gen::log_uniform(rng, 1e-3, 1e3);
    const Matrix bm = b.compose(), rm = r.compose();
    const Matrix k1 = kalman_gain(bm, rm, h), k2 = kalman_gain(c * bm, c * rm, h);
    check((k1 - k2).norm() <= 1e-10 * k1.norm(), tag + ": K not scale invariant");
    const Vector xa1 = LinearAnalysis(bm, rm, h).analysis(ens[0].background, ens[0].observation);
    const Vector xa2 = LinearAnalysis(c * bm, c * rm, h).analysis(ens[0].background, ens[0].observation);
    check((xa1 - xa2).norm() <= 1e-10 * xa1.norm(), tag + ": x_a not scale invariant");
    std::vector<InnovationPair> scaled;
    for (const auto& q : ens.pairs()) scaled.push_back({std::sqrt(c) * q.background, std::sqrt(c) * q.observation});
    const auto s1 = di01_step(ens, bm, rm, h);
    const auto s2 = di01_step(InnovationEnsemble(std::move(scaled)), c * bm, c * rm, h);
    check(std::abs(s1.s_b - s2.s_b) <= 1e-10 * s1.s_b && std::abs(s1.s_o - s2.s_o) <= 1e-10 * s1.s_o,
          tag + ": s not scale invariant");
    CovarianceModel cb = b, cr = r;
    cb.scale_variances(c);
    cr.scale_variances(c);
    const auto g1 = di01_global(ens, b, r, h, {3, 0.0}), g2 = di01_global(ens, cb, cr, h, {3, 0.0});
    check((g1.background.variances() - g2.background.variances()).norm() <=
                  1e-10 * g1.background.variances().norm() &&
              (g1.observation.variances() - g2.observation.variances()).norm() <=
                  1e-10 * g1.observation.variances().norm(),
          tag + ": tuned covariances depend on the input scale");

    // One cluster: localized equals global.
    const ClusterPartition one(std::vector<int>(static_cast<std::size_t>(nx), 1), 1);
    const auto loc = di01_localized(ens, b, r, h, one, Strategy::Adjustment);
    const Matrix bl = loc.background.compose(), bg = results[0].background.compose();
    const Matrix rl = loc.observation.compose(), rg = results[0].observation.compose();
    check((bl - bg).norm() <= 1e-12 * bg.norm() && (rl - rg).norm() <= 1e-12 * rg.norm(),
          tag + ": single-cluster localized differs from global");
  }

  for (std::uint64_t t = 0; t < 300; ++t) {
    auto rng = gen::rng_for(901, t);
    const Index n = gen::size(rng, 1, 50);
    const Matrix a = gen::random_graph(rng, n, rng.uniform());
    const int p = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const auto labels = gen::labels(rng, n, p);
    const double got = partition_performance(gen::network_from(a), ClusterPartition(labels, p)).performance;
    check(got == oracle::performance(a, labels), fmt("graph %llu: performance differs from brute force",
                                                      static_cast<unsigned long long>(t)));
  }
  return {failures == 0, failures == 0 ? std::string("40 tuning cases, 300 graphs: all properties hold")
                                       : fmt("%d violations; first: ", failures) + first};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "DI01 fixed point", check_fixed_point);
  report(2, "trace identities", check_trace_identities);
  report(3, "nine-state example", check_nine_state_example);
  std::vector<TwinSetup> setups;
  const auto t0 = std::chrono::steady_clock::now();
  setups = twenty_setups();
  const double setup_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("(twenty twin operators generated and clustered in %.1f s)\n", setup_secs);
  report(4, "cluster-count selection", [&] { return check_cluster_count(setups); });
  report(5, "partition and reduction shape", [&] { return check_table_shape(setups); });
  report(6, "reduction gain trend, ratio 10", check_reduction_trend);
  report(7, "quadrant magnitudes, ratio 100", check_quadrant_magnitudes);
  report(8, "structural properties", check_structural);
  std::printf("%d of 8 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
