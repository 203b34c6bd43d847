#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "covloc/core.hpp"
#include "covloc/log.hpp"
#include "covloc/random.hpp"

namespace covloc {

struct Edge {
  Index i = 0;  // i < j
  Index j = 0;
  double weight = 0.0;
};

/// Observation-based state network: vertices are state indices, the weight
/// of {i, j} is S_ij = sum_k |H_ki| |H_kj| (no self loops).
class StateNetwork {
 public:
  StateNetwork() = default;

  /// Edges must have i < j, positive weight, and be unique.
  StateNetwork(Index order, std::vector<Edge> edges) : order_(order), edges_(std::move(edges)) {
    if (order_ < 1) throw DomainError("StateNetwork: order must be positive");
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    neighbors_.assign(static_cast<std::size_t>(order_), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& ed = edges_[e];
      if (ed.i < 0 || ed.j >= order_ || ed.i >= ed.j)
        throw DomainError("StateNetwork: edge endpoints must satisfy 0 <= i < j < order");
      if (!(ed.weight > 0.0) || !std::isfinite(ed.weight))
        throw DomainError("StateNetwork: edge weights must be positive and finite");
      if (e > 0 && edges_[e - 1].i == ed.i && edges_[e - 1].j == ed.j)
        throw DomainError("StateNetwork: duplicate edge");
      neighbors_[static_cast<std::size_t>(ed.i)].push_back({ed.j, ed.weight});
      neighbors_[static_cast<std::size_t>(ed.j)].push_back({ed.i, ed.weight});
    }
    for (auto& nb : neighbors_)
      std::sort(nb.begin(), nb.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  Index order() const noexcept { return order_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::pair<Index, double>>& neighbors(Index v) const {
    return neighbors_[static_cast<std::size_t>(v)];
  }

  Eigen::SparseMatrix<double> adjacency() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * edges_.size());
    for (const Edge& e : edges_) {
      t.emplace_back(e.i, e.j, e.weight);
      t.emplace_back(e.j, e.i, e.weight);
    }
    Eigen::SparseMatrix<double> a(order_, order_);
    a.setFromTriplets(t.begin(), t.end());
    return a;
  }

 private:
  Index order_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<Index, double>>> neighbors_;
};

/// Entries with |H_ki| <= zero_tol are treated as structural zeros.
inline StateNetwork build_adjacency(const Matrix& op, double zero_tol = 0.0) {
  if (!op.allFinite()) throw DomainError("build_adjacency: H has non-finite entries");
  if (zero_tol < 0.0) throw DomainError("build_adjacency: zero_tol must be non-negative");
  if (op.cols() < 1) throw DomainError("build_adjacency: H has no columns");

  std::vector<Edge> pairs;
  std::vector<std::pair<Index, double>> support;
  for (Index k = 0; k < op.rows(); ++k) {
    support.clear();
    for (Index i = 0; i < op.cols(); ++i) {
      const double a = std::abs(op(k, i));
      if (a > zero_tol) support.emplace_back(i, a);
    }
    for (std::size_t a = 0; a < support.size(); ++a)
      for (std::size_t b = a + 1; b < support.size(); ++b)
        pairs.push_back({support[a].first, support[b].first, support[a].second * support[b].second});
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  std::vector<Edge> merged;
  for (const Edge& e : pairs) {
    if (!merged.empty() && merged.back().i == e.i && merged.back().j == e.j)
      merged.back().weight += e.weight;
    else
      merged.push_back(e);
  }
  std::erase_if(merged, [](const Edge& e) { return !(e.weight > 0.0); });
  return StateNetwork(op.cols(), std::move(merged));
}

/// Disjoint cover of state indices by clusters labelled 1..p, all non-empty.
class ClusterPartition {
 public:
  ClusterPartition() = default;

  ClusterPartition(std::vector<int> labels, int cluster_count)
      : labels_(std::move(labels)), count_(cluster_count) {
    if (count_ < 1) throw DomainError("ClusterPartition: cluster count must be positive");
    if (labels_.empty()) throw DomainError("ClusterPartition: no labels");
    std::vector<Index> sizes(static_cast<std::size_t>(count_) + 1, 0);
    for (int l : labels_) {
      if (l < 1 || l > count_) throw DomainError("ClusterPartition: label outside 1..p");
      ++sizes[static_cast<std::size_t>(l)];
    }
    for (int c = 1; c <= count_; ++c)
      if (sizes[static_cast<std::size_t>(c)] == 0)
        throw DomainError("ClusterPartition: every cluster must be non-empty");
  }

  /// Infers p as the largest label.
  static ClusterPartition from_labels(std::vector<int> labels) {
    const int p = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    return ClusterPartition(std::move(labels), p);
  }

  int cluster_count() const noexcept { return count_; }
  Index size() const noexcept { return static_cast<Index>(labels_.size()); }
  const std::vector<int>& labels() const noexcept { return labels_; }
  int label(Index i) const { return labels_[static_cast<std::size_t>(i)]; }

  std::vector<Index> members(int cluster) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == cluster) out.push_back(static_cast<Index>(i));
    return out;
  }

  std::vector<Index> cluster_sizes() const {
    std::vector<Index> sizes(static_cast<std::size_t>(count_), 0);
    for (int l : labels_) ++sizes[static_cast<std::size_t>(l - 1)];
    return sizes;
  }

  friend bool operator==(const ClusterPartition&, const ClusterPartition&) = default;

 private:
  std::vector<int> labels_;
  int count_ = 0;
};

/// True when both partitions group the vertices identically, ignoring label names.
inline bool same_grouping(const ClusterPartition& a, const ClusterPartition& b) {
  if (a.size() != b.size() || a.cluster_count() != b.cluster_count()) return false;
  std::vector<int> map_ab(static_cast<std::size_t>(a.cluster_count()) + 1, 0);
  std::vector<int> map_ba(static_cast<std::size_t>(b.cluster_count()) + 1, 0);
  for (Index i = 0; i < a.size(); ++i) {
    const int la = a.label(i), lb = b.label(i);
    auto& fa = map_ab[static_cast<std::size_t>(la)];
    auto& fb = map_ba[static_cast<std::size_t>(lb)];
    if (fa == 0 && fb == 0) {
      fa = lb;
      fb = la;
    } else if (fa != lb || fb != la) {
      return false;
    }
  }
  return true;
}

struct FluidOptions {
  int max_iter = 100;
  bool weighted = true;
};

/// Fluid communities: p fluids start at distinct random vertices with
/// density 1/|community|; vertices, swept in random order, adopt the
/// community with the largest summed density over themselves and their
/// neighbours (edge weight multiplies each neighbour's contribution; the
/// vertex's own vote is weighted by its strongest incident edge).
///
/// A fluid never loses its last vertex, so exactly p clusters survive.
/// Vertices no fluid reaches (isolated vertices, unseeded components) are
/// assigned afterwards, in index order, to the smallest cluster.
inline ClusterPartition fluid_communities(const StateNetwork& net, int p, std::uint64_t seed,
                                          const FluidOptions& opts = {}) {
  const Index n = net.order();
  if (p < 1) throw DomainError("fluid_communities: p must be at least 1");
  if (p > n) throw DomainError("fluid_communities: p exceeds the number of vertices");
  if (net.edge_count() == 0) throw DomainError("fluid_communities: network has no edges");
  if (opts.max_iter < 1) throw DomainError("fluid_communities: max_iter must be positive");

  Rng rng(seed);
  const auto un = static_cast<std::size_t>(n);
  std::vector<Index> order(un);
  std::iota(order.begin(), order.end(), Index{0});

  std::vector<int> label(un, 0);
  std::vector<Index> count(static_cast<std::size_t>(p) + 1, 0);
  std::vector<double> density(static_cast<std::size_t>(p) + 1, 0.0);

  rng.shuffle(std::span<Index>(order));
  for (int c = 1; c <= p; ++c) {
    label[static_cast<std::size_t>(order[static_cast<std::size_t>(c - 1)])] = c;
    count[static_cast<std::size_t>(c)] = 1;
    density[static_cast<std::size_t>(c)] = 1.0;
  }

  std::vector<double> self_weight(un, 1.0);
  if (opts.weighted) {
    for (Index v = 0; v < n; ++v) {
      double w = 0.0;
      for (const auto& [u, wu] : net.neighbors(v)) w = std::max(w, wu);
      self_weight[static_cast<std::size_t>(v)] = w;
    }
  }

  std::vector<double> score(static_cast<std::size_t>(p) + 1, 0.0);
  std::vector<int> touched;
  std::vector<int> best;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    rng.shuffle(std::span<Index>(order));
    bool changed = false;
    for (Index v : order) {
      const auto uv = static_cast<std::size_t>(v);
      const int current = label[uv];
      if (current != 0 && count[static_cast<std::size_t>(current)] == 1) continue;

      touched.clear();
      auto vote = [&](int c, double w) {
        auto& s = score[static_cast<std::size_t>(c)];
        if (s == 0.0) touched.push_back(c);
        s += w * density[static_cast<std::size_t>(c)];
      };
      if (current != 0) vote(current, self_weight[uv]);
      for (const auto& [u, w] : net.neighbors(v)) {
        const int lu = label[static_cast<std::size_t>(u)];
        if (lu != 0) vote(lu, opts.weighted ? w : 1.0);
      }
      if (touched.empty()) continue;

      std::sort(touched.begin(), touched.end());
      double top = 0.0;
      for (int c : touched) top = std::max(top, score[static_cast<std::size_t>(c)]);
      best.clear();
      for (int c : touched)
        if (score[static_cast<std::size_t>(c)] >= top * (1.0 - 1e-12)) best.push_back(c);
      for (int c : touched) score[static_cast<std::size_t>(c)] = 0.0;

      if (std::find(best.begin(), best.end(), current) != best.end()) continue;
      const int next = best[static_cast<std::size_t>(rng.below(best.size()))];
      if (current != 0) {
        auto& cc = count[static_cast<std::size_t>(current)];
        --cc;
        density[static_cast<std::size_t>(current)] = 1.0 / static_cast<double>(cc);
      }
      auto& cn = count[static_cast<std::size_t>(next)];
      ++cn;
      density[static_cast<std::size_t>(next)] = 1.0 / static_cast<double>(cn);
      label[uv] = next;
      changed = true;
    }
    if (!changed) break;
  }

  for (std::size_t v = 0; v < un; ++v) {
    if (label[v] != 0) continue;
    int smallest = 1;
    for (int c = 2; c <= p; ++c)
      if (count[static_cast<std::size_t>(c)] < count[static_cast<std::size_t>(smallest)]) smallest = c;
    label[v] = smallest;
    ++count[static_cast<std::size_t>(smallest)];
  }
  return ClusterPartition(std::move(label), p);
}

struct PartitionQuality {
  double performance = 0.0;
  std::int64_t intra_edges = 0;  // m(C)
  std::int64_t inter_edges = 0;  // m_bar(C)
};

/// Fraction of vertex pairs classified correctly: adjacent pairs inside a
/// cluster plus non-adjacent pairs split across clusters.
inline PartitionQuality partition_performance(const StateNetwork& net, const ClusterPartition& part) {
  if (part.size() != net.order())
    throw DomainError("partition_performance: labels length differs from network order");
  PartitionQuality q;
  for (const Edge& e : net.edges()) {
    if (part.label(e.i) == part.label(e.j))
      ++q.intra_edges;
    else
      ++q.inter_edges;
  }
  const auto n = static_cast<std::int64_t>(net.order());
  const std::int64_t pairs = n * (n - 1) / 2;
  if (pairs == 0) {
    q.performance = 1.0;
    return q;
  }
  std::int64_t intra_pairs = 0;
  for (Index s : part.cluster_sizes()) intra_pairs += static_cast<std::int64_t>(s) * (s - 1) / 2;
  const std::int64_t inter_non_adjacent = (pairs - intra_pairs) - q.inter_edges;
  q.performance = static_cast<double>(q.intra_edges + inter_non_adjacent) / static_cast<double>(pairs);
  return q;
}

struct SelectionOptions {
  int seeds_per_p = 10;
  double elbow_tau = 0.3;
  std::uint64_t seed = 0;
  FluidOptions fluid{};
};

struct PerformancePoint {
  int p = 0;
  double best = 0.0;  // best performance over seeds
  double mean = 0.0;  // mean performance over seeds
};

struct ClusterCountSelection {
  int chosen = 1;
  bool elbow_found = false;
  std::vector<PerformancePoint> curve;
  std::vector<ClusterPartition> best_partitions;  // index p - 1

  const ClusterPartition& partition() const {
    return best_partitions[static_cast<std::size_t>(chosen - 1)];
  }
};

/// Scans p = 1..p_max. The chosen count is the smallest p whose gain to p+1
/// is below tau times its (positive) gain from p-1; argmax of the best
/// performance when no such elbow exists.
inline ClusterCountSelection select_cluster_count(const StateNetwork& net, int p_max,
                                                  const SelectionOptions& opts = {}) {
  if (p_max < 2 || p_max >= net.order())
    throw DomainError("select_cluster_count: need 2 <= p_max < number of vertices");
  if (opts.seeds_per_p < 1) throw DomainError("select_cluster_count: seeds_per_p must be positive");

  ClusterCountSelection out;
  for (int p = 1; p <= p_max; ++p) {
    PerformancePoint pt{p, -1.0, 0.0};
    ClusterPartition best_part;
    for (int s = 0; s < opts.seeds_per_p; ++s) {
      const auto run_seed = derive_seed(opts.seed, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(s)});
      ClusterPartition part = fluid_communities(net, p, run_seed, opts.fluid);
      const double perf = partition_performance(net, part).performance;
      pt.mean += perf;
      if (perf > pt.best) {
        pt.best = perf;
        best_part = std::move(part);
      }
    }
    pt.mean /= opts.seeds_per_p;
    out.curve.push_back(pt);
    out.best_partitions.push_back(std::move(best_part));
  }

  const auto perf = [&](int p) { return out.curve[static_cast<std::size_t>(p - 1)].best; };
  for (int p = 2; p < p_max; ++p) {
    const double gain_in = perf(p) - perf(p - 1);
    const double gain_out = perf(p + 1) - perf(p);
    if (gain_in > 0.0 && gain_out < opts.elbow_tau * gain_in) {
      out.chosen = p;
      out.elbow_found = true;
      return out;
    }
  }
  out.chosen = 1;
  for (int p = 2; p <= p_max; ++p)
    if (perf(p) > perf(out.chosen)) out.chosen = p;
  return out;
}

}  // namespace covloc
