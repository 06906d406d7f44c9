#include "conc/graphs.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <string>

#include "conc/error.hpp"
#include "conc/rng.hpp"

namespace conc::graphs {

EdgeProbabilityMatrix::EdgeProbabilityMatrix(std::size_t n) : n_(n), p_(n * n, 0.0) {}

EdgeProbabilityMatrix EdgeProbabilityMatrix::uniform(std::size_t n, double p) {
  EdgeProbabilityMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, p);
  return m;
}

void EdgeProbabilityMatrix::set(std::size_t i, std::size_t j, double p) {
  if (i >= n_ || j >= n_) throw InvalidArgument("vertex index out of range");
  if (i == j) throw InvalidArgument("diagonal entries are fixed at zero");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("edge probability outside [0, 1]");
  sum_upper_ += p - p_[i * n_ + j];
  p_[i * n_ + j] = p;
  p_[j * n_ + i] = p;
  const double pairs = static_cast<double>(n_) * static_cast<double>(n_ - 1) / 2.0;
  average_ = pairs > 0 ? sum_upper_ / pairs : 0.0;
}

double EdgeProbabilityMatrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < n_; ++j) s += p_[i * n_ + j];
  return s;
}

Graph::Graph(std::size_t n, std::uint64_t seed)
    : n_(n), words_((n + 63) / 64), seed_(seed), rows_(n * words_, 0) {}

void Graph::add_edge(std::size_t u, std::size_t v) {
  if (u >= n_ || v >= n_) throw InvalidArgument("vertex index out of range");
  if (u == v) throw InvalidArgument("loops are not allowed");
  rows_[u * words_ + v / 64] |= std::uint64_t{1} << (v % 64);
  rows_[v * words_ + u / 64] |= std::uint64_t{1} << (u % 64);
}

std::size_t Graph::degree(std::size_t v) const {
  std::size_t d = 0;
  for (std::size_t w = 0; w < words_; ++w) d += std::popcount(rows_[v * words_ + w]);
  return d;
}

std::size_t Graph::max_degree() const {
  std::size_t d = 0;
  for (std::size_t v = 0; v < n_; ++v) d = std::max(d, degree(v));
  return d;
}

std::size_t Graph::edge_count() const {
  std::size_t twice = 0;
  for (std::size_t v = 0; v < n_; ++v) twice += degree(v);
  return twice / 2;
}

Graph Graph::complete(std::size_t n) {
  Graph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) g.add_edge(u, v);
  return g;
}

Graph Graph::cycle(std::size_t n) {
  if (n < 3) throw InvalidArgument("a cycle needs at least 3 vertices");
  Graph g(n);
  for (std::size_t v = 0; v < n; ++v) g.add_edge(v, (v + 1) % n);
  return g;
}

Graph Graph::petersen() {
  Graph g(10);
  for (std::size_t v = 0; v < 5; ++v) {
    g.add_edge(v, (v + 1) % 5);          // outer cycle
    g.add_edge(5 + v, 5 + (v + 2) % 5);  // inner pentagram
    g.add_edge(v, 5 + v);                // spokes
  }
  return g;
}

void Graph::write_csv(std::ostream& out) const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "# n=%zu seed=%" PRIu64 "\n", n_, seed_);
  out << buf << "u,v\n";
  for (std::size_t u = 0; u < n_; ++u) {
    for (std::size_t v = u + 1; v < n_; ++v) {
      if (has_edge(u, v)) out << u << ',' << v << '\n';
    }
  }
}

Graph sample_graph(const EdgeProbabilityMatrix& p, std::uint64_t seed) {
  const std::size_t n = p.size();
  Graph g(n, seed);
  CounterRng rng(seed, 0, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (rng.uniform() < p(u, v)) g.add_edge(u, v);
    }
  }
  return g;
}

std::size_t chromatic_greedy(const Graph& g, const std::vector<std::size_t>& order) {
  const std::size_t n = g.size();
  if (order.size() != n) throw InvalidArgument("order is not a permutation of the vertices");
  std::vector<bool> seen(n, false);
  for (auto v : order) {
    if (v >= n || seen[v]) throw InvalidArgument("order is not a permutation of the vertices");
    seen[v] = true;
  }
  if (n == 0) return 0;
  std::vector<std::size_t> color(n, n);
  std::size_t used = 0;
  std::vector<bool> taken;
  for (auto v : order) {
    taken.assign(used + 1, false);
    for (std::size_t u = 0; u < n; ++u) {
      if (color[u] < n && g.has_edge(u, v)) taken[color[u]] = true;
    }
    std::size_t c = 0;
    while (taken[c]) ++c;
    color[v] = c;
    used = std::max(used, c + 1);
  }
  return used;
}

std::size_t chromatic_greedy(const Graph& g) {
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return chromatic_greedy(g, order);
}

namespace {

class DsaturSolver {
 public:
  DsaturSolver(const Graph& g, double budget_seconds)
      : n_(g.size()),
        adj_(n_, 0),
        color_(n_, -1),
        conflicts_(n_ * 64, 0),
        saturation_(n_, 0),
        deadline_(std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(budget_seconds))) {
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t v = 0; v < n_; ++v)
        if (g.has_edge(u, v)) adj_[u] |= std::uint64_t{1} << v;
  }

  std::size_t solve() {
    if (n_ == 0) return 0;
    best_ = greedy_dsatur();
    lower_ = greedy_clique();
    if (best_ > lower_) search(0, 0);
    return best_;
  }

 private:
  std::size_t pick() const {
    std::size_t best = n_;
    int best_sat = -1;
    int best_deg = -1;
    for (std::size_t v = 0; v < n_; ++v) {
      if (color_[v] >= 0) continue;
      const int sat = saturation_[v];
      int deg = 0;
      for (std::uint64_t m = adj_[v]; m; m &= m - 1) deg += color_[std::countr_zero(m)] < 0 ? 1 : 0;
      if (sat > best_sat || (sat == best_sat && deg > best_deg)) {
        best = v;
        best_sat = sat;
        best_deg = deg;
      }
    }
    return best;
  }

  void assign(std::size_t v, int c) {
    color_[v] = c;
    for (std::uint64_t m = adj_[v]; m; m &= m - 1) {
      const auto u = static_cast<std::size_t>(std::countr_zero(m));
      if (conflicts_[u * 64 + c]++ == 0) ++saturation_[u];
    }
  }

  void unassign(std::size_t v) {
    const int c = color_[v];
    color_[v] = -1;
    for (std::uint64_t m = adj_[v]; m; m &= m - 1) {
      const auto u = static_cast<std::size_t>(std::countr_zero(m));
      if (--conflicts_[u * 64 + c] == 0) --saturation_[u];
    }
  }

  std::size_t greedy_dsatur() {
    std::size_t used = 0;
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t v = pick();
      int c = 0;
      while (conflicts_[v * 64 + c] > 0) ++c;
      assign(v, c);
      used = std::max(used, static_cast<std::size_t>(c) + 1);
    }
    for (std::size_t v = 0; v < n_; ++v) unassign(v);
    return used;
  }

  std::size_t greedy_clique() const {
    std::size_t best = 1;
    for (std::size_t start = 0; start < n_; ++start) {
      std::uint64_t cand = adj_[start];
      std::size_t size = 1;
      while (cand) {
        std::size_t pickv = 0;
        int most = -1;
        for (std::uint64_t m = cand; m; m &= m - 1) {
          const auto u = static_cast<std::size_t>(std::countr_zero(m));
          const int d = std::popcount(adj_[u] & cand);
          if (d > most) {
            most = d;
            pickv = u;
          }
        }
        cand &= adj_[pickv];
        ++size;
      }
      best = std::max(best, size);
    }
    return best;
  }

  void search(std::size_t colored, std::size_t used) {
    if (best_ == lower_) return;
    if ((++nodes_ & 1023u) == 0 && std::chrono::steady_clock::now() > deadline_) {
      throw SizeLimit("chromatic_exact exceeded its time budget");
    }
    if (colored == n_) {
      best_ = used;
      return;
    }
    const std::size_t v = pick();
    for (std::size_t c = 0; c <= used && c + 1 < best_; ++c) {
      if (conflicts_[v * 64 + c] > 0) continue;
      assign(v, static_cast<int>(c));
      search(colored + 1, std::max(used, c + 1));
      unassign(v);
      if (best_ == lower_) return;
    }
  }

  std::size_t n_;
  std::vector<std::uint64_t> adj_;
  std::vector<int> color_;
  std::vector<int> conflicts_;   // conflicts_[v * 64 + c]: neighbours of v with colour c
  std::vector<int> saturation_;  // distinct neighbour colours
  std::size_t best_ = 0;
  std::size_t lower_ = 0;
  std::uint64_t nodes_ = 0;
  std::chrono::steady_clock::time_point deadline_;
};

}  // namespace

std::size_t chromatic_exact(const Graph& g, std::size_t cap, double budget_seconds) {
  if (cap > 64) throw InvalidArgument("chromatic cap cannot exceed 64");
  if (g.size() > cap) {
    throw SizeLimit("chromatic_exact handles at most " + std::to_string(cap) + " vertices, got " +
                    std::to_string(g.size()));
  }
  return DsaturSolver(g, budget_seconds).solve();
}

namespace {

// Dinic max flow on real capacities.
class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t n) : head_(n, -1), level_(n), iter_(n) {}

  void add_edge(std::size_t u, std::size_t v, double cap) {
    edges_.push_back({v, cap, head_[u]});
    head_[u] = static_cast<int>(edges_.size() - 1);
    edges_.push_back({u, 0.0, head_[v]});
    head_[v] = static_cast<int>(edges_.size() - 1);
  }

  double max_flow(std::size_t s, std::size_t t, double eps) {
    eps_ = eps;
    double flow = 0.0;
    while (bfs(s, t)) {
      for (std::size_t v = 0; v < head_.size(); ++v) iter_[v] = head_[v];
      for (double f; (f = dfs(s, t, std::numeric_limits<double>::infinity())) > eps_;) flow += f;
    }
    return flow;
  }

  // Vertices reachable from s in the residual graph after max_flow.
  std::vector<bool> source_side(std::size_t s) const {
    std::vector<bool> seen(head_.size(), false);
    std::queue<std::size_t> q;
    seen[s] = true;
    q.push(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (int e = head_[u]; e >= 0; e = edges_[e].next) {
        if (edges_[e].cap > eps_ && !seen[edges_[e].to]) {
          seen[edges_[e].to] = true;
          q.push(edges_[e].to);
        }
      }
    }
    return seen;
  }

 private:
  struct Edge {
    std::size_t to;
    double cap;
    int next;
  };

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (int e = head_[u]; e >= 0; e = edges_[e].next) {
        if (edges_[e].cap > eps_ && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          q.push(edges_[e].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(std::size_t u, std::size_t t, double pushed) {
    if (u == t) return pushed;
    for (int& e = iter_[u]; e >= 0; e = edges_[e].next) {
      Edge& ed = edges_[e];
      if (ed.cap > eps_ && level_[ed.to] == level_[u] + 1) {
        const double got = dfs(ed.to, t, std::min(pushed, ed.cap));
        if (got > eps_) {
          ed.cap -= got;
          edges_[e ^ 1].cap += got;
          return got;
        }
      }
    }
    return 0.0;
  }

  std::vector<Edge> edges_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> iter_;
  double eps_ = 0.0;
};

// Subset maximising w(U) - g |U| with w(U) = sum_{i<j in U} p_ij, from the
// source side of a minimum cut.
std::vector<std::size_t> best_subset(const EdgeProbabilityMatrix& p, double g) {
  const std::size_t n = p.size();
  std::vector<double> d(n);
  double big = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = p.row_sum(i);
    big = std::max(big, d[i]);
    total += d[i];
  }
  const std::size_t s = n;
  const std::size_t t = n + 1;
  FlowNetwork net(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    net.add_edge(s, i, big);
    net.add_edge(i, t, big + 2.0 * g - d[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && p(i, j) > 0.0) net.add_edge(i, j, p(i, j));
    }
  }
  const double eps = 1e-13 * std::max(1.0, total);
  net.max_flow(s, t, eps);
  const auto side = net.source_side(s);
  std::vector<std::size_t> u;
  for (std::size_t i = 0; i < n; ++i)
    if (side[i]) u.push_back(i);
  return u;
}

double half_weight(const EdgeProbabilityMatrix& p, const std::vector<std::size_t>& u) {
  double w = 0.0;
  for (std::size_t a = 0; a < u.size(); ++a)
    for (std::size_t b = a + 1; b < u.size(); ++b) w += p(u[a], u[b]);
  return w;
}

}  // namespace

double mad(const EdgeProbabilityMatrix& p) {
  const std::size_t n = p.size();
  if (n > kMadCap) throw SizeLimit("mad handles at most " + std::to_string(kMadCap) + " vertices");
  if (n == 0) return 0.0;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  double g = half_weight(p, all) / static_cast<double>(n);
  // Dinkelbach: g increases strictly until no subset beats it.
  for (int iter = 0; iter < 200; ++iter) {
    const auto u = best_subset(p, g);
    if (u.empty()) break;
    const double dens = half_weight(p, u) / static_cast<double>(u.size());
    if (dens <= g * (1.0 + 1e-14) + 1e-15) break;
    g = dens;
  }
  return 2.0 * g;
}

double mad_realized(const Graph& g) {
  EdgeProbabilityMatrix p(g.size());
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t v = u + 1; v < g.size(); ++v)
      if (g.has_edge(u, v)) p.set(u, v, 1.0);
  return mad(p);
}

}  // namespace conc::graphs
