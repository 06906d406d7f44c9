#pragma once

// Inhomogeneous random graphs G(n, P): sampling, chromatic number, and the
// maximum average degree MAD(P).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace conc::graphs {

class EdgeProbabilityMatrix {
 public:
  explicit EdgeProbabilityMatrix(std::size_t n = 0);
  static EdgeProbabilityMatrix uniform(std::size_t n, double p);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return p_[i * n_ + j]; }
  // Sets p_ij = p_ji; the diagonal is fixed at zero.
  void set(std::size_t i, std::size_t j, double p);
  // Mean over unordered pairs, sum_{i<j} p_ij / C(n, 2).
  double average() const { return average_; }
  // p_i = sum_j p_ij.
  double row_sum(std::size_t i) const;

 private:
  std::size_t n_;
  std::vector<double> p_;
  double sum_upper_ = 0.0;
  double average_ = 0.0;
};

class Graph {
 public:
  explicit Graph(std::size_t n = 0, std::uint64_t seed = 0);

  std::size_t size() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  bool has_edge(std::size_t u, std::size_t v) const {
    return (rows_[u * words_ + v / 64] >> (v % 64)) & 1u;
  }
  void add_edge(std::size_t u, std::size_t v);
  std::size_t degree(std::size_t v) const;
  std::size_t max_degree() const;
  std::size_t edge_count() const;

  static Graph complete(std::size_t n);
  static Graph cycle(std::size_t n);
  static Graph petersen();

  // `# n=<n> seed=<seed>` then `u,v` rows with u < v.
  void write_csv(std::ostream& out) const;

 private:
  std::size_t n_;
  std::size_t words_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> rows_;
};

Graph sample_graph(const EdgeProbabilityMatrix& p, std::uint64_t seed);

inline constexpr std::size_t kChromaticCap = 30;
inline constexpr double kChromaticBudgetSeconds = 10.0;

// DSATUR branch and bound. Throws SizeLimit above `cap` vertices (at most
// 64) or when the time budget runs out.
std::size_t chromatic_exact(const Graph& g, std::size_t cap = kChromaticCap,
                            double budget_seconds = kChromaticBudgetSeconds);

// First-fit colouring along `order`.
std::size_t chromatic_greedy(const Graph& g, const std::vector<std::size_t>& order);
std::size_t chromatic_greedy(const Graph& g);  // identity order

inline constexpr std::size_t kMadCap = 200;

// max over nonempty U of sum_{i, j in U} p_ij / |U| with the double sum over
// ordered pairs. Dinkelbach iteration with a max-flow cut at each step.
double mad(const EdgeProbabilityMatrix& p);
// MAD of the realized 0/1 adjacency.
double mad_realized(const Graph& g);

}  // namespace conc::graphs
