#include <cmath>
#include <numeric>
#include <sstream>

#include "conc/error.hpp"
#include "conc/graphs.hpp"
#include "conc/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace conc::graphs;
using oracle::brute_force_chromatic;
using oracle::brute_force_mad;

namespace {

EdgeProbabilityMatrix random_matrix(std::size_t n, std::uint64_t seed, double zero_fraction = 0.3) {
  EdgeProbabilityMatrix p(n);
  conc::CounterRng rng(seed, 0, 5);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double u = rng.uniform();
      p.set(i, j, rng.uniform() < zero_fraction ? 0.0 : u);
    }
  return p;
}

}  // namespace

TEST_CASE("edge probability matrix bookkeeping") {
  auto p = EdgeProbabilityMatrix::uniform(5, 0.4);
  CHECK(p.average() == doctest::Approx(0.4));
  p.set(1, 3, 0.9);
  CHECK(p(3, 1) == 0.9);
  CHECK(p(2, 2) == 0.0);
  CHECK(p.average() == doctest::Approx((0.4 * 9 + 0.9) / 10.0));
  CHECK(p.row_sum(1) == doctest::Approx(0.4 * 3 + 0.9));
  CHECK_THROWS_AS(p.set(1, 1, 0.5), conc::InvalidArgument);
  CHECK_THROWS_AS(p.set(0, 1, 1.5), conc::InvalidArgument);
}

TEST_CASE("sampling extremes") {
  const auto full = sample_graph(EdgeProbabilityMatrix::uniform(9, 1.0), 3);
  CHECK(full.edge_count() == 36);
  const auto none = sample_graph(EdgeProbabilityMatrix::uniform(9, 0.0), 3);
  CHECK(none.edge_count() == 0);
}

TEST_CASE("per-edge frequencies of G(20, 1/2)") {
  const std::size_t n = 20;
  const auto p = EdgeProbabilityMatrix::uniform(n, 0.5);
  std::vector<double> hits(n * n, 0.0);
  const int R = 10000;
  for (int s = 0; s < R; ++s) {
    const auto g = sample_graph(p, conc::derive_seed(8, s));
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v) hits[u * n + v] += g.has_edge(u, v) ? 1.0 : 0.0;
  }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const double f = hits[u * n + v] / R;
      CHECK(f >= 0.48);
      CHECK(f <= 0.52);
    }
}

TEST_CASE("graphs regenerate from their seed") {
  const auto p = random_matrix(15, 1);
  std::ostringstream a, b;
  sample_graph(p, 99).write_csv(a);
  sample_graph(p, 99).write_csv(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("# n=15 seed=99\nu,v\n", 0) == 0);
  const auto g = sample_graph(p, 99);
  for (std::size_t u = 0; u < 15; ++u) {
    CHECK_FALSE(g.has_edge(u, u));
    for (std::size_t v = 0; v < 15; ++v) CHECK(g.has_edge(u, v) == g.has_edge(v, u));
  }
}

TEST_CASE("chromatic number of classic graphs") {
  CHECK(chromatic_exact(Graph::complete(5)) == 5);
  CHECK(chromatic_exact(Graph::cycle(5)) == 3);
  CHECK(chromatic_exact(Graph::cycle(6)) == 2);
  const auto petersen = Graph::petersen();
  CHECK(petersen.edge_count() == 15);
  CHECK(petersen.max_degree() == 3);
  CHECK(chromatic_exact(petersen) == 3);
  CHECK(brute_force_chromatic(petersen) == 3);
  CHECK(chromatic_exact(Graph(0)) == 0);
  CHECK(chromatic_exact(Graph(4)) == 1);
}

TEST_CASE("greedy colouring basics") {
  CHECK(chromatic_greedy(Graph::complete(4)) == 4);
  CHECK(chromatic_greedy(Graph(6)) == 1);
  CHECK_THROWS_AS(chromatic_greedy(Graph(3), {0, 0, 1}), conc::InvalidArgument);
}

TEST_CASE("exact chromatic number matches brute force for n <= 8") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const std::size_t n = 1 + s % 8;
    const double dens = 0.1 + 0.8 * static_cast<double>(s % 9) / 8.0;
    const auto g = sample_graph(EdgeProbabilityMatrix::uniform(n, dens), s);
    REQUIRE(chromatic_exact(g) == brute_force_chromatic(g));
  }
}

TEST_CASE("greedy bounds the exact value from above on G(12, 1/2)") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto g = sample_graph(EdgeProbabilityMatrix::uniform(12, 0.5), 400 + s);
    const auto exact = chromatic_exact(g);
    std::vector<std::size_t> order(12);
    std::iota(order.begin(), order.end(), std::size_t{0});
    conc::CounterRng rng(s, 4);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(order.begin(), order.end(), rng);
      const auto greedy = chromatic_greedy(g, order);
      CHECK(greedy >= exact);
      CHECK(greedy <= g.max_degree() + 1);
    }
  }
}

TEST_CASE("chromatic number at the size cap") {
  const auto g = sample_graph(EdgeProbabilityMatrix::uniform(30, 0.5), 1);
  const auto chi = chromatic_exact(g);
  CHECK(chi <= chromatic_greedy(g));
  CHECK(chi >= 4);
  CHECK_THROWS_AS(chromatic_exact(Graph(31)), conc::SizeLimit);
  CHECK_THROWS_AS(chromatic_exact(Graph(20), 65), conc::InvalidArgument);
}

TEST_CASE("MAD conventions on small matrices") {
  CHECK(mad(EdgeProbabilityMatrix::uniform(6, 1.0)) == doctest::Approx(5.0));
  EdgeProbabilityMatrix single(5);
  single.set(0, 1, 1.0);
  CHECK(mad(single) == doctest::Approx(1.0));
  CHECK(brute_force_mad(single) == doctest::Approx(1.0));
  CHECK(mad(EdgeProbabilityMatrix(7)) == 0.0);
  CHECK(mad(EdgeProbabilityMatrix(0)) == 0.0);
}

TEST_CASE("flow-based MAD equals subset enumeration for n <= 15") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t n = 1 + s % 15;
    const auto p = random_matrix(n, 600 + s, static_cast<double>(s % 4) / 4.0);
    REQUIRE(mad(p) == doctest::Approx(brute_force_mad(p)).epsilon(1e-9));
  }
}

TEST_CASE("MAD is monotone under entrywise increase") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto p = random_matrix(25, 800 + s);
    const double before = mad(p);
    conc::CounterRng rng(s, 9);
    for (int k = 0; k < 10; ++k) {
      const std::size_t i = rng() % 25;
      const std::size_t j = (i + 1 + rng() % 24) % 25;
      p.set(i, j, std::min(1.0, p(i, j) + 0.3 * rng.uniform()));
    }
    CHECK(mad(p) >= before * (1.0 - 1e-12));
  }
}

TEST_CASE("chromatic number is at most floor(MAD) + 1") {
  for (std::uint64_t s = 0; s < 150; ++s) {
    const std::size_t n = 2 + s % 14;
    const auto g = sample_graph(random_matrix(n, 1000 + s), s);
    const double m = mad_realized(g);
    CHECK(chromatic_exact(g) <= static_cast<std::size_t>(std::floor(m + 1e-9)) + 1);
  }
}

TEST_CASE("MAD of a 200-vertex matrix") {
  const auto p = random_matrix(200, 5);
  const double m = mad(p);
  // The full vertex set is a candidate; the maximum degree is an upper bound.
  double avg_all = 0.0, maxrow = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    avg_all += p.row_sum(i);
    maxrow = std::max(maxrow, p.row_sum(i));
  }
  CHECK(m >= avg_all / 200.0 * (1.0 - 1e-12));
  CHECK(m <= maxrow * (1.0 + 1e-12));
  CHECK_THROWS_AS(mad(EdgeProbabilityMatrix(201)), conc::SizeLimit);
}
