#pragma once

// Euclidean functionals on planar point sets: travelling-salesman tours
// (exact, strip, 2-opt) and the minimum spanning tree.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conc/geometry.hpp"

namespace conc::euclid {

struct Tour {
  std::vector<std::size_t> order;
  double length = 0.0;  // closed cycle, including the edge back to order[0]
};

struct SpanningTree {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  double weight = 0.0;
};

double tour_length(std::span<const Point> points, std::span<const std::size_t> order);
bool is_permutation_of(std::span<const std::size_t> order, std::size_t n);

inline constexpr std::size_t kExactTspLimit = 13;

// Held-Karp. Among optimal tours starting at point 0 (lengths equal within
// 1e-9 relative) returns the lexicographically smallest order.
// Throws SizeLimit above kExactTspLimit points.
Tour tsp_exact(std::span<const Point> points);

// 3 alpha sqrt(s) + 2 alpha.
double strip_bound(std::size_t s, double alpha);

// Boustrophedon route over ceil(sqrt(s)) horizontal strips of the square
// [ox, ox + alpha] x [oy, oy + alpha]. Checks the result against
// strip_bound and throws std::logic_error if it is exceeded.
Tour tsp_strip(std::span<const Point> points, double alpha, Point origin = {0.0, 0.0});

// First-improvement 2-opt, scanning (i, j) in increasing order; a pass is a
// full scan. Stops after a pass without improvement or max_passes passes.
Tour tsp_2opt(std::span<const Point> points, Tour start, std::size_t max_passes = 1000);

// Dense Prim from point 0; ties go to the lower index.
SpanningTree mst_weight(std::span<const Point> points);

enum class TspMethod { Exact, TwoOptStrip };
std::string to_string(TspMethod m);

struct TspValue {
  double length = 0.0;
  TspMethod method = TspMethod::Exact;
};

// Exact below the size limit, else 2-opt from the strip tour of the unit
// square.
TspValue tsp_functional(std::span<const Point> points);

}  // namespace conc::euclid
