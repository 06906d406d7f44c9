#include "conc/euclid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "conc/error.hpp"

namespace conc::euclid {

double tour_length(std::span<const Point> points, std::span<const std::size_t> order) {
  if (order.size() < 2) return 0.0;
  double len = 0.0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) len += distance(points[order[k]], points[order[k + 1]]);
  return len + distance(points[order.back()], points[order.front()]);
}

bool is_permutation_of(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t v : order) {
    if (v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Tour tsp_exact(std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n == 0) throw InvalidArgument("tsp_exact needs at least one point");
  if (n > kExactTspLimit) {
    throw SizeLimit("tsp_exact handles at most " + std::to_string(kExactTspLimit) + " points, got " +
                    std::to_string(n));
  }
  Tour tour;
  if (n <= 3) {
    tour.order.resize(n);
    std::iota(tour.order.begin(), tour.order.end(), std::size_t{0});
    tour.length = tour_length(points, tour.order);
    return tour;
  }

  // Bit k of a mask stands for point k + 1; point 0 is the fixed start.
  // g[mask][j] = shortest completion from point j after visiting mask,
  // ending back at point 0.
  const std::size_t m = n - 1;
  const std::size_t full = (std::size_t{1} << m) - 1;
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) d[a][b] = distance(points[a], points[b]);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g((full + 1) * m, inf);
  auto at = [&](std::size_t mask, std::size_t j) -> double& { return g[mask * m + (j - 1)]; };

  for (std::size_t j = 1; j < n; ++j) at(full, j) = d[j][0];
  for (std::size_t mask = full; mask-- > 1;) {
    for (std::size_t j = 1; j < n; ++j) {
      if (!(mask >> (j - 1) & 1u)) continue;
      double best = inf;
      for (std::size_t k = 1; k < n; ++k) {
        if (mask >> (k - 1) & 1u) continue;
        best = std::min(best, d[j][k] + at(mask | (std::size_t{1} << (k - 1)), k));
      }
      at(mask, j) = best;
    }
  }

  double optimum = inf;
  for (std::size_t k = 1; k < n; ++k) optimum = std::min(optimum, d[0][k] + at(std::size_t{1} << (k - 1), k));

  // Walk forward taking the smallest index that stays optimal.
  const double tol = 1e-9 * std::max(1.0, optimum);
  tour.order.push_back(0);
  std::size_t mask = 0;
  std::size_t cur = 0;
  double spent = 0.0;
  while (mask != full) {
    for (std::size_t k = 1; k < n; ++k) {
      if (mask >> (k - 1) & 1u) continue;
      const std::size_t next = mask | (std::size_t{1} << (k - 1));
      if (spent + d[cur][k] + at(next, k) <= optimum + tol) {
        spent += d[cur][k];
        mask = next;
        cur = k;
        tour.order.push_back(k);
        break;
      }
    }
  }
  tour.length = tour_length(points, tour.order);
  return tour;
}

double strip_bound(std::size_t s, double alpha) {
  return 3.0 * alpha * std::sqrt(static_cast<double>(s)) + 2.0 * alpha;
}

Tour tsp_strip(std::span<const Point> points, double alpha, Point origin) {
  if (!(alpha > 0.0)) throw InvalidArgument("square side must be positive");
  const std::size_t s = points.size();
  const double slack = 1e-12 * std::max(1.0, alpha);
  for (const auto& p : points) {
    if (p.x < origin.x - slack || p.x > origin.x + alpha + slack || p.y < origin.y - slack ||
        p.y > origin.y + alpha + slack) {
      throw InvalidArgument("point outside the square");
    }
  }
  Tour tour;
  if (s == 0) return tour;
  const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(s))));
  const double h = alpha / static_cast<double>(k);
  std::vector<std::vector<std::size_t>> strips(k);
  for (std::size_t i = 0; i < s; ++i) {
    const double rel = (points[i].y - origin.y) / h;
    const auto idx = static_cast<std::size_t>(std::clamp(std::floor(rel), 0.0, static_cast<double>(k - 1)));
    strips[idx].push_back(i);
  }
  for (std::size_t j = 0; j < k; ++j) {
    auto& strip = strips[j];
    const bool rightward = j % 2 == 0;
    std::stable_sort(strip.begin(), strip.end(), [&](std::size_t a, std::size_t b) {
      return rightward ? points[a].x < points[b].x : points[a].x > points[b].x;
    });
    tour.order.insert(tour.order.end(), strip.begin(), strip.end());
  }
  tour.length = tour_length(points, tour.order);
  const double bound = strip_bound(s, alpha);
  if (s >= 2 && tour.length > bound * (1.0 + 1e-9)) {
    throw std::logic_error("strip tour exceeds its certified bound");
  }
  return tour;
}

Tour tsp_2opt(std::span<const Point> points, Tour start, std::size_t max_passes) {
  const std::size_t n = points.size();
  if (!is_permutation_of(start.order, n)) throw InvalidArgument("start is not a tour of the points");
  auto& t = start.order;
  if (n >= 4) {
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
      bool improved = false;
      for (std::size_t i = 0; i + 2 < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
          if (i == 0 && j == n - 1) continue;
          const Point& a = points[t[i]];
          const Point& b = points[t[i + 1]];
          const Point& c = points[t[j]];
          const Point& d = points[t[(j + 1) % n]];
          const double delta = distance(a, c) + distance(b, d) - distance(a, b) - distance(c, d);
          if (delta < -1e-12) {
            std::reverse(t.begin() + static_cast<std::ptrdiff_t>(i + 1),
                         t.begin() + static_cast<std::ptrdiff_t>(j + 1));
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }
  start.length = tour_length(points, t);
  return start;
}

SpanningTree mst_weight(std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n == 0) throw InvalidArgument("mst_weight needs at least one point");
  SpanningTree tree;
  std::vector<bool> in(n, false);
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, 0);
  key[0] = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in[v] && (u == n || key[v] < key[u])) u = v;
    }
    in[u] = true;
    if (step > 0) {
      tree.edges.emplace_back(parent[u], u);
      tree.weight += key[u];
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (in[v]) continue;
      const double w = distance(points[u], points[v]);
      if (w < key[v]) {
        key[v] = w;
        parent[v] = u;
      }
    }
  }
  return tree;
}

std::string to_string(TspMethod m) { return m == TspMethod::Exact ? "exact" : "2opt_strip"; }

TspValue tsp_functional(std::span<const Point> points) {
  if (points.empty()) return {0.0, TspMethod::Exact};
  if (points.size() <= kExactTspLimit) return {tsp_exact(points).length, TspMethod::Exact};
  return {tsp_2opt(points, tsp_strip(points, 1.0)).length, TspMethod::TwoOptStrip};
}

}  // namespace conc::euclid
