#pragma once

// Grid point process: sqrt(n) x sqrt(n) cells of side 1/sqrt(n), independent
// per-cell counts, and a placement rule inside each cell.
//
// Cell c sits at row c / side, column c % side; row 0 is the bottom row.
// Cells are half-open [x0, x1) x [y0, y1) except along the top and right
// edges of the unit square, which are closed.

#include <climits>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "conc/geometry.hpp"
#include "conc/rng.hpp"

namespace conc::pointproc {

class CellCountDistribution {
 public:
  enum class Kind { Poisson, Zeta, TwoPoint, Deterministic };
  static constexpr int kAllMoments = INT_MAX;

  static CellCountDistribution poisson(double mean);
  // Pr(K = k) proportional to k^-s on 1..cap.
  static CellCountDistribution zeta(double exponent, std::uint64_t cap);
  // 0 with probability p0, otherwise `value`.
  static CellCountDistribution two_point(double p0, std::uint64_t value);
  static CellCountDistribution deterministic(std::uint64_t k);

  Kind kind() const { return kind_; }
  double mean_param() const { return mean_; }
  double exponent() const { return exponent_; }
  std::uint64_t cap() const { return cap_; }
  double p0() const { return p0_; }
  std::uint64_t value() const { return value_; }

  std::uint64_t sample(CounterRng& rng) const;
  double pmf(std::uint64_t k) const;
  double prob_zero() const { return pmf(0); }
  // E K^l.
  double raw_moment(int l) const;
  double mean() const { return raw_moment(1); }
  double variance() const;
  // Largest l with E K^l finite for the untruncated law.
  int moment_order_valid() const;

  // Implied epsilon in E K^l <= l^{(2 - eps) l}; positive means the order-l
  // moment meets the growth condition with unit constant.
  double growth_epsilon(int l) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::Deterministic;
  double mean_ = 0.0;
  double exponent_ = 0.0;
  std::uint64_t cap_ = 0;
  double p0_ = 0.0;
  std::uint64_t value_ = 0;
  double zeta_norm_ = 0.0;  // sum_{k<=cap} k^-s
};

// UniformInCell: i.i.d. uniform in the cell. CornerBunch: every point on one
// random corner of the cell. GridSpread: centres of a ceil(sqrt k) lattice.
// AdversarialDiagonal: every point on the corner nearest (0.5, 0.5).
enum class Placement { UniformInCell, CornerBunch, GridSpread, AdversarialDiagonal };

std::string to_string(Placement p);
Placement placement_from_string(const std::string& name);

struct PointSetConfig {
  std::size_t n_cells = 4;
  CellCountDistribution counts = CellCountDistribution::deterministic(1);
  Placement placement = Placement::UniformInCell;

  std::string canonical() const;
  std::uint64_t hash() const;  // FNV-1a of canonical()
};

struct CellBox {
  double x0, x1, y0, y1;
  bool closed_right;
  bool closed_top;
  bool contains(const Point& p) const;
};

std::size_t grid_side(std::size_t n_cells);  // throws unless a perfect square
CellBox cell_box(std::size_t n_cells, std::size_t cell);

struct PointSet {
  std::size_t n_cells = 0;
  std::size_t side = 0;
  std::vector<PointList> cells;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  std::size_t total() const;
  // All points, cell by cell.
  PointList points() const;
  void write_csv(std::ostream& out) const;
};

PointSet sample_point_set(const PointSetConfig& config, std::uint64_t seed);
// Points of one cell, drawn from the same streams sample_point_set uses.
PointList sample_cell(const PointSetConfig& config, std::size_t cell, std::uint64_t seed);
PointSet sample_point_set(std::size_t n_cells, const CellCountDistribution& counts,
                          Placement placement, std::uint64_t seed);

// Cells ordered by layer min(row, col), row-major within a layer; the last
// cell is the top-right one.
std::vector<std::size_t> layer_order(std::size_t n_cells);
std::size_t layer_of(std::size_t n_cells, std::size_t cell);

// tau0 for the k-th cell in layer order: distance from that cell's square to
// the nearest point in later cells, capped at 2 sqrt 2.
std::vector<double> tau0_profile(const PointSet& ps);
// Per-layer means of tau0_profile.
std::vector<double> tau0_layer_means(const PointSet& ps);

}  // namespace conc::pointproc
