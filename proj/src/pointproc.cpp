#include "conc/pointproc.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "conc/error.hpp"

namespace conc::pointproc {

namespace {

// sum_{k=1}^{cap} k^-p: exact up to a cutoff, Euler-Maclaurin beyond it.
double power_sum(double p, std::uint64_t cap) {
  constexpr std::uint64_t kDirect = 100000;
  const std::uint64_t direct = std::min(cap, kDirect);
  long double s = 0.0L;
  for (std::uint64_t k = direct; k >= 1; --k) s += std::pow(static_cast<long double>(k), -p);
  if (cap <= kDirect) return static_cast<double>(s);
  const long double a = static_cast<long double>(kDirect);
  const long double b = static_cast<long double>(cap);
  auto f = [p](long double x) { return std::pow(x, -static_cast<long double>(p)); };
  auto df = [p](long double x) { return -p * std::pow(x, -static_cast<long double>(p) - 1.0L); };
  const long double integral =
      std::abs(p - 1.0) < 1e-12 ? std::log(b / a)
                                : (std::pow(b, 1.0L - p) - std::pow(a, 1.0L - p)) / (1.0L - p);
  // sum over a..b minus the already counted f(a).
  const long double tail = integral + (f(a) + f(b)) / 2.0L + (df(b) - df(a)) / 12.0L - f(a);
  return static_cast<double>(s + tail);
}

// E N^l for N ~ Poisson(lambda) via Stirling numbers of the second kind.
double poisson_moment(double lambda, int l) {
  std::vector<double> row{1.0};  // S(0, 0)
  for (int r = 1; r <= l; ++r) {
    std::vector<double> next(r + 1, 0.0);
    for (int k = 1; k <= r; ++k) {
      next[k] = (k < r ? k * row[k] : 0.0) + row[k - 1];
    }
    row = std::move(next);
  }
  double acc = 0.0;
  double pw = 1.0;
  for (int k = 0; k <= l; ++k) {
    acc += row[k] * pw;
    pw *= lambda;
  }
  return acc;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CellCountDistribution CellCountDistribution::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw InvalidArgument("Poisson mean must be >= 0");
  CellCountDistribution d;
  d.kind_ = Kind::Poisson;
  d.mean_ = mean;
  return d;
}

CellCountDistribution CellCountDistribution::zeta(double exponent, std::uint64_t cap) {
  if (!(exponent > 1.0)) throw InvalidArgument("zeta exponent must exceed 1");
  if (cap < 1) throw InvalidArgument("zeta cap must be >= 1");
  CellCountDistribution d;
  d.kind_ = Kind::Zeta;
  d.exponent_ = exponent;
  d.cap_ = cap;
  d.zeta_norm_ = power_sum(exponent, cap);
  return d;
}

CellCountDistribution CellCountDistribution::two_point(double p0, std::uint64_t value) {
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw InvalidArgument("p0 must lie in [0, 1]");
  CellCountDistribution d;
  d.kind_ = Kind::TwoPoint;
  d.p0_ = p0;
  d.value_ = value;
  return d;
}

CellCountDistribution CellCountDistribution::deterministic(std::uint64_t k) {
  CellCountDistribution d;
  d.kind_ = Kind::Deterministic;
  d.value_ = k;
  return d;
}

std::uint64_t CellCountDistribution::sample(CounterRng& rng) const {
  switch (kind_) {
    case Kind::Poisson: {
      if (mean_ == 0.0) return 0;
      std::poisson_distribution<std::uint64_t> pd(mean_);
      return pd(rng);
    }
    case Kind::Zeta: {
      // Devroye's rejection sampler for the Zipf law, restricted to 1..cap.
      const double s1 = exponent_ - 1.0;
      const double b = std::pow(2.0, s1);
      for (;;) {
        const double u = rng.uniform_open();
        const double v = rng.uniform();
        const double x = std::floor(std::pow(u, -1.0 / s1));
        if (!(x >= 1.0) || x > static_cast<double>(cap_)) continue;
        const double t = std::pow(1.0 + 1.0 / x, s1);
        if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::uint64_t>(x);
      }
    }
    case Kind::TwoPoint:
      return rng.uniform() < p0_ ? 0 : value_;
    case Kind::Deterministic:
      return value_;
  }
  return 0;
}

double CellCountDistribution::pmf(std::uint64_t k) const {
  switch (kind_) {
    case Kind::Poisson: {
      if (mean_ == 0.0) return k == 0 ? 1.0 : 0.0;
      const double kd = static_cast<double>(k);
      return std::exp(kd * std::log(mean_) - mean_ - std::lgamma(kd + 1.0));
    }
    case Kind::Zeta:
      if (k < 1 || k > cap_) return 0.0;
      return std::pow(static_cast<double>(k), -exponent_) / zeta_norm_;
    case Kind::TwoPoint:
      if (value_ == 0) return k == 0 ? 1.0 : 0.0;
      if (k == 0) return p0_;
      return k == value_ ? 1.0 - p0_ : 0.0;
    case Kind::Deterministic:
      return k == value_ ? 1.0 : 0.0;
  }
  return 0.0;
}

double CellCountDistribution::raw_moment(int l) const {
  if (l < 0) throw InvalidArgument("moment order must be >= 0");
  if (l == 0) return 1.0;
  switch (kind_) {
    case Kind::Poisson:
      return poisson_moment(mean_, l);
    case Kind::Zeta:
      return power_sum(exponent_ - l, cap_) / zeta_norm_;
    case Kind::TwoPoint:
      return (1.0 - p0_) * std::pow(static_cast<double>(value_), l);
    case Kind::Deterministic:
      return std::pow(static_cast<double>(value_), l);
  }
  return 0.0;
}

double CellCountDistribution::variance() const {
  const double m = raw_moment(1);
  return raw_moment(2) - m * m;
}

int CellCountDistribution::moment_order_valid() const {
  if (kind_ != Kind::Zeta) return kAllMoments;
  return static_cast<int>(std::ceil(exponent_ - 1.0)) - 1;
}

double CellCountDistribution::growth_epsilon(int l) const {
  if (l < 2) throw InvalidArgument("growth order must be >= 2");
  const double m = raw_moment(l);
  if (m <= 0.0) return 2.0;
  return 2.0 - std::log(m) / (l * std::log(static_cast<double>(l)));
}

std::string CellCountDistribution::describe() const {
  switch (kind_) {
    case Kind::Poisson:
      return "poisson(mean=" + fmt_double(mean_) + ")";
    case Kind::Zeta:
      return "zeta(s=" + fmt_double(exponent_) + ",cap=" + std::to_string(cap_) + ")";
    case Kind::TwoPoint:
      return "two_point(p0=" + fmt_double(p0_) + ",value=" + std::to_string(value_) + ")";
    case Kind::Deterministic:
      return "deterministic(k=" + std::to_string(value_) + ")";
  }
  return "?";
}

std::string to_string(Placement p) {
  switch (p) {
    case Placement::UniformInCell:
      return "UniformInCell";
    case Placement::CornerBunch:
      return "CornerBunch";
    case Placement::GridSpread:
      return "GridSpread";
    case Placement::AdversarialDiagonal:
      return "AdversarialDiagonal";
  }
  return "?";
}

Placement placement_from_string(const std::string& name) {
  for (auto p : {Placement::UniformInCell, Placement::CornerBunch, Placement::GridSpread,
                 Placement::AdversarialDiagonal}) {
    if (to_string(p) == name) return p;
  }
  throw InvalidArgument("unknown placement: " + name);
}

std::string PointSetConfig::canonical() const {
  return "cells=" + std::to_string(n_cells) + ";counts=" + counts.describe() +
         ";placement=" + to_string(placement);
}

std::uint64_t PointSetConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool CellBox::contains(const Point& p) const {
  const bool in_x = p.x >= x0 && (closed_right ? p.x <= x1 : p.x < x1);
  const bool in_y = p.y >= y0 && (closed_top ? p.y <= y1 : p.y < y1);
  return in_x && in_y;
}

std::size_t grid_side(std::size_t n_cells) {
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_cells))));
  if (side * side != n_cells) {
    throw InvalidArgument("cell count " + std::to_string(n_cells) + " is not a perfect square");
  }
  return side;
}

CellBox cell_box(std::size_t n_cells, std::size_t cell) {
  const std::size_t side = grid_side(n_cells);
  if (cell >= n_cells) throw InvalidArgument("cell index out of range");
  const std::size_t row = cell / side;
  const std::size_t col = cell % side;
  const double s = static_cast<double>(side);
  return {static_cast<double>(col) / s, static_cast<double>(col + 1) / s,
          static_cast<double>(row) / s, static_cast<double>(row + 1) / s, col + 1 == side,
          row + 1 == side};
}

std::size_t PointSet::total() const {
  std::size_t t = 0;
  for (const auto& c : cells) t += c.size();
  return t;
}

PointList PointSet::points() const {
  PointList out;
  out.reserve(total());
  for (const auto& c : cells) out.insert(out.end(), c.begin(), c.end());
  return out;
}

void PointSet::write_csv(std::ostream& out) const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# config_hash=%016" PRIx64 " seed=%" PRIu64 "\n", config_hash,
                seed);
  out << buf << "cell_index,x,y\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const auto& p : cells[c]) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", c, p.x, p.y);
      out << buf;
    }
  }
}

namespace {

double inside_upper(double lo, double hi, double v, bool closed) {
  if (closed) return std::min(v, hi);
  return v < hi ? v : std::nextafter(hi, lo);
}

void place(const CellBox& box, std::size_t k, Placement placement, CounterRng& rng,
           PointList& out) {
  const double w = box.x1 - box.x0;
  const double h = box.y1 - box.y0;
  switch (placement) {
    case Placement::UniformInCell:
      for (std::size_t a = 0; a < k; ++a) {
        const double x = inside_upper(box.x0, box.x1, box.x0 + w * rng.uniform(), box.closed_right);
        const double y = inside_upper(box.y0, box.y1, box.y0 + h * rng.uniform(), box.closed_top);
        out.push_back({x, y});
      }
      break;
    case Placement::CornerBunch: {
      // One random corner per cell, shared by all of its points.
      const auto corner = rng() >> 62;
      const double x = corner & 1u ? inside_upper(box.x0, box.x1, box.x1, box.closed_right) : box.x0;
      const double y = corner & 2u ? inside_upper(box.y0, box.y1, box.y1, box.closed_top) : box.y0;
      out.assign(k, Point{x, y});
      break;
    }
    case Placement::GridSpread: {
      const auto g = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))));
      for (std::size_t a = 0; a < k; ++a) {
        const double x = box.x0 + w * (static_cast<double>(a % g) + 0.5) / static_cast<double>(g);
        const double y = box.y0 + h * (static_cast<double>(a / g) + 0.5) / static_cast<double>(g);
        out.push_back({inside_upper(box.x0, box.x1, x, box.closed_right),
                       inside_upper(box.y0, box.y1, y, box.closed_top)});
      }
      break;
    }
    case Placement::AdversarialDiagonal: {
      // Corner nearest the centre of the unit square; lower corner on ties.
      const bool use_x1 = std::abs(box.x1 - 0.5) < std::abs(box.x0 - 0.5);
      const bool use_y1 = std::abs(box.y1 - 0.5) < std::abs(box.y0 - 0.5);
      const double x = use_x1 ? inside_upper(box.x0, box.x1, box.x1, box.closed_right) : box.x0;
      const double y = use_y1 ? inside_upper(box.y0, box.y1, box.y1, box.closed_top) : box.y0;
      out.assign(k, Point{x, y});
      break;
    }
  }
}

}  // namespace

PointSet sample_point_set(const PointSetConfig& config, std::uint64_t seed) {
  const std::size_t side = grid_side(config.n_cells);
  if (config.n_cells < 4) throw InvalidArgument("need at least 4 cells");
  PointSet ps;
  ps.n_cells = config.n_cells;
  ps.side = side;
  ps.seed = seed;
  ps.config_hash = config.hash();
  ps.cells.resize(config.n_cells);
  for (std::size_t c = 0; c < config.n_cells; ++c) ps.cells[c] = sample_cell(config, c, seed);
  return ps;
}

PointList sample_cell(const PointSetConfig& config, std::size_t cell, std::uint64_t seed) {
  if (cell >= config.n_cells) throw InvalidArgument("cell index out of range");
  CounterRng count_rng(seed, cell, 0);
  CounterRng place_rng(seed, cell, 1);
  const std::uint64_t k = config.counts.sample(count_rng);
  PointList out;
  place(cell_box(config.n_cells, cell), static_cast<std::size_t>(k), config.placement, place_rng,
        out);
  return out;
}

PointSet sample_point_set(std::size_t n_cells, const CellCountDistribution& counts,
                          Placement placement, std::uint64_t seed) {
  return sample_point_set(PointSetConfig{n_cells, counts, placement}, seed);
}

std::size_t layer_of(std::size_t n_cells, std::size_t cell) {
  const std::size_t side = grid_side(n_cells);
  return std::min(cell / side, cell % side);
}

std::vector<std::size_t> layer_order(std::size_t n_cells) {
  const std::size_t side = grid_side(n_cells);
  std::vector<std::size_t> order;
  order.reserve(n_cells);
  for (std::size_t layer = 0; layer < side; ++layer) {
    for (std::size_t c = 0; c < n_cells; ++c) {
      if (std::min(c / side, c % side) == layer) order.push_back(c);
    }
  }
  return order;
}

std::vector<double> tau0_profile(const PointSet& ps) {
  const auto order = layer_order(ps.n_cells);
  const double cap = 2.0 * std::sqrt(2.0);
  std::vector<double> out(order.size(), cap);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto box = cell_box(ps.n_cells, order[k]);
    double best = cap;
    for (std::size_t later = k + 1; later < order.size(); ++later) {
      for (const auto& p : ps.cells[order[later]]) {
        const double dx = std::max({box.x0 - p.x, 0.0, p.x - box.x1});
        const double dy = std::max({box.y0 - p.y, 0.0, p.y - box.y1});
        best = std::min(best, std::hypot(dx, dy));
      }
    }
    out[k] = best;
  }
  return out;
}

std::vector<double> tau0_layer_means(const PointSet& ps) {
  const auto order = layer_order(ps.n_cells);
  const auto tau = tau0_profile(ps);
  std::vector<double> sum(ps.side, 0.0);
  std::vector<double> count(ps.side, 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t layer = layer_of(ps.n_cells, order[k]);
    sum[layer] += tau[k];
    count[layer] += 1.0;
  }
  for (std::size_t l = 0; l < sum.size(); ++l) sum[l] /= count[l];
  return sum;
}

}  // namespace conc::pointproc
