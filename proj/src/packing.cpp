#include "conc/packing.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "conc/error.hpp"

namespace conc::packing {

ItemDistribution::ItemDistribution(std::vector<double> s, std::vector<double> p)
    : sizes(std::move(s)), probs(std::move(p)) {
  if (sizes.empty()) throw InvalidArgument("item distribution needs at least one size");
  if (sizes.size() != probs.size()) throw InvalidArgument("sizes and probabilities differ in length");
  double total = 0.0;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (!(sizes[j] > 0.0 && sizes[j] <= 1.0)) throw InvalidArgument("item sizes must lie in (0, 1]");
    if (!(probs[j] >= 0.0)) throw InvalidArgument("probabilities must be non-negative");
    total += probs[j];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("probabilities must sum to one");
}

double ItemDistribution::mean() const {
  double mu = 0.0;
  for (std::size_t j = 0; j < sizes.size(); ++j) mu += probs[j] * sizes[j];
  return mu;
}

double ItemDistribution::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t j = 0; j < sizes.size(); ++j) v += probs[j] * (sizes[j] - mu) * (sizes[j] - mu);
  return v;
}

std::vector<std::int64_t> ItemDistribution::sample_counts(std::size_t n, CounterRng& rng) const {
  std::vector<double> cum(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cum.begin());
  std::vector<std::int64_t> counts(probs.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto j = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    ++counts[j];
  }
  return counts;
}

ItemDistribution lower_bound_distribution(int k) {
  if (k < 4) throw InvalidArgument("lower_bound_distribution needs k >= 4");
  const double kd = k;
  return ItemDistribution({(kd - 1.0) / (kd * (kd - 2.0)), 1.0 / kd},
                          {(kd - 2.0) / (kd - 1.0), 1.0 / (kd - 1.0)});
}

BinTypeSet enumerate_bin_types(const ItemDistribution& dist, bool maximal_only) {
  const std::size_t r = dist.types();
  if (r > 8) throw InvalidArgument("bin-type enumeration supports at most 8 item sizes");
  if (*std::min_element(dist.sizes.begin(), dist.sizes.end()) < 0.05) {
    throw InvalidArgument("bin-type enumeration needs every size >= 0.05");
  }
  BinTypeSet set;
  set.maximal_only = maximal_only;
  std::vector<int> a(r, 0);
  const double limit = 1.0 + kFitTolerance;
  // Odometer over a_0, ..., a_{r-1} with a_{r-1} varying fastest.
  auto fill = [&](auto&& self, std::size_t j, double used) -> void {
    if (j == r) {
      if (maximal_only) {
        for (std::size_t t = 0; t < r; ++t)
          if (used + dist.sizes[t] <= limit) return;
      }
      if (set.rows.size() >= kMaxBinTypes) throw SizeLimit("more than 10^6 bin types");
      set.rows.push_back(a);
      return;
    }
    for (a[j] = 0; used + a[j] * dist.sizes[j] <= limit; ++a[j]) self(self, j + 1, used + a[j] * dist.sizes[j]);
    a[j] = 0;
  };
  fill(fill, 0, 0.0);
  return set;
}

namespace {

using Rational = boost::multiprecision::cpp_rational;

template <class T>
struct Scalar;

template <>
struct Scalar<double> {
  static bool positive(double v, double scale) { return v > 1e-11 * scale; }
  static double to_double(double v) { return v; }
};

template <>
struct Scalar<Rational> {
  static bool positive(const Rational& v, double) { return v > 0; }
  static double to_double(const Rational& v) { return v.convert_to<double>(); }
};

template <class T>
LpSolution simplex_dual(const BinTypeSet& types, const std::vector<std::int64_t>& counts) {
  const std::size_t m = types.rows.size();
  const std::size_t r = counts.size();
  for (const auto& row : types.rows) {
    if (row.size() != r) throw InvalidArgument("bin type length differs from the count vector");
  }
  double scale = 1.0;
  for (auto c : counts) {
    if (c < 0) throw InvalidArgument("item counts must be non-negative");
    scale = std::max(scale, static_cast<double>(c));
  }

  // Tableau rows 0..m-1: [A | I | 1]; row m: [-n | 0 | 0].
  const std::size_t width = r + m + 1;
  std::vector<T> tab((m + 1) * width, T(0));
  auto at = [&](std::size_t i, std::size_t j) -> T& { return tab[i * width + j]; };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < r; ++j) at(i, j) = T(types.rows[i][j]);
    at(i, r + i) = T(1);
    at(i, width - 1) = T(1);
  }
  for (std::size_t j = 0; j < r; ++j) at(m, j) = T(-counts[j]);
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = r + i;

  LpSolution sol;
  for (;;) {
    std::size_t enter = width;
    for (std::size_t j = 0; j + 1 < width; ++j) {
      if (Scalar<T>::positive(-at(m, j), scale)) {
        enter = j;
        break;
      }
    }
    if (enter == width) break;
    std::size_t leave = m;
    T best_ratio(0);
    for (std::size_t i = 0; i < m; ++i) {
      if (!Scalar<T>::positive(at(i, enter), 1.0)) continue;
      const T ratio = at(i, width - 1) / at(i, enter);
      if (leave == m || ratio < best_ratio || (ratio == best_ratio && basis[i] < basis[leave])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave == m) {
      throw Infeasible("an item type with a positive count fits no bin type");
    }
    if (++sol.pivots > kMaxPivots) throw SizeLimit("simplex exceeded 10^6 pivots");
    const T piv = at(leave, enter);
    for (std::size_t j = 0; j < width; ++j) at(leave, j) /= piv;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const T f = at(i, enter);
      if (f == T(0)) continue;
      for (std::size_t j = 0; j < width; ++j) at(i, j) -= f * at(leave, j);
    }
    basis[leave] = enter;
  }

  sol.y.assign(r, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < r) sol.y[basis[i]] = std::max(0.0, Scalar<T>::to_double(at(i, width - 1)));
  }
  sol.x.assign(m, 0.0);
  T primal(0);
  for (std::size_t i = 0; i < m; ++i) {
    primal += at(m, r + i);
    const double xi = Scalar<T>::to_double(at(m, r + i));
    sol.x[i] = xi > 0.0 ? xi : 0.0;
    if (Scalar<T>::positive(at(m, r + i), 1.0)) ++sol.basis_size;
  }
  sol.value = Scalar<T>::to_double(primal);
  double dual = 0.0;
  for (std::size_t j = 0; j < r; ++j) dual += static_cast<double>(counts[j]) * sol.y[j];
  sol.dual_value = dual;
  return sol;
}

}  // namespace

LpSolution solve_packing_lp(const BinTypeSet& types, const std::vector<std::int64_t>& counts) {
  return simplex_dual<double>(types, counts);
}

LpSolution solve_packing_lp_exact(const BinTypeSet& types, const std::vector<std::int64_t>& counts) {
  return simplex_dual<Rational>(types, counts);
}

std::int64_t lp_round_up(const LpSolution& sol) {
  std::int64_t total = 0;
  for (double xi : sol.x) {
    if (xi <= 0.0) continue;
    total += static_cast<std::int64_t>(std::ceil(xi - 1e-9 * (1.0 + xi)));
  }
  return total;
}

void write_instances(std::ostream& out, const PackingInstance& inst) {
  auto join = [](const std::vector<double>& v) {
    std::string s;
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v[i]);
      s += (i ? "," : "") + std::string(buf);
    }
    return s;
  };
  out << "sizes=" << join(inst.dist.sizes) << "; probs=" << join(inst.dist.probs) << '\n';
  for (const auto& row : inst.counts) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
}

PackingInstance read_instances(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw InvalidArgument("missing instance header");
  auto parse_list = [&](const std::string& key) {
    const auto pos = header.find(key + "=");
    if (pos == std::string::npos) throw InvalidArgument("instance header lacks " + key);
    const auto end = header.find(';', pos);
    std::stringstream ss(header.substr(pos + key.size() + 1, end == std::string::npos ? std::string::npos
                                                                                       : end - pos - key.size() - 1));
    std::vector<double> v;
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    return v;
  };
  PackingInstance inst;
  inst.dist = ItemDistribution(parse_list("sizes"), parse_list("probs"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::int64_t> row;
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(std::stoll(tok));
    if (row.size() != inst.dist.types()) throw InvalidArgument("count row has the wrong length");
    inst.counts.push_back(std::move(row));
  }
  return inst;
}

std::vector<std::string> regime_warnings(const ItemDistribution& dist, std::size_t n) {
  std::vector<std::string> out;
  if (n < 3) return {"n too small for the regime conditions"};
  const double logn = std::log(static_cast<double>(n));
  for (std::size_t j = 0; j < dist.types(); ++j) {
    if (dist.probs[j] < 1.0 / logn) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "p_%zu = %.4g is below 1/log n = %.4g", j, dist.probs[j], 1.0 / logn);
      out.emplace_back(buf);
    }
  }
  const double r = static_cast<double>(dist.types());
  const double cap = 1.0 / (r * r * logn);
  if (dist.mean() > cap) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "mu = %.4g exceeds 1/(r^2 log n) = %.4g", dist.mean(), cap);
    out.emplace_back(buf);
  }
  return out;
}

double typical_band_violation_rate(const ItemDistribution& dist, std::size_t n, int m,
                                   std::size_t replicates, std::uint64_t seed, double c) {
  if (m < 1) throw InvalidArgument("m must be positive");
  const double mu = dist.mean();
  const double lg = std::log(10.0 * m / mu);
  std::vector<double> cum(dist.probs.size());
  std::partial_sum(dist.probs.begin(), dist.probs.end(), cum.begin());
  double violations = 0.0;
  for (std::size_t rep = 0; rep < replicates; ++rep) {
    CounterRng rng(seed, rep, 2);
    std::vector<double> counts(dist.types(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double prev = static_cast<double>(i);
      bool bad = false;
      for (std::size_t j = 0; j < dist.types(); ++j) {
        const double band = c * std::sqrt(m * lg * dist.probs[j] * prev);
        bad = bad || std::abs(counts[j] - dist.probs[j] * prev) > band;
      }
      violations += bad ? 1.0 : 0.0;
      const double u = rng.uniform() * cum.back();
      const auto j = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()),
          cum.size() - 1);
      counts[j] += 1.0;
    }
  }
  return violations / static_cast<double>(n * replicates);
}

}  // namespace conc::packing
