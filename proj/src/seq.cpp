#include "conc/seq.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>
#include <string>

#include "conc/error.hpp"
#include "conc/rng.hpp"

namespace conc::seq {

namespace {

// L[j] = length of the longest increasing subsequence ending at j.
std::vector<std::size_t> lengths_ending_at(std::span<const double> values) {
  std::vector<double> tails;
  std::vector<std::size_t> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    const auto it = std::upper_bound(tails.begin(), tails.end(), values[j]);
    out[j] = static_cast<std::size_t>(it - tails.begin()) + 1;
    if (it == tails.end()) {
      tails.push_back(values[j]);
    } else {
      *it = values[j];
    }
  }
  return out;
}

}  // namespace

Sequence sample_sequence(std::size_t n, std::uint64_t seed) {
  Sequence s;
  s.seed = seed;
  s.values.resize(n);
  CounterRng rng(seed, 0, 0);
  for (auto& v : s.values) v = rng.uniform();
  return s;
}

std::size_t lis(std::span<const double> values) {
  std::vector<double> tails;
  tails.reserve(64);
  for (double v : values) {
    const auto it = std::upper_bound(tails.begin(), tails.end(), v);
    if (it == tails.end()) {
      tails.push_back(v);
    } else {
      *it = v;
    }
  }
  return tails.size();
}

std::vector<bool> essential_positions(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<bool> out(n, false);
  if (n == 0) return out;
  const auto left = lengths_ending_at(values);
  // Longest increasing run starting at j, via the reversed negated sequence.
  std::vector<double> mirrored(n);
  for (std::size_t j = 0; j < n; ++j) mirrored[j] = -values[n - 1 - j];
  const auto mirrored_left = lengths_ending_at(mirrored);
  const std::size_t f = *std::max_element(left.begin(), left.end());

  // A position on some longest subsequence is on all of them exactly when it
  // is the only such position at its level.
  std::vector<std::size_t> level_count(f + 1, 0);
  std::vector<std::size_t> level_member(f + 1, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t right = mirrored_left[n - 1 - j];
    if (left[j] + right - 1 == f) {
      ++level_count[left[j]];
      level_member[left[j]] = j;
    }
  }
  for (std::size_t level = 1; level <= f; ++level) {
    if (level_count[level] == 1) out[level_member[level]] = true;
  }
  return out;
}

EssentialEstimate essential_probability(std::size_t n, std::span<const double> prefix,
                                        std::size_t resamples, std::uint64_t seed) {
  if (resamples < 100) throw InvalidArgument("essential_probability needs resamples >= 100");
  if (prefix.size() > n) throw InvalidArgument("prefix longer than the sequence");
  const std::size_t i = prefix.size();
  const std::size_t m = n - i;

  EssentialEstimate est;
  est.first_index = i;
  est.resamples = resamples;
  std::vector<double> hits(m, 0.0);
  std::vector<double> diff_sum(m > 0 ? m - 1 : 0, 0.0);
  std::vector<double> diff_sumsq(diff_sum.size(), 0.0);
  double lis_sum = 0.0;
  double lis_sumsq = 0.0;

  std::vector<double> y(prefix.begin(), prefix.end());
  y.resize(n);
  for (std::size_t r = 0; r < resamples; ++r) {
    CounterRng rng(seed, r, 0);
    for (std::size_t j = i; j < n; ++j) y[j] = rng.uniform();
    const auto flags = essential_positions(y);
    for (std::size_t j = 0; j < m; ++j) hits[j] += flags[i + j] ? 1.0 : 0.0;
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const double d = (flags[i + j] ? 1.0 : 0.0) - (flags[i + j + 1] ? 1.0 : 0.0);
      diff_sum[j] += d;
      diff_sumsq[j] += d * d;
    }
    const double l = static_cast<double>(lis(std::span<const double>(y).subspan(i)));
    lis_sum += l;
    lis_sumsq += l * l;
  }

  const double R = static_cast<double>(resamples);
  auto se_of = [R](double sum, double sumsq) {
    const double mean = sum / R;
    const double var = std::max(0.0, (sumsq - R * mean * mean) / (R - 1.0));
    return std::sqrt(var / R);
  };
  est.probability.resize(m);
  est.standard_error.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    // Indicators: sum of squares equals the sum.
    est.probability[j] = hits[j] / R;
    est.standard_error[j] = se_of(hits[j], hits[j]);
  }
  est.difference_standard_error.resize(diff_sum.size());
  for (std::size_t j = 0; j < diff_sum.size(); ++j) {
    est.difference_standard_error[j] = se_of(diff_sum[j], diff_sumsq[j]);
  }
  est.suffix_lis_mean = lis_sum / R;
  est.suffix_lis_standard_error = se_of(lis_sum, lis_sumsq);
  return est;
}

RadialLaw RadialLaw::constant(double r2) {
  if (!(r2 > 0.0)) throw InvalidArgument("radius must be positive");
  RadialLaw law;
  law.kind = Kind::Constant;
  law.a = r2;
  return law;
}

RadialLaw RadialLaw::scaled_beta(double alpha, double beta, double lo, double hi) {
  if (!(alpha > 0.0 && beta > 0.0)) throw InvalidArgument("beta shape parameters must be positive");
  if (!(lo >= 0.0 && hi > lo)) throw InvalidArgument("scaled beta needs 0 <= lo < hi");
  RadialLaw law;
  law.kind = Kind::ScaledBeta;
  law.a = alpha;
  law.b = beta;
  law.lo = lo;
  law.hi = hi;
  return law;
}

RadialLaw RadialLaw::two_point(double r2_a, double r2_b, double prob_a) {
  if (!(r2_a >= 0.0 && r2_b >= 0.0)) throw InvalidArgument("radii must be non-negative");
  if (!(prob_a >= 0.0 && prob_a <= 1.0)) throw InvalidArgument("probability outside [0, 1]");
  RadialLaw law;
  law.kind = Kind::TwoPoint;
  law.a = r2_a;
  law.b = r2_b;
  law.p = prob_a;
  return law;
}

RadialLaw RadialLaw::pareto(double tail_index) {
  if (!(tail_index > 1.0)) throw InvalidArgument("Pareto tail index must exceed 1");
  RadialLaw law;
  law.kind = Kind::Pareto;
  law.a = tail_index;
  law.lo = (tail_index - 1.0) / tail_index;
  return law;
}

double RadialLaw::mean() const {
  switch (kind) {
    case Kind::Constant:
      return a;
    case Kind::ScaledBeta:
      return lo + (hi - lo) * a / (a + b);
    case Kind::TwoPoint:
      return p * a + (1.0 - p) * b;
    case Kind::Pareto:
      return lo * a / (a - 1.0);
  }
  return a;
}

std::optional<int> RadialLaw::finite_moment_order() const {
  if (kind != Kind::Pareto) return std::nullopt;
  // E r2^k is finite iff k < tail index.
  return static_cast<int>(std::ceil(a) - 1.0);
}

UnitVectorFamily UnitVectorFamily::sphere() { return {}; }

UnitVectorFamily UnitVectorFamily::radial_mixture(RadialLaw law) {
  UnitVectorFamily f;
  f.kind = Kind::RadialMixture;
  f.radial = law;
  return f;
}

UnitVectorFamily UnitVectorFamily::admissible_default(std::size_t n) {
  if (n < 1) throw InvalidArgument("dimension must be >= 1");
  const double h = std::min(0.5, 1.0 / std::sqrt(static_cast<double>(n)));
  return radial_mixture(RadialLaw::scaled_beta(2.0, 2.0, 1.0 - h, 1.0 + h));
}

namespace {

double draw_r2(const RadialLaw& law, CounterRng& rng) {
  switch (law.kind) {
    case RadialLaw::Kind::Constant:
      return law.a;
    case RadialLaw::Kind::ScaledBeta: {
      std::gamma_distribution<double> ga(law.a, 1.0);
      std::gamma_distribution<double> gb(law.b, 1.0);
      const double x = ga(rng);
      const double y = gb(rng);
      return law.lo + (law.hi - law.lo) * x / (x + y);
    }
    case RadialLaw::Kind::TwoPoint:
      return rng.uniform() < law.p ? law.a : law.b;
    case RadialLaw::Kind::Pareto:
      return law.lo * std::pow(rng.uniform_open(), -1.0 / law.a);
  }
  return 1.0;
}

}  // namespace

RandomUnitVector sample_unit_vector(std::size_t n, const UnitVectorFamily& family,
                                    std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("dimension must be >= 1");
  RandomUnitVector v;
  v.family = family;
  v.seed = seed;
  v.coords.resize(n);
  CounterRng rng(seed, 0, 0);
  std::normal_distribution<double> z;
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& c : v.coords) {
      c = z(rng);
      norm2 += c * c;
    }
  } while (norm2 == 0.0);
  const double norm = std::sqrt(norm2);
  for (auto& c : v.coords) c /= norm;
  if (family.kind == UnitVectorFamily::Kind::RadialMixture) {
    CounterRng radial(seed, 0, 1);
    const double r = std::sqrt(draw_r2(family.radial, radial));
    for (auto& c : v.coords) c *= r;
  }
  return v;
}

double expected_coordinate_square(const UnitVectorFamily& family, std::size_t n) {
  const double base = 1.0 / static_cast<double>(n);
  if (family.kind == UnitVectorFamily::Kind::SphereUniform) return base;
  return base * family.radial.mean();
}

ProjectionStatistic jl_projection_statistic(const RandomUnitVector& v, std::size_t k) {
  const std::size_t n = v.coords.size();
  if (k > n) throw InvalidArgument("k exceeds the dimension");
  const double center = expected_coordinate_square(v.family, n);
  ProjectionStatistic s;
  for (std::size_t i = 0; i < k; ++i) s.sum += v.coords[i] * v.coords[i];
  s.centered = s.sum - static_cast<double>(k) * center;
  return s;
}

double sphere_coordinate_moment(std::size_t dim, int order) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  if (order < 0) throw InvalidArgument("order must be non-negative");
  if (order % 2 != 0) return 0.0;
  long double m = 1.0L;
  for (int r = 0; r < order / 2; ++r) {
    m *= (1.0L + 2.0L * r) / (static_cast<long double>(dim) + 2.0L * r);
  }
  return static_cast<double>(m);
}

bounds::MomentProfile sphere_projection_profile(std::size_t n, std::size_t k, int max_order) {
  if (k > n) throw InvalidArgument("k exceeds the dimension");
  bounds::MomentProfile profile(k, max_order);
  const long double c = 1.0L / static_cast<long double>(n);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t dim = n - i;
    for (int l = 2; l <= max_order; l += 2) {
      // E (U^2 - c)^l by binomial expansion over the sphere moments.
      long double sum = 0.0L;
      long double binom = 1.0L;
      for (int j = 0; j <= l; ++j) {
        sum += binom * static_cast<long double>(sphere_coordinate_moment(dim, 2 * j)) *
               std::pow(-c, static_cast<long double>(l - j));
        binom = binom * (l - j) / (j + 1);
      }
      const long double empty = std::pow(c, static_cast<long double>(l));
      profile.set(i, l, static_cast<double>(std::max(std::max(sum, 0.0L), empty)));
    }
  }
  return profile;
}

std::vector<ConditionalBin> conditional_square_by_prefix(const moments::SampleMatrix& squares,
                                                         std::size_t i, std::size_t bins) {
  if (i >= squares.cols()) throw InvalidArgument("coordinate index out of range");
  if (bins < 1) throw InvalidArgument("bins must be >= 1");
  const std::size_t N = squares.rows();
  if (N < bins) throw InvalidArgument("fewer samples than bins");
  const auto w = squares.prefix_sums(i);
  std::vector<std::size_t> order(N);
  for (std::size_t r = 0; r < N; ++r) order[r] = r;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
  std::vector<ConditionalBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t begin = b * N / bins;
    const std::size_t end = (b + 1) * N / bins;
    double sw = 0.0, sy = 0.0, syy = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t r = order[t];
      sw += w[r];
      sy += squares(r, i);
      syy += squares(r, i) * squares(r, i);
    }
    const double cnt = static_cast<double>(end - begin);
    auto& bin = out[b];
    bin.count = end - begin;
    bin.prefix_mean = sw / cnt;
    bin.mean = sy / cnt;
    const double var = cnt > 1 ? std::max(0.0, (syy - cnt * bin.mean * bin.mean) / (cnt - 1.0)) : 0.0;
    bin.standard_error = std::sqrt(var / cnt);
  }
  return out;
}

JlHypothesisReport check_jl_hypotheses(const moments::SampleMatrix& squares, std::size_t n,
                                       std::size_t bins) {
  const std::size_t k = squares.cols();
  if (k < 1) throw InvalidArgument("need at least one coordinate");
  JlHypothesisReport rep;
  rep.n = n;
  rep.k = k;
  rep.samples = squares.rows();

  const std::size_t pairs_per_index = bins * (bins - 1) / 2;
  const std::size_t tests = std::max<std::size_t>(1, (k - 1) * pairs_per_index);
  const boost::math::normal normal;
  rep.z_threshold =
      boost::math::quantile(boost::math::complement(normal, kJlFamilywiseError / tests));
  for (std::size_t i = 1; i < k && bins > 1; ++i) {
    const auto cb = conditional_square_by_prefix(squares, i, bins);
    for (std::size_t a = 0; a < bins; ++a) {
      for (std::size_t b = a + 1; b < bins; ++b) {
        const double se = std::hypot(cb[a].standard_error, cb[b].standard_error);
        if (se <= 0.0) continue;
        const double z = (cb[b].mean - cb[a].mean) / se;
        if (z > rep.max_increase_z) {
          rep.max_increase_z = z;
          rep.worst_index = i;
        }
      }
    }
  }
  rep.monotone_ok = rep.max_increase_z <= rep.z_threshold;

  rep.orders = {2, 4, 6};
  rep.constant_threshold = kJlConstantThreshold;
  const double dn = static_cast<double>(n);
  for (int l : rep.orders) {
    const double half = l / 2.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double sum = 0.0;
      for (std::size_t r = 0; r < squares.rows(); ++r) sum += std::pow(squares(r, i), half);
      worst = std::max(worst, sum / static_cast<double>(squares.rows()));
    }
    const double growth = std::pow(dn, half) * worst / std::pow(static_cast<double>(l), half);
    rep.growth.push_back(growth);
    rep.implied_constant.push_back(std::pow(growth, 1.0 / half));
    if (rep.implied_constant.back() > rep.constant_threshold) rep.moments_ok = false;
  }
  return rep;
}

JlHypothesisReport check_jl_hypotheses(const UnitVectorFamily& family, std::size_t n,
                                       std::size_t k, std::size_t samples,
                                       std::uint64_t seed, std::size_t bins) {
  if (samples < 10000) throw InvalidArgument("check_jl_hypotheses needs samples >= 10^4");
  if (k < 1 || k > n) throw InvalidArgument("need 1 <= k <= n");
  moments::SampleMatrix squares(samples, k);
  for (std::size_t r = 0; r < samples; ++r) {
    const auto v = sample_unit_vector(n, family, derive_seed(seed, r));
    for (std::size_t i = 0; i < k; ++i) squares(r, i) = v.coords[i] * v.coords[i];
  }
  return check_jl_hypotheses(squares, n, bins);
}

}  // namespace conc::seq
