#pragma once

// Longest increasing subsequence with essential-element statistics, and
// random unit vectors for projection-length concentration.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "conc/moments.hpp"

namespace conc::seq {

struct Sequence {
  std::vector<double> values;
  std::uint64_t seed = 0;
};

// n i.i.d. uniform [0, 1) values.
Sequence sample_sequence(std::size_t n, std::uint64_t seed);

// Length of the longest increasing subsequence, patience sorting.
// Equal values compare by position, so a run of ties counts as increasing.
std::size_t lis(std::span<const double> values);
inline std::size_t lis(const Sequence& s) { return lis(s.values); }

// Flags the positions that belong to every longest increasing subsequence,
// i.e. whose removal shortens it by one.
std::vector<bool> essential_positions(std::span<const double> values);

struct EssentialEstimate {
  std::size_t first_index = 0;             // i, the first resampled position
  std::vector<double> probability;         // a_j for j = i .. n-1
  std::vector<double> standard_error;
  // Standard error of a_j - a_{j+1} from paired resamples.
  std::vector<double> difference_standard_error;
  double suffix_lis_mean = 0.0;            // E lis(Y_i .. Y_n)
  double suffix_lis_standard_error = 0.0;
  std::size_t resamples = 0;
};

// Monte Carlo estimate of a_j = Pr(Y_j essential | Y_0 .. Y_{i-1} = prefix)
// for j >= i = prefix.size(), resampling the suffix uniformly.
EssentialEstimate essential_probability(std::size_t n, std::span<const double> prefix,
                                        std::size_t resamples, std::uint64_t seed);

// Law of the squared radius of a radial mixture.
struct RadialLaw {
  enum class Kind { Constant, ScaledBeta, TwoPoint, Pareto };
  Kind kind = Kind::Constant;
  // Constant: r2 = a.
  // ScaledBeta: r2 = lo + (hi - lo) B, B ~ Beta(a, b).
  // TwoPoint: r2 = a with probability p, else b.
  // Pareto: r2 = lo U^{-1/a} (tail index a > 1).
  double a = 1.0;
  double b = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double p = 0.5;

  static RadialLaw constant(double r2);
  static RadialLaw scaled_beta(double alpha, double beta, double lo, double hi);
  static RadialLaw two_point(double r2_a, double r2_b, double prob_a);
  // Pareto with mean one.
  static RadialLaw pareto(double tail_index);

  double mean() const;
  // Largest k with E r2^k finite; empty when every moment is finite.
  std::optional<int> finite_moment_order() const;
};

struct UnitVectorFamily {
  enum class Kind { SphereUniform, RadialMixture };
  Kind kind = Kind::SphereUniform;
  RadialLaw radial;

  static UnitVectorFamily sphere();
  static UnitVectorFamily radial_mixture(RadialLaw law);
  // Default admissible mixture: r2 ~ 1 + (2B - 1)/sqrt(n), B ~ Beta(2, 2).
  static UnitVectorFamily admissible_default(std::size_t n);
};

struct RandomUnitVector {
  std::vector<double> coords;
  UnitVectorFamily family;
  std::uint64_t seed = 0;
};

RandomUnitVector sample_unit_vector(std::size_t n, const UnitVectorFamily& family,
                                    std::uint64_t seed);

// E Y_i^2 for the family in dimension n.
double expected_coordinate_square(const UnitVectorFamily& family, std::size_t n);

struct ProjectionStatistic {
  double sum = 0.0;       // sum_{i<k} Y_i^2
  double centered = 0.0;  // sum_{i<k} (Y_i^2 - E Y_i^2)
};

ProjectionStatistic jl_projection_statistic(const RandomUnitVector& v, std::size_t k);

// E U^order for a coordinate U of the uniform unit sphere in `dim` dimensions.
double sphere_coordinate_moment(std::size_t dim, int order);

// Worst-case conditional moments of X_i = Y_i^2 - 1/n for the first k
// coordinates of the uniform sphere, over every value of the prefix.
bounds::MomentProfile sphere_projection_profile(std::size_t n, std::size_t k, int max_order);

struct ConditionalBin {
  double prefix_mean = 0.0;  // mean of W = Y_0^2 + ... + Y_{i-1}^2 in the bin
  double mean = 0.0;         // mean of Y_i^2 in the bin
  double standard_error = 0.0;
  std::size_t count = 0;
};

// Bins replicates by quantiles of W and reports E(Y_i^2 | bin). `squares`
// holds Y_j^2 for j < k per replicate.
std::vector<ConditionalBin> conditional_square_by_prefix(const moments::SampleMatrix& squares,
                                                         std::size_t i, std::size_t bins);

struct JlHypothesisReport {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t samples = 0;
  // Monotonicity of E(Y_i^2 | W): largest standardized increase between
  // adjacent W-bins, compared with a Bonferroni-adjusted normal quantile.
  double max_increase_z = 0.0;
  std::size_t worst_index = 0;
  double z_threshold = 0.0;
  bool monotone_ok = true;
  // Moment growth: growth[l] = max_i n^{l/2} E(Y_i^l) / l^{l/2} and the
  // implied constant c_l = growth^{2/l}.
  std::vector<int> orders;
  std::vector<double> growth;
  std::vector<double> implied_constant;
  double constant_threshold = 0.0;
  bool moments_ok = true;

  bool admissible() const { return monotone_ok && moments_ok; }
};

inline constexpr double kJlConstantThreshold = 2.0;
inline constexpr double kJlFamilywiseError = 1e-3;

// Report from precomputed squares Y_i^2 (columns i < k) in dimension n.
JlHypothesisReport check_jl_hypotheses(const moments::SampleMatrix& squares, std::size_t n,
                                       std::size_t bins = 10);

JlHypothesisReport check_jl_hypotheses(const UnitVectorFamily& family, std::size_t n,
                                       std::size_t k, std::size_t samples,
                                       std::uint64_t seed, std::size_t bins = 10);

}  // namespace conc::seq
