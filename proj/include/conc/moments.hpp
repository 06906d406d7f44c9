#pragma once

// Empirical side of the moment hypotheses: conditional moments given the
// prefix sum, the strong-negative-correlation statistics, and Doob
// martingale differences estimated by nested Monte Carlo.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "conc/bounds.hpp"
#include "conc/error.hpp"
#include "conc/rng.hpp"

namespace conc::moments {

// N replicates (rows) of n variables (columns), row-major.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t rows, std::size_t cols);
  SampleMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  // S_{i-1} = X_0 + ... + X_{i-1} (exclusive of column i) for every row.
  std::vector<double> prefix_sums(std::size_t i) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Per-bin sample means of X_i^l with replicates binned by quantiles of the
// prefix sum. max_over_bins estimates the worst-case bound M_{il}; it is an
// estimator, not a certificate.
struct ConditionalMomentEstimate {
  std::size_t i = 0;
  int l = 2;
  std::vector<double> bin_lower;  // prefix-sum range covered by each bin
  std::vector<double> bin_upper;
  std::vector<std::size_t> bin_counts;
  std::vector<double> estimates;
  std::vector<double> standard_errors;
  double max_over_bins = 0.0;
  double standard_error = 0.0;  // of the maximizing bin
  // Set when the prefix sum was degenerate and the bins collapsed into one.
  bool collapsed = false;
};

ConditionalMomentEstimate estimate_conditional_moment(const SampleMatrix& samples,
                                                      std::size_t i, int l,
                                                      std::size_t bin_count = 10);

// Worst-case profile estimate: max_over_bins for every column and even order.
bounds::MomentProfile estimate_profile(const SampleMatrix& samples, int max_order,
                                       std::size_t bin_count = 10);

struct SncStatistic {
  std::size_t i = 0;
  int l = 1;
  double mean = 0.0;
  double standard_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool flagged = false;  // interval lies strictly above zero
};

// Sample means of X_i (S_{i-1})^l for every column i and odd l < m.
std::vector<SncStatistic> check_snc(const SampleMatrix& samples, int m,
                                    double ci_multiplier = 3.0);

struct DoobDecomposition {
  std::vector<double> f_values;           // f(Y) per outer replicate
  SampleMatrix X;                         // X_i = E^i f - E^{i-1} f estimates
  std::vector<double> mean_estimates;     // E^0 f estimate per replicate
  std::vector<double> nested_standard_errors;  // of mean_estimates
  std::size_t inner_resamples = 0;
};

// Nested Monte Carlo estimate of the Doob martingale of f(Y_1..Y_n) for
// independent Y_i. draw(i, rng) samples Y_i; for each replicate and each
// prefix length the suffix is resampled `inner` times.
template <class T>
DoobDecomposition doob_decompose(
    const std::function<T(std::size_t, CounterRng&)>& draw,
    const std::function<double(std::span<const T>)>& functional, std::size_t n,
    std::size_t outer, std::size_t inner, std::uint64_t seed) {
  if (inner < 1) throw InvalidArgument("inner resample count must be >= 1");
  if (n < 1) throw InvalidArgument("need at least one variable");
  DoobDecomposition out;
  out.inner_resamples = inner;
  out.X = SampleMatrix(outer, n);
  out.f_values.resize(outer);
  out.mean_estimates.resize(outer);
  out.nested_standard_errors.resize(outer);

  std::vector<T> base;
  std::vector<T> work;
  std::vector<double> conditional(n + 1);
  for (std::size_t r = 0; r < outer; ++r) {
    base.clear();
    CounterRng rng(seed, r, 0xFFFF'FFFFULL);
    for (std::size_t i = 0; i < n; ++i) base.push_back(draw(i, rng));
    const double f = functional(std::span<const T>(base));
    out.f_values[r] = f;
    conditional[n] = f;
    for (std::size_t fixed = 0; fixed < n; ++fixed) {
      double sum = 0.0;
      double sumsq = 0.0;
      for (std::size_t k = 0; k < inner; ++k) {
        CounterRng suffix(seed, r, (static_cast<std::uint64_t>(fixed) << 32) | k);
        work.assign(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(fixed));
        for (std::size_t j = fixed; j < n; ++j) work.push_back(draw(j, suffix));
        const double v = functional(std::span<const T>(work));
        sum += v;
        sumsq += v * v;
      }
      conditional[fixed] = sum / static_cast<double>(inner);
      if (fixed == 0) {
        const double mean = conditional[0];
        const double var =
            inner > 1 ? std::max(0.0, (sumsq - inner * mean * mean) / (inner - 1.0)) : 0.0;
        out.mean_estimates[r] = mean;
        out.nested_standard_errors[r] = std::sqrt(var / static_cast<double>(inner));
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.X(r, i) = conditional[i + 1] - conditional[i];
  }
  return out;
}

}  // namespace conc::moments
