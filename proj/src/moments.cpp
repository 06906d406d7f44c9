#include "conc/moments.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace conc::moments {

SampleMatrix::SampleMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

SampleMatrix::SampleMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw InvalidArgument("sample matrix is not rectangular: " +
                          std::to_string(values_.size()) + " values for " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

std::vector<double> SampleMatrix::prefix_sums(std::size_t i) const {
  std::vector<double> s(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < i; ++c) acc += (*this)(r, c);
    s[r] = acc;
  }
  return s;
}

namespace {

void require_samples(const SampleMatrix& samples) {
  if (samples.rows() < 2) throw InvalidArgument("need at least two replicates");
}

struct MeanSe {
  double mean;
  double se;
};

// Mean and standard error of values[idx] summed in ascending index order.
MeanSe mean_se(const std::vector<double>& values, std::span<const std::size_t> idx) {
  double sum = 0.0;
  for (std::size_t k : idx) sum += values[k];
  const double n = static_cast<double>(idx.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t k : idx) ss += (values[k] - mean) * (values[k] - mean);
  const double var = idx.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

ConditionalMomentEstimate estimate_conditional_moment(const SampleMatrix& samples,
                                                      std::size_t i, int l,
                                                      std::size_t bin_count) {
  require_samples(samples);
  if (l < 2 || l % 2 != 0) throw InvalidArgument("moment order must be even and >= 2");
  if (bin_count < 1) throw InvalidArgument("bin_count must be >= 1");
  if (i >= samples.cols()) throw InvalidArgument("column index out of range");

  const std::size_t N = samples.rows();
  std::vector<double> powered(N);
  for (std::size_t r = 0; r < N; ++r) powered[r] = std::pow(samples(r, i), l);
  const auto prefix = samples.prefix_sums(i);

  ConditionalMomentEstimate est;
  est.i = i;
  est.l = l;

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return prefix[a] < prefix[b]; });
  const double lo = prefix[order.front()];
  const double hi = prefix[order.back()];

  std::size_t bins = bin_count;
  if (i == 0) bins = 1;
  if (bins > 1 && (lo == hi || N < bins)) {
    bins = 1;
    est.collapsed = true;
  }

  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t begin = b * N / bins;
    const std::size_t end = (b + 1) * N / bins;
    std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(members.begin(), members.end());
    const auto ms = mean_se(powered, members);
    est.bin_lower.push_back(prefix[order[begin]]);
    est.bin_upper.push_back(prefix[order[end - 1]]);
    est.bin_counts.push_back(members.size());
    est.estimates.push_back(ms.mean);
    est.standard_errors.push_back(ms.se);
  }
  const auto top = std::max_element(est.estimates.begin(), est.estimates.end());
  est.max_over_bins = *top;
  est.standard_error = est.standard_errors[static_cast<std::size_t>(top - est.estimates.begin())];
  return est;
}

bounds::MomentProfile estimate_profile(const SampleMatrix& samples, int max_order,
                                       std::size_t bin_count) {
  bounds::MomentProfile profile(samples.cols(), max_order);
  for (std::size_t i = 0; i < samples.cols(); ++i) {
    for (int l = 2; l <= max_order; l += 2) {
      profile.set(i, l, estimate_conditional_moment(samples, i, l, bin_count).max_over_bins);
    }
  }
  return profile;
}

std::vector<SncStatistic> check_snc(const SampleMatrix& samples, int m,
                                    double ci_multiplier) {
  require_samples(samples);
  if (m < 2 || m % 2 != 0) throw InvalidArgument("m must be an even integer >= 2");
  const std::size_t N = samples.rows();
  std::vector<SncStatistic> out;
  std::vector<double> prefix(N, 0.0);
  std::vector<double> product(N);
  std::vector<std::size_t> all(N);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t i = 0; i < samples.cols(); ++i) {
    for (int l = 1; l < m; l += 2) {
      for (std::size_t r = 0; r < N; ++r) product[r] = samples(r, i) * std::pow(prefix[r], l);
      const auto ms = mean_se(product, all);
      SncStatistic s;
      s.i = i;
      s.l = l;
      s.mean = ms.mean;
      s.standard_error = ms.se;
      s.ci_low = ms.mean - ci_multiplier * ms.se;
      s.ci_high = ms.mean + ci_multiplier * ms.se;
      s.flagged = s.ci_low > 0.0;
      out.push_back(s);
    }
    for (std::size_t r = 0; r < N; ++r) prefix[r] += samples(r, i);
  }
  return out;
}

}  // namespace conc::moments
