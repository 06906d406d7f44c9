#pragma once

// Moment-based tail bounds for sums X_1 + ... + X_n under strong negative
// correlation. Every moment bound is carried as a natural logarithm so that
// quantities like (48 n m)^{m/2} stay representable.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace conc::bounds {

enum class Method {
  Theorem1Closed,
  Theorem1Recursion,
  MainTheorem,
  ChernoffCorollary,
  GeneralChernoff,
  HoeffdingAzuma,
};

std::string_view to_string(Method method);

// Generic constants of the inequalities. c_theorem1 is the explicit 48 of
// the closed form; the others are configurable and never asserted as
// absolute values.
struct BoundConstants {
  double c_theorem1 = 48.0;
  double c_main = 48.0;
  // c in the moment-order heuristic m = t^2 / (c n).
  double c_mopt = std::numbers::e * 48.0;
  // Moment constant of the Chernoff specializations: E X^m <= (c n m s^2)^{m/2}
  // and E X^m <= (c m (nu + m))^{m/2}.
  double c_chernoff = 2.0;
  // Order selection of the Chernoff corollary: m ~ t^2 / (c n s^2).
  double c_chernoff_order = 2.0 * std::numbers::e;

  void validate() const;
};

// Worst-case conditional moment bounds M_{i,l} for i in [0, n) and even
// l in [2, max_order]. Entries are stored as logs; NaN marks a missing
// entry and -inf a zero bound.
class MomentProfile {
 public:
  MomentProfile() = default;
  MomentProfile(std::size_t n, int max_order);

  // Same bound for every variable; by_order[k] is the bound for order 2k+2.
  static MomentProfile uniform(std::size_t n, std::span<const double> by_order);

  std::size_t size() const { return n_; }
  int max_order() const { return max_order_; }
  std::vector<int> orders() const;

  void set(std::size_t i, int order, double value);
  void set_log(std::size_t i, int order, double log_value);
  bool has(std::size_t i, int order) const;
  // Throws IncompleteProfile when the entry is missing.
  double log_at(std::size_t i, int order) const;
  double at(std::size_t i, int order) const { return std::exp(log_at(i, order)); }

  // Per-order values if every variable carries identical, complete entries.
  std::optional<std::vector<double>> uniform_values() const;
  bool is_uniform() const { return uniform_values().has_value(); }

 private:
  std::size_t slot(std::size_t i, int order) const;

  std::size_t n_ = 0;
  int max_order_ = 0;
  std::vector<double> log_m_;
};

// Inputs of the typical-vs-worst-case bound: worst-case M_{i,l}, typical
// L_{i,l} <= M_{i,l} and the probabilities delta_{i,l} of the atypical event.
class TypicalProfile {
 public:
  TypicalProfile() = default;
  explicit TypicalProfile(MomentProfile worst);

  const MomentProfile& worst() const { return worst_; }
  const MomentProfile& typical() const { return typical_; }
  std::size_t size() const { return worst_.size(); }
  int max_order() const { return worst_.max_order(); }

  void set_worst(std::size_t i, int order, double value);
  void set_typical(std::size_t i, int order, double value);
  void set_delta(std::size_t i, int order, double delta);
  bool has_delta(std::size_t i, int order) const;
  double delta(std::size_t i, int order) const;

  // Throws InvalidArgument when some delta leaves [0, 1] or some stored
  // typical bound exceeds its worst-case counterpart.
  void validate() const;

 private:
  MomentProfile worst_;
  MomentProfile typical_;
  std::vector<double> delta_;
};

struct TailBoundResult {
  double t = 0.0;
  int m_used = 2;
  double log_moment_bound = 0.0;
  double tail_probability = 1.0;
  Method method = Method::Theorem1Closed;
  // c in the reported exp(-c t^2 / scale) form; NaN when not applicable.
  double realized_exponent = std::numeric_limits<double>::quiet_NaN();
};

double log_add(double a, double b);
double log_sum_exp(std::span<const double> terms);

// Nearest even integer to x, never below 2.
int nearest_even_order(double x);

// Even order suggested by t^2 / (c_mopt n), clamped to [2, m_max].
int suggested_order(double t, std::size_t n, const BoundConstants& constants,
                    int m_max);

// log of (c_theorem1 n m)^{m/2}.
double theorem1_closed_bound(std::size_t n, int m,
                             const BoundConstants& constants = {});

// log g(n, m) of the dynamic program
//   g(i, 0) = 1, g(1, q) = M_{1,q},
//   g(i, q) = g(i-1, q) + 11/5 sum_{even t<=q} q^t / t! M_{i,t} g(i-1, q-t).
double theorem1_recursion_bound(const MomentProfile& profile, int m);

// log of the typical-moment bound; 0^{positive} is 0.
double main_theorem_bound(const TypicalProfile& profile, int m,
                          const BoundConstants& constants = {});

// min(1, exp(log_moment_bound - m log t)).
double markov_tail(double log_moment_bound, int m, double t);

// Exhaustive scan over even m in [2, m_max]; ties go to the smaller m.
TailBoundResult optimize_m(const std::function<double(int)>& bound_fn, double t,
                           int m_max, Method method = Method::Theorem1Closed);

// |X_i| <= 1 martingale differences: the closed form optimized over even
// m <= min(m_max, n).
TailBoundResult hoeffding_azuma_bound(std::size_t n, double t,
                                      const BoundConstants& constants = {},
                                      std::optional<int> m_max = std::nullopt);

// Requires 0 < t <= n sigma2.
TailBoundResult chernoff_corollary_bound(std::size_t n, double sigma2, double t,
                                         const BoundConstants& constants = {});

// Independent Bernoulli trials with total mean nu.
TailBoundResult general_chernoff_bound(double nu, double t,
                                       const BoundConstants& constants = {});

}  // namespace conc::bounds
