#include "conc/bounds.hpp"

#include <algorithm>
#include <string>

#include "conc/error.hpp"

namespace conc::bounds {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_even_order(int m) {
  if (m < 2 || m % 2 != 0) {
    throw InvalidArgument("moment order must be an even integer >= 2, got " +
                          std::to_string(m));
  }
}

std::string entry_name(std::size_t i, int order) {
  return "(i=" + std::to_string(i) + ", l=" + std::to_string(order) + ")";
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Theorem1Closed: return "theorem1_closed";
    case Method::Theorem1Recursion: return "theorem1_recursion";
    case Method::MainTheorem: return "main_theorem";
    case Method::ChernoffCorollary: return "chernoff_corollary";
    case Method::GeneralChernoff: return "general_chernoff";
    case Method::HoeffdingAzuma: return "hoeffding_azuma";
  }
  return "unknown";
}

void BoundConstants::validate() const {
  for (double c : {c_theorem1, c_main, c_mopt, c_chernoff, c_chernoff_order}) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw InvalidArgument("bound constants must be finite and positive");
    }
  }
}

// ---------------------------------------------------------------------------
// MomentProfile

MomentProfile::MomentProfile(std::size_t n, int max_order)
    : n_(n), max_order_(max_order) {
  require_even_order(max_order);
  log_m_.assign(n * static_cast<std::size_t>(max_order / 2),
                std::numeric_limits<double>::quiet_NaN());
}

MomentProfile MomentProfile::uniform(std::size_t n,
                                     std::span<const double> by_order) {
  if (by_order.empty()) throw InvalidArgument("uniform profile needs orders");
  MomentProfile p(n, 2 * static_cast<int>(by_order.size()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < by_order.size(); ++k) {
      p.set(i, 2 * static_cast<int>(k) + 2, by_order[k]);
    }
  }
  return p;
}

std::vector<int> MomentProfile::orders() const {
  std::vector<int> out;
  for (int l = 2; l <= max_order_; l += 2) out.push_back(l);
  return out;
}

std::size_t MomentProfile::slot(std::size_t i, int order) const {
  if (i >= n_) throw InvalidArgument("variable index out of range");
  if (order < 2 || order % 2 != 0 || order > max_order_) {
    throw InvalidArgument("order " + std::to_string(order) +
                          " is not an even order in [2, " +
                          std::to_string(max_order_) + "]");
  }
  return i * static_cast<std::size_t>(max_order_ / 2) +
         static_cast<std::size_t>(order / 2 - 1);
}

void MomentProfile::set(std::size_t i, int order, double value) {
  if (!(value >= 0.0)) {
    throw InvalidArgument("moment bound must be nonnegative at " +
                          entry_name(i, order));
  }
  log_m_[slot(i, order)] = std::log(value);
}

void MomentProfile::set_log(std::size_t i, int order, double log_value) {
  if (std::isnan(log_value) || log_value == std::numeric_limits<double>::infinity()) {
    throw InvalidArgument("log moment bound must be finite or -inf");
  }
  log_m_[slot(i, order)] = log_value;
}

bool MomentProfile::has(std::size_t i, int order) const {
  if (i >= n_ || order < 2 || order % 2 != 0 || order > max_order_) return false;
  return !std::isnan(log_m_[slot(i, order)]);
}

double MomentProfile::log_at(std::size_t i, int order) const {
  if (!has(i, order)) {
    throw IncompleteProfile("moment profile missing entry " +
                            entry_name(i, order));
  }
  return log_m_[slot(i, order)];
}

std::optional<std::vector<double>> MomentProfile::uniform_values() const {
  if (n_ == 0) return std::nullopt;
  const std::size_t per = static_cast<std::size_t>(max_order_ / 2);
  for (std::size_t k = 0; k < per; ++k) {
    const double first = log_m_[k];
    if (std::isnan(first)) return std::nullopt;
    for (std::size_t i = 1; i < n_; ++i) {
      if (log_m_[i * per + k] != first) return std::nullopt;
    }
  }
  std::vector<double> out(per);
  for (std::size_t k = 0; k < per; ++k) out[k] = std::exp(log_m_[k]);
  return out;
}

// ---------------------------------------------------------------------------
// TypicalProfile

TypicalProfile::TypicalProfile(MomentProfile worst)
    : worst_(std::move(worst)),
      typical_(worst_.size(), worst_.max_order()),
      delta_(worst_.size() * static_cast<std::size_t>(worst_.max_order() / 2),
             std::numeric_limits<double>::quiet_NaN()) {}

void TypicalProfile::set_worst(std::size_t i, int order, double value) {
  worst_.set(i, order, value);
}

void TypicalProfile::set_typical(std::size_t i, int order, double value) {
  typical_.set(i, order, value);
}

void TypicalProfile::set_delta(std::size_t i, int order, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw InvalidArgument("delta must lie in [0, 1] at " + entry_name(i, order));
  }
  // Reuse the index check of the worst-case profile.
  if (i >= size() || order < 2 || order % 2 != 0 || order > max_order()) {
    throw InvalidArgument("delta index out of range at " + entry_name(i, order));
  }
  delta_[i * static_cast<std::size_t>(max_order() / 2) +
         static_cast<std::size_t>(order / 2 - 1)] = delta;
}

bool TypicalProfile::has_delta(std::size_t i, int order) const {
  if (i >= size() || order < 2 || order % 2 != 0 || order > max_order()) return false;
  return !std::isnan(delta_[i * static_cast<std::size_t>(max_order() / 2) +
                            static_cast<std::size_t>(order / 2 - 1)]);
}

double TypicalProfile::delta(std::size_t i, int order) const {
  if (!has_delta(i, order)) {
    throw IncompleteProfile("typical profile missing delta " + entry_name(i, order));
  }
  return delta_[i * static_cast<std::size_t>(max_order() / 2) +
                static_cast<std::size_t>(order / 2 - 1)];
}

void TypicalProfile::validate() const {
  for (double d : delta_) {
    if (!std::isnan(d) && !(d >= 0.0 && d <= 1.0)) {
      throw InvalidArgument("delta outside [0, 1]");
    }
  }
  for (std::size_t i = 0; i < size(); ++i) {
    for (int l = 2; l <= max_order(); l += 2) {
      if (typical_.has(i, l) && worst_.has(i, l) &&
          typical_.log_at(i, l) > worst_.log_at(i, l) + 1e-12) {
        throw InvalidArgument("typical bound exceeds worst case at " +
                              entry_name(i, l));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Log-domain helpers

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_sum_exp(std::span<const double> terms) {
  double hi = kNegInf;
  for (double x : terms) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : terms) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

int nearest_even_order(double x) {
  if (!(x > 2.0)) return 2;
  const double half = std::round(x / 2.0);
  if (half > 1e9) return 2'000'000'000;
  return std::max(2, 2 * static_cast<int>(half));
}

int suggested_order(double t, std::size_t n, const BoundConstants& constants,
                    int m_max) {
  require_even_order(m_max);
  const int m = nearest_even_order(t * t / (constants.c_mopt * static_cast<double>(n)));
  return std::min(m, m_max);
}

// ---------------------------------------------------------------------------
// Bounds

double theorem1_closed_bound(std::size_t n, int m, const BoundConstants& constants) {
  require_even_order(m);
  if (n < 1) throw InvalidArgument("n must be >= 1");
  constants.validate();
  return 0.5 * m * std::log(constants.c_theorem1 * static_cast<double>(n) * m);
}

double theorem1_recursion_bound(const MomentProfile& profile, int m) {
  require_even_order(m);
  const std::size_t n = profile.size();
  if (n < 1) throw InvalidArgument("profile must describe at least one variable");
  const int half = m / 2;
  const double log_coef = std::log(11.0 / 5.0);

  // Edge weights log(q^t / t!) for even t <= q <= m.
  std::vector<double> log_weight(static_cast<std::size_t>((half + 1) * (half + 1)), kNegInf);
  auto weight = [&](int q, int t) -> double& {
    return log_weight[static_cast<std::size_t>((q / 2) * (half + 1) + t / 2)];
  };
  for (int q = 2; q <= m; q += 2) {
    for (int t = 2; t <= q; t += 2) {
      weight(q, t) = t * std::log(static_cast<double>(q)) - std::lgamma(t + 1.0);
    }
  }

  std::vector<double> g(static_cast<std::size_t>(half + 1));
  g[0] = 0.0;
  for (int q = 2; q <= m; q += 2) g[static_cast<std::size_t>(q / 2)] = profile.log_at(0, q);

  std::vector<double> next(g.size());
  std::vector<double> terms;
  for (std::size_t i = 1; i < n; ++i) {
    next[0] = 0.0;
    for (int q = 2; q <= m; q += 2) {
      terms.clear();
      terms.push_back(g[static_cast<std::size_t>(q / 2)]);
      for (int t = 2; t <= q; t += 2) {
        terms.push_back(log_coef + weight(q, t) + profile.log_at(i, t) +
                        g[static_cast<std::size_t>((q - t) / 2)]);
      }
      next[static_cast<std::size_t>(q / 2)] = log_sum_exp(terms);
    }
    std::swap(g, next);
  }
  return g[static_cast<std::size_t>(half)];
}

double main_theorem_bound(const TypicalProfile& profile, int m,
                          const BoundConstants& constants) {
  require_even_order(m);
  constants.validate();
  profile.validate();
  const std::size_t n = profile.size();
  if (n < 1) throw InvalidArgument("profile must describe at least one variable");
  const double dn = static_cast<double>(n);
  const double log_cm = std::log(constants.c_main * m);
  const double log_m = std::log(static_cast<double>(m));
  const double log_n = std::log(dn);

  std::vector<double> first_terms;
  std::vector<double> second_terms;
  std::vector<double> per_var(n);
  for (int l = 1; l <= m / 2; ++l) {
    const int order = 2 * l;
    const double log_l2 = 2.0 * std::log(static_cast<double>(l));
    for (std::size_t i = 0; i < n; ++i) per_var[i] = profile.typical().log_at(i, order);
    const double log_sum_l = log_sum_exp(per_var);
    first_terms.push_back((1.0 - 1.0 / l) * log_m - log_l2 + log_sum_l / l);

    const double power = static_cast<double>(m) / order;
    const double delta_exp = 2.0 / (m - order + 2);
    for (std::size_t i = 0; i < n; ++i) {
      const double log_worst = profile.worst().log_at(i, order);
      const double d = profile.delta(i, order);
      if (d == 0.0 || log_worst == kNegInf) continue;
      const double inner = log_n + log_worst + delta_exp * std::log(d);
      second_terms.push_back(-log_n - log_l2 + power * inner);
    }
  }

  const double first = 0.5 * m * log_cm + 0.5 * m * log_sum_exp(first_terms);
  const double second = second_terms.empty() ? kNegInf : m * log_cm + log_sum_exp(second_terms);
  return log_add(first, second);
}

double markov_tail(double log_moment_bound, int m, double t) {
  if (!(t > 0.0)) throw InvalidArgument("tail threshold t must be positive");
  require_even_order(m);
  const double log_p = log_moment_bound - m * std::log(t);
  if (log_p >= 0.0) return 1.0;
  return std::exp(log_p);
}

TailBoundResult optimize_m(const std::function<double(int)>& bound_fn, double t,
                           int m_max, Method method) {
  require_even_order(m_max);
  TailBoundResult best;
  best.t = t;
  best.method = method;
  bool have = false;
  for (int m = 2; m <= m_max; m += 2) {
    const double log_bound = bound_fn(m);
    const double p = markov_tail(log_bound, m, t);
    if (!have || p < best.tail_probability) {
      best.m_used = m;
      best.log_moment_bound = log_bound;
      best.tail_probability = p;
      have = true;
    }
  }
  return best;
}

TailBoundResult hoeffding_azuma_bound(std::size_t n, double t,
                                      const BoundConstants& constants,
                                      std::optional<int> m_max) {
  if (n < 2) throw InvalidArgument("need n >= 2 to scan even orders up to n");
  int cap = static_cast<int>(std::min<std::size_t>(n, 1'000'000));
  if (m_max) cap = std::min(cap, *m_max);
  cap -= cap % 2;
  auto result = optimize_m(
      [&](int m) { return theorem1_closed_bound(n, m, constants); }, t, cap,
      Method::HoeffdingAzuma);
  if (result.tail_probability < 1.0) {
    result.realized_exponent = -std::log(result.tail_probability) *
                               static_cast<double>(n) / (t * t);
  }
  return result;
}

TailBoundResult chernoff_corollary_bound(std::size_t n, double sigma2, double t,
                                         const BoundConstants& constants) {
  constants.validate();
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (!(sigma2 > 0.0)) throw InvalidArgument("sigma2 must be positive");
  if (!(t > 0.0)) throw InvalidArgument("tail threshold t must be positive");
  const double scale = static_cast<double>(n) * sigma2;
  if (t > scale) {
    throw OutOfRegime("Chernoff corollary needs t <= n sigma^2 (t=" +
                      std::to_string(t) + ", n sigma^2=" + std::to_string(scale) + ")");
  }
  TailBoundResult r;
  r.t = t;
  r.method = Method::ChernoffCorollary;
  r.m_used = nearest_even_order(t * t / (constants.c_chernoff_order * scale));
  r.log_moment_bound = 0.5 * r.m_used * std::log(constants.c_chernoff * scale * r.m_used);
  r.tail_probability = markov_tail(r.log_moment_bound, r.m_used, t);
  r.realized_exponent = -std::log(r.tail_probability) * scale / (t * t);
  return r;
}

TailBoundResult general_chernoff_bound(double nu, double t,
                                       const BoundConstants& constants) {
  constants.validate();
  if (!(nu > 0.0)) throw InvalidArgument("nu must be positive");
  if (!(t > 0.0)) throw InvalidArgument("tail threshold t must be positive");
  TailBoundResult r;
  r.t = t;
  r.method = Method::GeneralChernoff;
  const double scale = 2.0 * (nu + t);
  r.m_used = nearest_even_order(t * t / scale);
  r.log_moment_bound = 0.5 * r.m_used * std::log(constants.c_chernoff * r.m_used * (nu + r.m_used));
  r.tail_probability = markov_tail(r.log_moment_bound, r.m_used, t);
  r.realized_exponent = -std::log(r.tail_probability) * scale / (t * t);
  return r;
}

}  // namespace conc::bounds
