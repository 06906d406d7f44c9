#pragma once

// Stochastic bin packing with discrete item sizes through the LP
// relaxation: bin types, a dense simplex on the dual, round-up, and the
// perfectly packable lower-bound distribution.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "conc/rng.hpp"

namespace conc::packing {

struct ItemDistribution {
  std::vector<double> sizes;  // zeta_j in (0, 1]
  std::vector<double> probs;  // p_j, summing to one

  ItemDistribution() = default;
  ItemDistribution(std::vector<double> sizes, std::vector<double> probs);

  std::size_t types() const { return sizes.size(); }
  double mean() const;      // mu
  double variance() const;  // sigma^2
  // Item-type counts of n independent items.
  std::vector<std::int64_t> sample_counts(std::size_t n, CounterRng& rng) const;
};

// Sizes {(k-1)/(k(k-2)), 1/k} with probabilities {(k-2)/(k-1), 1/(k-1)}.
ItemDistribution lower_bound_distribution(int k);

inline constexpr double kFitTolerance = 1e-9;
inline constexpr std::size_t kMaxBinTypes = 1000000;

struct BinTypeSet {
  std::vector<std::vector<int>> rows;
  bool maximal_only = false;
};

// Every feasible count vector (sum a_j zeta_j <= 1 + kFitTolerance) in
// lexicographic order, or only those that admit no further item.
BinTypeSet enumerate_bin_types(const ItemDistribution& dist, bool maximal_only);

struct LpSolution {
  std::vector<double> x;  // bins per type
  std::vector<double> y;  // imputed item sizes
  double value = 0.0;     // primal objective sum x_i
  double dual_value = 0.0;
  std::size_t basis_size = 0;  // nonzero x_i
  std::size_t pivots = 0;
};

inline constexpr std::size_t kMaxPivots = 1000000;

// min sum x_i s.t. sum_i x_i a_ij >= n_j, x >= 0, solved as its dual
// max n.y s.t. A y <= 1, y >= 0 from the slack basis under Bland's rule.
// Throws Infeasible when an item type with n_j > 0 fits no bin type.
LpSolution solve_packing_lp(const BinTypeSet& types, const std::vector<std::int64_t>& counts);

// Same simplex in exact rational arithmetic (sizes converted exactly from
// their binary values); x, y and values are rounded to double on return.
LpSolution solve_packing_lp_exact(const BinTypeSet& types, const std::vector<std::int64_t>& counts);

// sum of ceil(x_i) over the basic solution.
std::int64_t lp_round_up(const LpSolution& sol);

struct PackingInstance {
  ItemDistribution dist;
  std::vector<std::vector<std::int64_t>> counts;  // one row per replicate
};

// Header `sizes=a,b,...; probs=p,q,...`, then one CSV line of counts per
// replicate.
void write_instances(std::ostream& out, const PackingInstance& inst);
PackingInstance read_instances(std::istream& in);

// Regime checks of the concentration theorem: each p_j >= 1/log n and
// mu <= 1/(r^2 log n). Returns one message per failed condition.
std::vector<std::string> regime_warnings(const ItemDistribution& dist, std::size_t n);

// Fraction of (replicate, item) pairs whose prefix type counts leave the
// band |N_j(i-1) - p_j (i-1)| <= c sqrt(m ln(10 m / mu) p_j (i-1)).
double typical_band_violation_rate(const ItemDistribution& dist, std::size_t n, int m,
                                   std::size_t replicates, std::uint64_t seed, double c = 100.0);

}  // namespace conc::packing
