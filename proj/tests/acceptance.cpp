// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criteria are selected by number on the command line
// (default: all).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "conc/bounds.hpp"
#include "conc/error.hpp"
#include "conc/graphs.hpp"
#include "conc/harness.hpp"
#include "conc/packing.hpp"
#include "conc/rng.hpp"
#include "conc/seq.hpp"
#include "oracles.hpp"

#ifndef CONC_CLI_PATH
#error "CONC_CLI_PATH must name the conc executable"
#endif

namespace b = conc::bounds;
namespace h = conc::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

h::Json config(const std::string& experiment, h::Json parameters, std::size_t replicates,
               std::uint64_t seed) {
  return {{"schema_version", 1},
          {"experiment", experiment},
          {"replicates", replicates},
          {"base_seed", seed},
          {"parameters", std::move(parameters)}};
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

h::ScalingResult scale(const h::Json& doc, std::vector<std::size_t> sizes) {
  return h::scaling_study(h::parse_config(doc), sizes);
}

std::string describe(const h::ScalingResult& r) {
  std::ostringstream os;
  os << "slope=" << fmt(r.slope) << " (95% CI " << fmt(r.ci_low) << ".." << fmt(r.ci_high)
     << "), sd by n:";
  for (const auto& row : r.rows) os << " " << row.n << "->" << fmt(row.sd);
  return os.str();
}

// ---------------------------------------------------------------------------

void criterion1(Outcome& o) {
  int checked = 0, failures = 0;
  for (int n = 1; n <= 12; ++n) {
    const std::vector<double> ones{1.0, 1.0, 1.0};
    const auto profile = b::MomentProfile::uniform(static_cast<std::size_t>(n), ones);
    for (int m : {2, 4, 6}) {
      const double exact = oracle::rademacher_moment(n, m);
      const double bound = std::exp(b::theorem1_recursion_bound(profile, m));
      ++checked;
      if (!(bound >= exact * (1.0 - 1e-12))) ++failures;
    }
  }
  o.detail << checked << " (n, m) pairs, " << failures << " failures";
  o.require(failures == 0, "recursion below an exact Rademacher moment");
}

void criterion2(Outcome& o) {
  int checked = 0, failures = 0;
  for (std::size_t n = 4; n <= 64; ++n) {
    for (int m = 2; m <= 8 && static_cast<std::size_t>(m) <= n; m += 2) {
      // Extreme profile allowed by the hypothesis: M_t = (n/m)^{(t-2)/2} t!.
      std::vector<double> by_order;
      for (int t = 2; t <= m; t += 2) {
        by_order.push_back(std::pow(static_cast<double>(n) / m, (t - 2) / 2.0) * std::tgamma(t + 1.0));
      }
      const auto profile = b::MomentProfile::uniform(n, by_order);
      const double rec = b::theorem1_recursion_bound(profile, m);
      const double closed = b::theorem1_closed_bound(n, m);
      ++checked;
      if (!(rec <= closed + 1e-12)) ++failures;
    }
  }
  o.detail << checked << " grid points n in 4..64, m in 2..8, " << failures << " failures";
  o.require(failures == 0, "recursion above (48 n m)^{m/2}");
}

void criterion3(Outcome& o) {
  auto hom = config("chernoff", {{"n", 1000}, {"p", 0.5}}, 100000, 301);
  hom["bound"] = {{"t_grid", {20, 30, 40, 50, 60, 70, 80, 90, 100}}};
  const auto s1 = h::run_experiment(h::parse_config(hom)).summary;
  auto het = config("chernoff", {{"n", 1000}, {"p_range", {0.01, 0.5}}}, 100000, 302);
  const auto s2 = h::run_experiment(h::parse_config(het)).summary;
  std::size_t v1 = 0, v2 = 0;
  for (const auto& p : s1.curve) v1 += p.verdict.value_or(false);
  for (const auto& p : s2.curve) v2 += p.verdict.value_or(false);
  o.detail << "Bernoulli(0.5): " << v1 << "/" << s1.curve.size()
           << " grid points dominated by " << s1.bound_method << "; heterogeneous nu="
           << fmt(s2.diagnostics["nu"].get<double>()) << ": " << v2 << "/" << s2.curve.size()
           << " dominated by " << s2.bound_method;
  o.require(s1.bound_method == "chernoff_corollary" && v1 == s1.curve.size(),
            "Chernoff corollary verdicts");
  o.require(s2.bound_method == "general_chernoff" && v2 == s2.curve.size(),
            "general Chernoff verdicts");
}

h::ScalingResult clt_calibration() {
  return scale(config("gaussian_sum", {{"n", 100}}, 2000, 400), {100, 400, 900});
}

void criterion4(Outcome& o) {
  const auto tsp = scale(config("tsp", {{"n_cells", 100}, {"functional", "2opt_strip"}}, 200, 401),
                         {100, 400, 900});
  const auto clt = clt_calibration();
  o.detail << "tsp " << describe(tsp) << "; CLT reference slope=" << fmt(clt.slope);
  o.require(std::abs(tsp.slope) <= 0.15, "TSP slope outside [-0.15, 0.15]");
  o.require(std::abs(clt.slope - 0.5) <= 0.05, "CLT slope outside 0.5 +- 0.05");
}

void criterion5(Outcome& o) {
  const auto r = scale(config("mwst", {{"n_cells", 100}}, 200, 501), {100, 400, 900});
  o.detail << "mwst " << describe(r);
  o.require(std::abs(r.slope) <= 0.15, "slope outside [-0.15, 0.15]");
}

void criterion6(Outcome& o) {
  const auto r = scale(config("mwst",
                              {{"n_cells", 100},
                               {"counts", {{"kind", "zeta"}, {"exponent", 6.0}, {"cap", 1000000}}},
                               {"placement", "CornerBunch"}},
                              200, 601),
                       {100, 400, 900});
  o.detail << "mwst, zeta(6) counts, CornerBunch: " << describe(r);
  o.require(std::abs(r.slope) <= 0.15, "slope outside [-0.15, 0.15]");
}

void criterion7(Outcome& o) {
  for (int k : {4, 6, 8}) {
    double ratio_small = 0.0;
    for (std::size_t n : {2000u, 8000u}) {
      const auto s = h::run_experiment(h::parse_config(config("binpack", {{"n", n}, {"k", k}}, 500,
                                                              700 + k * 10 + (n == 8000))))
                         .summary;
      const double ratio = s.diagnostics["variance_ratio"].get<double>();
      o.detail << " k=" << k << ",n=" << n << ":" << fmt(ratio, 3);
      o.require(ratio >= 1.0 / 50.0 && ratio <= 50.0, "variance ratio outside [1/50, 50]");
      if (n == 2000) {
        ratio_small = ratio;
      } else {
        // Var(f) itself grows with n; the ratio test is on Var / (n (mu^3 + sigma^2)).
        const double growth = ratio / ratio_small;
        o.detail << " (x" << fmt(growth, 3) << ")";
        o.require(growth < 2.0, "normalized variance grew by a factor >= 2 at k=" + std::to_string(k));
      }
    }
  }
}

std::vector<std::int64_t> random_counts(std::size_t r, conc::CounterRng& rng, int max_count) {
  std::vector<std::int64_t> n(r);
  for (auto& v : n) v = static_cast<std::int64_t>(rng() % static_cast<unsigned>(max_count + 1));
  return n;
}

conc::packing::ItemDistribution random_dist(std::size_t r, conc::CounterRng& rng) {
  std::vector<double> sizes(r), probs(r);
  double total = 0.0;
  for (std::size_t j = 0; j < r; ++j) {
    sizes[j] = 0.08 + 0.9 * rng.uniform();
    probs[j] = 0.1 + rng.uniform();
    total += probs[j];
  }
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < r; ++j) acc += probs[j] /= total;
  probs[r - 1] = 1.0 - acc;
  return {sizes, probs};
}

void criterion8(Outcome& o) {
  using namespace conc::packing;
  conc::CounterRng rng(801, 0);
  double worst_gap = 0.0;
  std::size_t infeasible = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t r = 1 + t % 5;
    const auto d = random_dist(r, rng);
    const auto types = enumerate_bin_types(d, true);
    const auto n = random_counts(r, rng, 500);
    const auto sol = solve_packing_lp(types, n);
    worst_gap = std::max(worst_gap, std::abs(sol.value - sol.dual_value));
    // Primal cover and dual packing constraints.
    for (std::size_t j = 0; j < r; ++j) {
      double cover = 0.0;
      for (std::size_t i = 0; i < types.rows.size(); ++i) cover += sol.x[i] * types.rows[i][j];
      if (cover < static_cast<double>(n[j]) - 1e-9 * (1.0 + n[j])) ++infeasible;
    }
    for (const auto& row : types.rows) {
      double load = 0.0;
      for (std::size_t j = 0; j < r; ++j) load += row[j] * sol.y[j];
      if (load > 1.0 + 1e-9) ++infeasible;
    }
  }
  std::size_t probes = 0, outside = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t r = 1 + t % 4;
    const auto d = random_dist(r, rng);
    const auto types = enumerate_bin_types(d, true);
    auto n = random_counts(r, rng, 200);
    const auto before = solve_packing_lp(types, n);
    const std::size_t k = rng() % r;
    ++n[k];
    const auto after = solve_packing_lp(types, n);
    const double delta = after.value - before.value;
    const double z = d.sizes[k];
    ++probes;
    if (delta < before.y[k] - 1e-9 || delta > z + 2.0 * z * z + 1e-9) ++outside;
  }
  o.detail << "max duality gap " << fmt(worst_gap, 3) << " over 1000 instances, " << infeasible
           << " infeasible constraints; sandwich violated on " << outside << "/" << probes
           << " probes";
  o.require(worst_gap <= 1e-9, "duality gap above 1e-9");
  o.require(infeasible == 0, "primal or dual infeasibility");
  o.require(outside == 0, "insertion outside [y_k, z_k + 2 z_k^2]");
}

void criterion9(Outcome& o) {
  using namespace conc::seq;
  // Patience sorting against subset enumeration, ties included.
  std::size_t mismatches = 0;
  conc::CounterRng rng(901, 0);
  for (int c = 0; c < 500; ++c) {
    const std::size_t n = 1 + static_cast<std::size_t>(c) % 15;
    std::vector<double> y(n);
    for (auto& v : y) v = c % 3 == 0 ? static_cast<double>(rng() % 5) : rng.uniform();
    if (lis(y) != oracle::lis_subsets(y)) ++mismatches;
  }
  o.detail << "patience vs brute force mismatches " << mismatches << "/500";
  o.require(mismatches == 0, "patience sorting disagrees with brute force");

  double sum = 0.0;
  for (std::uint64_t r = 0; r < 200; ++r)
    sum += static_cast<double>(lis(sample_sequence(10000, conc::derive_seed(902, r))));
  const double ratio = sum / 200.0 / 100.0;
  o.detail << "; E lis(1e4)/100=" << fmt(ratio);
  o.require(ratio >= 1.80 && ratio <= 2.05, "E lis(1e4)/100 outside [1.80, 2.05]");

  // a_j non-decreasing in j, tested with paired standard errors.
  const auto est = essential_probability(60, {}, 4000, 903);
  std::size_t decreases = 0;
  for (std::size_t j = 0; j + 1 < est.probability.size(); ++j)
    if (est.probability[j] > est.probability[j + 1] + 3.0 * est.difference_standard_error[j]) ++decreases;
  o.detail << "; significant decreases of a_j " << decreases;
  o.require(decreases == 0, "essential probabilities decrease");

  // a_i sqrt(n - i + 1) <= 4 after random prefixes.
  const std::size_t n = 200;
  const auto full = sample_sequence(n, 904).values;
  double worst = 0.0;
  for (std::size_t i : {0, 20, 50, 100, 150, 180, 195}) {
    const std::span<const double> prefix(full.data(), i);
    const auto e = essential_probability(n, prefix, 1000, 905 + i);
    worst = std::max(worst, e.probability[0] * std::sqrt(static_cast<double>(n - i)));
  }
  o.detail << "; max a_i sqrt(n-i+1)=" << fmt(worst);
  o.require(worst <= 4.0, "a_i sqrt(n - i + 1) above 4");

  const auto r = scale(config("lis", {{"n", 1000}}, 200, 906), {1000, 4000, 16000});
  o.detail << "; lis sd slope=" << fmt(r.slope);
  o.require(r.slope <= 0.3, "LIS sd slope above 0.3");
}

void criterion10(Outcome& o) {
  using namespace conc::seq;
  const std::size_t n = 1000, k = 100;
  const auto report = check_jl_hypotheses(UnitVectorFamily::sphere(), n, k, 10000, 1001);
  o.detail << "sphere admissible=" << report.admissible();
  o.require(report.admissible(), "uniform sphere rejected");

  const auto s = h::run_experiment(h::parse_config(config("jl", {{"n", n}, {"k", k}}, 2000, 1002))).summary;
  // Second-moment envelope from the sphere projection moment bound:
  // sd <= sqrt(E S^2) <= exp(g(2) / 2) = C sqrt(k) / n.
  const auto profile = sphere_projection_profile(n, k, 2);
  const double envelope = std::exp(0.5 * conc::bounds::theorem1_recursion_bound(profile, 2));
  const double C = envelope * static_cast<double>(n) / std::sqrt(static_cast<double>(k));
  o.detail << "; sd=" << fmt(s.sd) << " <= C sqrt(k)/n=" << fmt(envelope) << " (C=" << fmt(C) << ")";
  o.require(s.sd <= envelope, "empirical sd above the moment envelope");
  o.require(s.all_dominated() == true, "JL tail bound verdicts");

  const auto dir = fs::temp_directory_path() / "conc_acceptance_jl";
  fs::create_directories(dir);
  const auto cfg = dir / "heavy.json";
  std::ofstream(cfg) << config("jl",
                               {{"n", n},
                                {"k", k},
                                {"family", {{"kind", "radial"}, {"law", "pareto"}, {"tail_index", 1.2}}}},
                               200, 1003)
                            .dump(2);
  const std::string cmd = std::string(CONC_CLI_PATH) + " run " + cfg.string() + " > " +
                          (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.detail << "; heavy radial family exit code " << code;
  o.require(code == 3, "hypothesis-violating family not refused with exit code 3");
}

conc::graphs::EdgeProbabilityMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  conc::graphs::EdgeProbabilityMatrix p(n);
  conc::CounterRng rng(seed, 0, 5);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double u = rng.uniform();
      p.set(i, j, rng.uniform() < 0.3 ? 0.0 : u);
    }
  return p;
}

void criterion11(Outcome& o) {
  using namespace conc::graphs;
  std::size_t chi_mismatch = 0, mad_mismatch = 0, mad_violations = 0, graphs_checked = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const std::size_t n = 1 + s % 8;
    const double dens = 0.1 + 0.8 * static_cast<double>(s % 9) / 8.0;
    const auto g = sample_graph(EdgeProbabilityMatrix::uniform(n, dens), 1100 + s);
    const auto chi = chromatic_exact(g);
    if (chi != oracle::brute_force_chromatic(g)) ++chi_mismatch;
    ++graphs_checked;
    if (chi > static_cast<std::size_t>(std::floor(mad_realized(g) + 1e-9)) + 1) ++mad_violations;
  }
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t n = 1 + s % 15;
    const auto p = random_matrix(n, 1300 + s);
    const double a = mad(p), e = oracle::brute_force_mad(p);
    if (std::abs(a - e) > 1e-9 * std::max(1.0, e)) ++mad_mismatch;
    const auto g = sample_graph(p, 1400 + s);
    ++graphs_checked;
    if (chromatic_exact(g) > static_cast<std::size_t>(std::floor(mad_realized(g) + 1e-9)) + 1)
      ++mad_violations;
  }
  o.detail << "chromatic mismatches " << chi_mismatch << "/200, MAD mismatches " << mad_mismatch
           << "/100, chi > floor(MAD)+1 on " << mad_violations << "/" << graphs_checked << " graphs";
  o.require(chi_mismatch == 0, "exact chromatic number disagrees with brute force");
  o.require(mad_mismatch == 0, "MAD disagrees with subset enumeration");
  o.require(mad_violations == 0, "chi above floor(MAD_realized) + 1");

  for (std::size_t n : {15u, 25u}) {
    const auto s =
        h::run_experiment(h::parse_config(config("chromatic", {{"n", n}, {"p", 0.1}}, 200, 1500 + n)))
            .summary;
    o.detail << "; n=" << n << ": sd(chi)=" << fmt(s.sd) << ", n sqrt(p) ln n="
             << fmt(s.diagnostics["envelope_scale"].get<double>()) << " (reported)";
    o.require(s.sd_defined && std::isfinite(s.sd), "sd(chi) not finite");
  }
}

void criterion12(Outcome& o) {
  const std::vector<h::Json> docs{
      config("tsp", {{"n_cells", 49}}, 30, 1201),
      config("mwst", {{"n_cells", 49}, {"counts", {{"kind", "zeta"}, {"exponent", 4.0}}}}, 30, 1202),
      config("chromatic", {{"n", 14}, {"p", 0.3}}, 30, 1203),
      config("jl", {{"n", 100}, {"k", 10}}, 120, 1204),
      config("binpack", {{"n", 500}, {"k", 5}}, 30, 1205),
      config("lis", {{"n", 500}}, 120, 1206),
      config("chernoff", {{"n", 200}, {"p", 0.3}}, 300, 1207),
  };
  std::size_t identical = 0;
  for (const auto& doc : docs) {
    std::vector<std::string> csvs;
    for (std::size_t workers : {1, 3, 8}) {
      auto cfg = h::parse_config(doc);
      cfg.workers = workers;
      const auto dir = fs::temp_directory_path() / "conc_acceptance_det" / h::to_string(cfg.experiment) /
                       std::to_string(workers);
      fs::remove_all(dir);
      cfg.output = dir.string();
      h::run_experiment(cfg);
      std::ifstream in(dir / "records.csv", std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      csvs.push_back(os.str());
    }
    const bool same = csvs[0] == csvs[1] && csvs[0] == csvs[2] && !csvs[0].empty();
    identical += same;
    if (!same) o.detail << " " << doc["experiment"].get<std::string>() << " differs;";
  }
  o.detail << identical << "/" << docs.size() << " experiments byte-identical across 1, 3 and 8 workers";
  o.require(identical == docs.size(), "record CSVs depend on the worker count");
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // 0: no stated budget
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "bound-engine oracle suite", 10, criterion1},
      {2, "DP-vs-closed-form dominance", 0, criterion2},
      {3, "Chernoff dominance", 60, criterion3},
      {4, "TSP flatness", 1800, criterion4},
      {5, "MWST flatness", 300, criterion5},
      {6, "heavy-tail robustness", 0, criterion6},
      {7, "bin packing variance law", 1200, criterion7},
      {8, "LP internal checks", 0, criterion8},
      {9, "LIS suite", 600, criterion9},
      {10, "JL suite", 0, criterion10},
      {11, "graph suite", 0, criterion11},
      {12, "determinism", 0, criterion12},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      o.require(false, "runtime " + fmt(secs) + " s over the " + fmt(c.budget_seconds) + " s budget");
    }
    failed += !o.pass;
    std::printf("criterion %2d %s (%s, %.1f s): %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name.c_str(),
                secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
