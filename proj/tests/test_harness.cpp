#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conc/bounds.hpp"
#include "conc/error.hpp"
#include "conc/harness.hpp"
#include "conc/rng.hpp"
#include "doctest.h"

using namespace conc::harness;
namespace fs = std::filesystem;

namespace {

Json base_doc(const std::string& experiment, Json parameters, std::size_t replicates,
              std::uint64_t seed = 5) {
  return {{"schema_version", 1},
          {"experiment", experiment},
          {"replicates", replicates},
          {"base_seed", seed},
          {"parameters", std::move(parameters)}};
}

std::string config_error(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const conc::ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("conc_test_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config validation reports the field path") {
  const auto ok = parse_config(base_doc("chernoff", {{"n", 10}}, 3));
  CHECK(ok.parameters.at("p") == 0.5);
  CHECK(ok.workers == 1);

  auto doc = base_doc("chernoff", {{"n", 10}}, 3);
  doc["extra"] = 1;
  CHECK(config_error(doc).rfind("extra:", 0) == 0);

  doc = base_doc("tsp", {{"n_cells", 16}, {"counts", {{"kind", "zeta"}, {"exponent", 6}, {"cpa", 9}}}}, 3);
  CHECK(config_error(doc).rfind("parameters.counts.cpa:", 0) == 0);

  doc = base_doc("tsp", {{"n_cells", 15}}, 3);
  CHECK(config_error(doc).rfind("parameters.n_cells:", 0) == 0);

  doc = base_doc("chernoff", {{"n", 10}}, 3);
  doc["schema_version"] = 2;
  CHECK(config_error(doc).rfind("schema_version:", 0) == 0);

  doc = base_doc("chernoff", {{"n", 10}}, 3);
  doc.erase("replicates");
  CHECK(config_error(doc).rfind("replicates:", 0) == 0);

  CHECK(config_error(base_doc("knapsack", Json::object(), 3)).rfind("experiment:", 0) == 0);

  doc = base_doc("chernoff", {{"n", 10}}, 3);
  doc["bound"] = {{"max_order", 7}};
  CHECK(config_error(doc).rfind("bound.max_order:", 0) == 0);

  doc = base_doc("jl", {{"n", 50}, {"k", 60}}, 3);
  CHECK(config_error(doc).rfind("parameters.k:", 0) == 0);

  doc = base_doc("jl", {{"n", 50}, {"k", 5}, {"family", {{"kind", "radial"}, {"law", "pareto"}, {"tail_index", 0.5}}}}, 3);
  CHECK(config_error(doc).rfind("parameters.family.tail_index:", 0) == 0);

  // A config survives a round trip through its JSON form.
  const auto cfg = parse_config(base_doc("binpack", {{"n", 100}, {"k", 5}}, 10));
  const auto again = parse_config(cfg.to_json());
  CHECK(again.to_json() == cfg.to_json());
  CHECK(again.param_hash() == cfg.param_hash());
}

TEST_CASE("records are identical for any worker count") {
  for (const auto& doc : {base_doc("tsp", {{"n_cells", 25}}, 40),
                          base_doc("chromatic", {{"n", 12}, {"p", 0.3}}, 40),
                          base_doc("chernoff", {{"n", 50}, {"p_range", {0.1, 0.9}}}, 300)}) {
    std::string first_csv, first_summary;
    for (std::size_t workers : {1, 2, 5}) {
      auto cfg = parse_config(doc);
      cfg.workers = workers;
      const auto dir = scratch("workers");
      cfg.output = dir.string();
      run_experiment(cfg);
      const auto csv = slurp(dir / "records.csv");
      const auto summary = slurp(dir / "summary.json");
      if (workers == 1) {
        first_csv = csv;
        first_summary = summary;
      } else {
        CHECK(csv == first_csv);
        CHECK(summary == first_summary);
      }
    }
  }
}

TEST_CASE("seeds follow the documented derivation") {
  const auto cfg = parse_config(base_doc("lis", {{"n", 30}}, 5, 99));
  const auto run = run_experiment(cfg);
  REQUIRE(run.records.size() == 5);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(run.records[r].replicate == r);
    CHECK(run.records[r].seed == conc::derive_seed(99, r));
    CHECK(run.records[r].param_hash == cfg.param_hash());
  }
}

TEST_CASE("a single replicate leaves sd undefined") {
  const auto run = run_experiment(parse_config(base_doc("gaussian_sum", {{"n", 10}}, 1)));
  CHECK(run.records.size() == 1);
  CHECK_FALSE(run.summary.sd_defined);
  const auto j = run.summary.to_json();
  CHECK(j["sd"].is_null());
  CHECK(j["sd_defined"] == false);
  CHECK(run.summary.curve.size() == 20);
  CHECK_FALSE(run.summary.has_bound());
}

TEST_CASE("empirical tail is non-increasing on the grid") {
  for (const auto& doc : {base_doc("gaussian_sum", {{"n", 40}}, 500),
                          base_doc("mwst", {{"n_cells", 36}}, 150),
                          base_doc("lis", {{"n", 200}}, 300)}) {
    const auto s = run_experiment(parse_config(doc)).summary;
    for (std::size_t j = 1; j < s.curve.size(); ++j) {
      CHECK(s.curve[j].t > s.curve[j - 1].t);
      CHECK(s.curve[j].empirical <= s.curve[j - 1].empirical);
    }
    CHECK(s.curve.front().t == doctest::Approx(0.5 * s.sd));
    CHECK(s.curve.back().t == doctest::Approx(6.0 * s.sd));
  }
}

TEST_CASE("Bernoulli sums are dominated by the Chernoff corollary") {
  auto doc = base_doc("chernoff", {{"n", 1000}, {"p", 0.5}}, 20000, 21);
  doc["bound"] = {{"t_grid", {20, 30, 40, 50, 60, 70, 80, 90, 100}}};
  const auto s = run_experiment(parse_config(doc)).summary;
  REQUIRE(s.has_bound());
  CHECK(s.bound_method == "chernoff_corollary");
  CHECK(s.all_dominated() == true);
  for (const auto& p : s.curve) {
    REQUIRE(p.bound);
    // The logged spec reproduces the curve through the bounds module.
    const auto direct = conc::bounds::chernoff_corollary_bound(1000, 0.25, p.t);
    CHECK(p.bound->tail_probability == direct.tail_probability);
    CHECK(p.bound->m_used == direct.m_used);
  }
  // Mean of a Binomial(1000, 1/2) and its sd.
  CHECK(s.mean == doctest::Approx(500.0).epsilon(0.002));
  CHECK(s.sd == doctest::Approx(std::sqrt(250.0)).epsilon(0.03));
}

TEST_CASE("heterogeneous Bernoulli sums use the general Chernoff bound") {
  const auto s =
      run_experiment(parse_config(base_doc("chernoff", {{"n", 500}, {"p_range", {0.01, 0.3}}}, 5000)))
          .summary;
  CHECK(s.bound_method == "general_chernoff");
  CHECK(s.all_dominated() == true);
  CHECK(s.diagnostics["nu"].get<double>() == doctest::Approx(500 * 0.155));
}

TEST_CASE("a constant functional is trivially dominated") {
  auto doc = base_doc("chernoff", {{"n", 20}, {"p", 1.0}}, 200);
  doc["bound"] = {{"profile", "estimated"}, {"estimate_samples", 200}};
  const auto s = run_experiment(parse_config(doc)).summary;
  CHECK(s.mean == 20.0);
  CHECK(s.sd == 0.0);
  REQUIRE(s.has_bound());
  for (const auto& p : s.curve) {
    CHECK(p.t > 0.0);
    CHECK(p.empirical == 0.0);
    CHECK(p.verdict == true);
  }
}

TEST_CASE("emitted bound curves are reproducible from the logged spec") {
  for (const auto& doc : {base_doc("gaussian_sum", {{"n", 50}}, 300),
                          base_doc("jl", {{"n", 200}, {"k", 20}}, 300),
                          base_doc("lis", {{"n", 400}}, 150)}) {
    const auto s = run_experiment(parse_config(doc)).summary;
    REQUIRE(s.has_bound());
    CHECK(s.profile_source == ProfileSource::Analytic);
    const BoundEvaluator eval(Json::parse(s.bound_spec.dump()));
    for (const auto& p : s.curve) {
      REQUIRE(p.bound);
      const auto again = eval(p.t);
      CHECK(again.tail_probability == p.bound->tail_probability);
      CHECK(again.m_used == p.bound->m_used);
    }
    CHECK(s.all_dominated() == true);
  }
}

TEST_CASE("gaussian bound spec matches a direct recursion call") {
  const auto s = run_experiment(parse_config(base_doc("gaussian_sum", {{"n", 30}}, 200))).summary;
  std::vector<double> by_order;
  for (int l = 2; l <= 20; l += 2) {
    double df = 1.0;
    for (int j = l - 1; j > 1; j -= 2) df *= j;
    by_order.push_back(df);
  }
  const auto profile = conc::bounds::MomentProfile::uniform(30, by_order);
  for (const auto& p : s.curve) {
    const auto direct = conc::bounds::optimize_m(
        [&](int m) { return conc::bounds::theorem1_recursion_bound(profile, m); }, p.t, 20,
        conc::bounds::Method::Theorem1Recursion);
    CHECK(p.bound->tail_probability == doctest::Approx(direct.tail_probability).epsilon(1e-12));
  }
}

TEST_CASE("summary tail curve is recomputable from the CSV alone") {
  const auto dir = scratch("csv");
  auto cfg = parse_config(base_doc("chromatic", {{"n", 14}, {"p", 0.25}}, 120));
  cfg.output = dir.string();
  const auto run = run_experiment(cfg);
  std::ifstream in(dir / "records.csv");
  const auto table = read_records_csv(in);
  CHECK(table.experiment == ExperimentId::Chromatic);
  CHECK(table.aux_names == aux_names(ExperimentId::Chromatic));
  REQUIRE(table.records.size() == run.records.size());
  std::vector<double> f;
  for (std::size_t r = 0; r < table.records.size(); ++r) {
    CHECK(table.records[r].f == run.records[r].f);
    CHECK(table.records[r].seed == run.records[r].seed);
    CHECK(table.records[r].aux == run.records[r].aux);
    f.push_back(table.records[r].f);
  }
  const auto again = summarize(ExperimentId::Chromatic, f);
  CHECK(again.mean == run.summary.mean);
  CHECK(again.sd == run.summary.sd);
  REQUIRE(again.curve.size() == run.summary.curve.size());
  for (std::size_t j = 0; j < again.curve.size(); ++j) {
    CHECK(again.curve[j].t == run.summary.curve[j].t);
    CHECK(again.curve[j].empirical == run.summary.curve[j].empirical);
  }
  // Every chromatic record satisfies chi <= greedy and chi <= floor(MAD) + 1.
  for (const auto& r : table.records) {
    CHECK(r.f <= r.aux[1]);
    CHECK(r.f <= std::floor(r.aux[2] + 1e-9) + 1.0);
  }
}

TEST_CASE("a mid-run failure leaves a partial CSV with an error record") {
  // Four cells of Poisson(3) points exceed the exact solver's limit sometimes.
  auto doc = base_doc("tsp", {{"n_cells", 4}, {"counts", {{"kind", "poisson"}, {"mean", 3.0}}},
                              {"functional", "exact"}}, 200);
  std::string first;
  for (std::size_t workers : {1, 3}) {
    auto cfg = parse_config(doc);
    cfg.workers = workers;
    const auto dir = scratch("partial");
    cfg.output = dir.string();
    CHECK_THROWS_AS(run_experiment(cfg), conc::SizeLimit);
    std::ifstream in(dir / "records.csv");
    const auto table = read_records_csv(in);
    REQUIRE_FALSE(table.records.empty());
    CHECK_FALSE(table.records.back().ok());
    CHECK(table.records.back().status.rfind("error: ", 0) == 0);
    for (std::size_t r = 0; r + 1 < table.records.size(); ++r) {
      CHECK(table.records[r].ok());
      CHECK(table.records[r].replicate == r);
      CHECK(table.records[r].aux[0] <= 13.0);
    }
    CHECK(table.records.back().replicate == table.records.size() - 1);
    CHECK_FALSE(fs::exists(dir / "summary.json"));
    if (workers == 1) first = slurp(dir / "records.csv");
    else CHECK(slurp(dir / "records.csv") == first);
  }
}

TEST_CASE("size limits are raised before any replicate runs") {
  CHECK_THROWS_AS(run_experiment(parse_config(base_doc("chromatic", {{"n", 40}, {"p", 0.1}}, 5))),
                  conc::SizeLimit);
  const auto greedy =
      run_experiment(parse_config(base_doc("chromatic", {{"n", 40}, {"p", 0.1}, {"functional", "greedy"}}, 5)));
  CHECK(greedy.summary.functional == "chromatic_greedy");
}

TEST_CASE("JL hypothesis gate") {
  const auto sphere = run_experiment(parse_config(base_doc("jl", {{"n", 300}, {"k", 30}}, 120)));
  CHECK(sphere.summary.diagnostics["jl_hypotheses"]["admissible"] == true);
  REQUIRE(sphere.summary.diagnostics.contains("jl_envelopes"));
  const auto& env = sphere.summary.diagnostics["jl_envelopes"];
  CHECK(env["exp_form"].size() == sphere.summary.curve.size());
  CHECK(env["power_form"].size() == sphere.summary.curve.size());

  const auto bad = base_doc(
      "jl",
      {{"n", 300}, {"k", 30},
       {"family", {{"kind", "radial"}, {"law", "two_point"}, {"r2_a", 0.25}, {"r2_b", 1.75}, {"p", 0.5}}}},
      120);
  CHECK_THROWS_AS(run_experiment(parse_config(bad)), conc::HypothesisViolation);
}

TEST_CASE("admissible radial JL family falls back to an estimated profile") {
  const auto s = run_experiment(parse_config(
                                    base_doc("jl", {{"n", 200}, {"k", 10}, {"family", {{"kind", "admissible"}}}}, 400)))
                     .summary;
  REQUIRE(s.has_bound());
  CHECK(s.profile_source == ProfileSource::Estimated);
  CHECK(s.bound_spec["profile"]["kind"] == "table");
  CHECK(s.bound_spec["profile"]["n"] == 10);
  CHECK(s.all_dominated() == true);
}

TEST_CASE("Doob-estimated profile for LIS") {
  auto doc = base_doc("lis", {{"n", 12}}, 100);
  doc["bound"] = {{"profile", "estimated"}, {"doob_outer", 100}, {"doob_inner", 4}, {"max_order", 6}};
  const auto s = run_experiment(parse_config(doc)).summary;
  REQUIRE(s.has_bound());
  CHECK(s.bound_spec["profile"]["n"] == 12);
  const auto& table = s.bound_spec["profile"]["log_values"];
  REQUIRE(table.size() == 12);
  for (const auto& row : table) CHECK(row.size() == 3);
  for (const auto& p : s.curve) CHECK(p.bound->tail_probability <= 1.0);
}

TEST_CASE("compare_bound preconditions") {
  const auto cfg = parse_config(base_doc("gaussian_sum", {{"n", 10}}, 50));
  const auto run = run_experiment(cfg);
  CHECK(run.summary.warnings.size() == 1);
  CHECK_THROWS_AS(compare_bound(run.records, cfg), conc::InvalidArgument);

  // A table profile stopping at order 4 cannot support order 6.
  const Json spec{{"method", "theorem1_recursion"},
                  {"max_order", 6},
                  {"profile", {{"kind", "table"}, {"n", 2}, {"max_order", 4}, {"log_values", {{0.0, 1.0}, {0.0, 1.0}}}}}};
  try {
    BoundEvaluator eval(spec);
    FAIL("expected IncompleteProfile");
  } catch (const conc::IncompleteProfile& e) {
    CHECK(std::string(e.what()).find("6") != std::string::npos);
  }
}

TEST_CASE("scaling study recovers the CLT slope") {
  auto cfg = parse_config(base_doc("gaussian_sum", {{"n", 100}}, 2000, 77));
  const std::vector<std::size_t> sizes{100, 400, 900};
  const auto r = scaling_study(cfg, sizes);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.slope == doctest::Approx(0.5).epsilon(0.1));
  CHECK(r.ci_low < r.slope);
  CHECK(r.ci_high > r.slope);
  for (const auto& row : r.rows)
    CHECK(row.sd == doctest::Approx(std::sqrt(static_cast<double>(row.n))).epsilon(0.1));
  const std::vector<std::size_t> two{100, 400};
  CHECK_THROWS_AS(scaling_study(cfg, two), conc::ConfigError);
}
