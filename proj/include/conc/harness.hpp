#pragma once

// Experiment orchestration: JSON configuration, deterministic replication
// over worker threads, record CSVs, concentration summaries, bound
// comparison and scaling studies.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conc/bounds.hpp"
#include "json.hpp"

namespace conc::harness {

using Json = nlohmann::json;

enum class ExperimentId { Tsp, Mwst, Chromatic, Jl, Binpack, Lis, Chernoff, GaussianSum };

std::string to_string(ExperimentId id);
// Throws ConfigError for an unknown name.
ExperimentId experiment_from_string(const std::string& name);

inline constexpr int kSchemaVersion = 1;

enum class ProfileSource { Auto, Analytic, Estimated, None };
std::string to_string(ProfileSource s);

struct BoundOptions {
  ProfileSource profile = ProfileSource::Auto;
  int max_order = 20;
  std::size_t bins = 10;          // prefix-sum bins of the estimators
  std::size_t estimate_samples = 2000;  // replicates regenerated for increment estimates
  std::size_t doob_outer = 100;   // replicates of the nested Doob estimate
  std::size_t doob_inner = 10;    // suffix resamples per prefix
  std::vector<double> t_grid;     // empty: 20 points from 0.5 sd to 6 sd
};

struct ExperimentConfig {
  ExperimentId experiment = ExperimentId::Chernoff;
  Json parameters;  // validated, defaults filled in
  std::size_t replicates = 0;
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;  // 0: one per hardware thread
  std::string output;       // directory; empty keeps results in memory
  BoundOptions bound;

  // FNV-1a of the experiment name and the canonical parameter dump.
  std::uint64_t param_hash() const;
  Json to_json() const;
};

// Validates a configuration document. Unknown or malformed keys raise
// ConfigError whose message starts with the offending field path.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

// Key of the size parameter varied by scaling studies.
std::string size_key(ExperimentId id);

struct ExperimentRecord {
  ExperimentId experiment = ExperimentId::Chernoff;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;  // derive_seed(base_seed, replicate)
  std::uint64_t param_hash = 0;
  double f = 0.0;
  std::vector<double> aux;
  std::string status = "ok";  // "ok" or "error: <message>"

  bool ok() const { return status == "ok"; }
};

std::vector<std::string> aux_names(ExperimentId id);

// Header `experiment,replicate,seed,param_hash,f,<aux names>,status`.
void write_records_csv(std::ostream& out, ExperimentId id,
                       std::span<const ExperimentRecord> records);

struct RecordTable {
  ExperimentId experiment = ExperimentId::Chernoff;
  std::vector<std::string> aux_names;
  std::vector<ExperimentRecord> records;
};

RecordTable read_records_csv(std::istream& in);

struct TailPoint {
  double t = 0.0;
  double empirical = 0.0;       // Pr^(|f - mean| >= t)
  double standard_error = 0.0;  // binomial, sqrt(p (1 - p) / N)
  std::optional<bounds::TailBoundResult> bound;
  std::optional<bool> verdict;  // empirical <= bound + 3 SE
};

struct ConcentrationSummary {
  ExperimentId experiment = ExperimentId::Chernoff;
  std::string functional;
  std::size_t replicates = 0;
  double mean = 0.0;
  double sd = 0.0;
  bool sd_defined = false;  // needs two replicates
  std::vector<TailPoint> curve;
  std::string bound_method;
  ProfileSource profile_source = ProfileSource::None;
  Json bound_spec;  // input of BoundEvaluator; null without a bound
  std::vector<std::string> warnings;
  Json diagnostics = Json::object();

  bool has_bound() const { return !bound_spec.is_null(); }
  // Every evaluated verdict true; empty when no bound was attached.
  std::optional<bool> all_dominated() const;
  Json to_json() const;
};

// 20 points from 0.5 sd to 6 sd; unit scale when sd is zero or undefined.
std::vector<double> default_t_grid(double sd, bool sd_defined);

// Mean, sd and the empirical two-sided tail on the grid (default grid when
// empty). Uses only the values, so a record CSV alone reproduces it.
ConcentrationSummary summarize(ExperimentId id, std::span<const double> f,
                               std::span<const double> t_grid = {});

// Tail bound described by a JSON bound specification:
//   {"method": "chernoff_corollary", "n": N, "sigma2": s}
//   {"method": "general_chernoff", "nu": v}
//   {"method": "hoeffding_azuma", "n": N, "max_order": M}
//   {"method": "theorem1_recursion", "max_order": M, "profile": P}
//   {"method": "main_theorem", "max_order": M, "profile": P}
// with P one of
//   {"kind": "uniform", "n": N, "values": [M_2, M_4, ...]}
//   {"kind": "table", "n": N, "max_order": M, "log_values": [[log M_{i,2}, ...], ...]}
//   {"kind": "sphere_projection", "n": n, "k": k}
//   {"kind": "lis_essential", "n": N, "c": c}
// lis_essential is the typical profile L_{i,l} = min(1, c / sqrt(N - i)),
// worst case 1 and no atypical event.
class BoundEvaluator {
 public:
  explicit BoundEvaluator(const Json& spec);
  bounds::TailBoundResult operator()(double t) const;
  bounds::Method method() const { return method_; }

 private:
  bounds::Method method_ = bounds::Method::Theorem1Recursion;
  std::size_t n_ = 0;
  double sigma2_ = 0.0;
  double nu_ = 0.0;
  int max_order_ = 2;
  std::vector<double> log_bounds_;  // by order 2, 4, ..., max_order
};

// Empirical summary of the records plus the bound curve and verdicts.
// Needs at least 100 successful records; the profile is analytic where the
// experiment defines one, otherwise estimated. Throws IncompleteProfile
// naming the missing (i, l) when the profile does not cover max_order.
ConcentrationSummary compare_bound(std::span<const ExperimentRecord> records,
                                   const ExperimentConfig& config);

struct RunResult {
  std::vector<ExperimentRecord> records;
  ConcentrationSummary summary;
};

// Runs every replicate on config.workers threads and writes records.csv,
// summary.json and bound_spec.json under config.output when set. Output is
// identical for any worker count. A failing replicate stops the run: the
// records before it and an error record are written, then the exception
// propagates. A JL family failing check_jl_hypotheses is refused with
// HypothesisViolation before any replicate runs.
RunResult run_experiment(const ExperimentConfig& config);

struct ScalingRow {
  std::size_t n = 0;
  std::size_t replicates = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct ScalingResult {
  ExperimentId experiment = ExperimentId::Chernoff;
  std::vector<ScalingRow> rows;
  // Weighted least squares of log sd on log n with weights 2 (N - 1), the
  // inverse asymptotic variance of log sd.
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci_low = 0.0;  // 95 % normal interval
  double ci_high = 0.0;

  Json to_json() const;
};

// One run per size (at least three); outputs go to <output>/n=<size>.
ScalingResult scaling_study(const ExperimentConfig& base, std::span<const std::size_t> n_list);

}  // namespace conc::harness
