// Command-line front end of the harness.
//
//   conc run <config.json> [--seed S] [--workers W] [--out DIR]
//   conc scale <config.json> --n-list 100 400 900 [--seed S] [--workers W] [--out DIR]
//   conc report <records.csv> [--config C] [--t-grid ...] [--out FILE]
//   conc bound <spec.json> --t 1 2 3
//
// Exit codes: 0 success, 2 config error, 3 hypothesis-violation refusal,
// 4 size-limit error, 1 anything else.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "conc/error.hpp"
#include "conc/harness.hpp"

namespace h = conc::harness;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Base seed, replacing the config's base_seed");
    cmd->add_option("--workers", workers, "Worker threads (0: one per hardware thread)");
    cmd->add_option("--out", out, "Output directory");
  }

  h::ExperimentConfig apply(h::ExperimentConfig cfg) const {
    if (seed) cfg.base_seed = *seed;
    if (workers) cfg.workers = *workers;
    if (!out.empty()) cfg.output = out;
    return cfg;
  }
};

void emit(const h::Json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-based concentration bounds and Monte Carlo experiments"};
  app.require_subcommand(1);

  Overrides run_flags, scale_flags;
  std::string run_config, scale_config, report_csv, report_config, report_out, bound_spec;
  std::vector<std::size_t> n_list;
  std::vector<double> report_grid, bound_t;

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", run_config, "Experiment config")->required()->check(CLI::ExistingFile);
  run_flags.add_to(run);

  auto* scale = app.add_subcommand("scale", "Fit log sd against log n over several sizes");
  scale->add_option("config", scale_config, "Experiment config template")
      ->required()
      ->check(CLI::ExistingFile);
  scale->add_option("--n-list", n_list, "Sizes (at least three)")->required();
  scale_flags.add_to(scale);

  auto* report = app.add_subcommand("report", "Summarize a records CSV");
  report->add_option("records", report_csv, "records.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--config", report_config, "Config used for the bound comparison")
      ->check(CLI::ExistingFile);
  report->add_option("--t-grid", report_grid, "Explicit tail thresholds");
  report->add_option("--out", report_out, "Summary JSON path (stdout when omitted)");

  auto* bound = app.add_subcommand("bound", "Evaluate a tail bound from a bound spec file");
  bound->add_option("spec", bound_spec, "Bound spec JSON")->required()->check(CLI::ExistingFile);
  bound->add_option("--t", bound_t, "Tail thresholds")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) {
      const auto cfg = run_flags.apply(h::load_config(run_config));
      const auto result = h::run_experiment(cfg);
      std::cout << result.summary.to_json().dump(2) << "\n";
    } else if (*scale) {
      const auto cfg = scale_flags.apply(h::load_config(scale_config));
      std::cout << h::scaling_study(cfg, n_list).to_json().dump(2) << "\n";
    } else if (*report) {
      std::ifstream in(report_csv);
      const auto table = h::read_records_csv(in);
      std::vector<double> f;
      for (const auto& r : table.records)
        if (r.ok()) f.push_back(r.f);
      h::ConcentrationSummary summary;
      if (!report_config.empty()) {
        auto cfg = h::load_config(report_config);
        if (!report_grid.empty()) cfg.bound.t_grid = report_grid;
        for (const auto& r : table.records) {
          if (r.param_hash != cfg.param_hash()) {
            std::cerr << "warning: records were produced with different parameters\n";
            break;
          }
        }
        summary = h::compare_bound(table.records, cfg);
      } else {
        summary = h::summarize(table.experiment, f, report_grid);
      }
      emit(summary.to_json(), report_out);
    } else if (*bound) {
      std::ifstream in(bound_spec);
      const h::BoundEvaluator eval(h::Json::parse(in));
      h::Json out = h::Json::array();
      for (double t : bound_t) {
        const auto r = eval(t);
        out.push_back({{"t", r.t},
                       {"method", std::string(conc::bounds::to_string(r.method))},
                       {"m_used", r.m_used},
                       {"log_moment_bound", r.log_moment_bound},
                       {"tail_probability", r.tail_probability}});
      }
      std::cout << out.dump(2) << "\n";
    }
  } catch (const conc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const conc::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const h::Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const conc::HypothesisViolation& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 3;
  } catch (const conc::SizeLimit& e) {
    std::cerr << "size limit: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
