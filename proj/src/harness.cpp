#include "conc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "conc/error.hpp"
#include "conc/euclid.hpp"
#include "conc/graphs.hpp"
#include "conc/moments.hpp"
#include "conc/packing.hpp"
#include "conc/pointproc.hpp"
#include "conc/rng.hpp"
#include "conc/seq.hpp"

namespace conc::harness {

namespace {

constexpr std::uint64_t kJlCheckTag = 0x4A4C'4348;
constexpr std::uint64_t kDoobTag = 0xD00B;
constexpr std::size_t kMinBoundRecords = 100;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

// Reads one JSON object, remembering which keys were consumed so that
// finish() can reject the rest.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const Json* get(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = get(key);
    if (!v) fail(sub(key), "required field missing");
    return *v;
  }

  double number(const std::string& key, std::optional<double> def, double lo, double hi) {
    const Json* v = get(key);
    if (!v) {
      if (!def) fail(sub(key), "required field missing");
      return *def;
    }
    if (!v->is_number()) fail(sub(key), "expected a number");
    const double x = v->get<double>();
    if (!(x >= lo && x <= hi)) {
      fail(sub(key), "value " + v->dump() + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    }
    return x;
  }

  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> def,
                        std::uint64_t lo, std::uint64_t hi) {
    const Json* v = get(key);
    if (!v) {
      if (!def) fail(sub(key), "required field missing");
      return *def;
    }
    return as_integer(*v, sub(key), lo, hi);
  }

  std::string string(const std::string& key, std::optional<std::string> def) {
    const Json* v = get(key);
    if (!v) {
      if (!def) fail(sub(key), "required field missing");
      return *def;
    }
    if (!v->is_string()) fail(sub(key), "expected a string");
    return v->get<std::string>();
  }

  bool boolean(const std::string& key, bool def) {
    const Json* v = get(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(sub(key), "expected true or false");
    return v->get<bool>();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) fail(sub(item.key()), "unknown key");
    }
  }

  static std::uint64_t as_integer(const Json& v, const std::string& path, std::uint64_t lo,
                                  std::uint64_t hi) {
    std::uint64_t x = 0;
    if (v.is_number_unsigned()) {
      x = v.get<std::uint64_t>();
    } else if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) fail(path, "expected a non-negative integer");
      x = static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else {
      fail(path, "expected an integer");
    }
    if (x < lo || x > hi) {
      fail(path, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
    }
    return x;
  }

 private:
  static std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 40;

std::vector<double> number_array(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

// Runs a constructor that validates its arguments and reports failures
// against the config path.
template <class F>
auto checked(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
}

Json normalize_counts(const Json& j, const std::string& path) {
  Fields in(j, path);
  const std::string kind = in.string("kind", std::nullopt);
  Json out{{"kind", kind}};
  if (kind == "poisson") {
    out["mean"] = in.number("mean", 1.0, 0.0, 1e6);
  } else if (kind == "zeta") {
    out["exponent"] = in.number("exponent", std::nullopt, 1.0, 1e3);
    out["cap"] = in.integer("cap", 1000000, 1, kMaxCount);
    if (!(out["exponent"].get<double>() > 1.0)) fail(in.sub("exponent"), "must exceed 1");
  } else if (kind == "two_point") {
    out["p0"] = in.number("p0", std::nullopt, 0.0, 1.0);
    out["value"] = in.integer("value", std::nullopt, 0, kMaxCount);
  } else if (kind == "deterministic") {
    out["k"] = in.integer("k", std::nullopt, 0, kMaxCount);
  } else {
    fail(in.sub("kind"), "unknown count distribution '" + kind +
                             "' (poisson, zeta, two_point, deterministic)");
  }
  in.finish();
  return out;
}

pointproc::CellCountDistribution make_counts(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "poisson") return pointproc::CellCountDistribution::poisson(j.at("mean").get<double>());
  if (kind == "zeta") {
    return pointproc::CellCountDistribution::zeta(j.at("exponent").get<double>(),
                                                  j.at("cap").get<std::uint64_t>());
  }
  if (kind == "two_point") {
    return pointproc::CellCountDistribution::two_point(j.at("p0").get<double>(),
                                                       j.at("value").get<std::uint64_t>());
  }
  return pointproc::CellCountDistribution::deterministic(j.at("k").get<std::uint64_t>());
}

Json normalize_family(const Json& j, const std::string& path) {
  Fields in(j, path);
  const std::string kind = in.string("kind", std::nullopt);
  Json out{{"kind", kind}};
  if (kind == "radial") {
    const std::string law = in.string("law", std::nullopt);
    out["law"] = law;
    if (law == "constant") {
      out["r2"] = in.number("r2", std::nullopt, 0.0, 1e6);
    } else if (law == "scaled_beta") {
      out["alpha"] = in.number("alpha", std::nullopt, 0.0, 1e6);
      out["beta"] = in.number("beta", std::nullopt, 0.0, 1e6);
      out["lo"] = in.number("lo", std::nullopt, 0.0, 1e6);
      out["hi"] = in.number("hi", std::nullopt, 0.0, 1e6);
    } else if (law == "two_point") {
      out["r2_a"] = in.number("r2_a", std::nullopt, 0.0, 1e6);
      out["r2_b"] = in.number("r2_b", std::nullopt, 0.0, 1e6);
      out["p"] = in.number("p", std::nullopt, 0.0, 1.0);
    } else if (law == "pareto") {
      out["tail_index"] = in.number("tail_index", std::nullopt, 1.0, 1e6);
    } else {
      fail(in.sub("law"), "unknown radial law '" + law +
                              "' (constant, scaled_beta, two_point, pareto)");
    }
  } else if (kind != "sphere" && kind != "admissible") {
    fail(in.sub("kind"), "unknown vector family '" + kind + "' (sphere, admissible, radial)");
  }
  in.finish();
  return out;
}

seq::UnitVectorFamily make_family(const Json& j, std::size_t n) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sphere") return seq::UnitVectorFamily::sphere();
  if (kind == "admissible") return seq::UnitVectorFamily::admissible_default(n);
  const std::string law = j.at("law").get<std::string>();
  seq::RadialLaw r;
  if (law == "constant") {
    r = seq::RadialLaw::constant(j.at("r2").get<double>());
  } else if (law == "scaled_beta") {
    r = seq::RadialLaw::scaled_beta(j.at("alpha").get<double>(), j.at("beta").get<double>(),
                                    j.at("lo").get<double>(), j.at("hi").get<double>());
  } else if (law == "two_point") {
    r = seq::RadialLaw::two_point(j.at("r2_a").get<double>(), j.at("r2_b").get<double>(),
                                  j.at("p").get<double>());
  } else {
    r = seq::RadialLaw::pareto(j.at("tail_index").get<double>());
  }
  return seq::UnitVectorFamily::radial_mixture(r);
}

packing::ItemDistribution make_items(const Json& j) {
  if (j.contains("k")) return packing::lower_bound_distribution(j.at("k").get<int>());
  return packing::ItemDistribution(j.at("sizes").get<std::vector<double>>(),
                                   j.at("probs").get<std::vector<double>>());
}

graphs::EdgeProbabilityMatrix make_matrix(const Json& j) {
  const auto n = j.at("n").get<std::size_t>();
  if (j.contains("p")) return graphs::EdgeProbabilityMatrix::uniform(n, j.at("p").get<double>());
  graphs::EdgeProbabilityMatrix m(n);
  const auto& rows = j.at("matrix");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) m.set(i, k, rows[i][k].get<double>());
  return m;
}

std::vector<double> chernoff_probs(const Json& j) {
  const auto n = j.at("n").get<std::size_t>();
  if (j.contains("probs")) return j.at("probs").get<std::vector<double>>();
  if (j.contains("p_range")) {
    const double lo = j.at("p_range")[0].get<double>();
    const double hi = j.at("p_range")[1].get<double>();
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i)
      p[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return p;
  }
  return std::vector<double>(n, j.at("p").get<double>());
}

Json normalize_parameters(ExperimentId id, const Json& j) {
  const std::string path = "parameters";
  Fields in(j, path);
  Json out = Json::object();
  switch (id) {
    case ExperimentId::Tsp:
    case ExperimentId::Mwst: {
      const auto n_cells = in.integer("n_cells", std::nullopt, 4, 1u << 24);
      out["n_cells"] = n_cells;
      checked(in.sub("n_cells"), [&] { return pointproc::grid_side(n_cells); });
      const Json* counts = in.get("counts");
      out["counts"] = counts ? normalize_counts(*counts, in.sub("counts"))
                             : Json{{"kind", "poisson"}, {"mean", 1.0}};
      checked(in.sub("counts"), [&] { return make_counts(out["counts"]); });
      const std::string placement = in.string("placement", "UniformInCell");
      checked(in.sub("placement"), [&] { return pointproc::placement_from_string(placement); });
      out["placement"] = placement;
      if (id == ExperimentId::Tsp) {
        const std::string fn = in.string("functional", "auto");
        if (fn != "auto" && fn != "exact" && fn != "2opt_strip") {
          fail(in.sub("functional"), "expected auto, exact or 2opt_strip");
        }
        out["functional"] = fn;
      }
      break;
    }
    case ExperimentId::Chromatic: {
      const auto n = in.integer("n", std::nullopt, 1, 100000);
      out["n"] = n;
      const bool has_p = in.has("p");
      const bool has_matrix = in.has("matrix");
      if (has_p == has_matrix) fail(path, "exactly one of p and matrix is required");
      if (has_p) {
        out["p"] = in.number("p", std::nullopt, 0.0, 1.0);
      } else {
        const Json& m = in.require("matrix");
        const std::string mp = in.sub("matrix");
        if (!m.is_array() || m.size() != n) fail(mp, "expected an n x n array");
        for (std::size_t i = 0; i < n; ++i) {
          const auto row = number_array(m[i], mp + "[" + std::to_string(i) + "]");
          if (row.size() != n) fail(mp + "[" + std::to_string(i) + "]", "expected n entries");
        }
        out["matrix"] = m;
        checked(mp, [&] { return make_matrix(out); });
      }
      const std::string fn = in.string("functional", "exact");
      if (fn != "exact" && fn != "greedy") fail(in.sub("functional"), "expected exact or greedy");
      out["functional"] = fn;
      break;
    }
    case ExperimentId::Jl: {
      const auto n = in.integer("n", std::nullopt, 1, 1u << 24);
      const auto k = in.integer("k", std::nullopt, 1, n);
      out["n"] = n;
      out["k"] = k;
      const Json* fam = in.get("family");
      out["family"] = fam ? normalize_family(*fam, in.sub("family")) : Json{{"kind", "sphere"}};
      checked(in.sub("family"), [&] { return make_family(out["family"], n); });
      out["hypothesis_samples"] = in.integer("hypothesis_samples", 10000, 10000, 1u << 26);
      out["hypothesis_bins"] = in.integer("hypothesis_bins", 10, 2, 1000);
      break;
    }
    case ExperimentId::Binpack: {
      out["n"] = in.integer("n", std::nullopt, 1, 1u << 30);
      const bool has_k = in.has("k");
      if (has_k == (in.has("sizes") || in.has("probs"))) {
        fail(path, "give either k or both sizes and probs");
      }
      if (has_k) {
        out["k"] = in.integer("k", std::nullopt, 4, 1000);
      } else {
        out["sizes"] = number_array(in.require("sizes"), in.sub("sizes"));
        out["probs"] = number_array(in.require("probs"), in.sub("probs"));
      }
      const auto dist = checked(path, [&] { return make_items(out); });
      out["maximal_only"] = in.boolean("maximal_only", true);
      out["exact"] = in.boolean("exact", false);
      checked(path, [&] { return packing::enumerate_bin_types(dist, out["maximal_only"]); });
      break;
    }
    case ExperimentId::Lis:
    case ExperimentId::GaussianSum:
      out["n"] = in.integer("n", std::nullopt, 1, 1u << 28);
      break;
    case ExperimentId::Chernoff: {
      const auto n = in.integer("n", std::nullopt, 1, 1u << 28);
      out["n"] = n;
      const int given = in.has("p") + in.has("probs") + in.has("p_range");
      if (given > 1) fail(path, "give at most one of p, probs and p_range");
      if (in.has("probs")) {
        const auto p = number_array(in.require("probs"), in.sub("probs"));
        if (p.size() != n) fail(in.sub("probs"), "expected n entries");
        for (double x : p)
          if (!(x >= 0.0 && x <= 1.0)) fail(in.sub("probs"), "entries must lie in [0, 1]");
        out["probs"] = p;
      } else if (in.has("p_range")) {
        const auto r = number_array(in.require("p_range"), in.sub("p_range"));
        if (r.size() != 2 || !(r[0] >= 0.0 && r[0] <= r[1] && r[1] <= 1.0)) {
          fail(in.sub("p_range"), "expected [lo, hi] with 0 <= lo <= hi <= 1");
        }
        out["p_range"] = r;
      } else {
        out["p"] = in.number("p", 0.5, 0.0, 1.0);
      }
      break;
    }
  }
  in.finish();
  return out;
}

std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
  return s;
}

// JSON has no NaN or infinity; they are written as null.
Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double double_factorial_odd(int l) {
  double r = 1.0;
  for (int j = l - 1; j > 1; j -= 2) r *= j;
  return r;
}

int even_floor(std::size_t x, int cap) {
  const auto v = static_cast<int>(std::min<std::size_t>(x, static_cast<std::size_t>(cap)));
  return v - v % 2;
}

// ---------------------------------------------------------------------------
// Experiment plans.

struct Outcome {
  double f = 0.0;
  std::vector<double> aux;
  std::vector<double> increments;  // per-variable sum terms, when requested
};

struct Plan {
  std::string functional;
  std::function<Outcome(std::uint64_t seed, bool keep_increments)> replicate;
  bool has_increments = false;
  Json analytic_spec;  // null when the experiment has no analytic profile
  // Doob differences estimated by nested resampling.
  std::function<moments::SampleMatrix(std::size_t outer, std::size_t inner, std::uint64_t seed)>
      doob;
  Json diagnostics = Json::object();
  std::vector<std::string> warnings;
  // Adds t-dependent diagnostics once the grid is known.
  std::function<void(ConcentrationSummary&)> finish;
  // Refusal gate run before any replicate.
  std::function<Json()> gate;
};

template <class T>
moments::SampleMatrix run_doob(std::function<T(std::size_t, CounterRng&)> draw,
                               std::function<double(std::span<const T>)> functional,
                               std::size_t n, std::size_t outer, std::size_t inner,
                               std::uint64_t seed) {
  return moments::doob_decompose<T>(draw, functional, n, outer, inner, seed).X;
}

double point_functional(bool mst, const std::string& mode, const PointList& pts, bool* exact) {
  if (exact) *exact = false;
  if (mst) return pts.empty() ? 0.0 : euclid::mst_weight(pts).weight;
  if (pts.size() < 2) {
    if (exact) *exact = true;
    return 0.0;
  }
  if (mode == "exact" || (mode == "auto" && pts.size() <= euclid::kExactTspLimit)) {
    if (exact) *exact = true;
    return euclid::tsp_exact(pts).length;
  }
  return euclid::tsp_2opt(pts, euclid::tsp_strip(pts, 1.0)).length;
}

void plan_points(const ExperimentConfig& cfg, Plan& plan) {
  const Json& p = cfg.parameters;
  const bool mst = cfg.experiment == ExperimentId::Mwst;
  const pointproc::PointSetConfig pcfg{p.at("n_cells").get<std::size_t>(), make_counts(p.at("counts")),
                                       pointproc::placement_from_string(p.at("placement"))};
  const std::string mode = mst ? "" : p.at("functional").get<std::string>();
  plan.functional = mst ? "mst_weight"
                        : mode == "auto" ? "tsp_exact_below_14_else_2opt_strip"
                        : mode == "exact" ? "tsp_exact"
                                          : "tsp_2opt_strip";
  plan.replicate = [pcfg, mst, mode](std::uint64_t seed, bool) {
    const auto pts = pointproc::sample_point_set(pcfg, seed).points();
    bool exact = false;
    Outcome o;
    o.f = point_functional(mst, mode, pts, &exact);
    o.aux = {static_cast<double>(pts.size())};
    if (!mst) o.aux.push_back(exact ? 1.0 : 0.0);
    return o;
  };
  const auto order = pointproc::layer_order(pcfg.n_cells);
  plan.doob = [pcfg, mst, mode, order](std::size_t outer, std::size_t inner, std::uint64_t seed) {
    std::function<PointList(std::size_t, CounterRng&)> draw = [pcfg, order](std::size_t i,
                                                                            CounterRng& rng) {
      return pointproc::sample_cell(pcfg, order[i], rng());
    };
    std::function<double(std::span<const PointList>)> fn = [mst, mode](std::span<const PointList> cells) {
      PointList all;
      for (const auto& c : cells) all.insert(all.end(), c.begin(), c.end());
      return point_functional(mst, mode, all, nullptr);
    };
    return run_doob(draw, fn, pcfg.n_cells, outer, inner, seed);
  };

  const auto& counts = pcfg.counts;
  Json growth = Json::array();
  const int valid = counts.moment_order_valid();
  for (int l = 2; l <= std::min(cfg.bound.max_order, valid); ++l) {
    growth.push_back({{"l", l}, {"epsilon", json_number(counts.growth_epsilon(l))}});
  }
  plan.diagnostics["counts"] = counts.describe();
  plan.diagnostics["prob_zero"] = counts.prob_zero();
  plan.diagnostics["moment_order_valid"] =
      valid == pointproc::CellCountDistribution::kAllMoments ? Json("all") : Json(valid);
  plan.diagnostics["growth_epsilon"] = growth;
  if (counts.prob_zero() >= 1.0) plan.warnings.push_back("every cell is empty with probability one");
}

void plan_chromatic(const ExperimentConfig& cfg, Plan& plan) {
  const Json& p = cfg.parameters;
  const auto P = std::make_shared<const graphs::EdgeProbabilityMatrix>(make_matrix(p));
  const bool exact = p.at("functional") == "exact";
  const std::size_t n = P->size();
  plan.functional = exact ? "chromatic_exact" : "chromatic_greedy";
  plan.replicate = [P, exact](std::uint64_t seed, bool) {
    const auto g = graphs::sample_graph(*P, seed);
    Outcome o;
    const auto greedy = static_cast<double>(graphs::chromatic_greedy(g));
    o.f = exact ? static_cast<double>(graphs::chromatic_exact(g)) : greedy;
    const double mr = g.size() <= graphs::kMadCap ? graphs::mad_realized(g)
                                                  : std::numeric_limits<double>::quiet_NaN();
    o.aux = {static_cast<double>(g.edge_count()), greedy, mr};
    return o;
  };
  // Vertex exposure: variable i holds the edges from vertex i to earlier ones.
  plan.doob = [P, exact, n](std::size_t outer, std::size_t inner, std::uint64_t seed) {
    std::function<std::vector<char>(std::size_t, CounterRng&)> draw = [P](std::size_t i,
                                                                         CounterRng& rng) {
      std::vector<char> row(i);
      for (std::size_t j = 0; j < i; ++j) row[j] = rng.uniform() < (*P)(i, j);
      return row;
    };
    std::function<double(std::span<const std::vector<char>>)> fn =
        [exact, n](std::span<const std::vector<char>> rows) {
          graphs::Graph g(n);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j)
              if (rows[i][j]) g.add_edge(i, j);
          return static_cast<double>(exact ? graphs::chromatic_exact(g) : graphs::chromatic_greedy(g));
        };
    return run_doob(draw, fn, n, outer, inner, seed);
  };
  const double pbar = P->average();
  plan.diagnostics["p_bar"] = pbar;
  plan.diagnostics["mad"] = n <= graphs::kMadCap ? json_number(graphs::mad(*P)) : Json(nullptr);
  // Variance scale of the sparse-graph tail exp(-c t^2 / (n sqrt(p) ln n)).
  const double scale = static_cast<double>(n) * std::sqrt(pbar) * std::log(static_cast<double>(n));
  plan.diagnostics["envelope_scale"] = json_number(scale);
  plan.finish = [scale](ConcentrationSummary& s) {
    if (s.sd_defined && scale > 0.0) {
      s.diagnostics["sd_over_sqrt_envelope_scale"] = s.sd / std::sqrt(scale);
    }
  };
}

void plan_jl(const ExperimentConfig& cfg, Plan& plan) {
  const Json& p = cfg.parameters;
  const auto n = p.at("n").get<std::size_t>();
  const auto k = p.at("k").get<std::size_t>();
  const auto family = make_family(p.at("family"), n);
  const double ey2 = seq::expected_coordinate_square(family, n);
  plan.functional = "jl_projection_sum";
  plan.has_increments = true;
  plan.replicate = [n, k, family, ey2](std::uint64_t seed, bool keep) {
    const auto v = seq::sample_unit_vector(n, family, seed);
    const auto stat = seq::jl_projection_statistic(v, k);
    Outcome o;
    o.f = stat.sum;
    o.aux = {stat.centered};
    if (keep) {
      o.increments.resize(k);
      for (std::size_t i = 0; i < k; ++i) o.increments[i] = v.coords[i] * v.coords[i] - ey2;
    }
    return o;
  };
  const int m = even_floor(k, cfg.bound.max_order);
  if (family.kind == seq::UnitVectorFamily::Kind::SphereUniform && m >= 2) {
    plan.analytic_spec = {{"method", "theorem1_recursion"},
                          {"max_order", m},
                          {"profile", {{"kind", "sphere_projection"}, {"n", n}, {"k", k}}}};
  }
  const auto samples = p.at("hypothesis_samples").get<std::size_t>();
  const auto bins = p.at("hypothesis_bins").get<std::size_t>();
  const std::uint64_t seed = stream_key(cfg.base_seed, 0, kJlCheckTag);
  auto report = std::make_shared<seq::JlHypothesisReport>();
  plan.gate = [family, n, k, samples, bins, seed, report]() {
    *report = seq::check_jl_hypotheses(family, n, k, samples, seed, bins);
    const auto& r = *report;
    Json j{{"samples", r.samples},
           {"max_increase_z", r.max_increase_z},
           {"worst_index", r.worst_index},
           {"z_threshold", r.z_threshold},
           {"monotone_ok", r.monotone_ok},
           {"orders", r.orders},
           {"growth", Json::array()},
           {"implied_constant", Json::array()},
           {"constant_threshold", r.constant_threshold},
           {"moments_ok", r.moments_ok},
           {"admissible", r.admissible()}};
    for (std::size_t i = 0; i < r.orders.size(); ++i) {
      j["growth"].push_back(json_number(r.growth[i]));
      j["implied_constant"].push_back(json_number(r.implied_constant[i]));
    }
    if (!r.admissible()) {
      std::string why;
      if (!r.monotone_ok) {
        why += "E(Y_i^2 | W) increases in W at i=" + std::to_string(r.worst_index) +
               " (z=" + std::to_string(r.max_increase_z) + " > " +
               std::to_string(r.z_threshold) + ")";
      }
      if (!r.moments_ok) {
        if (!why.empty()) why += "; ";
        why += "moment growth exceeds (c l)^{l/2} / n^{l/2} with c <= " +
               std::to_string(r.constant_threshold);
      }
      throw HypothesisViolation("jl hypotheses rejected, no bound emitted: " + why + "\n" +
                                j.dump(2));
    }
    return j;
  };
  plan.finish = [report, n, k](ConcentrationSummary& s) {
    // Both tail envelopes with the measured constant.
    double c = 0.0;
    for (double x : report->implied_constant)
      if (std::isfinite(x)) c = std::max(c, x);
    if (!(c > 0.0)) return;
    Json env{{"c", c}, {"t", Json::array()}, {"epsilon", Json::array()},
             {"exp_form", Json::array()}, {"power_form", Json::array()}};
    const double kd = static_cast<double>(k);
    for (const auto& pt : s.curve) {
      const double eps = pt.t * static_cast<double>(n) / kd;
      env["t"].push_back(pt.t);
      env["epsilon"].push_back(eps);
      env["exp_form"].push_back(std::exp(-kd * eps * eps / (2.0 * std::numbers::e * c)));
      env["power_form"].push_back(std::min(1.0, std::exp(0.5 * kd * std::log(c / (eps * eps)))));
    }
    s.diagnostics["jl_envelopes"] = env;
  };
}

void plan_binpack(const ExperimentConfig& cfg, Plan& plan) {
  const Json& p = cfg.parameters;
  const auto n = p.at("n").get<std::size_t>();
  const auto dist = make_items(p);
  const bool exact = p.at("exact").get<bool>();
  const auto types = std::make_shared<const packing::BinTypeSet>(
      packing::enumerate_bin_types(dist, p.at("maximal_only").get<bool>()));
  plan.functional = exact ? "binpack_lp_exact" : "binpack_lp";
  auto solve = [types, exact](const std::vector<std::int64_t>& counts) {
    return exact ? packing::solve_packing_lp_exact(*types, counts)
                 : packing::solve_packing_lp(*types, counts);
  };
  plan.replicate = [dist, n, solve](std::uint64_t seed, bool) {
    CounterRng rng(seed, 0, 0);
    const auto sol = solve(dist.sample_counts(n, rng));
    Outcome o;
    o.f = sol.value;
    o.aux = {static_cast<double>(packing::lp_round_up(sol)), static_cast<double>(sol.basis_size)};
    return o;
  };
  plan.doob = [dist, n, solve](std::size_t outer, std::size_t inner, std::uint64_t seed) {
    std::function<int(std::size_t, CounterRng&)> draw = [dist](std::size_t, CounterRng& rng) {
      const auto c = dist.sample_counts(1, rng);
      return static_cast<int>(std::find(c.begin(), c.end(), 1) - c.begin());
    };
    const std::size_t r = dist.types();
    std::function<double(std::span<const int>)> fn = [solve, r](std::span<const int> items) {
      std::vector<std::int64_t> counts(r, 0);
      for (int j : items) ++counts[static_cast<std::size_t>(j)];
      return solve(counts).value;
    };
    return run_doob(draw, fn, n, outer, inner, seed);
  };
  const double mu = dist.mean();
  const double s2 = dist.variance();
  const double scale = static_cast<double>(n) * (mu * mu * mu + s2);
  plan.diagnostics["mu"] = mu;
  plan.diagnostics["sigma2"] = s2;
  plan.diagnostics["bin_types"] = types->rows.size();
  plan.diagnostics["variance_scale"] = scale;
  for (const auto& w : packing::regime_warnings(dist, n)) plan.warnings.push_back(w);
  plan.finish = [scale](ConcentrationSummary& s) {
    if (s.sd_defined) s.diagnostics["variance_ratio"] = s.sd * s.sd / scale;
  };
}

void plan_lis(const ExperimentConfig& cfg, Plan& plan) {
  const auto n = cfg.parameters.at("n").get<std::size_t>();
  plan.functional = "lis_length";
  plan.replicate = [n](std::uint64_t seed, bool) {
    Outcome o;
    o.f = static_cast<double>(seq::lis(seq::sample_sequence(n, seed)));
    return o;
  };
  plan.doob = [n](std::size_t outer, std::size_t inner, std::uint64_t seed) {
    std::function<double(std::size_t, CounterRng&)> draw = [](std::size_t, CounterRng& rng) {
      return rng.uniform();
    };
    std::function<double(std::span<const double>)> fn = [](std::span<const double> v) {
      return static_cast<double>(seq::lis(v));
    };
    return run_doob(draw, fn, n, outer, inner, seed);
  };
  // E lis of m uniforms is at most e sqrt(m), which bounds the conditional
  // essential probability and hence E(X_i^l | prefix).
  plan.analytic_spec = {{"method", "main_theorem"},
                        {"max_order", cfg.bound.max_order},
                        {"profile", {{"kind", "lis_essential"}, {"n", n}, {"c", std::numbers::e}}}};
}

void plan_chernoff(const ExperimentConfig& cfg, Plan& plan) {
  const auto probs = chernoff_probs(cfg.parameters);
  plan.functional = "bernoulli_sum";
  plan.has_increments = true;
  plan.replicate = [probs](std::uint64_t seed, bool keep) {
    CounterRng rng(seed, 0, 0);
    Outcome o;
    if (keep) o.increments.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double b = rng.uniform() < probs[i] ? 1.0 : 0.0;
      o.f += b;
      if (keep) o.increments[i] = b - probs[i];
    }
    return o;
  };
  double nu = 0.0, s2 = 0.0;
  for (double p : probs) {
    nu += p;
    s2 += p * (1.0 - p);
  }
  plan.diagnostics["nu"] = nu;
  plan.diagnostics["variance"] = s2;
  const bool homogeneous = cfg.parameters.contains("p");
  if (homogeneous && s2 > 0.0) {
    plan.analytic_spec = {{"method", "chernoff_corollary"},
                          {"n", probs.size()},
                          {"sigma2", s2 / static_cast<double>(probs.size())}};
  } else if (!homogeneous && nu > 0.0) {
    plan.analytic_spec = {{"method", "general_chernoff"}, {"nu", nu}};
  }
}

void plan_gaussian(const ExperimentConfig& cfg, Plan& plan) {
  const auto n = cfg.parameters.at("n").get<std::size_t>();
  plan.functional = "gaussian_sum";
  plan.has_increments = true;
  plan.replicate = [n](std::uint64_t seed, bool keep) {
    CounterRng rng(seed, 0, 0);
    std::normal_distribution<double> normal;
    Outcome o;
    if (keep) o.increments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = normal(rng);
      o.f += z;
      if (keep) o.increments[i] = z;
    }
    return o;
  };
  Json values = Json::array();
  for (int l = 2; l <= cfg.bound.max_order; l += 2) values.push_back(double_factorial_odd(l));
  plan.analytic_spec = {{"method", "theorem1_recursion"},
                        {"max_order", cfg.bound.max_order},
                        {"profile", {{"kind", "uniform"}, {"n", n}, {"values", values}}}};
}

Plan make_plan(const ExperimentConfig& cfg) {
  Plan plan;
  switch (cfg.experiment) {
    case ExperimentId::Tsp:
    case ExperimentId::Mwst: plan_points(cfg, plan); break;
    case ExperimentId::Chromatic: plan_chromatic(cfg, plan); break;
    case ExperimentId::Jl: plan_jl(cfg, plan); break;
    case ExperimentId::Binpack: plan_binpack(cfg, plan); break;
    case ExperimentId::Lis: plan_lis(cfg, plan); break;
    case ExperimentId::Chernoff: plan_chernoff(cfg, plan); break;
    case ExperimentId::GaussianSum: plan_gaussian(cfg, plan); break;
  }
  return plan;
}

void preflight(const ExperimentConfig& cfg) {
  if (cfg.experiment == ExperimentId::Chromatic && cfg.parameters.at("functional") == "exact") {
    const auto n = cfg.parameters.at("n").get<std::size_t>();
    if (n > graphs::kChromaticCap) {
      throw SizeLimit("chromatic_exact handles at most " + std::to_string(graphs::kChromaticCap) +
                      " vertices (n=" + std::to_string(n) + "); use functional=greedy");
    }
  }
  if (cfg.experiment == ExperimentId::Tsp && cfg.parameters.at("functional") == "exact") {
    const auto counts = make_counts(cfg.parameters.at("counts"));
    const auto cells = cfg.parameters.at("n_cells").get<std::size_t>();
    if (counts.kind() == pointproc::CellCountDistribution::Kind::Deterministic &&
        counts.value() * cells > euclid::kExactTspLimit) {
      throw SizeLimit("tsp_exact handles at most " + std::to_string(euclid::kExactTspLimit) +
                      " points");
    }
  }
}

ConcentrationSummary compare_with_plan(std::span<const ExperimentRecord> records,
                                       const ExperimentConfig& cfg, Plan& plan) {
  std::vector<double> f;
  std::vector<const ExperimentRecord*> ok;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    f.push_back(r.f);
    ok.push_back(&r);
  }
  auto s = summarize(cfg.experiment, f, cfg.bound.t_grid);
  s.functional = plan.functional;
  s.warnings.insert(s.warnings.begin(), plan.warnings.begin(), plan.warnings.end());
  for (auto& [key, value] : plan.diagnostics.items()) s.diagnostics[key] = value;

  ProfileSource source = cfg.bound.profile;
  if (source == ProfileSource::Auto) {
    source = !plan.analytic_spec.is_null() ? ProfileSource::Analytic
             : plan.has_increments         ? ProfileSource::Estimated
                                           : ProfileSource::None;
  }
  if (source != ProfileSource::None && f.size() < kMinBoundRecords) {
    if (cfg.bound.profile != ProfileSource::Auto) {
      throw InvalidArgument("bound comparison needs at least " + std::to_string(kMinBoundRecords) +
                            " records, got " + std::to_string(f.size()));
    }
    s.warnings.push_back("bound comparison skipped: fewer than " +
                         std::to_string(kMinBoundRecords) + " records");
    source = ProfileSource::None;
  }
  if (source == ProfileSource::None && cfg.bound.profile == ProfileSource::Auto &&
      f.size() >= kMinBoundRecords) {
    s.warnings.push_back("no analytic profile for " + to_string(cfg.experiment) +
                         "; set bound.profile to estimated for a Doob estimate");
  }

  Json spec;
  if (source == ProfileSource::Analytic) {
    if (plan.analytic_spec.is_null()) {
      throw ConfigError("bound.profile: no analytic profile for " + to_string(cfg.experiment));
    }
    spec = plan.analytic_spec;
  } else if (source == ProfileSource::Estimated) {
    moments::SampleMatrix X;
    if (plan.has_increments) {
      // Regenerate the first replicates from their recorded seeds.
      const std::size_t rows = std::min(cfg.bound.estimate_samples, ok.size());
      std::vector<double> values;
      std::size_t cols = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto o = plan.replicate(ok[r]->seed, true);
        cols = o.increments.size();
        values.insert(values.end(), o.increments.begin(), o.increments.end());
      }
      X = moments::SampleMatrix(rows, cols, std::move(values));
    } else if (plan.doob) {
      X = plan.doob(cfg.bound.doob_outer, cfg.bound.doob_inner,
                    stream_key(cfg.base_seed, 0, kDoobTag));
    } else {
      throw ConfigError("bound.profile: no estimator for " + to_string(cfg.experiment));
    }
    const auto profile = moments::estimate_profile(X, cfg.bound.max_order, cfg.bound.bins);
    Json table = Json::array();
    for (std::size_t i = 0; i < profile.size(); ++i) {
      Json row = Json::array();
      for (int l : profile.orders()) row.push_back(json_number(profile.log_at(i, l)));
      table.push_back(row);
    }
    spec = {{"method", "theorem1_recursion"},
            {"max_order", cfg.bound.max_order},
            {"profile",
             {{"kind", "table"}, {"n", profile.size()}, {"max_order", profile.max_order()},
              {"log_values", table}}}};
    s.warnings.push_back("estimated profile: max-over-bins moments are estimates, not certificates");
  }

  if (!spec.is_null()) {
    const BoundEvaluator eval(spec);
    s.bound_spec = spec;
    s.bound_method = std::string(bounds::to_string(eval.method()));
    s.profile_source = source;
    std::size_t out_of_regime = 0;
    for (auto& pt : s.curve) {
      try {
        pt.bound = eval(pt.t);
      } catch (const OutOfRegime&) {
        ++out_of_regime;
        continue;
      }
      pt.verdict = pt.empirical <= pt.bound->tail_probability + 3.0 * pt.standard_error;
    }
    if (out_of_regime > 0) {
      s.warnings.push_back(std::to_string(out_of_regime) +
                           " grid points lie outside the bound's regime");
    }
  }
  if (plan.finish) plan.finish(s);
  return s;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Tsp: return "tsp";
    case ExperimentId::Mwst: return "mwst";
    case ExperimentId::Chromatic: return "chromatic";
    case ExperimentId::Jl: return "jl";
    case ExperimentId::Binpack: return "binpack";
    case ExperimentId::Lis: return "lis";
    case ExperimentId::Chernoff: return "chernoff";
    case ExperimentId::GaussianSum: return "gaussian_sum";
  }
  return "unknown";
}

ExperimentId experiment_from_string(const std::string& name) {
  for (auto id : {ExperimentId::Tsp, ExperimentId::Mwst, ExperimentId::Chromatic, ExperimentId::Jl,
                  ExperimentId::Binpack, ExperimentId::Lis, ExperimentId::Chernoff,
                  ExperimentId::GaussianSum}) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError("experiment: unknown experiment '" + name +
                    "' (tsp, mwst, chromatic, jl, binpack, lis, chernoff, gaussian_sum)");
}

std::string to_string(ProfileSource s) {
  switch (s) {
    case ProfileSource::Auto: return "auto";
    case ProfileSource::Analytic: return "analytic";
    case ProfileSource::Estimated: return "estimated";
    case ProfileSource::None: return "none";
  }
  return "unknown";
}

std::string size_key(ExperimentId id) {
  return id == ExperimentId::Tsp || id == ExperimentId::Mwst ? "n_cells" : "n";
}

std::uint64_t ExperimentConfig::param_hash() const {
  return fnv1a(to_string(experiment) + "|" + parameters.dump());
}

Json ExperimentConfig::to_json() const {
  Json b{{"profile", to_string(bound.profile)},
         {"max_order", bound.max_order},
         {"bins", bound.bins},
         {"estimate_samples", bound.estimate_samples},
         {"doob_outer", bound.doob_outer},
         {"doob_inner", bound.doob_inner}};
  if (!bound.t_grid.empty()) b["t_grid"] = bound.t_grid;
  Json j{{"schema_version", kSchemaVersion},
         {"experiment", to_string(experiment)},
         {"replicates", replicates},
         {"base_seed", base_seed},
         {"workers", workers},
         {"parameters", parameters},
         {"bound", b}};
  if (!output.empty()) j["output"] = output;
  return j;
}

ExperimentConfig parse_config(const Json& doc) {
  Fields in(doc, "");
  const auto version = in.integer("schema_version", std::nullopt, 0, 1u << 30);
  if (version != kSchemaVersion) {
    fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
  }
  ExperimentConfig cfg;
  cfg.experiment = experiment_from_string(in.string("experiment", std::nullopt));
  cfg.replicates = in.integer("replicates", std::nullopt, 1, 1u << 30);
  cfg.base_seed = in.integer("base_seed", std::nullopt, 0, UINT64_MAX);
  cfg.workers = in.integer("workers", 1, 0, 4096);
  cfg.output = in.string("output", "");
  cfg.parameters = normalize_parameters(cfg.experiment, in.require("parameters"));
  if (const Json* b = in.get("bound")) {
    Fields bf(*b, "bound");
    const std::string prof = bf.string("profile", "auto");
    bool found = false;
    for (auto s : {ProfileSource::Auto, ProfileSource::Analytic, ProfileSource::Estimated,
                   ProfileSource::None}) {
      if (to_string(s) == prof) {
        cfg.bound.profile = s;
        found = true;
      }
    }
    if (!found) fail("bound.profile", "expected auto, analytic, estimated or none");
    cfg.bound.max_order = static_cast<int>(bf.integer("max_order", 20, 2, 200));
    if (cfg.bound.max_order % 2 != 0) fail("bound.max_order", "must be even");
    cfg.bound.bins = bf.integer("bins", 10, 1, 1000);
    cfg.bound.estimate_samples = bf.integer("estimate_samples", 2000, 2, 1u << 24);
    cfg.bound.doob_outer = bf.integer("doob_outer", 100, 2, 1u << 20);
    cfg.bound.doob_inner = bf.integer("doob_inner", 10, 1, 1u << 20);
    if (const Json* g = bf.get("t_grid")) {
      cfg.bound.t_grid = number_array(*g, "bound.t_grid");
      for (double t : cfg.bound.t_grid)
        if (!(t > 0.0) || !std::isfinite(t)) fail("bound.t_grid", "entries must be positive");
    }
    bf.finish();
  }
  in.finish();
  // Plans validate cross-field constraints such as radial-law parameters.
  try {
    make_plan(cfg);
  } catch (const InvalidArgument& e) {
    fail("parameters", e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

std::vector<std::string> aux_names(ExperimentId id) {
  switch (id) {
    case ExperimentId::Tsp: return {"points", "exact"};
    case ExperimentId::Mwst: return {"points"};
    case ExperimentId::Chromatic: return {"edges", "greedy", "mad_realized"};
    case ExperimentId::Jl: return {"centered"};
    case ExperimentId::Binpack: return {"round_up", "basis_size"};
    case ExperimentId::Lis:
    case ExperimentId::Chernoff:
    case ExperimentId::GaussianSum: return {};
  }
  return {};
}

void write_records_csv(std::ostream& out, ExperimentId id,
                       std::span<const ExperimentRecord> records) {
  const auto names = aux_names(id);
  out << "experiment,replicate,seed,param_hash,f";
  for (const auto& n : names) out << ',' << n;
  out << ",status\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%" PRIu64 ",%016" PRIx64, r.replicate, r.seed,
                  r.param_hash);
    out << to_string(r.experiment) << ',' << buf << ',' << csv_double(r.f);
    for (std::size_t a = 0; a < names.size(); ++a) {
      out << ',' << csv_double(a < r.aux.size() ? r.aux[a] : std::numeric_limits<double>::quiet_NaN());
    }
    out << ',' << sanitize(r.status) << '\n';
  }
}

RecordTable read_records_csv(std::istream& in) {
  auto split = [](const std::string& line, std::size_t max_fields) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (out.size() + 1 < max_fields) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) break;
      out.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    out.push_back(line.substr(start));
    return out;
  };
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("records CSV is empty");
  const auto header = split(line, SIZE_MAX);
  const std::vector<std::string> lead{"experiment", "replicate", "seed", "param_hash", "f"};
  if (header.size() < 6 || !std::equal(lead.begin(), lead.end(), header.begin()) ||
      header.back() != "status") {
    throw InvalidArgument("records CSV header must be experiment,replicate,seed,param_hash,f,...,status");
  }
  RecordTable table;
  table.aux_names.assign(header.begin() + 5, header.end() - 1);
  bool first = true;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, header.size());
    if (cells.size() != header.size()) {
      throw InvalidArgument("records CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    ExperimentRecord r;
    try {
      r.experiment = experiment_from_string(cells[0]);
    } catch (const ConfigError&) {
      throw InvalidArgument("records CSV line " + std::to_string(line_no) + ": unknown experiment");
    }
    if (first) table.experiment = r.experiment;
    first = false;
    r.replicate = std::stoull(cells[1]);
    r.seed = std::stoull(cells[2]);
    r.param_hash = std::stoull(cells[3], nullptr, 16);
    r.f = std::strtod(cells[4].c_str(), nullptr);
    for (std::size_t a = 0; a < table.aux_names.size(); ++a)
      r.aux.push_back(std::strtod(cells[5 + a].c_str(), nullptr));
    r.status = cells.back();
    table.records.push_back(std::move(r));
  }
  return table;
}

std::optional<bool> ConcentrationSummary::all_dominated() const {
  std::optional<bool> all;
  for (const auto& p : curve) {
    if (!p.verdict) continue;
    all = all.value_or(true) && *p.verdict;
  }
  return all;
}

Json ConcentrationSummary::to_json() const {
  Json j{{"experiment", to_string(experiment)},
         {"functional", functional},
         {"replicates", replicates},
         {"mean", json_number(mean)},
         {"sd", sd_defined ? json_number(sd) : Json(nullptr)},
         {"sd_defined", sd_defined}};
  Json t = Json::array(), emp = Json::array(), se = Json::array();
  for (const auto& p : curve) {
    t.push_back(p.t);
    emp.push_back(p.empirical);
    se.push_back(p.standard_error);
  }
  j["t_grid"] = t;
  j["empirical_tail"] = emp;
  j["empirical_se"] = se;
  if (has_bound()) {
    Json tail = Json::array(), m = Json::array(), logb = Json::array(), verdicts = Json::array();
    for (const auto& p : curve) {
      tail.push_back(p.bound ? Json(p.bound->tail_probability) : Json(nullptr));
      m.push_back(p.bound ? Json(p.bound->m_used) : Json(nullptr));
      logb.push_back(p.bound ? json_number(p.bound->log_moment_bound) : Json(nullptr));
      verdicts.push_back(p.verdict ? Json(*p.verdict) : Json(nullptr));
    }
    j["bound"] = {{"method", bound_method},
                  {"profile_source", to_string(profile_source)},
                  {"spec", bound_spec},
                  {"tail", tail},
                  {"m_used", m},
                  {"log_moment_bound", logb}};
    j["verdicts"] = verdicts;
    const auto all = all_dominated();
    j["all_dominated"] = all ? Json(*all) : Json(nullptr);
  } else {
    j["bound"] = nullptr;
    j["verdicts"] = nullptr;
    j["all_dominated"] = nullptr;
  }
  j["warnings"] = warnings;
  j["diagnostics"] = diagnostics;
  return j;
}

std::vector<double> default_t_grid(double sd, bool sd_defined) {
  const double scale = sd_defined && sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
  std::vector<double> grid(20);
  for (std::size_t j = 0; j < grid.size(); ++j)
    grid[j] = scale * (0.5 + 5.5 * static_cast<double>(j) / 19.0);
  return grid;
}

ConcentrationSummary summarize(ExperimentId id, std::span<const double> f,
                               std::span<const double> t_grid) {
  ConcentrationSummary s;
  s.experiment = id;
  s.replicates = f.size();
  if (f.empty()) throw InvalidArgument("no records to summarize");
  double sum = 0.0;
  for (double v : f) sum += v;
  s.mean = sum / static_cast<double>(f.size());
  if (f.size() >= 2) {
    double ss = 0.0;
    for (double v : f) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(f.size() - 1));
    s.sd_defined = true;
  } else {
    s.sd = std::numeric_limits<double>::quiet_NaN();
    s.warnings.push_back("sd undefined with a single replicate");
  }
  const auto grid = t_grid.empty() ? default_t_grid(s.sd, s.sd_defined)
                                   : std::vector<double>(t_grid.begin(), t_grid.end());
  std::vector<double> dev(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) dev[i] = std::abs(f[i] - s.mean);
  std::sort(dev.begin(), dev.end());
  const double N = static_cast<double>(f.size());
  for (double t : grid) {
    TailPoint p;
    p.t = t;
    const auto below = std::lower_bound(dev.begin(), dev.end(), t) - dev.begin();
    p.empirical = static_cast<double>(dev.size() - static_cast<std::size_t>(below)) / N;
    p.standard_error = std::sqrt(p.empirical * (1.0 - p.empirical) / N);
    s.curve.push_back(p);
  }
  return s;
}

// ---------------------------------------------------------------------------

BoundEvaluator::BoundEvaluator(const Json& spec) {
  auto bad = [](const std::string& what) -> InvalidArgument {
    return InvalidArgument("bound spec: " + what);
  };
  if (!spec.is_object() || !spec.contains("method")) throw bad("missing method");
  const std::string method = spec.at("method").get<std::string>();
  try {
    if (method == "chernoff_corollary") {
      method_ = bounds::Method::ChernoffCorollary;
      n_ = spec.at("n").get<std::size_t>();
      sigma2_ = spec.at("sigma2").get<double>();
      return;
    }
    if (method == "general_chernoff") {
      method_ = bounds::Method::GeneralChernoff;
      nu_ = spec.at("nu").get<double>();
      return;
    }
    max_order_ = spec.at("max_order").get<int>();
    if (max_order_ < 2 || max_order_ % 2 != 0) throw bad("max_order must be even and >= 2");
    if (method == "hoeffding_azuma") {
      method_ = bounds::Method::HoeffdingAzuma;
      n_ = spec.at("n").get<std::size_t>();
      return;
    }
    const Json& p = spec.at("profile");
    const std::string kind = p.at("kind").get<std::string>();
    if (method == "theorem1_recursion") {
      method_ = bounds::Method::Theorem1Recursion;
      bounds::MomentProfile profile;
      if (kind == "uniform") {
        const auto values = p.at("values").get<std::vector<double>>();
        profile = bounds::MomentProfile::uniform(p.at("n").get<std::size_t>(), values);
      } else if (kind == "sphere_projection") {
        profile = seq::sphere_projection_profile(p.at("n").get<std::size_t>(),
                                                 p.at("k").get<std::size_t>(), max_order_);
      } else if (kind == "table") {
        const auto n = p.at("n").get<std::size_t>();
        const int m = p.at("max_order").get<int>();
        profile = bounds::MomentProfile(n, m);
        const auto& rows = p.at("log_values");
        if (rows.size() != n) throw bad("table needs one row per variable");
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < rows[i].size() && 2 * static_cast<int>(c) + 2 <= m; ++c) {
            const auto& v = rows[i][c];
            profile.set_log(i, 2 * static_cast<int>(c) + 2,
                            v.is_null() ? -std::numeric_limits<double>::infinity() : v.get<double>());
          }
        }
      } else {
        throw bad("unknown profile kind '" + kind + "' for theorem1_recursion");
      }
      for (int m = 2; m <= max_order_; m += 2)
        log_bounds_.push_back(bounds::theorem1_recursion_bound(profile, m));
      return;
    }
    if (method == "main_theorem") {
      method_ = bounds::Method::MainTheorem;
      if (kind != "lis_essential") throw bad("main_theorem supports the lis_essential profile");
      const auto n = p.at("n").get<std::size_t>();
      const double c = p.at("c").get<double>();
      bounds::MomentProfile worst(n, max_order_);
      for (std::size_t i = 0; i < n; ++i)
        for (int l = 2; l <= max_order_; l += 2) worst.set(i, l, 1.0);
      bounds::TypicalProfile tp(worst);
      for (std::size_t i = 0; i < n; ++i) {
        const double typ = std::min(1.0, c / std::sqrt(static_cast<double>(n - i)));
        for (int l = 2; l <= max_order_; l += 2) {
          tp.set_typical(i, l, typ);
          tp.set_delta(i, l, 0.0);
        }
      }
      for (int m = 2; m <= max_order_; m += 2)
        log_bounds_.push_back(bounds::main_theorem_bound(tp, m));
      return;
    }
  } catch (const Json::exception& e) {
    throw bad(e.what());
  }
  throw bad("unknown method '" + method + "'");
}

bounds::TailBoundResult BoundEvaluator::operator()(double t) const {
  switch (method_) {
    case bounds::Method::ChernoffCorollary:
      return bounds::chernoff_corollary_bound(n_, sigma2_, t);
    case bounds::Method::GeneralChernoff:
      return bounds::general_chernoff_bound(nu_, t);
    case bounds::Method::HoeffdingAzuma:
      return bounds::hoeffding_azuma_bound(n_, t, {}, max_order_);
    default:
      break;
  }
  const auto& lb = log_bounds_;
  return bounds::optimize_m([&lb](int m) { return lb[static_cast<std::size_t>(m / 2 - 1)]; }, t,
                            max_order_, method_);
}

ConcentrationSummary compare_bound(std::span<const ExperimentRecord> records,
                                   const ExperimentConfig& config) {
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.ok();
  if (ok < kMinBoundRecords) {
    throw InvalidArgument("compare_bound needs at least " + std::to_string(kMinBoundRecords) +
                          " records, got " + std::to_string(ok));
  }
  auto plan = make_plan(config);
  if (plan.gate) plan.diagnostics["jl_hypotheses"] = plan.gate();
  ExperimentConfig cfg = config;
  if (cfg.bound.profile == ProfileSource::None) cfg.bound.profile = ProfileSource::Auto;
  return compare_with_plan(records, cfg, plan);
}

RunResult run_experiment(const ExperimentConfig& config) {
  preflight(config);
  auto plan = make_plan(config);
  if (plan.gate) plan.diagnostics["jl_hypotheses"] = plan.gate();

  const std::size_t N = config.replicates;
  const std::uint64_t hash = config.param_hash();
  std::vector<Outcome> outcomes(N);
  std::vector<std::exception_ptr> errors(N);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_failure{N};
  auto work = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= N || r > first_failure.load()) return;
      try {
        outcomes[r] = plan.replicate(derive_seed(config.base_seed, r), false);
      } catch (...) {
        errors[r] = std::current_exception();
        std::size_t seen = first_failure.load();
        while (r < seen && !first_failure.compare_exchange_weak(seen, r)) {
        }
      }
    }
  };
  std::size_t workers = config.workers == 0 ? std::thread::hardware_concurrency() : config.workers;
  workers = std::max<std::size_t>(1, std::min(workers, N));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  const std::size_t failed = first_failure.load();
  RunResult result;
  for (std::size_t r = 0; r < std::min(failed, N); ++r) {
    ExperimentRecord rec;
    rec.experiment = config.experiment;
    rec.replicate = r;
    rec.seed = derive_seed(config.base_seed, r);
    rec.param_hash = hash;
    rec.f = outcomes[r].f;
    rec.aux = std::move(outcomes[r].aux);
    result.records.push_back(std::move(rec));
  }
  std::string error_text;
  if (failed < N) {
    try {
      std::rethrow_exception(errors[failed]);
    } catch (const std::exception& e) {
      error_text = e.what();
    } catch (...) {
      error_text = "unknown error";
    }
    ExperimentRecord rec;
    rec.experiment = config.experiment;
    rec.replicate = failed;
    rec.seed = derive_seed(config.base_seed, failed);
    rec.param_hash = hash;
    rec.f = std::numeric_limits<double>::quiet_NaN();
    rec.status = "error: " + error_text;
    result.records.push_back(std::move(rec));
  }

  std::filesystem::path dir;
  if (!config.output.empty()) {
    dir = config.output;
    std::filesystem::create_directories(dir);
    std::ostringstream csv;
    write_records_csv(csv, config.experiment, result.records);
    write_text(dir / "records.csv", csv.str());
  }
  if (failed < N) std::rethrow_exception(errors[failed]);

  result.summary = compare_with_plan(result.records, config, plan);
  if (!dir.empty()) {
    write_text(dir / "summary.json", result.summary.to_json().dump(2) + "\n");
    if (result.summary.has_bound())
      write_text(dir / "bound_spec.json", result.summary.bound_spec.dump(2) + "\n");
  }
  return result;
}

Json ScalingResult::to_json() const {
  Json rows_json = Json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"n", r.n}, {"replicates", r.replicates}, {"mean", r.mean}, {"sd", r.sd}});
  }
  return {{"experiment", to_string(experiment)},
          {"rows", rows_json},
          {"slope", slope},
          {"intercept", intercept},
          {"slope_se", slope_se},
          {"ci_low", ci_low},
          {"ci_high", ci_high}};
}

ScalingResult scaling_study(const ExperimentConfig& base, std::span<const std::size_t> n_list) {
  if (n_list.size() < 3) throw ConfigError("n_list: a scaling study needs at least 3 sizes");
  ScalingResult out;
  out.experiment = base.experiment;
  const std::string key = size_key(base.experiment);
  for (std::size_t n : n_list) {
    Json doc = base.to_json();
    doc["parameters"][key] = n;
    if (!base.output.empty()) {
      doc["output"] = (std::filesystem::path(base.output) / ("n=" + std::to_string(n))).string();
    }
    const auto cfg = parse_config(doc);
    const auto run = run_experiment(cfg);
    if (!run.summary.sd_defined || !(run.summary.sd > 0.0)) {
      throw InvalidArgument("scaling study: sd is zero or undefined at n=" + std::to_string(n));
    }
    out.rows.push_back({n, run.summary.replicates, run.summary.mean, run.summary.sd});
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const auto& r : out.rows) {
    const double w = 2.0 * (static_cast<double>(r.replicates) - 1.0);
    sw += w;
    sx += w * std::log(static_cast<double>(r.n));
    sy += w * std::log(r.sd);
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& r : out.rows) {
    const double w = 2.0 * (static_cast<double>(r.replicates) - 1.0);
    const double dx = std::log(static_cast<double>(r.n)) - xbar;
    sxx += w * dx * dx;
    sxy += w * dx * (std::log(r.sd) - ybar);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("scaling study needs distinct sizes");
  out.slope = sxy / sxx;
  out.intercept = ybar - out.slope * xbar;
  out.slope_se = 1.0 / std::sqrt(sxx);
  out.ci_low = out.slope - 1.959963984540054 * out.slope_se;
  out.ci_high = out.slope + 1.959963984540054 * out.slope_se;
  if (!base.output.empty()) {
    std::filesystem::create_directories(base.output);
    write_text(std::filesystem::path(base.output) / "scaling.json", out.to_json().dump(2) + "\n");
  }
  return out;
}

}  // namespace conc::harness
