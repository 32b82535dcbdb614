#pragma once

// Seeded experiment runner shared by the command-line tool and the
// acceptance suite. Every replicate owns an RNG stream derived from
// (seed, replicate index), so output does not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfsim/coupling.hpp"
#include "cfsim/cycle_tracker.hpp"
#include "cfsim/discrete_coupling.hpp"
#include "cfsim/exact_oracle.hpp"
#include "cfsim/parallel.hpp"
#include "cfsim/rng.hpp"
#include "cfsim/simplex.hpp"
#include "cfsim/stats.hpp"
#include "cfsim/transposition_graph.hpp"

namespace cfsim {

using Json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { discrete, continuous, coupled, coupled_discrete, exact };

inline std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::discrete: return "discrete";
    case Mode::continuous: return "continuous";
    case Mode::coupled: return "coupled";
    case Mode::coupled_discrete: return "coupled-discrete";
    case Mode::exact: return "exact";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  for (Mode m : {Mode::discrete, Mode::continuous, Mode::coupled, Mode::coupled_discrete, Mode::exact})
    if (mode_name(m) == s) return m;
  throw ConfigError("unknown mode '" + std::string(s) +
                    "' (expected discrete, continuous, coupled, coupled-discrete or exact)");
}

// Acceptance thresholds applied by --check.
inline constexpr double kCheckMaxTv = 0.02;
inline constexpr double kCheckMaxTailDeviation = 0.03;
inline constexpr double kCheckKsAlpha = 0.01;
inline constexpr double kCheckStandardErrors = 3.0;
inline constexpr double kCheckMassTolerance = 1e-12;
inline constexpr double kTailPoints[] = {0.55, 0.65, 0.75, 0.85, 0.95};
inline constexpr std::size_t kTopColumns = 10;

struct ExperimentConfig {
  Mode mode = Mode::discrete;
  std::uint32_t n = 0;
  std::optional<double> c;
  std::optional<std::uint64_t> t;
  std::optional<std::uint64_t> steps;
  double epsilon = 0.01;
  double truncation = kDefaultTruncation;
  std::uint64_t replicates = 1;
  std::uint64_t seed = 0;
  std::optional<std::string> q;  // "uniform", "uniform:<t0>" or "even"
  bool allow_identity = false;
  bool allow_subcritical = false;
  bool check = false;
  std::string output = "-";
  std::optional<std::string> summary;
  unsigned threads = 1;
  std::uint64_t record_every = 0;  // 0: final state only
  std::string tracker = "treap";
  double discrepancy_threshold = 0.1;
};

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"mode",           "n",
                                             "c",              "t",
                                             "steps",          "epsilon",
                                             "truncation",     "replicates",
                                             "seed",           "q",
                                             "allow-identity", "allow-subcritical",
                                             "check",          "output",
                                             "summary",        "threads",
                                             "record-every",   "tracker",
                                             "discrepancy-threshold"};
  return keys;
}

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  return x;
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline void set_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "mode") {
    cfg.mode = parse_mode(value);
  } else if (key == "n") {
    const auto n = parse_count(key, value);
    if (n > UINT32_MAX - 1) throw ConfigError("n: too large");
    cfg.n = static_cast<std::uint32_t>(n);
  } else if (key == "c") {
    cfg.c = parse_real(key, value);
  } else if (key == "t") {
    cfg.t = parse_count(key, value);
  } else if (key == "steps") {
    cfg.steps = parse_count(key, value);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_real(key, value);
  } else if (key == "truncation") {
    cfg.truncation = parse_real(key, value);
  } else if (key == "replicates") {
    cfg.replicates = parse_count(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_count(key, value);
  } else if (key == "q") {
    cfg.q = value;
  } else if (key == "allow-identity") {
    cfg.allow_identity = parse_bool(key, value);
  } else if (key == "allow-subcritical") {
    cfg.allow_subcritical = parse_bool(key, value);
  } else if (key == "check") {
    cfg.check = parse_bool(key, value);
  } else if (key == "output") {
    cfg.output = value;
  } else if (key == "summary") {
    cfg.summary = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<unsigned>(std::min<std::uint64_t>(parse_count(key, value), 4096));
  } else if (key == "record-every") {
    cfg.record_every = parse_count(key, value);
  } else if (key == "tracker") {
    if (value != "treap" && value != "naive") throw ConfigError("tracker: expected treap or naive, got '" + value + "'");
    cfg.tracker = value;
  } else if (key == "discrepancy-threshold") {
    cfg.discrepancy_threshold = parse_real(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

// Flat "key = value" lines; '#' starts a comment. Later lines win.
inline std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(std::string_view(line).substr(0, eq));
    const auto value = detail::trim(std::string_view(line).substr(eq + 1));
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    out[key] = value;
  }
  return out;
}

// Derived quantities of a validated configuration.
struct ExperimentPlan {
  std::uint64_t transpositions = 0;  // discrete: horizon; coupled-discrete: burn-in before coupling
  std::uint64_t steps = 0;           // chain steps (continuous, coupled modes, exact)
  std::optional<ObservationTime> q;
  std::vector<std::string> warnings;
};

namespace detail {

inline ObservationTime parse_q(const std::string& spec, const ExperimentConfig& cfg) {
  if (spec == "even") return ObservationTime::even_window(cfg.epsilon);
  if (spec == "uniform") {
    if (!cfg.steps || *cfg.steps == 0) throw ConfigError("q = uniform needs steps >= 1 (q is uniform on 0..steps-1)");
    return ObservationTime::uniform_below(*cfg.steps);
  }
  if (spec.rfind("uniform:", 0) == 0) {
    const auto t0 = parse_count("q", spec.substr(8));
    if (t0 == 0) throw ConfigError("q: window must be nonempty");
    return ObservationTime::uniform_below(t0);
  }
  throw ConfigError("q: expected uniform, uniform:<t0> or even, got '" + spec + "'");
}

inline std::uint64_t horizon(const ExperimentConfig& cfg, bool steps_is_alias) {
  std::optional<std::uint64_t> t = cfg.t;
  if (steps_is_alias && cfg.steps) {
    if (t && *t != *cfg.steps) throw ConfigError("t and steps disagree; in discrete mode they name the same horizon");
    t = cfg.steps;
  }
  if (t) {
    if (cfg.c && static_cast<std::uint64_t>(std::ceil(*cfg.c * cfg.n)) != *t)
      throw ConfigError("c and t disagree: ceil(c n) = " + std::to_string(static_cast<std::uint64_t>(std::ceil(*cfg.c * cfg.n))));
    return *t;
  }
  if (cfg.c) {
    if (!(*cfg.c >= 0.0)) throw ConfigError("c must be nonnegative");
    return static_cast<std::uint64_t>(std::ceil(*cfg.c * cfg.n));
  }
  throw ConfigError("set c or t to fix the number of transpositions");
}

}  // namespace detail

inline ExperimentPlan plan_experiment(const ExperimentConfig& cfg) {
  ExperimentPlan plan;
  if (cfg.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(cfg.truncation > 0.0 && cfg.truncation < 1.0)) throw ConfigError("truncation must lie in (0, 1)");
  if (!(cfg.discrepancy_threshold >= 0.0)) throw ConfigError("discrepancy-threshold must be nonnegative");
  if (cfg.output.empty()) throw ConfigError("output path is empty");
  const auto need_n = [&](std::uint32_t lo, std::uint32_t hi) {
    if (cfg.n < lo || cfg.n > hi)
      throw ConfigError("n must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] in " +
                        std::string(mode_name(cfg.mode)) + " mode");
  };
  const auto subcritical_guard = [&](std::uint64_t t) {
    const double c = static_cast<double>(t) / cfg.n;
    if (c > 0.5) return;
    if (!cfg.allow_subcritical)
      throw ConfigError("t/n = " + std::to_string(c) + " is not above 1/2; pass allow-subcritical to run anyway");
    plan.warnings.push_back("t/n = " + std::to_string(c) + " <= 1/2: there is no giant component");
  };

  switch (cfg.mode) {
    case Mode::discrete:
      need_n(2, UINT32_MAX - 1);
      plan.transpositions = detail::horizon(cfg, true);
      subcritical_guard(plan.transpositions);
      break;
    case Mode::exact:
      need_n(2, kMaxExactN);
      if (cfg.c || cfg.t) {
        plan.steps = detail::horizon(cfg, true);
      } else if (cfg.steps) {
        plan.steps = *cfg.steps;
      } else {
        throw ConfigError("set steps (or t) in exact mode");
      }
      break;
    case Mode::continuous:
      if (!cfg.steps) throw ConfigError("set steps in continuous mode");
      plan.steps = *cfg.steps;
      break;
    case Mode::coupled:
    case Mode::coupled_discrete: {
      if (cfg.mode == Mode::coupled_discrete) {
        need_n(2, UINT32_MAX - 1);
        plan.transpositions = detail::horizon(cfg, false);
        if (!(2.0 * static_cast<double>(plan.transpositions) / cfg.n > 1.0))
          throw ConfigError("coupled-discrete needs t/n > 1/2 so that a giant component exists");
      }
      const std::string spec = cfg.q.value_or(cfg.mode == Mode::coupled_discrete || !cfg.steps ? "even" : "uniform");
      plan.q = detail::parse_q(spec, cfg);
      plan.steps = cfg.steps.value_or(plan.q->max_value());
      if (plan.steps < plan.q->max_value())
        throw ConfigError("steps = " + std::to_string(plan.steps) + " is below the largest observation time " +
                          std::to_string(plan.q->max_value()));
      break;
    }
  }
  if (cfg.allow_identity && cfg.mode != Mode::discrete && cfg.mode != Mode::exact)
    plan.warnings.push_back("allow-identity only affects discrete and exact modes");
  return plan;
}

// ---------------------------------------------------------------- CSV output

struct CsvRow {
  std::uint64_t replicate = 0;
  std::uint64_t step = 0;
  Mode mode = Mode::discrete;
  std::uint32_t n = 0;
  std::optional<std::uint64_t> t;
  std::optional<std::uint64_t> giant_size;
  std::vector<double> top;  // at most kTopColumns
  std::optional<std::uint64_t> n_eps;
  std::optional<double> q;
  std::optional<double> y1;
  std::optional<double> z1;
  std::optional<double> bar_eps;
  std::optional<bool> sub_eps_event;
};

inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline constexpr std::string_view kCsvHeader =
    "replicate,step,mode,n,t,giant_size,top1,top2,top3,top4,top5,top6,top7,top8,top9,top10,N_eps,Q,y1,z1,bar_eps,"
    "sub_eps_event";

inline void write_csv_row(std::ostream& os, const CsvRow& r) {
  const auto opt = [&os](const auto& v) {
    os << ',';
    if (!v) return;
    if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) {
      os << format_real(*v);
    } else if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, bool>) {
      os << (*v ? 1 : 0);
    } else {
      os << *v;
    }
  };
  os << r.replicate << ',' << r.step << ',' << mode_name(r.mode) << ',' << r.n;
  opt(r.t);
  opt(r.giant_size);
  for (std::size_t i = 0; i < kTopColumns; ++i) {
    os << ',';
    if (i < r.top.size()) os << format_real(r.top[i]);
  }
  opt(r.n_eps);
  opt(r.q);
  opt(r.y1);
  opt(r.z1);
  opt(r.bar_eps);
  opt(r.sub_eps_event);
  os << '\n';
}

inline void emit_csv(std::ostream& os, std::span<const CsvRow> rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) write_csv_row(os, r);
}

inline void emit_exact_csv_header(std::ostream& os) { os << "step,partition,probability\n"; }

// ---------------------------------------------------------------- replicates

struct ReplicateOutput {
  std::vector<CsvRow> rows;
  // discrete
  std::optional<Partition> final_partition;
  double giant_fraction = 0.0;
  double top1 = 0.0;
  // continuous
  double largest_initial = 0.0;
  double largest_final = 0.0;
  std::uint64_t sub_truncation_events = 0;
  // coupled
  double excess = 0.0;       // E[(1-Q^q)(1-Q^q-max{y1^q,z1^q}) | chain]
  double bound = 0.0;        // eta/2 N^0 + 4 bar_eps E[q+1]
  double discrepancy = 0.0;  // P(max{y1^q, z1^q} > threshold | chain)
  std::uint64_t delta_n_violations = 0;
  std::uint64_t residual_hits = 0;
  bool sub_eps_event = false;
};

namespace detail {

inline bool is_recorded(std::uint64_t step, std::uint64_t last, std::uint64_t every) {
  return step == last || (every != 0 && step % every == 0);
}

template <CycleTracker Tracker>
ReplicateOutput run_discrete_replicate(const ExperimentConfig& cfg, const ExperimentPlan& plan, std::uint64_t r) {
  Rng rng = replicate_stream(cfg.seed, r);
  const std::uint32_t n = cfg.n;
  const std::uint64_t horizon = plan.transpositions;
  Tracker perm(n);
  GraphComponents graph(n);
  ReplicateOutput out;
  const auto record = [&](std::uint64_t step) {
    CsvRow row;
    row.replicate = r;
    row.step = step;
    row.mode = Mode::discrete;
    row.n = n;
    row.t = horizon;
    const auto giant = graph.largest_component().size;
    row.giant_size = giant;
    const auto sizes = perm.cycle_sizes_sorted();
    for (std::size_t i = 0; i < std::min(kTopColumns, sizes.size()); ++i)
      row.top.push_back(static_cast<double>(sizes[i]) / static_cast<double>(giant));
    out.rows.push_back(std::move(row));
  };
  if (is_recorded(0, horizon, cfg.record_every)) record(0);
  for (std::uint64_t s = 1; s <= horizon; ++s) {
    const auto [a, b] = uniform_transposition(rng, n, cfg.allow_identity);
    if (a != b) {
      perm.apply_transposition(a, b);
      graph.add_edge(a, b);
    }
    if (is_recorded(s, horizon, cfg.record_every)) record(s);
  }
  const auto giant = graph.largest_component().size;
  out.giant_fraction = static_cast<double>(giant) / n;
  out.top1 = static_cast<double>(perm.largest_cycle()) / static_cast<double>(giant);
  if (n <= kMaxExactN) {
    Partition p;
    for (auto s : perm.cycle_sizes_sorted()) p.push_back(static_cast<std::uint32_t>(s));
    out.final_partition = std::move(p);
  }
  return out;
}

inline ReplicateOutput run_continuous_replicate(const ExperimentConfig& cfg, const ExperimentPlan& plan,
                                                std::uint64_t r) {
  Rng rng = replicate_stream(cfg.seed, r);
  ReplicateOutput out;
  auto y = sample_pd1(rng, cfg.truncation);
  out.largest_initial = y.largest();
  const auto record = [&](std::uint64_t step) {
    CsvRow row;
    row.replicate = r;
    row.step = step;
    row.mode = Mode::continuous;
    row.n = cfg.n;
    const auto e = y.entries();
    row.top.assign(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(std::min(kTopColumns, e.size())));
    out.rows.push_back(std::move(row));
  };
  if (is_recorded(0, plan.steps, cfg.record_every)) record(0);
  for (std::uint64_t s = 1; s <= plan.steps; ++s) {
    auto [next, rec] = step_m(y, rng);
    out.sub_truncation_events += rec.sub_truncation_event;
    y = std::move(next);
    if (is_recorded(s, plan.steps, cfg.record_every)) record(s);
  }
  out.largest_final = y.largest();
  return out;
}

// Shared observation loop for both coupled modes. `State` offers stats(),
// bar_epsilon(), sub_epsilon_event_occurred() and step(Rng&) whose record
// exposes the continuous-coupling fields either directly or via `.coupled`.
template <class State, class Top, class StepFn>
void observe_coupled(const ExperimentConfig& cfg, const ExperimentPlan& plan, std::uint64_t r, Mode mode,
                     std::optional<std::uint64_t> t, std::optional<std::uint64_t> giant, State& state, Top&& top,
                     StepFn&& step, Rng& rng, ReplicateOutput& out) {
  const ObservationTime& q = *plan.q;
  const double weight = q.eta();
  const auto initial = state.stats();
  out.bound = q.eta() / 2.0 * static_cast<double>(initial.n_unmatched) + 4.0 * state.bar_epsilon() * q.mean_plus_one();
  for (std::uint64_t k = 0;; ++k) {
    const auto s = state.stats();
    if (q.contains(k)) {
      out.excess += weight * unmatched_excess(s);
      out.discrepancy += weight * (std::max(s.y1, s.z1) > cfg.discrepancy_threshold ? 1.0 : 0.0);
    }
    if (is_recorded(k, plan.steps, cfg.record_every)) {
      CsvRow row;
      row.replicate = r;
      row.step = k;
      row.mode = mode;
      row.n = cfg.n;
      row.t = t;
      row.giant_size = giant;
      row.top = top();
      row.n_eps = s.n_unmatched;
      row.q = s.q;
      row.y1 = s.y1;
      row.z1 = s.z1;
      row.bar_eps = state.bar_epsilon();
      row.sub_eps_event = state.sub_epsilon_event_occurred();
      out.rows.push_back(std::move(row));
    }
    if (k == plan.steps) break;
    const CoupledStepRecord rec = step(rng);
    out.residual_hits += rec.residual_hit;
    if (!rec.sub_epsilon && rec.delta_n > 0) ++out.delta_n_violations;
  }
  out.sub_eps_event = state.sub_epsilon_event_occurred();
}

inline std::vector<double> head(std::span<const double> e) {
  return {e.begin(), e.begin() + static_cast<std::ptrdiff_t>(std::min(kTopColumns, e.size()))};
}

inline ReplicateOutput run_coupled_replicate(const ExperimentConfig& cfg, const ExperimentPlan& plan, std::uint64_t r) {
  Rng rng = replicate_stream(cfg.seed, r);
  ReplicateOutput out;
  auto y = sample_pd1(rng, cfg.truncation);
  auto z = sample_pd1(rng, cfg.truncation);
  CouplingState state(std::move(y), std::move(z), cfg.epsilon);
  observe_coupled(
      cfg, plan, r, Mode::coupled, std::nullopt, std::nullopt, state, [&] { return head(state.y().entries()); },
      [&](Rng& g) { return state.step(g); }, rng, out);
  return out;
}

template <CycleTracker Tracker>
ReplicateOutput run_coupled_discrete_replicate(const ExperimentConfig& cfg, const ExperimentPlan& plan,
                                               std::uint64_t r) {
  Rng rng = replicate_stream(cfg.seed, r);
  ReplicateOutput out;
  auto z = sample_pd1(rng, cfg.truncation);
  auto state = make_discrete_coupling<Tracker>(cfg.n, plan.transpositions, std::move(z), cfg.epsilon, rng);
  observe_coupled(
      cfg, plan, r, Mode::coupled_discrete, plan.transpositions, state.giant_size(), state,
      [&] { return head(state.y().entries()); }, [&](Rng& g) { return state.step(g).coupled; }, rng, out);
  return out;
}

inline Json mean_json(const RunningMean& m) { return Json{{"mean", m.mean()}, {"standard_error", m.standard_error()}}; }

}  // namespace detail

struct ExperimentResult {
  Json summary;
  bool check_performed = false;
  bool check_passed = true;
};

namespace detail {

inline void add_check(ExperimentResult& res, const std::string& name, bool passed, Json detail) {
  res.check_performed = true;
  res.check_passed = res.check_passed && passed;
  res.summary["check"]["criteria"].push_back(Json{{"name", name}, {"passed", passed}, {"detail", std::move(detail)}});
}

inline Json config_json(const ExperimentConfig& cfg, const ExperimentPlan& plan) {
  Json j;
  j["mode"] = mode_name(cfg.mode);
  j["n"] = cfg.n;
  if (cfg.c) j["c"] = *cfg.c;
  if (plan.transpositions) j["transpositions"] = plan.transpositions;
  if (plan.steps) j["steps"] = plan.steps;
  j["epsilon"] = cfg.epsilon;
  j["truncation"] = cfg.truncation;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["allow_identity"] = cfg.allow_identity;
  j["record_every"] = cfg.record_every;
  j["tracker"] = cfg.tracker;
  if (plan.q) {
    j["q"] = Json{{"min", plan.q->value(0)},
                  {"max", plan.q->max_value()},
                  {"count", plan.q->count()},
                  {"eta", plan.q->eta()},
                  {"mean_q_plus_one", plan.q->mean_plus_one()}};
    j["discrepancy_threshold"] = cfg.discrepancy_threshold;
  }
  return j;
}

inline void summarize_discrete(const ExperimentConfig& cfg, const ExperimentPlan& plan,
                               const std::vector<ReplicateOutput>& reps, ExperimentResult& res) {
  RunningMean giant;
  for (const auto& r : reps) giant.add(r.giant_fraction);
  Json& out = res.summary["results"];
  out["c_effective"] = static_cast<double>(plan.transpositions) / cfg.n;
  out["giant_fraction"] = mean_json(giant);
  out["giant_fraction_reference"] = survival_probability(2.0 * static_cast<double>(plan.transpositions) / cfg.n);
  double max_dev = 0.0;
  for (double x : kTailPoints) {
    RunningMean above;
    for (const auto& r : reps) above.add(r.top1 > x ? 1.0 : 0.0);
    const double ref = pd1_largest_tail(x);
    max_dev = std::max(max_dev, std::abs(above.mean() - ref));
    out["top1_tail"].push_back(Json{{"x", x}, {"empirical", above.mean()}, {"standard_error", above.standard_error()},
                                    {"reference", ref}});
  }
  out["top1_tail_max_deviation"] = max_dev;

  std::optional<double> tv;
  if (cfg.n <= kMaxExactN) {
    const auto kernel = build_transition_matrix(cfg.n, cfg.allow_identity);
    const auto exact = evolve(identity_start(kernel.space), kernel, plan.transpositions);
    std::vector<std::uint64_t> counts(kernel.space->size(), 0);
    for (const auto& r : reps) ++counts[kernel.space->index_of(*r.final_partition)];
    tv = tv_distance(empirical_law(kernel.space, counts), exact);
    out["exact_tv"] = *tv;
  }
  if (cfg.check) {
    if (tv) {
      add_check(res, "empirical cycle-type law matches the exact law", *tv <= kCheckMaxTv,
                Json{{"tv", *tv}, {"max", kCheckMaxTv}});
    } else {
      add_check(res, "largest normalized cycle follows ln(1/x)", max_dev <= kCheckMaxTailDeviation,
                Json{{"max_deviation", max_dev}, {"max", kCheckMaxTailDeviation}});
    }
  }
}

inline void summarize_continuous(const ExperimentConfig& cfg, const std::vector<ReplicateOutput>& reps,
                                 ExperimentResult& res) {
  std::vector<double> a;
  std::vector<double> b;
  std::uint64_t events = 0;
  for (const auto& r : reps) {
    a.push_back(r.largest_initial);
    b.push_back(r.largest_final);
    events += r.sub_truncation_events;
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double ks = ks_statistic(a, b);
  const double crit = ks_critical_two_sample(a.size(), b.size(), kCheckKsAlpha);
  Json& out = res.summary["results"];
  RunningMean ma;
  RunningMean mb;
  for (double x : a) ma.add(x);
  for (double x : b) mb.add(x);
  out["largest_initial"] = mean_json(ma);
  out["largest_final"] = mean_json(mb);
  out["ks_initial_vs_final"] = ks;
  out["ks_critical_1pct"] = crit;
  out["sub_truncation_events"] = events;
  if (cfg.check)
    add_check(res, "largest-entry law is unchanged by the kernel", ks < crit, Json{{"ks", ks}, {"critical", crit}});
}

inline void summarize_coupled(const ExperimentConfig& cfg, const std::vector<ReplicateOutput>& reps,
                              ExperimentResult& res) {
  RunningMean excess;
  RunningMean bound;
  RunningMean gap;
  RunningMean discrepancy;
  std::uint64_t violations = 0;
  std::uint64_t residual_hits = 0;
  std::uint64_t flagged = 0;
  for (const auto& r : reps) {
    excess.add(r.excess);
    bound.add(r.bound);
    gap.add(r.excess - r.bound);
    discrepancy.add(r.discrepancy);
    violations += r.delta_n_violations;
    residual_hits += r.residual_hits;
    flagged += r.sub_eps_event;
  }
  Json& out = res.summary["results"];
  out["unmatched_excess"] = mean_json(excess);
  out["excess_bound"] = mean_json(bound);
  out["discrepancy_probability"] = mean_json(discrepancy);
  out["delta_n_violations"] = violations;
  out["residual_hits"] = residual_hits;
  out["replicates_with_sub_eps_event"] = flagged;
  if (cfg.check) {
    const double slack = kCheckStandardErrors * gap.standard_error();
    add_check(res, "unmatched excess within its bound", gap.mean() <= slack,
              Json{{"excess_minus_bound", gap.mean()}, {"allowed", slack}});
    if (cfg.mode == Mode::coupled)
      add_check(res, "unmatched count never grows without a sub-epsilon event", violations == 0,
                Json{{"violations", violations}});
  }
}

template <CycleTracker Tracker>
std::vector<ReplicateOutput> run_replicates(const ExperimentConfig& cfg, const ExperimentPlan& plan) {
  std::vector<ReplicateOutput> reps(cfg.replicates);
  parallel_replicates(cfg.replicates, cfg.threads, [&](std::uint64_t r) {
    switch (cfg.mode) {
      case Mode::discrete: reps[r] = run_discrete_replicate<Tracker>(cfg, plan, r); break;
      case Mode::continuous: reps[r] = run_continuous_replicate(cfg, plan, r); break;
      case Mode::coupled: reps[r] = run_coupled_replicate(cfg, plan, r); break;
      case Mode::coupled_discrete: reps[r] = run_coupled_discrete_replicate<Tracker>(cfg, plan, r); break;
      case Mode::exact: break;
    }
  });
  return reps;
}

inline void run_exact(const ExperimentConfig& cfg, const ExperimentPlan& plan, std::ostream& csv,
                      ExperimentResult& res) {
  const auto kernel = build_transition_matrix(cfg.n, cfg.allow_identity);
  auto dist = identity_start(kernel.space);
  emit_exact_csv_header(csv);
  const auto write = [&](std::uint64_t step) {
    for (std::size_t i = 0; i < dist.probability.size(); ++i)
      if (dist.probability[i] > 0.0)
        csv << step << ',' << to_string((*kernel.space)[i]) << ',' << format_real(dist.probability[i]) << '\n';
  };
  if (is_recorded(0, plan.steps, cfg.record_every)) write(0);
  for (std::uint64_t s = 1; s <= plan.steps; ++s) {
    dist = evolve(dist, kernel, 1);
    if (is_recorded(s, plan.steps, cfg.record_every)) write(s);
  }
  Json& out = res.summary["results"];
  out["partitions"] = kernel.space->size();
  double mass = 0.0;
  Json law = Json::array();
  for (std::size_t i = 0; i < dist.probability.size(); ++i) {
    mass += dist.probability[i];
    if (dist.probability[i] > 0.0)
      law.push_back(Json{{"partition", to_string((*kernel.space)[i])}, {"probability", dist.probability[i]}});
  }
  out["distribution"] = std::move(law);
  out["tv_to_uniform_permutation"] = tv_distance(dist, uniform_permutation_cycle_law(cfg.n));
  if (cfg.check)
    add_check(res, "probability mass is conserved", std::abs(mass - 1.0) <= kCheckMassTolerance,
              Json{{"mass", mass}, {"tolerance", kCheckMassTolerance}});
}

}  // namespace detail

// Runs the experiment, writing CSV rows to `csv` in replicate order.
// Throws ConfigError for invalid configurations.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& csv) {
  const ExperimentPlan plan = plan_experiment(cfg);
  ExperimentResult res;
  res.summary["rng"] = Rng::kIdentifier;
  res.summary["config"] = detail::config_json(cfg, plan);
  res.summary["warnings"] = plan.warnings;
  res.summary["results"] = Json::object();

  if (cfg.mode == Mode::exact) {
    detail::run_exact(cfg, plan, csv, res);
  } else {
    const auto reps = cfg.tracker == "naive" ? detail::run_replicates<NaiveCycleTracker>(cfg, plan)
                                             : detail::run_replicates<TreapCycleTracker>(cfg, plan);
    csv << kCsvHeader << '\n';
    for (const auto& r : reps)
      for (const auto& row : r.rows) write_csv_row(csv, row);
    switch (cfg.mode) {
      case Mode::discrete: detail::summarize_discrete(cfg, plan, reps, res); break;
      case Mode::continuous: detail::summarize_continuous(cfg, reps, res); break;
      default: detail::summarize_coupled(cfg, reps, res); break;
    }
  }
  if (res.check_performed) res.summary["check"]["passed"] = res.check_passed;
  return res;
}

// Reference curves as CSV rows kind,x,value: z(s) for s in [0, s_max] and
// P(Y_1 > x) for x in [1/2, 1].
inline void emit_reference_csv(std::ostream& os, double s_max, std::size_t points) {
  if (points < 2) throw ConfigError("reference: need at least 2 points");
  if (!(s_max > 0.0)) throw ConfigError("reference: s-max must be positive");
  os << "kind,x,value\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double s = s_max * static_cast<double>(i) / static_cast<double>(points - 1);
    os << "survival_probability," << format_real(s) << ',' << format_real(survival_probability(s)) << '\n';
  }
  for (std::size_t i = 0; i < points; ++i) {
    const double x = 0.5 + 0.5 * static_cast<double>(i) / static_cast<double>(points - 1);
    os << "pd1_largest_tail," << format_real(x) << ',' << format_real(pd1_largest_tail(x)) << '\n';
  }
}

}  // namespace cfsim
