#pragma once

// Experiment orchestration: declarative JSON configs with canonical hashing,
// deterministic seed derivation, streaming runs (no full traces held in
// memory), parallel sweeps, and CSV/JSON emission for plots.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dlb/adversarial.hpp"
#include "dlb/graph.hpp"
#include "dlb/process.hpp"
#include "dlb/rng.hpp"

namespace dlb {

// ---------------------------------------------------------------------------
// Configuration

struct X0Spec {
  enum class Kind { explicit_list, random_discrepancy, instance };
  Kind kind = Kind::explicit_list;
  std::vector<std::int64_t> values;   // explicit_list
  std::int64_t K = 0;                 // random_discrepancy: forced max-min
  std::uint64_t seed = 0;             //   and its seed
  std::string instance_name;          // instance
  nlohmann::json instance_params = nlohmann::json::object();
};

struct ExperimentConfig {
  std::string name;
  std::string graph_spec;
  RoundingPolicy policy;
  X0Spec x0;
  bool ideal_mode = false;  // divisible load, no rounding
  std::optional<std::int64_t> horizon;
  std::optional<double> until_discrepancy;
  std::int64_t max_steps = 1000000;  // cap while chasing until_discrepancy
  bool track_deviation = true;
  bool exact_ideal = false;  // exact per-step bound check (needs assert below)
  bool track_ansatz = false;
  std::optional<std::pair<std::int64_t, std::int64_t>> assert_deviation_le;  // num/den
  bool emit_trace = false;
  std::string out_dir;  // excluded from the config hash
};

inline nlohmann::json x0spec_to_json(const X0Spec& s) {
  switch (s.kind) {
    case X0Spec::Kind::explicit_list:
      return {{"kind", "explicit"}, {"values", s.values}};
    case X0Spec::Kind::random_discrepancy:
      return {{"kind", "random_discrepancy"}, {"K", s.K}, {"seed", s.seed}};
    case X0Spec::Kind::instance:
      return {{"kind", "instance"}, {"name", s.instance_name}, {"params", s.instance_params}};
  }
  throw std::logic_error("unreachable");
}

inline X0Spec x0spec_from_json(const nlohmann::json& j) {
  X0Spec s;
  const std::string kind = j.at("kind");
  if (kind == "explicit") {
    s.kind = X0Spec::Kind::explicit_list;
    s.values = j.at("values").get<std::vector<std::int64_t>>();
  } else if (kind == "random_discrepancy") {
    s.kind = X0Spec::Kind::random_discrepancy;
    s.K = j.at("K").get<std::int64_t>();
    s.seed = j.value("seed", std::uint64_t{0});
  } else if (kind == "instance") {
    s.kind = X0Spec::Kind::instance;
    s.instance_name = j.at("name");
    s.instance_params = j.value("params", nlohmann::json::object());
  } else {
    throw std::invalid_argument("unknown x0 kind: " + kind);
  }
  return s;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c, bool include_out = true) {
  nlohmann::json j{{"name", c.name},
                   {"graph", c.graph_spec},
                   {"policy", policy_to_json(c.policy)},
                   {"x0", x0spec_to_json(c.x0)},
                   {"mode", c.ideal_mode ? "ideal" : "discrete"},
                   {"metrics",
                    {{"deviation", c.track_deviation},
                     {"exact_ideal", c.exact_ideal},
                     {"ansatz", c.track_ansatz}}},
                   {"emit_trace", c.emit_trace}};
  if (c.horizon) j["T"] = *c.horizon;
  if (c.until_discrepancy) {
    j["until_discrepancy"] = *c.until_discrepancy;
    j["max_steps"] = c.max_steps;
  }
  if (c.assert_deviation_le) {
    j["assert_deviation_le"] = {{"num", c.assert_deviation_le->first},
                                {"den", c.assert_deviation_le->second}};
  }
  if (include_out && !c.out_dir.empty()) j["out"] = c.out_dir;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.name = j.value("name", std::string{});
  c.graph_spec = j.at("graph");
  c.policy = policy_from_json(j.at("policy"));
  c.x0 = x0spec_from_json(j.at("x0"));
  c.ideal_mode = j.value("mode", std::string{"discrete"}) == "ideal";
  if (j.contains("T")) c.horizon = j["T"].get<std::int64_t>();
  if (j.contains("until_discrepancy")) {
    c.until_discrepancy = j["until_discrepancy"].get<double>();
    c.max_steps = j.value("max_steps", std::int64_t{1000000});
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    c.track_deviation = m.value("deviation", true);
    c.exact_ideal = m.value("exact_ideal", false);
    c.track_ansatz = m.value("ansatz", false);
  }
  if (j.contains("assert_deviation_le")) {
    c.assert_deviation_le = {{j["assert_deviation_le"].at("num").get<std::int64_t>(),
                              j["assert_deviation_le"].at("den").get<std::int64_t>()}};
  }
  c.emit_trace = j.value("emit_trace", false);
  c.out_dir = j.value("out", std::string{});
  return c;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

// Canonical form: nlohmann objects keep keys sorted, output paths excluded.
inline std::string canonical_config_dump(const ExperimentConfig& c) {
  return config_to_json(c, /*include_out=*/false).dump();
}

inline std::uint64_t config_hash(const ExperimentConfig& c) {
  return fnv1a64(canonical_config_dump(c));
}

// ---------------------------------------------------------------------------
// Initial vectors

inline std::vector<std::int64_t> build_x0(const X0Spec& spec, const Graph& g) {
  switch (spec.kind) {
    case X0Spec::Kind::explicit_list: {
      if (spec.values.size() != static_cast<std::size_t>(g.n)) {
        throw std::invalid_argument("explicit x0 length mismatch");
      }
      return spec.values;
    }
    case X0Spec::Kind::random_discrepancy: {
      if (spec.K < 1) throw std::invalid_argument("discrepancy K must be >= 1");
      if (g.n < 2) throw std::invalid_argument("random x0 needs n >= 2");
      Xoshiro256ss rng(derive_seed(spec.seed, 0));
      std::vector<std::int64_t> x(g.n);
      for (auto& v : x) v = rng.range(0, spec.K);
      // Pin the extremes so the discrepancy is exactly K.
      const auto lo = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.n)));
      auto hi = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.n) - 1));
      if (hi >= lo) ++hi;
      x[lo] = 0;
      x[hi] = spec.K;
      return x;
    }
    case X0Spec::Kind::instance: {
      const InstanceBundle b = make_instance(spec.instance_name, spec.instance_params);
      if (graph_spec_string(b.graph) != graph_spec_string(g)) {
        throw std::invalid_argument("instance graph " + graph_spec_string(b.graph) +
                                    " does not match configured graph " + graph_spec_string(g));
      }
      return b.x0;
    }
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Runs

struct RunSummary {
  std::uint64_t config_hash = 0;
  std::string name;
  std::string graph;
  std::string policy;
  int n = 0;
  std::int64_t steps = 0;
  bool reached_target = true;  // false iff until_discrepancy was not met
  double max_deviation = std::numeric_limits<double>::quiet_NaN();
  bool deviation_bound_ok = true;
  double final_discrepancy = 0.0;
  std::int64_t ledger_max_scaled = 0;
  std::int64_t denom = 0;
  double ansatz_residual = std::numeric_limits<double>::quiet_NaN();
  int ansatz_exact = -1;  // -1 not computed, else 0/1
  double wall_ms = 0.0;
  std::string error;  // non-empty marks a failed sweep entry
};

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j{{"config_hash", s.config_hash},
                   {"name", s.name},
                   {"graph", s.graph},
                   {"policy", s.policy},
                   {"n", s.n},
                   {"steps", s.steps},
                   {"reached_target", s.reached_target},
                   {"max_deviation", s.max_deviation},
                   {"deviation_bound_ok", s.deviation_bound_ok},
                   {"final_discrepancy", s.final_discrepancy},
                   {"ledger_max_scaled", s.ledger_max_scaled},
                   {"denom", s.denom},
                   {"ansatz_residual", s.ansatz_residual},
                   {"ansatz_exact", s.ansatz_exact},
                   {"wall_ms", s.wall_ms}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

namespace detail {

inline void ensure_parent_dirs(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  ensure_parent_dirs(p);
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open " + p.string());
  return out;
}

inline std::string policy_label(const RoundingPolicy& p) {
  switch (p.kind) {
    case PolicyKind::rsw:
      return "rsw";
    case PolicyKind::randomized:
      return "randomized";
    case PolicyKind::quasirandom:
      break;
  }
  switch (p.tie_break) {
    case TieBreak::down:
      return "quasirandom:down";
    case TieBreak::up:
      return "quasirandom:up";
    case TieBreak::adversarial:
      return "quasirandom:" + p.adversary;
  }
  throw std::logic_error("unreachable");
}

}  // namespace detail

inline RunSummary run_experiment(const ExperimentConfig& cfg) {
  if (!cfg.horizon && !cfg.until_discrepancy) {
    throw std::invalid_argument("config needs a horizon T or until_discrepancy");
  }
  if (cfg.emit_trace && cfg.out_dir.empty()) {
    throw std::invalid_argument("emit_trace requires an output directory");
  }
  if (cfg.track_ansatz && (!cfg.horizon || cfg.until_discrepancy)) {
    throw std::invalid_argument("the ansatz metric needs a fixed horizon T");
  }
  const Graph g = parse_graph_spec(cfg.graph_spec);
  const std::vector<std::int64_t> x0 = build_x0(cfg.x0, g);
  const std::int64_t cap = cfg.horizon ? *cfg.horizon : cfg.max_steps;

  RunSummary s;
  s.config_hash = config_hash(cfg);
  s.name = cfg.name;
  s.graph = cfg.graph_spec;
  s.policy = cfg.ideal_mode ? "ideal" : detail::policy_label(cfg.policy);
  s.n = g.n;

  std::ofstream trace;
  if (cfg.emit_trace) {
    trace = detail::open_output(std::filesystem::path(cfg.out_dir) / "trace.csv");
  }
  const auto t_begin = std::chrono::steady_clock::now();

  if (cfg.ideal_mode) {
    const DiffusionMatrix P = diffusion_matrix(g);
    s.denom = P.denom;
    std::vector<double> xi(x0.begin(), x0.end());
    double disc = discrepancy(xi);
    if (cfg.emit_trace) trace << "step,discrepancy\n0," << disc << "\n";
    s.reached_target = !cfg.until_discrepancy || disc <= *cfg.until_discrepancy;
    std::int64_t t = 0;
    while (t < cap && !(cfg.until_discrepancy && disc <= *cfg.until_discrepancy)) {
      xi = P.apply(xi);
      ++t;
      disc = discrepancy(xi);
      if (cfg.emit_trace) trace << t << "," << disc << "\n";
      if (cfg.until_discrepancy && disc <= *cfg.until_discrepancy) s.reached_target = true;
    }
    if (cfg.until_discrepancy && disc > *cfg.until_discrepancy) s.reached_target = false;
    s.steps = t;
    s.final_discrepancy = disc;
  } else {
    // Ansatz verification needs the recorded trace; only sensible for small runs.
    if (cfg.track_ansatz) {
      const SimulationTrace tr = run(g, x0, cfg.policy, *cfg.horizon, /*with_ideal=*/true);
      const DiffusionMatrix P = diffusion_matrix(g);
      s.denom = tr.denom;
      s.steps = *cfg.horizon;
      s.final_discrepancy = static_cast<double>(tr.discrepancy_per_step.back());
      s.max_deviation = 0.0;
      for (double dev : tr.deviation_per_step) s.max_deviation = std::max(s.max_deviation, dev);
      std::vector<std::int64_t> acc(tr.edges.edges.size(), 0);
      for (const StepRecord& rec : tr.records) {
        for (std::size_t e = 0; e < acc.size(); ++e) {
          acc[e] += rec.errors_scaled[e];
          s.ledger_max_scaled = std::max(s.ledger_max_scaled, std::abs(acc[e]));
        }
      }
      s.ansatz_residual = verify_standard_ansatz(tr, P);
      if (cfg.exact_ideal) s.ansatz_exact = verify_standard_ansatz_exact(tr, P).exact_zero ? 1 : 0;
      if (cfg.emit_trace) {
        trace << "step,discrepancy,deviation\n";
        for (std::size_t t = 0; t < tr.discrepancy_per_step.size(); ++t) {
          trace << t << "," << tr.discrepancy_per_step[t] << "," << tr.deviation_per_step[t] << "\n";
        }
      }
    } else {
      Simulator sim(g, x0, cfg.policy);
      s.denom = sim.matrix().denom;
      std::vector<double> xi;
      if (cfg.track_deviation) xi.assign(x0.begin(), x0.end());
      std::optional<ExactDeviationTracker> tracker;
      std::vector<std::int64_t> w;
      if (cfg.exact_ideal) tracker.emplace(sim.matrix());
      std::int64_t disc = discrepancy(x0);
      double dev = 0.0;
      if (cfg.track_deviation) s.max_deviation = 0.0;
      if (cfg.emit_trace) {
        trace << "step,discrepancy" << (cfg.track_deviation ? ",deviation" : "") << ",ledger_max\n";
        trace << "0," << disc << (cfg.track_deviation ? ",0" : "") << ",0\n";
      }
      std::int64_t t = 0;
      while (t < cap && !(cfg.until_discrepancy && disc <= *cfg.until_discrepancy)) {
        sim.step();
        ++t;
        disc = discrepancy(sim.loads());
        if (cfg.track_deviation) {
          xi = sim.matrix().apply(xi);
          dev = deviation(sim.loads(), xi);
          s.max_deviation = std::max(s.max_deviation, dev);
        }
        if (tracker) {
          sim.last_net_errors(w);
          tracker->advance(w);
          if (cfg.assert_deviation_le &&
              !tracker->max_deviation_le(cfg.assert_deviation_le->first,
                                         cfg.assert_deviation_le->second)) {
            s.deviation_bound_ok = false;
          }
        } else if (cfg.assert_deviation_le && cfg.track_deviation) {
          if (dev > static_cast<double>(cfg.assert_deviation_le->first) /
                        static_cast<double>(cfg.assert_deviation_le->second)) {
            s.deviation_bound_ok = false;
          }
        }
        if (cfg.emit_trace) {
          trace << t << "," << disc;
          if (cfg.track_deviation) trace << "," << dev;
          trace << "," << sim.ledger().max_abs_current() << "\n";
        }
      }
      s.steps = t;
      s.final_discrepancy = static_cast<double>(disc);
      s.ledger_max_scaled = sim.ledger().max_abs_seen;
      if (cfg.until_discrepancy) {
        s.reached_target = disc <= *cfg.until_discrepancy;
      }
    }
  }

  s.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_begin)
                  .count();
  if (!cfg.out_dir.empty()) {
    auto out = detail::open_output(std::filesystem::path(cfg.out_dir) / "summary.json");
    nlohmann::json j = summary_to_json(s);
    j["config"] = config_to_json(cfg, /*include_out=*/false);
    out << j.dump(2) << "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

// Accepts {"runs": [config, ...]} or a generator:
// {"template": config, "graphs": [spec, ...], "seeds": {"master": u64, "count": k}}.
// Per-run seeds come from the master via the documented counter scheme
// (x0: counter 2i, policy: counter 2i+1), so scheduling cannot affect results.
inline std::vector<ExperimentConfig> expand_sweep(const nlohmann::json& j) {
  std::vector<ExperimentConfig> out;
  if (j.contains("runs")) {
    for (const auto& r : j["runs"]) out.push_back(config_from_json(r));
    return out;
  }
  if (!j.contains("template")) throw std::invalid_argument("sweep needs \"runs\" or \"template\"");
  const ExperimentConfig base = config_from_json(j["template"]);
  std::vector<std::string> graphs;
  if (j.contains("graphs")) {
    graphs = j["graphs"].get<std::vector<std::string>>();
  } else {
    graphs = {base.graph_spec};
  }
  std::uint64_t master = 0;
  int count = 1;
  if (j.contains("seeds")) {
    master = j["seeds"].value("master", std::uint64_t{0});
    count = j["seeds"].value("count", 1);
  }
  for (const std::string& gspec : graphs) {
    for (int i = 0; i < count; ++i) {
      ExperimentConfig c = base;
      c.graph_spec = gspec;
      c.x0.seed = derive_seed(master, 2 * static_cast<std::uint64_t>(i));
      c.policy.seed = derive_seed(master, 2 * static_cast<std::uint64_t>(i) + 1);
      c.name = (base.name.empty() ? std::string{"run"} : base.name) + "/" + gspec + "/s" +
               std::to_string(i);
      if (!base.out_dir.empty()) {
        c.out_dir = (std::filesystem::path(base.out_dir) / (gspec + "-s" + std::to_string(i)))
                        .string();
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

inline std::vector<RunSummary> sweep(const std::vector<ExperimentConfig>& configs,
                                     int parallelism = 1) {
  if (configs.empty()) throw std::invalid_argument("sweep needs at least one config");
  std::vector<RunSummary> results(configs.size());
  auto work = [&](std::size_t i) {
    try {
      results[i] = run_experiment(configs[i]);
    } catch (const std::exception& e) {
      results[i].config_hash = config_hash(configs[i]);
      results[i].name = configs[i].name;
      results[i].graph = configs[i].graph_spec;
      results[i].error = e.what();
    }
  };
  if (parallelism <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int threads = std::min<int>(parallelism, static_cast<int>(configs.size()));
    pool.reserve(threads);
    for (int k = 0; k < threads; ++k) {
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < configs.size(); i = next.fetch_add(1)) {
          work(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  std::sort(results.begin(), results.end(),
            [](const RunSummary& a, const RunSummary& b) { return a.config_hash < b.config_hash; });
  return results;
}

// ---------------------------------------------------------------------------
// Tables and plot data

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("unknown column: " + name);
  }
};

namespace detail {

inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "";
  return nlohmann::json(x).dump();  // shortest round-trip representation
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline char hex_digit(unsigned v) { return v < 10 ? static_cast<char>('0' + v) : static_cast<char>('a' + v - 10); }

inline std::string hex64(std::uint64_t v) {
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = hex_digit(v & 0xf);
    v >>= 4;
  }
  return s;
}

}  // namespace detail

inline Table summaries_to_table(const std::vector<RunSummary>& rows) {
  Table t;
  t.columns = {"config_hash",        "name",
               "graph",              "policy",
               "n",                  "steps",
               "reached_target",     "max_deviation",
               "deviation_bound_ok", "final_discrepancy",
               "ledger_max_scaled",  "denom",
               "ansatz_residual",    "wall_ms",
               "error"};
  for (const RunSummary& s : rows) {
    t.rows.push_back({detail::hex64(s.config_hash), s.name, s.graph, s.policy, std::to_string(s.n),
                      std::to_string(s.steps), s.reached_target ? "1" : "0",
                      detail::fmt_double(s.max_deviation), s.deviation_bound_ok ? "1" : "0",
                      detail::fmt_double(s.final_discrepancy), std::to_string(s.ledger_max_scaled),
                      std::to_string(s.denom), detail::fmt_double(s.ansatz_residual),
                      detail::fmt_double(s.wall_ms), s.error});
  }
  return t;
}

// Long-format (series, x, y) projection of a table, ready for any plotting tool.
inline Table emit_plotdata(const Table& in, const std::string& x_col, const std::string& y_col,
                           const std::string& group_by = "") {
  const int xi = in.col(x_col);
  const int yi = in.col(y_col);
  const int gi = group_by.empty() ? -1 : in.col(group_by);
  Table out;
  out.columns = {"series", x_col, y_col};
  for (const auto& row : in.rows) {
    out.rows.push_back({gi < 0 ? "all" : row[gi], row[xi], row[yi]});
  }
  return out;
}

inline void csv_write(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    os << (i ? "," : "") << detail::csv_escape(t.columns[i]);
  }
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "," : "") << detail::csv_escape(row[i]);
    }
    os << "\n";
  }
}

inline void write_csv_file(const std::filesystem::path& path, const Table& t) {
  auto out = detail::open_output(path);
  csv_write(out, t);
}

}  // namespace dlb
