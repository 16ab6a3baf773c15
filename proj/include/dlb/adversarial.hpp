#pragma once

// Worst-case and statistical lower-bound instances: initial vectors plus the
// policy under which the claimed behavior appears, bundled with a
// machine-checkable predicate. verify_bundle() executes the predicate.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlb/graph.hpp"
#include "dlb/process.hpp"
#include "dlb/rng.hpp"

namespace dlb {

enum class PredicateTag { fixed_point, period_2, deviation_at_least, stat_deviation };

inline std::string predicate_tag_name(PredicateTag t) {
  switch (t) {
    case PredicateTag::fixed_point:
      return "fixed-point";
    case PredicateTag::period_2:
      return "period-2";
    case PredicateTag::deviation_at_least:
      return "deviation-at-least";
    case PredicateTag::stat_deviation:
      return "stat-deviation";
  }
  throw std::logic_error("unreachable");
}

inline PredicateTag predicate_tag_from_name(const std::string& s) {
  if (s == "fixed-point") return PredicateTag::fixed_point;
  if (s == "period-2") return PredicateTag::period_2;
  if (s == "deviation-at-least") return PredicateTag::deviation_at_least;
  if (s == "stat-deviation") return PredicateTag::stat_deviation;
  throw std::invalid_argument("unknown predicate tag: " + s);
}

struct InstanceBundle {
  Graph graph;
  std::vector<std::int64_t> x0;
  RoundingPolicy policy_hint;
  PredicateTag predicate = PredicateTag::fixed_point;
  nlohmann::json predicate_params;
  std::string description;
};

inline nlohmann::json bundle_to_json(const InstanceBundle& b) {
  return {{"graph", graph_to_json(b.graph)},
          {"x0", b.x0},
          {"policy_hint", policy_to_json(b.policy_hint)},
          {"predicate", predicate_tag_name(b.predicate)},
          {"predicate_params", b.predicate_params},
          {"description", b.description}};
}

inline InstanceBundle bundle_from_json(const nlohmann::json& j) {
  InstanceBundle b;
  b.graph = graph_from_json(j.at("graph"));
  b.x0 = j.at("x0").get<std::vector<std::int64_t>>();
  if (b.x0.size() != static_cast<std::size_t>(b.graph.n)) {
    throw std::invalid_argument("bundle x0 length mismatch");
  }
  b.policy_hint = policy_from_json(j.at("policy_hint"));
  b.predicate = predicate_tag_from_name(j.at("predicate"));
  b.predicate_params = j.value("predicate_params", nlohmann::json::object());
  b.description = j.value("description", std::string{});
  return b;
}

// ---------------------------------------------------------------------------
// Generators

// x0_k = dist(k, anchor) * max_degree: every fractional flow lies strictly
// below 1 token, so flooring toward the heavier endpoint moves nothing and
// the state is an RSW fixed point at discrepancy max_degree * ecc(anchor).
inline InstanceBundle rsw_stuck_instance(const Graph& g, int anchor) {
  if (anchor < 0 || anchor >= g.n) throw std::invalid_argument("anchor out of range");
  if (!is_connected(g)) throw std::invalid_argument("graph must be connected");
  InstanceBundle b;
  b.graph = g;
  const std::vector<int> dist = bfs_distances(g, anchor);
  b.x0.resize(g.n);
  int ecc = 0;
  for (int v = 0; v < g.n; ++v) {
    b.x0[v] = static_cast<std::int64_t>(dist[v]) * g.max_degree;
    ecc = std::max(ecc, dist[v]);
  }
  b.policy_hint = RoundingPolicy{PolicyKind::rsw, TieBreak::down, "", 0};
  b.predicate = PredicateTag::fixed_point;
  b.predicate_params = {{"T", 500},
                        {"expected_discrepancy", static_cast<std::int64_t>(ecc) * g.max_degree}};
  b.description = "distance-cone vector; truncated flows never move a full token";
  return b;
}

// Half-load split along the bipartition classes of the d-cube: even-parity
// vertices carry d tokens, odd-parity ones none. Every edge then carries
// fractional flow d/(2d) = 1/2 with a tied rounding choice at step 1; the
// away-from-zero adversary rounds all of them toward the empty side, which
// swaps the classes wholesale. Afterwards each ledger sits at its bound and
// forces the swap back: the trajectory has period 2 and the step-1 deviation
// from the idealized (everywhere d/2) state is exactly d/2.
inline InstanceBundle hypercube_halfload(int d) {
  if (d < 1 || d > 24) throw std::invalid_argument("d out of range");
  InstanceBundle b;
  b.graph = build_hypercube(d);
  b.x0.resize(b.graph.n);
  for (int v = 0; v < b.graph.n; ++v) {
    b.x0[v] = std::popcount(static_cast<unsigned>(v)) % 2 == 0 ? d : 0;
  }
  b.policy_hint = RoundingPolicy{PolicyKind::quasirandom, TieBreak::adversarial, "away-from-zero", 0};
  b.predicate = PredicateTag::period_2;
  b.predicate_params = {{"T", 100}, {"deviation_step1", {{"num", d}, {"den", 2}}}};
  b.description = "bipartition half-load; adversarial ties swap the classes each step";
  return b;
}

// Same half-load shape (odd-parity class loaded). Under randomized rounding
// each empty vertex receives an independent Bernoulli(1/2) token per incident
// edge, so its step-1 load is Binomial(d, 1/2) and a deviation >= d/4 appears
// with overwhelming frequency. A statistical smoke test, not a proof check.
inline InstanceBundle randomized_halfload(int d) {
  if (d < 4 || d > 24) throw std::invalid_argument("needs 4 <= d <= 24");
  InstanceBundle b;
  b.graph = build_hypercube(d);
  b.x0.resize(b.graph.n);
  for (int v = 0; v < b.graph.n; ++v) {
    b.x0[v] = std::popcount(static_cast<unsigned>(v)) % 2 == 1 ? d : 0;
  }
  b.policy_hint = RoundingPolicy{PolicyKind::randomized, TieBreak::down, "", 0};
  b.predicate = PredicateTag::stat_deviation;
  b.predicate_params = {{"deviation_min", {{"num", d}, {"den", 4}}},
                        {"step", 1},
                        {"trials", 200},
                        {"min_freq", 0.99}};
  b.description = "bipartition half-load; step-1 loads are Binomial(d, 1/2)";
  return b;
}

namespace detail {

inline int wrapped_abs_diff(int a, int b, int side) {
  const int diff = std::abs(a - b);
  return std::min(diff, side - diff);
}

}  // namespace detail

// Pyramidal load bumps of height d*l centered on a sparse sub-lattice S
// (spacing l', clamped above 2l so bumps stay disjoint):
//   x0_i = d * max(0, l - 2 * chebyshev_dist(i, S)).
// The predicate is observational: randomized rounding is run and measured
// deviations emitted; the claimed growth is asymptotic, so no pass/fail.
inline InstanceBundle torus_polylog_instance(std::int64_t n, int d) {
  if (d < 1 || d > 4) throw std::invalid_argument("dimension out of range");
  const int side = static_cast<int>(std::llround(std::pow(static_cast<double>(n), 1.0 / d)));
  std::int64_t total = 1;
  for (int k = 0; k < d; ++k) total *= side;
  if (total != n || side < 3) throw std::invalid_argument("n must be side^d with side >= 3");

  const double log2n = std::log2(static_cast<double>(n));
  int l = 2 * static_cast<int>(std::llround((std::pow(log2n, 1.0 / (4 * d)) - 1.0) / 2.0)) + 1;
  l = std::max(l, 3);
  int lp = static_cast<int>(std::ceil(std::pow(log2n, 2.0 / (3 * d))));
  lp = std::max(lp, 2 * l + 1);

  // S = {(x_1 l', ..., x_d l') : 1 <= x_k < side/l' - 1}
  const int m = (side - 1) / lp - 1;
  if (m < 1) {
    throw std::invalid_argument("lattice S is empty at this size; increase n (need side > 2*l' + 1)");
  }

  InstanceBundle b;
  std::vector<int> dims(d, side);
  b.graph = build_torus(dims);
  b.x0.assign(b.graph.n, 0);
  std::vector<int> coords;
  std::vector<int> point(d);
  for (int v = 0; v < b.graph.n; ++v) {
    coords = torus_coords(b.graph, v);
    // distance to the nearest lattice point, coordinate-wise independent:
    // the nearest multiple of l' within {1..m} can be chosen per coordinate.
    int dist = 0;
    for (int k = 0; k < d; ++k) {
      int best = side;
      for (int x = 1; x <= m; ++x) {
        best = std::min(best, detail::wrapped_abs_diff(coords[k], x * lp, side));
      }
      dist = std::max(dist, best);
    }
    b.x0[v] = static_cast<std::int64_t>(d) * std::max(0, l - 2 * dist);
  }
  b.policy_hint = RoundingPolicy{PolicyKind::randomized, TieBreak::down, "", 0};
  b.predicate = PredicateTag::stat_deviation;
  b.predicate_params = {{"observational", true},
                        {"trials", 10},
                        {"T", 10 * lp * lp},
                        {"l", l},
                        {"l_prime", lp},
                        {"lattice_points", static_cast<std::int64_t>(std::pow(m, d))},
                        {"initial_discrepancy", static_cast<std::int64_t>(d) * l}};
  b.description = "disjoint pyramidal bumps on a sparse lattice; observational randomized run";
  return b;
}

// Factory used by the CLI and experiment configs.
inline InstanceBundle make_instance(const std::string& name, const nlohmann::json& params) {
  if (name == "rsw_stuck") {
    const Graph g = parse_graph_spec(params.at("graph").get<std::string>());
    return rsw_stuck_instance(g, params.value("anchor", 0));
  }
  if (name == "hypercube_halfload") return hypercube_halfload(params.at("d").get<int>());
  if (name == "randomized_halfload") return randomized_halfload(params.at("d").get<int>());
  if (name == "torus_polylog") {
    return torus_polylog_instance(params.at("n").get<std::int64_t>(), params.at("d").get<int>());
  }
  throw std::invalid_argument("unknown instance: " + name);
}

// ---------------------------------------------------------------------------
// Predicate execution

struct VerifyOptions {
  std::optional<std::int64_t> T;   // horizon override
  std::optional<int> trials;       // trial-count override (stat predicates)
  std::uint64_t seed = 0;          // base seed for per-trial derivation
};

struct VerifyResult {
  bool pass = false;
  std::string detail;
  nlohmann::json data;
};

namespace detail {

inline VerifyResult verify_fixed_point(const InstanceBundle& b, const VerifyOptions& opts) {
  const std::int64_t T = opts.T.value_or(b.predicate_params.value("T", std::int64_t{500}));
  Simulator sim(b.graph, b.x0, b.policy_hint);
  for (std::int64_t t = 1; t <= T; ++t) {
    sim.step();
    if (sim.loads() != b.x0) {
      return {false, "state changed at step " + std::to_string(t), {}};
    }
  }
  VerifyResult r{true, "state bit-identical for " + std::to_string(T) + " steps", {}};
  r.data["T"] = T;
  r.data["discrepancy"] = discrepancy(b.x0);
  if (b.predicate_params.contains("expected_discrepancy")) {
    const auto expected = b.predicate_params["expected_discrepancy"].get<std::int64_t>();
    if (discrepancy(b.x0) != expected) {
      r.pass = false;
      r.detail = "initial discrepancy differs from expected";
    }
  }
  return r;
}

inline VerifyResult verify_period2(const InstanceBundle& b, const VerifyOptions& opts) {
  const std::int64_t T = opts.T.value_or(b.predicate_params.value("T", std::int64_t{100}));
  Simulator sim(b.graph, b.x0, b.policy_hint);
  ExactIdealTrace ideal(sim.matrix(), b.x0);
  VerifyResult r{true, "", {}};

  sim.step();
  ideal.advance();
  const std::vector<std::int64_t> x1 = sim.loads();
  if (b.predicate_params.contains("deviation_step1")) {
    const auto& dev = b.predicate_params["deviation_step1"];
    const auto num = dev.at("num").get<std::int64_t>();
    const auto den = dev.at("den").get<std::int64_t>();
    if (!ideal.deviation_eq(x1, num, den)) {
      return {false, "step-1 deviation differs from the claimed value", {}};
    }
    r.data["deviation_step1"] = static_cast<double>(num) / static_cast<double>(den);
  }
  for (std::int64_t t = 2; t <= T; ++t) {
    sim.step();
    const auto& expect = t % 2 == 0 ? b.x0 : x1;
    if (sim.loads() != expect) {
      return {false, "period-2 orbit broken at step " + std::to_string(t), {}};
    }
    if (t % 2 == 0) {
      for (std::int64_t acc : sim.ledger().accumulated) {
        if (acc != 0) return {false, "nonzero ledger at even step " + std::to_string(t), {}};
      }
    }
  }
  r.detail = "period-2 orbit with zeroed even-step ledgers over " + std::to_string(T) + " steps";
  r.data["T"] = T;
  return r;
}

inline VerifyResult verify_deviation_at_least(const InstanceBundle& b, const VerifyOptions& opts) {
  const std::int64_t T = opts.T.value_or(b.predicate_params.value("T", std::int64_t{100}));
  const auto num = b.predicate_params.at("deviation_min").at("num").get<std::int64_t>();
  const auto den = b.predicate_params.at("deviation_min").at("den").get<std::int64_t>();
  const bigrat threshold(num, den);
  Simulator sim(b.graph, b.x0, b.policy_hint);
  ExactIdealTrace ideal(sim.matrix(), b.x0);
  bigrat best = 0;
  for (std::int64_t t = 1; t <= T; ++t) {
    sim.step();
    ideal.advance();
    const bigrat dev = ideal.deviation_exact(sim.loads());
    best = std::max(best, dev);
    if (dev >= threshold) {
      VerifyResult r{true, "deviation threshold reached at step " + std::to_string(t), {}};
      r.data["step"] = t;
      return r;
    }
  }
  return {false, "deviation stayed below threshold; best " + best.str(), {}};
}

inline VerifyResult verify_stat_deviation(const InstanceBundle& b, const VerifyOptions& opts) {
  const bool observational = b.predicate_params.value("observational", false);
  const int trials = opts.trials.value_or(b.predicate_params.value("trials", 200));
  if (trials < 1) throw std::invalid_argument("needs >= 1 trial");
  VerifyResult r;

  if (observational) {
    const std::int64_t T = opts.T.value_or(b.predicate_params.value("T", std::int64_t{100}));
    const DiffusionMatrix P = diffusion_matrix(b.graph);
    std::vector<double> devs;
    for (int k = 0; k < trials; ++k) {
      RoundingPolicy policy = b.policy_hint;
      policy.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(k));
      Simulator sim(b.graph, b.x0, policy);
      std::vector<double> xi(b.x0.begin(), b.x0.end());
      double worst = 0.0;
      for (std::int64_t t = 1; t <= T; ++t) {
        sim.step();
        xi = P.apply(xi);
        worst = std::max(worst, deviation(sim.loads(), xi));
      }
      devs.push_back(worst);
    }
    std::vector<double> sorted = devs;
    std::sort(sorted.begin(), sorted.end());
    r.pass = true;
    r.detail = "observational run; measured deviations emitted";
    r.data["T"] = T;
    r.data["max_deviation_per_trial"] = devs;
    r.data["median_deviation"] = sorted[sorted.size() / 2];
    r.data["max_deviation"] = sorted.back();
    return r;
  }

  const std::int64_t step = b.predicate_params.value("step", std::int64_t{1});
  const auto num = b.predicate_params.at("deviation_min").at("num").get<std::int64_t>();
  const auto den = b.predicate_params.at("deviation_min").at("den").get<std::int64_t>();
  const auto min_freq = b.predicate_params.at("min_freq").get<double>();
  const DiffusionMatrix P = diffusion_matrix(b.graph);
  int hits = 0;
  for (int k = 0; k < trials; ++k) {
    RoundingPolicy policy = b.policy_hint;
    policy.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(k));
    Simulator sim(b.graph, b.x0, policy);
    ExactIdealTrace ideal(P, b.x0);
    bool hit = false;
    for (std::int64_t t = 1; t <= step && !hit; ++t) {
      sim.step();
      ideal.advance();
      hit = ideal.deviation_exact(sim.loads()) >= bigrat(num, den);
    }
    hits += hit ? 1 : 0;
  }
  const double freq = static_cast<double>(hits) / trials;
  r.pass = freq >= min_freq;
  r.detail = "deviation >= " + std::to_string(num) + "/" + std::to_string(den) + " in " +
             std::to_string(hits) + "/" + std::to_string(trials) + " trials";
  r.data["trials"] = trials;
  r.data["hits"] = hits;
  r.data["frequency"] = freq;
  r.data["required_frequency"] = min_freq;
  return r;
}

}  // namespace detail

inline VerifyResult verify_bundle(const InstanceBundle& b, const VerifyOptions& opts = {}) {
  switch (b.predicate) {
    case PredicateTag::fixed_point:
      return detail::verify_fixed_point(b, opts);
    case PredicateTag::period_2:
      return detail::verify_period2(b, opts);
    case PredicateTag::deviation_at_least:
      return detail::verify_deviation_at_least(b, opts);
    case PredicateTag::stat_deviation:
      return detail::verify_stat_deviation(b, opts);
  }
  throw std::logic_error("unreachable");
}

}  // namespace dlb
