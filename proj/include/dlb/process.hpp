#pragma once

// The idealized and discrete balancing processes.
//
// All discrete-side quantities are exact: with D = 2*max_degree, the
// fractional flow on an oriented edge [lo:hi] is f = (x_lo - x_hi)/D, so its
// scaled form F = x_lo - x_hi is an integer, as are the scaled per-step error
// E = F - D*Phi and the scaled per-edge ledger sum(E). The quasirandom policy
// maintains |ledger| <= D/2 exactly (Lambda = 1/2); this is checked after
// every step and a violation is a logic error, not a tolerance issue.
//
// Synchronous semantics: all flows of step t are computed from the x^(t-1)
// snapshot, then applied together.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dlb/diffusion.hpp"
#include "dlb/exact.hpp"
#include "dlb/graph.hpp"
#include "dlb/rng.hpp"

namespace dlb {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

// ---------------------------------------------------------------------------
// States and per-step records

struct LoadState {
  std::vector<std::int64_t> values;  // integer tokens
  std::int64_t step = 0;
};

struct IdealState {
  std::vector<double> values;  // divisible load
  std::int64_t step = 0;
};

inline std::int64_t discrepancy(const std::vector<std::int64_t>& values) {
  if (values.empty()) throw std::invalid_argument("discrepancy of empty vector");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

inline double discrepancy(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("discrepancy of empty vector");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

inline std::int64_t discrepancy(const LoadState& x) { return discrepancy(x.values); }
inline double discrepancy(const IdealState& x) { return discrepancy(x.values); }

inline double deviation(const std::vector<std::int64_t>& x, const std::vector<double>& xi) {
  if (x.size() != xi.size()) throw std::invalid_argument("deviation: length mismatch");
  double worst = 0.0;
  for (std::size_t v = 0; v < x.size(); ++v) {
    worst = std::max(worst, std::abs(static_cast<double>(x[v]) - xi[v]));
  }
  return worst;
}

inline double deviation(const LoadState& x, const IdealState& xi) {
  if (x.step != xi.step) throw std::invalid_argument("deviation: step mismatch");
  return deviation(x.values, xi.values);
}

inline IdealState ideal_step(const IdealState& x, const DiffusionMatrix& P) {
  if (static_cast<int>(x.values.size()) != P.graph->n) {
    throw std::invalid_argument("ideal_step: dimension mismatch");
  }
  return IdealState{P.apply(x.values), x.step + 1};
}

// ---------------------------------------------------------------------------
// Rounding policies

enum class PolicyKind { quasirandom, rsw, randomized };
enum class TieBreak { down, up, adversarial };

// Context handed to an adversarial tie-break: the oriented edge, the step,
// the pre-update scaled ledger, and the scaled fractional flow.
struct TieContext {
  int lo = 0;
  int hi = 0;
  std::int64_t step = 0;
  std::int64_t ledger_scaled = 0;
  std::int64_t flow_scaled = 0;
  std::int64_t denom = 0;
};
using TieBreaker = std::function<bool(const TieContext&)>;  // true => round up

// Named deterministic adversaries, so policies stay serializable.
inline TieBreaker make_tie_breaker(const std::string& name) {
  if (name == "away-from-zero") {
    return [](const TieContext& ctx) { return ctx.flow_scaled > 0; };
  }
  if (name == "toward-zero") {
    return [](const TieContext& ctx) { return ctx.flow_scaled < 0; };
  }
  throw std::invalid_argument("unknown tie-break adversary: " + name);
}

struct RoundingPolicy {
  PolicyKind kind = PolicyKind::quasirandom;
  TieBreak tie_break = TieBreak::down;  // quasirandom only
  std::string adversary;                // name of the callback when adversarial
  std::uint64_t seed = 0;               // randomized only
};

inline nlohmann::json policy_to_json(const RoundingPolicy& p) {
  switch (p.kind) {
    case PolicyKind::rsw:
      return {{"variant", "rsw"}};
    case PolicyKind::randomized:
      return {{"variant", "randomized"}, {"seed", p.seed}};
    case PolicyKind::quasirandom:
      break;
  }
  nlohmann::json j{{"variant", "quasirandom"}};
  switch (p.tie_break) {
    case TieBreak::down:
      j["tie_break"] = "down";
      break;
    case TieBreak::up:
      j["tie_break"] = "up";
      break;
    case TieBreak::adversarial:
      j["tie_break"] = "adversarial";
      j["adversary"] = p.adversary;
      break;
  }
  return j;
}

inline RoundingPolicy policy_from_json(const nlohmann::json& j) {
  const std::string variant = j.at("variant");
  RoundingPolicy p;
  if (variant == "rsw") {
    p.kind = PolicyKind::rsw;
  } else if (variant == "randomized") {
    p.kind = PolicyKind::randomized;
    p.seed = j.value("seed", std::uint64_t{0});
  } else if (variant == "quasirandom") {
    p.kind = PolicyKind::quasirandom;
    const std::string tb = j.value("tie_break", "down");
    if (tb == "down") {
      p.tie_break = TieBreak::down;
    } else if (tb == "up") {
      p.tie_break = TieBreak::up;
    } else if (tb == "adversarial") {
      p.tie_break = TieBreak::adversarial;
      p.adversary = j.at("adversary");
    } else {
      throw std::invalid_argument("unknown tie_break: " + tb);
    }
  } else {
    throw std::invalid_argument("unknown policy variant: " + variant);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Oriented edges and the error ledger

struct EdgeSpace {
  std::vector<OrientedEdge> edges;  // lexicographically sorted, lo < hi

  static EdgeSpace build(const Graph& g) {
    EdgeSpace s;
    for (int lo = 0; lo < g.n; ++lo) {
      for (int hi : g.adjacency[lo]) {
        if (lo < hi) s.edges.push_back({lo, hi});
      }
    }
    return s;
  }
};

struct EdgeLedger {
  std::vector<std::int64_t> accumulated;  // per oriented edge, scaled by denom
  std::int64_t denom = 0;
  std::int64_t max_abs_seen = 0;
  // Declared bound Lambda as a rational; only the quasirandom policy proves one.
  std::optional<std::pair<std::int64_t, std::int64_t>> lambda_bound;

  std::int64_t max_abs_current() const {
    std::int64_t worst = 0;
    for (std::int64_t a : accumulated) worst = std::max(worst, std::abs(a));
    return worst;
  }
};

struct StepRecord {
  std::int64_t step = 0;
  std::vector<std::int64_t> flows;          // Phi per oriented edge, lo->hi positive
  std::vector<std::int64_t> errors_scaled;  // e * denom per oriented edge
  LoadState post_loads;
};

// ---------------------------------------------------------------------------
// Discrete process stepper

class Simulator {
 public:
  Simulator(const Graph& g, std::vector<std::int64_t> x0, RoundingPolicy policy)
      : graph_(&g),
        P_(diffusion_matrix(g)),
        edges_(EdgeSpace::build(g)),
        x_(std::move(x0)),
        policy_(std::move(policy)),
        rng_(splitmix64_mix(policy_.seed)) {
    if (static_cast<int>(x_.size()) != g.n) throw std::invalid_argument("x0 length mismatch");
    ledger_.accumulated.assign(edges_.edges.size(), 0);
    ledger_.denom = P_.denom;
    if (policy_.kind == PolicyKind::quasirandom) ledger_.lambda_bound = {{1, 2}};
    if (policy_.kind == PolicyKind::quasirandom && policy_.tie_break == TieBreak::adversarial) {
      tie_breaker_ = make_tie_breaker(policy_.adversary);
    }
    flows_.assign(edges_.edges.size(), 0);
    errors_scaled_.assign(edges_.edges.size(), 0);
  }

  void step() {
    const std::int64_t D = P_.denom;
    ++t_;
    // Pass 1: flows from the x^(t-1) snapshot (x_ is untouched here).
    for (std::size_t e = 0; e < edges_.edges.size(); ++e) {
      const auto [lo, hi] = edges_.edges[e];
      const std::int64_t F = x_[lo] - x_[hi];  // f * D, exact
      std::int64_t phi = 0;
      switch (policy_.kind) {
        case PolicyKind::rsw:
          // Floor toward the heavier endpoint: trunc(F/D).
          phi = F / D;
          break;
        case PolicyKind::quasirandom: {
          const std::int64_t q = floor_div(F, D);
          const std::int64_t r = F - q * D;  // scaled frac, in [0, D)
          if (r == 0) {
            phi = q;
            break;
          }
          const std::int64_t L = ledger_.accumulated[e];
          const std::int64_t down_abs = std::abs(L + r);
          const std::int64_t up_abs = std::abs(L + r - D);
          bool up;
          if (down_abs != up_abs) {
            up = up_abs < down_abs;
          } else {
            switch (policy_.tie_break) {
              case TieBreak::down:
                up = false;
                break;
              case TieBreak::up:
                up = true;
                break;
              case TieBreak::adversarial:
                up = tie_breaker_(TieContext{lo, hi, t_, L, F, D});
                break;
              default:
                up = false;
            }
          }
          phi = q + (up ? 1 : 0);
          break;
        }
        case PolicyKind::randomized: {
          const std::int64_t q = floor_div(F, D);
          const std::int64_t r = F - q * D;
          // One draw per fractional flow, in fixed edge order; integral flows
          // consume no randomness (keeps streams comparable across policies).
          const bool up = r != 0 && rng_.below(static_cast<std::uint64_t>(D)) < static_cast<std::uint64_t>(r);
          phi = q + (up ? 1 : 0);
          break;
        }
      }
      const std::int64_t E = F - D * phi;
      flows_[e] = phi;
      errors_scaled_[e] = E;
      ledger_.accumulated[e] += E;
      ledger_.max_abs_seen = std::max(ledger_.max_abs_seen, std::abs(ledger_.accumulated[e]));
      if (policy_.kind == PolicyKind::quasirandom && 2 * std::abs(ledger_.accumulated[e]) > D) {
        throw std::logic_error("quasirandom ledger bound |sum e| <= 1/2 violated");
      }
    }
    // Pass 2: apply the flows.
    for (std::size_t e = 0; e < edges_.edges.size(); ++e) {
      const auto [lo, hi] = edges_.edges[e];
      x_[lo] -= flows_[e];
      x_[hi] += flows_[e];
    }
    constexpr std::int64_t kGuard = std::int64_t{1} << 62;
    for (std::int64_t v : x_) {
      if (v > kGuard || v < -kGuard) throw std::overflow_error("load exceeds representable range");
    }
  }

  const Graph& graph() const { return *graph_; }
  const DiffusionMatrix& matrix() const { return P_; }
  const EdgeSpace& edge_space() const { return edges_; }
  const std::vector<std::int64_t>& loads() const { return x_; }
  const EdgeLedger& ledger() const { return ledger_; }
  std::int64_t time() const { return t_; }
  const std::vector<std::int64_t>& last_flows() const { return flows_; }
  const std::vector<std::int64_t>& last_errors_scaled() const { return errors_scaled_; }

  // Net scaled rounding error per vertex for the last step: w_i = sum_j E_ij.
  void last_net_errors(std::vector<std::int64_t>& w) const {
    w.assign(x_.size(), 0);
    for (std::size_t e = 0; e < edges_.edges.size(); ++e) {
      const auto [lo, hi] = edges_.edges[e];
      w[lo] += errors_scaled_[e];
      w[hi] -= errors_scaled_[e];
    }
  }

 private:
  const Graph* graph_;
  DiffusionMatrix P_;
  EdgeSpace edges_;
  std::vector<std::int64_t> x_;
  RoundingPolicy policy_;
  TieBreaker tie_breaker_;
  Xoshiro256ss rng_;
  EdgeLedger ledger_;
  std::vector<std::int64_t> flows_;
  std::vector<std::int64_t> errors_scaled_;
  std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Exact idealized trajectory
//
// y_t = x0 * M^t with M = denom * P (an integer matrix), so the idealized
// loads are y_t / denom^t exactly. Values are kept scaled; the scale is
// denom^t. Suitable for small horizons or small graphs.

class ExactIdealTrace {
 public:
  ExactIdealTrace(const DiffusionMatrix& P, const std::vector<std::int64_t>& x0)
      : P_(&P), scale_(1) {
    y_.reserve(x0.size());
    for (std::int64_t v : x0) y_.emplace_back(v);
    buf_.resize(x0.size());
  }

  void advance() {
    P_->apply_scaled(y_, buf_);
    y_.swap(buf_);
    scale_ *= P_->denom;
    ++t_;
  }

  std::int64_t time() const { return t_; }
  const std::vector<bigint>& scaled_values() const { return y_; }
  const bigint& scale() const { return scale_; }
  double value(int v) const { return ratio_as_double(y_[v], scale_); }

  // max_v |x_v - y_v/scale| as an exact rational.
  bigrat deviation_exact(const std::vector<std::int64_t>& x) const {
    bigint worst = 0;
    bigint diff;
    for (std::size_t v = 0; v < x.size(); ++v) {
      diff = scale_;
      diff *= x[v];
      diff -= y_[v];
      if (diff < 0) diff = -diff;
      if (diff > worst) worst = diff;
    }
    return bigrat(worst, scale_);
  }

  bool deviation_le(const std::vector<std::int64_t>& x, std::int64_t num, std::int64_t den) const {
    return deviation_exact(x) <= bigrat(num, den);
  }
  bool deviation_eq(const std::vector<std::int64_t>& x, std::int64_t num, std::int64_t den) const {
    return deviation_exact(x) == bigrat(num, den);
  }

 private:
  const DiffusionMatrix* P_;
  std::vector<bigint> y_;
  std::vector<bigint> buf_;
  bigint scale_;
  std::int64_t t_ = 0;
};

// Streaming exact deviation between a discrete run and its idealized twin,
// without materializing the idealized trajectory: tracks the scaled
// difference z_t = x^(t) * denom^t - y_t, which obeys
//   z_t = z_{t-1} * M + denom^(t-1) * w_t,
// where w_t[i] = sum_j E_ij^(t) is the step's net scaled rounding error
// (int64). Steady state allocates nothing: all bigints reuse their storage.

class ExactDeviationTracker {
 public:
  explicit ExactDeviationTracker(const DiffusionMatrix& P)
      : P_(&P), z_(P.graph->n), znext_(P.graph->n), scale_(1) {}

  // Call after each Simulator::step() with that step's net errors.
  // On entry scale_ == denom^(t-1), the exact coefficient for w_t.
  void advance(const std::vector<std::int64_t>& w) {
    const Graph& g = *P_->graph;
    P_->apply_scaled(z_, znext_);
    for (int i = 0; i < g.n; ++i) {
      if (w[i] != 0) {
        tmp_ = scale_;
        tmp_ *= w[i];
        znext_[i] += tmp_;
      }
    }
    z_.swap(znext_);
    scale_ *= P_->denom;
    ++t_;
  }

  std::int64_t time() const { return t_; }
  const bigint& scale() const { return scale_; }

  // max_v |z_v| / scale <= num/den, exactly.
  bool max_deviation_le(std::int64_t num, std::int64_t den) {
    bound_ = scale_;
    bound_ *= num;
    for (const bigint& zv : z_) {
      tmp_ = zv;
      tmp_ *= den;
      if (tmp_ > bound_) return false;
      tmp_ += bound_;
      if (tmp_ < 0) return false;  // zv*den < -num*scale
    }
    return true;
  }

  double max_deviation() const {
    const bigint* worst = nullptr;
    bigint best_abs = 0;
    bigint a;
    for (const bigint& zv : z_) {
      a = zv < 0 ? bigint(-zv) : zv;
      if (a > best_abs) {
        best_abs = a;
        worst = &zv;
      }
    }
    return worst == nullptr ? 0.0 : std::abs(ratio_as_double(*worst, scale_));
  }

 private:
  const DiffusionMatrix* P_;
  std::vector<bigint> z_;
  std::vector<bigint> znext_;
  bigint scale_;
  bigint tmp_;
  bigint bound_;
  std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Recorded runs

struct SimulationTrace {
  const Graph* graph = nullptr;
  std::int64_t denom = 0;
  EdgeSpace edges;
  std::vector<std::int64_t> x0;
  RoundingPolicy policy;
  std::vector<StepRecord> records;          // steps 1..T
  std::vector<std::vector<double>> ideal;   // steps 0..T when with_ideal
  std::vector<std::int64_t> discrepancy_per_step;  // steps 0..T
  std::vector<double> deviation_per_step;          // steps 0..T when with_ideal
};

inline SimulationTrace run(const Graph& g, const std::vector<std::int64_t>& x0,
                           const RoundingPolicy& policy, std::int64_t T, bool with_ideal) {
  if (T < 0) throw std::invalid_argument("negative horizon");
  Simulator sim(g, x0, policy);
  SimulationTrace trace;
  trace.graph = &g;
  trace.denom = sim.matrix().denom;
  trace.edges = sim.edge_space();
  trace.x0 = x0;
  trace.policy = policy;
  trace.discrepancy_per_step.push_back(discrepancy(x0));
  if (with_ideal) {
    trace.ideal.emplace_back(x0.begin(), x0.end());
    trace.deviation_per_step.push_back(0.0);
  }
  for (std::int64_t t = 1; t <= T; ++t) {
    sim.step();
    StepRecord rec;
    rec.step = t;
    rec.flows = sim.last_flows();
    rec.errors_scaled = sim.last_errors_scaled();
    rec.post_loads = LoadState{sim.loads(), t};
    trace.discrepancy_per_step.push_back(discrepancy(sim.loads()));
    if (with_ideal) {
      trace.ideal.push_back(sim.matrix().apply(trace.ideal.back()));
      trace.deviation_per_step.push_back(deviation(sim.loads(), trace.ideal.back()));
    }
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Identity check: the discrete-minus-idealized difference decomposes into
// error terms weighted by iterated transition-matrix rows,
//   x_l^(t) - xi_l^(t) = sum_{s=0}^{t-1} sum_{[i:j]} e_ij^(t-s) (P^s_{l,i} - P^s_{l,j}).

inline double verify_standard_ansatz(const SimulationTrace& trace, const DiffusionMatrix& P) {
  if (trace.ideal.empty()) throw std::invalid_argument("trace lacks an idealized trajectory");
  const int n = P.graph->n;
  const std::int64_t T = static_cast<std::int64_t>(trace.records.size());
  const double D = static_cast<double>(P.denom);
  double max_resid = 0.0;
  std::vector<std::vector<double>> rows;  // rows[s] = e_l * P^s
  for (int l = 0; l < n; ++l) {
    rows.assign(1, std::vector<double>(n, 0.0));
    rows[0][l] = 1.0;
    for (std::int64_t s = 1; s < T; ++s) rows.push_back(P.apply(rows.back()));
    for (std::int64_t t = 1; t <= T; ++t) {
      double sum = 0.0;
      for (std::int64_t s = 0; s < t; ++s) {
        const auto& errs = trace.records[t - s - 1].errors_scaled;  // step t-s
        const auto& row = rows[s];
        double inner = 0.0;
        for (std::size_t e = 0; e < trace.edges.edges.size(); ++e) {
          const auto [i, j] = trace.edges.edges[e];
          inner += static_cast<double>(errs[e]) * (row[i] - row[j]);
        }
        sum += inner / D;
      }
      const double target =
          static_cast<double>(trace.records[t - 1].post_loads.values[l]) - trace.ideal[t][l];
      max_resid = std::max(max_resid, std::abs(target - sum));
    }
  }
  return max_resid;
}

struct AnsatzCheck {
  bool exact_zero = false;
  double max_residual = 0.0;
};

// Same identity in exact integer arithmetic (scaled by denom^t); the residual
// of a faithful trace is exactly zero.
inline AnsatzCheck verify_standard_ansatz_exact(const SimulationTrace& trace,
                                                const DiffusionMatrix& P) {
  const int n = P.graph->n;
  const std::int64_t T = static_cast<std::int64_t>(trace.records.size());

  // Exact idealized trajectory, one vector per step.
  std::vector<std::vector<bigint>> y(1);
  for (std::int64_t v : trace.x0) y[0].emplace_back(v);
  std::vector<bigint> buf(n);
  for (std::int64_t t = 1; t <= T; ++t) {
    P.apply_scaled(y.back(), buf);
    y.push_back(buf);
  }
  std::vector<bigint> dpow(T + 1);  // denom^k
  dpow[0] = 1;
  for (std::int64_t k = 1; k <= T; ++k) dpow[k] = dpow[k - 1] * P.denom;

  AnsatzCheck out{true, 0.0};
  std::vector<std::vector<bigint>> rows;
  for (int l = 0; l < n; ++l) {
    rows.assign(1, std::vector<bigint>(n, bigint(0)));
    rows[0][l] = 1;
    for (std::int64_t s = 1; s < T; ++s) {
      rows.emplace_back(n);
      P.apply_scaled(rows[s - 1], rows[s]);
    }
    for (std::int64_t t = 1; t <= T; ++t) {
      bigint sum = 0;  // scaled by denom^t
      for (std::int64_t s = 0; s < t; ++s) {
        const auto& errs = trace.records[t - s - 1].errors_scaled;
        const auto& row = rows[s];
        bigint inner = 0;
        for (std::size_t e = 0; e < trace.edges.edges.size(); ++e) {
          const auto [i, j] = trace.edges.edges[e];
          if (errs[e] == 0) continue;
          inner += errs[e] * (row[i] - row[j]);
        }
        // error scale denom, row scale denom^s -> bring to denom^t
        sum += inner * dpow[t - 1 - s];
      }
      bigint target = dpow[t];
      target *= trace.records[t - 1].post_loads.values[l];
      target -= y[t][l];
      target -= sum;  // residual, scaled by denom^t
      if (!target.is_zero()) {
        out.exact_zero = false;
        out.max_residual = std::max(out.max_residual, std::abs(ratio_as_double(target, dpow[t])));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Negative-load handling: run on x0 + gamma*1 and subtract gamma afterwards.

struct VirtualTokenWrap {
  std::vector<std::int64_t> augmented;
  std::int64_t gamma = 0;

  std::vector<std::int64_t> finalize(const std::vector<std::int64_t>& balanced) const {
    std::vector<std::int64_t> out = balanced;
    for (auto& v : out) v -= gamma;
    return out;
  }
};

inline VirtualTokenWrap virtual_token_wrap(const std::vector<std::int64_t>& x0, std::int64_t gamma) {
  if (gamma < 0) throw std::invalid_argument("gamma must be nonnegative");
  VirtualTokenWrap w;
  w.gamma = gamma;
  w.augmented = x0;
  for (auto& v : w.augmented) v += gamma;
  return w;
}

}  // namespace dlb
