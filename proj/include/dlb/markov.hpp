#pragma once

// Birth-death ("path") chains and the transition/first-passage analysis
// built on them: the absorbing-chain first-passage oracle and its
// convolution cross-check, the eigenvalue (geometric) decomposition of the
// fill time, the Hamming-weight projection of the lazy hypercube walk with
// its two closed-form counterparts, and shape certifiers (log-concavity,
// unimodality, extremum counting) with fixed tolerances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dlb/diffusion.hpp"
#include "dlb/exact.hpp"
#include "dlb/rng.hpp"

namespace dlb {

enum class SeqKind { first_passage, transition, generic };

struct DistSeq {
  std::vector<double> values;  // index t = 0..T
  SeqKind kind = SeqKind::generic;
};

// Chain on states 0..d with per-state loop probability alpha[i], up
// probability beta[i] and implied down probability 1 - alpha[i] - beta[i].
// Structural validity only: the loop-probability >= 1/2 hypothesis belongs
// to specific results (fill decomposition, diagonal monotonicity) and is
// enforced there, so the certifiers can still evaluate counterexample chains.
struct PathChain {
  int d = 0;
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[d] == 0

  double down(int i) const { return 1.0 - alpha[i] - beta[i]; }

  void validate() const {
    constexpr double tol = 1e-12;
    if (d < 1) throw std::invalid_argument("path chain needs d >= 1");
    if (alpha.size() != static_cast<std::size_t>(d) + 1 ||
        beta.size() != static_cast<std::size_t>(d) + 1) {
      throw std::invalid_argument("path chain vectors must have d+1 entries");
    }
    for (int i = 0; i <= d; ++i) {
      if (alpha[i] < -tol || alpha[i] > 1.0 + tol || beta[i] < -tol || beta[i] > 1.0 + tol) {
        throw std::invalid_argument("path chain probabilities out of [0,1]");
      }
      if (i < d && !(beta[i] > 0.0)) {
        throw std::invalid_argument("up probabilities must be positive below the top state");
      }
      if (down(i) < -tol) throw std::invalid_argument("negative down probability");
    }
    if (std::abs(beta[d]) > tol) throw std::invalid_argument("top state cannot move up");
    if (std::abs(down(0)) > tol) throw std::invalid_argument("bottom state cannot move down");
  }
};

inline nlohmann::json pathchain_to_json(const PathChain& c) {
  return {{"d", c.d}, {"alpha", c.alpha}, {"beta", c.beta}};
}

inline PathChain pathchain_from_json(const nlohmann::json& j) {
  PathChain c;
  c.d = j.at("d");
  c.alpha = j.at("alpha").get<std::vector<double>>();
  c.beta = j.at("beta").get<std::vector<double>>();
  c.validate();
  return c;
}

// Random structurally-valid chain; alpha_min = 0.5 yields chains satisfying
// the loop hypothesis, alpha_min = 0 explores the full space.
inline PathChain random_path_chain(int d, Xoshiro256ss& rng, double alpha_min = 0.5) {
  PathChain c;
  c.d = d;
  c.alpha.resize(d + 1);
  c.beta.resize(d + 1);
  c.alpha[0] = alpha_min + uniform01(rng) * (0.95 - alpha_min);
  c.beta[0] = 1.0 - c.alpha[0];
  for (int i = 1; i < d; ++i) {
    c.alpha[i] = alpha_min + uniform01(rng) * (0.9 - alpha_min);
    const double room = 1.0 - c.alpha[i];
    c.beta[i] = room * (0.2 + 0.6 * uniform01(rng));
  }
  c.alpha[d] = alpha_min + uniform01(rng) * (0.9 - alpha_min);
  c.beta[d] = 0.0;
  c.validate();
  return c;
}

namespace detail {

// One synchronous step of the row distribution p -> p * P.
inline void path_step(const PathChain& c, const std::vector<double>& p, std::vector<double>& q) {
  const int d = c.d;
  q.assign(d + 1, 0.0);
  for (int i = 0; i <= d; ++i) {
    if (p[i] == 0.0) continue;
    q[i] += p[i] * c.alpha[i];
    if (i < d) q[i + 1] += p[i] * c.beta[i];
    if (i > 0) q[i - 1] += p[i] * c.down(i);
  }
}

constexpr double kOpsBudget = 2e9;

}  // namespace detail

// Binomial coefficient; exact in doubles for the n used here (products stay
// far below 2^53).
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i);
    r /= static_cast<double>(i);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Transition probabilities P^t_{i,j} as a sequence in t (iterated
// vector-matrix products; never materializes matrix powers).

inline DistSeq transition_prob(const PathChain& c, int from, int to, int T) {
  c.validate();
  if (from < 0 || from > c.d || to < 0 || to > c.d) throw std::invalid_argument("state out of range");
  if (T < 0) throw std::invalid_argument("negative horizon");
  if (static_cast<double>(T) * 3.0 * (c.d + 1) > detail::kOpsBudget) {
    throw std::runtime_error("transition budget exceeded");
  }
  DistSeq out{std::vector<double>(T + 1, 0.0), SeqKind::transition};
  std::vector<double> p(c.d + 1, 0.0), q;
  p[from] = 1.0;
  out.values[0] = from == to ? 1.0 : 0.0;
  for (int t = 1; t <= T; ++t) {
    detail::path_step(c, p, q);
    p.swap(q);
    out.values[t] = p[to];
  }
  return out;
}

inline DistSeq transition_prob(const DiffusionMatrix& P, int from, int to, int T) {
  const int n = P.graph->n;
  if (from < 0 || from >= n || to < 0 || to >= n) throw std::invalid_argument("vertex out of range");
  if (T < 0) throw std::invalid_argument("negative horizon");
  double nnz = n;
  for (int v = 0; v < n; ++v) nnz += P.graph->degree(v);
  if (static_cast<double>(T) * nnz > detail::kOpsBudget) {
    throw std::runtime_error("transition budget exceeded");
  }
  DistSeq out{std::vector<double>(T + 1, 0.0), SeqKind::transition};
  std::vector<double> p(n, 0.0);
  p[from] = 1.0;
  out.values[0] = from == to ? 1.0 : 0.0;
  for (int t = 1; t <= T; ++t) {
    p = P.apply(p);  // P symmetric: row evolution equals apply
    out.values[t] = p[to];
  }
  return out;
}

// ---------------------------------------------------------------------------
// First passage 0 -> d. Authoritative method: make the top state absorbing
// and read off the newly absorbed mass per step.

inline DistSeq first_passage_path(const PathChain& c, int T) {
  c.validate();
  if (T < 0) throw std::invalid_argument("negative horizon");
  DistSeq out{std::vector<double>(T + 1, 0.0), SeqKind::first_passage};
  std::vector<double> p(c.d + 1, 0.0), q(c.d + 1, 0.0);
  p[0] = 1.0;
  for (int t = 1; t <= T; ++t) {
    out.values[t] = p[c.d - 1] * c.beta[c.d - 1];  // mass absorbed this step
    q.assign(c.d + 1, 0.0);
    for (int i = 0; i < c.d; ++i) {  // state d is absorbing; its mass is not tracked
      if (p[i] == 0.0) continue;
      q[i] += p[i] * c.alpha[i];
      if (i + 1 < c.d) q[i + 1] += p[i] * c.beta[i];
      if (i > 0) q[i - 1] += p[i] * c.down(i);
    }
    p.swap(q);
  }
  return out;
}

// Cross-check: per-edge first-passage sequences composed by convolution.
// Each f_{i,i+1} satisfies the first-step decomposition
//   f_i(t) = beta_i [t=1] + alpha_i f_i(t-1) + down_i (f_{i-1} * f_i)(t-1),
// and the 0 -> d time is the convolution of all d per-edge times.
inline DistSeq first_passage_convolution(const PathChain& c, int T) {
  c.validate();
  if (T < 0) throw std::invalid_argument("negative horizon");
  std::vector<std::vector<double>> edge(c.d);
  for (int i = 0; i < c.d; ++i) {
    std::vector<double>& f = edge[i];
    f.assign(T + 1, 0.0);
    const double a = c.alpha[i];
    const double b = c.beta[i];
    const double dn = c.down(i);
    for (int t = 1; t <= T; ++t) {
      double v = t == 1 ? b : 0.0;
      v += a * f[t - 1];
      if (i > 0 && dn != 0.0) {
        double conv = 0.0;
        const std::vector<double>& prev = edge[i - 1];
        for (int s = 1; s <= t - 2; ++s) conv += prev[s] * f[t - 1 - s];
        v += dn * conv;
      }
      f[t] = v;
    }
  }
  std::vector<double> cur(T + 1, 0.0);
  cur[0] = 1.0;
  for (int i = 0; i < c.d; ++i) {
    std::vector<double> nxt(T + 1, 0.0);
    for (int t = 0; t <= T; ++t) {
      if (cur[t] == 0.0) continue;
      for (int s = 1; s + t <= T; ++s) nxt[t + s] += cur[t] * edge[i][s];
    }
    cur = std::move(nxt);
  }
  cur[0] = 0.0;  // d >= 1: passage cannot happen at t = 0
  return {std::move(cur), SeqKind::first_passage};
}

// ---------------------------------------------------------------------------
// Geometric building blocks: Geo(p)(t) = (1-p)^(t-1) p for t >= 1, else 0.

inline double geometric(double p, std::int64_t t) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("geometric needs 0 < p <= 1");
  if (t < 1) return 0.0;
  return std::pow(1.0 - p, static_cast<double>(t - 1)) * p;
}

inline DistSeq geometric_convolution(const std::vector<double>& params, int T) {
  if (T < 0) throw std::invalid_argument("negative horizon");
  std::vector<double> cur(T + 1, 0.0);
  cur[0] = 1.0;  // empty convolution: point mass at 0
  std::vector<double> geo(T + 1, 0.0);
  for (double p : params) {
    for (int t = 1; t <= T; ++t) geo[t] = geometric(p, t);
    std::vector<double> nxt(T + 1, 0.0);
    for (int t = 0; t <= T; ++t) {
      if (cur[t] == 0.0) continue;
      for (int s = 1; s + t <= T; ++s) nxt[t + s] += cur[t] * geo[s];
    }
    cur = std::move(nxt);
  }
  return {std::move(cur), SeqKind::first_passage};
}

// Geometric parameters {1 - b} from the eigenvalues b of the chain
// restricted to states {0..d-1}; the restriction is similar to a symmetric
// tridiagonal matrix with off-diagonals sqrt(beta_i * down(i+1)). A zero
// coupling makes both matrices block-triangular at the same index, so the
// symmetrized eigenproblem needs no explicit splitting.
inline std::vector<double> fill_decomposition(const PathChain& c) {
  c.validate();
  for (int i = 0; i <= c.d; ++i) {
    if (c.alpha[i] < 0.5 - 1e-12) {
      throw std::domain_error("fill decomposition requires loop probabilities >= 1/2");
    }
  }
  const int m = c.d;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    A(i, i) = c.alpha[i];
    if (i + 1 < m) A(i, i + 1) = A(i + 1, i) = std::sqrt(c.beta[i] * std::max(0.0, c.down(i + 1)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  std::vector<double> params;
  params.reserve(m);
  for (int i = 0; i < m; ++i) {
    const double b = es.eigenvalues()[i];
    if (b <= -1e-9 || b >= 1.0 + 1e-9) {
      throw std::domain_error("restricted-chain eigenvalue outside (0,1): " + std::to_string(b));
    }
    params.push_back(1.0 - b);
  }
  std::sort(params.begin(), params.end());
  return params;
}

// ---------------------------------------------------------------------------
// Hamming-weight projection of the lazy hypercube walk (Ehrenfest chain):
// loop 1/2, up (d-k)/(2d), down k/(2d).

inline PathChain ehrenfest_chain(int d) {
  if (d < 1) throw std::invalid_argument("ehrenfest chain needs d >= 1");
  PathChain c;
  c.d = d;
  c.alpha.assign(d + 1, 0.5);
  c.beta.resize(d + 1);
  for (int k = 0; k <= d; ++k) c.beta[k] = static_cast<double>(d - k) / (2.0 * d);
  c.validate();
  return c;
}

// P_{0,j}(t) on the d-cube for any j of Hamming weight ell, via the
// projection identity P_{0,j}(t) = P_{0,ell}(t) / C(d, ell).
inline DistSeq hypercube_transition_via_projection(int d, int ell, int T) {
  if (ell < 0 || ell > d) throw std::invalid_argument("Hamming weight out of range");
  DistSeq seq = transition_prob(ehrenfest_chain(d), 0, ell, T);
  const double scale = binomial(d, ell);
  for (double& v : seq.values) v /= scale;
  return seq;
}

// Same quantity by the coupon-collector form: condition on the number k of
// distinct coordinates touched (each touched coordinate is then a fair bit):
//   P_{0,j}(t) = sum_{k=ell}^{d} p(t,k) 2^{-k} C(d-ell, k-ell) / C(d, k),
// with p evolved by p(t+1,k) = p(t,k) k/d + p(t,k-1) (d-k+1)/d.
inline DistSeq balls_and_bins_transition(int d, int ell, int T) {
  if (d < 1) throw std::invalid_argument("needs d >= 1");
  if (ell < 0 || ell > d) throw std::invalid_argument("Hamming weight out of range");
  if (T < 0) throw std::invalid_argument("negative horizon");
  std::vector<double> p(d + 1, 0.0), q(d + 1, 0.0);
  p[0] = 1.0;
  auto value = [&]() {
    double s = 0.0;
    for (int k = ell; k <= d; ++k) {
      s += p[k] * std::ldexp(1.0, -k) * binomial(d - ell, k - ell) / binomial(d, k);
    }
    return s;
  };
  DistSeq out{std::vector<double>(T + 1, 0.0), SeqKind::transition};
  out.values[0] = value();
  for (int t = 1; t <= T; ++t) {
    for (int k = 0; k <= d; ++k) {
      q[k] = p[k] * (static_cast<double>(k) / d) +
             (k > 0 ? p[k - 1] * (static_cast<double>(d - k + 1) / d) : 0.0);
    }
    p.swap(q);
    out.values[t] = value();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monotonicity checks

// Per-state check that P_{i,i}(t) is non-increasing over t <= T. Requires
// every loop probability >= 1/2; violating chains are rejected, not judged.
inline std::vector<bool> check_diag_monotone(const PathChain& c, int T) {
  c.validate();
  for (int i = 0; i <= c.d; ++i) {
    if (c.alpha[i] < 0.5 - 1e-12) {
      throw std::domain_error("diagonal monotonicity requires loop probabilities >= 1/2");
    }
  }
  std::vector<bool> ok(c.d + 1, true);
  std::vector<double> p, q;
  for (int i = 0; i <= c.d; ++i) {
    p.assign(c.d + 1, 0.0);
    p[i] = 1.0;
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
      detail::path_step(c, p, q);
      p.swap(q);
      if (p[i] > prev + 1e-12) ok[i] = false;
      prev = p[i];
    }
  }
  return ok;
}

inline std::vector<bool> check_diag_monotone(const DiffusionMatrix& P, int T) {
  const int n = P.graph->n;
  for (int v = 0; v < n; ++v) {
    if (2 * (P.denom - P.graph->degree(v)) < P.denom) {
      throw std::domain_error("diagonal monotonicity requires loop probabilities >= 1/2");
    }
  }
  std::vector<bool> ok(n, true);
  std::vector<double> p;
  for (int v = 0; v < n; ++v) {
    p.assign(n, 0.0);
    p[v] = 1.0;
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
      p = P.apply(p);
      if (p[v] > prev + 1e-12) ok[v] = false;
      prev = p[v];
    }
  }
  return ok;
}

// For every target at Hamming distance >= d/2 from the start, the cube
// transition probability is non-decreasing in t (checked via projection;
// the binomial divisor does not affect monotonicity).
inline bool check_appendix_monotonicity(int d, int T) {
  if (d < 1 || d > 12) throw std::invalid_argument("supported range is 1 <= d <= 12");
  const PathChain chain = ehrenfest_chain(d);
  for (int ell = (d + 1) / 2; ell <= d; ++ell) {
    const DistSeq seq = transition_prob(chain, 0, ell, T);
    for (int t = 0; t < T; ++t) {
      if (seq.values[t] > seq.values[t + 1] + 1e-12) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Shape certifiers. Probabilities below 1e-300 count as zero (ratio tests
// would otherwise amplify denormal noise); log-concavity additionally
// requires contiguous positive support.

namespace detail {
constexpr double kZeroFloor = 1e-300;
constexpr double kShapeTol = 1e-12;
}  // namespace detail

inline bool is_log_concave(const std::vector<double>& f) {
  int first = -1, last = -1;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < -detail::kZeroFloor) return false;
    if (f[i] > detail::kZeroFloor) {
      if (first < 0) first = static_cast<int>(i);
      last = static_cast<int>(i);
    }
  }
  if (first < 0) return true;
  for (int i = first; i <= last; ++i) {
    if (f[i] <= detail::kZeroFloor) return false;  // interior zero
  }
  // f(i)^2 >= f(i-1) f(i+1) <=> successive ratios non-increasing; the ratio
  // form survives tails where f^2 underflows.
  for (int i = first; i + 2 <= last; ++i) {
    const double r1 = f[i + 1] / f[i];
    const double r2 = f[i + 2] / f[i + 1];
    if (r2 > r1 * (1.0 + detail::kShapeTol)) return false;
  }
  return true;
}

inline bool is_unimodal(const std::vector<double>& f) {
  bool falling = false;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double diff = f[i + 1] - f[i];
    if (std::abs(diff) <= detail::kShapeTol) continue;
    if (diff < 0.0) {
      falling = true;
    } else if (falling) {
      return false;
    }
  }
  return true;
}

// Sign changes of the (tolerance-filtered) difference sequence; plateaus
// collapse onto their neighbors. A monotone sequence has 0, a single-peak
// or single-valley sequence has 1.
inline int count_local_extrema(const std::vector<double>& f) {
  int count = 0;
  int prev_sign = 0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double diff = f[i + 1] - f[i];
    if (std::abs(diff) <= detail::kShapeTol) continue;
    const int sign = diff > 0.0 ? 1 : -1;
    if (prev_sign != 0 && sign != prev_sign) ++count;
    prev_sign = sign;
  }
  return count;
}

inline bool is_log_concave(const DistSeq& s) { return is_log_concave(s.values); }
inline bool is_unimodal(const DistSeq& s) { return is_unimodal(s.values); }
inline int count_local_extrema(const DistSeq& s) { return count_local_extrema(s.values); }

// ---------------------------------------------------------------------------
// Weighted suffix-sum domination, exact: if every suffix sum of a is at most
// the corresponding suffix sum of b and c is non-decreasing (all positive),
// then the same domination holds for the c-weighted suffix sums.

inline bool basiclemma2_hypotheses(const std::vector<bigrat>& a, const std::vector<bigrat>& b,
                                   const std::vector<bigrat>& c) {
  const std::size_t n = a.size();
  if (n == 0 || b.size() != n || c.size() != n) return false;
  for (std::size_t k = 0; k < n; ++k) {
    if (a[k] <= 0 || b[k] <= 0 || c[k] <= 0) return false;
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (c[k] > c[k + 1]) return false;
  }
  bigrat sa = 0, sb = 0;
  for (std::size_t j = n; j-- > 0;) {
    sa += a[j];
    sb += b[j];
    if (sa > sb) return false;
  }
  return true;
}

inline bool basiclemma2_conclusion(const std::vector<bigrat>& a, const std::vector<bigrat>& b,
                                   const std::vector<bigrat>& c) {
  const std::size_t n = a.size();
  bigrat sa = 0, sb = 0;
  for (std::size_t j = n; j-- > 0;) {
    sa += a[j] * c[j];
    sb += b[j] * c[j];
    if (sa > sb) return false;
  }
  return true;
}

}  // namespace dlb
