#pragma once

// Spectral analysis of the diffusion matrix: closed-form second eigenvalues
// for cycles, tori and hypercubes, a numeric eigensolver oracle, and the
// convergence-time bound for the idealized process.
//
// All reference graphs here are regular with maximum degree equal to the
// vertex degree, so P = I - L_norm / 2 and every eigenvalue of P equals
// 1 - tau/2 for a normalized-Laplacian eigenvalue tau. Eigenvalues of P lie
// in [0,1] (Gershgorin: diagonal >= 1/2, row sums 1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dlb/diffusion.hpp"
#include "dlb/graph.hpp"
#include "dlb/rng.hpp"

namespace dlb {

struct SpectralReport {
  double lambda2 = 0.0;  // second largest |eigenvalue| of P
  double gap = 1.0;      // 1 - lambda2
  std::string method;    // "closed-form" | "dense" | "power"
  int iterations = 0;    // power-iteration count, 0 otherwise
};

// Normalized-Laplacian spectrum of the q-cycle: {1 - cos(2*pi*r/q)}, sorted.
inline std::vector<double> cycle_laplacian_eigenvalues(int q) {
  if (q < 3) throw std::invalid_argument("cycle needs q >= 3");
  std::vector<double> ev(q);
  for (int r = 0; r < q; ++r) ev[r] = 1.0 - std::cos(2.0 * std::numbers::pi * r / q);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline SpectralReport cycle_lambda2(int q) {
  if (q < 3) throw std::invalid_argument("cycle needs q >= 3");
  const double tau = 1.0 - std::cos(2.0 * std::numbers::pi / q);
  return {1.0 - tau / 2.0, tau / 2.0, "closed-form", 0};
}

// Cartesian product of d cycles: the smallest positive normalized-Laplacian
// eigenvalue is min_k (1 - cos(2*pi/n_k)) / d, attained on the longest side.
inline SpectralReport torus_lambda2(const std::vector<int>& dims) {
  if (dims.empty()) throw std::invalid_argument("torus needs >= 1 dimension");
  double min_tau = std::numeric_limits<double>::infinity();
  for (int q : dims) {
    if (q < 3) throw std::invalid_argument("torus side lengths must be >= 3");
    min_tau = std::min(min_tau, 1.0 - std::cos(2.0 * std::numbers::pi / q));
  }
  const double d = static_cast<double>(dims.size());
  const double tau = min_tau / d;
  return {1.0 - tau / 2.0, tau / 2.0, "closed-form", 0};
}

inline SpectralReport hypercube_lambda2(int d) {
  if (d < 1) throw std::invalid_argument("hypercube needs d >= 1");
  const double gap = 1.0 / d;
  return {1.0 - gap, gap, "closed-form", 0};
}

// Dispatch on graph kind; throws for kinds without a closed form.
inline SpectralReport closed_form_lambda2(const Graph& g) {
  switch (g.kind) {
    case GraphKind::cycle:
      return cycle_lambda2(g.params[0]);
    case GraphKind::torus:
      return torus_lambda2(g.params);
    case GraphKind::hypercube:
      return hypercube_lambda2(g.params[0]);
    default:
      throw std::invalid_argument("no closed-form lambda2 for this graph kind");
  }
}

// Steps after which the idealized process provably reduces discrepancy K to
// at most l: ceil( 2/(1-lambda2) * ln(K n^2 / l) ).
inline std::int64_t convergence_bound(double lambda2, std::int64_t K, std::int64_t n, double ell) {
  if (!(lambda2 >= 0.0 && lambda2 < 1.0)) throw std::invalid_argument("need 0 <= lambda2 < 1");
  if (n < 1) throw std::invalid_argument("need n >= 1");
  if (!(ell > 0.0) || K < ell) throw std::invalid_argument("need K >= ell > 0");
  const double steps =
      2.0 / (1.0 - lambda2) * std::log(static_cast<double>(K) * n * static_cast<double>(n) / ell);
  return static_cast<std::int64_t>(std::ceil(std::max(0.0, steps)));
}

// Full spectrum of P, ascending. Dense; guarded to small n.
inline std::vector<double> diffusion_spectrum(const Graph& g) {
  if (g.n > 512) throw std::invalid_argument("dense spectrum limited to n <= 512");
  const DiffusionMatrix P = diffusion_matrix(g);
  Eigen::MatrixXd A(g.n, g.n);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) A(i, j) = P.entry(i, j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  return {es.eigenvalues().data(), es.eigenvalues().data() + g.n};
}

namespace detail {

inline SpectralReport dense_lambda2(const Graph& g) {
  const std::vector<double> ev = diffusion_spectrum(g);
  // Second largest by absolute value; eigenvalues are >= 0 up to roundoff,
  // so this is the second largest plain — asserted, not assumed.
  if (ev.front() < -1e-9) throw std::logic_error("negative eigenvalue in diffusion spectrum");
  const double l2 = ev[ev.size() - 2];
  return {l2, 1.0 - l2, "dense", 0};
}

// Power iteration on the complement of the uniform (top) eigenvector. P is
// doubly stochastic, so that complement is invariant; re-centering each
// iterate only removes numerical drift.
inline SpectralReport power_lambda2(const Graph& g) {
  const DiffusionMatrix P = diffusion_matrix(g);
  const int n = g.n;
  Xoshiro256ss rng(0x5ca1ab1edeadbeefull);
  std::vector<double> v(n);
  for (double& x : v) x = uniform01(rng) - 0.5;
  auto recenter = [n](std::vector<double>& w) {
    double mean = 0.0;
    for (double x : w) mean += x;
    mean /= n;
    for (double& x : w) x -= mean;
  };
  auto norm2 = [](const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += x * x;
    return std::sqrt(s);
  };
  recenter(v);
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  constexpr int kMaxIters = 200000;
  constexpr double kTol = 1e-11;  // l2 residual; eigenvalue error is at most this
  for (int it = 1; it <= kMaxIters; ++it) {
    std::vector<double> u = P.apply(v);
    recenter(u);
    double lambda = 0.0;
    for (int i = 0; i < n; ++i) lambda += v[i] * u[i];
    double resid = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = u[i] - lambda * v[i];
      resid += r * r;
    }
    resid = std::sqrt(resid);
    const double nu = norm2(u);
    if (nu == 0.0) throw std::runtime_error("power iteration collapsed to zero vector");
    for (int i = 0; i < n; ++i) v[i] = u[i] / nu;
    if (resid <= kTol) return {lambda, 1.0 - lambda, "power", it};
  }
  throw std::runtime_error("power iteration did not converge within " +
                           std::to_string(kMaxIters) + " iterations");
}

}  // namespace detail

inline SpectralReport numeric_lambda2(const Graph& g) {
  if (g.n < 2) throw std::invalid_argument("lambda2 undefined for a single vertex");
  if (g.n > 4096) throw std::invalid_argument("numeric lambda2 limited to n <= 4096");
  return g.n < 512 ? detail::dense_lambda2(g) : detail::power_lambda2(g);
}

inline SpectralReport numeric_lambda2(const DiffusionMatrix& P) { return numeric_lambda2(*P.graph); }

}  // namespace dlb
