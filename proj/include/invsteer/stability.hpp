#pragma once

// Stability exponent of the invariant surface: the long-run time average of
// <i, H_S(J) i> along the joint flow of the on-surface coordinates J and the
// unit vector i, where i obeys di/dt = L_S(J) i - i <i, H_S(J) i>. A negative
// exponent means transverse perturbations decay on average.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "invsteer/core.hpp"
#include "invsteer/linalg.hpp"
#include "invsteer/semi_invariant.hpp"

namespace invsteer {

struct OnSurfaceSystem {
  std::size_t p = 0;  // transverse components (unit-vector dimension)
  std::size_t q = 0;  // on-surface coordinates; 0 when the surface is a point
  std::function<Matrix(const Vec& J)> eval_L_S;
  std::function<Matrix(const Vec& J)> eval_H_S;
  std::function<Vec(const Vec& J)> eval_P_S;  // unused when q == 0
  bool constant_L_S = false;  // L_S does not change along the on-surface flow
};

struct StabilityEstimate {
  double D_S = 0.0;
  double horizon = 0.0;
  double burn_in = 0.0;   // effective cutoff (snapped to a step boundary)
  Vec i0;                 // unit start vector actually used
  Vec J0;
  std::uint64_t seed = 0; // seed that drew i0; 0 when i0 was supplied directly
  // (t, running average from burn_in to t); one entry per time unit, the last
  // one at the horizon equals D_S.
  std::vector<std::pair<double, double>> convergence_series;
};

inline constexpr std::uint64_t kDefaultSeed = 1;

struct DsSettings {
  double T = 200.0;
  double dt = 1e-3;
  double burn_in = -1.0;  // negative: use T/10
  std::uint64_t seed = kDefaultSeed;
};

// Deterministic unit vector from a seed. Gaussian components via an explicit
// Box-Muller transform over mt19937_64, so the draw is pinned across
// platforms (std::normal_distribution is not).
inline Vec random_unit_vector(std::size_t p, std::uint64_t seed) {
  if (p == 0) throw std::invalid_argument("random_unit_vector: dimension must be positive");
  std::mt19937_64 eng(seed);
  auto uniform01 = [&eng]() {
    // (0, 1]: keeps log() finite.
    return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
  };
  Vec v(p);
  while (true) {
    for (std::size_t i = 0; i < p; i += 2) {
      const double u1 = uniform01();
      const double u2 = uniform01();
      const double rho = std::sqrt(-2.0 * std::log(u1));
      const double ang = 2.0 * std::numbers::pi * u2;
      v[i] = rho * std::cos(ang);
      if (i + 1 < p) v[i + 1] = rho * std::sin(ang);
    }
    const double nrm = euclidean_norm(v);
    if (nrm > 0.0) {
      for (double& c : v) c /= nrm;
      return v;
    }
  }
}

// Runs the joint J / unit-vector flow with RK4, renormalizing the vector after
// every step, and averages <i, H_S i> from burn_in to T. The average is
// accumulated as an extra RK4 state component, so its quadrature carries the
// integrator's order. burn_in snaps to the first step boundary at or past the
// requested value.
inline StabilityEstimate estimate_ds(const OnSurfaceSystem& sys, const Vec& J0, const Vec& i0,
                                     double T, double burn_in, double dt) {
  const std::size_t q = sys.q, p = sys.p;
  if (p == 0) throw std::invalid_argument("estimate_ds: system has no transverse components");
  if (J0.size() != q) throw std::invalid_argument("estimate_ds: J0 dimension mismatch");
  if (i0.size() != p) throw std::invalid_argument("estimate_ds: i0 dimension mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("estimate_ds: dt must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("estimate_ds: horizon must be positive");
  if (!(burn_in >= 0.0) || !(burn_in < T))
    throw std::invalid_argument("estimate_ds: burn_in must lie in [0, T)");
  if (q > 0 && !sys.eval_P_S)
    throw std::invalid_argument("estimate_ds: on-surface flow missing");

  StabilityEstimate est;
  est.horizon = T;
  est.J0 = J0;

  // State layout: [J, i, accumulated integral of <i, H_S i>].
  Vec u(q + p + 1, 0.0);
  for (std::size_t k = 0; k < q; ++k) u[k] = J0[k];
  {
    const double nrm = euclidean_norm(i0);
    if (!(nrm > 0.0)) throw std::invalid_argument("estimate_ds: i0 must be nonzero");
    for (std::size_t k = 0; k < p; ++k) u[q + k] = i0[k] / nrm;
    est.i0.assign(u.begin() + q, u.begin() + q + p);
  }

  VectorFieldSpec aug;
  aug.dimension = q + p + 1;
  aug.name = "on-surface unit-vector flow";
  aug.eval = [&sys, q, p, J = Vec(q), iv = Vec(p)](const Vec& s, Vec& d) mutable {
    for (std::size_t k = 0; k < q; ++k) J[k] = s[k];
    for (std::size_t k = 0; k < p; ++k) iv[k] = s[q + k];
    const Matrix L = sys.eval_L_S(J);
    const Vec Li = mat_vec(L, iv);
    double g = 0.0;
    for (std::size_t k = 0; k < p; ++k) g += iv[k] * Li[k];
    if (q > 0) {
      const Vec PJ = sys.eval_P_S(J);
      for (std::size_t k = 0; k < q; ++k) d[k] = PJ[k];
    }
    for (std::size_t k = 0; k < p; ++k) d[q + k] = Li[k] - g * iv[k];
    d[q + p] = g;
  };

  detail::Rk4Scratch scratch;
  scratch.resize(aug.dimension);

  double a_burn = 0.0, t_burn = 0.0;
  bool burn_done = burn_in <= 0.0;
  double next_mark = burn_done ? 1.0 : std::numeric_limits<double>::infinity();

  for (std::size_t k = 0;; ++k) {
    const double t_cur = (k == 0) ? 0.0 : static_cast<double>(k) * dt;
    const double t_next = static_cast<double>(k + 1) * dt;
    const bool final_step = t_next >= T - detail::kStepSnap * dt;
    const double h = final_step ? T - t_cur : t_next - t_cur;
    detail::rk4_advance(aug, u, h, scratch);
    if (!state_within_bounds(u))
      throw IntegrationBlowup("estimate_ds: on-surface flow exceeded the blowup threshold",
                              StateVector{t_cur, u});
    // Renormalize the unit vector; the flow keeps it near 1, this removes the
    // per-step drift.
    double nrm = 0.0;
    for (std::size_t j = 0; j < p; ++j) nrm += u[q + j] * u[q + j];
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0))
      throw IntegrationBlowup("estimate_ds: unit vector collapsed", StateVector{t_cur, u});
    for (std::size_t j = 0; j < p; ++j) u[q + j] /= nrm;

    const double t_now = final_step ? T : t_next;
    if (!burn_done && t_now >= burn_in - detail::kStepSnap * dt) {
      a_burn = u[q + p];
      t_burn = t_now;
      burn_done = true;
      next_mark = t_burn + 1.0;
    } else if (burn_done && (final_step || t_now >= next_mark - detail::kStepSnap * dt)) {
      if (t_now > t_burn)
        est.convergence_series.emplace_back(t_now, (u[q + p] - a_burn) / (t_now - t_burn));
      while (next_mark <= t_now + detail::kStepSnap * dt) next_mark += 1.0;
    }
    if (final_step) break;
  }

  est.burn_in = t_burn;
  est.D_S = (u[q + p] - a_burn) / (T - t_burn);
  if (est.convergence_series.empty() || est.convergence_series.back().first != T)
    est.convergence_series.emplace_back(T, est.D_S);
  return est;
}

inline StabilityEstimate estimate_ds(const OnSurfaceSystem& sys, const Vec& J0,
                                     const DsSettings& cfg = {}) {
  const double burn = cfg.burn_in < 0.0 ? cfg.T / 10.0 : cfg.burn_in;
  Vec i0 = random_unit_vector(sys.p, cfg.seed);
  StabilityEstimate est = estimate_ds(sys, J0, i0, cfg.T, burn, cfg.dt);
  est.seed = cfg.seed;
  return est;
}

// Exponent for a constant L_S: the largest real part over its eigenvalues.
// Closed form up to 3x3; beyond that the unit-vector average itself is the
// fallback, run on the constant system.
inline double ds_constant_matrix(const Matrix& L_S) {
  if (L_S.rows != L_S.cols)
    throw std::invalid_argument("ds_constant_matrix: matrix must be square");
  if (L_S.rows <= 3) return max_real_eig(L_S);
  OnSurfaceSystem sys;
  sys.p = L_S.rows;
  sys.q = 0;
  sys.constant_L_S = true;
  sys.eval_L_S = [L_S](const Vec&) { return L_S; };
  sys.eval_H_S = [H = symmetric_part(L_S)](const Vec&) { return H; };
  return estimate_ds(sys, Vec{}, DsSettings{}).D_S;
}

// Largest eigenvalue of H at a state: the best-case instantaneous growth rate
// of ||I|| there, used as the pathwise bound constant.
inline double lambda_h_max(const SemiInvariantSpec& spec, const StateVector& s) {
  return max_eig_symmetric(eval_H(spec, s));
}

struct SweepPoint {
  double parameter = 0.0;
  bool ok = false;
  double D_S = std::numeric_limits<double>::quiet_NaN();
  std::string error;
  StabilityEstimate estimate;
};

// Evaluates the exponent over a parameter grid. Points are independent and
// fan out over a small worker pool; every point uses the same seed, so the
// sweep is reproducible bit for bit regardless of scheduling. Per-point
// failures are reported in place and do not stop the sweep.
inline std::vector<SweepPoint> sweep_ds(const std::function<OnSurfaceSystem(double)>& family,
                                        const std::vector<double>& grid, const Vec& J0,
                                        const DsSettings& settings = {}, std::size_t jobs = 0) {
  if (!family) throw std::invalid_argument("sweep_ds: family must be callable");
  std::vector<SweepPoint> results(grid.size());
  if (grid.empty()) return results;
  if (jobs == 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    jobs = hc == 0 ? 1 : hc;
  }
  jobs = std::min<std::size_t>(jobs, grid.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t idx = next.fetch_add(1); idx < grid.size(); idx = next.fetch_add(1)) {
      SweepPoint& pt = results[idx];
      pt.parameter = grid[idx];
      try {
        const OnSurfaceSystem sys = family(grid[idx]);
        pt.estimate = estimate_ds(sys, J0, settings);
        pt.D_S = pt.estimate.D_S;
        pt.ok = true;
      } catch (const std::exception& e) {
        pt.ok = false;
        pt.error = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

// Bisects a sign change of the exponent between lo and hi (which must bracket
// one) down to the requested parameter tolerance.
inline double bisect_ds_sign_change(const std::function<OnSurfaceSystem(double)>& family,
                                    double lo, double hi, const Vec& J0,
                                    const DsSettings& settings, double tol) {
  if (!(hi > lo) || !(tol > 0.0))
    throw std::invalid_argument("bisect_ds_sign_change: bad bracket or tolerance");
  double f_lo = estimate_ds(family(lo), J0, settings).D_S;
  double f_hi = estimate_ds(family(hi), J0, settings).D_S;
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0))
    throw std::invalid_argument("bisect_ds_sign_change: endpoints do not bracket a sign change");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = estimate_ds(family(mid), J0, settings).D_S;
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace invsteer
