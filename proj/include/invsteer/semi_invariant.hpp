#pragma once

// Semi-invariant bookkeeping. A semi-invariant is a map I with
// dI/dt = L(x) I(x) along the flow; the target surface is S = {I = 0}. The
// symmetric part H of L gives the instantaneous growth rate of ||I|| through
// the quadratic form <i, H i> on the unit vector i = I/||I||. Impulse records
// track the per-interval free-growth exponent, the applied jump, and their
// sum, all from norm ratios.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "invsteer/core.hpp"
#include "invsteer/linalg.hpp"

namespace invsteer {

struct SemiInvariantSpec {
  std::size_t p = 0;  // components of I
  std::size_t m = 0;  // ambient dimension
  std::function<Vec(const Vec&)> eval_I;
  std::function<Matrix(const Vec&)> eval_L;  // p x p factor with dI/dt = L(x) I(x)
  std::function<Vec(const Vec&)> eval_J;     // complement coordinates; null when m == p
  VectorFieldSpec field;
};

// The unit vector of I is undefined below this times p. This only guards
// exact and denormal zeros; every meaningful run works far above it.
inline constexpr double kVersorFloorPerComponent = 1e-300;

struct Decomposition {
  Vec I;
  double norm_I = 0.0;
  Vec versor;                  // I / ||I||, meaningful only when versor_defined
  bool versor_defined = false;
  Vec J;                       // empty when the spec has no complement
};

struct ImpulseRecord {
  std::size_t n = 0;        // 1-based impulse index
  double t_n = 0.0;
  double delta_n = 0.0;     // gap to the previous impulse (or to the start)
  double beta_n = 0.0;      // free growth over the gap: ln(norm_before / previous norm_after)
  double A_n = 0.0;         // applied jump: ln(norm_after / norm_before)
  double B_n = 0.0;         // A_n + beta_n, the net exponent per impulse period
  double norm_before = 0.0;
  double norm_after = 0.0;  // bookkeeping value norm_before * exp(A_n)
  bool no_op = false;
  bool clamped = false;     // vaccination exponent was clamped at zero
  // Map-specific extras, NaN when not applicable.
  double rescale_exponent = std::numeric_limits<double>::quiet_NaN();  // vaccination S-rescale
  double beta_alt = std::numeric_limits<double>::quiet_NaN();  // sync: previous separation taken
                                                               // against the partner at t_n
};

inline double euclidean_norm(const Vec& v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

inline Matrix eval_H(const SemiInvariantSpec& spec, const StateVector& s) {
  if (!spec.eval_L) throw std::invalid_argument("eval_H: spec has no L factor");
  return symmetric_part(spec.eval_L(s.x));
}

inline Decomposition decompose(const SemiInvariantSpec& spec, const StateVector& s) {
  if (!spec.eval_I) throw std::invalid_argument("decompose: spec has no I map");
  if (s.x.size() != spec.m)
    throw std::invalid_argument("decompose: state dimension does not match the spec");
  Decomposition d;
  d.I = spec.eval_I(s.x);
  if (d.I.size() != spec.p)
    throw std::invalid_argument("decompose: I has the wrong number of components");
  d.norm_I = euclidean_norm(d.I);
  const double floor = kVersorFloorPerComponent * static_cast<double>(spec.p);
  if (d.norm_I > floor) {
    d.versor.resize(spec.p);
    for (std::size_t i = 0; i < spec.p; ++i) d.versor[i] = d.I[i] / d.norm_I;
    d.versor_defined = true;
  }
  if (spec.eval_J) d.J = spec.eval_J(s.x);
  return d;
}

// <i, H(x) i> with i the unit vector of I(x): the instantaneous growth rate of
// ln ||I|| at this state. Undefined on the surface itself.
inline double quadratic_form(const SemiInvariantSpec& spec, const StateVector& s) {
  const Decomposition d = decompose(spec, s);
  if (!d.versor_defined)
    throw std::domain_error("quadratic_form: unit vector undefined on the invariant surface");
  return quadratic(eval_H(spec, s), d.versor);
}

// Free-growth exponent from the norm ratio; the authoritative route.
inline double beta_via_logratio(double norm_start, double norm_end) {
  if (!(norm_start > 0.0) || !(norm_end > 0.0))
    throw std::domain_error("beta_via_logratio: norms must be positive");
  return std::log(norm_end / norm_start);
}

// Same exponent as the time integral of <i, H i> over a sampled segment.
// Cross-check route; agrees with the log ratio to the quadrature error.
// Composite Simpson in its unequal-interval form: each interval pair takes
// the closed three-point rule (exact for quadratics at any width ratio, the
// classic h/3 weights when uniform), so the shortened final step the
// integrator uses to land on the segment end costs no accuracy. A lone
// trailing interval, or a pair more than 4x apart in width (where the rule's
// weights grow), falls back to a single trapezoid whose one local O(h^3)
// term stays far below the pair rule's error.
inline double beta_via_quadrature(const std::vector<StateVector>& segment,
                                  const SemiInvariantSpec& spec) {
  if (segment.size() < 2) return 0.0;
  std::vector<double> g(segment.size());
  g[0] = quadratic_form(spec, segment.front());
  for (std::size_t k = 1; k < segment.size(); ++k) {
    if (segment[k].t - segment[k - 1].t < 0.0)
      throw std::invalid_argument("beta_via_quadrature: sample times must be nondecreasing");
    g[k] = quadratic_form(spec, segment[k]);
  }
  double acc = 0.0;
  std::size_t k = 0;
  while (k + 1 < segment.size()) {
    const double h0 = segment[k + 1].t - segment[k].t;
    if (k + 2 < segment.size()) {
      const double h1 = segment[k + 2].t - segment[k + 1].t;
      if (h0 > 0.0 && h1 > 0.0 && std::min(h0, h1) >= 0.25 * std::max(h0, h1)) {
        const double w = (h0 + h1) / 6.0;
        acc += w * ((2.0 - h1 / h0) * g[k] +
                    (h0 + h1) * (h0 + h1) / (h0 * h1) * g[k + 1] +
                    (2.0 - h0 / h1) * g[k + 2]);
        k += 2;
        continue;
      }
    }
    acc += 0.5 * h0 * (g[k] + g[k + 1]);
    k += 1;
  }
  return acc;
}

// Assembles one impulse record from the bookkeeping norms. norm_prev_plus is
// the stored norm right after the previous impulse (the starting norm for the
// first one); norm_before is the measured norm just before this impulse; A_n
// is the jump the map applied. A zero norm_before with zero norm_prev_plus is
// a no-op record (the state already sits on the surface).
inline ImpulseRecord make_impulse_record(std::size_t n, double t_prev, double t_n,
                                         double norm_prev_plus, double norm_before,
                                         double A_n) {
  if (!(t_n > t_prev))
    throw std::invalid_argument("make_impulse_record: impulse times must increase");
  ImpulseRecord r;
  r.n = n;
  r.t_n = t_n;
  r.delta_n = t_n - t_prev;
  r.norm_before = norm_before;
  if (norm_before == 0.0 && norm_prev_plus == 0.0) {
    r.no_op = true;
    r.A_n = 0.0;
    r.beta_n = 0.0;
    r.B_n = 0.0;
    r.norm_after = 0.0;
    return r;
  }
  if (!(norm_prev_plus > 0.0) || !(norm_before > 0.0))
    throw std::domain_error("make_impulse_record: inconsistent bookkeeping norms");
  r.beta_n = beta_via_logratio(norm_prev_plus, norm_before);
  r.A_n = A_n;
  r.B_n = A_n + r.beta_n;
  r.norm_after = norm_before * std::exp(A_n);
  return r;
}

}  // namespace invsteer
