#pragma once

// Fixed-step classical RK4 over autonomous fields. Segment integration lands
// exactly on the requested end time (the controllers depend on hitting impulse
// times bit-exactly), and step start times are computed as multiples of dt
// from the segment start, so there is no accumulated drift.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace invsteer {

using Vec = std::vector<double>;

struct StateVector {
  double t = 0.0;
  Vec x;
};

// Autonomous vector field x -> F(x). eval writes F(x) into dxdt; dxdt is
// preallocated to `dimension` by every caller in this library.
struct VectorFieldSpec {
  std::size_t dimension = 0;
  std::function<void(const Vec& x, Vec& dxdt)> eval;
  std::string name;
};

// Any component beyond this magnitude, or any non-finite component, aborts
// integration with IntegrationBlowup.
inline constexpr double kBlowupThreshold = 1e12;

class IntegrationBlowup : public std::runtime_error {
 public:
  IntegrationBlowup(const std::string& what, StateVector last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}

  // Last state (with its time) that was still finite and within bounds.
  const StateVector& last_good() const noexcept { return last_good_; }

 private:
  StateVector last_good_;
};

inline bool state_within_bounds(const Vec& x) {
  for (double v : x) {
    if (!std::isfinite(v) || std::fabs(v) > kBlowupThreshold) return false;
  }
  return true;
}

namespace detail {

struct Rk4Scratch {
  Vec k1, k2, k3, k4, xt;
  void resize(std::size_t n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    xt.resize(n);
  }
};

// One classical RK4 step of length h, in place.
inline void rk4_advance(const VectorFieldSpec& field, Vec& x, double h, Rk4Scratch& s) {
  const std::size_t n = x.size();
  field.eval(x, s.k1);
  for (std::size_t i = 0; i < n; ++i) s.xt[i] = x[i] + 0.5 * h * s.k1[i];
  field.eval(s.xt, s.k2);
  for (std::size_t i = 0; i < n; ++i) s.xt[i] = x[i] + 0.5 * h * s.k2[i];
  field.eval(s.xt, s.k3);
  for (std::size_t i = 0; i < n; ++i) s.xt[i] = x[i] + h * s.k3[i];
  field.eval(s.xt, s.k4);
  for (std::size_t i = 0; i < n; ++i)
    x[i] += h / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
}

// A remainder below this fraction of dt merges into the final step instead of
// producing a degenerate extra step.
inline constexpr double kStepSnap = 1e-9;

}  // namespace detail

inline StateVector rk4_step(const VectorFieldSpec& field, const StateVector& s, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  if (field.dimension != s.x.size())
    throw std::invalid_argument("rk4_step: state dimension does not match the field");
  if (!state_within_bounds(s.x))
    throw IntegrationBlowup("rk4_step: state out of bounds on entry", s);
  StateVector out{s.t + dt, s.x};
  detail::Rk4Scratch scratch;
  scratch.resize(s.x.size());
  detail::rk4_advance(field, out.x, dt, scratch);
  if (!state_within_bounds(out.x))
    throw IntegrationBlowup("rk4_step: state exceeded the blowup threshold", s);
  return out;
}

// Marches from start.t to t_end with steps of dt, shortening the final step so
// the last sample lands exactly on t_end. Samples are recorded every
// sample_every steps plus both endpoints. Throws IntegrationBlowup (carrying
// the last good state) if any component leaves [-kBlowupThreshold,
// kBlowupThreshold] or turns non-finite.
inline std::vector<StateVector> integrate_segment(const VectorFieldSpec& field,
                                                  const StateVector& start, double t_end,
                                                  double dt, std::size_t sample_every = 1) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_segment: dt must be positive");
  if (!(t_end > start.t))
    throw std::invalid_argument("integrate_segment: t_end must exceed the start time");
  if (sample_every == 0)
    throw std::invalid_argument("integrate_segment: sample_every must be at least 1");
  if (field.dimension != start.x.size())
    throw std::invalid_argument("integrate_segment: state dimension does not match the field");
  if (!state_within_bounds(start.x))
    throw IntegrationBlowup("integrate_segment: state out of bounds on entry", start);

  std::vector<StateVector> samples;
  samples.push_back(start);

  detail::Rk4Scratch scratch;
  scratch.resize(start.x.size());
  Vec x = start.x;
  Vec x_prev = x;
  const double t0 = start.t;

  for (std::size_t k = 0;; ++k) {
    const double t_cur = (k == 0) ? t0 : t0 + static_cast<double>(k) * dt;
    const double t_next = t0 + static_cast<double>(k + 1) * dt;
    const bool final_step = t_next >= t_end - detail::kStepSnap * dt;
    const double h = final_step ? t_end - t_cur : t_next - t_cur;
    x_prev = x;
    detail::rk4_advance(field, x, h, scratch);
    const double t_now = final_step ? t_end : t_next;
    if (!state_within_bounds(x))
      throw IntegrationBlowup("integrate_segment: state exceeded the blowup threshold",
                              StateVector{t_cur, std::move(x_prev)});
    if (final_step) {
      samples.push_back(StateVector{t_now, x});
      break;
    }
    if ((k + 1) % sample_every == 0) samples.push_back(StateVector{t_now, x});
  }
  return samples;
}

}  // namespace invsteer
