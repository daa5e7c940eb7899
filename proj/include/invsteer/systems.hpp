#pragma once

// Bundled systems. Each preset packages the flow, its semi-invariant (with
// the L factor satisfying dI/dt = L(x) I(x) identically), and the on-surface
// reduction that feeds the stability exponent.

#include <cstddef>
#include <stdexcept>

#include "invsteer/core.hpp"
#include "invsteer/linalg.hpp"
#include "invsteer/semi_invariant.hpp"
#include "invsteer/stability.hpp"

namespace invsteer {

struct LorenzParams {
  double sigma = 10.0;
  double r = 28.0;
  double b = 8.0 / 3.0;
};

struct CoupledLorenzParams {
  LorenzParams lorenz{};
  double c = 0.0;  // drive strength of the first subsystem on the second
};

struct SeirParams {
  double rho = 114.715;        // transmission rate, per year
  double sigma = 365.0 / 8.5;  // incubation rate, per year
  double gamma = 365.0 / 7.0;  // recovery rate, per year
};

struct SystemPreset {
  VectorFieldSpec field;
  SemiInvariantSpec invariant;
  OnSurfaceSystem on_surface;
  StateVector default_initial;
};

// Lorenz flow with the identity semi-invariant I(x) = x: the surface is the
// origin, which the flow fixes. The on-surface factor is the constant L at 0.
inline SystemPreset lorenz_preset(const LorenzParams& P = {}) {
  const double sg = P.sigma, r = P.r, b = P.b;

  SystemPreset out;
  out.field.dimension = 3;
  out.field.name = "lorenz";
  out.field.eval = [sg, r, b](const Vec& x, Vec& d) {
    d[0] = sg * (x[1] - x[0]);
    d[1] = r * x[0] - x[1] - x[0] * x[2];
    d[2] = x[0] * x[1] - b * x[2];
  };

  out.invariant.p = 3;
  out.invariant.m = 3;
  out.invariant.eval_I = [](const Vec& x) { return x; };
  out.invariant.eval_L = [sg, r, b](const Vec& x) {
    Matrix L(3, 3);
    L(0, 0) = -sg;  L(0, 1) = sg;    L(0, 2) = 0.0;
    L(1, 0) = r;    L(1, 1) = -1.0;  L(1, 2) = -x[0];
    L(2, 0) = 0.0;  L(2, 1) = x[0];  L(2, 2) = -b;
    return L;
  };
  out.invariant.eval_J = [](const Vec&) { return Vec{}; };  // the surface is a point
  out.invariant.field = out.field;

  const Matrix LS = out.invariant.eval_L(Vec{0.0, 0.0, 0.0});
  out.on_surface.p = 3;
  out.on_surface.q = 0;
  out.on_surface.constant_L_S = true;
  out.on_surface.eval_L_S = [LS](const Vec&) { return LS; };
  out.on_surface.eval_H_S = [H = symmetric_part(LS)](const Vec&) { return H; };

  out.default_initial = StateVector{0.0, Vec{1.0, 1.0, 1.0}};
  return out;
}

// Two Lorenz systems, the second driven by the first through c (x1 - y1) in
// its first equation. I = x - y, J = y; on the surface the pair is
// synchronized and J runs the plain Lorenz flow.
//
// The quadratic cross terms of d(I)/dt split evenly between the two factor
// slots (the I-dependent entries carry 1/2), which makes dI/dt = L(I,J) I an
// exact identity while keeping L(0,J) the same on-surface factor.
inline SystemPreset coupled_lorenz_preset(const CoupledLorenzParams& P = {}) {
  const double sg = P.lorenz.sigma, r = P.lorenz.r, b = P.lorenz.b, c = P.c;
  if (c < 0.0) throw std::invalid_argument("coupled_lorenz_preset: coupling must be >= 0");

  SystemPreset out;
  out.field.dimension = 6;
  out.field.name = "coupled-lorenz";
  out.field.eval = [sg, r, b, c](const Vec& z, Vec& d) {
    d[0] = sg * (z[1] - z[0]);
    d[1] = r * z[0] - z[1] - z[0] * z[2];
    d[2] = z[0] * z[1] - b * z[2];
    d[3] = sg * (z[4] - z[3]) + c * (z[0] - z[3]);
    d[4] = r * z[3] - z[4] - z[3] * z[5];
    d[5] = z[3] * z[4] - b * z[5];
  };

  out.invariant.p = 3;
  out.invariant.m = 6;
  out.invariant.eval_I = [](const Vec& z) {
    return Vec{z[0] - z[3], z[1] - z[4], z[2] - z[5]};
  };
  out.invariant.eval_J = [](const Vec& z) { return Vec{z[3], z[4], z[5]}; };
  out.invariant.eval_L = [sg, r, b, c](const Vec& z) {
    const double I1 = z[0] - z[3], I2 = z[1] - z[4], I3 = z[2] - z[5];
    const double J1 = z[3], J2 = z[4], J3 = z[5];
    Matrix L(3, 3);
    L(0, 0) = -sg - c;            L(0, 1) = sg;                 L(0, 2) = 0.0;
    L(1, 0) = r - J3 - 0.5 * I3;  L(1, 1) = -1.0;               L(1, 2) = -J1 - 0.5 * I1;
    L(2, 0) = J2 + 0.5 * I2;      L(2, 1) = J1 + 0.5 * I1;      L(2, 2) = -b;
    return L;
  };
  out.invariant.field = out.field;

  out.on_surface.p = 3;
  out.on_surface.q = 3;
  out.on_surface.constant_L_S = false;
  out.on_surface.eval_L_S = [sg, r, b, c](const Vec& J) {
    Matrix L(3, 3);
    L(0, 0) = -sg - c;  L(0, 1) = sg;    L(0, 2) = 0.0;
    L(1, 0) = r - J[2]; L(1, 1) = -1.0;  L(1, 2) = -J[0];
    L(2, 0) = J[1];     L(2, 1) = J[0];  L(2, 2) = -b;
    return L;
  };
  out.on_surface.eval_H_S = [eval_L = out.on_surface.eval_L_S](const Vec& J) {
    return symmetric_part(eval_L(J));
  };
  out.on_surface.eval_P_S = [sg, r, b](const Vec& J) {
    return Vec{sg * (J[1] - J[0]), r * J[0] - J[1] - J[0] * J[2], J[0] * J[1] - b * J[2]};
  };

  out.default_initial = StateVector{0.0, Vec{3.0, 3.0, 3.0, 10.0, 10.0, 10.0}};
  return out;
}

// SEIR in proportions with a decoupled vaccinated pool: state (V, S, E, I, R),
// total N conserved by the flow (computed, never substituted). The infected
// pair (E, I) is the semi-invariant; the disease-free surface is {E = I = 0},
// on which S freezes, so the on-surface factor is constant in time.
inline SystemPreset seir_preset(const SeirParams& P = {}) {
  const double rho = P.rho, sg = P.sigma, ga = P.gamma;

  SystemPreset out;
  out.field.dimension = 5;
  out.field.name = "seir";
  out.field.eval = [rho, sg, ga](const Vec& u, Vec& d) {
    const double N = u[0] + u[1] + u[2] + u[3] + u[4];
    const double infection = rho * u[1] * u[3] / N;
    const double incubation = sg * u[2];
    const double recovery = ga * u[3];
    d[0] = 0.0;
    d[1] = -infection;
    d[2] = infection - incubation;
    d[3] = incubation - recovery;
    d[4] = recovery;
  };

  out.invariant.p = 2;
  out.invariant.m = 5;
  out.invariant.eval_I = [](const Vec& u) { return Vec{u[2], u[3]}; };
  out.invariant.eval_J = [](const Vec& u) { return Vec{u[1], u[0], u[4]}; };  // (S, V, R)
  out.invariant.eval_L = [rho, sg, ga](const Vec& u) {
    const double N = u[0] + u[1] + u[2] + u[3] + u[4];
    Matrix L(2, 2);
    L(0, 0) = -sg;  L(0, 1) = rho * u[1] / N;
    L(1, 0) = sg;   L(1, 1) = -ga;
    return L;
  };
  out.invariant.field = out.field;

  out.on_surface.p = 2;
  out.on_surface.q = 3;
  out.on_surface.constant_L_S = true;  // S is frozen on the disease-free surface
  out.on_surface.eval_L_S = [rho, sg, ga](const Vec& J) {
    const double N = J[0] + J[1] + J[2];
    Matrix L(2, 2);
    L(0, 0) = -sg;  L(0, 1) = rho * J[0] / N;
    L(1, 0) = sg;   L(1, 1) = -ga;
    return L;
  };
  out.on_surface.eval_H_S = [eval_L = out.on_surface.eval_L_S](const Vec& J) {
    return symmetric_part(eval_L(J));
  };
  out.on_surface.eval_P_S = [](const Vec&) { return Vec{0.0, 0.0, 0.0}; };

  const double v0 = 0.3, i0 = 2e-4;
  out.default_initial = StateVector{0.0, Vec{v0, 1.0 - v0 - i0, 0.0, i0, 0.0}};
  return out;
}

}  // namespace invsteer
