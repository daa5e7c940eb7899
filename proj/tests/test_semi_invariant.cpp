#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "invsteer/semi_invariant.hpp"
#include "invsteer/systems.hpp"

using namespace invsteer;

namespace {

// Identity semi-invariant in the plane with a configurable constant L.
SemiInvariantSpec plane_spec(double l00, double l01, double l10, double l11) {
  SemiInvariantSpec s;
  s.p = 2;
  s.m = 2;
  s.eval_I = [](const Vec& x) { return x; };
  s.eval_L = [=](const Vec&) {
    Matrix L(2, 2);
    L(0, 0) = l00;
    L(0, 1) = l01;
    L(1, 0) = l10;
    L(1, 1) = l11;
    return L;
  };
  s.field = {2,
             [=](const Vec& x, Vec& d) {
               d[0] = l00 * x[0] + l01 * x[1];
               d[1] = l10 * x[0] + l11 * x[1];
             },
             "plane"};
  return s;
}

}  // namespace

TEST_CASE("H is the symmetric part of L") {
  SECTION("strictly upper L") {
    const auto spec = plane_spec(0.0, 2.0, 0.0, 0.0);
    const Matrix H = eval_H(spec, StateVector{0.0, {1.0, 1.0}});
    CHECK(H(0, 0) == 0.0);
    CHECK(H(0, 1) == 1.0);
    CHECK(H(1, 0) == 1.0);
    CHECK(H(1, 1) == 0.0);
  }
  SECTION("symmetric L is returned as is") {
    const auto spec = plane_spec(-1.0, 0.5, 0.5, -2.0);
    const Matrix H = eval_H(spec, StateVector{0.0, {1.0, 1.0}});
    CHECK(H(0, 0) == -1.0);
    CHECK(H(0, 1) == 0.5);
    CHECK(H(1, 0) == 0.5);
    CHECK(H(1, 1) == -2.0);
  }
  SECTION("epidemic preset at S = 0.5") {
    const SeirParams pr;
    const SystemPreset sys = seir_preset(pr);
    // State (V, S, E, I, R) with N = 1 and S = 0.5.
    const StateVector s{0.0, {0.2, 0.5, 0.1, 0.1, 0.1}};
    const Matrix H = eval_H(sys.invariant, s);
    CHECK(H(0, 0) == -pr.sigma);
    CHECK(H(1, 1) == -pr.gamma);
    const double off = (pr.sigma + pr.rho * 0.5) / 2.0;
    CHECK(H(0, 1) == Catch::Approx(off).epsilon(1e-15));
    CHECK(H(0, 1) == H(1, 0));
  }
}

TEST_CASE("decomposition") {
  const auto spec = plane_spec(0.0, 0.0, 0.0, 0.0);
  SECTION("3-4-5") {
    const Decomposition d = decompose(spec, StateVector{0.0, {3.0, 4.0}});
    CHECK(d.norm_I == 5.0);
    REQUIRE(d.versor_defined);
    CHECK(d.versor[0] == Catch::Approx(0.6).epsilon(1e-15));
    CHECK(d.versor[1] == Catch::Approx(0.8).epsilon(1e-15));
    // Reconstruction and unit-norm invariants.
    CHECK(d.versor[0] * d.norm_I == Catch::Approx(d.I[0]).epsilon(1e-14));
    CHECK(euclidean_norm(d.versor) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("on-surface state has no versor") {
    const Decomposition d = decompose(spec, StateVector{0.0, {0.0, 0.0}});
    CHECK(d.norm_I == 0.0);
    CHECK_FALSE(d.versor_defined);
  }
  SECTION("paired chaotic flows, separation of the bundled start") {
    const SystemPreset sys = coupled_lorenz_preset(CoupledLorenzParams{});
    const Decomposition d =
        decompose(sys.invariant, StateVector{0.0, {3.0, 3.0, 3.0, 10.0, 10.0, 10.0}});
    REQUIRE(d.I.size() == 3);
    for (double c : d.I) CHECK(c == -7.0);
    CHECK(d.norm_I == Catch::Approx(7.0 * std::sqrt(3.0)).epsilon(1e-15));
    REQUIRE(d.J.size() == 3);
    for (double c : d.J) CHECK(c == 10.0);
  }
}

TEST_CASE("quadratic form") {
  SECTION("identity H gives 1 for any unit vector") {
    const auto spec = plane_spec(1.0, 0.0, 0.0, 1.0);
    CHECK(quadratic_form(spec, StateVector{0.0, {0.3, -0.7}}) == Catch::Approx(1.0).margin(1e-15));
  }
  SECTION("eigendirection picks out the eigenvalue") {
    const auto spec = plane_spec(-1.0, 0.0, 0.0, -2.0);
    CHECK(quadratic_form(spec, StateVector{0.0, {5.0, 0.0}}) == -1.0);
  }
  SECTION("chaotic-flow preset along the first axis") {
    const SystemPreset sys = lorenz_preset(LorenzParams{});
    CHECK(quadratic_form(sys.invariant, StateVector{0.0, {1.0, 0.0, 0.0}}) == -10.0);
  }
  SECTION("undefined on the surface") {
    const auto spec = plane_spec(1.0, 0.0, 0.0, 1.0);
    CHECK_THROWS_AS(quadratic_form(spec, StateVector{0.0, {0.0, 0.0}}), std::domain_error);
  }
}

TEST_CASE("free-growth exponent via log ratio") {
  CHECK(beta_via_logratio(1.0, std::exp(1.0)) == Catch::Approx(1.0).margin(1e-15));
  CHECK(beta_via_logratio(std::exp(1.0), 1.0) == Catch::Approx(-1.0).margin(1e-15));
  CHECK(beta_via_logratio(2.0, 2.0) == 0.0);
  CHECK_THROWS_AS(beta_via_logratio(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(beta_via_logratio(1.0, 0.0), std::domain_error);
}

TEST_CASE("free-growth exponent via quadrature") {
  SECTION("constant integrand") {
    const auto spec = plane_spec(-2.0, 0.0, 0.0, -2.0);  // <i, H i> = -2 for every i
    std::vector<StateVector> seg;
    for (int k = 0; k <= 10; ++k) seg.push_back(StateVector{0.05 * k, {1.0, 0.5}});
    CHECK(beta_via_quadrature(seg, spec) == Catch::Approx(-1.0).margin(1e-12));
  }
  SECTION("segments shorter than two samples integrate to zero") {
    const auto spec = plane_spec(-2.0, 0.0, 0.0, -2.0);
    CHECK(beta_via_quadrature({}, spec) == 0.0);
    CHECK(beta_via_quadrature({StateVector{0.0, {1.0, 0.0}}}, spec) == 0.0);
  }
}

TEST_CASE("impulse record bookkeeping") {
  SECTION("direct substitution") {
    const ImpulseRecord r = make_impulse_record(1, 0.0, 0.1, 1.0, std::exp(0.5), -1.0);
    CHECK(r.beta_n == Catch::Approx(0.5).margin(1e-15));
    CHECK(r.B_n == Catch::Approx(-0.5).margin(1e-15));
    CHECK(r.norm_after == Catch::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(r.delta_n == Catch::Approx(0.1).margin(1e-18));
    // Stored-identity invariants: exact by construction.
    CHECK(r.B_n == r.A_n + r.beta_n);
    CHECK(r.norm_after == r.norm_before * std::exp(r.A_n));
  }
  SECTION("no-op impulse keeps the norm") {
    const ImpulseRecord r = make_impulse_record(2, 0.1, 0.3, 2.0, 3.0, 0.0);
    CHECK(r.norm_after == 3.0);
    CHECK(r.B_n == r.beta_n);
  }
  SECTION("recurrence: norm_after = previous norm_after * exp(B_n)") {
    double prev = 1.7;
    double telescoped = std::log(prev);
    for (int n = 1; n <= 20; ++n) {
      const double minus = prev * std::exp(0.05 * n);  // arbitrary growth
      const double A = -0.05 * n - 0.01;
      const ImpulseRecord r = make_impulse_record(n, 0.0, 0.1 * n, prev, minus, A);
      CHECK(std::fabs(r.norm_after - prev * std::exp(r.B_n)) <= 1e-12 * r.norm_after);
      telescoped += r.B_n;
      prev = r.norm_after;
    }
    CHECK(std::fabs(std::log(prev) - telescoped) <= 1e-10);
  }
}

namespace {

// Max residual of the defining property dI/dt = L(x) I(x) along a trajectory,
// with centered finite differences at the sample grid.
double semi_invariance_residual(const SystemPreset& sys, const StateVector& start, double t_end,
                                double dt) {
  const auto samples = integrate_segment(sys.field, start, t_end, dt, 1);
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < samples.size(); ++k) {
    const Vec Im = sys.invariant.eval_I(samples[k - 1].x);
    const Vec Ip = sys.invariant.eval_I(samples[k + 1].x);
    const Vec Ik = sys.invariant.eval_I(samples[k].x);
    const Vec LI = mat_vec(sys.invariant.eval_L(samples[k].x), Ik);
    const double h = samples[k + 1].t - samples[k - 1].t;
    for (std::size_t i = 0; i < Ik.size(); ++i)
      worst = std::max(worst, std::fabs((Ip[i] - Im[i]) / h - LI[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("defining property holds along trajectories, at difference order") {
  struct Case {
    SystemPreset sys;
    StateVector start;
    double t_end;
    double scale;  // magnitude of I over the window, for a relative budget
  };
  const std::vector<Case> cases = {
      {lorenz_preset(LorenzParams{}), StateVector{0.0, {1.0, 1.0, 1.0}}, 1.0, 20.0},
      {coupled_lorenz_preset(CoupledLorenzParams{LorenzParams{}, 5.0}),
       StateVector{0.0, {3.0, 3.0, 3.0, 10.0, 10.0, 10.0}}, 1.0, 30.0},
      {seir_preset(SeirParams{}), StateVector{0.0, {0.3, 0.6998, 0.0, 2e-4, 0.0}}, 0.5, 1.0},
  };
  for (const auto& c : cases) {
    const double r1 = semi_invariance_residual(c.sys, c.start, c.t_end, 1e-3);
    const double r2 = semi_invariance_residual(c.sys, c.start, c.t_end, 5e-4);
    INFO(c.sys.field.name);
    // The residual is centered-difference truncation, h^2 |I'''| / 6; the
    // chaotic flows reach |I'''| ~ 2e5, so a few e-2 at h = 1e-3 is honest.
    CHECK(r1 <= 5e-3 * c.scale);
    CHECK(r2 <= r1 / 3.5 + 1e-14);  // second-order in the step
  }
}

TEST_CASE("states on the surface stay there") {
  SECTION("paired flows started synchronized stay synchronized bit-exactly") {
    const SystemPreset sys = coupled_lorenz_preset(CoupledLorenzParams{LorenzParams{}, 5.0});
    const auto samples = integrate_segment(
        sys.field, StateVector{0.0, {3.0, 3.0, 3.0, 3.0, 3.0, 3.0}}, 10.0, 1e-3, 100);
    for (const auto& s : samples) {
      const Vec I = sys.invariant.eval_I(s.x);
      for (double c : I) CHECK(c == 0.0);
    }
  }
  SECTION("disease-free epidemic stays disease-free bit-exactly") {
    const SystemPreset sys = seir_preset(SeirParams{});
    const auto samples = integrate_segment(
        sys.field, StateVector{0.0, {0.3, 0.7, 0.0, 0.0, 0.0}}, 10.0, 1e-3, 100);
    for (const auto& s : samples) {
      CHECK(s.x[2] == 0.0);
      CHECK(s.x[3] == 0.0);
    }
  }
}
