#include <cmath>

#include "doctest.h"
#include "pnrs/scattering.hpp"

using namespace pnrs;

namespace {

// C^2 bump with exact support (lo, hi).
RadialTrace bump_trace(double lo, double hi, double amp) {
  RadialTrace h;
  h.lo = lo;
  h.hi = hi;
  h.value = [lo, hi, amp](double T) {
    const double z = (2.0 * T - lo - hi) / (hi - lo);
    return z * z < 1.0 ? amp * smoothstep5(1.0 - z * z) : 0.0;
  };
  return h;
}

double bump2(double x, double lo, double hi) {
  const double z = (2.0 * x - lo - hi) / (hi - lo);
  return z * z < 1.0 ? smoothstep5(1.0 - z * z) : 0.0;
}

// Plateau with smooth ramps: more interaction mass than a centered bump, so
// the quartic signal converges at moderate resolution.
double plateau(double x, double lo, double hi, double ramp = 0.3) {
  return smoothstep5((x - lo) / ramp) * smoothstep5((hi - x) / ramp);
}

// Product bump supported in a (p, q) rectangle inside K_n, written as a
// spacetime source.
SourceTerm region_bump(double p_lo, double p_hi, double q_lo, double q_hi, double amp) {
  SourceTerm src;
  src.f = [=](const Vec4d& x) {
    const double p = x[0] + x[1], q = x[0] - x[1];
    return amp * bump2(p, p_lo, p_hi) * bump2(q, q_lo, q_hi);
  };
  src.t_lo = 0.5 * (p_lo + q_lo);
  src.t_hi = 0.5 * (p_hi + q_hi);
  src.region_id = "test-band";
  return src;
}

CoefficientFields diamond_coeffs(double a) {
  PhysicalCoefficients pc;
  pc.kappa = 4;
  pc.a = constant_field(a);
  const MetricSpec phys = metric_from_key("minkowski-spherical");
  CoefficientFields c = transform_coefficients(pc, phys, compactified_metric(phys));
  c.B = constant_field(1.0);
  return c;
}

}  // namespace

TEST_CASE("gate cap radius closed form") {
  CHECK(std::abs(cap_radius_of_gate(-pi / 4) - 1.0) < 1e-12);
  CHECK(std::abs(cap_radius_of_gate(-pi / 3) - 1.0 / std::sqrt(3.0)) < 1e-12);
  CHECK(cap_radius_of_gate(-1.6) == 0.0);
  CHECK(cap_radius_of_gate(0.3) == 0.0);
}

TEST_CASE("concentration check against the flow-out window") {
  const RadialTrace h = bump_trace(-2.0, -1.0, 1.0);

  ConcentrationVerdict v = concentrated_family_check(h, -0.7);
  CHECK(v.member);
  CHECK(std::abs(v.window_lo - (-pi + 0.7)) < 1e-12);
  CHECK(std::abs(v.window_hi - (-0.7)) < 1e-12);
  CHECK(v.support_lo == -2.0);

  // Window floor rises above the support.
  CHECK_FALSE(concentrated_family_check(h, -1.2).member);
  // Gate behind the t = 0 cell: empty cap, nothing is concentrated.
  CHECK_FALSE(concentrated_family_check(h, -1.6).member);
  // An empty trace is vacuously a member.
  RadialTrace zero;
  CHECK(concentrated_family_check(zero, -0.7).member);
  CHECK(concentrated_family_check(RadiationFieldData{}, -0.7).member);
}

TEST_CASE("free wave reproduces its incoming trace and solves the equation") {
  FreeWave wave;
  wave.G = bump_trace(-2.0, -1.0, 0.8);

  // On the past generator R = T + pi the closed form collapses to G itself.
  for (double T : {-1.8, -1.5, -1.2}) {
    CHECK(std::abs(wave.value(T, T + pi) - wave.G(T)) < 1e-10);
  }
  // 2pi periodicity of the profile.
  CHECK(std::abs(wave.phi(0.7) - wave.phi(0.7 + 2.0 * pi)) < 1e-12);
  // dphi agrees with a finite difference of phi.
  const double xi = -1.3, fd = (wave.phi(xi + 1e-5) - wave.phi(xi - 1e-5)) / 2e-5;
  CHECK(std::abs(wave.dphi(xi) - fd) < 1e-4);

  // Interior residual of dTT - dRR - 2 cot R dR + 1 under central stencils.
  const double h = 1e-3;
  for (double T : {-0.9, -0.2}) {
    for (double R : {0.9, 1.7}) {
      const double uTT = (wave.value(T + h, R) - 2.0 * wave.value(T, R) + wave.value(T - h, R)) / (h * h);
      const double uRR = (wave.value(T, R + h) - 2.0 * wave.value(T, R) + wave.value(T, R - h)) / (h * h);
      const double uR = (wave.value(T, R + h) - wave.value(T, R - h)) / (2.0 * h);
      const double res = uTT - uRR - 2.0 * std::cos(R) / std::sin(R) * uR + wave.value(T, R);
      CHECK(std::abs(res) < 1e-4);
    }
  }
}

TEST_CASE("cutoff source lives in the transition band") {
  FreeWave wave;
  wave.G = bump_trace(-2.0, -1.0, 0.8);
  const CutoffSpec cut = CutoffSpec::for_region(3);
  const SourceTerm src = goursat_source(wave, cut);
  REQUIRE(src.f);

  const auto at_pq = [&](double p, double q) {
    return src.f(Vec4d(0.5 * (p + q), 0.5 * (p - q), pi / 2, 0.0));
  };
  // Dead above and below the q band.
  CHECK(at_pq(0.2, -pi - 0.8) == 0.0);
  CHECK(at_pq(0.2, -pi - 0.1) == 0.0);
  // Alive inside band x trace p window (p = 2T + pi, T in supp G).
  CHECK(std::abs(at_pq(2.0 * -1.5 + pi, -pi - 0.5)) > 1e-3);
  // Matches the closed form.
  const double p = 2.0 * -1.4 + pi, q = -pi - 0.45, R = 0.5 * (p - q);
  CHECK(std::abs(at_pq(p, q) - 4.0 * cut.dzeta(q) * wave.dphi(p) / std::sin(R)) < 1e-12);
}

TEST_CASE("continuation beyond future null infinity extends the free wave") {
  FreeWave wave;
  wave.G = bump_trace(-2.0, -1.0, 0.8);
  // Free outgoing trace: h_plus(s) = -G(s - pi).
  RadialTrace h_plus;
  h_plus.lo = wave.G.lo + pi;
  h_plus.hi = wave.G.hi + pi;
  h_plus.value = [&wave](double s) { return -wave.G(s - pi); };

  for (double T : {1.9, 2.3}) {
    for (double R : {1.0, 1.6, 2.2}) {
      if (T + R <= pi + 0.05) continue;  // only beyond the boundary
      CHECK(std::abs(nplus_field(h_plus, T, R) - wave.value(T, R)) < 1e-10);
    }
  }
}

TEST_CASE("goursat data scales linearly and samples stably") {
  const CutoffSpec cut = CutoffSpec::for_region(3);
  double ratio[2];
  for (int i = 0; i < 2; ++i) {
    const double amp = i == 0 ? 0.5 : 1.0;
    FreeWave wave;
    wave.G = bump_trace(-1.8, -1.0, amp);
    const SourceTerm src = goursat_source(wave, cut);
    ratio[i] = source_norm(src, 2) / trace_sobolev(wave.G, 2);
  }
  CHECK(std::abs(ratio[0] - ratio[1]) < 1e-9 * ratio[1]);

  FreeWave wave;
  wave.G = bump_trace(-1.8, -1.0, 1.0);
  const SourceTerm src = goursat_source(wave, cut);
  const double n200 = source_norm(src, 2, 200), n320 = source_norm(src, 2, 320);
  CHECK(std::abs(n200 - n320) < 0.2 * n320);
}

TEST_CASE("functional refusal ladder") {
  GoursatSetup setup;
  ScatteringRequest req;
  req.epsilon = 1e6;

  SUBCASE("gate out of range") {
    req.t1 = 0.2;
    const ScatterOutcome out = scattering_functional(req, bump_trace(-1.2, -0.6, 0.5), setup);
    CHECK_FALSE(out.accepted);
    CHECK(out.refusal.find("gate") != std::string::npos);
  }
  SUBCASE("unconcentrated trace") {
    req.t1 = -1.2;  // window floor -1.94 < support works, cap -1.2 cuts the tail
    const ScatterOutcome out = scattering_functional(req, bump_trace(-1.3, -0.7, 0.5), setup);
    CHECK_FALSE(out.accepted);
    CHECK(out.refusal.find("not contained") != std::string::npos);
  }
  SUBCASE("support below the band reach") {
    req.t1 = -0.3;
    const ScatterOutcome out = scattering_functional(req, bump_trace(-1.55, -0.7, 0.5), setup);
    CHECK_FALSE(out.accepted);
    CHECK(out.refusal.find("not reachable") != std::string::npos);
  }
  SUBCASE("support above the band reach") {
    req.t1 = -0.25;
    const ScatterOutcome out = scattering_functional(req, bump_trace(-1.2, -0.3, 0.5), setup);
    CHECK_FALSE(out.accepted);
    CHECK(out.refusal.find("not reachable") != std::string::npos);
  }
  SUBCASE("budget exceeded") {
    req.t1 = -0.4;
    req.epsilon = 1e-6;
    const ScatterOutcome out = scattering_functional(req, bump_trace(-1.2, -0.6, 0.5), setup);
    CHECK_FALSE(out.accepted);
    CHECK(out.refusal.find("budget") != std::string::npos);
  }
}

TEST_CASE("accepted evaluation transports the trace to the antipode") {
  const RadialTrace h = bump_trace(-1.3, -0.5, 0.5);
  GoursatSetup setup;
  ScatteringRequest req;
  req.t1 = -0.4;
  req.q_T = 2.2;
  req.epsilon = 2.0 * trace_sobolev(h, 2);

  const ScatterOutcome out = scattering_functional(req, h, setup);
  REQUIRE(out.accepted);
  CHECK(out.h_norm == doctest::Approx(trace_sobolev(h, 2)).epsilon(1e-12));
  // Free flow: h_plus(s) = -h_minus(s - pi) up to the scheme error.
  CHECK(std::abs(out.value + h(req.q_T - pi)) < 0.02);
  CHECK(std::abs(out.value) > 0.05);
  // The outgoing pulse peaks one crossing time after the incoming one. (The
  // cutoff band also radiates a weak stripe, so the measured support is wide;
  // the peak location is the robust statistic.)
  double best = 0.0, arg = 0.0;
  for (double s = 0.05; s < pi - 0.05; s += 0.01) {
    const double v = std::abs(out.h_plus.value_at(s));
    if (v > best) {
      best = v;
      arg = s;
    }
  }
  CHECK(arg > h.lo + pi - 0.1);
  CHECK(arg < h.hi + pi + 0.1);
}

TEST_CASE("blowup inside the functional is refused, not propagated") {
  const RadialTrace h = bump_trace(-1.3, -0.5, 2.0);
  GoursatSetup setup;
  setup.coeffs.A = constant_field(-200.0);
  setup.solve.blowup_guard = 1e4;
  ScatteringRequest req;
  req.t1 = -0.4;
  req.epsilon = 1e6;

  const ScatterOutcome out = scattering_functional(req, h, setup);
  CHECK_FALSE(out.accepted);
  CHECK(out.refusal.find("blew up") != std::string::npos);
}

TEST_CASE("observation samples respect the corner clearances") {
  const double t_plus = 2.0;
  const std::vector<Vec4d> pts = observation_points(t_plus);
  REQUIRE(pts.size() > 300);
  for (const Vec4d& x : pts) {
    const double p = x[0] + x[1], q = x[0] - x[1];
    CHECK(p - pi > 0.9 - 1e-12);
    CHECK(q + pi > 0.9 - 1e-12);
    CHECK(q < t_plus - pi);
    CHECK(p < pi + t_plus);
    CHECK(x[1] > 0.0);
    CHECK(x[1] < pi);
  }
  CHECK(observation_points(0.9).empty());
}

TEST_CASE("direct map validates its inputs") {
  const SourceRegion region;
  GridSpec g;
  g.mode = GridMode::Radial;
  g.n_r = 96;
  const SourceTerm good = region_bump(0.6, 1.6, -5.4, -4.4, 0.1);

  CHECK_THROWS_AS(source_to_solution(region, good, 3.5, {}, g), std::invalid_argument);
  CHECK_THROWS_AS(source_to_solution(region, good, -0.2, {}, g), std::invalid_argument);

  // Support pokes past the p ceiling of K_3 while staying on the physical
  // strip, so the spot-check can see it.
  const SourceTerm leaky = region_bump(2.85, 3.05, -3.3, -3.1, 0.1);
  CHECK_THROWS_AS(source_to_solution(region, leaky, 2.0, {}, g), std::invalid_argument);

  GridSpec short_g = g;
  short_g.t_max = 1.0;
  CHECK_THROWS_AS(source_to_solution(region, good, 2.0, {}, short_g), std::invalid_argument);

  CHECK_THROWS_AS(source_to_solution(region, good, 2.0, {}, g, {}, 1e-9), std::invalid_argument);
}

TEST_CASE("staged route agrees with the direct solve") {
  const SourceRegion region;
  // Wide K_3 window clear of the cutoff band on both null axes; the quartic
  // signal scales like amp^4, so a generous amplitude keeps it measurable.
  SourceTerm src = region_bump(0.46, 2.34, -5.83, -3.94, 0.8);
  src.f = [](const Vec4d& x) {
    const double p = x[0] + x[1], q = x[0] - x[1];
    return 0.8 * plateau(p, 0.46, 2.34) * plateau(q, -5.83, -3.94);
  };
  const double t_plus = 2.0;
  const CoefficientFields coeffs = diamond_coeffs(12.0);

  GoursatSetup setup;
  setup.n_r = 512;
  setup.cfl = 0.4;
  setup.coeffs = coeffs;
  const S2SStages st = scattering_to_s2s(region, src, t_plus, setup);
  CHECK(st.t1 > -pi / 2);
  CHECK(st.t1 < 0.0);
  CHECK(st.scatter.accepted);

  GridSpec g;
  g.mode = GridMode::Radial;
  g.n_r = 512;
  const S2SResult direct = source_to_solution(region, src, t_plus, coeffs, g);

  REQUIRE(direct.values.size() == st.result.values.size());
  REQUIRE(direct.l2 > 5e-6);
  const double gap = (direct.values - st.result.values).norm() / direct.values.norm();
  CHECK(gap < 0.25);
}
