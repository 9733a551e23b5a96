#include <cmath>

#include "doctest.h"
#include "pnrs/waves.hpp"

using namespace pnrs;

namespace {

GridSpec radial_grid(int n_r, double t_min, double t_max, double cfl = 0.45) {
  GridSpec g;
  g.mode = GridMode::Radial;
  g.n_r = n_r;
  g.t_min = t_min;
  g.t_max = t_max;
  g.cfl = cfl;
  return g;
}

// Compactly supported radial cap profile, C^2 at its edge.
double cap_bump(double R, double radius) {
  if (R >= radius) return 0.0;
  const double x = R / radius;
  return smoothstep5(1.0 - x * x);
}

}  // namespace

TEST_CASE("single sine mode evolves at its integer frequency") {
  GridSpec g = radial_grid(256, 0.0, pi);
  g.k_max = 32;
  CauchyData data;
  data.phi0 = [](const Vec4d& x) { return std::sin(2.0 * x[1]) / std::sin(x[1]); };
  data.phi1 = [](const Vec4d&) { return 0.0; };
  const SpectralSolution sol = solve_linear_spectral(g, data);

  CHECK(sol.truncation_energy < 1e-8);
  for (double T : {0.3, 1.7}) {
    for (double R : {0.6, 1.3, 2.5}) {
      CHECK(std::abs(sol.eval(T, R) - std::cos(2.0 * T) * std::sin(2.0 * R) / std::sin(R)) < 1e-8);
    }
  }
}

TEST_CASE("spectral flow is exactly 2pi periodic") {
  GridSpec g = radial_grid(384, 0.0, pi);
  g.k_max = 64;
  CauchyData data;
  data.phi0 = [](const Vec4d& x) { return std::exp(-std::pow((x[1] - 1.4) / 0.3, 2)); };
  data.phi1 = [](const Vec4d& x) { return 0.4 * std::sin(x[1]); };
  const SpectralSolution sol = solve_linear_spectral(g, data);

  double worst = 0.0;
  for (double T : {0.2, 0.9, 2.2, 3.0}) {
    for (double R : {0.5, 1.1, 1.9, 2.7}) {
      worst = std::max(worst, std::abs(sol.eval(T, R) - sol.eval(T + 2.0 * pi, R)));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("finite differences track the spectral solution") {
  GridSpec g = radial_grid(256, 0.0, 2.0);
  g.k_max = 128;
  CauchyData data;
  data.phi0 = [](const Vec4d& x) { return std::exp(-std::pow((x[1] - pi / 2) / 0.4, 2)); };
  data.phi1 = [](const Vec4d&) { return 0.0; };
  const SpectralSolution sol = solve_linear_spectral(g, data);

  const Trajectory traj = solve_semilinear(g, CoefficientFields{}, SourceTerm{}, &data);
  REQUIRE_FALSE(traj.blew_up);

  double err = 0.0, scale = 0.0;
  for (double R = 0.3; R < pi - 0.3; R += 0.17) {
    const double a = traj.value_at(1.5, R, pi / 2), b = sol.eval(1.5, R);
    err = std::max(err, std::abs(a - b));
    scale = std::max(scale, std::abs(b));
  }
  CHECK(scale > 0.05);
  CHECK(err < 5e-3 * scale);
}

TEST_CASE("cap data stays on its light shell") {
  GridSpec g = radial_grid(384, 0.0, pi);
  g.k_max = 128;
  const double cap = 0.35;
  CauchyData data;
  data.phi0 = [cap](const Vec4d& x) { return cap_bump(x[1], cap); };
  data.phi1 = [](const Vec4d&) { return 0.0; };
  const SpectralSolution sol = solve_linear_spectral(g, data);

  const HuygensReport rep = huygens_support_check(sol, g, cap, {0.8, 1.6, 2.4});
  CHECK(rep.max_outside_fraction < 1e-5);

  // The same data fed through the finite difference path leaks only at the
  // scheme's dispersive tail level.
  const Trajectory traj = solve_semilinear(g, CoefficientFields{}, SourceTerm{}, &data);
  const HuygensReport rep_fd = huygens_support_check(traj, cap);
  CHECK(rep_fd.max_outside_fraction < 5e-3);
}

TEST_CASE("shell distance folds pole reflections") {
  CHECK(shell_distance(1.0, 0.7, 0.2) == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(shell_distance(0.9, 0.7, 0.2) == doctest::Approx(0.0).epsilon(1e-9));
  // After reflecting at the far pole the shell comes back inward.
  const double T = pi + 0.4;  // shell center at R = pi - 0.4
  CHECK(shell_distance(pi - 0.4, T, 0.2) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("causal inverse is quiet before and outside the source cone") {
  GridSpec g = radial_grid(192, -0.5, 1.6);
  SourceTerm src;
  src.t_lo = -0.15;
  src.t_hi = 0.15;
  src.f = [](const Vec4d& x) {
    const auto q = [](double y) { return y < 1.0 ? smoothstep5(1.0 - y) : 0.0; };
    const double dt = x[0] / 0.15, dr = (x[1] - pi / 2) / 0.15;
    return q(dt * dt) * q(dr * dr);
  };
  const Trajectory traj = causal_inverse(g, {}, src);
  REQUIRE_FALSE(traj.blew_up);

  double peak = 0.0;
  for (double R = 0.2; R < pi - 0.2; R += 0.05)
    peak = std::max(peak, std::abs(traj.value_at(1.0, R, pi / 2)));
  CHECK(peak > 1e-6);

  // Before the source window the field vanishes identically.
  CHECK(traj.value_at(-0.35, pi / 2, pi / 2) == 0.0);
  // At T = 1.0 the cone from the window reaches |R - pi/2| <= 1.2 + O(h).
  const double outside = std::abs(traj.value_at(1.0, pi / 2 - 1.45, pi / 2));
  CHECK(outside < 1e-8 * peak);
}

TEST_CASE("probe series matches the stored slices where they coincide") {
  GridSpec g = radial_grid(128, 0.0, 1.0);
  CauchyData data;
  data.phi0 = [](const Vec4d& x) { return std::exp(-std::pow((x[1] - 1.3) / 0.3, 2)); };
  data.phi1 = [](const Vec4d&) { return 0.0; };
  SolveOptions opt;
  opt.probes = {Vec2d(1.3, pi / 2)};
  const Trajectory traj = solve_semilinear(g, CoefficientFields{}, SourceTerm{}, &data, opt);

  REQUIRE(traj.probes.size() == 1);
  const ProbeSeries& pr = traj.probes[0];
  CHECK(pr.where[0] == 1.3);
  CHECK(pr.t.size() >= traj.times.size());

  const double t_mid = traj.times[traj.times.size() / 2];
  double probe_val = 0.0;
  bool hit = false;
  for (size_t k = 0; k < pr.t.size(); ++k) {
    if (std::abs(pr.t[k] - t_mid) < 1e-12) {
      probe_val = pr.value[k];
      hit = true;
    }
  }
  REQUIRE(hit);
  CHECK(std::abs(probe_val - traj.value_at(t_mid, 1.3, pi / 2)) < 1e-12);
}

TEST_CASE("focusing power nonlinearity trips the blowup guard") {
  GridSpec g = radial_grid(96, 0.0, 3.0);
  CauchyData data;
  data.phi0 = [](const Vec4d& x) { return 5.0 * std::exp(-std::pow((x[1] - pi / 2) / 0.6, 2)); };
  data.phi1 = [](const Vec4d&) { return 0.0; };
  CoefficientFields coeffs;
  coeffs.A = constant_field(-10.0);
  coeffs.kappa = 4;
  SolveOptions opt;
  opt.blowup_guard = 1e3;
  const Trajectory traj = solve_semilinear(g, coeffs, SourceTerm{}, &data, opt);
  CHECK(traj.blew_up);
  CHECK(traj.blowup_time > 0.0);
  CHECK(traj.blowup_time < 3.0);
}

TEST_CASE("radiation fields of the free flow satisfy the antipodal relation") {
  GridSpec g = radial_grid(384, -pi, pi);
  g.k_max = 128;
  CauchyData data;
  data.T0 = 0.0;
  data.phi0 = [](const Vec4d& x) { return std::exp(-std::pow((x[1] - 1.2) / 0.25, 2)); };
  data.phi1 = [](const Vec4d& x) { return 0.3 * std::exp(-std::pow((x[1] - 1.8) / 0.3, 2)); };
  const SpectralSolution sol = solve_linear_spectral(g, data);

  const RadiationFieldData past = radiation_field_extract_spectral(sol, ScriSide::Past);
  const RadiationFieldData fut = radiation_field_extract_spectral(sol, ScriSide::Future);
  CHECK(past.l2() > 1e-3);

  double worst = 0.0, scale = 0.0;
  for (double s = 0.4; s < pi - 0.4; s += 0.13) {
    worst = std::max(worst, std::abs(fut.value_at(s) + past.value_at(s - pi)));
    scale = std::max(scale, std::abs(fut.value_at(s)));
  }
  CHECK(scale > 1e-3);
  CHECK(worst < 1e-6 * std::max(1.0, scale));
}

TEST_CASE("limit route recovers the profile of an outgoing spherical pulse") {
  // u = (chi(t - r) - chi(t + r)) / r solves the flat wave equation; its
  // forward radiation field is chi itself.
  const auto chi = [](double s) { return std::exp(-s * s); };
  const auto u_phys = [&chi](double t, double r) { return (chi(t - r) - chi(t + r)) / r; };

  std::vector<double> s_grid;
  for (double s = -2.0; s <= 2.0; s += 0.25) s_grid.push_back(s);
  const LimitRoute route = radiation_limit_route(u_phys, s_grid);

  REQUIRE(route.value.size() == s_grid.size());
  for (size_t i = 0; i < s_grid.size(); ++i) {
    CHECK(std::abs(route.value[i] - chi(s_grid[i])) < 1e-4);
  }
}
