#include <cmath>
#include <random>

#include "doctest.h"
#include "pnrs/penrose.hpp"

using namespace pnrs;

TEST_CASE("compactification round-trips random physical points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(-4.0, 4.0), ur(0.05, 6.0), ua(0.3, pi - 0.3);
  for (int i = 0; i < 50; ++i) {
    const Vec4d x(ut(rng), ur(rng), ua(rng), ua(rng));
    const Vec4d X = penrose_forward<double>(x);
    CHECK(std::abs(X[0] + X[1]) < pi);
    CHECK(std::abs(X[0] - X[1]) < pi);
    CHECK((penrose_inverse(X) - x).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("conformal factors are consistent across the map") {
  // omega_cyl(forward(x)) = 2 cos(p/2) cos(q/2) with p, q the compactified
  // null coordinates; against omega_phys it carries the Jacobian scale.
  const Vec4d x(0.7, 1.3, 1.1, 0.4);
  const Vec4d X = penrose_forward<double>(x);
  CHECK(std::abs(omega_cyl(X) - 2.0 * std::cos(0.5 * (X[0] + X[1])) * std::cos(0.5 * (X[0] - X[1]))) < 1e-12);
  CHECK(omega_cyl(X) > 0.0);
  CHECK(omega_phys(x) > 0.0);
  CHECK(std::abs(omega_cyl(Vec4d(0.0, 0.0, 0.0, 0.0)) - 2.0) < 1e-15);
}

TEST_CASE("boundary classifier separates interior from the null boundaries") {
  CHECK(classify_boundary(penrose_forward<double>(Vec4d(0.2, 1.0, 1.0, 1.0))) == BoundaryClass::Interior);
  // p = pi is future null infinity, q = -pi the past one.
  CHECK(to_string(classify_boundary(Vec4d(1.0, pi - 1.0, 1.0, 0.0))) != to_string(BoundaryClass::Interior));
  CHECK(classify_boundary(Vec4d(1.0, pi - 1.0, 1.0, 0.0)) != classify_boundary(Vec4d(-1.0, pi - 1.0, 1.0, 0.0)));
}

TEST_CASE("pullback of the compactified metric matches the rescaled flat one") {
  const MetricSpec phys = metric_from_key("minkowski-spherical");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ut(-2.5, 2.5), ur(0.2, 4.0), ua(0.4, pi - 0.4);
  double worst_analytic = 0.0;
  for (int i = 0; i < 25; ++i) {
    const Vec4d x(ut(rng), ur(rng), ua(rng), ua(rng));
    worst_analytic = std::max(worst_analytic, conformal_isometry_residual(phys, x, true));
  }
  CHECK(worst_analytic < 1e-10);

  // FD Jacobians converge to the analytic residual at second order.
  const Vec4d x0(0.9, 1.7, 1.2, 0.5);
  const double r1 = conformal_isometry_residual(phys, x0, false, 4e-4);
  const double r2 = conformal_isometry_residual(phys, x0, false, 2e-4);
  CHECK(r1 / std::max(r2, 1e-300) > 3.0);
}

TEST_CASE("transformed coefficients live strictly inside the diamond") {
  PhysicalCoefficients pc;
  pc.kappa = 4;
  pc.a = constant_field(2.0);
  pc.d = constant_field(0.5);
  const MetricSpec phys = metric_from_key("minkowski-spherical");
  const CoefficientFields c = transform_coefficients(pc, phys, compactified_metric(phys));

  // Inside: A = a * omega^(kappa-3) for constant physical a.
  const Vec4d in(0.3, 1.0, 1.2, 0.4);
  CHECK(std::abs(c.A(in) - 2.0 * omega_cyl(in)) < 1e-12);
  CHECK(std::abs(c.D(in) - 0.5 / (omega_cyl(in) * omega_cyl(in))) < 1e-12);

  // Outside the diamond both vanish identically: before past null infinity
  // and beyond the future one.
  CHECK(c.A(Vec4d(-1.8, 2.0, 1.0, 0.0)) == 0.0);  // q < -pi
  CHECK(c.A(Vec4d(1.8, 2.0, 1.0, 0.0)) == 0.0);   // p > pi
  CHECK(c.D(Vec4d(-1.8, 2.0, 1.0, 0.0)) == 0.0);

  // The curvature potential of the flat pair is one.
  CHECK(std::abs(c.B(in) - 1.0) < 1e-3);
  CHECK(c.B(Vec4d(1.8, 2.0, 1.0, 0.0)) == 1.0);
}

TEST_CASE("field push and pull invert each other") {
  std::vector<FieldSample> phys;
  phys.push_back({Vec4d(0.4, 1.2, 1.0, 0.3), 0.7});
  phys.push_back({Vec4d(-1.0, 2.4, 0.8, 1.1), -0.2});
  const std::vector<FieldSample> back = field_pull(field_push(phys));
  for (size_t i = 0; i < phys.size(); ++i) {
    CHECK((back[i].x - phys[i].x).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(back[i].value - phys[i].value) < 1e-12);
  }
}

TEST_CASE("conformal time of the dust scale factor") {
  // sigma = t^(2/3), tau(t) = 3 (t^(1/3) - 1): tau(8) = 3.
  const auto eds = flrw_sigma("eds");
  CHECK(std::abs(flrw_conformal_time(eds, 8.0) - 3.0) < 1e-8);
  CHECK(std::abs(flrw_conformal_time(eds, 1.0)) < 1e-12);
  // sigma = t: tau(t) = log t.
  CHECK(std::abs(flrw_conformal_time(flrw_sigma("lin"), std::exp(1.0)) - 1.0) < 1e-8);
}

TEST_CASE("horizon classification of the three reference scale factors") {
  const FlrwReport eds = flrw_classify(flrw_sigma("eds"), 8.0);
  CHECK(eds.future_diverges);
  CHECK_FALSE(eds.near0_bounded);
  CHECK_FALSE(eds.no_horizons);

  const FlrwReport lin = flrw_classify(flrw_sigma("lin"), 8.0);
  CHECK(lin.future_diverges);
  CHECK(lin.near0_bounded);
  CHECK(lin.no_horizons);

  const FlrwReport exp = flrw_classify(flrw_sigma("exp"), 8.0);
  CHECK_FALSE(exp.future_diverges);
  CHECK_FALSE(exp.no_horizons);
}
