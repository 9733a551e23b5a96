#include <cmath>

#include "doctest.h"
#include "pnrs/recovery.hpp"

using namespace pnrs;

namespace {

GridSpec arrival_grid() {
  GridSpec g;
  g.mode = GridMode::Axisymmetric;
  g.n_r = 96;
  g.n_theta = 48;
  return g;
}

std::vector<TimelikePath> six_observers() {
  const double pos[6][2] = {{1.0, 0.8}, {1.9, 1.0}, {1.2, 2.0},
                            {2.0, 2.2}, {0.8, 1.5}, {1.6, 0.6}};
  std::vector<TimelikePath> obs;
  for (int i = 0; i < 6; ++i)
    obs.push_back(static_worldline(i, pos[i][0], pos[i][1], 0.0, -1.0, 5.0));
  return obs;
}

ObservationSet exact_arrivals(const Vec4d& q, const std::vector<TimelikePath>& obs) {
  ObservationSet data;
  data.q = q;
  for (const auto& mu : obs) {
    Arrival a;
    a.observer_id = mu.id;
    a.parameter = q[0] + sphere_distance(q, mu.mu(0.0));
    data.arrivals.push_back(a);
  }
  return data;
}

}  // namespace

TEST_CASE("fast marching reproduces great circle distances") {
  const GridSpec g = arrival_grid();
  const Vec2d src(1.2, 1.0);
  const ArrayXXd fld = optical_distance_field(nullptr, g, src);

  double worst = 0.0;
  for (int i = 0; i < g.n_r; i += 5)
    for (int j = 0; j < g.n_theta; j += 3) {
      const Vec4d x(0.0, g.r_at(i), g.theta_at(j), 0.0);
      const double d = sphere_distance(Vec4d(0.0, src[0], src[1], 0.0), x);
      if (d > 2.6) continue;  // skip the focal region at the antipode
      worst = std::max(worst, std::abs(fld(i, j) - d));
    }
  CHECK(worst < 0.06);
}

TEST_CASE("arrival prediction is conformally invariant") {
  const GridSpec g = arrival_grid();
  const MetricSpec cyl = metric_from_key("cylinder");
  const MetricSpec conf = conformal_rescale(cyl, [](const Vec4d& x) {
    return 0.2 * std::sin(x[1]) * std::cos(x[2]);
  });
  const Vec4d q(0.3, 1.3, 1.2, 0.0), obs(0.0, 2.0, 2.2, 0.0);
  const double expect = 0.3 + sphere_distance(q, obs);
  CHECK(predict_arrival(cyl, g, q, obs) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(predict_arrival(conf, g, q, obs) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("lattice arrivals agree with the closed form away from perturbations") {
  const GridSpec g = arrival_grid();
  MetricSpec m = metric_from_key("cylinder");
  m.id = "cylinder/static-rr-bump";  // drop the product tag, forcing the eikonal path
  m.christoffel_analytic = {};

  const Vec4d q(0.0, 0.8, 0.8, 0.0), obs(0.0, 1.0, 0.8, 0.0);
  const double expect = sphere_distance(q, obs);
  CHECK(std::abs(predict_arrival(m, g, q, obs) - expect) < 0.02);
}

TEST_CASE("point recovery from exact arrivals is sharp") {
  const Vec4d q_true(0.3, 1.3, 1.2, 0.0);
  const MetricSpec m = metric_from_key("cylinder");
  RecoveryProblem pb;
  pb.data = exact_arrivals(q_true, six_observers());
  pb.metric = &m;
  pb.observers = six_observers();
  pb.grid = arrival_grid();

  const RecoveryResult res = recover_point(pb);
  CHECK(std::abs(res.q_hat[0] - q_true[0]) < 1e-5);
  CHECK(sphere_distance(res.q_hat, q_true) < 1e-5);
  CHECK(res.residual < 1e-6);
}

TEST_CASE("point recovery tolerates half-cell arrival noise") {
  const Vec4d q_true(0.3, 1.3, 1.2, 0.0);
  const MetricSpec m = metric_from_key("cylinder");
  RecoveryProblem pb;
  pb.data = exact_arrivals(q_true, six_observers());
  pb.metric = &m;
  pb.observers = six_observers();
  pb.grid = arrival_grid();
  const double h = pb.grid.h_r();
  for (size_t i = 0; i < pb.data.arrivals.size(); ++i)
    pb.data.arrivals[i].parameter += (i % 2 ? 0.5 : -0.5) * h;

  const RecoveryResult res = recover_point(pb);
  const double dt = res.q_hat[0] - q_true[0];
  const double dx = sphere_distance(res.q_hat, q_true);
  CHECK(std::sqrt(dt * dt + dx * dx) < 3.0 * h);
  CHECK(res.residual <= pb.accept);
}

TEST_CASE("recovery guards degenerate and unfittable data") {
  const Vec4d q_true(0.3, 1.3, 1.2, 0.0);
  const MetricSpec m = metric_from_key("cylinder");
  RecoveryProblem pb;
  pb.data = exact_arrivals(q_true, six_observers());
  pb.metric = &m;
  pb.observers = six_observers();
  pb.grid = arrival_grid();

  SUBCASE("fewer than four arrivals") {
    pb.data.arrivals.resize(3);
    CHECK_THROWS_AS(recover_point(pb), std::invalid_argument);
  }
  SUBCASE("inconsistent arrivals carry the best try") {
    for (size_t i = 0; i < pb.data.arrivals.size(); ++i)
      pb.data.arrivals[i].parameter += (i % 2 ? 1.5 : -1.5);
    bool caught = false;
    try {
      recover_point(pb);
    } catch (const NoFitError& e) {
      caught = true;
      CHECK(e.residual > pb.accept);
      CHECK(std::isfinite(e.best[0]));
    }
    CHECK(caught);
  }
}

TEST_CASE("metric comparison splits on shape but not on conformal factor") {
  const MetricSpec m1 = metric_from_key("cylinder");
  const MetricSpec m2 = conformal_rescale(m1, [](const Vec4d& x) {
    const double dr = x[1] - pi / 2, dth = x[2] - pi / 2;
    return 0.1 * std::exp(-(dr * dr + dth * dth) / 0.5);
  });
  MetricSpec m3 = metric_from_key("cylinder");
  m3.id = "cylinder/static-rr-bump";
  m3.christoffel_analytic = {};
  m3.eval = [](const Vec4d& x) {
    Mat4d g = cylinder_metric<double>(x);
    const double dr = x[1] - 1.9, dth = x[2] - 1.3;
    g(1, 1) += 0.25 * std::exp(-(dr * dr + dth * dth) / 0.5);
    return g;
  };

  const std::vector<TimelikePath> obs = six_observers();
  const GridSpec g = arrival_grid();

  const DistinguishVerdict conf = distinguish_metrics(m1, m2, obs, 25, 0.02, g);
  CHECK_FALSE(conf.distinguished);
  CHECK(conf.gap < 0.02);
  CHECK(conf.probes_used <= 25);

  const DistinguishVerdict bump = distinguish_metrics(m1, m3, obs, 25, 0.02, g);
  CHECK(bump.distinguished);
  CHECK(bump.gap > 0.02);
  CHECK(bump.witness[1] > 0.0);
  CHECK(bump.witness[1] < pi);
}
