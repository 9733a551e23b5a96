#include <cmath>

#include "doctest.h"
#include "pnrs/interaction.hpp"

using namespace pnrs;

namespace {

GridSpec band_grid(double t_max) {
  GridSpec g;
  g.mode = GridMode::Axisymmetric;
  g.n_r = 96;
  g.n_theta = 72;
  g.r_lo = 0.35;
  g.r_hi = pi - 0.35;
  g.t_min = -0.2;
  g.t_max = t_max;
  return g;
}

WavePacketSpec packet_proto() {
  WavePacketSpec p;
  p.omega0 = 16.0;
  p.width = 0.14;
  p.aperture = 0.3;
  return p;
}

// Four packets on a ring of the given radius around (pi/2, pi/2), aimed
// inward, launched at T0 = 0.5. They meet at T0 + radius.
std::array<WavePacketSpec, 4> converging_ring(double radius) {
  std::array<WavePacketSpec, 4> packets;
  const double angs[4] = {40.0, 130.0, 220.0, 310.0};
  for (int k = 0; k < 4; ++k) {
    const double ph = angs[k] * pi / 180.0;
    packets[k] = packet_proto();
    packets[k].x0 = Vec4d(0.5, pi / 2 - radius * std::cos(ph), pi / 2 - radius * std::sin(ph), 0.0);
    packets[k].dir = Vec2d(std::cos(ph), std::sin(ph));
  }
  return packets;
}

std::vector<ObserverSpec> ring_observers(double radius) {
  std::vector<ObserverSpec> obs;
  const double oang[5] = {15.0, 80.0, 150.0, 230.0, 300.0};
  for (int i = 0; i < 5; ++i) {
    const double ph = oang[i] * pi / 180.0;
    obs.push_back({i, pi / 2 + radius * std::cos(ph), pi / 2 + radius * std::sin(ph)});
  }
  return obs;
}

}  // namespace

TEST_CASE("packet source rejects unresolvable carriers") {
  const GridSpec g = band_grid(1.9);
  WavePacketSpec p = packet_proto();
  p.x0 = Vec4d(0.5, pi / 2, pi / 2, 0.0);
  p.omega0 = 60.0;
  CHECK_THROWS_AS((void)build_packet_source(p, g), std::runtime_error);
}

TEST_CASE("packet centroid rides its launch direction") {
  const GridSpec g = band_grid(1.9);
  WavePacketSpec p = packet_proto();
  p.x0 = Vec4d(0.5, pi / 2 - 0.55, pi / 2, 0.0);
  p.dir = Vec2d(1.0, 0.0);
  const Trajectory traj = causal_inverse(g, {}, build_packet_source(p, g));
  const Vec2d v = centroid_velocity(traj, 1.0, 1.6);
  // The aperture fan and envelope drag keep the centroid slightly below the
  // front speed.
  CHECK(v.norm() > 0.85);
  CHECK(v.norm() < 1.02);
  CHECK(v[0] > 0.8);
  CHECK(std::abs(v[1]) < 0.05);
}

TEST_CASE("causal independence of packet centers") {
  const MetricSpec cyl = metric_from_key("cylinder");
  auto packets = converging_ring(0.55);
  CHECK(packets_causally_independent(cyl, packets));
  // Stack one packet inside another's future light cone.
  packets[1].x0 = packets[0].x0 + Vec4d(0.3, 0.0, 0.0, 0.0);
  CHECK_FALSE(packets_causally_independent(cyl, packets));
}

TEST_CASE("product formula against nonlinear differencing") {
  const GridSpec g = band_grid(1.9);
  const auto packets = converging_ring(0.55);
  const std::vector<ObserverSpec> obs = ring_observers(0.6);
  CoefficientFields coeffs;
  coeffs.A = constant_field(1.0);

  const InteractionResult direct = kappa_derivative_direct(packets, coeffs, g, obs);
  const InteractionResult fd = kappa_derivative_fd(packets, coeffs, g, obs, 0.2);
  CHECK(direct.method == "direct");
  CHECK(fd.method == "fd-stencil");
  CHECK(method_cross_check(direct, fd) < 0.10);

  // Multilinearity: doubling one amplitude doubles the derivative exactly.
  auto doubled = packets;
  doubled[0].amplitude *= 2.0;
  const InteractionResult direct2 = kappa_derivative_direct(doubled, coeffs, g, obs);
  double dev = 0.0, peak = 0.0;
  for (size_t i = 0; i < obs.size(); ++i)
    for (size_t j = 0; j < direct.series[i].value.size(); ++j) {
      dev = std::max(dev, std::abs(direct2.series[i].value[j] - 2.0 * direct.series[i].value[j]));
      peak = std::max(peak, std::abs(direct2.series[i].value[j]));
    }
  CHECK(peak > 0.0);
  CHECK(dev <= 1e-12 * peak);
}

TEST_CASE("windowed detection finds a carrier burst and ignores quiet noise") {
  ProbeSeries s;
  s.where = Vec2d(1.0, 1.0);
  for (double t = 0.0; t < 2.0; t += 0.002) {
    s.t.push_back(t);
    const double burst = std::sin(24.0 * t) * std::exp(-std::pow((t - 1.4) / 0.08, 2));
    s.value.push_back(burst + 1e-9 * std::sin(3.0 * t));
  }
  BandpassSettings bs;
  bs.omega0 = 24.0;
  const auto [arrival, margin] = windowed_detection(s, bs);
  CHECK(std::isfinite(arrival));
  CHECK(arrival > 1.1);
  CHECK(arrival < 1.45);
  CHECK(margin > 10.0);

  ProbeSeries quiet = s;
  for (auto& v : quiet.value) v = 1e-12 * v;
  bs.abs_floor = 1e-3;
  const auto [na, nm] = windowed_detection(quiet, bs);
  CHECK(std::isnan(na));
  (void)nm;
}

TEST_CASE("detection dichotomy on crossing versus parallel rays") {
  const MetricSpec cyl = metric_from_key("cylinder");
  CoefficientFields coeffs;
  coeffs.A = constant_field(1.0);

  DetectOptions opt;
  opt.ensemble = 2;
  opt.max_geo_param = 1.5;
  opt.proto = packet_proto();

  // Converging ring: the rays meet at (T, R, theta) = (1.05, pi/2, pi/2).
  const GridSpec gB = band_grid(1.9);
  std::array<PhaseState, 4> stB;
  const double angs[4] = {40.0, 130.0, 220.0, 310.0};
  for (int k = 0; k < 4; ++k) {
    const double ph = angs[k] * pi / 180.0;
    const Vec4d x0(0.5, pi / 2 - 0.55 * std::cos(ph), pi / 2 - 0.55 * std::sin(ph), 0.0);
    stB[k] = {x0, null_direction(cyl, x0, Vec3d(std::cos(ph), std::sin(ph), 0.0))};
  }
  const DetectionOutcome outB = detect_and_construct_S(cyl, stB, ring_observers(0.6), coeffs, gB, opt);
  CHECK(outB.predicted.tag == IntersectCase::B);
  CHECK(std::abs(outB.predicted.q[0] - 1.05) < 0.05);
  CHECK(std::abs(outB.predicted.q[1] - pi / 2) < 0.05);
  REQUIRE(outB.verdicts.size() == 5);
  for (const auto& v : outB.verdicts) {
    CHECK(v.state == "detected");
    // Light from the crossing reaches the ring at 1.05 + 0.6, plus the
    // detector's rise lag of about half an envelope width.
    CHECK(v.arrival > 1.6);
    CHECK(v.arrival < 1.8);
    CHECK(v.margin > 10.0);
  }
  CHECK(outB.constructed.arrivals.size() == 5);
  CHECK(outB.peak_energy > 0.0);

  // Single file along the equator: parallel null lines, no crossing, and with
  // the floor calibrated on the loud run nothing fires.
  const GridSpec gA = band_grid(1.05);
  std::array<PhaseState, 4> stA;
  for (int k = 0; k < 4; ++k) {
    const Vec4d x0(0.5, pi / 2, 0.45 + 0.7 * k, 0.0);
    stA[k] = {x0, null_direction(cyl, x0, Vec3d(0.0, 1.0, 0.0))};
  }
  std::vector<ObserverSpec> obsA;
  for (int i = 0; i < 5; ++i) obsA.push_back({i, pi / 2 + (i % 2 ? 0.5 : -0.5), 0.9 + 0.33 * i});
  DetectOptions optA = opt;
  optA.proto.aperture = 0.22;
  optA.abs_floor = 1e-5 * outB.peak_energy;
  const DetectionOutcome outA = detect_and_construct_S(cyl, stA, obsA, coeffs, gA, optA);
  CHECK(outA.predicted.tag == IntersectCase::A);
  for (const auto& v : outA.verdicts) CHECK(v.state == "none");
  CHECK(outA.constructed.arrivals.empty());
  CHECK(outA.constructed.missed.size() == 5);
}
