#pragma once

#include "pnrs/causal.hpp"
#include "pnrs/waves.hpp"

namespace pnrs {

// Four-wave interaction experiments on an axisymmetric band grid. Sources are
// rings in (R, theta); the phi = 0 section of everything reproduces the
// plane-geodesic picture that causal_geometry computes with.

struct WavePacketSpec {
  Vec4d x0 = Vec4d::Zero();     // center (T0, R0, theta0, .)
  Vec2d dir = Vec2d(1.0, 0.0);  // in-plane launch direction (e_R, e_theta frame)
  double aperture = 0.25;       // angular half-width of the flow-out tube
  double omega0 = 24.0;         // carrier frequency
  double width = 0.16;          // spacetime envelope width
  double amplitude = 1.0;
};

// Oscillatory Gaussian source radiating dominantly along dir. Throws when the
// carrier has fewer than 8 grid points per wavelength; the message names the
// resolution that would suffice.
SourceTerm build_packet_source(const WavePacketSpec& spec, const GridSpec& grid);

struct ObserverSpec {
  int id = 0;
  double R = pi / 2;
  double theta = pi / 2;
};

struct InteractionResult {
  std::string method;  // "direct" or "fd-stencil"
  std::vector<ObserverSpec> observers;
  std::vector<ProbeSeries> series;  // full-rate, one per observer
  Trajectory field;                 // the kappa-th order field itself
};

// True when no packet center can signal another.
bool packets_causally_independent(const MetricSpec& m,
                                  const std::array<WavePacketSpec, 4>& packets,
                                  int resolution = 48);

// kappa-th epsilon-derivative of the solution map, assembled from the product
// formula: solve the four linear problems, form
//   S = -kappa! A u1 u2 u3 u4^(kappa-3)
// pointwise, and apply the causal inverse once more. Packets must be pairwise
// causally independent for the formula to isolate the cross term.
InteractionResult kappa_derivative_direct(const std::array<WavePacketSpec, 4>& packets,
                                          const CoefficientFields& coeffs,
                                          const GridSpec& grid,
                                          const std::vector<ObserverSpec>& observers,
                                          const SolveOptions& opt = {});

// Same derivative by differencing full nonlinear solves: central stencil in
// each of eps1..eps3 tensored with a central stencil of the given order in
// eps4. A blow-up at any stencil node is an error naming that node.
InteractionResult kappa_derivative_fd(const std::array<WavePacketSpec, 4>& packets,
                                      const CoefficientFields& coeffs, const GridSpec& grid,
                                      const std::vector<ObserverSpec>& observers,
                                      double eps_step = 0.15, const SolveOptions& opt = {});

// Largest relative gap between the two methods' observer series, scaled by
// the peak amplitude across all observers.
double method_cross_check(const InteractionResult& a, const InteractionResult& b);

struct DetectionVerdict {
  int observer_id = 0;
  std::string state = "none";  // detected | none | inconclusive
  double arrival = 0.0;        // earliest T where the test fires
  double margin = 0.0;         // peak windowed energy over the median baseline
};

struct BandpassSettings {
  double omega0 = 24.0;
  double factor = 10.0;    // detection threshold over the median baseline
  double abs_floor = 0.0;  // absolute energy floor, guards all-quiet series
};

// Sliding-window energy of the band above the envelope scale. Returns the
// earliest threshold crossing (NaN when none) and the peak-to-baseline margin.
std::pair<double, double> windowed_detection(const ProbeSeries& s, const BandpassSettings& bs);

struct DetectOptions {
  int ensemble = 8;        // direction-jitter members
  double jitter = 0.04;    // half-range of the launch-angle jitter
  double factor = 10.0;
  double max_geo_param = 8.0;
  WavePacketSpec proto;    // aperture, carrier, width, amplitude template
  SolveOptions solve;
  double t0 = 0.0;         // packets launch at gamma_j(t0)
  // Calibrated energy floor, e.g. from a reference run's peak_energy. Zero
  // falls back to 1e-5 x this run's own peak, which cannot tell an all-quiet
  // experiment from a loud one.
  double abs_floor = 0.0;
};

struct DetectionOutcome {
  std::vector<DetectionVerdict> verdicts;
  ObservationSet constructed;     // earliest detected arrivals
  IntersectionVerdict predicted;  // geometric classification of the same data
  double peak_energy = 0.0;       // max windowed energy across the ensemble
};

// Runs the jitter ensemble of direct experiments, flags observers whose
// windowed energy clears factor x baseline for some member, and assembles the
// earliest arrivals. Spread of arrivals across members beyond a few capture
// radii downgrades a verdict to "inconclusive".
DetectionOutcome detect_and_construct_S(const MetricSpec& metric,
                                        const std::array<PhaseState, 4>& states,
                                        const std::vector<ObserverSpec>& observers,
                                        const CoefficientFields& coeffs, const GridSpec& grid,
                                        const DetectOptions& opt = {});

// Least-squares velocity of the |u|^2 centroid over stored slices in
// [t_a, t_b]: components (dR/dT, sin R dtheta/dT).
Vec2d centroid_velocity(const Trajectory& traj, double t_a, double t_b);

}  // namespace pnrs
