#pragma once

#include <optional>
#include <vector>

#include "pnrs/metrics.hpp"
#include "pnrs/penrose.hpp"

namespace pnrs {

enum class CausalKind { Timelike, Null, Spacelike };

struct PhaseState {
  Vec4d x;
  Vec4d xi;  // tangent vector
};

CausalKind causal_class(const MetricSpec& m, const PhaseState& st, double tol = 1e-8);

// Future-pointing null tangent with unit T component, spatial part along dir.
Vec4d null_direction(const MetricSpec& m, const Vec4d& x, const Vec3d& dir);

enum class StopReason { MaxParam, DomainExit, Blowup };

struct GeodesicPath {
  std::vector<double> s;
  std::vector<PhaseState> states;
  StopReason reason = StopReason::MaxParam;
  double hamiltonian_drift = 0.0;  // max |g(v,v) - g(v0,v0)| along the path

  double length() const { return s.empty() ? 0.0 : s.back(); }
  PhaseState state_at(double param) const;
};

struct StepControl {
  double tol = 1e-10;      // per unit parameter
  double h_init = 1e-2;
  double h_min = 1e-9;
  double h_max = 0.25;
  double t_domain = 8.0;   // |T| beyond which the trace stops
};

GeodesicPath geodesic_trace(const MetricSpec& m, const PhaseState& st, double max_param,
                            const StepControl& ctl = {});

struct TimeSepResult {
  double tau = 0.0;
  double floor = 0.0;  // discretization scale; tau below it means "not separated"
  bool exact = false;

  operator double() const { return tau; }
};

// Supremum of proper time over causal paths from x to y; 0 when y is not in
// the causal future of x. Product cylinder metrics use the closed form
// sqrt(dT^2 - d_{S3}^2); anything else runs causal dynamic programming on an
// axisymmetric lattice (both points rotated into a common phi plane).
TimeSepResult time_separation(const MetricSpec& m, const Vec4d& x, const Vec4d& y,
                              int resolution = 48, bool force_lattice = false);

bool causally_related(const MetricSpec& m, const Vec4d& x, const Vec4d& y,
                      int resolution = 48);

double sphere_distance(const Vec4d& x, const Vec4d& y);  // S^3 from (R,theta,phi)

struct RhoResult {
  double rho = 0.0;
  bool capped = false;
};

// First parameter where tau(x, gamma(s)) turns positive along the null
// geodesic from (x, xi); capped at max_param when no cut point appears.
RhoResult cut_locus_rho(const MetricSpec& m, const PhaseState& st, double max_param,
                        int resolution = 48, const StepControl& ctl = {});

struct TimelikePath {
  int id = 0;
  std::function<Vec4d(double)> mu;
  double s_lo = 0.0;
  double s_hi = 0.0;
};

TimelikePath static_worldline(int id, double R, double theta, double phi, double s_lo,
                              double s_hi);

// f_plus = inf{s : tau(x, mu(s)) > floor} (s_hi if empty),
// f_minus = sup{s : tau(mu(s), x) > floor} (s_lo if empty).
std::pair<double, double> observation_time(const MetricSpec& m, const TimelikePath& mu,
                                           const Vec4d& x, int resolution = 48);

struct Arrival {
  int observer_id = 0;
  double parameter = 0.0;      // on the observer curve
  double geo_param = 0.0;      // on the null geodesic from q
  Vec4d direction = Vec4d::Zero();
  bool before_cut = true;
};

struct ObservationSet {
  Vec4d q;
  std::vector<Arrival> arrivals;
  std::vector<int> missed;  // observer ids with no arrival
};

struct ObsOptions {
  int resolution = 48;
  int n_dir = 96;
  double max_param = 12.0;
};

ObservationSet earliest_obs_set(const MetricSpec& m, const Vec4d& q,
                                const std::vector<TimelikePath>& observers,
                                const ObsOptions& opt = {});

enum class IntersectCase { A, B, Degenerate };

struct IntersectionVerdict {
  IntersectCase tag = IntersectCase::A;
  Vec4d q = Vec4d::Zero();
  std::array<double, 4> t{};
  bool transversal = false;
  bool before_cut = false;
  double residual = 0.0;
  double sv_min = 0.0;
};

struct IntersectOptions {
  int resolution = 48;
  double sv_threshold = 0.1;
  StepControl ctl;
};

// Joint nearest-approach search over four null geodesics. Throws when the
// base points are causally related.
IntersectionVerdict intersection_finder(const MetricSpec& m,
                                        const std::array<PhaseState, 4>& states,
                                        double max_param,
                                        const IntersectOptions& opt = {});

// Random inextendible causal lattice walks; returns the max number of times
// any walk crossed the T=0 slice (globally hyperbolic region: expect 1).
int causal_slice_crossings(const MetricSpec& m, int n_paths, int resolution,
                           std::uint64_t seed);

}  // namespace pnrs
