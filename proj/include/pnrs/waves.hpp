#pragma once

#include "pnrs/grid.hpp"
#include "pnrs/metrics.hpp"
#include "pnrs/penrose.hpp"

namespace pnrs {

// Everything here evolves the analyst form of the compactified equation,
//   dTT u - Lap_g u + B u + D u + A u^kappa = f,
// on the cylinder chart; B = 1, A = D = 0 reproduces the free flow.

struct SourceTerm {
  ScalarField4 f;
  double t_lo = -1e300, t_hi = 1e300;  // temporal support window
  std::string region_id;
  std::function<bool(double, double)> region;  // (p,q) support predicate, optional
};

struct ProbeSeries {
  Vec2d where;  // (R, theta)
  std::vector<double> t;
  std::vector<double> value;
};

struct Trajectory {
  GridSpec grid;
  std::vector<double> times;       // uniformly spaced stored slices
  std::vector<ArrayXXd> slices;    // u
  std::vector<ArrayXXd> dslices;   // dT u, central differences
  std::vector<ProbeSeries> probes;
  double dt = 0.0;
  bool blew_up = false;
  double blowup_time = 0.0;

  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  double slice_spacing() const { return times.size() > 1 ? times[1] - times[0] : dt; }
  double value_at(double T, double R, double theta) const;
  double dvalue_at(double T, double R, double theta) const;
  ArrayXXd slice_at(double T) const;
};

struct SolveOptions {
  double blowup_guard = 1e6;
  int max_slices = 500;
  std::vector<Vec2d> probes;
  bool coeffs_static = false;   // A, D, B independent of T: sample once
  const MetricSpec* spatial_metric = nullptr;  // static diagonal cylinder perturbation
};

// initial == nullptr starts from rest at grid.t_min (requires the source
// window to begin after it).
Trajectory solve_semilinear(const GridSpec& grid, const CoefficientFields& coeffs,
                            const SourceTerm& src, const CauchyData* initial,
                            const SolveOptions& opt = {});

// Linear causal inverse: A = 0, rest in the past of the source support.
Trajectory causal_inverse(const GridSpec& grid, const ScalarField4& B, const SourceTerm& src,
                          const SolveOptions& opt = {});

// Exact evolution in the Dirichlet sine family: u = w / sin R with
// w(T,R) = sum_k [a_k cos((k+1)T) + b_k sin((k+1)T)] sin((k+1)R).
// Integer frequencies make the flow exactly 2pi-periodic.
struct SpectralSolution {
  int K = 0;
  ArrayXd a, b;
  double truncation_energy = 0.0;  // relative, data mass above mode K

  double eval(double T, double R) const;
  double eval_w(double T, double R) const;
  ArrayXXd slice(const GridSpec& g, double T) const;
};

SpectralSolution solve_linear_spectral(const GridSpec& g, const CauchyData& data);

enum class ScriSide { Past, Future };

struct RadiationFieldData {
  ScriSide side = ScriSide::Past;
  std::vector<double> param;  // T along the generator
  ArrayXXd values;            // n_param x n_theta
  bool partial = false;
  double support_lo = 0.0, support_hi = 0.0;  // measured support window in param

  double value_at(double T, double theta = pi / 2) const;
  double l2() const;
};

RadiationFieldData radiation_field_extract(const Trajectory& traj, ScriSide side);
RadiationFieldData radiation_field_extract_spectral(const SpectralSolution& sol, ScriSide side,
                                                    int n_param = 512);

struct LimitRoute {
  std::vector<double> s;
  std::vector<double> value;        // extrapolated |t| * u(t+s, t)
  std::vector<double> fit_factor;   // fitted prefactor diagnostics
};

// Minkowski-limit route on a closed-form physical field u(t, r).
LimitRoute radiation_limit_route(const std::function<double(double, double)>& u_phys,
                                 const std::vector<double>& s_grid);
// Same limit evaluated through the compactified trajectory.
LimitRoute radiation_limit_route(const Trajectory& traj, const std::vector<double>& s_grid);

struct HuygensReport {
  std::vector<double> times;
  std::vector<double> outside_fraction;
  double max_outside_fraction = 0.0;
  double near_i0_trace_max = 0.0;
};

// Shell of a cap of radius cap_radius centered at the north pole, with
// pole reflections folded in.
double shell_distance(double R, double T, double cap_radius);

HuygensReport huygens_support_check(const SpectralSolution& sol, const GridSpec& g,
                                    double cap_radius, const std::vector<double>& times);
HuygensReport huygens_support_check(const Trajectory& traj, double cap_radius);

}  // namespace pnrs
