#pragma once

#include "pnrs/metrics.hpp"
#include "pnrs/waves.hpp"

namespace pnrs {

// Q[psi](V,W) = (V psi)(W psi) - 1/2 g^{-1}(dpsi, dpsi) g(V,W), with the
// gradient taken by central differences at x.
double energy_momentum_contract(const ScalarField4& psi, const MetricSpec& m, const Vec4d& V,
                                const Vec4d& W, const Vec4d& x, double h = 1e-4);

struct EnergyReport {
  std::vector<double> times;
  std::vector<std::vector<double>> f;    // slice energy per derivative level
  std::vector<std::vector<double>> lhs;  // Sobolev ladder per level
  double rhs_norm = 0.0;                 // source + initial-slice data norms
  std::vector<double> c_emp;             // per level, max_t lhs / rhs
  double c_emp_max = 0.0;
  bool positive = true;  // every slice energy nonnegative
};

// Evolves the data, stacks time derivatives from stored slices, and reports
// the empirical constants of the slice-norm inequality for levels 0..k.
// Blow-up means the inputs exceeded the smallness budget and is an error.
EnergyReport verify_energy_inequality(const CoefficientFields& coeffs, const SourceTerm& F,
                                      const CauchyData& data, int k, const GridSpec& grid,
                                      const SolveOptions& opt = {});

struct EnergySuiteResult {
  int cases = 0;
  int held = 0;         // runs with finite constants and nonnegative energy
  double c_emp = 0.0;   // worst constant across the suite
  double c_emp_refined = 0.0;
  bool stable = false;  // refined constant within 20%
};

// Random small sources and data, fixed seed; the suite reruns on a finer grid
// to check that the empirical constant is a property of the flow rather than
// the mesh.
EnergySuiteResult energy_inequality_suite(std::uint64_t seed, int n_cases, int k,
                                          const GridSpec& grid);

// e^{V(t)} [u0^{1-p} + (1-p) int_t0^t w e^{(p-1)V}]^{1/(1-p)}, V = int_t0 v.
// For p > 1 the bracket can hit zero; the bound is invalid from that time on.
struct GronwallBound {
  double u0 = 0.0, p = 2.0;
  double t_lo = 0.0, t_hi = 1.0;
  double breakdown = std::numeric_limits<double>::infinity();
  std::vector<double> ts, values;

  bool valid_at(double t) const { return t >= t_lo && t <= t_hi && t < breakdown; }
  double operator()(double t) const;  // linear interpolation on the dense grid
};

GronwallBound gronwall_bound(double u0, const std::function<double(double)>& v,
                             const std::function<double(double)>& w, double p,
                             double t_lo, double t_hi, int n = 4000);

struct GronwallVerdict {
  bool ok = true;
  double first_violation = std::numeric_limits<double>::quiet_NaN();
};

// Pointwise u(t) <= bound(t) on the bound's validity window.
GronwallVerdict gronwall_check(const std::vector<double>& t, const std::vector<double>& u,
                               const GronwallBound& bound);

}  // namespace pnrs
