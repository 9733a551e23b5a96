#pragma once

#include "pnrs/metrics.hpp"

namespace pnrs {

// The compactifying map sends (t,r,theta,phi) with v=t+r, u=t-r to
// T = arctan v + arctan u, R = arctan v - arctan u, fixing the angles.
// Its image is the diamond {|T+R| < pi, |T-R| < pi, R >= 0} inside the
// cylinder chart; the conformal factor is cap-Omega on the physical side
// and omega = cos T + cos R on the cylinder side, with omega = Omega after
// the map. Null coordinates p = T+R, q = T-R are used throughout.

enum class BoundaryClass {
  Interior,
  ScriPlus,
  ScriMinus,
  iZero,
  iPlus,
  iMinus,
  NonPhysicalFuture,
  NonPhysicalPast,
  Outside
};

std::string to_string(BoundaryClass c);

template <class S> Vec4<S> penrose_forward(const Vec4<S>& x_sph) {
  const S v = x_sph[0] + x_sph[1], u = x_sph[0] - x_sph[1];
  Vec4<S> X;
  X[0] = std::atan(v) + std::atan(u);
  X[1] = std::atan(v) - std::atan(u);
  X[2] = x_sph[2];
  X[3] = x_sph[3];
  return X;
}

template <class S> S omega_phys(const Vec4<S>& x_sph) {
  const S v = x_sph[0] + x_sph[1], u = x_sph[0] - x_sph[1];
  return S(2) / std::sqrt((S(1) + v * v) * (S(1) + u * u));
}

template <class S> S omega_cyl(const Vec4<S>& X) { return std::cos(X[0]) + std::cos(X[1]); }

BoundaryClass classify_boundary(const Vec4d& X, double tol = 1e-9);

// Throws std::domain_error naming the boundary class when X is not interior.
Vec4d penrose_inverse(const Vec4d& X);

// 2x2 Jacobian d(T,R)/d(t,r); regular everywhere, including r = 0.
Eigen::Matrix2d penrose_jacobian_block(double t, double r);
// 2x2 Jacobian d(t,r)/d(T,R) on the interior.
Eigen::Matrix2d penrose_inverse_jacobian_block(double T, double R);

// Max-norm of (DPhi)^T g_cyl(Phi x) DPhi - Omega^2 g_phys(x) in the spherical
// chart. FD Jacobian by default; the analytic-Jacobian path is exact at r = 0.
double conformal_isometry_residual(const MetricSpec& phys_spherical, const Vec4d& x_sph,
                                   bool analytic_jacobian = false, double fd_step = 1e-6);

// Spherical-chart view of a Cartesian-chart metric.
MetricSpec spherical_chart_view(const MetricSpec& cartesian);

// omega^2 * pushforward of the physical metric along the compactifying map;
// defined on the open diamond.
MetricSpec compactified_metric(const MetricSpec& phys_spherical);

struct CoefficientFields {
  ScalarField4 A;  // nonlinearity coefficient on the cylinder
  ScalarField4 D;  // linear potential on the cylinder
  ScalarField4 B;  // curvature potential; 1 on the exact cylinder
  int kappa = 4;
};

// A = a * omega^{kappa-3}, D = d * omega^{-2},
// B = (R_comp - omega^{-2} R_phys)/6, extended by (0,0,1) outside the diamond.
CoefficientFields transform_coefficients(const PhysicalCoefficients& pc,
                                         const MetricSpec& phys_spherical,
                                         const MetricSpec& comp, double boundary_margin = 1e-3);

struct FieldSample {
  Vec4d x;      // physical spherical chart
  double value = 0.0;
};
struct CylinderSample {
  Vec4d X;      // cylinder chart
  double value = 0.0;
};

// u-tilde(Phi(x)) = u(x)/Omega(x) and its exact inverse.
std::vector<CylinderSample> field_push(const std::vector<FieldSample>& phys);
std::vector<FieldSample> field_pull(const std::vector<CylinderSample>& comp);

struct FlrwReport {
  double tau = 0.0;          // conformal time of the queried t, zero at t = 1
  bool future_diverges = false;
  bool near0_bounded = false;
  bool no_horizons = false;
};

// sigma keys: eds (t^{2/3}), lin (t), exp (e^t).
std::function<double(double)> flrw_sigma(const std::string& key);
double flrw_conformal_time(const std::function<double(double)>& sigma, double t);
FlrwReport flrw_classify(const std::function<double(double)>& sigma, double t_query);

// Compactified image of an FLRW event: conformal time first, then the map.
Vec4d flrw_map(const std::function<double(double)>& sigma, const Vec4d& x_sph_cosmic,
               double* omega_tilde = nullptr);

}  // namespace pnrs
