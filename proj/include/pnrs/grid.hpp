#pragma once

#include "pnrs/types.hpp"

namespace pnrs {

enum class GridMode { Radial, Axisymmetric, SpectralRadial };

// Cell-centered staggered grid on (R, theta): R_i = r_lo + (i+1/2)h_R,
// theta_j = (j+1/2)h_theta. No grid point sits on a pole; flux-form operators
// get exactly zero flux through pole faces. A band [r_lo, r_hi] strictly
// inside (0, pi) gets reflecting walls instead and a much friendlier CFL
// limit, since the 1/sin^2 R metric factor stays bounded.
struct GridSpec {
  GridMode mode = GridMode::Radial;
  int n_r = 256;
  int n_theta = 1;
  int k_max = 128;  // spectral mode cap
  double cfl = 0.45;
  double t_min = -pi, t_max = pi;
  double r_lo = 0.0, r_hi = pi;

  double h_r() const { return (r_hi - r_lo) / n_r; }
  double h_theta() const { return pi / std::max(1, n_theta); }
  double r_at(int i) const { return r_lo + (i + 0.5) * h_r(); }
  double theta_at(int j) const { return (j + 0.5) * h_theta(); }
  double sin_min() const {
    return std::min(std::sin(r_at(0)), std::sin(r_at(n_r - 1)));
  }
  double dt() const {
    if (mode == GridMode::Axisymmetric) {
      const double a = 1.0 / (h_r() * h_r());
      const double st = sin_min() * h_theta();
      return cfl / std::sqrt(a + 1.0 / (st * st));
    }
    return cfl * h_r();
  }
  double capture_radius() const { return 1.5 * h_r(); }
};

struct FieldState {
  double T = 0.0;
  ArrayXXd u;   // n_r x n_theta
  ArrayXXd ut;  // companion velocity
};

struct CauchyData {
  double T0 = 0.0;
  ScalarField4 phi0;  // (T0,R,theta) slice values
  ScalarField4 phi1;
};

// Volume weight sin^2(R) sin(theta) (axisym) or sin^2(R) (radial), cellwise.
ArrayXXd volume_weights(const GridSpec& g);

double l2_norm(const ArrayXXd& u, const GridSpec& g);

// Frame derivatives d/dR and (1/sin R) d/dtheta via central stencils,
// one-sided at the ends.
ArrayXXd d_r(const ArrayXXd& u, const GridSpec& g);
ArrayXXd d_theta_frame(const ArrayXXd& u, const GridSpec& g);

// sqrt(sum_{|alpha|<=s} ||D^alpha u||_{L2}^2) with frame derivatives.
double sobolev_norm(const ArrayXXd& u, const GridSpec& g, int s);

// Catmull-Rom interpolation of a cell-centered row; x in [0, pi].
double interp_cells(const Eigen::Ref<const ArrayXd>& row, double h, double x);
// Bicubic via nested rows; theta clamped to the cell-center range.
double interp_grid(const ArrayXXd& u, const GridSpec& g, double R, double theta);

ArrayXXd sample_field(const ScalarField4& f, const GridSpec& g, double T);

}  // namespace pnrs
