#pragma once

#include <map>

#include "pnrs/types.hpp"

namespace pnrs {

enum class Chart { Cartesian, Spherical, Cylinder };

// Charts: Cartesian (t,x1,x2,x3); Spherical (t,r,theta,phi);
// Cylinder (T,R,theta,phi) on the product of a line with the round 3-sphere,
// R = geodesic distance from the north pole, R in [0,pi].

template <class S> Mat4<S> minkowski_metric(const Vec4<S>&) {
  Mat4<S> g = Mat4<S>::Identity();
  g(0, 0) = S(-1);
  return g;
}

template <class S> Mat4<S> minkowski_spherical_metric(const Vec4<S>& x) {
  const S r = x[1], st = std::sin(x[2]);
  Mat4<S> g = Mat4<S>::Zero();
  g(0, 0) = S(-1);
  g(1, 1) = S(1);
  g(2, 2) = r * r;
  g(3, 3) = r * r * st * st;
  return g;
}

template <class S> Mat4<S> cylinder_metric(const Vec4<S>& x) {
  const S sR = std::sin(x[1]), st = std::sin(x[2]);
  Mat4<S> g = Mat4<S>::Zero();
  g(0, 0) = S(-1);
  g(1, 1) = S(1);
  g(2, 2) = sR * sR;
  g(3, 3) = sR * sR * st * st;
  return g;
}

// Interpolates between Minkowski inside 2*rs and Schwarzschild outside 4*rs,
// so the center is regular and F stays >= 1/2 (no horizon).
template <class S> S mod_schwarzschild_profile(S r, S rs) {
  return smoothstep5((r - S(2) * rs) / (S(2) * rs));
}

template <class S> Mat4<S> mod_schwarzschild_metric(const Vec4<S>& x, S rs) {
  const S r = x[1], st = std::sin(x[2]);
  const S F = r <= S(2) * rs ? S(1) : S(1) - mod_schwarzschild_profile(r, rs) * rs / r;
  Mat4<S> g = Mat4<S>::Zero();
  g(0, 0) = -F;
  g(1, 1) = S(1) / F;
  g(2, 2) = r * r;
  g(3, 3) = r * r * st * st;
  return g;
}

template <class S, class Sigma> Mat4<S> flrw_metric(const Vec4<S>& x, Sigma&& sigma) {
  const S s = sigma(x[0]);
  Mat4<S> g = Mat4<S>::Zero();
  g(0, 0) = S(-1);
  g(1, 1) = g(2, 2) = g(3, 3) = s * s;
  return g;
}

// Symmetric Gaussian bump added to one metric component (and its mirror).
struct BumpSpec {
  int i = 1, j = 1;
  double amplitude = 0.0;
  Vec4d center = Vec4d::Zero();
  double width = 1.0;
};

inline double bump_value(const BumpSpec& b, const Vec4d& x) {
  const double s2 = (x - b.center).squaredNorm();
  return b.amplitude * std::exp(-s2 / (2.0 * b.width * b.width));
}

struct MetricSpec {
  std::string id;
  Chart chart = Chart::Cartesian;
  std::function<Mat4d(const Vec4d&)> eval;
  std::function<Christoffeld(const Vec4d&)> christoffel_analytic;  // may be empty
  double fd_step = 1e-4;

  Mat4d operator()(const Vec4d& x) const { return eval(x); }
};

struct PhysicalCoefficients {
  ScalarField4 a;  // nonlinearity amplitude, physical chart
  ScalarField4 d;  // linear potential, physical chart
  int kappa = 4;   // power of the nonlinearity, >= 4
};

struct CurvatureReport {
  double scalar = 0.0;
  double step = 0.0;
};

// Keeps the full FD stencil inside the angular chart.
inline Vec4d chart_safe_point(Chart chart, Vec4d x, double margin) {
  auto clamp = [&](double v, double lo, double hi) { return std::min(std::max(v, lo), hi); };
  if (chart == Chart::Spherical) {
    x[1] = std::max(x[1], margin);
    x[2] = clamp(x[2], margin, pi - margin);
  } else if (chart == Chart::Cylinder) {
    x[1] = clamp(x[1], margin, pi - margin);
    x[2] = clamp(x[2], margin, pi - margin);
  }
  return x;
}

// Richardson-extrapolated central difference of a matrix-valued map.
template <class F> Mat4d metric_partial(const F& g, const Vec4d& x, int dir, double h) {
  Vec4d e = Vec4d::Zero();
  e[dir] = 1.0;
  auto diff = [&](double hh) { return Mat4d(((g(x + hh * e) - g(x - hh * e)) / (2.0 * hh))); };
  const Mat4d d1 = diff(h), d2 = diff(h / 2.0);
  return (4.0 * d2 - d1) / 3.0;
}

template <class F> Christoffeld christoffel_fd(const F& g, const Vec4d& x, double h) {
  const Mat4d ginv = Mat4d(g(x)).inverse();
  std::array<Mat4d, 4> dg;
  for (int k = 0; k < 4; ++k) dg[k] = metric_partial(g, x, k, h);
  Christoffeld gamma;
  for (int a = 0; a < 4; ++a) {
    gamma[a].setZero();
    for (int b = 0; b < 4; ++b)
      for (int c = b; c < 4; ++c) {
        double s = 0.0;
        for (int d = 0; d < 4; ++d) s += ginv(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
        gamma[a](b, c) = 0.5 * s;
        gamma[a](c, b) = gamma[a](b, c);
      }
  }
  return gamma;
}

Christoffeld christoffel_at(const MetricSpec& spec, const Vec4d& x);
CurvatureReport scalar_curvature_at(const MetricSpec& spec, const Vec4d& x);

// Exactly one negative eigenvalue of g, three positive.
bool lorentzian_signature_ok(const Mat4d& g);

// Catalog keys: minkowski, minkowski-spherical, cylinder, mod-schwarzschild,
// flrw-eds, flrw-lin, flrw-exp, minkowski-bump, cylinder-bump.
MetricSpec metric_from_key(const std::string& key, const std::map<std::string, double>& params = {});

MetricSpec with_bumps(MetricSpec base, std::vector<BumpSpec> bumps);
MetricSpec conformal_rescale(MetricSpec base, ScalarField4 gamma);

}  // namespace pnrs
