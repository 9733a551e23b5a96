#include "pnrs/penrose.hpp"

namespace pnrs {

std::string to_string(BoundaryClass c) {
  switch (c) {
    case BoundaryClass::Interior: return "interior";
    case BoundaryClass::ScriPlus: return "scri-plus";
    case BoundaryClass::ScriMinus: return "scri-minus";
    case BoundaryClass::iZero: return "i-zero";
    case BoundaryClass::iPlus: return "i-plus";
    case BoundaryClass::iMinus: return "i-minus";
    case BoundaryClass::NonPhysicalFuture: return "nonphysical-future";
    case BoundaryClass::NonPhysicalPast: return "nonphysical-past";
    case BoundaryClass::Outside: return "outside";
  }
  return "outside";
}

BoundaryClass classify_boundary(const Vec4d& X, double tol) {
  const double p = X[0] + X[1], q = X[0] - X[1];
  const bool p_top = std::abs(p - pi) <= tol, p_bot = std::abs(p + pi) <= tol;
  const bool q_top = std::abs(q - pi) <= tol, q_bot = std::abs(q + pi) <= tol;
  if (p_top && q_bot) return BoundaryClass::iZero;
  if (p_top && q_top) return BoundaryClass::iPlus;
  if (p_bot && q_bot) return BoundaryClass::iMinus;
  if (p_top && std::abs(q) < pi - tol) return BoundaryClass::ScriPlus;
  if (q_bot && std::abs(p) < pi - tol) return BoundaryClass::ScriMinus;
  if (std::abs(p) < pi - tol && std::abs(q) < pi - tol && X[1] >= -tol)
    return BoundaryClass::Interior;
  if (p > pi + tol && std::abs(q) < pi - tol) return BoundaryClass::NonPhysicalFuture;
  if (q < -pi - tol && std::abs(p) < pi - tol) return BoundaryClass::NonPhysicalPast;
  return BoundaryClass::Outside;
}

Vec4d penrose_inverse(const Vec4d& X) {
  const BoundaryClass c = classify_boundary(X);
  if (c != BoundaryClass::Interior)
    throw std::domain_error("penrose_inverse: point is " + to_string(c) + ", not interior");
  const double v = std::tan((X[0] + X[1]) / 2.0), u = std::tan((X[0] - X[1]) / 2.0);
  return Vec4d((v + u) / 2.0, (v - u) / 2.0, X[2], X[3]);
}

Eigen::Matrix2d penrose_jacobian_block(double t, double r) {
  const double v = t + r, u = t - r;
  const double a = 1.0 / (1.0 + v * v), b = 1.0 / (1.0 + u * u);
  Eigen::Matrix2d J;
  J << a + b, a - b, a - b, a + b;
  return J;
}

Eigen::Matrix2d penrose_inverse_jacobian_block(double T, double R) {
  const double cp = std::cos((T + R) / 2.0), cq = std::cos((T - R) / 2.0);
  const double sp = 0.5 / (cp * cp), sq = 0.5 / (cq * cq);
  Eigen::Matrix2d J;
  J << (sp + sq) / 2.0, (sp - sq) / 2.0, (sp - sq) / 2.0, (sp + sq) / 2.0;
  return J;
}

namespace {

Mat4d forward_jacobian(const Vec4d& x_sph, bool analytic, double h) {
  Mat4d J = Mat4d::Identity();
  if (analytic) {
    J.topLeftCorner<2, 2>() = penrose_jacobian_block(x_sph[0], x_sph[1]);
    return J;
  }
  for (int dir = 0; dir < 2; ++dir) {
    Vec4d e = Vec4d::Zero();
    e[dir] = 1.0;
    const Vec4d d = (penrose_forward<double>(x_sph + h * e) - penrose_forward<double>(x_sph - h * e)) / (2.0 * h);
    J(0, dir) = d[0];
    J(1, dir) = d[1];
  }
  return J;
}

}  // namespace

double conformal_isometry_residual(const MetricSpec& phys_spherical, const Vec4d& x_sph,
                                   bool analytic_jacobian, double fd_step) {
  const Vec4d X = penrose_forward<double>(x_sph);
  const double Om = omega_phys(x_sph);
  const Mat4d J = forward_jacobian(x_sph, analytic_jacobian, fd_step);
  const Mat4d lhs = J.transpose() * cylinder_metric<double>(X) * J;
  const Mat4d rhs = Om * Om * phys_spherical.eval(x_sph);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

MetricSpec spherical_chart_view(const MetricSpec& cartesian) {
  if (cartesian.chart == Chart::Spherical) return cartesian;
  if (cartesian.chart != Chart::Cartesian)
    throw std::runtime_error("spherical_chart_view needs a Cartesian-chart metric");
  MetricSpec m;
  m.id = cartesian.id + "@sph";
  m.chart = Chart::Spherical;
  m.fd_step = cartesian.fd_step;
  auto base = cartesian.eval;
  m.eval = [base](const Vec4d& x) {
    const double r = x[1], th = x[2], ph = x[3];
    const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
    Vec4d xc(x[0], r * st * cp, r * st * sp, r * ct);
    Mat4d J = Mat4d::Zero();
    J(0, 0) = 1.0;
    J(1, 1) = st * cp;
    J(1, 2) = r * ct * cp;
    J(1, 3) = -r * st * sp;
    J(2, 1) = st * sp;
    J(2, 2) = r * ct * sp;
    J(2, 3) = r * st * cp;
    J(3, 1) = ct;
    J(3, 2) = -r * st;
    return Mat4d(J.transpose() * base(xc) * J);
  };
  return m;
}

MetricSpec compactified_metric(const MetricSpec& phys_spherical) {
  if (phys_spherical.chart != Chart::Spherical)
    throw std::runtime_error("compactified_metric needs a spherical-chart metric");
  MetricSpec m;
  m.id = phys_spherical.id + "@comp";
  m.chart = Chart::Cylinder;
  m.fd_step = phys_spherical.fd_step;
  auto base = phys_spherical.eval;
  m.eval = [base](const Vec4d& X) {
    const Vec4d x = penrose_inverse(X);
    Mat4d J = Mat4d::Identity();
    J.topLeftCorner<2, 2>() = penrose_inverse_jacobian_block(X[0], X[1]);
    const double om = omega_cyl(X);
    return Mat4d(om * om * J.transpose() * base(x) * J);
  };
  return m;
}

CoefficientFields transform_coefficients(const PhysicalCoefficients& pc,
                                         const MetricSpec& phys_spherical, const MetricSpec& comp,
                                         double boundary_margin) {
  auto deep_interior = [boundary_margin](const Vec4d& X) {
    const double p = X[0] + X[1], q = X[0] - X[1];
    return std::abs(p) < pi - boundary_margin && std::abs(q) < pi - boundary_margin;
  };
  CoefficientFields out;
  out.kappa = pc.kappa;
  const int kappa = pc.kappa;
  auto a = pc.a, d = pc.d;
  out.A = ScalarField4{[a, kappa, deep_interior](const Vec4d& X) {
    if (!a || !deep_interior(X)) return 0.0;
    return a(penrose_inverse(X)) * std::pow(omega_cyl(X), kappa - 3);
  }};
  out.D = ScalarField4{[d, deep_interior](const Vec4d& X) {
    if (!d || !deep_interior(X)) return 0.0;
    const double om = omega_cyl(X);
    return d(penrose_inverse(X)) / (om * om);
  }};
  MetricSpec phys = phys_spherical, cm = comp;
  out.B = ScalarField4{[phys, cm, deep_interior](const Vec4d& X) {
    if (!deep_interior(X)) return 1.0;
    const double om = omega_cyl(X);
    const double r_comp = scalar_curvature_at(cm, X).scalar;
    const double r_phys = scalar_curvature_at(phys, penrose_inverse(X)).scalar;
    return (r_comp - r_phys / (om * om)) / 6.0;
  }};
  return out;
}

std::vector<CylinderSample> field_push(const std::vector<FieldSample>& phys) {
  std::vector<CylinderSample> out;
  out.reserve(phys.size());
  for (const auto& s : phys)
    out.push_back({penrose_forward<double>(s.x), s.value / omega_phys(s.x)});
  return out;
}

std::vector<FieldSample> field_pull(const std::vector<CylinderSample>& comp) {
  std::vector<FieldSample> out;
  out.reserve(comp.size());
  for (const auto& s : comp) {
    const Vec4d x = penrose_inverse(s.X);
    out.push_back({x, s.value * omega_phys(x)});
  }
  return out;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = (a + b) / 2.0;
  const double lm = (a + m) / 2.0, rm = (m + b) / 2.0;
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  if (a == b) return 0.0;
  const double sgn = a < b ? 1.0 : -1.0;
  if (a > b) std::swap(a, b);
  const double m = (a + b) / 2.0;
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return sgn * adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

std::function<double(double)> flrw_sigma(const std::string& key) {
  if (key == "eds") return [](double t) { return std::cbrt(t * t); };
  if (key == "lin") return [](double t) { return t; };
  if (key == "exp") return [](double t) { return std::exp(t); };
  throw std::runtime_error("unknown flrw sigma key: " + key);
}

double flrw_conformal_time(const std::function<double(double)>& sigma, double t) {
  if (t <= 0.0) throw std::domain_error("flrw_conformal_time: t must be positive");
  return integrate([&](double s) { return 1.0 / sigma(s); }, 1.0, t);
}

FlrwReport flrw_classify(const std::function<double(double)>& sigma, double t_query) {
  FlrwReport rep;
  rep.tau = flrw_conformal_time(sigma, t_query);
  // Dyadic blocks of the future integral; summable iff they decay geometrically.
  std::vector<double> blocks;
  for (int k = 0; k < 20; ++k) {
    const double a = std::pow(2.0, k), b = 2.0 * a;
    blocks.push_back(integrate([&](double s) { return 1.0 / sigma(s); }, a, b, 1e-10));
  }
  rep.future_diverges = true;
  for (int k = 10; k < 20; ++k)
    if (blocks[k] < 0.5 * blocks[k - 1]) rep.future_diverges = false;
  // sigma(t)/t bounded near zero: no sustained dyadic growth.
  const double rho20 = sigma(std::pow(2.0, -20.0)) * std::pow(2.0, 20.0);
  const double rho40 = sigma(std::pow(2.0, -40.0)) * std::pow(2.0, 40.0);
  rep.near0_bounded = rho40 <= 4.0 * rho20;
  rep.no_horizons = rep.future_diverges && rep.near0_bounded;
  return rep;
}

Vec4d flrw_map(const std::function<double(double)>& sigma, const Vec4d& x, double* omega_tilde) {
  const double tau = flrw_conformal_time(sigma, x[0]);
  Vec4d conf(tau, x[1], x[2], x[3]);
  const Vec4d X = penrose_forward<double>(conf);
  if (omega_tilde) *omega_tilde = sigma(x[0]) * omega_cyl(X);
  return X;
}

}  // namespace pnrs
