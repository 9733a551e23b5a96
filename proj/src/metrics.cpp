#include "pnrs/metrics.hpp"

namespace pnrs {

namespace {

Christoffeld zero_christoffel(const Vec4d&) {
  Christoffeld gamma;
  for (auto& m : gamma) m.setZero();
  return gamma;
}

Christoffeld cylinder_christoffel(const Vec4d& x) {
  const double R = x[1], th = x[2];
  const double sR = std::sin(R), cR = std::cos(R);
  const double st = std::sin(th), ct = std::cos(th);
  Christoffeld gamma;
  for (auto& m : gamma) m.setZero();
  gamma[1](2, 2) = -sR * cR;
  gamma[1](3, 3) = -sR * cR * st * st;
  gamma[2](1, 2) = gamma[2](2, 1) = cR / sR;
  gamma[2](3, 3) = -st * ct;
  gamma[3](1, 3) = gamma[3](3, 1) = cR / sR;
  gamma[3](2, 3) = gamma[3](3, 2) = ct / st;
  return gamma;
}

Christoffeld minkowski_spherical_christoffel(const Vec4d& x) {
  const double r = x[1], th = x[2];
  const double st = std::sin(th), ct = std::cos(th);
  Christoffeld gamma;
  for (auto& m : gamma) m.setZero();
  gamma[1](2, 2) = -r;
  gamma[1](3, 3) = -r * st * st;
  gamma[2](1, 2) = gamma[2](2, 1) = 1.0 / r;
  gamma[2](3, 3) = -st * ct;
  gamma[3](1, 3) = gamma[3](3, 1) = 1.0 / r;
  gamma[3](2, 3) = gamma[3](3, 2) = ct / st;
  return gamma;
}

double get(const std::map<std::string, double>& p, const std::string& k, double def) {
  auto it = p.find(k);
  return it == p.end() ? def : it->second;
}

}  // namespace

Christoffeld christoffel_at(const MetricSpec& spec, const Vec4d& x) {
  if (spec.christoffel_analytic) return spec.christoffel_analytic(x);
  const Vec4d xs = chart_safe_point(spec.chart, x, 4.0 * spec.fd_step);
  return christoffel_fd(spec.eval, xs, spec.fd_step);
}

CurvatureReport scalar_curvature_at(const MetricSpec& spec, const Vec4d& x) {
  const double h = spec.fd_step;
  const Vec4d xs = chart_safe_point(spec.chart, x, 16.0 * h);
  auto gamma_of = [&](const Vec4d& y) {
    if (spec.christoffel_analytic) return spec.christoffel_analytic(y);
    return christoffel_fd(spec.eval, y, h);
  };
  // dG[a][b](c,d) = partial_a Gamma^b_{cd}, Richardson-extrapolated.
  std::array<Christoffeld, 4> dG;
  for (int a = 0; a < 4; ++a) {
    Vec4d e = Vec4d::Zero();
    e[a] = 1.0;
    auto diff = [&](double hh) {
      Christoffeld gp = gamma_of(xs + hh * e), gm = gamma_of(xs - hh * e);
      Christoffeld out;
      for (int b = 0; b < 4; ++b) out[b] = (gp[b] - gm[b]) / (2.0 * hh);
      return out;
    };
    Christoffeld d1 = diff(h), d2 = diff(h / 2.0);
    for (int b = 0; b < 4; ++b) dG[a][b] = (4.0 * d2[b] - d1[b]) / 3.0;
  }
  const Christoffeld G = gamma_of(xs);
  const Mat4d ginv = Mat4d(spec.eval(xs)).inverse();
  // Ricci_{bd} = dG[a][a](d,b) - dG[d][a](a,b) + G^a_{ae}G^e_{db} - G^a_{de}G^e_{ab}
  Mat4d ricci = Mat4d::Zero();
  for (int b = 0; b < 4; ++b)
    for (int d = 0; d < 4; ++d) {
      double s = 0.0;
      for (int a = 0; a < 4; ++a) {
        s += dG[a][a](d, b) - dG[d][a](a, b);
        for (int e = 0; e < 4; ++e) s += G[a](a, e) * G[e](d, b) - G[a](d, e) * G[e](a, b);
      }
      ricci(b, d) = s;
    }
  CurvatureReport rep;
  rep.scalar = (ginv * ricci).trace();
  rep.step = h;
  return rep;
}

bool lorentzian_signature_ok(const Mat4d& g) {
  Eigen::SelfAdjointEigenSolver<Mat4d> es(g);
  int neg = 0, pos = 0;
  for (int i = 0; i < 4; ++i) {
    if (es.eigenvalues()[i] < 0) ++neg;
    if (es.eigenvalues()[i] > 0) ++pos;
  }
  return neg == 1 && pos == 3;
}

MetricSpec metric_from_key(const std::string& key, const std::map<std::string, double>& params) {
  MetricSpec m;
  m.id = key;
  if (key == "minkowski") {
    m.chart = Chart::Cartesian;
    m.eval = [](const Vec4d& x) { return minkowski_metric(x); };
    m.christoffel_analytic = zero_christoffel;
  } else if (key == "minkowski-spherical") {
    m.chart = Chart::Spherical;
    m.eval = [](const Vec4d& x) { return minkowski_spherical_metric(x); };
    m.christoffel_analytic = minkowski_spherical_christoffel;
  } else if (key == "cylinder") {
    m.chart = Chart::Cylinder;
    m.eval = [](const Vec4d& x) { return cylinder_metric(x); };
    m.christoffel_analytic = cylinder_christoffel;
  } else if (key == "mod-schwarzschild") {
    const double rs = get(params, "r_s", 1.0);
    m.chart = Chart::Spherical;
    m.eval = [rs](const Vec4d& x) { return mod_schwarzschild_metric(x, rs); };
  } else if (key == "flrw-eds") {
    m.chart = Chart::Cartesian;
    m.eval = [](const Vec4d& x) {
      return flrw_metric(x, [](double t) { return std::pow(t, 2.0 / 3.0); });
    };
  } else if (key == "flrw-lin") {
    m.chart = Chart::Cartesian;
    m.eval = [](const Vec4d& x) { return flrw_metric(x, [](double t) { return t; }); };
  } else if (key == "flrw-exp") {
    m.chart = Chart::Cartesian;
    m.eval = [](const Vec4d& x) { return flrw_metric(x, [](double t) { return std::exp(t); }); };
  } else if (key == "minkowski-bump") {
    BumpSpec b;
    b.i = static_cast<int>(get(params, "i", 1));
    b.j = static_cast<int>(get(params, "j", 1));
    b.amplitude = get(params, "amplitude", 0.05);
    b.width = get(params, "width", 1.0);
    b.center = Vec4d(get(params, "c0", 0.0), get(params, "c1", 0.0), get(params, "c2", 0.0),
                     get(params, "c3", 0.0));
    return with_bumps(metric_from_key("minkowski"), {b});
  } else if (key == "cylinder-bump") {
    BumpSpec b;
    b.i = static_cast<int>(get(params, "i", 1));
    b.j = static_cast<int>(get(params, "j", 1));
    b.amplitude = get(params, "amplitude", 0.05);
    b.width = get(params, "width", 0.3);
    b.center = Vec4d(get(params, "c0", 0.0), get(params, "c1", pi / 2), get(params, "c2", pi / 2),
                     get(params, "c3", 0.0));
    return with_bumps(metric_from_key("cylinder"), {b});
  } else {
    throw std::runtime_error("unknown metric key: " + key);
  }
  return m;
}

MetricSpec with_bumps(MetricSpec base, std::vector<BumpSpec> bumps) {
  MetricSpec m;
  m.id = base.id + "+bump";
  m.chart = base.chart;
  m.fd_step = base.fd_step;
  auto baseval = base.eval;
  m.eval = [baseval, bumps](const Vec4d& x) {
    Mat4d g = baseval(x);
    for (const auto& b : bumps) {
      const double v = bump_value(b, x);
      g(b.i, b.j) += v;
      if (b.i != b.j) g(b.j, b.i) += v;
    }
    return g;
  };
  return m;
}

MetricSpec conformal_rescale(MetricSpec base, ScalarField4 gamma) {
  MetricSpec m;
  m.id = base.id + "+conf";
  m.chart = base.chart;
  m.fd_step = base.fd_step;
  auto baseval = base.eval;
  m.eval = [baseval, gamma](const Vec4d& x) {
    return Mat4d(std::exp(2.0 * gamma(x)) * baseval(x));
  };
  return m;
}

}  // namespace pnrs
