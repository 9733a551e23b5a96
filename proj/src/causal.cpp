#include "pnrs/causal.hpp"

#include <random>

namespace pnrs {

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;

Vec4d embed_s3(double R, double th, double ph) {
  const double sR = std::sin(R);
  return Vec4d(std::cos(R), sR * std::cos(th), sR * std::sin(th) * std::cos(ph),
               sR * std::sin(th) * std::sin(ph));
}

Vec3d s3_coords(const Vec4d& u) {
  const Vec3d v = u.tail<3>();
  const double sR = v.norm();
  const double R = std::atan2(sR, u[0]);
  if (sR < 1e-12) return Vec3d(R, pi / 2, 0.0);
  const double th = std::atan2(std::hypot(v[1], v[2]), v[0]);
  const double ph = std::atan2(v[2], v[1]);
  return Vec3d(R, th, ph);
}

Vec5 embed_chart(Chart chart, const Vec4d& x) {
  Vec5 e = Vec5::Zero();
  e[0] = x[0];
  switch (chart) {
    case Chart::Cylinder:
      e.tail<4>() = embed_s3(x[1], x[2], x[3]);
      break;
    case Chart::Spherical: {
      const double r = x[1], th = x[2], ph = x[3];
      e[1] = r * std::sin(th) * std::cos(ph);
      e[2] = r * std::sin(th) * std::sin(ph);
      e[3] = r * std::cos(th);
      break;
    }
    case Chart::Cartesian:
      e.segment<3>(1) = x.tail<3>();
      break;
  }
  return e;
}

double wrap_pi(double a) {
  a = std::fmod(a + pi, 2.0 * pi);
  if (a < 0) a += 2.0 * pi;
  return a - pi;
}

// Canonical representative of signed-extension coordinates. The round metric
// extends smoothly through R<0 etc.; this folds samples back into the chart.
void normalize_chart(Chart chart, Vec4d& x, Vec4d& v) {
  if (chart == Chart::Cartesian) return;
  for (int guard = 0; guard < 8; ++guard) {
    bool changed = false;
    if (x[1] < 0.0) {
      x[1] = -x[1];
      v[1] = -v[1];
      x[2] = pi - x[2];
      v[2] = -v[2];
      x[3] += pi;
      changed = true;
    }
    if (chart == Chart::Cylinder && x[1] > pi) {
      x[1] = 2.0 * pi - x[1];
      v[1] = -v[1];
      x[2] = pi - x[2];
      v[2] = -v[2];
      x[3] += pi;
      changed = true;
    }
    if (x[2] < 0.0) {
      x[2] = -x[2];
      v[2] = -v[2];
      x[3] += pi;
      changed = true;
    }
    if (x[2] > pi) {
      x[2] = 2.0 * pi - x[2];
      v[2] = -v[2];
      x[3] += pi;
      changed = true;
    }
    if (!changed) break;
  }
  x[3] = wrap_pi(x[3]);
}

Vec4d geodesic_accel(const MetricSpec& m, const Vec4d& x, const Vec4d& v) {
  const Christoffeld G = christoffel_at(m, x);
  Vec4d a = Vec4d::Zero();
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int b = 0; b < 4; ++b) {
      if (v[b] == 0.0) continue;  // keeps pole cotangents out of radial motion
      for (int c = 0; c < 4; ++c) {
        if (v[c] == 0.0) continue;
        s += G[i](b, c) * v[b] * v[c];
      }
    }
    a[i] = -s;
  }
  return a;
}

struct Y8 {
  Vec4d x, v;
};

Y8 rk4_step(const MetricSpec& m, const Y8& y, double h) {
  auto f = [&](const Y8& z) { return Y8{z.v, geodesic_accel(m, z.x, z.v)}; };
  const Y8 k1 = f(y);
  const Y8 k2 = f({y.x + 0.5 * h * k1.x, y.v + 0.5 * h * k1.v});
  const Y8 k3 = f({y.x + 0.5 * h * k2.x, y.v + 0.5 * h * k2.v});
  const Y8 k4 = f({y.x + h * k3.x, y.v + h * k3.v});
  return {y.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          y.v + (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

double quad_form(const MetricSpec& m, const Vec4d& x, const Vec4d& v) {
  const Mat4d g = m(x);
  return v.dot(g * v);
}

}  // namespace

CausalKind causal_class(const MetricSpec& m, const PhaseState& st, double tol) {
  Vec4d xi = st.xi;
  const double n = xi.norm();
  if (n > 0) xi /= n;
  const double q = quad_form(m, st.x, xi);
  if (q < -tol) return CausalKind::Timelike;
  if (q > tol) return CausalKind::Spacelike;
  return CausalKind::Null;
}

Vec4d null_direction(const MetricSpec& m, const Vec4d& x, const Vec3d& dir) {
  const Mat4d g = m(x);
  const Vec3d d = dir.normalized();
  double a = 0.0, b = 0.0;
  for (int i = 0; i < 3; ++i) {
    b += 2.0 * g(0, i + 1) * d[i];
    for (int j = 0; j < 3; ++j) a += g(i + 1, j + 1) * d[i] * d[j];
  }
  const double c = g(0, 0);
  const double disc = b * b - 4.0 * a * c;
  if (a <= 0 || disc < 0) throw std::runtime_error("no future null direction along dir");
  const double s = (-b + std::sqrt(disc)) / (2.0 * a);
  Vec4d xi;
  xi << 1.0, s * d[0], s * d[1], s * d[2];
  return xi;
}

GeodesicPath geodesic_trace(const MetricSpec& m, const PhaseState& st, double max_param,
                            const StepControl& ctl) {
  if (st.xi.norm() == 0.0) throw std::runtime_error("geodesic needs a nonzero tangent");
  GeodesicPath path;
  Y8 y{st.x, st.xi};
  double s = 0.0, h = ctl.h_init;
  const double q0 = quad_form(m, y.x, y.v);
  path.s.push_back(0.0);
  path.states.push_back(st);
  while (s < max_param - 1e-14) {
    h = std::min({h, ctl.h_max, max_param - s});
    const Y8 y1 = rk4_step(m, y, h);
    const Y8 yh = rk4_step(m, rk4_step(m, y, 0.5 * h), 0.5 * h);
    const double err =
        std::max((y1.x - yh.x).cwiseAbs().maxCoeff(), (y1.v - yh.v).cwiseAbs().maxCoeff());
    const double est = err / 15.0;
    const double budget = ctl.tol * h;
    if (est <= budget || h <= ctl.h_min * 1.0001) {
      y.x = yh.x + (yh.x - y1.x) / 15.0;
      y.v = yh.v + (yh.v - y1.v) / 15.0;
      s += h;
      normalize_chart(m.chart, y.x, y.v);
      if (!y.x.allFinite() || !y.v.allFinite()) {
        path.reason = StopReason::Blowup;
        return path;
      }
      path.s.push_back(s);
      path.states.push_back({y.x, y.v});
      path.hamiltonian_drift =
          std::max(path.hamiltonian_drift, std::abs(quad_form(m, y.x, y.v) - q0));
      if (std::abs(y.x[0]) > ctl.t_domain) {
        path.reason = StopReason::DomainExit;
        return path;
      }
    }
    const double fac = est > 0 ? 0.9 * std::pow(budget / est, 0.25) : 4.0;
    h = std::max(ctl.h_min, h * std::min(4.0, std::max(0.1, fac)));
  }
  path.reason = StopReason::MaxParam;
  return path;
}

PhaseState GeodesicPath::state_at(double param) const {
  if (states.empty()) throw std::runtime_error("empty geodesic path");
  if (param <= s.front()) return states.front();
  if (param >= s.back()) return states.back();
  const auto it = std::upper_bound(s.begin(), s.end(), param);
  const int i = static_cast<int>(it - s.begin()) - 1;
  const double h = s[i + 1] - s[i];
  const double u = (param - s[i]) / h;
  const Vec4d &x0 = states[i].x, &x1 = states[i + 1].x;
  Vec4d d = x1 - x0;
  d[3] = wrap_pi(d[3]);
  const Vec4d v0 = h * states[i].xi, v1 = h * states[i + 1].xi;
  const double u2 = u * u, u3 = u2 * u;
  PhaseState out;
  out.x = x0 + u * v0 + u2 * (3.0 * d - 2.0 * v0 - v1) + u3 * (v0 + v1 - 2.0 * d);
  out.xi = (1.0 - u) * states[i].xi + u * states[i + 1].xi;
  return out;
}

double sphere_distance(const Vec4d& x, const Vec4d& y) {
  const Vec4d a = embed_s3(x[1], x[2], x[3]);
  const Vec4d b = embed_s3(y[1], y[2], y[3]);
  return 2.0 * std::asin(std::min(1.0, 0.5 * (a - b).norm()));
}

namespace {

// Spatial support curve for the lattice: straight chord (flat charts) or the
// great circle through both points (cylinder chart). Arc-length parameter.
struct SupportCurve {
  Chart chart;
  double d = 0.0;  // arc from x to y
  Vec3d p0, dir;   // flat charts
  Vec4d a, e;      // cylinder chart
  Vec3d x_sp;

  Vec3d coords(double s) const {
    switch (chart) {
      case Chart::Cartesian:
        return p0 + s * dir;
      case Chart::Spherical: {
        const Vec3d c = p0 + s * dir;
        const double r = c.norm();
        if (r < 1e-9) return Vec3d(1e-9, pi / 2, 0.0);
        return Vec3d(r, std::acos(std::min(1.0, std::max(-1.0, c[2] / r))),
                     std::atan2(c[1], c[0]));
      }
      case Chart::Cylinder:
        return s3_coords(a * std::cos(s) + e * std::sin(s));
    }
    return Vec3d::Zero();
  }
  double pole_sine(double s) const {
    if (chart == Chart::Cartesian) return 1.0;
    const Vec3d c = coords(s);
    if (chart == Chart::Spherical) return std::min(1.0, c[0]);
    return std::min(std::sin(c[0]), std::sin(c[0]) * std::sin(c[1]) + 0.5);
  }
};

SupportCurve make_support(Chart chart, const Vec4d& x, const Vec4d& y) {
  SupportCurve sc;
  sc.chart = chart;
  sc.x_sp = x.tail<3>();
  if (chart == Chart::Cylinder) {
    sc.a = embed_s3(x[1], x[2], x[3]);
    const Vec4d b = embed_s3(y[1], y[2], y[3]);
    sc.d = 2.0 * std::asin(std::min(1.0, 0.5 * (sc.a - b).norm()));
    Vec4d e = b - sc.a.dot(b) * sc.a;
    if (e.norm() < 1e-9) {
      int k = 0;
      sc.a.cwiseAbs().minCoeff(&k);
      e = Vec4d::Unit(k) - sc.a[k] * sc.a;
    }
    sc.e = e.normalized();
  } else {
    Vec3d cx = x.tail<3>(), cy = y.tail<3>();
    if (chart == Chart::Spherical) {
      auto to_cart = [](const Vec3d& p) {
        return Vec3d(p[0] * std::sin(p[1]) * std::cos(p[2]),
                     p[0] * std::sin(p[1]) * std::sin(p[2]), p[0] * std::cos(p[1]));
      };
      cx = to_cart(cx);
      cy = to_cart(cy);
    }
    sc.p0 = cx;
    sc.d = (cy - cx).norm();
    sc.dir = sc.d > 1e-12 ? Vec3d((cy - cx) / sc.d) : Vec3d(1, 0, 0);
  }
  return sc;
}

struct SegmentRater {
  const MetricSpec* m;
  const SupportCurve* sc;
  double qtol;

  // Proper time of the straight (T,s) segment, or -1 when not causal.
  double rate(double T1, double s1, double T2, double s2) const {
    static const double gx[4] = {0.5 - 0.43056815579702629, 0.5 - 0.16999052179242813,
                                 0.5 + 0.16999052179242813, 0.5 + 0.43056815579702629};
    static const double gw[4] = {0.17392742256872692, 0.32607257743127305,
                                 0.32607257743127305, 0.17392742256872692};
    const double dT = T2 - T1, ds = s2 - s1;
    if (dT <= 0) return -1.0;
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double sm = s1 + gx[k] * ds;
      const double Tm = T1 + gx[k] * dT;
      double q;
      if (sc->pole_sine(sm) < 0.05) {
        const Vec3d c = sc->coords(sm);
        const Vec4d xm(Tm, std::max(c[0], 0.05), pi / 2, 0.0);
        const Mat4d g = m->operator()(xm);
        q = g(0, 0) * dT * dT + g(1, 1) * ds * ds;
      } else {
        const double del = 1e-5 * std::max(1.0, std::abs(ds));
        Vec3d cp = sc->coords(sm + del), cm = sc->coords(sm - del);
        Vec3d dc = cp - cm;
        dc[2] = wrap_pi(dc[2]);
        const Vec3d c = sc->coords(sm);
        Vec4d vel;
        vel << dT, (ds / (2.0 * del)) * dc;
        const Vec4d xm(Tm, c[0], c[1], c[2]);
        q = quad_form(*m, xm, vel);
      }
      if (q > qtol) return -1.0;
      acc += gw[k] * std::sqrt(std::max(0.0, -q));
    }
    return acc;
  }
};

TimeSepResult tau_lattice(const MetricSpec& m, const Vec4d& x, const Vec4d& y,
                          int resolution) {
  TimeSepResult out;
  const double dT = y[0] - x[0];
  const SupportCurve sc = make_support(m.chart, x, y);
  const int nT = std::max(8, resolution);
  const double hT = dT / nT;
  out.floor = 4.0 * hT * hT + 1e-8;
  if (dT <= 0) return out;

  const double pad = 0.25 * (sc.d + dT) + 0.25;
  const double s_lo = -pad, s_hi = sc.d + pad;
  const int nS = std::min(200, std::max(8, static_cast<int>(std::ceil((s_hi - s_lo) / hT))));
  const double hS = (s_hi - s_lo) / nS;
  out.floor = 4.0 * (hT * hT + hS * hS) + 1e-8;

  SegmentRater rater{&m, &sc, 1e-10 * (1.0 + dT * dT)};

  // Local speed bound prunes the transition scan.
  double vb = 0.0;
  for (int j = 0; j <= nS; j += std::max(1, nS / 16)) {
    const double s = s_lo + j * hS;
    const Vec3d c = sc.coords(s);
    const Vec4d xm(x[0] + 0.5 * dT, c[0], c[1], c[2]);
    const double del = 1e-5;
    Vec3d dc = sc.coords(s + del) - sc.coords(s - del);
    dc[2] = wrap_pi(dc[2]);
    Vec4d e1;
    e1 << 0.0, dc / (2.0 * del);
    const Mat4d g = m(Vec4d(xm[0], std::max(0.05, xm[1]), xm[2], xm[3]));
    const double gss = std::max(1e-12, e1.dot(g * e1));
    vb = std::max(vb, std::sqrt(std::max(0.0, -g(0, 0)) / gss));
  }
  vb = 1.1 * std::max(vb, 1.0) + 0.1;

  // Exact endpoints; interior nodes on the lattice. Segments of any T span.
  const double direct = rater.rate(x[0], 0.0, y[0], sc.d);
  double best = direct;
  Eigen::ArrayXXd V = Eigen::ArrayXXd::Constant(nT + 1, nS + 1, -1.0);
  for (int i = 1; i <= nT; ++i) {
    const double Ti = x[0] + i * hT;
    for (int j = 0; j <= nS; ++j) {
      const double sj = s_lo + j * hS;
      if (std::abs(sj) > vb * (Ti - x[0]) + hS) continue;
      double v = rater.rate(x[0], 0.0, Ti, sj);
      for (int i2 = 1; i2 < i; ++i2) {
        const double span = (i - i2) * hT;
        const int kw = static_cast<int>(std::ceil((vb * span + hS) / hS));
        for (int j2 = std::max(0, j - kw); j2 <= std::min(nS, j + kw); ++j2) {
          if (V(i2, j2) < 0) continue;
          const double seg = rater.rate(x[0] + i2 * hT, s_lo + j2 * hS, Ti, sj);
          if (seg >= 0) v = std::max(v, V(i2, j2) + seg);
        }
      }
      V(i, j) = v;
      if (v >= 0 && std::abs(sj - sc.d) <= vb * (y[0] - Ti) + hS) {
        const double tail = rater.rate(Ti, sj, y[0], sc.d);
        if (tail >= 0) best = std::max(best, v + tail);
      }
    }
  }
  out.tau = std::max(0.0, best);
  return out;
}

}  // namespace

TimeSepResult time_separation(const MetricSpec& m, const Vec4d& x, const Vec4d& y,
                              int resolution, bool force_lattice) {
  if (m.id == "cylinder" && !force_lattice) {
    TimeSepResult out;
    out.exact = true;
    out.floor = 1e-12;
    const double dT = y[0] - x[0];
    const double d = sphere_distance(x, y);
    if (dT >= d) out.tau = std::sqrt(std::max(0.0, dT * dT - d * d));
    return out;
  }
  return tau_lattice(m, x, y, resolution);
}

// Conformal rescalings keep the causal order of the product cylinder, so
// relation tests (not tau values) may use the closed form for both.
static bool product_causal_order(const MetricSpec& m) {
  return m.id == "cylinder" || m.id == "cylinder+conf";
}

bool causally_related(const MetricSpec& m, const Vec4d& x, const Vec4d& y, int resolution) {
  if (product_causal_order(m)) return y[0] - x[0] >= sphere_distance(x, y) - 1e-12;
  if (y[0] <= x[0]) return false;
  const TimeSepResult r = time_separation(m, x, y, resolution);
  if (r.tau > r.floor) return true;
  const SupportCurve sc = make_support(m.chart, x, y);
  SegmentRater rater{&m, &sc, r.floor};
  return rater.rate(x[0], 0.0, y[0], sc.d) >= 0.0;
}

RhoResult cut_locus_rho(const MetricSpec& m, const PhaseState& st, double max_param,
                        int resolution, const StepControl& ctl) {
  const GeodesicPath path = geodesic_trace(m, st, max_param, ctl);
  const double L = path.length();
  const bool exact = product_causal_order(m);
  auto tau_at = [&](double s) {
    const Vec4d y = path.state_at(s).x;
    if (exact) return y[0] - st.x[0] - sphere_distance(st.x, y) - 1e-9;
    const TimeSepResult r = time_separation(m, st.x, y, resolution);
    return r.tau - 10.0 * r.floor;
  };
  const int n_scan = 24;
  double lo = 0.0, hi = -1.0;
  for (int k = 1; k <= n_scan; ++k) {
    const double s = L * k / n_scan;
    if (tau_at(s) > 0) {
      hi = s;
      break;
    }
    lo = s;
  }
  if (hi < 0) return {L, true};
  const int iters = exact ? 48 : 16;
  for (int it = 0; it < iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tau_at(mid) > 0 ? hi : lo) = mid;
  }
  return {0.5 * (lo + hi), false};
}

TimelikePath static_worldline(int id, double R, double theta, double phi, double s_lo,
                              double s_hi) {
  TimelikePath p;
  p.id = id;
  p.mu = [=](double s) { return Vec4d(s, R, theta, phi); };
  p.s_lo = s_lo;
  p.s_hi = s_hi;
  return p;
}

std::pair<double, double> observation_time(const MetricSpec& m, const TimelikePath& mu,
                                           const Vec4d& x, int resolution) {
  auto tau_pos = [&](const Vec4d& from, const Vec4d& to) {
    if (product_causal_order(m)) return to[0] - from[0] - sphere_distance(from, to) > 1e-9;
    const TimeSepResult r = time_separation(m, from, to, resolution);
    return r.tau > 10.0 * r.floor;
  };
  const int n = 64;
  const double span = mu.s_hi - mu.s_lo;
  double f_plus = mu.s_hi;
  for (int k = 0; k <= n; ++k) {
    const double s = mu.s_lo + span * k / n;
    if (tau_pos(x, mu.mu(s))) {
      if (k == 0) {
        f_plus = mu.s_lo;
        break;
      }
      double lo = mu.s_lo + span * (k - 1) / n, hi = s;
      const int iters = product_causal_order(m) ? 50 : 18;
      for (int it = 0; it < iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        (tau_pos(x, mu.mu(mid)) ? hi : lo) = mid;
      }
      f_plus = 0.5 * (lo + hi);
      break;
    }
  }
  double f_minus = mu.s_lo;
  for (int k = 0; k <= n; ++k) {
    const double s = mu.s_hi - span * k / n;
    if (tau_pos(mu.mu(s), x)) {
      if (k == 0) {
        f_minus = mu.s_hi;
        break;
      }
      double lo = s, hi = mu.s_hi - span * (k - 1) / n;
      const int iters = product_causal_order(m) ? 50 : 18;
      for (int it = 0; it < iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        (tau_pos(mu.mu(mid), x) ? lo : hi) = mid;
      }
      f_minus = 0.5 * (lo + hi);
      break;
    }
  }
  return {f_plus, f_minus};
}

ObservationSet earliest_obs_set(const MetricSpec& m, const Vec4d& q,
                                const std::vector<TimelikePath>& observers,
                                const ObsOptions& opt) {
  ObservationSet out;
  out.q = q;
  const Vec4d qa = embed_s3(q[1], q[2], q[3]);
  for (const auto& mu : observers) {
    const auto [fp, fm] = observation_time(m, mu, q, opt.resolution);
    const Vec4d target = mu.mu(fp);
    if (fp >= mu.s_hi - 1e-9 && target[0] - q[0] < sphere_distance(q, target) - 1e-6) {
      out.missed.push_back(mu.id);
      continue;
    }
    Arrival arr;
    arr.observer_id = mu.id;
    arr.parameter = fp;
    const double d = m.chart == Chart::Cylinder ? sphere_distance(q, target)
                                                : (target - q).tail<3>().norm();
    arr.geo_param = std::max(0.0, target[0] - q[0]);
    if (d > 1e-9 && m.chart == Chart::Cylinder) {
      if (std::sin(q[1]) < 1e-9) {
        arr.direction = Vec4d(1.0, q[1] < pi / 2 ? 1.0 : -1.0, 0.0, 0.0);
      } else {
        const Vec4d b = embed_s3(target[1], target[2], target[3]);
        Vec4d w = b - qa.dot(b) * qa;
        if (w.norm() > 1e-12) {
          w.normalize();
          const double del = 1e-6;
          Vec3d cp = s3_coords(qa * std::cos(del) + w * std::sin(del));
          Vec3d cm = s3_coords(qa * std::cos(del) - w * std::sin(del));
          Vec3d dc = cp - cm;
          dc[2] = wrap_pi(dc[2]);
          arr.direction = null_direction(m, q, dc / (2.0 * del));
        }
      }
      const RhoResult rho = cut_locus_rho(m, {q, arr.direction.norm() > 0
                                                      ? arr.direction
                                                      : Vec4d(1, 1, 0, 0)},
                                          opt.max_param, opt.resolution);
      arr.before_cut = rho.capped || arr.geo_param <= rho.rho + 1e-6;
    }
    out.arrivals.push_back(arr);
  }
  std::sort(out.arrivals.begin(), out.arrivals.end(),
            [](const Arrival& a, const Arrival& b) { return a.observer_id < b.observer_id; });
  return out;
}

IntersectionVerdict intersection_finder(const MetricSpec& m,
                                        const std::array<PhaseState, 4>& states,
                                        double max_param, const IntersectOptions& opt) {
  for (int j = 0; j < 4; ++j)
    for (int k = j + 1; k < 4; ++k)
      if (causally_related(m, states[j].x, states[k].x, opt.resolution) ||
          causally_related(m, states[k].x, states[j].x, opt.resolution))
        throw std::invalid_argument("intersection base points must be causally unrelated");

  std::array<GeodesicPath, 4> paths;
  for (int j = 0; j < 4; ++j) paths[j] = geodesic_trace(m, states[j], max_param, opt.ctl);

  const int M = 320;
  std::array<std::vector<Vec5>, 4> emb;
  std::array<std::vector<double>, 4> prm;
  for (int j = 0; j < 4; ++j) {
    const double L = paths[j].length();
    emb[j].resize(M);
    prm[j].resize(M);
    for (int k = 0; k < M; ++k) {
      const double t = L * (k + 1) / M;
      prm[j][k] = t;
      emb[j][k] = embed_chart(m.chart, paths[j].state_at(t).x);
    }
  }

  auto nearest = [&](int j, const Vec5& c) {
    int best = 0;
    double bd = 1e300;
    for (int k = 0; k < M; ++k) {
      const double d2 = (emb[j][k] - c).squaredNorm();
      if (d2 < bd) {
        bd = d2;
        best = k;
      }
    }
    return best;
  };

  // Seed from the gamma_1 sample minimizing the joint spread, then relax.
  std::array<double, 4> t{};
  double best_spread = 1e300;
  for (int k1 = 0; k1 < M; k1 += 4) {
    const Vec5 c = emb[0][k1];
    double sp = 0.0;
    std::array<int, 4> idx{k1, 0, 0, 0};
    for (int j = 1; j < 4; ++j) {
      idx[j] = nearest(j, c);
      sp += (emb[j][idx[j]] - c).squaredNorm();
    }
    if (sp < best_spread) {
      best_spread = sp;
      for (int j = 0; j < 4; ++j) t[j] = prm[j][idx[j]];
    }
  }

  auto point5 = [&](int j, double tj) {
    return embed_chart(m.chart, paths[j].state_at(tj).x);
  };
  double residual = 1e300;
  Vec5 c;
  for (int it = 0; it < 60; ++it) {
    c.setZero();
    for (int j = 0; j < 4; ++j) c += point5(j, t[j]);
    c /= 4.0;
    for (int j = 0; j < 4; ++j) {
      const double L = paths[j].length();
      double h = L / M;
      double tj = t[j];
      for (int pass = 0; pass < 24; ++pass) {
        const double d0 = (point5(j, tj) - c).squaredNorm();
        const double dp = (point5(j, std::min(L, tj + h)) - c).squaredNorm();
        const double dm = (point5(j, std::max(0.0, tj - h)) - c).squaredNorm();
        if (dp < d0 && dp <= dm)
          tj = std::min(L, tj + h);
        else if (dm < d0)
          tj = std::max(0.0, tj - h);
        else
          h *= 0.5;
        if (h < 1e-12) break;
      }
      t[j] = tj;
    }
    double r = 0.0;
    for (int j = 0; j < 4; ++j) r = std::max(r, (point5(j, t[j]) - c).norm());
    if (std::abs(residual - r) < 1e-13) {
      residual = r;
      break;
    }
    residual = r;
  }

  IntersectionVerdict v;
  v.residual = residual;
  v.t = t;
  Eigen::Matrix4d tan;
  for (int j = 0; j < 4; ++j) {
    const Vec4d xi = paths[j].state_at(t[j]).xi;
    tan.row(j) = (xi / std::max(1e-300, xi.norm())).transpose();
  }
  v.sv_min = tan.jacobiSvd().singularValues().minCoeff();
  v.transversal = v.sv_min > opt.sv_threshold;

  Vec4d qavg = Vec4d::Zero();
  const Vec4d ref = paths[0].state_at(t[0]).x;
  for (int j = 0; j < 4; ++j) {
    Vec4d xj = paths[j].state_at(t[j]).x;
    xj[3] = ref[3] + wrap_pi(xj[3] - ref[3]);
    qavg += xj;
  }
  v.q = qavg / 4.0;

  const double capture = 1.5 * (pi / opt.resolution);
  if (residual < capture) {
    v.before_cut = true;
    for (int j = 0; j < 4; ++j) {
      if (t[j] < 1e-6) v.before_cut = false;
      const RhoResult rho = cut_locus_rho(m, states[j], max_param, opt.resolution, opt.ctl);
      if (!rho.capped && t[j] > rho.rho + 1e-6) v.before_cut = false;
    }
    v.tag = v.before_cut ? IntersectCase::B : IntersectCase::Degenerate;
  } else {
    v.tag = IntersectCase::A;
  }
  return v;
}

int causal_slice_crossings(const MetricSpec& m, int n_paths, int resolution,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double h = pi / resolution;
  const double t_dom = 2.2;
  int worst = 0;
  for (int p = 0; p < n_paths; ++p) {
    Vec4d x(-t_dom, 0.2 + (pi - 0.4) * unif(rng), 0.2 + (pi - 0.4) * unif(rng),
            -pi + 2.0 * pi * unif(rng));
    int crossings = 0;
    double prev_t = x[0];
    while (x[0] < t_dom) {
      const double alpha = 2.0 * pi * unif(rng);
      const double frac = unif(rng);
      Vec4d v(1.0, frac * std::cos(alpha), frac * std::sin(alpha) / std::max(0.2, std::sin(x[1])),
              0.0);
      x += h * v;
      normalize_chart(m.chart, x, v);
      if (prev_t < 0.0 && x[0] >= 0.0) ++crossings;
      prev_t = x[0];
    }
    worst = std::max(worst, crossings);
  }
  return worst;
}

}  // namespace pnrs
