#include "pnrs/waves.hpp"

namespace pnrs {

namespace {

ArrayXXd powi(const ArrayXXd& u, int k) {
  ArrayXXd r = ArrayXXd::Ones(u.rows(), u.cols());
  ArrayXXd base = u;
  int e = k;
  while (e > 0) {
    if (e & 1) r *= base;
    base = (base * base).eval();
    e >>= 1;
  }
  return r;
}

// Face coefficients of the flux-form spatial operator
//   Lap u = (1/w) [ d_R(cR dR u) + d_theta(cT dtheta u) ],
// with w = sqrt(det g_spatial). Pole faces carry exactly zero coefficient.
struct OperatorCache {
  ArrayXXd crf;  // (n_r+1) x n_theta, R faces
  ArrayXXd ctf;  // n_r x (n_theta+1), theta faces
  ArrayXXd wc;   // cell centers
};

// h-ratios of a diagonal static cylinder perturbation: hRR = g_RR,
// hTT = g_thth / sin^2 R, hPP = g_phph / (sin^2 R sin^2 th); all -> 1 for the
// product metric. Perturbations must stay away from the poles.
void metric_ratios(const MetricSpec* m, double R, double th, double& hRR, double& hTT,
                   double& hPP) {
  hRR = hTT = hPP = 1.0;
  if (!m || !m->eval) return;
  const Mat4d g = m->eval(Vec4d(0.0, R, th, 0.0));
  const double s2 = std::sin(R) * std::sin(R);
  const double st2 = std::sin(th) * std::sin(th);
  hRR = g(1, 1);
  if (s2 > 1e-20) hTT = g(2, 2) / s2;
  if (s2 * st2 > 1e-20) hPP = g(3, 3) / (s2 * st2);
}

OperatorCache build_operator(const GridSpec& g, const MetricSpec* metric) {
  if (metric && metric->eval) {
    if (metric->chart != Chart::Cylinder)
      throw std::runtime_error("solver metric must use the cylinder chart");
    const Mat4d g0 = metric->eval(Vec4d(0.0, pi / 2, pi / 2, 0.0));
    const Mat4d g1 = metric->eval(Vec4d(1.0, pi / 2, pi / 2, 0.0));
    if (std::abs(g0(0, 0) + 1.0) > 1e-12 || std::abs(g0(0, 1)) > 1e-12 ||
        std::abs(g0(1, 2)) > 1e-12 || (g0 - g1).cwiseAbs().maxCoeff() > 1e-12)
      throw std::runtime_error("solver metric must be static with g_TT=-1 and diagonal");
  }
  const bool axi = g.n_theta > 1;
  OperatorCache oc;
  oc.crf.setZero(g.n_r + 1, g.n_theta);
  oc.ctf.setZero(g.n_r, g.n_theta + 1);
  oc.wc.setOnes(g.n_r, g.n_theta);
  for (int i = 0; i <= g.n_r; ++i) {
    const double Rf = g.r_lo + i * g.h_r();
    const double s2 = std::sin(Rf) * std::sin(Rf);
    for (int j = 0; j < g.n_theta; ++j) {
      const double th = g.theta_at(j);
      double hRR, hTT, hPP;
      metric_ratios(metric, Rf, th, hRR, hTT, hPP);
      double c = s2 * std::sqrt(hTT * hPP / hRR);
      if (axi) c *= std::sin(th);
      oc.crf(i, j) = c;
    }
  }
  if (axi) {
    for (int i = 0; i < g.n_r; ++i) {
      const double R = g.r_at(i);
      for (int j = 0; j <= g.n_theta; ++j) {
        const double thf = j * g.h_theta();
        double hRR, hTT, hPP;
        metric_ratios(metric, R, thf, hRR, hTT, hPP);
        oc.ctf(i, j) = std::sin(thf) * std::sqrt(hRR * hPP / hTT);
      }
    }
  }
  for (int i = 0; i < g.n_r; ++i) {
    const double R = g.r_at(i);
    const double s2 = std::sin(R) * std::sin(R);
    for (int j = 0; j < g.n_theta; ++j) {
      const double th = g.theta_at(j);
      double hRR, hTT, hPP;
      metric_ratios(metric, R, th, hRR, hTT, hPP);
      double w = s2 * std::sqrt(hRR * hTT * hPP);
      if (axi) w *= std::sin(th);
      oc.wc(i, j) = w;
    }
  }
  return oc;
}

void apply_lap(const OperatorCache& oc, const GridSpec& g, const ArrayXXd& u, ArrayXXd& out) {
  const int n = g.n_r, m = g.n_theta;
  const double ir2 = 1.0 / (g.h_r() * g.h_r());
  const double it2 = m > 1 ? 1.0 / (g.h_theta() * g.h_theta()) : 0.0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      if (i + 1 < n) acc += oc.crf(i + 1, j) * (u(i + 1, j) - u(i, j));
      if (i > 0) acc -= oc.crf(i, j) * (u(i, j) - u(i - 1, j));
      acc *= ir2;
      if (m > 1) {
        double at = 0.0;
        if (j + 1 < m) at += oc.ctf(i, j + 1) * (u(i, j + 1) - u(i, j));
        if (j > 0) at -= oc.ctf(i, j) * (u(i, j) - u(i, j - 1));
        acc += at * it2;
      }
      out(i, j) = acc / oc.wc(i, j);
    }
  }
}

struct CoeffSampler {
  const CoefficientFields* cf;
  const GridSpec* g;
  bool is_static = false;
  ArrayXXd A, D, B;
  bool has_A = false, has_D = false;

  void init(const CoefficientFields& c, const GridSpec& grid, bool stat, double t0) {
    cf = &c;
    g = &grid;
    is_static = stat;
    has_A = static_cast<bool>(c.A);
    has_D = static_cast<bool>(c.D);
    if (is_static) sample(t0);
  }
  void sample(double T) {
    A = has_A ? sample_field(cf->A, *g, T) : ArrayXXd();
    D = has_D ? sample_field(cf->D, *g, T) : ArrayXXd();
    B = cf->B ? sample_field(cf->B, *g, T) : ArrayXXd::Constant(g->n_r, g->n_theta, 1.0);
  }
};

Trajectory evolve(const GridSpec& g, const CoefficientFields& coeffs, const SourceTerm& src,
                  const CauchyData* initial, const SolveOptions& opt) {
  const double t0 = initial ? initial->T0 : g.t_min;
  if (!initial && src.f && src.t_lo < t0 - 1e-9)
    throw std::runtime_error("rest-in-past start lies after the source window opens");
  if (g.t_max <= t0) throw std::runtime_error("empty time range");

  int n = std::max(2, static_cast<int>(std::ceil((g.t_max - t0) / g.dt())));
  const int stride = std::max(1, (n + opt.max_slices - 1) / opt.max_slices);
  n = stride * ((n + stride - 1) / stride);
  const double dt = (g.t_max - t0) / n;

  const OperatorCache oc = build_operator(g, opt.spatial_metric);
  CoeffSampler cs;
  cs.init(coeffs, g, opt.coeffs_static, t0);
  const int kappa = coeffs.kappa;

  Trajectory traj;
  traj.grid = g;
  traj.dt = dt;
  traj.probes.reserve(opt.probes.size());
  for (const auto& p : opt.probes) traj.probes.push_back(ProbeSeries{p, {}, {}});

  ArrayXXd u_prev = ArrayXXd::Zero(g.n_r, g.n_theta);
  ArrayXXd u_curr = ArrayXXd::Zero(g.n_r, g.n_theta);
  ArrayXXd lap(g.n_r, g.n_theta);

  double scale = 1e-12;
  auto source_at = [&](double T) -> ArrayXXd {
    if (!src.f || T < src.t_lo - dt || T > src.t_hi + dt)
      return ArrayXXd::Zero(g.n_r, g.n_theta);
    ArrayXXd f = sample_field(src.f, g, T);
    scale = std::max(scale, f.abs().maxCoeff());
    return f;
  };
  auto rhs = [&](const ArrayXXd& u, double T) -> ArrayXXd {
    if (!cs.is_static) cs.sample(T);
    apply_lap(oc, g, u, lap);
    ArrayXXd r = lap - cs.B * u + source_at(T);
    if (cs.has_D) r -= cs.D * u;
    if (cs.has_A) r -= cs.A * powi(u, kappa);
    return r;
  };

  ArrayXXd d0 = ArrayXXd::Zero(g.n_r, g.n_theta);
  if (initial) {
    u_prev = sample_field(initial->phi0, g, t0);
    d0 = sample_field(initial->phi1, g, t0);
    scale = std::max({scale, u_prev.abs().maxCoeff(), d0.abs().maxCoeff()});
    u_curr = u_prev + dt * d0 + 0.5 * dt * dt * rhs(u_prev, t0);
  }
  traj.times.push_back(t0);
  traj.slices.push_back(u_prev);
  traj.dslices.push_back(d0);
  for (auto& ps : traj.probes) {
    ps.t.push_back(t0);
    ps.value.push_back(interp_grid(u_prev, g, ps.where[0], ps.where[1]));
  }

  // u_prev holds step m-1, u_curr step m; one step past n feeds the final
  // central derivative.
  for (int m = 1; m <= n; ++m) {
    const double Tm = t0 + m * dt;
    const ArrayXXd u_next = 2.0 * u_curr - u_prev + dt * dt * rhs(u_curr, Tm);
    const double amax = u_next.abs().maxCoeff();
    if (!std::isfinite(amax) || amax > opt.blowup_guard * scale) {
      traj.blew_up = true;
      traj.blowup_time = Tm;
      break;
    }
    if (m % stride == 0) {
      traj.times.push_back(Tm);
      traj.slices.push_back(u_curr);
      traj.dslices.push_back((u_next - u_prev) / (2.0 * dt));
    }
    for (auto& ps : traj.probes) {
      ps.t.push_back(Tm);
      ps.value.push_back(interp_grid(u_curr, g, ps.where[0], ps.where[1]));
    }
    u_prev = u_curr;
    u_curr = u_next;
  }
  return traj;
}

}  // namespace

Trajectory solve_semilinear(const GridSpec& grid, const CoefficientFields& coeffs,
                            const SourceTerm& src, const CauchyData* initial,
                            const SolveOptions& opt) {
  return evolve(grid, coeffs, src, initial, opt);
}

Trajectory causal_inverse(const GridSpec& grid, const ScalarField4& B, const SourceTerm& src,
                          const SolveOptions& opt) {
  CoefficientFields cf;
  cf.B = B;
  return evolve(grid, cf, src, nullptr, opt);
}

double Trajectory::value_at(double T, double R, double theta) const {
  const double dT = slice_spacing();
  const int ns = static_cast<int>(times.size());
  double s = (T - times.front()) / dT;
  int i1 = static_cast<int>(std::floor(s));
  const double f = s - i1;
  auto at = [&](int i) {
    i = std::min(std::max(i, 0), ns - 1);
    return interp_grid(slices[i], grid, R, theta);
  };
  const double p0 = at(i1 - 1), p1 = at(i1), p2 = at(i1 + 1), p3 = at(i1 + 2);
  return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                        f * (3.0 * (p1 - p2) + p3 - p0)));
}

double Trajectory::dvalue_at(double T, double R, double theta) const {
  const double dT = slice_spacing();
  const int ns = static_cast<int>(times.size());
  double s = (T - times.front()) / dT;
  int i1 = static_cast<int>(std::floor(s));
  const double f = s - i1;
  auto at = [&](int i) {
    i = std::min(std::max(i, 0), ns - 1);
    return interp_grid(dslices[i], grid, R, theta);
  };
  const double p0 = at(i1 - 1), p1 = at(i1), p2 = at(i1 + 1), p3 = at(i1 + 2);
  return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                        f * (3.0 * (p1 - p2) + p3 - p0)));
}

ArrayXXd Trajectory::slice_at(double T) const {
  const double dT = slice_spacing();
  const int ns = static_cast<int>(times.size());
  double s = (T - times.front()) / dT;
  int i1 = static_cast<int>(std::floor(s));
  const double f = s - i1;
  auto idx = [&](int i) { return std::min(std::max(i, 0), ns - 1); };
  const ArrayXXd& p0 = slices[idx(i1 - 1)];
  const ArrayXXd& p1 = slices[idx(i1)];
  const ArrayXXd& p2 = slices[idx(i1 + 1)];
  const ArrayXXd& p3 = slices[idx(i1 + 2)];
  return p1 + 0.5 * f *
                  (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                  f * (3.0 * (p1 - p2) + p3 - p0)));
}

SpectralSolution solve_linear_spectral(const GridSpec& g, const CauchyData& data) {
  const int N = g.n_r;
  const int K = std::min(g.k_max, N);
  SpectralSolution sol;
  sol.K = K;
  sol.a.setZero(K);
  sol.b.setZero(K);
  ArrayXd w0(N), w1(N);
  for (int i = 0; i < N; ++i) {
    const double R = g.r_at(i);
    const double s = std::sin(R);
    w0[i] = (data.phi0 ? data.phi0(Vec4d(data.T0, R, pi / 2, 0.0)) : 0.0) * s;
    w1[i] = (data.phi1 ? data.phi1(Vec4d(data.T0, R, pi / 2, 0.0)) : 0.0) * s;
  }
  // sum_i sin(aR_i) sin(bR_i) = N/2 delta_ab for a,b in 1..N on this grid
  for (int k = 0; k < K; ++k) {
    double ca = 0.0, cb = 0.0;
    for (int i = 0; i < N; ++i) {
      const double sv = std::sin((k + 1) * g.r_at(i));
      ca += w0[i] * sv;
      cb += w1[i] * sv;
    }
    sol.a[k] = 2.0 * ca / N;
    sol.b[k] = 2.0 * cb / N / (k + 1);
  }
  double captured = 0.0, total = w0.square().sum() + w1.square().sum();
  for (int k = 0; k < K; ++k)
    captured += 0.5 * N * (sol.a[k] * sol.a[k] + sol.b[k] * sol.b[k] * (k + 1) * (k + 1));
  sol.truncation_energy = total > 0 ? std::max(0.0, 1.0 - captured / total) : 0.0;
  // shift phases so the stored coefficients refer to T=0
  if (data.T0 != 0.0) {
    for (int k = 0; k < K; ++k) {
      const double w = k + 1, c = std::cos(w * data.T0), s = std::sin(w * data.T0);
      const double a0 = sol.a[k], b0 = sol.b[k];
      sol.a[k] = a0 * c - b0 * s;
      sol.b[k] = b0 * c + a0 * s;
    }
  }
  return sol;
}

double SpectralSolution::eval_w(double T, double R) const {
  double w = 0.0;
  for (int k = 0; k < K; ++k) {
    const double f = k + 1;
    w += (a[k] * std::cos(f * T) + b[k] * std::sin(f * T)) * std::sin(f * R);
  }
  return w;
}

double SpectralSolution::eval(double T, double R) const {
  double s = std::sin(R);
  if (std::abs(s) < 1e-9) s = s >= 0 ? 1e-9 : -1e-9;
  return eval_w(T, R) / s;
}

ArrayXXd SpectralSolution::slice(const GridSpec& g, double T) const {
  ArrayXXd out(g.n_r, 1);
  for (int i = 0; i < g.n_r; ++i) out(i, 0) = eval(T, g.r_at(i));
  return out;
}

double RadiationFieldData::value_at(double T, double theta) const {
  if (param.empty()) return 0.0;
  const double dP = param.size() > 1 ? param[1] - param[0] : 1.0;
  const int np = static_cast<int>(param.size());
  double s = (T - param.front()) / dP;
  int i1 = static_cast<int>(std::floor(s));
  const double f = s - i1;
  const int nt = static_cast<int>(values.cols());
  int j = nt > 1 ? std::min(std::max(static_cast<int>(theta / (pi / nt)), 0), nt - 1) : 0;
  auto at = [&](int i) { return values(std::min(std::max(i, 0), np - 1), j); };
  const double p0 = at(i1 - 1), p1 = at(i1), p2 = at(i1 + 1), p3 = at(i1 + 2);
  return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                        f * (3.0 * (p1 - p2) + p3 - p0)));
}

double RadiationFieldData::l2() const {
  if (param.size() < 2) return 0.0;
  const double dP = param[1] - param[0];
  return std::sqrt(values.square().sum() * dP / std::max(1, static_cast<int>(values.cols())));
}

namespace {

RadiationFieldData extract_from(const std::function<double(double, double, double)>& val,
                                ScriSide side, double lo, double hi, int n_param, int n_theta,
                                bool partial, double tail_floor) {
  RadiationFieldData rf;
  rf.side = side;
  rf.partial = partial;
  rf.values.setZero(n_param, n_theta);
  rf.param.resize(n_param);
  const double d = (hi - lo) / (n_param - 1);
  for (int i = 0; i < n_param; ++i) {
    const double T = lo + i * d;
    rf.param[i] = T;
    const double R = side == ScriSide::Past ? T + pi : pi - T;
    for (int j = 0; j < n_theta; ++j) {
      const double th = n_theta > 1 ? (j + 0.5) * pi / n_theta : pi / 2;
      rf.values(i, j) = val(T, R, th);
    }
  }
  const double vmax = rf.values.abs().maxCoeff();
  rf.support_lo = hi;
  rf.support_hi = lo;
  for (int i = 0; i < n_param; ++i)
    if (rf.values.row(i).abs().maxCoeff() > tail_floor * std::max(vmax, 1e-300)) {
      rf.support_lo = std::min(rf.support_lo, rf.param[i]);
      rf.support_hi = std::max(rf.support_hi, rf.param[i]);
    }
  return rf;
}

}  // namespace

RadiationFieldData radiation_field_extract(const Trajectory& traj, ScriSide side) {
  const double margin = 2.0 * traj.slice_spacing();
  double lo = side == ScriSide::Past ? -pi + traj.grid.h_r() : traj.grid.h_r();
  double hi = side == ScriSide::Past ? -traj.grid.h_r() : pi - traj.grid.h_r();
  bool partial = false;
  if (traj.t_begin() + margin > lo) {
    lo = traj.t_begin() + margin;
    partial = true;
  }
  if (traj.t_end() - margin < hi) {
    hi = traj.t_end() - margin;
    partial = true;
  }
  if (hi <= lo) throw std::runtime_error("trajectory does not cover the scri patch");
  const int n_param = std::max(64, 2 * static_cast<int>((hi - lo) / traj.grid.h_r()));
  // Support is measured against a floor above the scheme's dispersion tail,
  // which sits near 1e-4 of the peak for second-order stepping.
  return extract_from(
      [&](double T, double R, double th) { return traj.value_at(T, R, th); }, side, lo, hi,
      n_param, traj.grid.n_theta, partial, 1e-3);
}

RadiationFieldData radiation_field_extract_spectral(const SpectralSolution& sol, ScriSide side,
                                                    int n_param) {
  const double eps = 1e-6;
  const double lo = side == ScriSide::Past ? -pi + eps : eps;
  const double hi = side == ScriSide::Past ? -eps : pi - eps;
  return extract_from([&](double T, double R, double) { return sol.eval(T, R); }, side, lo, hi,
                      n_param, 1, false, 1e-10);
}

namespace {

LimitRoute limit_route_impl(const std::function<double(double, double)>& u_phys,
                            const std::vector<double>& s_grid) {
  const std::vector<double> ts{8.0, 16.0, 32.0, 64.0, 128.0};
  LimitRoute out;
  out.s = s_grid;
  for (double s : s_grid) {
    Eigen::MatrixXd M(ts.size(), 3);
    Eigen::VectorXd y(ts.size()), z(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
      const double t = ts[i];
      M(i, 0) = 1.0;
      M(i, 1) = 1.0 / t;
      M(i, 2) = 1.0 / (t * t);
      y(i) = t * u_phys(t + s, t);
      z(i) = t * omega_phys(Vec4d(t + s, t, pi / 2, 0.0));
    }
    const Eigen::Matrix3d MtM = M.transpose() * M;
    out.value.push_back(MtM.ldlt().solve(M.transpose() * y)(0));
    out.fit_factor.push_back(MtM.ldlt().solve(M.transpose() * z)(0));
  }
  return out;
}

}  // namespace

LimitRoute radiation_limit_route(const std::function<double(double, double)>& u_phys,
                                 const std::vector<double>& s_grid) {
  return limit_route_impl(u_phys, s_grid);
}

LimitRoute radiation_limit_route(const Trajectory& traj, const std::vector<double>& s_grid) {
  auto u_phys = [&](double t, double r) {
    const Vec4d x(t, r, pi / 2, 0.0);
    const Vec4d X = penrose_forward<double>(x);
    return omega_phys(x) * traj.value_at(X[0], X[1], X[2]);
  };
  return limit_route_impl(u_phys, s_grid);
}

double shell_distance(double R, double T, double cap_radius) {
  double d = 1e300;
  const double aT = std::abs(T);
  for (int k = -2; k <= 2; ++k)
    for (int s = -1; s <= 1; s += 2) d = std::min(d, std::abs(R - s * (aT + 2.0 * pi * k)));
  return std::max(0.0, d - cap_radius);
}

namespace {

HuygensReport huygens_impl(const std::function<ArrayXXd(double)>& slice, const GridSpec& g,
                           double cap_radius, const std::vector<double>& times,
                           const std::function<double(double)>& trace) {
  HuygensReport rep;
  const ArrayXXd w = volume_weights(g);
  const double margin = 3.0 * g.h_r();
  for (double T : times) {
    const ArrayXXd u = slice(T);
    double inside = 0.0, outside = 0.0;
    for (int i = 0; i < g.n_r; ++i) {
      const double d = shell_distance(g.r_at(i), T, cap_radius);
      for (int j = 0; j < g.n_theta; ++j) {
        const double m = u(i, j) * u(i, j) * w(i, j);
        (d > margin ? outside : inside) += m;
      }
    }
    rep.times.push_back(T);
    const double frac = inside + outside > 0 ? outside / (inside + outside) : 0.0;
    rep.outside_fraction.push_back(frac);
    rep.max_outside_fraction = std::max(rep.max_outside_fraction, frac);
  }
  // trace values on the scri segment adjacent to the corner point at T=0
  if (trace) {
    const double t_lo = (cap_radius - pi) / 2.0 + 0.2;
    for (double T = t_lo; T < -1e-3; T += 1e-3)
      rep.near_i0_trace_max = std::max(rep.near_i0_trace_max, std::abs(trace(T)));
  }
  return rep;
}

}  // namespace

HuygensReport huygens_support_check(const SpectralSolution& sol, const GridSpec& g,
                                    double cap_radius, const std::vector<double>& times) {
  return huygens_impl([&](double T) { return sol.slice(g, T); }, g, cap_radius, times,
                      [&](double T) { return sol.eval(T, T + pi); });
}

HuygensReport huygens_support_check(const Trajectory& traj, double cap_radius) {
  std::vector<double> times;
  for (size_t i = 0; i < traj.times.size(); i += std::max<size_t>(1, traj.times.size() / 40))
    times.push_back(traj.times[i]);
  const bool covers_scri = traj.t_begin() < -pi + 0.3;
  std::function<double(double)> trace;
  if (covers_scri)
    trace = [&](double T) { return traj.value_at(T, T + pi, pi / 2); };
  return huygens_impl([&](double T) { return traj.slice_at(T); }, traj.grid, cap_radius, times,
                      trace);
}

}  // namespace pnrs
