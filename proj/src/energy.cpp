#include "pnrs/energy.hpp"

#include <random>

namespace pnrs {

double energy_momentum_contract(const ScalarField4& psi, const MetricSpec& m, const Vec4d& V,
                                const Vec4d& W, const Vec4d& x, double h) {
  if (!psi) throw std::invalid_argument("energy contraction needs a field");
  Vec4d dpsi;
  for (int mu = 0; mu < 4; ++mu) {
    Vec4d xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    dpsi[mu] = (psi(xp) - psi(xm)) / (2.0 * h);
  }
  const Mat4d g = m(x);
  const double q = dpsi.transpose() * g.inverse() * dpsi;
  return dpsi.dot(V) * dpsi.dot(W) - 0.5 * q * (V.transpose() * g * W)(0);
}

namespace {

// Time-derivative stacks from stored slices; order o >= 2 needs one interior
// neighbour on each side.
ArrayXXd time_deriv(const Trajectory& tr, int order, int i) {
  const double dt = tr.slice_spacing();
  switch (order) {
    case 0: return tr.slices[i];
    case 1: return tr.dslices[i];
    case 2: return (tr.slices[i + 1] - 2.0 * tr.slices[i] + tr.slices[i - 1]) / (dt * dt);
    case 3: return (tr.dslices[i + 1] - 2.0 * tr.dslices[i] + tr.dslices[i - 1]) / (dt * dt);
    default: throw std::invalid_argument("time derivatives implemented to order 3");
  }
}

double grad_energy(const ArrayXXd& u, const ArrayXXd& ut, const GridSpec& g) {
  double acc = std::pow(l2_norm(ut, g), 2) + std::pow(l2_norm(d_r(u, g), g), 2);
  if (g.n_theta > 1) acc += std::pow(l2_norm(d_theta_frame(u, g), g), 2);
  return 0.5 * acc;
}

}  // namespace

EnergyReport verify_energy_inequality(const CoefficientFields& coeffs, const SourceTerm& F,
                                      const CauchyData& data, int k, const GridSpec& grid,
                                      const SolveOptions& opt) {
  if (k < 1 || k > 2) throw std::invalid_argument("derivative levels implemented for k = 1, 2");
  SolveOptions o = opt;
  o.max_slices = std::max(o.max_slices, 400);
  const Trajectory traj = solve_semilinear(grid, coeffs, F, &data, o);
  if (traj.blew_up)
    throw std::runtime_error("energy run blew up; inputs exceed the smallness budget");

  const GridSpec& g = traj.grid;
  const int ns = static_cast<int>(traj.times.size());
  if (ns < 5) throw std::runtime_error("too few stored slices for the derivative ladder");
  const double dt = traj.slice_spacing();

  EnergyReport rep;
  rep.f.assign(k + 1, {});
  rep.lhs.assign(k + 1, {});

  for (int i = 1; i + 1 < ns; ++i) {
    rep.times.push_back(traj.times[i]);
    for (int l = 0; l <= k; ++l) {
      const ArrayXXd ul = time_deriv(traj, l, i);
      const ArrayXXd ul1 = time_deriv(traj, l + 1, i);
      rep.f[l].push_back(grad_energy(ul, ul1, g));
      rep.lhs[l].push_back(sobolev_norm(ul, g, k - l + 1) + sobolev_norm(ul1, g, k - l));
    }
  }

  // Space-time source norm plus the initial-slice data norms.
  double st2 = 0.0;
  std::vector<ArrayXXd> fs(ns);
  for (int i = 0; i < ns; ++i) {
    const double t = traj.times[i];
    fs[i] = (F.f && t >= F.t_lo - dt && t <= F.t_hi + dt) ? sample_field(F.f, g, t)
                                                          : ArrayXXd::Zero(g.n_r, g.n_theta);
  }
  for (int i = 1; i + 1 < ns; ++i) {
    for (int l = 0; l <= k; ++l) {
      ArrayXXd fl;
      if (l == 0) fl = fs[i];
      else if (l == 1) fl = (fs[i + 1] - fs[i - 1]) / (2.0 * dt);
      else fl = (fs[i + 1] - 2.0 * fs[i] + fs[i - 1]) / (dt * dt);
      const double nl = sobolev_norm(fl, g, k - l);
      st2 += dt * nl * nl;
    }
  }
  const ArrayXXd p0 = sample_field(data.phi0, g, data.T0);
  const ArrayXXd p1 = sample_field(data.phi1, g, data.T0);
  rep.rhs_norm = std::sqrt(st2) + sobolev_norm(p0, g, k + 1) + sobolev_norm(p1, g, k);

  rep.c_emp.assign(k + 1, 0.0);
  for (int l = 0; l <= k; ++l) {
    double peak = 0.0;
    for (const double v : rep.lhs[l]) peak = std::max(peak, v);
    for (const double v : rep.f[l]) rep.positive = rep.positive && v >= -1e-12;
    rep.c_emp[l] = peak < 1e-14 ? 0.0 : peak / std::max(rep.rhs_norm, 1e-300);
    rep.c_emp_max = std::max(rep.c_emp_max, rep.c_emp[l]);
  }
  return rep;
}

EnergySuiteResult energy_inequality_suite(std::uint64_t seed, int n_cases, int k,
                                          const GridSpec& grid) {
  struct Case {
    double a0, w0, c0, a1, w1, c1;  // data bumps
    double af, wf, cf, tf;          // source bump
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), ctr(0.8, pi - 0.8), wid(0.25, 0.5);
  std::uniform_real_distribution<double> tc(grid.t_min + 0.5, grid.t_min + 1.2);
  std::vector<Case> cases;
  for (int i = 0; i < n_cases; ++i)
    cases.push_back({1e-2 * amp(rng), wid(rng), ctr(rng), 1e-2 * amp(rng), wid(rng), ctr(rng),
                     1e-2 * amp(rng), wid(rng), ctr(rng), tc(rng)});

  CoefficientFields coeffs;
  coeffs.B = constant_field(1.0);
  coeffs.D = constant_field(0.1);
  coeffs.A = constant_field(0.05);
  coeffs.kappa = 4;

  auto run = [&](const GridSpec& g, EnergySuiteResult& out) {
    double worst = 0.0;
    for (const auto& c : cases) {
      CauchyData data;
      data.T0 = g.t_min;
      data.phi0 = [c](const Vec4d& x) {
        const double d = x[1] - c.c0;
        return c.a0 * std::exp(-d * d / (c.w0 * c.w0));
      };
      data.phi1 = [c](const Vec4d& x) {
        const double d = x[1] - c.c1;
        return c.a1 * std::exp(-d * d / (c.w1 * c.w1));
      };
      SourceTerm F;
      F.t_lo = c.tf - 4.0 * c.wf;
      F.t_hi = c.tf + 4.0 * c.wf;
      F.region_id = "suite-bump";
      F.f = [c](const Vec4d& x) {
        const double dT = x[0] - c.tf, dR = x[1] - c.cf;
        return c.af * std::exp(-(dT * dT + dR * dR) / (c.wf * c.wf));
      };
      const EnergyReport rep = verify_energy_inequality(coeffs, F, data, k, g);
      if (rep.positive && std::isfinite(rep.c_emp_max)) ++out.held;
      worst = std::max(worst, rep.c_emp_max);
    }
    out.cases = n_cases;
    return worst;
  };

  EnergySuiteResult out;
  out.c_emp = run(grid, out);
  GridSpec fine = grid;
  fine.n_r = grid.n_r * 3 / 2;
  EnergySuiteResult scratch;  // held is counted on the base grid only
  out.c_emp_refined = run(fine, scratch);
  const double ratio = out.c_emp_refined / std::max(out.c_emp, 1e-300);
  out.stable = ratio > 1.0 / 1.2 && ratio < 1.2;
  return out;
}

double GronwallBound::operator()(double t) const {
  if (!valid_at(t) || ts.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const size_t i = std::min(ts.size() - 1, static_cast<size_t>(it - ts.begin()));
  if (i == 0) return values[0];
  const double f = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  return values[i - 1] + f * (values[i] - values[i - 1]);
}

GronwallBound gronwall_bound(double u0, const std::function<double(double)>& v,
                             const std::function<double(double)>& w, double p, double t_lo,
                             double t_hi, int n) {
  if (p < 0.0 || p == 1.0) throw std::invalid_argument("exponent must be >= 0 and != 1");
  if (u0 < 0.0) throw std::invalid_argument("u0 must be nonnegative");
  GronwallBound b;
  b.u0 = u0;
  b.p = p;
  b.t_lo = t_lo;
  b.t_hi = t_hi;
  const double h = (t_hi - t_lo) / n;

  double V = 0.0, I = 0.0;
  double v_prev = v(t_lo), g_prev = w(t_lo);
  const double head = p > 1.0 && u0 == 0.0 ? 0.0 : std::pow(u0, 1.0 - p);
  for (int i = 0; i <= n; ++i) {
    const double t = t_lo + i * h;
    if (i > 0) {
      const double v_cur = v(t);
      V += 0.5 * h * (v_prev + v_cur);
      const double g_cur = w(t) * std::exp((p - 1.0) * V);
      I += 0.5 * h * (g_prev + g_cur);
      v_prev = v_cur;
      g_prev = g_cur;
    }
    b.ts.push_back(t);
    if (p > 1.0 && u0 == 0.0) {
      b.values.push_back(0.0);  // the u0 -> 0 limit of the bound
      continue;
    }
    const double bracket = head + (1.0 - p) * I;
    if (bracket <= 0.0) {
      if (b.breakdown == std::numeric_limits<double>::infinity()) b.breakdown = t;
      b.values.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      b.values.push_back(std::exp(V) * std::pow(bracket, 1.0 / (1.0 - p)));
    }
  }
  return b;
}

GronwallVerdict gronwall_check(const std::vector<double>& t, const std::vector<double>& u,
                               const GronwallBound& bound) {
  GronwallVerdict v;
  for (size_t i = 0; i < t.size() && i < u.size(); ++i) {
    if (!bound.valid_at(t[i])) continue;
    const double b = bound(t[i]);
    if (std::isfinite(b) && u[i] > b * (1.0 + 1e-9) + 1e-12) {
      v.ok = false;
      v.first_violation = t[i];
      return v;
    }
  }
  return v;
}

}  // namespace pnrs
