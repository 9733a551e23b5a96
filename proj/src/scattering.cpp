#include "pnrs/scattering.hpp"

namespace pnrs {

double cap_radius_of_gate(double t1) {
  if (t1 >= 0.0 || t1 <= -pi / 2) return 0.0;
  return std::tan(pi / 2 + t1);
}

namespace {

ConcentrationVerdict check_window(double lo, double hi, bool empty, double t1, double tol) {
  ConcentrationVerdict v;
  v.r_phys = cap_radius_of_gate(t1);
  v.window_lo = -pi - t1;
  v.window_hi = t1;
  v.support_lo = lo;
  v.support_hi = hi;
  if (empty) {
    v.member = true;
    return v;
  }
  v.member = lo >= v.window_lo - tol && hi <= v.window_hi + tol && t1 > -pi / 2;
  return v;
}

}  // namespace

ConcentrationVerdict concentrated_family_check(const RadialTrace& h, double t1, double tol) {
  return check_window(h.lo, h.hi, h.hi <= h.lo, t1, tol);
}

ConcentrationVerdict concentrated_family_check(const RadiationFieldData& h, double t1,
                                               double tol) {
  return check_window(h.support_lo, h.support_hi, h.l2() == 0.0, t1, tol);
}

ScatterOutcome scattering_functional(const ScatteringRequest& req, const RadialTrace& h_minus,
                                     const GoursatSetup& setup) {
  ScatterOutcome out;
  if (req.t1 <= -pi || req.t1 >= 0.0) {
    out.refusal = "gate t1 must lie in (-pi, 0)";
    return out;
  }
  const ConcentrationVerdict cv = concentrated_family_check(h_minus, req.t1);
  if (!cv.member) {
    out.refusal = "incoming support not contained in S_-(R(t1))";
    return out;
  }
  const CutoffSpec cut = CutoffSpec::for_region(setup.n);
  const bool empty = h_minus.hi <= h_minus.lo;
  if (!empty) {
    // The cutoff band must land inside K_n and keep clear of the antipodal
    // wrap of the trace profile, which pins the admissible p window.
    const double t_lo_min = 0.5 * (1.0 / setup.n - pi) + 0.5 * setup.margin;
    const double t_hi_max = -0.5 * (cut.c_hi + setup.margin);
    if (h_minus.lo < t_lo_min || h_minus.hi > t_hi_max) {
      out.refusal = "incoming support not reachable from the K_n band";
      return out;
    }
  }
  out.h_norm = trace_sobolev(h_minus, req.k);
  if (out.h_norm >= req.epsilon) {
    out.refusal = "incoming norm " + std::to_string(out.h_norm) +
                  " exceeds the budget " + std::to_string(req.epsilon);
    return out;
  }

  FreeWave wave;
  wave.G = h_minus;
  const SourceTerm src = goursat_source(wave, cut);

  GridSpec g;
  g.mode = GridMode::Radial;
  g.n_r = setup.n_r;
  g.cfl = setup.cfl;
  g.t_min = empty ? -pi : src.t_lo - 0.05;
  g.t_max = pi;

  out.traj = solve_semilinear(g, setup.coeffs, src, nullptr, setup.solve);
  if (out.traj.blew_up) {
    out.refusal = "solution blew up at T = " + std::to_string(out.traj.blowup_time);
    return out;
  }
  out.h_plus = radiation_field_extract(out.traj, ScriSide::Future);
  out.value = out.h_plus.value_at(req.q_T);
  out.accepted = true;
  return out;
}

std::vector<Vec4d> observation_points(double t_plus, int n_t, int n_p, double margin,
                                      double clearance) {
  std::vector<Vec4d> pts;
  const double q_lo = -pi + std::max(margin, clearance), q_hi = t_plus - pi - margin;
  if (q_hi <= q_lo) return pts;
  for (int i = 0; i < n_t; ++i) {
    const double q = q_lo + (q_hi - q_lo) * (i + 0.5) / n_t;
    const double p_lo = pi + std::max(margin, clearance);
    const double p_hi = std::min(pi + t_plus - margin, q + 2.0 * pi - margin);
    if (p_hi <= p_lo) continue;
    for (int j = 0; j < n_p; ++j) {
      const double p = p_lo + (p_hi - p_lo) * (j + 0.5) / n_p;
      pts.emplace_back(0.5 * (p + q), 0.5 * (p - q), pi / 2, 0.0);
    }
  }
  return pts;
}

double source_norm(const SourceTerm& f, int k, int n) {
  if (!f.f || f.t_hi <= f.t_lo) return 0.0;
  const double pad = 0.05;
  const double t_lo = f.t_lo - pad, t_hi = f.t_hi + pad;
  const double ht = (t_hi - t_lo) / n, hr = pi / n;
  Eigen::ArrayXXd v(n + 1, n + 1);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      v(i, j) = f.f(Vec4d(t_lo + i * ht, j * hr, pi / 2, 0.0));
  double acc = 0.0;
  // All mixed derivatives up to total order k, centered in the interior.
  std::vector<Eigen::ArrayXXd> level{v};
  for (int ord = 0; ord <= k; ++ord) {
    for (const auto& w : level)
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
          const double s = std::sin(j * hr);
          acc += w(i, j) * w(i, j) * s * s * ht * hr;
        }
    if (ord == k) break;
    std::vector<Eigen::ArrayXXd> next;
    for (const auto& w : level) {
      Eigen::ArrayXXd dt = Eigen::ArrayXXd::Zero(n + 1, n + 1);
      Eigen::ArrayXXd dr = Eigen::ArrayXXd::Zero(n + 1, n + 1);
      for (int i = 1; i < n; ++i)
        for (int j = 0; j <= n; ++j) dt(i, j) = (w(i + 1, j) - w(i - 1, j)) / (2.0 * ht);
      for (int i = 0; i <= n; ++i)
        for (int j = 1; j < n; ++j) dr(i, j) = (w(i, j + 1) - w(i, j - 1)) / (2.0 * hr);
      next.push_back(std::move(dt));
      next.push_back(std::move(dr));
    }
    level = std::move(next);
  }
  return std::sqrt(acc);
}

S2SResult source_to_solution(const SourceRegion& region, const SourceTerm& f, double t_plus,
                             const CoefficientFields& coeffs, const GridSpec& grid,
                             const SolveOptions& opt, double norm_budget) {
  if (t_plus <= 0.0 || t_plus >= pi) throw std::invalid_argument("t_plus must be in (0, pi)");
  if (f.f) {
    // Spot-check that the source respects its advertised region.
    double peak = 0.0, leak = 0.0;
    const int n = 96;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const double T = f.t_lo - 0.2 + (f.t_hi - f.t_lo + 0.4) * i / n;
        const double R = pi * (j + 0.5) / (n + 1);
        const double a = std::abs(f.f(Vec4d(T, R, pi / 2, 0.0)));
        peak = std::max(peak, a);
        if (!region.contains(T, R)) leak = std::max(leak, a);
      }
    if (leak > 1e-9 * std::max(peak, 1e-300))
      throw std::invalid_argument("source is not supported in K_" + std::to_string(region.n));
    const double nf = source_norm(f);
    if (nf >= norm_budget)
      throw std::invalid_argument("source norm " + std::to_string(nf) +
                                  " exceeds the budget");
  }
  const double t_need = 0.5 * (pi + t_plus);
  if (grid.t_max < t_need - 1e-12)
    throw std::invalid_argument("grid must reach T = (pi + t_plus)/2");

  const Trajectory traj = solve_semilinear(grid, coeffs, f, nullptr, opt);
  if (traj.blew_up)
    throw std::runtime_error("solution blew up at T = " + std::to_string(traj.blowup_time));

  S2SResult res;
  res.t_plus = t_plus;
  res.points = observation_points(t_plus);
  res.values.resize(static_cast<Eigen::Index>(res.points.size()));
  for (size_t i = 0; i < res.points.size(); ++i) {
    const Vec4d& x = res.points[i];
    res.values[static_cast<Eigen::Index>(i)] = traj.value_at(x[0], x[1], x[2]);
  }
  if (res.values.size() > 0) {
    res.l2 = std::sqrt(res.values.squaredNorm() / res.values.size());
    res.linf = res.values.cwiseAbs().maxCoeff();
  }
  for (const auto& s : traj.slices) res.sol_norm = std::max(res.sol_norm, s.abs().maxCoeff());
  return res;
}

S2SStages scattering_to_s2s(const SourceRegion& region, const SourceTerm& f, double t_plus,
                            const GoursatSetup& setup) {
  S2SStages st;

  try {
    CoefficientFields lin;
    lin.B = setup.coeffs.B;
    GridSpec g1;
    g1.mode = GridMode::Radial;
    g1.n_r = setup.n_r;
    g1.cfl = setup.cfl;
    g1.t_min = -pi;
    g1.t_max = 0.1;
    const Trajectory t1run = causal_inverse(g1, lin.B, f, setup.solve);
    st.h_minus = radiation_field_extract(t1run, ScriSide::Past);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage 1 (incoming trace): ") + e.what());
  }

  const double gap = 0.02;
  st.t1 = std::max(st.h_minus.support_hi, -pi - st.h_minus.support_lo) + gap;
  if (st.t1 >= 0.0 || st.t1 <= -pi / 2)
    throw std::runtime_error("stage 2 (gate): incoming trace is not concentrated");

  ScatteringRequest req;
  req.t1 = st.t1;
  req.q_T = 0.5 * t_plus;
  req.epsilon = setup.epsilon;
  req.k = setup.k;
  st.scatter = scattering_functional(req, trace_from_field(st.h_minus), setup);
  if (!st.scatter.accepted)
    throw std::runtime_error("stage 2 (functional): " + st.scatter.refusal);

  // The continuation needs the raw outgoing profile. Ahead of the transported
  // pulse it carries the power-nonlinearity precursor, which sits orders of
  // magnitude below the pulse and would be clipped by the support floor.
  RadialTrace hp = trace_from_field(st.scatter.h_plus);
  if (!st.scatter.h_plus.param.empty()) {
    hp.lo = st.scatter.h_plus.param.front();
    hp.hi = st.scatter.h_plus.param.back();
  }
  st.result.t_plus = t_plus;
  st.result.points = observation_points(t_plus);
  st.result.values.resize(static_cast<Eigen::Index>(st.result.points.size()));
  for (size_t i = 0; i < st.result.points.size(); ++i) {
    const Vec4d& x = st.result.points[i];
    st.result.values[static_cast<Eigen::Index>(i)] = nplus_field(hp, x[0], x[1]);
  }
  if (st.result.values.size() > 0) {
    st.result.l2 = std::sqrt(st.result.values.squaredNorm() / st.result.values.size());
    st.result.linf = st.result.values.cwiseAbs().maxCoeff();
  }
  for (const auto& s : st.scatter.traj.slices)
    st.result.sol_norm = std::max(st.result.sol_norm, s.abs().maxCoeff());
  return st;
}

}  // namespace pnrs
