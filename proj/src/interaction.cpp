#include "pnrs/interaction.hpp"

#include <memory>
#include <sstream>

namespace pnrs {

namespace {

double sin_max(const GridSpec& g) {
  if (g.r_at(0) <= pi / 2 && pi / 2 <= g.r_at(g.n_r - 1)) return 1.0;
  return std::max(std::sin(g.r_at(0)), std::sin(g.r_at(g.n_r - 1)));
}

// Central-difference weights for the m-th derivative, offsets in units of the
// step. Orders beyond 3 would need wider stencils than the experiments use.
std::vector<std::pair<int, double>> central_stencil(int m) {
  switch (m) {
    case 1: return {{-1, -0.5}, {1, 0.5}};
    case 2: return {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
    case 3: return {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
    default: throw std::runtime_error("eps4 stencil implemented for orders 1 to 3");
  }
}

std::vector<Vec2d> probe_points(const std::vector<ObserverSpec>& obs) {
  std::vector<Vec2d> p;
  p.reserve(obs.size());
  for (const auto& o : obs) p.emplace_back(o.R, o.theta);
  return p;
}

// Detection internals shared with the public windowed_detection.
struct DetectionTrace {
  double arrival = std::numeric_limits<double>::quiet_NaN();
  double margin = 0.0;
  double peak = 0.0;  // max windowed energy
};

DetectionTrace run_detection(const ProbeSeries& s, const BandpassSettings& bs) {
  DetectionTrace out;
  const int n = static_cast<int>(s.value.size());
  if (n < 16 || s.t.size() < 2) return out;
  const double dt = s.t[1] - s.t[0];
  const int per = std::max(4, static_cast<int>(std::lround(2.0 * pi / bs.omega0 / dt)));
  const int w_smooth = 2 * per, w_energy = 4 * per;

  std::vector<double> ps(n + 1, 0.0);
  for (int i = 0; i < n; ++i) ps[i + 1] = ps[i] + s.value[i];
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    const int a = std::max(0, i - w_smooth), b = std::min(n - 1, i + w_smooth);
    y[i] = s.value[i] - (ps[b + 1] - ps[a]) / (b + 1 - a);
  }
  std::vector<double> ps2(n + 1, 0.0);
  for (int i = 0; i < n; ++i) ps2[i + 1] = ps2[i] + y[i] * y[i];
  std::vector<double> e(n);
  for (int i = 0; i < n; ++i) {
    const int a = std::max(0, i - w_energy);
    e[i] = std::sqrt((ps2[i + 1] - ps2[a]) / (i + 1 - a));
  }

  std::vector<double> tmp = e;
  std::nth_element(tmp.begin(), tmp.begin() + n / 2, tmp.end());
  const double base = tmp[n / 2];
  const double thr = std::max(bs.factor * base, bs.abs_floor);
  for (int i = 0; i < n; ++i) {
    out.peak = std::max(out.peak, e[i]);
    if (std::isnan(out.arrival) && e[i] > thr && e[i] > 0.0) out.arrival = s.t[i];
  }
  out.margin = out.peak / std::max(base, 1e-15 * out.peak + 1e-300);
  return out;
}

}  // namespace

SourceTerm build_packet_source(const WavePacketSpec& spec, const GridSpec& grid) {
  const double need = 2.0 * pi / spec.omega0 / 8.0;  // finest resolvable spacing
  const double have_r = grid.h_r();
  const double have_t = grid.n_theta > 1 ? grid.h_theta() * sin_max(grid) : 0.0;
  if (std::max(have_r, have_t) > need) {
    std::ostringstream msg;
    msg << "carrier omega0=" << spec.omega0 << " needs 8 points per wavelength: require n_r >= "
        << static_cast<int>(std::ceil((grid.r_hi - grid.r_lo) / need));
    if (grid.n_theta > 1)
      msg << " and n_theta >= " << static_cast<int>(std::ceil(pi * sin_max(grid) / need));
    msg << " (have " << grid.n_r << ", " << grid.n_theta << ")";
    throw std::runtime_error(msg.str());
  }

  const Vec2d k = spec.dir.normalized();
  const double T0 = spec.x0[0], R0 = spec.x0[1], th0 = spec.x0[2];
  const double sR0 = std::sin(R0);
  const double amp = spec.amplitude, om = spec.omega0;
  const double w2 = 2.0 * spec.width * spec.width;
  const double cut2 = 16.0 * spec.width * spec.width;

  SourceTerm src;
  src.t_lo = T0 - 4.0 * spec.width;
  src.t_hi = T0 + 4.0 * spec.width;
  src.region_id = "packet";
  src.f = [=](const Vec4d& x) {
    const double dT = x[0] - T0, dR = x[1] - R0, da = sR0 * (x[2] - th0);
    const double r2 = dT * dT + dR * dR + da * da;
    if (r2 > cut2) return 0.0;
    return amp * std::exp(-r2 / w2) * std::cos(om * (k[0] * dR + k[1] * da - dT));
  };
  return src;
}

bool packets_causally_independent(const MetricSpec& m,
                                  const std::array<WavePacketSpec, 4>& packets,
                                  int resolution) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      if (causally_related(m, packets[i].x0, packets[j].x0, resolution)) return false;
    }
  return true;
}

InteractionResult kappa_derivative_direct(const std::array<WavePacketSpec, 4>& packets,
                                          const CoefficientFields& coeffs,
                                          const GridSpec& grid,
                                          const std::vector<ObserverSpec>& observers,
                                          const SolveOptions& opt) {
  CoefficientFields lin = coeffs;
  lin.A = {};

  SolveOptions lopt = opt;
  lopt.probes.clear();
  lopt.max_slices = 4000;  // the cross term needs the linear waves at full rate

  auto waves = std::make_shared<std::vector<Trajectory>>();
  double t_first = 1e300;
  for (const auto& p : packets) {
    SourceTerm sj = build_packet_source(p, grid);
    if (sj.t_lo < grid.t_min - 1e-9)
      throw std::runtime_error("packet source opens before the grid start");
    t_first = std::min(t_first, sj.t_lo);
    waves->push_back(solve_semilinear(grid, lin, sj, nullptr, lopt));
    if (waves->back().blew_up) throw std::runtime_error("linear packet solve blew up");
  }

  const int m4 = coeffs.kappa - 3;
  double kfact = 1.0;
  for (int i = 2; i <= coeffs.kappa; ++i) kfact *= i;
  const ScalarField4 A = coeffs.A;

  SourceTerm cross;
  cross.t_lo = t_first;
  cross.t_hi = grid.t_max;
  cross.region_id = "kappa-cross-term";
  cross.f = [waves, A, kfact, m4](const Vec4d& x) -> double {
    if (!A) return 0.0;
    const double a = A(x);
    if (a == 0.0) return 0.0;
    double v = 1.0;
    for (int j = 0; j < 3; ++j) v *= (*waves)[j].value_at(x[0], x[1], x[2]);
    const double u4 = (*waves)[3].value_at(x[0], x[1], x[2]);
    for (int i = 0; i < m4; ++i) v *= u4;
    return -kfact * a * v;
  };

  SolveOptions sopt = opt;
  sopt.probes = probe_points(observers);

  InteractionResult out;
  out.method = "direct";
  out.observers = observers;
  out.field = solve_semilinear(grid, lin, cross, nullptr, sopt);
  if (out.field.blew_up) throw std::runtime_error("interaction solve blew up");
  out.series = out.field.probes;
  return out;
}

InteractionResult kappa_derivative_fd(const std::array<WavePacketSpec, 4>& packets,
                                      const CoefficientFields& coeffs, const GridSpec& grid,
                                      const std::vector<ObserverSpec>& observers,
                                      double eps_step, const SolveOptions& opt) {
  const int m4 = coeffs.kappa - 3;
  const auto st4 = central_stencil(m4);
  const double e = eps_step;

  std::array<ScalarField4, 4> f;
  double t_lo = 1e300, t_hi = -1e300;
  for (int j = 0; j < 4; ++j) {
    SourceTerm sj = build_packet_source(packets[j], grid);
    if (sj.t_lo < grid.t_min - 1e-9)
      throw std::runtime_error("packet source opens before the grid start");
    t_lo = std::min(t_lo, sj.t_lo);
    t_hi = std::max(t_hi, sj.t_hi);
    f[j] = sj.f;
  }

  SolveOptions sopt = opt;
  sopt.probes = probe_points(observers);

  InteractionResult out;
  out.method = "fd-stencil";
  out.observers = observers;
  bool first = true;

  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1})
      for (int s3 : {-1, 1})
        for (const auto& [k4, c4] : st4) {
          const double w =
              (s1 * s2 * s3) / (8.0 * e * e * e) * c4 / std::pow(e, m4);
          const Vec4d epsv(s1 * e, s2 * e, s3 * e, k4 * e);

          SourceTerm node;
          node.t_lo = t_lo;
          node.t_hi = t_hi;
          node.region_id = "packet-sum";
          node.f = [f, epsv](const Vec4d& x) {
            double v = 0.0;
            for (int j = 0; j < 4; ++j)
              if (epsv[j] != 0.0) v += epsv[j] * f[j](x);
            return v;
          };

          const Trajectory traj = solve_semilinear(grid, coeffs, node, nullptr, sopt);
          if (traj.blew_up) {
            std::ostringstream msg;
            msg << "nonlinear solve blew up at stencil node (eps1,eps2,eps3,eps4) = ("
                << epsv[0] << ", " << epsv[1] << ", " << epsv[2] << ", " << epsv[3]
                << ") near T = " << traj.blowup_time;
            throw std::runtime_error(msg.str());
          }

          if (first) {
            out.field = traj;
            for (auto& s : out.field.slices) s *= w;
            for (auto& s : out.field.dslices) s *= w;
            out.series = traj.probes;
            for (auto& ps : out.series)
              for (auto& v : ps.value) v *= w;
            first = false;
          } else {
            for (size_t i = 0; i < out.field.slices.size(); ++i) {
              out.field.slices[i] += w * traj.slices[i];
              out.field.dslices[i] += w * traj.dslices[i];
            }
            for (size_t o = 0; o < out.series.size(); ++o)
              for (size_t i = 0; i < out.series[o].value.size(); ++i)
                out.series[o].value[i] += w * traj.probes[o].value[i];
          }
        }
  return out;
}

double method_cross_check(const InteractionResult& a, const InteractionResult& b) {
  double peak = 0.0, gap = 0.0;
  const size_t no = std::min(a.series.size(), b.series.size());
  for (size_t o = 0; o < no; ++o) {
    const size_t n = std::min(a.series[o].value.size(), b.series[o].value.size());
    for (size_t i = 0; i < n; ++i) {
      peak = std::max({peak, std::abs(a.series[o].value[i]), std::abs(b.series[o].value[i])});
      gap = std::max(gap, std::abs(a.series[o].value[i] - b.series[o].value[i]));
    }
  }
  return gap / std::max(peak, 1e-300);
}

std::pair<double, double> windowed_detection(const ProbeSeries& s, const BandpassSettings& bs) {
  const DetectionTrace d = run_detection(s, bs);
  return {d.arrival, d.margin};
}

DetectionOutcome detect_and_construct_S(const MetricSpec& metric,
                                        const std::array<PhaseState, 4>& states,
                                        const std::vector<ObserverSpec>& observers,
                                        const CoefficientFields& coeffs, const GridSpec& grid,
                                        const DetectOptions& opt) {
  DetectionOutcome out;
  IntersectOptions io;
  io.resolution = std::max(16, static_cast<int>(std::lround(pi / grid.h_r() / 2)));
  out.predicted = intersection_finder(metric, states, opt.max_geo_param, io);

  std::array<WavePacketSpec, 4> base;
  for (int j = 0; j < 4; ++j) {
    PhaseState st = states[j];
    if (opt.t0 > 0.0) {
      const GeodesicPath gp = geodesic_trace(metric, states[j], opt.t0);
      st = gp.state_at(opt.t0);
    }
    base[j] = opt.proto;
    base[j].x0 = st.x;
    Vec2d d(st.xi[1], std::sin(st.x[1]) * st.xi[2]);
    if (d.norm() < 1e-12) d = Vec2d(1.0, 0.0);
    base[j].dir = d.normalized();
  }
  if (!packets_causally_independent(metric, base))
    throw std::invalid_argument("packet centers must be pairwise causally unrelated");

  const int E = std::max(1, opt.ensemble);
  std::vector<std::vector<ProbeSeries>> members;
  members.reserve(E);
  for (int k = 0; k < E; ++k) {
    const double delta = E > 1 ? opt.jitter * (2.0 * k / (E - 1) - 1.0) : 0.0;
    const double c = std::cos(delta), s = std::sin(delta);
    std::array<WavePacketSpec, 4> rot = base;
    for (auto& p : rot)
      p.dir = Vec2d(c * p.dir[0] - s * p.dir[1], s * p.dir[0] + c * p.dir[1]);
    InteractionResult r = kappa_derivative_direct(rot, coeffs, grid, observers, opt.solve);
    members.push_back(std::move(r.series));
  }

  // Absolute floor: calibrated when given, else from the peak windowed energy
  // anywhere in the ensemble; a ratio test alone would fire on roundoff in
  // all-quiet series.
  BandpassSettings bs{opt.proto.omega0, opt.factor, 0.0};
  double peak_energy = 0.0;
  for (const auto& mem : members)
    for (const auto& ps : mem) peak_energy = std::max(peak_energy, run_detection(ps, bs).peak);
  out.peak_energy = peak_energy;
  bs.abs_floor = opt.abs_floor > 0.0 ? opt.abs_floor : 1e-5 * peak_energy;

  for (size_t o = 0; o < observers.size(); ++o) {
    DetectionVerdict v;
    v.observer_id = observers[o].id;
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < E; ++k) {
      const DetectionTrace d = run_detection(members[k][o], bs);
      if (!std::isnan(d.arrival)) {
        lo = std::min(lo, d.arrival);
        hi = std::max(hi, d.arrival);
        v.margin = std::max(v.margin, d.margin);
      }
    }
    if (hi >= lo) {
      v.arrival = lo;
      v.state = hi - lo > 4.0 * grid.capture_radius() ? "inconclusive" : "detected";
    }
    out.verdicts.push_back(v);
    if (v.state == "detected") {
      Arrival a;
      a.observer_id = v.observer_id;
      a.parameter = v.arrival;
      out.constructed.arrivals.push_back(a);
    } else {
      out.constructed.missed.push_back(v.observer_id);
    }
  }
  if (out.predicted.tag == IntersectCase::B) out.constructed.q = out.predicted.q;
  return out;
}

Vec2d centroid_velocity(const Trajectory& traj, double t_a, double t_b) {
  const GridSpec& g = traj.grid;
  const ArrayXXd w = volume_weights(g);
  std::vector<double> ts, cR, cT;
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t < t_a || t > t_b) continue;
    const ArrayXXd m = traj.slices[i].square() * w;
    const double M = m.sum();
    if (M <= 1e-300) continue;
    double sR = 0.0, sT = 0.0;
    for (int r = 0; r < g.n_r; ++r)
      for (int c = 0; c < g.n_theta; ++c) {
        sR += m(r, c) * g.r_at(r);
        sT += m(r, c) * g.theta_at(c);
      }
    ts.push_back(t);
    cR.push_back(sR / M);
    cT.push_back(sT / M);
  }
  if (ts.size() < 2) throw std::runtime_error("not enough mass-bearing slices in the window");

  auto slope = [&](const std::vector<double>& y) {
    double mt = 0.0, my = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
      mt += ts[i];
      my += y[i];
    }
    mt /= ts.size();
    my /= ts.size();
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
      num += (ts[i] - mt) * (y[i] - my);
      den += (ts[i] - mt) * (ts[i] - mt);
    }
    return num / den;
  };
  double Rbar = 0.0;
  for (const double r : cR) Rbar += r;
  Rbar /= cR.size();
  return Vec2d(slope(cR), std::sin(Rbar) * slope(cT));
}

}  // namespace pnrs
