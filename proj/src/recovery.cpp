#include "pnrs/recovery.hpp"

#include <queue>
#include <sstream>

#include <Eigen/Dense>

namespace pnrs {

namespace {

bool product_like(const MetricSpec& m) {
  return m.id == "cylinder" || m.id == "cylinder+conf";
}

struct HeapEntry {
  double d;
  int i, j;
  bool operator>(const HeapEntry& o) const { return d > o.d; }
};

}  // namespace

ArrayXXd optical_distance_field(const MetricSpec* m, const GridSpec& g, const Vec2d& src) {
  const int n = g.n_r, nt = g.n_theta;
  const double hR = g.h_r(), hT = g.h_theta();

  // Axis costs per cell: moving one cell radially costs ca, in theta cb.
  ArrayXXd ca(n, nt), cb(n, nt);
  auto opt_coeffs = [&](double R, double th, double& a, double& b) {
    if (m && m->eval) {
      const Mat4d gg = m->eval(Vec4d(0.0, R, th, 0.0));
      const double it = -1.0 / gg(0, 0);
      a = gg(1, 1) * it;
      b = gg(2, 2) * it;
    } else {
      a = 1.0;
      b = std::sin(R) * std::sin(R);
    }
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nt; ++j) {
      double a, b;
      opt_coeffs(g.r_at(i), g.theta_at(j), a, b);
      ca(i, j) = std::sqrt(a) * hR;
      cb(i, j) = std::sqrt(b) * hT;
    }

  const double inf = std::numeric_limits<double>::infinity();
  ArrayXXd u = ArrayXXd::Constant(n, nt, inf);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> done(n, nt);
  done.setConstant(false);

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap;

  // Seed a small disk with the local flat distance; curvature error there is
  // O(h^2) and the marching inherits it as a constant offset at worst.
  double a0, b0;
  opt_coeffs(src[0], src[1], a0, b0);
  const double seed_rad = 3.0 * std::max(hR, hT);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nt; ++j) {
      const double dR = g.r_at(i) - src[0], dT = g.theta_at(j) - src[1];
      if (std::abs(dR) > seed_rad + hR || std::abs(dT) > seed_rad + hT) continue;
      const double d = std::sqrt(a0 * dR * dR + b0 * dT * dT);
      if (d <= seed_rad) {
        u(i, j) = d;
        heap.push({d, i, j});
      }
    }
  if (heap.empty()) throw std::runtime_error("eikonal source lies outside the grid");

  auto update = [&](int i, int j) {
    if (done(i, j)) return;
    const double a = std::min(i > 0 ? u(i - 1, j) : inf, i + 1 < n ? u(i + 1, j) : inf);
    const double b = std::min(j > 0 ? u(i, j - 1) : inf, j + 1 < nt ? u(i, j + 1) : inf);
    const double A = ca(i, j), B = cb(i, j);
    double cand = inf;
    if (std::isfinite(a) && std::isfinite(b)) {
      const double diff = a - b;
      const double s2 = A * A + B * B - diff * diff;
      if (s2 >= 0.0)
        cand = (a * B * B + b * A * A + A * B * std::sqrt(s2)) / (A * A + B * B);
    }
    cand = std::min({cand, a + A, b + B});
    if (cand < u(i, j) - 1e-15) {
      u(i, j) = cand;
      heap.push({cand, i, j});
    }
  };

  while (!heap.empty()) {
    const HeapEntry e = heap.top();
    heap.pop();
    if (done(e.i, e.j) || e.d > u(e.i, e.j) + 1e-15) continue;
    done(e.i, e.j) = true;
    if (e.i > 0) update(e.i - 1, e.j);
    if (e.i + 1 < n) update(e.i + 1, e.j);
    if (e.j > 0) update(e.i, e.j - 1);
    if (e.j + 1 < nt) update(e.i, e.j + 1);
  }
  return u;
}

double predict_arrival(const MetricSpec& m, const GridSpec& g, const Vec4d& q,
                       const Vec4d& obs) {
  if (product_like(m)) return q[0] + sphere_distance(q, obs);
  const ArrayXXd fld = optical_distance_field(&m, g, Vec2d(q[1], q[2]));
  return q[0] + interp_grid(fld, g, obs[1], obs[2]);
}

RecoveryResult recover_point(const RecoveryProblem& pb) {
  if (!pb.metric) throw std::invalid_argument("recovery needs a candidate metric");
  const MetricSpec& m = *pb.metric;

  std::vector<Vec4d> opos;
  std::vector<double> tobs;
  for (const auto& arr : pb.data.arrivals) {
    for (const auto& mu : pb.observers)
      if (mu.id == arr.observer_id) {
        opos.push_back(mu.mu(0.0));
        tobs.push_back(arr.parameter);
        break;
      }
  }
  const int n = static_cast<int>(opos.size());
  if (n < 4) throw std::invalid_argument("at least 4 observer arrivals required");

  const bool closed = product_like(m);
  auto predict = [&](const Vec3d& q3, Eigen::VectorXd& out) {
    const Vec4d q(q3[0], q3[1], q3[2], 0.0);
    if (closed) {
      for (int i = 0; i < n; ++i) out[i] = q3[0] + sphere_distance(q, opos[i]);
    } else {
      const ArrayXXd fld = optical_distance_field(&m, pb.grid, Vec2d(q3[1], q3[2]));
      for (int i = 0; i < n; ++i)
        out[i] = q3[0] + interp_grid(fld, pb.grid, opos[i][1], opos[i][2]);
    }
  };
  auto rms = [&](const Vec3d& q3) {
    Eigen::VectorXd p(n);
    predict(q3, p);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += (p[i] - tobs[i]) * (p[i] - tobs[i]);
    return std::sqrt(acc / n);
  };
  auto clampq = [&](Vec3d q3) {
    q3[0] = std::clamp(q3[0], pb.t_range[0], pb.t_range[1]);
    q3[1] = std::clamp(q3[1], pb.r_range[0], pb.r_range[1]);
    q3[2] = std::clamp(q3[2], pb.th_range[0], pb.th_range[1]);
    return q3;
  };

  // Coarse seeds, ranked; ties resolved by lexicographic start id.
  struct Seed {
    double r;
    int id;
    Vec3d q;
  };
  std::vector<Seed> seeds;
  const int nc = 6;
  int sid = 0;
  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b)
      for (int c = 0; c < nc; ++c) {
        Vec3d q3(pb.t_range[0] + (a + 0.5) / nc * (pb.t_range[1] - pb.t_range[0]),
                 pb.r_range[0] + (b + 0.5) / nc * (pb.r_range[1] - pb.r_range[0]),
                 pb.th_range[0] + (c + 0.5) / nc * (pb.th_range[1] - pb.th_range[0]));
        seeds.push_back({rms(q3), sid++, q3});
      }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& x, const Seed& y) {
    return x.r != y.r ? x.r < y.r : x.id < y.id;
  });

  const double hfd = std::max(1e-3, 0.5 * pb.grid.h_r());
  auto jacobian = [&](const Vec3d& q3, Eigen::VectorXd& r0, Eigen::MatrixXd& J) {
    Eigen::VectorXd p(n), pp(n), pm(n);
    predict(q3, p);
    for (int i = 0; i < n; ++i) r0[i] = p[i] - tobs[i];
    J.col(0).setOnes();  // arrival shifts one-for-one with T_q
    for (int c = 1; c < 3; ++c) {
      Vec3d qp = q3, qm = q3;
      qp[c] += hfd;
      qm[c] -= hfd;
      predict(qp, pp);
      predict(qm, pm);
      J.col(c) = (pp - pm) / (2.0 * hfd);
    }
  };

  {
    Eigen::VectorXd r0(n);
    Eigen::MatrixXd J(n, 3);
    jacobian(seeds[0].q, r0, J);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const double cond = svd.singularValues()(0) / svd.singularValues()(2);
    if (!std::isfinite(cond) || cond > pb.cond_max) {
      std::ostringstream msg;
      msg << "arrival geometry too degenerate for recovery (condition number " << cond << ")";
      throw std::runtime_error(msg.str());
    }
  }

  RecoveryResult best;
  best.residual = 1e300;
  const int n_starts = std::min<int>(pb.starts, static_cast<int>(seeds.size()));
  for (int s = 0; s < n_starts; ++s) {
    Vec3d q3 = seeds[s].q;
    double rq = rms(q3);
    double lam = 1e-3;
    Eigen::VectorXd r0(n);
    Eigen::MatrixXd J(n, 3);
    for (int it = 0; it < 50 && lam < 1e8; ++it) {
      jacobian(q3, r0, J);
      const Eigen::MatrixXd JtJ = J.transpose() * J;
      const Eigen::VectorXd g = J.transpose() * r0;
      bool accepted = false;
      for (int tries = 0; tries < 8; ++tries) {
        Eigen::MatrixXd M = JtJ;
        M.diagonal().array() += lam;
        const Vec3d step = -M.ldlt().solve(g);
        const Vec3d qn = clampq(q3 + step);
        const double rn = rms(qn);
        if (rn < rq) {
          q3 = qn;
          rq = rn;
          lam = std::max(lam / 3.0, 1e-12);
          accepted = true;
          if (step.norm() < 1e-10) it = 50;
          break;
        }
        lam *= 10.0;
      }
      if (!accepted) break;
    }
    if (rq < best.residual) {
      best.residual = rq;
      best.q_hat = Vec4d(q3[0], q3[1], q3[2], 0.0);
      best.start_id = seeds[s].id;
    }
  }

  if (best.residual > pb.accept) {
    std::ostringstream msg;
    msg << "no candidate fits the arrivals (best residual " << best.residual << " > "
        << pb.accept << ")";
    throw NoFitError(msg.str(), best.q_hat, best.residual);
  }
  return best;
}

DistinguishVerdict distinguish_metrics(const MetricSpec& m1, const MetricSpec& m2,
                                       const std::vector<TimelikePath>& observers,
                                       int probe_budget, double tol, const GridSpec& grid) {
  DistinguishVerdict v;
  std::vector<Vec4d> opos;
  for (const auto& mu : observers) opos.push_back(mu.mu(0.0));

  // Probe lattice over the mid band; skip probes whose farthest observer gets
  // near the antipodal cut of the round fibre.
  const int nr = std::max(2, static_cast<int>(std::ceil(std::sqrt(probe_budget))));
  const double r_a = grid.r_lo + 0.3 * (grid.r_hi - grid.r_lo);
  const double r_b = grid.r_lo + 0.7 * (grid.r_hi - grid.r_lo);
  for (int a = 0; a < nr && v.probes_used < probe_budget; ++a)
    for (int b = 0; b < nr && v.probes_used < probe_budget; ++b) {
      const Vec4d q(0.0, r_a + (r_b - r_a) * (a + 0.5) / nr, pi * (b + 0.5) / nr, 0.0);
      double far = 0.0;
      for (const auto& o : opos) far = std::max(far, sphere_distance(q, o));
      if (far > pi - 0.3) continue;
      ++v.probes_used;

      // When either side needs the lattice model, run both through it so the
      // marching bias cancels in the difference.
      const bool lattice = !product_like(m1) || !product_like(m2);
      std::vector<double> t1, t2;
      if (lattice) {
        const Vec2d src(q[1], q[2]);
        const ArrayXXd f1 = optical_distance_field(product_like(m1) ? nullptr : &m1, grid, src);
        const ArrayXXd f2 = optical_distance_field(product_like(m2) ? nullptr : &m2, grid, src);
        for (const auto& o : opos) {
          t1.push_back(q[0] + interp_grid(f1, grid, o[1], o[2]));
          t2.push_back(q[0] + interp_grid(f2, grid, o[1], o[2]));
        }
      } else {
        for (const auto& o : opos) {
          t1.push_back(predict_arrival(m1, grid, q, o));
          t2.push_back(predict_arrival(m2, grid, q, o));
        }
      }
      std::sort(t1.begin(), t1.end());
      std::sort(t2.begin(), t2.end());
      double gap = 0.0;
      for (size_t i = 0; i < t1.size(); ++i) gap = std::max(gap, std::abs(t1[i] - t2[i]));
      if (gap > v.gap) {
        v.gap = gap;
        v.witness = q;
      }
      if (gap > tol) {
        v.distinguished = true;
        v.witness = q;
        v.gap = gap;
        return v;
      }
    }
  return v;
}

}  // namespace pnrs
