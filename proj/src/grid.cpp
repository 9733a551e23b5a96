#include "pnrs/grid.hpp"

namespace pnrs {

ArrayXXd volume_weights(const GridSpec& g) {
  ArrayXXd w(g.n_r, g.n_theta);
  for (int i = 0; i < g.n_r; ++i) {
    const double sR = std::sin(g.r_at(i));
    for (int j = 0; j < g.n_theta; ++j) {
      double v = sR * sR * g.h_r();
      if (g.n_theta > 1) v *= std::sin(g.theta_at(j)) * g.h_theta();
      w(i, j) = v;
    }
  }
  return w;
}

double l2_norm(const ArrayXXd& u, const GridSpec& g) {
  return std::sqrt((u.square() * volume_weights(g)).sum());
}

ArrayXXd d_r(const ArrayXXd& u, const GridSpec& g) {
  const double h = g.h_r();
  ArrayXXd d(u.rows(), u.cols());
  const int n = static_cast<int>(u.rows());
  for (int j = 0; j < u.cols(); ++j) {
    for (int i = 1; i + 1 < n; ++i) d(i, j) = (u(i + 1, j) - u(i - 1, j)) / (2.0 * h);
    if (n >= 3) {
      d(0, j) = (-3.0 * u(0, j) + 4.0 * u(1, j) - u(2, j)) / (2.0 * h);
      d(n - 1, j) = (3.0 * u(n - 1, j) - 4.0 * u(n - 2, j) + u(n - 3, j)) / (2.0 * h);
    } else {
      d.col(j).setZero();
    }
  }
  return d;
}

ArrayXXd d_theta_frame(const ArrayXXd& u, const GridSpec& g) {
  ArrayXXd d = ArrayXXd::Zero(u.rows(), u.cols());
  if (g.n_theta <= 2) return d;
  const double h = g.h_theta();
  const int m = static_cast<int>(u.cols());
  for (int i = 0; i < u.rows(); ++i) {
    const double inv_sR = 1.0 / std::sin(g.r_at(i));
    for (int j = 1; j + 1 < m; ++j) d(i, j) = inv_sR * (u(i, j + 1) - u(i, j - 1)) / (2.0 * h);
    d(i, 0) = inv_sR * (-3.0 * u(i, 0) + 4.0 * u(i, 1) - u(i, 2)) / (2.0 * h);
    d(i, m - 1) = inv_sR * (3.0 * u(i, m - 1) - 4.0 * u(i, m - 2) + u(i, m - 3)) / (2.0 * h);
  }
  return d;
}

double sobolev_norm(const ArrayXXd& u, const GridSpec& g, int s) {
  double acc = 0.0;
  std::vector<ArrayXXd> level{u};
  acc += l2_norm(u, g) * l2_norm(u, g);
  for (int ord = 1; ord <= s; ++ord) {
    std::vector<ArrayXXd> next;
    for (const auto& v : level) {
      next.push_back(d_r(v, g));
      if (g.n_theta > 1) next.push_back(d_theta_frame(v, g));
    }
    for (const auto& v : next) {
      const double n = l2_norm(v, g);
      acc += n * n;
    }
    level = std::move(next);
  }
  return std::sqrt(acc);
}

double interp_cells(const Eigen::Ref<const ArrayXd>& row, double h, double x) {
  const int n = static_cast<int>(row.size());
  if (n == 1) return row[0];
  // cell centers at (i+1/2)h
  double s = x / h - 0.5;
  int i1 = static_cast<int>(std::floor(s));
  double f = s - i1;
  auto at = [&](int i) { return row[std::min(std::max(i, 0), n - 1)]; };
  const double p0 = at(i1 - 1), p1 = at(i1), p2 = at(i1 + 1), p3 = at(i1 + 2);
  return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                        f * (3.0 * (p1 - p2) + p3 - p0)));
}

double interp_grid(const ArrayXXd& u, const GridSpec& g, double R, double theta) {
  R -= g.r_lo;
  if (g.n_theta == 1) return interp_cells(u.col(0), g.h_r(), R);
  const double ht = g.h_theta();
  double s = theta / ht - 0.5;
  int j1 = static_cast<int>(std::floor(s));
  double f = s - j1;
  auto row_val = [&](int j) {
    j = std::min(std::max(j, 0), g.n_theta - 1);
    return interp_cells(u.col(j), g.h_r(), R);
  };
  const double p0 = row_val(j1 - 1), p1 = row_val(j1), p2 = row_val(j1 + 1), p3 = row_val(j1 + 2);
  return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                        f * (3.0 * (p1 - p2) + p3 - p0)));
}

ArrayXXd sample_field(const ScalarField4& f, const GridSpec& g, double T) {
  ArrayXXd out = ArrayXXd::Zero(g.n_r, g.n_theta);
  if (!f) return out;
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_theta; ++j)
      out(i, j) = f(Vec4d(T, g.r_at(i), g.theta_at(j), 0.0));
  return out;
}

}  // namespace pnrs
