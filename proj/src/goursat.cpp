#include "pnrs/goursat.hpp"

#include <memory>

namespace pnrs {

RadialTrace trace_from_field(const RadiationFieldData& h) {
  auto data = std::make_shared<RadiationFieldData>(h);
  RadialTrace t;
  t.lo = h.support_lo;
  t.hi = h.support_hi;
  t.value = [data](double T) { return data->value_at(T); };
  return t;
}

double trace_sobolev(const RadialTrace& h, int k, int n) {
  const double pad = 0.1 * (h.hi - h.lo) + 1e-3;
  const double lo = h.lo - pad, hi = h.hi + pad;
  const double dx = (hi - lo) / n;
  Eigen::VectorXd v(n + 1);
  for (int i = 0; i <= n; ++i) v[i] = h(lo + i * dx);
  double acc = 0.0;
  for (int ord = 0; ord <= k; ++ord) {
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      acc += w * v[i] * v[i] * dx;
    }
    if (ord == k) break;
    Eigen::VectorXd d(n + 1);
    for (int i = 1; i < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
    d[0] = (v[1] - v[0]) / dx;
    d[n] = (v[n] - v[n - 1]) / dx;
    v = d;
  }
  return std::sqrt(acc);
}

namespace {

// Wraps xi into [-pi, pi) and maps to the scri- parameter T = (xi - pi)/2,
// which lands in [-pi, 0).
double wrap_arg(double xi) {
  double x = std::fmod(xi + pi, 2.0 * pi);
  if (x < 0) x += 2.0 * pi;
  return x - pi;
}

}  // namespace

double FreeWave::phi(double xi) const {
  const double T = (wrap_arg(xi) - pi) / 2.0;
  return -G(T) * std::sin(T);
}

double FreeWave::dphi(double xi) const {
  const double h = 1e-6;
  return (phi(xi + h) - phi(xi - h)) / (2.0 * h);
}

double FreeWave::value(double T, double R) const {
  const double s = std::sin(R);
  if (std::abs(s) < 1e-6) {
    if (std::cos(R) > 0) return 2.0 * dphi(T);  // R near 0 (mod 2pi)
    return -2.0 * dphi(T - pi);                 // R near pi
  }
  return (phi(T + R) - phi(T - R)) / s;
}

SourceTerm goursat_source(const FreeWave& wave, const CutoffSpec& cut) {
  const double p_lo = 2.0 * wave.G.lo + pi, p_hi = 2.0 * wave.G.hi + pi;
  SourceTerm src;
  src.t_lo = 0.5 * (p_lo - pi - cut.c_hi);
  src.t_hi = 0.5 * (p_hi - pi - cut.c_lo);
  src.region_id = "incoming-band";
  src.region = [cut, p_lo, p_hi](double p, double q) {
    return p >= p_lo && p <= p_hi && q >= -pi - cut.c_hi && q <= -pi - cut.c_lo;
  };
  FreeWave w = wave;
  src.f = ScalarField4{[w, cut](const Vec4d& x) {
    const double q = x[0] - x[1];
    const double dz = cut.dzeta(q);
    if (dz == 0.0) return 0.0;
    const double s = std::sin(x[1]);
    if (std::abs(s) < 1e-12) return 0.0;
    return 4.0 * dz * w.dphi(x[0] + x[1]) / s;
  }};
  return src;
}

double nplus_field(const RadialTrace& h_plus, double T, double R) {
  auto gcheck = [&](double s) { return h_plus(s) * std::sin(s); };
  const double p = T + R, q = T - R;
  const double sR = std::sin(R);
  if (std::abs(sR) < 1e-9) return 0.0;
  return (gcheck(0.5 * (q + pi)) - gcheck(0.5 * (p - pi))) / sR;
}

}  // namespace pnrs
