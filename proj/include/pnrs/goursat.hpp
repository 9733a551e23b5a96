#pragma once

#include "pnrs/waves.hpp"

namespace pnrs {

// Radial trace on a scri generator, parameterized by cylinder time T.
struct RadialTrace {
  std::function<double(double)> value;
  double lo = 0.0;
  double hi = 0.0;

  double operator()(double T) const { return T <= lo || T >= hi ? 0.0 : value(T); }
};

RadialTrace trace_from_field(const RadiationFieldData& h);

// H^k norm of the trace over its scri generator, trapezoid + centered
// differences on a fine uniform grid.
double trace_sobolev(const RadialTrace& h, int k, int n = 2048);

// Incoming cutoff in q = T - R, rising from 0 to 1 across the band
// [-pi - c_hi, -pi - c_lo] just below past null infinity.
struct CutoffSpec {
  double c_lo = 1.0 / 3.0;
  double c_hi = 2.0 / 3.0;

  static CutoffSpec for_region(int n) { return {1.0 / n, 2.0 / n}; }
  double zeta(double q) const { return smoothstep5((q + pi + c_hi) / (c_hi - c_lo)); }
  double dzeta(double q) const {
    const double x = (q + pi + c_hi) / (c_hi - c_lo);
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 30.0 * x * x * (1.0 - x) * (1.0 - x) / (c_hi - c_lo);
  }
};

// Linear radial solution of d_T^2 u - Lap u + u = 0 on the cylinder with
// scri- trace G: u = (Phi(p) - Phi(q)) / sin R, Phi 2pi-periodic with
// Phi(2T + pi) = -G(T) sin T and Phi(-pi) = 0.
struct FreeWave {
  RadialTrace G;

  double phi(double xi) const;
  double dphi(double xi) const;
  double value(double T, double R) const;
};

// Source (box + 1)(zeta(q) * free wave) = 4 zeta'(q) Phi'(p) / sin R. Its
// support lies in the q band of the cutoff intersected with the p window of
// the trace, below past null infinity.
SourceTerm goursat_source(const FreeWave& wave, const CutoffSpec& cut);

// Field on the region beyond future null infinity (p > pi) reconstructed
// from the scri+ trace h: u = (gcheck((q+pi)/2) - gcheck((p-pi)/2)) / sin R
// with gcheck(s) = h(s) sin s.
double nplus_field(const RadialTrace& h_plus, double T, double R);

}  // namespace pnrs
