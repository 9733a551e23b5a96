#pragma once

#include "pnrs/goursat.hpp"
#include "pnrs/penrose.hpp"

namespace pnrs {

struct ScatteringRequest {
  double t1 = -pi / 4;    // support gate, in (-pi, 0)
  double q_T = pi / 3;    // scri+ parameter of the evaluation point
  double epsilon = 0.5;   // smallness budget for the incoming trace
  int k = 2;              // Sobolev index of the budget norm
};

struct ConcentrationVerdict {
  bool member = false;
  double r_phys = 0.0;     // cap radius R(t1)
  double window_lo = 0.0;  // admissible scri- window (-pi - t1, t1)
  double window_hi = 0.0;
  double support_lo = 0.0;
  double support_hi = 0.0;
};

// Cap radius whose flow-out window on scri- is exactly (-pi - t1, t1):
// rays from (T, R = T + pi) reach the T = 0 ball of physical radius r iff
// |T + pi/2| <= arctan(r), so R(t1) = tan(pi/2 + t1). Zero when the window
// is empty (t1 <= -pi/2).
double cap_radius_of_gate(double t1);

ConcentrationVerdict concentrated_family_check(const RadialTrace& h, double t1,
                                               double tol = 1e-9);
ConcentrationVerdict concentrated_family_check(const RadiationFieldData& h, double t1,
                                               double tol = 1e-9);

struct GoursatSetup {
  int n = 3;       // index of the source region K_n feeding the cutoff
  int n_r = 256;
  double cfl = 0.4;
  double margin = 0.02;
  double epsilon = 10.0;  // budget used by the pipeline-internal request
  int k = 2;
  CoefficientFields coeffs;
  SolveOptions solve;
};

struct ScatterOutcome {
  bool accepted = false;
  std::string refusal;        // empty when accepted
  double value = 0.0;         // h_plus(q_T)
  double h_norm = 0.0;        // measured incoming H^k norm
  RadiationFieldData h_plus;  // full scri+ trace of the same trajectory
  Trajectory traj;
};

ScatterOutcome scattering_functional(const ScatteringRequest& req, const RadialTrace& h_minus,
                                     const GoursatSetup& setup);

struct SourceRegion {
  int n = 3;

  double p_lo() const { return 1.0 / n; }
  double p_hi() const { return pi - 1.0 / n; }
  double q_lo() const { return -2.0 * pi + 1.0 / n; }
  double q_hi() const { return -pi - 1.0 / n; }
  bool contains(double T, double R) const {
    const double p = T + R, q = T - R;
    return p >= p_lo() && p <= p_hi() && q >= q_lo() && q <= q_hi();
  }
};

struct S2SResult {
  std::vector<Vec4d> points;  // observation samples beyond future null infinity
  Eigen::VectorXd values;
  double l2 = 0.0;    // RMS over the samples
  double linf = 0.0;
  double t_plus = 0.0;
  double sol_norm = 0.0;  // sup |u| over the solve
};

// Shared sample set in {p > pi, -pi < q <= t_plus - pi}, clear of the
// region boundaries and of the R = pi pole. Both null offsets from the
// corner (p - pi and q + pi) start at `clearance`, which keeps the free
// continuation away from the incoming cutoff band of every K_n, n >= 3.
std::vector<Vec4d> observation_points(double t_plus, int n_t = 20, int n_p = 20,
                                      double margin = 0.08, double clearance = 0.9);

// Discrete H^k of a source over its window, cylinder volume weight.
double source_norm(const SourceTerm& f, int k = 2, int n = 200);

S2SResult source_to_solution(const SourceRegion& region, const SourceTerm& f, double t_plus,
                             const CoefficientFields& coeffs, const GridSpec& grid,
                             const SolveOptions& opt = {}, double norm_budget = 1e30);

struct S2SStages {
  RadiationFieldData h_minus;
  double t1 = 0.0;
  ScatterOutcome scatter;
  S2SResult result;
};

// Functional-access-only route: linear solve for the scri- trace, one
// scattering evaluation batched over the scri+ grid, then the closed-form
// linear continuation beyond scri+. Stage failures carry a stage tag.
S2SStages scattering_to_s2s(const SourceRegion& region, const SourceTerm& f, double t_plus,
                            const GoursatSetup& setup);

}  // namespace pnrs
