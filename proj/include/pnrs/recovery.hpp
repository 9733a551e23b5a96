#pragma once

#include "pnrs/causal.hpp"
#include "pnrs/grid.hpp"

namespace pnrs {

// Inverse step: recover source points from arrival data and compare candidate
// metrics through their observation patterns.

// Spatial optical distance from src to every cell, in-plane. Static diagonal
// metrics reduce first arrivals at static observers to T_q + this distance;
// the field solves the eikonal |grad u|_opt = 1 by fast marching with the
// optical metric g_spatial / (-g_TT). nullptr means the product metric.
ArrayXXd optical_distance_field(const MetricSpec* m, const GridSpec& g, const Vec2d& src);

// Earliest arrival parameter at a static observer sitting at obs (T entry
// ignored). Product and conformally-product metrics use the closed form.
double predict_arrival(const MetricSpec& m, const GridSpec& g, const Vec4d& q,
                       const Vec4d& obs);

struct RecoveryProblem {
  ObservationSet data;
  const MetricSpec* metric = nullptr;
  std::vector<TimelikePath> observers;  // matched against data by id
  GridSpec grid;                        // arrival-model lattice and cell scale
  Vec2d t_range = Vec2d(-0.5, 1.0);     // search box
  Vec2d r_range = Vec2d(0.6, pi - 0.6);
  Vec2d th_range = Vec2d(0.4, pi - 0.4);
  int starts = 5;
  double accept = 0.1;      // RMS arrival residual acceptance
  double cond_max = 200.0;  // conditioning bound on the linearized system
};

struct RecoveryResult {
  Vec4d q_hat = Vec4d::Zero();
  double residual = 0.0;  // RMS arrival mismatch
  int start_id = 0;
};

// Raised when no start converges below the acceptance; carries the best try.
struct NoFitError : std::runtime_error {
  Vec4d best;
  double residual;
  NoFitError(const std::string& msg, const Vec4d& b, double r)
      : std::runtime_error(msg), best(b), residual(r) {}
};

// Damped Gauss-Newton over candidate q from multi-start coarse seeds,
// minimizing the summed squared arrival mismatch. Needs at least 4 arrivals
// with a well-conditioned linearization.
RecoveryResult recover_point(const RecoveryProblem& pb);

struct DistinguishVerdict {
  bool distinguished = false;
  Vec4d witness = Vec4d::Zero();  // probe where the families split
  double gap = 0.0;               // arrival mismatch under sorted matching
  int probes_used = 0;
};

// Samples probe points in the shared cut-free region and compares the two
// metrics' arrival sets under optimal (sorted) matching. Finding a witness
// proves the metrics differ; not finding one only certifies these probes.
DistinguishVerdict distinguish_metrics(const MetricSpec& m1, const MetricSpec& m2,
                                       const std::vector<TimelikePath>& observers,
                                       int probe_budget, double tol, const GridSpec& grid);

}  // namespace pnrs
