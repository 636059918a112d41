#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace patchrec {

// Settings for the block proximal-gradient learner minimizing
//   F(D, Y) = 0.5 * ||D*Y - X||_F^2 + lambda * ||Y||_1,   ||d_i||_2 <= 1.
struct LearnConfig {
  double lambda = 0.1;            // l1 weight, > 0
  int max_iters = 1000;
  double rel_tol = 1e-4;          // on |F_k - F_{k+1}| / (1 + F_k)
  int consecutive_hits = 3;       // tolerance must hold this many times in a row
  double extrapolation_cap = 0.9999;  // any value in (0, 1]
  std::uint64_t rng_seed = 0;     // used by random initializers
};

// Rolling state of the learner: the last two iterates, the Lipschitz
// constants behind the current and previous step sizes, and the FISTA
// t-sequence (t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2, t_0 = 1).
struct BpgState {
  Eigen::MatrixXd D_prev, D_curr;
  Eigen::MatrixXd Y_prev, Y_curr;
  double t_prev = 1.0, t_curr = 1.0;
  double L_d_prev = 0.0, L_d_curr = 0.0;
  double L_y_prev = 0.0, L_y_curr = 0.0;
  double F_curr = 0.0;
  int iteration = 0;  // completed iterations
};

struct IterationRecord {
  double objective;
  double lipschitz_d, lipschitz_y;
  double omega_d, omega_y;
  bool redo;
};

// Per-iteration history. The objective column is non-increasing; the restart
// step re-runs any iteration whose extrapolated update would raise it.
struct LearnTrace {
  std::vector<IterationRecord> iterations;
  double stationarity_first = 0.0;  // prox-step residual after iteration 1
  double stationarity_final = 0.0;  // and at the returned iterates
  bool converged = false;
};

struct LearnResult {
  Eigen::MatrixXd dictionary;
  Eigen::MatrixXd coefficients;
  LearnTrace trace;
};

double objective_value(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                       const Eigen::MatrixXd& X, double lambda);

// sign(y) * max(|y| - tau, 0), elementwise; entries with |y| = tau map to 0.
Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& values, double tau);

// Scales every column onto the unit ball: d_i / max(1, ||d_i||_2).
Eigen::MatrixXd project_columns(const Eigen::MatrixXd& raw);

// Step-size constants: largest eigenvalue of Y*Y^T resp. D^T*D, by power
// iteration on the explicit Gram matrix. Zero matrices give 0; the step
// routines substitute 1 in that case.
double lipschitz_d(const Eigen::MatrixXd& Y);
double lipschitz_y(const Eigen::MatrixXd& D);

// cap * min((t_prev - 1) / t_curr, sqrt(L_prev / L_curr)), per block.
// Throws on nonpositive Lipschitz values.
std::pair<double, double> extrapolation_weights(const BpgState& state, double cap);

// One alternating update: extrapolated projected-gradient step on D, then an
// extrapolated prox-gradient step on Y; if the objective rose, both updates
// are redone from the non-extrapolated points. Appends a record to the trace.
void bpg_step(BpgState& state, const Eigen::MatrixXd& X, const LearnConfig& config,
              LearnTrace& trace);

// Full learning loop with the relative-objective stopping rule.
LearnResult learn(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D0,
                  const Eigen::MatrixXd& Y0, const LearnConfig& config);

// Gaussian columns normalized to unit norm; the default D0.
Eigen::MatrixXd random_unit_dictionary(int n, int num_atoms, std::uint64_t seed);

// Size of one more zero-extrapolation update at (D, Y), scaled by the step
// constants; a cheap first-order stationarity proxy.
double stationarity_residual(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                             const Eigen::MatrixXd& X, double lambda);

// CSV export: iteration,F,L_d,L_y,omega_d,omega_y,redo
std::string trace_to_csv(const LearnTrace& trace);

}  // namespace patchrec
