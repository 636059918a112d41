#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "patchrec/dictionary.hpp"
#include "patchrec/operators.hpp"
#include "patchrec/partition.hpp"

namespace patchrec {

// Weighted l1 recovery over one partition:
//   min_Y  sum_cells ||w_c .* y_c||_1 + (1/(2*nu)) || A(sum_c R_c^T D y_c) - b ||_2^2
// Y stacks one K-length coefficient column per cell.
struct RecoveryProblem {
  Dictionary dictionary;
  Partition partition;
  const MeasurementOp* op = nullptr;  // non-owning
  Eigen::VectorXcd b;
  double nu = 0.0;
  Eigen::MatrixXd weights;  // K x num_cells, nonnegative

  // Broadcasts one per-atom weight vector to every cell.
  static RecoveryProblem make(Dictionary dict, Partition part,
                              const MeasurementOp& op, Eigen::VectorXcd b,
                              double nu, const WeightVector& atom_weights);
};

struct SolverConfig {
  double rel_tol = 1e-4;
  int max_iters = 2000;
  int consecutive_hits = 3;
  std::uint64_t rng_seed = 0;  // Gaussian starting point
  int norm_iters = 30;         // power iterations for the step size
  double norm_tol = 1e-8;
};

struct SolveResult {
  CoefficientMatrix coefficients;
  Image estimate;  // synthesis of the returned coefficients
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

// sum_c R_c^T (D y_c), the image synthesized from stacked codes.
Image synthesize_image(const RecoveryProblem& prob, const CoefficientMatrix& Y);

// A(synthesize_image(Y)) and its exact adjoint D^T R_c adjoint(A, v).
Eigen::VectorXcd synthesis_forward(const RecoveryProblem& prob,
                                   const CoefficientMatrix& Y);
CoefficientMatrix synthesis_adjoint(const RecoveryProblem& prob,
                                    const Eigen::VectorXcd& v);

double recovery_objective(const RecoveryProblem& prob, const CoefficientMatrix& Y);

// Accelerated proximal gradient (FISTA) with restart on objective increase.
// The step size is 1/L with L = ||forward map||^2 / nu estimated once by
// power iteration; the prox is a componentwise soft threshold with
// per-coordinate level w / L.
SolveResult solve(const RecoveryProblem& prob, const SolverConfig& config);

// CSV export of the objective trace: iteration,F
std::string solver_trace_to_csv(const std::vector<double>& objective_trace);

}  // namespace patchrec
