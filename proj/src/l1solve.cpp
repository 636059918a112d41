#include "patchrec/l1solve.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "patchrec/rng.hpp"

namespace patchrec {

namespace {

void check_problem(const RecoveryProblem& prob) {
  if (prob.op == nullptr) throw std::invalid_argument("recovery problem has no operator");
  if (prob.nu <= 0.0) throw std::invalid_argument("nu must be > 0");
  if (prob.partition.patch_rows != prob.dictionary.atom_rows ||
      prob.partition.patch_cols != prob.dictionary.atom_cols) {
    throw std::invalid_argument("partition patch size does not match dictionary");
  }
  if (prob.op->input_rows() != prob.partition.image_rows ||
      prob.op->input_cols() != prob.partition.image_cols) {
    throw std::invalid_argument("operator dims do not match partition");
  }
  if (prob.b.size() != prob.op->output_size()) {
    throw std::invalid_argument("measurement length does not match operator");
  }
  if (prob.weights.rows() != prob.dictionary.num_atoms() ||
      prob.weights.cols() != prob.partition.num_cells()) {
    throw std::invalid_argument("weight matrix has wrong shape");
  }
  if ((prob.weights.array() < 0.0).any()) {
    throw std::invalid_argument("weights must be nonnegative");
  }
}

void check_codes(const RecoveryProblem& prob, const CoefficientMatrix& Y) {
  if (Y.rows() != prob.dictionary.num_atoms() ||
      Y.cols() != prob.partition.num_cells()) {
    throw std::invalid_argument("coefficient matrix has wrong shape");
  }
}

}  // namespace

RecoveryProblem RecoveryProblem::make(Dictionary dict, Partition part,
                                      const MeasurementOp& op, Eigen::VectorXcd b,
                                      double nu, const WeightVector& atom_weights) {
  RecoveryProblem prob;
  prob.weights = atom_weights.replicate(1, part.num_cells());
  prob.dictionary = std::move(dict);
  prob.partition = std::move(part);
  prob.op = &op;
  prob.b = std::move(b);
  prob.nu = nu;
  check_problem(prob);
  return prob;
}

Image synthesize_image(const RecoveryProblem& prob, const CoefficientMatrix& Y) {
  check_codes(prob, Y);
  const Eigen::MatrixXd frames = prob.dictionary.atoms * Y;  // n x cells
  Image acc = Image::zero(prob.partition.image_rows, prob.partition.image_cols);
  for (int c = 0; c < prob.partition.num_cells(); ++c) {
    embed_patch(frames.col(c), prob.partition, c, acc);
  }
  return acc;
}

Eigen::VectorXcd synthesis_forward(const RecoveryProblem& prob,
                                   const CoefficientMatrix& Y) {
  return prob.op->apply(synthesize_image(prob, Y).pixels);
}

CoefficientMatrix synthesis_adjoint(const RecoveryProblem& prob,
                                    const Eigen::VectorXcd& v) {
  check_problem(prob);
  if (v.size() != prob.op->output_size()) {
    throw std::invalid_argument("measurement length does not match operator");
  }
  const Image back(prob.op->adjoint(v));
  Eigen::MatrixXd frames(prob.dictionary.atom_dim(), prob.partition.num_cells());
  for (int c = 0; c < prob.partition.num_cells(); ++c) {
    frames.col(c) = extract_patch(back, prob.partition, c);
  }
  return prob.dictionary.atoms.transpose() * frames;
}

double recovery_objective(const RecoveryProblem& prob, const CoefficientMatrix& Y) {
  const double l1 = (prob.weights.array() * Y.array().abs()).sum();
  const double res = (synthesis_forward(prob, Y) - prob.b).squaredNorm();
  return l1 + res / (2.0 * prob.nu);
}

SolveResult solve(const RecoveryProblem& prob, const SolverConfig& config) {
  check_problem(prob);
  const int num_atoms = prob.dictionary.num_atoms();
  const int num_cells = prob.partition.num_cells();
  const Eigen::Index dim = static_cast<Eigen::Index>(num_atoms) * num_cells;

  // One upfront norm estimate of the composite forward map fixes the step.
  AdjointPair map;
  map.domain_dim = dim;
  map.forward = [&](const Eigen::VectorXd& y) {
    return synthesis_forward(
        prob, Eigen::Map<const CoefficientMatrix>(y.data(), num_atoms, num_cells));
  };
  map.adjoint = [&](const Eigen::VectorXcd& v) {
    const CoefficientMatrix G = synthesis_adjoint(prob, v);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(G.data(), G.size()));
  };
  const double op_norm = spectral_norm(map, config.norm_iters, config.norm_tol,
                                       derive_seed(config.rng_seed, "l1solve.norm"));
  const double L = std::max(op_norm * op_norm / prob.nu, 1e-12);

  auto rng = make_rng(derive_seed(config.rng_seed, "l1solve.start"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  CoefficientMatrix Y(num_atoms, num_cells);
  for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = gauss(rng);

  auto prox_step = [&](const CoefficientMatrix& Z) {
    const Eigen::VectorXcd residual = synthesis_forward(prob, Z) - prob.b;
    const CoefficientMatrix grad = synthesis_adjoint(prob, residual) / prob.nu;
    const CoefficientMatrix G = Z - grad / L;
    return CoefficientMatrix(G.array().sign() *
                             (G.array().abs() - prob.weights.array() / L).max(0.0));
  };

  SolveResult result;
  CoefficientMatrix Z = Y;
  double t = 1.0;
  double F_prev = recovery_objective(prob, Y);
  int hits = 0;
  int iters = 0;
  for (int k = 1; k <= config.max_iters; ++k) {
    iters = k;
    CoefficientMatrix Y_new = prox_step(Z);
    double F_new = recovery_objective(prob, Y_new);
    if (F_new > F_prev) {
      // Restart: drop momentum and re-step from the last accepted point.
      t = 1.0;
      Y_new = prox_step(Y);
      F_new = recovery_objective(prob, Y_new);
      if (F_new > F_prev) {  // round-off guard near a fixed point
        Y_new = Y;
        F_new = F_prev;
      }
    }
    if (!std::isfinite(F_new)) {
      throw std::runtime_error("l1 solver: non-finite objective at iteration " +
                               std::to_string(k));
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Z = Y_new + ((t - 1.0) / t_next) * (Y_new - Y);
    t = t_next;

    const double rel = std::abs(F_prev - F_new) / (1.0 + F_prev);
    hits = rel <= config.rel_tol ? hits + 1 : 0;
    Y = std::move(Y_new);
    F_prev = F_new;
    result.objective_trace.push_back(F_new);
    if (hits >= config.consecutive_hits) {
      result.converged = true;
      break;
    }
  }

  result.coefficients = std::move(Y);
  result.estimate = synthesize_image(prob, result.coefficients);
  result.iterations = iters;
  return result;
}

std::string solver_trace_to_csv(const std::vector<double>& objective_trace) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,F\n";
  for (std::size_t i = 0; i < objective_trace.size(); ++i) {
    out << (i + 1) << ',' << objective_trace[i] << '\n';
  }
  return out.str();
}

}  // namespace patchrec
