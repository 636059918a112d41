#include "patchrec/dictlearn.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "patchrec/rng.hpp"

namespace patchrec {

namespace {

// Largest eigenvalue of a symmetric PSD matrix by power iteration. The start
// vector is pseudo-random from a fixed seed: deterministic across runs, and
// almost surely not orthogonal to the top eigenvector.
double gram_spectral_norm(const Eigen::MatrixXd& G) {
  const Eigen::Index n = G.rows();
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(G(0, 0));
  auto rng = make_rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
  v /= v.norm();
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd w = G * v;
    const double wn = w.norm();
    if (wn == 0.0) {
      // Start vector in the null space; nudge to the first basis direction.
      v.setZero();
      v(it % n) = 1.0;
      continue;
    }
    v = w / wn;
    const double next = v.dot(G * v);
    if (it > 0 && std::abs(next - lambda) <= 1e-12 * std::max(next, 1.0)) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

inline double guarded(double lipschitz) { return lipschitz > 0.0 ? lipschitz : 1.0; }

Eigen::MatrixXd grad_d(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                       const Eigen::MatrixXd& X) {
  return (D * Y - X) * Y.transpose();
}

Eigen::MatrixXd grad_y(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                       const Eigen::MatrixXd& X) {
  return D.transpose() * (D * Y - X);
}

}  // namespace

double objective_value(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                       const Eigen::MatrixXd& X, double lambda) {
  if (D.cols() != Y.rows() || D.rows() != X.rows() || Y.cols() != X.cols()) {
    throw std::invalid_argument("objective_value: shape mismatch");
  }
  return 0.5 * (D * Y - X).squaredNorm() + lambda * Y.array().abs().sum();
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& values, double tau) {
  if (tau < 0.0) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  return values.array().sign() * (values.array().abs() - tau).max(0.0);
}

Eigen::MatrixXd project_columns(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd out = raw;
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const double norm = out.col(k).norm();
    if (norm > 1.0) out.col(k) /= norm;
  }
  return out;
}

double lipschitz_d(const Eigen::MatrixXd& Y) {
  return gram_spectral_norm(Y * Y.transpose());
}

double lipschitz_y(const Eigen::MatrixXd& D) {
  return gram_spectral_norm(D.transpose() * D);
}

std::pair<double, double> extrapolation_weights(const BpgState& state, double cap) {
  if (state.L_d_curr <= 0.0 || state.L_y_curr <= 0.0) {
    throw std::invalid_argument("extrapolation_weights: Lipschitz values must be positive");
  }
  const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * state.t_curr * state.t_curr));
  const double omega = (state.t_curr - 1.0) / t_next;
  double ratio_d = 1.0, ratio_y = 1.0;
  if (state.L_d_prev > 0.0) ratio_d = std::sqrt(state.L_d_prev / state.L_d_curr);
  if (state.L_y_prev > 0.0) ratio_y = std::sqrt(state.L_y_prev / state.L_y_curr);
  return {cap * std::min(omega, ratio_d), cap * std::min(omega, ratio_y)};
}

void bpg_step(BpgState& state, const Eigen::MatrixXd& X, const LearnConfig& config,
              LearnTrace& trace) {
  const int k = state.iteration + 1;
  const double cap = config.extrapolation_cap;
  const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * state.t_curr * state.t_curr));
  const double omega = (state.t_curr - 1.0) / t_next;

  // D block.
  const double L_d = guarded(lipschitz_d(state.Y_curr));
  double omega_d = 0.0;
  if (k > 1) {
    omega_d = cap * omega;
    if (state.L_d_prev > 0.0) {
      omega_d = std::min(omega_d, cap * std::sqrt(state.L_d_prev / L_d));
    }
  }
  Eigen::MatrixXd D_hat = state.D_curr + omega_d * (state.D_curr - state.D_prev);
  Eigen::MatrixXd D_new =
      project_columns(D_hat - grad_d(D_hat, state.Y_curr, X) / L_d);

  // Y block, using the freshly updated dictionary.
  double L_y = guarded(lipschitz_y(D_new));
  double omega_y = 0.0;
  if (k > 1) {
    omega_y = cap * omega;
    if (state.L_y_prev > 0.0) {
      omega_y = std::min(omega_y, cap * std::sqrt(state.L_y_prev / L_y));
    }
  }
  Eigen::MatrixXd Y_hat = state.Y_curr + omega_y * (state.Y_curr - state.Y_prev);
  Eigen::MatrixXd Y_new =
      soft_threshold(Y_hat - grad_y(D_new, Y_hat, X) / L_y, config.lambda / L_y);

  double F_new = objective_value(D_new, Y_new, X, config.lambda);
  bool redo = false;
  if (F_new > state.F_curr) {
    // Redo the iteration without extrapolation; this cannot raise F.
    redo = true;
    D_new = project_columns(state.D_curr - grad_d(state.D_curr, state.Y_curr, X) / L_d);
    L_y = guarded(lipschitz_y(D_new));
    Y_new = soft_threshold(state.Y_curr - grad_y(D_new, state.Y_curr, X) / L_y,
                           config.lambda / L_y);
    F_new = objective_value(D_new, Y_new, X, config.lambda);
    if (F_new > state.F_curr) {
      // Round-off can still show a hair of increase once the iterates
      // stagnate; hold the previous point instead.
      D_new = state.D_curr;
      Y_new = state.Y_curr;
      F_new = state.F_curr;
    }
  }
  if (!std::isfinite(F_new)) {
    throw std::runtime_error("bpg_step: non-finite objective at iteration " +
                             std::to_string(k));
  }

  state.D_prev = std::move(state.D_curr);
  state.D_curr = std::move(D_new);
  state.Y_prev = std::move(state.Y_curr);
  state.Y_curr = std::move(Y_new);
  state.t_prev = state.t_curr;
  state.t_curr = t_next;
  state.L_d_prev = L_d;
  state.L_d_curr = L_d;
  state.L_y_prev = L_y;
  state.L_y_curr = L_y;
  state.F_curr = F_new;
  state.iteration = k;

  trace.iterations.push_back({F_new, L_d, L_y, omega_d, omega_y, redo});
}

LearnResult learn(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D0,
                  const Eigen::MatrixXd& Y0, const LearnConfig& config) {
  if (config.lambda <= 0.0) throw std::invalid_argument("learn: lambda must be > 0");
  if (config.rel_tol <= 0.0) throw std::invalid_argument("learn: rel_tol must be > 0");
  if (config.extrapolation_cap <= 0.0 || config.extrapolation_cap > 1.0) {
    throw std::invalid_argument("learn: extrapolation cap must lie in (0, 1]");
  }
  for (Eigen::Index c = 0; c < D0.cols(); ++c) {
    if (D0.col(c).norm() > 1.0 + 1e-12) {
      throw std::invalid_argument("learn: D0 column " + std::to_string(c) +
                                  " is infeasible");
    }
  }

  BpgState state;
  state.D_prev = D0;
  state.D_curr = D0;
  state.Y_prev = Y0;
  state.Y_curr = Y0;
  state.F_curr = objective_value(D0, Y0, X, config.lambda);

  LearnResult result;
  int hits = 0;
  for (int k = 1; k <= config.max_iters; ++k) {
    const double F_before = state.F_curr;
    bpg_step(state, X, config, result.trace);
    if (k == 1) {
      result.trace.stationarity_first =
          stationarity_residual(state.D_curr, state.Y_curr, X, config.lambda);
    }
    const double rel = std::abs(F_before - state.F_curr) / (1.0 + F_before);
    hits = rel <= config.rel_tol ? hits + 1 : 0;
    if (hits >= config.consecutive_hits) {
      result.trace.converged = true;
      break;
    }
  }
  result.trace.stationarity_final =
      stationarity_residual(state.D_curr, state.Y_curr, X, config.lambda);
  result.dictionary = std::move(state.D_curr);
  result.coefficients = std::move(state.Y_curr);
  return result;
}

Eigen::MatrixXd random_unit_dictionary(int n, int num_atoms, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd D(n, num_atoms);
  for (Eigen::Index c = 0; c < D.cols(); ++c) {
    double norm2 = 0.0;
    do {
      for (Eigen::Index r = 0; r < D.rows(); ++r) D(r, c) = gauss(rng);
      norm2 = D.col(c).squaredNorm();
    } while (norm2 == 0.0);
    D.col(c) /= std::sqrt(norm2);
  }
  return D;
}

double stationarity_residual(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                             const Eigen::MatrixXd& X, double lambda) {
  const double L_d = guarded(lipschitz_d(Y));
  const Eigen::MatrixXd D_next = project_columns(D - grad_d(D, Y, X) / L_d);
  const double L_y = guarded(lipschitz_y(D_next));
  const Eigen::MatrixXd Y_next =
      soft_threshold(Y - grad_y(D_next, Y, X) / L_y, lambda / L_y);
  return L_d * (D_next - D).norm() + L_y * (Y_next - Y).norm();
}

std::string trace_to_csv(const LearnTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,F,L_d,L_y,omega_d,omega_y,redo\n";
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const IterationRecord& r = trace.iterations[i];
    out << (i + 1) << ',' << r.objective << ',' << r.lipschitz_d << ','
        << r.lipschitz_y << ',' << r.omega_d << ',' << r.omega_y << ','
        << (r.redo ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace patchrec
