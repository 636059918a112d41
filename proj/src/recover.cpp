#include "patchrec/recover.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "patchrec/rng.hpp"

namespace patchrec {

double psnr(const Image& estimate, const Image& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw std::invalid_argument("psnr: image dims differ");
  }
  const double mse = (estimate.pixels - truth.pixels).squaredNorm() /
                     static_cast<double>(truth.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

std::vector<Partition> default_partitions(int image_rows, int image_cols,
                                          int patch_rows, int patch_cols,
                                          int count) {
  if (count != 3 && count != 5) {
    throw std::invalid_argument("default partition count must be 3 or 5");
  }
  std::vector<std::pair<int, int>> corners = {
      {patch_rows, patch_cols},
      {patch_rows, std::max(1, patch_cols / 2)},
      {std::max(1, patch_rows / 2), patch_cols}};
  if (count == 5) {
    corners.emplace_back(patch_rows, std::max(1, patch_cols / 4));
    corners.emplace_back(std::max(1, patch_rows / 4), patch_cols);
  }
  std::vector<Partition> parts;
  parts.reserve(corners.size());
  for (const auto& [r0, c0] : corners) {
    parts.push_back(
        build_partition(image_rows, image_cols, patch_rows, patch_cols, r0, c0));
  }
  return parts;
}

Image recover_once(const Dictionary& dict, const MeasurementOp& op,
                   const Eigen::VectorXcd& b, double nu, const Partition& partition,
                   const SolverConfig& solver) {
  const RecoveryProblem prob =
      RecoveryProblem::make(dict, partition, op, b, nu, default_weights(dict));
  return solve(prob, solver).estimate;
}

AveragedRecovery recover_averaged(const Dictionary& dict, const MeasurementOp& op,
                                  const Eigen::VectorXcd& b, double nu,
                                  const std::vector<Partition>& partitions,
                                  const SolverConfig& solver) {
  if (partitions.empty()) {
    throw std::invalid_argument("recover_averaged: at least one partition required");
  }
  AveragedRecovery out;
  Eigen::MatrixXd sum;
  for (const Partition& p : partitions) {
    const RecoveryProblem prob =
        RecoveryProblem::make(dict, p, op, b, nu, default_weights(dict));
    SolveResult res = solve(prob, solver);
    if (sum.size() == 0) {
      sum = res.estimate.pixels;
    } else {
      sum += res.estimate.pixels;
    }
    out.iterations.push_back(res.iterations);
    out.per_partition.push_back(std::move(res.estimate));
  }
  out.average = Image(sum / static_cast<double>(partitions.size()));
  return out;
}

AveragedRecovery recover_adaptive(const Dictionary& initial, const MeasurementOp& op,
                                  const Eigen::VectorXcd& b, double nu,
                                  const std::vector<Partition>& partitions,
                                  const AdaptiveConfig& adaptive,
                                  const SolverConfig& solver) {
  if (adaptive.rounds < 1) {
    throw std::invalid_argument("recover_adaptive: rounds must be >= 1");
  }
  const int n1 = initial.atom_rows;
  const int n2 = initial.atom_cols;
  const int n = n1 * n2;

  Dictionary dict = initial;
  AveragedRecovery result = recover_averaged(dict, op, b, nu, partitions, solver);

  for (int round = 0; round < adaptive.rounds; ++round) {
    // Training patches: every cell of the canonical (n1, n2) partition of the
    // current estimate, mean removed.
    const int N1 = static_cast<int>(result.average.rows());
    const int N2 = static_cast<int>(result.average.cols());
    const Partition canonical = build_partition(N1, N2, n1, n2, n1, n2);
    Eigen::MatrixXd X(n, canonical.num_cells());
    for (int c = 0; c < canonical.num_cells(); ++c) {
      X.col(c) = extract_patch(result.average, canonical, c);
    }
    X.rowwise() -= X.colwise().mean();
    // Learn on [0, 1]-scale patches; the atoms are scale-free and the l1
    // weight then acts at its intended strength.
    X /= 255.0;

    LearnConfig cfg = adaptive.learn;
    if (cfg.lambda <= 0.0) cfg.lambda = 0.8 / std::sqrt(static_cast<double>(n));
    int num_atoms = adaptive.num_atoms;
    if (num_atoms <= 0) {
      num_atoms = dict.num_atoms() - (dict.has_dc_atom ? 1 : 0);
    }

    Eigen::MatrixXd D0;
    const int dc_offset = dict.has_dc_atom ? 1 : 0;
    if (adaptive.warm_start && dict.num_atoms() - dc_offset == num_atoms) {
      D0 = dict.atoms.rightCols(num_atoms);
    } else {
      D0 = random_unit_dictionary(
          n, num_atoms, derive_seed(cfg.rng_seed, "recover.adaptive.init"));
    }
    const Eigen::MatrixXd Y0 = Eigen::MatrixXd::Zero(num_atoms, X.cols());
    LearnResult learned = learn(X, D0, Y0, cfg);
    dict = with_dc_atom(n1, n2, learned.dictionary);

    result = recover_averaged(dict, op, b, nu, partitions, solver);
  }
  return result;
}

double default_nu(bool is_blur, double sigma) {
  return is_blur ? 0.1 * sigma : sigma;
}

}  // namespace patchrec
