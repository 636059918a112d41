#pragma once

#include <cstdint>
#include <vector>

#include "patchrec/dictionary.hpp"
#include "patchrec/dictlearn.hpp"
#include "patchrec/l1solve.hpp"
#include "patchrec/operators.hpp"
#include "patchrec/partition.hpp"

namespace patchrec {

// 10 * log10(255^2 / MSE), in dB; +infinity for identical images.
double psnr(const Image& estimate, const Image& truth);

// The corner-patch sizes used by default: {n1 x n2, n1 x n2/2, n1/2 x n2}
// for three partitions, plus {n1 x n2/4, n1/4 x n2} for five.
std::vector<Partition> default_partitions(int image_rows, int image_cols,
                                          int patch_rows, int patch_cols,
                                          int count);

// Solves the weighted l1 model over one partition with the default weights
// (all ones; zero on the DC atom) and returns the synthesized estimate.
Image recover_once(const Dictionary& dict, const MeasurementOp& op,
                   const Eigen::VectorXcd& b, double nu, const Partition& partition,
                   const SolverConfig& solver);

struct AveragedRecovery {
  Image average;
  std::vector<Image> per_partition;
  std::vector<int> iterations;
};

// Solves every partition independently and averages the estimates.
AveragedRecovery recover_averaged(const Dictionary& dict, const MeasurementOp& op,
                                  const Eigen::VectorXcd& b, double nu,
                                  const std::vector<Partition>& partitions,
                                  const SolverConfig& solver);

struct AdaptiveConfig {
  LearnConfig learn;    // learn.lambda <= 0 selects 0.8 / sqrt(n1*n2)
  int rounds = 1;       // dictionary refreshes; one is usually enough
  int num_atoms = 0;    // learned atoms per refresh; 0 = match the input dictionary
  bool warm_start = true;  // seed the learner with the current non-DC atoms
};

// Recover, refresh the dictionary from the estimate's patches (means removed,
// DC atom re-appended), and recover again.
AveragedRecovery recover_adaptive(const Dictionary& initial, const MeasurementOp& op,
                                  const Eigen::VectorXcd& b, double nu,
                                  const std::vector<Partition>& partitions,
                                  const AdaptiveConfig& adaptive,
                                  const SolverConfig& solver);

// nu defaults from the operator family: sigma for mask and circulant
// measurements, 0.1 * sigma for blurs.
double default_nu(bool is_blur, double sigma);

}  // namespace patchrec
