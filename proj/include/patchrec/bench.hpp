#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "patchrec/dictionary.hpp"
#include "patchrec/dictlearn.hpp"
#include "patchrec/image.hpp"

namespace patchrec {

// One cell of the synthetic dictionary-recovery benchmark.
struct SynthSpec {
  int n = 36;         // sample dimension
  int K = 72;         // atoms
  int p = 720;        // samples
  int r = 4;          // nonzeros per sample
  int num_trials = 1;
  std::uint64_t rng_seed = 0;
};

struct SynthData {
  Eigen::MatrixXd dictionary;           // n x K, unit-norm columns
  Eigen::MatrixXd samples;              // n x p
  std::vector<std::vector<int>> supports;  // generating atom subsets
};

// D ~ Gaussian with normalized columns; every sample is a Gaussian
// combination of r atoms chosen uniformly without replacement.
SynthData generate_synthetic(const SynthSpec& spec);

// Percentage of truth atoms matched by some estimated atom at absolute
// cosine >= 0.99. Zero-norm atoms are excluded on both sides and counted
// in *excluded when given.
double recovery_rate(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate,
                     int* excluded = nullptr);

struct BenchCell {
  int n, K, p, r, trials;
  double mean_rate_pct;
  double mean_time_s;
};

// Runs num_trials generate/learn/score rounds for one spec; the trial seeds
// are spec.rng_seed + trial index.
BenchCell run_synth_bench(const SynthSpec& spec, const LearnConfig& learn_config);

std::string bench_to_csv(const std::vector<BenchCell>& cells);
std::string bench_to_json(const std::vector<BenchCell>& cells);

// Separable overcomplete DCT dictionary with a prepended DC atom, following
// the usual construction: T = sqrt(K-1) cosine ramps per axis, means removed
// for nonzero frequencies, columns normalized, combined by outer products.
// Requires K-1 to be a perfect square.
Dictionary build_dct_dictionary(int atom_rows, int atom_cols, int num_atoms);

// per_image patches per input image at uniformly random positions, each
// vectorized and mean-subtracted. Images smaller than the patch are skipped
// and counted in *skipped when given.
Eigen::MatrixXd sample_training_patches(const std::vector<Image>& images,
                                        int per_image, int patch_rows,
                                        int patch_cols, std::uint64_t seed,
                                        int* skipped = nullptr);

}  // namespace patchrec
