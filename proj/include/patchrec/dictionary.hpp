#pragma once

#include <Eigen/Core>
#include <string>

namespace patchrec {

using CoefficientMatrix = Eigen::MatrixXd;  // K x p sparse codes (dense storage)
using WeightVector = Eigen::VectorXd;       // per-atom nonnegative weights

// Slack allowed on the unit-ball atom constraint.
inline constexpr double kAtomNormSlack = 1e-12;

// Column dictionary of patch-sized atoms; every atom has Euclidean norm <= 1.
// When has_dc_atom is set, column 0 is a positive constant atom that absorbs
// patch means.
struct Dictionary {
  int atom_rows = 0;      // n1
  int atom_cols = 0;      // n2
  bool has_dc_atom = false;
  Eigen::MatrixXd atoms;  // (n1*n2) x K, column-major patch vectorization

  int atom_dim() const { return atom_rows * atom_cols; }
  int num_atoms() const { return static_cast<int>(atoms.cols()); }
};

// Builds a dictionary and checks its invariants (throws std::invalid_argument).
Dictionary make_dictionary(int atom_rows, int atom_cols, Eigen::MatrixXd atoms,
                           bool has_dc_atom);

// Prepends the unit-norm constant atom to a matrix of learned atoms.
Dictionary with_dc_atom(int atom_rows, int atom_cols,
                        const Eigen::MatrixXd& learned_atoms);

void validate_dictionary(const Dictionary& d);

// Recovery weights: one per atom, all ones, except zero for the DC atom.
WeightVector default_weights(const Dictionary& d);

// PDICT1 file format: magic "PDICT1\n", ASCII header "n1 n2 K dc_flag\n",
// then (n1*n2)*K little-endian float64 values, column-major.
void save_dictionary(const std::string& path, const Dictionary& d);
Dictionary load_dictionary(const std::string& path);

}  // namespace patchrec
