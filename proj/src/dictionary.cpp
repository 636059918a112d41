#include "patchrec/dictionary.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace patchrec {

void validate_dictionary(const Dictionary& d) {
  if (d.atom_rows < 1 || d.atom_cols < 1) {
    throw std::invalid_argument("dictionary patch size must be positive");
  }
  if (d.atoms.rows() != d.atom_dim() || d.atoms.cols() < 1) {
    throw std::invalid_argument("dictionary atom matrix has wrong shape");
  }
  if (!d.atoms.allFinite()) {
    throw std::invalid_argument("dictionary contains non-finite entries");
  }
  for (Eigen::Index k = 0; k < d.atoms.cols(); ++k) {
    if (d.atoms.col(k).norm() > 1.0 + kAtomNormSlack) {
      throw std::invalid_argument("dictionary atom " + std::to_string(k) +
                                  " exceeds unit norm");
    }
  }
  if (d.has_dc_atom) {
    const double first = d.atoms(0, 0);
    if (first <= 0.0 || !(d.atoms.col(0).array() == first).all()) {
      throw std::invalid_argument("DC atom must be a positive constant column");
    }
  }
}

Dictionary make_dictionary(int atom_rows, int atom_cols, Eigen::MatrixXd atoms,
                           bool has_dc_atom) {
  Dictionary d{atom_rows, atom_cols, has_dc_atom, std::move(atoms)};
  validate_dictionary(d);
  return d;
}

Dictionary with_dc_atom(int atom_rows, int atom_cols,
                        const Eigen::MatrixXd& learned_atoms) {
  const int n = atom_rows * atom_cols;
  if (learned_atoms.rows() != n) {
    throw std::invalid_argument("atom length does not match patch size");
  }
  Eigen::MatrixXd atoms(n, learned_atoms.cols() + 1);
  atoms.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  atoms.rightCols(learned_atoms.cols()) = learned_atoms;
  return make_dictionary(atom_rows, atom_cols, std::move(atoms), true);
}

WeightVector default_weights(const Dictionary& d) {
  WeightVector w = WeightVector::Ones(d.num_atoms());
  if (d.has_dc_atom) w(0) = 0.0;
  return w;
}

void save_dictionary(const std::string& path, const Dictionary& d) {
  validate_dictionary(d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "PDICT1\n"
      << d.atom_rows << " " << d.atom_cols << " " << d.num_atoms() << " "
      << (d.has_dc_atom ? 1 : 0) << "\n";
  // Column-major doubles; this build targets little-endian hosts.
  out.write(reinterpret_cast<const char*>(d.atoms.data()),
            static_cast<std::streamsize>(sizeof(double) * d.atoms.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

Dictionary load_dictionary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != "PDICT1") throw std::runtime_error(path + ": not a PDICT1 file");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  int n1 = 0, n2 = 0, num_atoms = 0, dc_flag = -1;
  hs >> n1 >> n2 >> num_atoms >> dc_flag;
  if (!hs || n1 < 1 || n2 < 1 || num_atoms < 1 || (dc_flag != 0 && dc_flag != 1)) {
    throw std::runtime_error(path + ": malformed PDICT1 header");
  }
  Eigen::MatrixXd atoms(n1 * n2, num_atoms);
  in.read(reinterpret_cast<char*>(atoms.data()),
          static_cast<std::streamsize>(sizeof(double) * atoms.size()));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * atoms.size())) {
    throw std::runtime_error(path + ": truncated PDICT1 payload");
  }
  return make_dictionary(n1, n2, std::move(atoms), dc_flag == 1);
}

}  // namespace patchrec
