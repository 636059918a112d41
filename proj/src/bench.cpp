#include "patchrec/bench.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "patchrec/rng.hpp"

namespace patchrec {

SynthData generate_synthetic(const SynthSpec& spec) {
  if (spec.r < 1 || spec.r > spec.K) {
    throw std::invalid_argument("sparsity r must lie in [1, K]");
  }
  if (spec.p < 1) throw std::invalid_argument("need at least one sample");

  SynthData data;
  data.dictionary =
      random_unit_dictionary(spec.n, spec.K, derive_seed(spec.rng_seed, "synth.dict"));

  auto rng = make_rng(derive_seed(spec.rng_seed, "synth.samples"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  data.samples.resize(spec.n, spec.p);
  data.supports.resize(spec.p);
  std::vector<int> pool(spec.K);
  for (int j = 0; j < spec.p; ++j) {
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < spec.r; ++i) {
      std::uniform_int_distribution<int> pick(i, spec.K - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    data.supports[j].assign(pool.begin(), pool.begin() + spec.r);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.n);
    for (int atom : data.supports[j]) {
      x += gauss(rng) * data.dictionary.col(atom);
    }
    data.samples.col(j) = x;
  }
  return data;
}

double recovery_rate(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate,
                     int* excluded) {
  if (truth.rows() != estimate.rows()) {
    throw std::invalid_argument("recovery_rate: atom dimensions differ");
  }
  int dropped = 0;
  std::vector<Eigen::VectorXd> est;
  est.reserve(estimate.cols());
  for (Eigen::Index k = 0; k < estimate.cols(); ++k) {
    const double norm = estimate.col(k).norm();
    if (norm == 0.0) {
      ++dropped;
      continue;
    }
    est.push_back(estimate.col(k) / norm);
  }
  int considered = 0;
  int matched = 0;
  for (Eigen::Index k = 0; k < truth.cols(); ++k) {
    const double norm = truth.col(k).norm();
    if (norm == 0.0) {
      ++dropped;
      continue;
    }
    ++considered;
    const Eigen::VectorXd d = truth.col(k) / norm;
    for (const Eigen::VectorXd& e : est) {
      if (std::abs(d.dot(e)) >= 0.99) {
        ++matched;
        break;
      }
    }
  }
  if (excluded != nullptr) *excluded = dropped;
  if (considered == 0) return 0.0;
  return 100.0 * static_cast<double>(matched) / considered;
}

BenchCell run_synth_bench(const SynthSpec& spec, const LearnConfig& learn_config) {
  if (spec.num_trials < 1) throw std::invalid_argument("need at least one trial");
  double rate_sum = 0.0;
  double time_sum = 0.0;
  for (int trial = 0; trial < spec.num_trials; ++trial) {
    SynthSpec trial_spec = spec;
    trial_spec.rng_seed = spec.rng_seed + static_cast<std::uint64_t>(trial);
    const SynthData data = generate_synthetic(trial_spec);

    LearnConfig cfg = learn_config;
    cfg.rng_seed = derive_seed(trial_spec.rng_seed, "synth.learn");
    const Eigen::MatrixXd D0 = random_unit_dictionary(spec.n, spec.K, cfg.rng_seed);
    const Eigen::MatrixXd Y0 = Eigen::MatrixXd::Zero(spec.K, spec.p);

    const auto start = std::chrono::steady_clock::now();
    const LearnResult learned = learn(data.samples, D0, Y0, cfg);
    const auto stop = std::chrono::steady_clock::now();
    time_sum += std::chrono::duration<double>(stop - start).count();
    rate_sum += recovery_rate(data.dictionary, learned.dictionary);
  }
  return BenchCell{spec.n,
                   spec.K,
                   spec.p,
                   spec.r,
                   spec.num_trials,
                   rate_sum / spec.num_trials,
                   time_sum / spec.num_trials};
}

std::string bench_to_csv(const std::vector<BenchCell>& cells) {
  std::ostringstream out;
  out.precision(17);
  out << "cell,n,K,p,r,mean_rate_pct,mean_time_s,trials\n";
  for (const BenchCell& c : cells) {
    out << 'n' << c.n << "_K" << c.K << "_p" << c.p << "_r" << c.r << ',' << c.n
        << ',' << c.K << ',' << c.p << ',' << c.r << ',' << c.mean_rate_pct << ','
        << c.mean_time_s << ',' << c.trials << '\n';
  }
  return out.str();
}

std::string bench_to_json(const std::vector<BenchCell>& cells) {
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchCell& c : cells) {
    rows.push_back({{"cell", "n" + std::to_string(c.n) + "_K" + std::to_string(c.K) +
                                 "_p" + std::to_string(c.p) + "_r" + std::to_string(c.r)},
                    {"n", c.n},
                    {"K", c.K},
                    {"p", c.p},
                    {"r", c.r},
                    {"mean_rate_pct", c.mean_rate_pct},
                    {"mean_time_s", c.mean_time_s},
                    {"trials", c.trials}});
  }
  return rows.dump(2) + "\n";
}

Dictionary build_dct_dictionary(int atom_rows, int atom_cols, int num_atoms) {
  const int ramps = static_cast<int>(std::lround(std::sqrt(num_atoms - 1.0)));
  if (num_atoms < 2 || ramps * ramps != num_atoms - 1) {
    throw std::invalid_argument(
        "DCT dictionary needs K-1 to be a perfect square (got K = " +
        std::to_string(num_atoms) + ")");
  }
  // 1-D cosine ramps, means removed for nonzero frequencies.
  auto axis_basis = [ramps](int n) {
    Eigen::MatrixXd B(n, ramps);
    for (int k = 0; k < ramps; ++k) {
      for (int i = 0; i < n; ++i) {
        B(i, k) = std::cos(static_cast<double>(i) * k * std::numbers::pi / ramps);
      }
      if (k > 0) B.col(k).array() -= B.col(k).mean();
      B.col(k).normalize();
    }
    return B;
  };
  const Eigen::MatrixXd B1 = axis_basis(atom_rows);
  const Eigen::MatrixXd B2 = axis_basis(atom_cols);

  Eigen::MatrixXd atoms(atom_rows * atom_cols, num_atoms - 1);
  int col = 0;
  for (int k1 = 0; k1 < ramps; ++k1) {
    for (int k2 = 0; k2 < ramps; ++k2) {
      const Eigen::MatrixXd patch = B1.col(k1) * B2.col(k2).transpose();
      atoms.col(col) = Eigen::Map<const Eigen::VectorXd>(patch.data(), patch.size());
      atoms.col(col).normalize();
      ++col;
    }
  }
  return with_dc_atom(atom_rows, atom_cols, atoms);
}

Eigen::MatrixXd sample_training_patches(const std::vector<Image>& images,
                                        int per_image, int patch_rows,
                                        int patch_cols, std::uint64_t seed,
                                        int* skipped) {
  if (per_image < 1) throw std::invalid_argument("per_image must be >= 1");
  auto rng = make_rng(derive_seed(seed, "training.patches"));
  const int n = patch_rows * patch_cols;
  std::vector<Eigen::VectorXd> cols;
  int dropped = 0;
  for (const Image& img : images) {
    if (img.rows() < patch_rows || img.cols() < patch_cols) {
      ++dropped;
      continue;
    }
    std::uniform_int_distribution<int> row_pick(
        0, static_cast<int>(img.rows()) - patch_rows);
    std::uniform_int_distribution<int> col_pick(
        0, static_cast<int>(img.cols()) - patch_cols);
    for (int s = 0; s < per_image; ++s) {
      const int r = row_pick(rng);
      const int c = col_pick(rng);
      const Eigen::MatrixXd patch = img.pixels.block(r, c, patch_rows, patch_cols);
      Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(patch.data(), n);
      v.array() -= v.mean();
      cols.push_back(std::move(v));
    }
  }
  if (skipped != nullptr) *skipped = dropped;
  if (cols.empty()) throw std::runtime_error("no usable training images");
  Eigen::MatrixXd X(n, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) X.col(j) = cols[j];
  return X;
}

}  // namespace patchrec
