#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "patchrec/bench.hpp"

using namespace patchrec;

TEST_CASE("synthetic data generation") {
  SynthSpec spec;
  spec.n = 12;
  spec.K = 24;
  spec.p = 60;
  spec.r = 3;
  spec.rng_seed = 15;
  const SynthData data = generate_synthetic(spec);

  REQUIRE(data.dictionary.rows() == 12);
  REQUIRE(data.dictionary.cols() == 24);
  for (int k = 0; k < spec.K; ++k) {
    CHECK(std::abs(data.dictionary.col(k).norm() - 1.0) <= 1e-12);
  }

  // Every sample lies in the span of its recorded r-atom subset.
  for (int j = 0; j < spec.p; ++j) {
    REQUIRE(data.supports[j].size() == 3);
    Eigen::MatrixXd sub(12, 3);
    for (int i = 0; i < 3; ++i) sub.col(i) = data.dictionary.col(data.supports[j][i]);
    const Eigen::VectorXd coef = sub.colPivHouseholderQr().solve(data.samples.col(j));
    CHECK((sub * coef - data.samples.col(j)).norm() < 1e-10);
  }

  const SynthData again = generate_synthetic(spec);
  CHECK((again.dictionary.array() == data.dictionary.array()).all());
  CHECK((again.samples.array() == data.samples.array()).all());

  SynthSpec bad = spec;
  bad.r = 25;  // r > K
  CHECK_THROWS_AS(generate_synthetic(bad), std::invalid_argument);
  bad.r = bad.K;  // boundary allowed
  CHECK_NOTHROW(generate_synthetic(bad));
}

TEST_CASE("recovery rate criterion") {
  const Eigen::MatrixXd D = generate_synthetic({8, 16, 1, 1, 1, 3}).dictionary;
  CHECK(recovery_rate(D, D) == 100.0);
  CHECK(recovery_rate(D, -D) == 100.0);

  // Permutation and sign flips of columns do not change the rate.
  Eigen::MatrixXd shuffled = D;
  std::mt19937_64 rng(4);
  std::vector<int> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int k = 0; k < 16; ++k) {
    shuffled.col(k) = (k % 2 == 0 ? 1.0 : -1.0) * D.col(perm[k]);
  }
  CHECK(recovery_rate(D, shuffled) == 100.0);
  CHECK(recovery_rate(shuffled, D) == 100.0);

  // Independent random dictionaries rarely align to 0.99 cosine.
  double total = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a =
        generate_synthetic({36, 72, 1, 1, 1, 100 + (unsigned)trial}).dictionary;
    const Eigen::MatrixXd b =
        generate_synthetic({36, 72, 1, 1, 1, 200 + (unsigned)trial}).dictionary;
    total += recovery_rate(a, b);
  }
  CHECK(total / 20.0 < 5.0);

  // Zero-norm atoms are excluded and counted.
  Eigen::MatrixXd with_zero = D;
  with_zero.col(3).setZero();
  int excluded = 0;
  recovery_rate(with_zero, D, &excluded);
  CHECK(excluded == 1);

  CHECK_THROWS_AS(recovery_rate(D, Eigen::MatrixXd::Ones(7, 3)),
                  std::invalid_argument);
}

TEST_CASE("run_synth_bench smoke") {
  SynthSpec spec;
  spec.n = 8;
  spec.K = 12;
  spec.p = 60;
  spec.r = 2;
  spec.num_trials = 2;
  spec.rng_seed = 33;
  LearnConfig cfg;
  cfg.lambda = 0.5 / std::sqrt(8.0);
  cfg.max_iters = 300;
  const BenchCell cell = run_synth_bench(spec, cfg);
  CHECK(cell.trials == 2);
  CHECK(cell.mean_rate_pct >= 0.0);
  CHECK(cell.mean_rate_pct <= 100.0);
  CHECK(cell.mean_time_s > 0.0);

  const std::string csv = bench_to_csv({cell});
  CHECK(csv.find("cell,n,K,p,r,mean_rate_pct,mean_time_s,trials\n") == 0);
  CHECK(csv.find("n8_K12_p60_r2,8,12,60,2,") != std::string::npos);
  const std::string js = bench_to_json({cell});
  CHECK(js.find("\"mean_rate_pct\"") != std::string::npos);
}

TEST_CASE("overcomplete DCT dictionary") {
  const Dictionary d = build_dct_dictionary(8, 8, 257);
  CHECK(d.atoms.rows() == 64);
  CHECK(d.atoms.cols() == 257);
  CHECK(d.has_dc_atom);
  CHECK(d.atoms(0, 0) == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
  for (int k = 0; k < 257; ++k) {
    CHECK(std::abs(d.atoms.col(k).norm() - 1.0) <= 1e-12);
  }
  // All cosine modes except the (0,0) one are zero mean; that mode is the
  // constant direction already covered by the prepended DC.
  for (int k = 2; k < 257; ++k) {
    CHECK(std::abs(d.atoms.col(k).mean()) <= 1e-12);
  }
  CHECK((d.atoms.col(1) - d.atoms.col(0)).cwiseAbs().maxCoeff() <= 1e-12);

  // Deterministic construction.
  const Dictionary again = build_dct_dictionary(8, 8, 257);
  CHECK((again.atoms.array() == d.atoms.array()).all());

  // Frozen checksums and spot values pin the construction.
  CHECK(d.atoms.sum() == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(d.atoms.cwiseAbs().sum() ==
        doctest::Approx(1651.8291897879785).epsilon(1e-12));
  CHECK(d.atoms(5, 37) == doctest::Approx(-0.12895172077251807).epsilon(1e-12));
  CHECK(d.atoms(63, 256) == doctest::Approx(0.014128486667480828).epsilon(1e-12));
  CHECK(d.atoms(20, 100) == doctest::Approx(-0.016048574473502435).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(build_dct_dictionary(8, 8, 200),
                       doctest::Contains("perfect square"), std::invalid_argument);
}

TEST_CASE("training patch sampling") {
  std::vector<Image> images;
  Image a = Image::zero(12, 12);
  for (Eigen::Index i = 0; i < a.pixels.size(); ++i) {
    a.pixels.data()[i] = static_cast<double>(i % 251);
  }
  images.push_back(a);
  images.push_back(Image::zero(2, 2));  // too small, skipped
  Image c = Image::zero(9, 14);
  c.pixels.setConstant(88.0);
  images.push_back(c);

  int skipped = 0;
  const Eigen::MatrixXd X = sample_training_patches(images, 5, 4, 4, 17, &skipped);
  CHECK(skipped == 1);
  REQUIRE(X.rows() == 16);
  REQUIRE(X.cols() == 10);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    CHECK(std::abs(X.col(j).mean()) <= 1e-12);
  }
  // Constant-image patches vanish after mean removal.
  CHECK(X.rightCols(5).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::MatrixXd X2 = sample_training_patches(images, 5, 4, 4, 17);
  CHECK((X2.array() == X.array()).all());
}
