#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "patchrec/operators.hpp"
#include "patchrec/rng.hpp"

using namespace patchrec;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
  return m;
}

Eigen::VectorXcd random_complex_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = std::complex<double>(gauss(rng), gauss(rng));
  }
  return v;
}

// <A(x), v> with the real inner product on complex measurements.
double real_inner(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return a.dot(b).real();  // Eigen's dot conjugates the left argument
}

void check_adjoint(const MeasurementOp& op, std::uint64_t seed) {
  const Eigen::MatrixXd x = random_matrix(static_cast<int>(op.input_rows()),
                                          static_cast<int>(op.input_cols()), seed);
  const Eigen::VectorXcd v = random_complex_vector(op.output_size(), seed + 1);
  const double lhs = real_inner(op.apply(x), v);
  const double rhs = (x.array() * op.adjoint(v).array()).sum();
  CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
}

// Direct spatial-domain circular convolution, the oracle for the FFT path.
Eigen::MatrixXd circular_convolve(const Eigen::MatrixXd& img,
                                  const Eigen::MatrixXd& kernel) {
  const int rows = static_cast<int>(img.rows());
  const int cols = static_cast<int>(img.cols());
  const int kr = static_cast<int>(kernel.rows()) / 2;
  const int kc = static_cast<int>(kernel.cols()) / 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = 0; i < kernel.rows(); ++i) {
        for (int j = 0; j < kernel.cols(); ++j) {
          const int rr = ((r - (i - kr)) % rows + rows) % rows;
          const int cc = ((c - (j - kc)) % cols + cols) % cols;
          acc += kernel(i, j) * img(rr, cc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("mask apply and adjoint definitions") {
  // Omega = {first pixel} on [[5,2],[3,4]].
  const MaskOperator op(2, 2, {0});
  Eigen::MatrixXd img(2, 2);
  img << 5, 2, 3, 4;
  const Eigen::VectorXcd out = op.apply(img);
  REQUIRE(out.size() == 1);
  CHECK(out(0) == std::complex<double>(5.0, 0.0));

  const Eigen::MatrixXd back = op.adjoint(out);
  CHECK(back(0, 0) == 5.0);
  CHECK(back(0, 1) == 0.0);
  CHECK(back(1, 0) == 0.0);
  CHECK(back(1, 1) == 0.0);

  CHECK_THROWS_AS(MaskOperator(2, 2, {}), std::invalid_argument);
  CHECK_THROWS_AS(MaskOperator(2, 2, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(MaskOperator(2, 2, {4}), std::invalid_argument);
  CHECK_THROWS_AS(op.apply(Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
}

TEST_CASE("mask sampling ratio floor rule") {
  const MaskOperator op = MaskOperator::random(100, 100, 0.3, 11);
  CHECK(op.indices().size() == 3000);
  const MaskOperator tiny = MaskOperator::random(3, 3, 0.05, 11);
  CHECK(tiny.indices().size() == 1);  // floor would give 0; at least one sample
  CHECK_THROWS_AS(MaskOperator::random(4, 4, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(MaskOperator::random(4, 4, 1.5, 1), std::invalid_argument);
}

TEST_CASE("circulant with identity spectrum and full mask is the identity") {
  const int n = 12;
  std::vector<int> all(n * n);
  std::iota(all.begin(), all.end(), 0);
  const CirculantOperator op(Eigen::MatrixXcd::Ones(n, n), all);
  const Eigen::MatrixXd img = random_matrix(n, n, 3);
  const Eigen::VectorXcd out = op.apply(img);
  // Row-major measurement order.
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      CHECK(std::abs(out(r * n + c) - img(r, c)) < 1e-12);
    }
  }
}

TEST_CASE("circulant with unit spectrum and full mask is an isometry") {
  const int n = 16;
  std::vector<int> all(n * n);
  std::iota(all.begin(), all.end(), 0);
  const CirculantOperator op(CirculantOperator::random_spectrum(n, n, 8), all);
  const Eigen::MatrixXd img = random_matrix(n, n, 4);
  CHECK(op.apply(img).norm() ==
        doctest::Approx(img.norm()).epsilon(1e-10));
}

TEST_CASE("unit-modulus spectrum is enforced") {
  Eigen::MatrixXcd spectrum = Eigen::MatrixXcd::Ones(4, 4);
  spectrum(1, 2) = std::complex<double>(0.5, 0.0);
  CHECK_THROWS_AS(CirculantOperator(spectrum, {0, 1}), std::invalid_argument);
}

TEST_CASE("average blur fixes constant images and preserves the mean") {
  const BlurOperator op(20, 20, average_blur_kernel());
  const Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(20, 20, 7.5);
  const Eigen::VectorXcd out = op.apply(constant);
  CHECK((out.real().array() - 7.5).abs().maxCoeff() < 1e-12);
  CHECK(out.imag().cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd img = random_matrix(20, 20, 5);
  const Eigen::VectorXcd blurred = op.apply(img);
  CHECK(blurred.real().sum() ==
        doctest::Approx(img.sum()).epsilon(1e-12));
}

TEST_CASE("blur matches the spatial-domain convolution oracle on 6x6 images") {
  // The 9x9 kernel wraps around the 6x6 image several times.
  for (auto kernel : {average_blur_kernel(), motion_blur_kernel()}) {
    const BlurOperator op(6, 6, kernel);
    const Eigen::MatrixXd img = random_matrix(6, 6, 21);
    const Eigen::VectorXcd out = op.apply(img);
    const Eigen::MatrixXd expect = circular_convolve(img, kernel);
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 6; ++c) {
        CHECK(out(r * 6 + c).real() == doctest::Approx(expect(r, c)).epsilon(1e-12));
      }
    }
    // Adjoint of a symmetric kernel's blur equals blurring twice.
    if ((kernel - kernel.reverse().eval()).cwiseAbs().maxCoeff() < 1e-15) {
      const Eigen::MatrixXd twice = circular_convolve(expect, kernel);
      const Eigen::MatrixXd adj = op.adjoint(out);
      CHECK((adj - twice).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("apply is linear") {
  const CirculantOperator op(CirculantOperator::random_spectrum(10, 10, 2),
                             {0, 5, 17, 40, 99});
  const Eigen::MatrixXd a = random_matrix(10, 10, 6);
  const Eigen::MatrixXd b = random_matrix(10, 10, 7);
  const Eigen::VectorXcd lhs = op.apply(2.5 * a - 0.75 * b);
  const Eigen::VectorXcd rhs = 2.5 * op.apply(a) - 0.75 * op.apply(b);
  CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
}

TEST_CASE("randomized adjoint identities for every operator kind") {
  for (int trial = 0; trial < 10; ++trial) {
    const std::uint64_t seed = 100 + trial * 10;
    check_adjoint(MaskOperator::random(13, 9, 0.4, seed), seed);
    check_adjoint(CirculantOperator(
                      CirculantOperator::random_spectrum(11, 7, seed),
                      MaskOperator::random(11, 7, 0.5, seed + 3).indices()),
                  seed);
    check_adjoint(BlurOperator(12, 10, average_blur_kernel()), seed);
    check_adjoint(BlurOperator(12, 10, motion_blur_kernel()), seed);
  }
}

TEST_CASE("add_noise calibration") {
  MeasurementVector clean;
  clean.values = random_complex_vector(64, 42);
  clean.is_complex = true;

  SUBCASE("zero sigma_hat returns the input") {
    const MeasurementVector b = add_noise(clean, 0.0, 9);
    CHECK((b.values - clean.values).norm() == 0.0);
    CHECK(b.noise_sigma == 0.0);
  }

  SUBCASE("relative perturbation equals sigma_hat") {
    for (double sigma_hat : {0.01, 0.05, 0.10}) {
      const MeasurementVector b = add_noise(clean, sigma_hat, 9);
      const double rel = (b.values - clean.values).norm() / clean.values.norm();
      CHECK(std::abs(rel - sigma_hat) <= 1e-12);
      CHECK(b.noise_sigma > 0.0);
    }
  }

  SUBCASE("fixed seed gives bit-identical noise") {
    const MeasurementVector b1 = add_noise(clean, 0.05, 77);
    const MeasurementVector b2 = add_noise(clean, 0.05, 77);
    CHECK((b1.values.array() == b2.values.array()).all());
    CHECK(b1.noise_sigma == b2.noise_sigma);
  }

  SUBCASE("real measurements stay real") {
    MeasurementVector real_clean;
    real_clean.values = Eigen::VectorXcd::Ones(16);
    real_clean.is_complex = false;
    const MeasurementVector b = add_noise(real_clean, 0.1, 3);
    CHECK(b.values.imag().cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero measurements cannot be rescaled") {
    MeasurementVector zero;
    zero.values = Eigen::VectorXcd::Zero(4);
    CHECK_THROWS_AS(add_noise(zero, 0.01, 1), std::invalid_argument);
  }
}

TEST_CASE("spectral norm estimation") {
  SUBCASE("identity and diagonal maps") {
    AdjointPair id;
    id.domain_dim = 4;
    id.forward = [](const Eigen::VectorXd& x) {
      return Eigen::VectorXcd(x.cast<std::complex<double>>());
    };
    id.adjoint = [](const Eigen::VectorXcd& v) { return Eigen::VectorXd(v.real()); };
    CHECK(spectral_norm(id) == doctest::Approx(1.0).epsilon(1e-9));

    Eigen::Vector2d diag(2.0, 1.0);
    AdjointPair d;
    d.domain_dim = 2;
    d.forward = [diag](const Eigen::VectorXd& x) {
      return Eigen::VectorXcd((diag.array() * x.array()).cast<std::complex<double>>());
    };
    d.adjoint = [diag](const Eigen::VectorXcd& v) {
      return Eigen::VectorXd(diag.array() * v.real().array());
    };
    CHECK(spectral_norm(d) == doctest::Approx(2.0).epsilon(1e-9));
  }

  SUBCASE("random dense matrix matches full SVD") {
    const Eigen::MatrixXd A = random_matrix(12, 20, 13);
    AdjointPair m;
    m.domain_dim = 20;
    m.forward = [&A](const Eigen::VectorXd& x) {
      return Eigen::VectorXcd((A * x).cast<std::complex<double>>());
    };
    m.adjoint = [&A](const Eigen::VectorXcd& v) {
      return Eigen::VectorXd(A.transpose() * v.real());
    };
    const double truth = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
    CHECK(spectral_norm(m, 500, 1e-12) == doctest::Approx(truth).epsilon(1e-6));
  }

  SUBCASE("zero operator") {
    AdjointPair z;
    z.domain_dim = 3;
    z.forward = [](const Eigen::VectorXd&) { return Eigen::VectorXcd::Zero(5); };
    z.adjoint = [](const Eigen::VectorXcd&) { return Eigen::VectorXd::Zero(3); };
    CHECK(spectral_norm(z) == 0.0);
  }
}

TEST_CASE("kernel properties and ASCII round trip") {
  const Eigen::MatrixXd avg = average_blur_kernel();
  CHECK(avg.rows() == 9);
  CHECK(avg.minCoeff() == avg.maxCoeff());
  CHECK(avg.sum() == doctest::Approx(1.0).epsilon(1e-15));

  const Eigen::MatrixXd motion = motion_blur_kernel();
  CHECK(motion.rows() == 9);
  CHECK(motion.cols() == 9);
  CHECK(motion.minCoeff() >= 0.0);
  CHECK(motion.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // A 45-degree segment puts its mass on the main anti-diagonal direction.
  CHECK(motion(4, 4) > 0.0);
  CHECK(motion(3, 5) > 0.0);
  CHECK(motion(5, 3) > 0.0);
  CHECK(motion(0, 0) == 0.0);
  CHECK(motion(8, 8) == 0.0);

  const Eigen::MatrixXd back = kernel_from_ascii(kernel_to_ascii(motion));
  CHECK((back.array() == motion.array()).all());
}

TEST_CASE("motion kernel golden values") {
  // Frozen reference grid for the length-10, 45-degree segment raster.
  const Eigen::MatrixXd k = motion_blur_kernel();
  struct Entry {
    int r, c;
    double v;
  };
  const Entry golden[] = {
      {0, 7, 0.014511144421134076}, {1, 6, 0.026238681741308317},
      {1, 7, 0.089584463059966202}, {1, 8, 0.014511144421134116},
      {2, 5, 0.026238681741308327}, {2, 6, 0.089584463059966216},
      {2, 7, 0.026238681741308369}, {3, 4, 0.026238681741308337},
      {3, 5, 0.089584463059966229}, {3, 6, 0.026238681741308358},
      {4, 3, 0.026238681741308348}, {4, 4, 0.089584463059966243},
      {4, 5, 0.026238681741308348}, {5, 2, 0.026238681741308358},
      {5, 3, 0.089584463059966229}, {5, 4, 0.026238681741308337},
      {6, 1, 0.026238681741308369}, {6, 2, 0.089584463059966216},
      {6, 3, 0.026238681741308327}, {7, 0, 0.014511144421134116},
      {7, 1, 0.089584463059966202}, {7, 2, 0.026238681741308317},
      {8, 1, 0.014511144421134076}};
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(9, 9);
  for (const Entry& e : golden) expected(e.r, e.c) = e.v;
  CHECK((k - expected).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("PMEAS1 round trip is bit exact") {
  MeasurementVector v;
  v.values = random_complex_vector(37, 55);
  v.is_complex = true;
  const std::string path = "pmeas_roundtrip.tmp";
  save_measurements(path, v);
  const MeasurementVector back = load_measurements(path);
  std::remove(path.c_str());
  CHECK(back.is_complex);
  REQUIRE(back.values.size() == v.values.size());
  CHECK((back.values.array() == v.values.array()).all());
}
