#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "patchrec/image.hpp"

namespace patchrec {

// Measurements b = A(M) + noise. Real-valued operators keep imag parts zero.
struct MeasurementVector {
  Eigen::VectorXcd values;
  bool is_complex = false;   // whether the generating operator is complex-valued
  double noise_sigma = 0.0;  // realized sigma when noise was added, else 0
};

// Linear measurement map with an exact adjoint. The adjoint is taken with
// respect to the real inner product: <A(M), v> = Re(A(M)^H v) = <M, adjoint(v)>,
// so adjoint() returns the real part of A^H v as an image-shaped array.
class MeasurementOp {
 public:
  virtual ~MeasurementOp() = default;

  virtual Eigen::Index input_rows() const = 0;
  virtual Eigen::Index input_cols() const = 0;
  virtual Eigen::Index output_size() const = 0;
  virtual bool complex_output() const = 0;

  virtual Eigen::VectorXcd apply(const Eigen::MatrixXd& img) const = 0;
  virtual Eigen::MatrixXd adjoint(const Eigen::VectorXcd& v) const = 0;

  MeasurementVector measure(const Image& img) const;
};

// Pixel-sampling operator P_Omega; keeps the pixels in Omega, drops the rest.
// Omega holds strictly increasing row-major linear indices i*N2 + j.
class MaskOperator final : public MeasurementOp {
 public:
  MaskOperator(int rows, int cols, std::vector<int> indices);

  // floor(sr * N1 * N2) indices sampled uniformly without replacement.
  static MaskOperator random(int rows, int cols, double sampling_ratio,
                             std::uint64_t seed);
  static MaskOperator full(int rows, int cols);

  const std::vector<int>& indices() const { return indices_; }

  Eigen::Index input_rows() const override { return rows_; }
  Eigen::Index input_cols() const override { return cols_; }
  Eigen::Index output_size() const override {
    return static_cast<Eigen::Index>(indices_.size());
  }
  bool complex_output() const override { return false; }
  Eigen::VectorXcd apply(const Eigen::MatrixXd& img) const override;
  Eigen::MatrixXd adjoint(const Eigen::VectorXcd& v) const override;

 private:
  int rows_, cols_;
  std::vector<int> indices_;
};

// Compressive sensing operator P_Omega composed with a 2-D circulant map:
// select the Omega entries of IFFT2(FFT2(M) .* spectrum). The spectrum has
// unit modulus everywhere, which makes the circulant factor unitary.
class CirculantOperator final : public MeasurementOp {
 public:
  CirculantOperator(Eigen::MatrixXcd spectrum, std::vector<int> indices);

  // Unit-modulus transfer function with phases uniform in [0, 2*pi), seeded.
  static Eigen::MatrixXcd random_spectrum(int rows, int cols, std::uint64_t seed);

  const Eigen::MatrixXcd& spectrum() const { return spectrum_; }
  const std::vector<int>& indices() const { return indices_; }

  Eigen::Index input_rows() const override { return spectrum_.rows(); }
  Eigen::Index input_cols() const override { return spectrum_.cols(); }
  Eigen::Index output_size() const override {
    return static_cast<Eigen::Index>(indices_.size());
  }
  bool complex_output() const override { return true; }
  Eigen::VectorXcd apply(const Eigen::MatrixXd& img) const override;
  Eigen::MatrixXd adjoint(const Eigen::VectorXcd& v) const override;

 private:
  Eigen::MatrixXcd spectrum_;
  std::vector<int> indices_;
};

// Circular (periodic) convolution with a small centered kernel, via FFT.
// Output is the full-size blurred image.
class BlurOperator final : public MeasurementOp {
 public:
  BlurOperator(int rows, int cols, Eigen::MatrixXd kernel);

  const Eigen::MatrixXd& kernel() const { return kernel_; }

  Eigen::Index input_rows() const override { return rows_; }
  Eigen::Index input_cols() const override { return cols_; }
  Eigen::Index output_size() const override {
    return static_cast<Eigen::Index>(rows_) * cols_;
  }
  bool complex_output() const override { return false; }
  Eigen::VectorXcd apply(const Eigen::MatrixXd& img) const override;
  Eigen::MatrixXd adjoint(const Eigen::VectorXcd& v) const override;

 private:
  int rows_, cols_;
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXcd transfer_;  // FFT2 of the zero-padded, centered kernel
};

// Uniform size x size kernel (all entries 1/size^2).
Eigen::MatrixXd average_blur_kernel(int size = 9);

// Line-segment motion kernel: a segment of the given length through the
// kernel center at the given angle, rasterized with tent anti-aliasing
// (weight = max(0, 1 - distance to segment)), normalized to sum 1.
Eigen::MatrixXd motion_blur_kernel(double length = 10.0, double angle_deg = 45.0,
                                   int size = 9);

// ASCII grid serialization for kernels (one row per line, %.17g entries).
std::string kernel_to_ascii(const Eigen::MatrixXd& kernel);
Eigen::MatrixXd kernel_from_ascii(const std::string& text);

// b = clean + sigma * xi with xi standard Gaussian (independent real/imag
// parts when the measurement is complex) and sigma = sigma_hat * ||clean|| /
// ||xi||, so the relative perturbation equals sigma_hat exactly.
MeasurementVector add_noise(const MeasurementVector& clean, double sigma_hat,
                            std::uint64_t seed);

// PMEAS1 file format: magic "PMEAS1\n", ASCII header "m complex_flag\n",
// then m little-endian float64 (re, im) pairs. noise_sigma travels in the
// JSON manifest, not here.
void save_measurements(const std::string& path, const MeasurementVector& v);
MeasurementVector load_measurements(const std::string& path);

// A generic linear map R^n -> C^m given as a forward/adjoint closure pair.
struct AdjointPair {
  Eigen::Index domain_dim = 0;
  std::function<Eigen::VectorXcd(const Eigen::VectorXd&)> forward;
  std::function<Eigen::VectorXd(const Eigen::VectorXcd&)> adjoint;
};

// Largest singular value by power iteration on A^T A. Returns 0 for the zero
// map. Stops when the estimate changes by less than tol (relative) or after
// max_iters sweeps.
double spectral_norm(const AdjointPair& map, int max_iters = 100,
                     double tol = 1e-9, std::uint64_t seed = 12345);

// 2-D transforms used by the operators above (FFTW backed). fft2 is the
// unnormalized forward DFT; ifft2 includes the 1/(N1*N2) factor.
Eigen::MatrixXcd fft2(const Eigen::MatrixXcd& in);
Eigen::MatrixXcd ifft2(const Eigen::MatrixXcd& in);

}  // namespace patchrec
