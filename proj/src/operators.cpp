#include "patchrec/operators.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "patchrec/rng.hpp"

namespace patchrec {

namespace {

constexpr double kUnitModulusSlack = 1e-12;
constexpr double kKernelSumSlack = 1e-12;

void check_indices(int rows, int cols, const std::vector<int>& idx) {
  if (idx.empty()) throw std::invalid_argument("index set must be non-empty");
  const long total = static_cast<long>(rows) * cols;
  int prev = -1;
  for (int i : idx) {
    if (i <= prev || i < 0 || i >= total) {
      throw std::invalid_argument("indices must be strictly increasing in [0, N1*N2)");
    }
    prev = i;
  }
}

// Linear indices are row-major: idx = r * cols + c.
inline std::pair<int, int> unravel(int idx, int cols) {
  return {idx / cols, idx % cols};
}

// Out-of-place complex 2-D DFT. Eigen matrices are column-major, so the
// buffer is handed to FFTW as a row-major array of the transposed matrix;
// the 2-D DFT is axis-symmetric, which makes the result come back in the
// same (column-major) layout.
Eigen::MatrixXcd fft2_impl(const Eigen::MatrixXcd& in, int sign) {
  Eigen::MatrixXcd src = in;
  Eigen::MatrixXcd out(in.rows(), in.cols());
  fftw_plan plan = fftw_plan_dft_2d(
      static_cast<int>(in.cols()), static_cast<int>(in.rows()),
      reinterpret_cast<fftw_complex*>(src.data()),
      reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
  if (plan == nullptr) throw std::runtime_error("fftw plan creation failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return out;
}

}  // namespace

Eigen::MatrixXcd fft2(const Eigen::MatrixXcd& in) {
  return fft2_impl(in, FFTW_FORWARD);
}

Eigen::MatrixXcd ifft2(const Eigen::MatrixXcd& in) {
  Eigen::MatrixXcd out = fft2_impl(in, FFTW_BACKWARD);
  out /= static_cast<double>(in.size());
  return out;
}

MeasurementVector MeasurementOp::measure(const Image& img) const {
  if (img.rows() != input_rows() || img.cols() != input_cols()) {
    throw std::invalid_argument("image dims do not match operator");
  }
  return MeasurementVector{apply(img.pixels), complex_output(), 0.0};
}

// ---------------------------------------------------------------------------
// MaskOperator

MaskOperator::MaskOperator(int rows, int cols, std::vector<int> indices)
    : rows_(rows), cols_(cols), indices_(std::move(indices)) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("mask dims must be positive");
  check_indices(rows, cols, indices_);
}

MaskOperator MaskOperator::random(int rows, int cols, double sampling_ratio,
                                  std::uint64_t seed) {
  if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0)) {
    throw std::invalid_argument("sampling ratio must lie in (0, 1]");
  }
  const long total = static_cast<long>(rows) * cols;
  const long m = std::max<long>(1, static_cast<long>(sampling_ratio * total));
  std::vector<int> pool(total);
  std::iota(pool.begin(), pool.end(), 0);
  auto rng = make_rng(seed);
  // Partial Fisher-Yates: the first m entries become the sample.
  for (long i = 0; i < m; ++i) {
    std::uniform_int_distribution<long> pick(i, total - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<int> idx(pool.begin(), pool.begin() + m);
  std::sort(idx.begin(), idx.end());
  return MaskOperator(rows, cols, std::move(idx));
}

MaskOperator MaskOperator::full(int rows, int cols) {
  std::vector<int> idx(static_cast<std::size_t>(rows) * cols);
  std::iota(idx.begin(), idx.end(), 0);
  return MaskOperator(rows, cols, std::move(idx));
}

Eigen::VectorXcd MaskOperator::apply(const Eigen::MatrixXd& img) const {
  if (img.rows() != rows_ || img.cols() != cols_) {
    throw std::invalid_argument("image dims do not match mask operator");
  }
  Eigen::VectorXcd out(indices_.size());
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    const auto [r, c] = unravel(indices_[k], cols_);
    out(k) = std::complex<double>(img(r, c), 0.0);
  }
  return out;
}

Eigen::MatrixXd MaskOperator::adjoint(const Eigen::VectorXcd& v) const {
  if (v.size() != output_size()) {
    throw std::invalid_argument("measurement length does not match mask operator");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, cols_);
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    const auto [r, c] = unravel(indices_[k], cols_);
    out(r, c) = v(k).real();
  }
  return out;
}

// ---------------------------------------------------------------------------
// CirculantOperator

CirculantOperator::CirculantOperator(Eigen::MatrixXcd spectrum,
                                     std::vector<int> indices)
    : spectrum_(std::move(spectrum)), indices_(std::move(indices)) {
  if (spectrum_.rows() < 1 || spectrum_.cols() < 1) {
    throw std::invalid_argument("spectrum dims must be positive");
  }
  if (((spectrum_.array().abs() - 1.0).abs() > kUnitModulusSlack).any()) {
    throw std::invalid_argument("circulant spectrum must have unit modulus");
  }
  check_indices(static_cast<int>(spectrum_.rows()),
                static_cast<int>(spectrum_.cols()), indices_);
}

Eigen::MatrixXcd CirculantOperator::random_spectrum(int rows, int cols,
                                                    std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Eigen::MatrixXcd s(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double t = phase(rng);
      s(r, c) = std::complex<double>(std::cos(t), std::sin(t));
    }
  }
  return s;
}

Eigen::VectorXcd CirculantOperator::apply(const Eigen::MatrixXd& img) const {
  if (img.rows() != spectrum_.rows() || img.cols() != spectrum_.cols()) {
    throw std::invalid_argument("image dims do not match circulant operator");
  }
  const Eigen::MatrixXcd conv =
      ifft2(fft2(img.cast<std::complex<double>>()).cwiseProduct(spectrum_));
  const int cols = static_cast<int>(spectrum_.cols());
  Eigen::VectorXcd out(indices_.size());
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    const auto [r, c] = unravel(indices_[k], cols);
    out(k) = conv(r, c);
  }
  return out;
}

Eigen::MatrixXd CirculantOperator::adjoint(const Eigen::VectorXcd& v) const {
  if (v.size() != output_size()) {
    throw std::invalid_argument("measurement length does not match circulant operator");
  }
  const int cols = static_cast<int>(spectrum_.cols());
  Eigen::MatrixXcd filled =
      Eigen::MatrixXcd::Zero(spectrum_.rows(), spectrum_.cols());
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    const auto [r, c] = unravel(indices_[k], cols);
    filled(r, c) = v(k);
  }
  return ifft2(fft2(filled).cwiseProduct(spectrum_.conjugate())).real();
}

// ---------------------------------------------------------------------------
// BlurOperator

BlurOperator::BlurOperator(int rows, int cols, Eigen::MatrixXd kernel)
    : rows_(rows), cols_(cols), kernel_(std::move(kernel)) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("blur dims must be positive");
  if (kernel_.rows() % 2 == 0 || kernel_.cols() % 2 == 0) {
    throw std::invalid_argument("blur kernel must have odd dimensions");
  }
  if ((kernel_.array() < 0.0).any()) {
    throw std::invalid_argument("blur kernel entries must be nonnegative");
  }
  if (std::abs(kernel_.sum() - 1.0) > kKernelSumSlack) {
    throw std::invalid_argument("blur kernel must sum to 1");
  }
  // Wrap the centered kernel onto the image grid (accumulating when the
  // kernel is larger than the image) and precompute its transfer function.
  Eigen::MatrixXd embedded = Eigen::MatrixXd::Zero(rows, cols);
  const int kr = static_cast<int>(kernel_.rows()) / 2;
  const int kc = static_cast<int>(kernel_.cols()) / 2;
  for (int i = 0; i < kernel_.rows(); ++i) {
    for (int j = 0; j < kernel_.cols(); ++j) {
      const int r = ((i - kr) % rows + rows) % rows;
      const int c = ((j - kc) % cols + cols) % cols;
      embedded(r, c) += kernel_(i, j);
    }
  }
  transfer_ = fft2(embedded.cast<std::complex<double>>());
}

Eigen::VectorXcd BlurOperator::apply(const Eigen::MatrixXd& img) const {
  if (img.rows() != rows_ || img.cols() != cols_) {
    throw std::invalid_argument("image dims do not match blur operator");
  }
  const Eigen::MatrixXd conv =
      ifft2(fft2(img.cast<std::complex<double>>()).cwiseProduct(transfer_)).real();
  // Measurements use the row-major pixel order shared by all operators.
  Eigen::VectorXcd out(conv.size());
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      out(static_cast<Eigen::Index>(r) * cols_ + c) =
          std::complex<double>(conv(r, c), 0.0);
    }
  }
  return out;
}

Eigen::MatrixXd BlurOperator::adjoint(const Eigen::VectorXcd& v) const {
  if (v.size() != output_size()) {
    throw std::invalid_argument("measurement length does not match blur operator");
  }
  Eigen::MatrixXd vm(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      vm(r, c) = v(static_cast<Eigen::Index>(r) * cols_ + c).real();
    }
  }
  return ifft2(fft2(vm.cast<std::complex<double>>())
                   .cwiseProduct(transfer_.conjugate()))
      .real();
}

// ---------------------------------------------------------------------------
// Kernels

Eigen::MatrixXd average_blur_kernel(int size) {
  if (size < 1 || size % 2 == 0) {
    throw std::invalid_argument("kernel size must be odd and positive");
  }
  return Eigen::MatrixXd::Constant(size, size,
                                   1.0 / (static_cast<double>(size) * size));
}

Eigen::MatrixXd motion_blur_kernel(double length, double angle_deg, int size) {
  if (size < 1 || size % 2 == 0) {
    throw std::invalid_argument("kernel size must be odd and positive");
  }
  if (length < 1.0) throw std::invalid_argument("motion length must be >= 1");
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double half = (length - 1.0) / 2.0;
  const double ex = half * std::cos(theta);
  const double ey = half * std::sin(theta);

  const int c = size / 2;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      // Cell center in segment coordinates: x to the right, y upward.
      const double x = static_cast<double>(j - c);
      const double y = static_cast<double>(c - i);
      // Distance from (x, y) to the segment [-e, e] through the origin.
      const double seg2 = ex * ex + ey * ey;
      double t = seg2 > 0.0 ? (x * ex + y * ey) / seg2 : 0.0;
      t = std::clamp(t, -1.0, 1.0);
      const double dx = x - t * ex;
      const double dy = y - t * ey;
      const double dist = std::hypot(dx, dy);
      k(i, j) = std::max(0.0, 1.0 - dist);
    }
  }
  const double sum = k.sum();
  if (sum <= 0.0) throw std::runtime_error("motion kernel rasterized to zero");
  return k / sum;
}

std::string kernel_to_ascii(const Eigen::MatrixXd& kernel) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
    for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
      if (j > 0) out << ' ';
      out << kernel(i, j);
    }
    out << '\n';
  }
  return out.str();
}

Eigen::MatrixXd kernel_from_ascii(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty kernel text");
  Eigen::MatrixXd k(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw std::runtime_error("ragged kernel text");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) k(i, j) = rows[i][j];
  }
  return k;
}

// ---------------------------------------------------------------------------
// Noise

MeasurementVector add_noise(const MeasurementVector& clean, double sigma_hat,
                            std::uint64_t seed) {
  if (sigma_hat < 0.0) throw std::invalid_argument("sigma_hat must be >= 0");
  if (sigma_hat == 0.0) {
    MeasurementVector b = clean;
    b.noise_sigma = 0.0;
    return b;
  }
  const double clean_norm = clean.values.norm();
  if (clean_norm == 0.0) {
    throw std::invalid_argument("cannot scale noise against zero measurements");
  }
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd xi(clean.values.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    const double re = gauss(rng);
    const double im = clean.is_complex ? gauss(rng) : 0.0;
    xi(i) = std::complex<double>(re, im);
  }
  const double xi_norm = xi.norm();
  if (xi_norm == 0.0) throw std::runtime_error("degenerate noise draw");
  const double sigma = sigma_hat * clean_norm / xi_norm;
  MeasurementVector b;
  b.values = clean.values + sigma * xi;
  b.is_complex = clean.is_complex;
  b.noise_sigma = sigma;
  return b;
}

// ---------------------------------------------------------------------------
// PMEAS1 serialization

void save_measurements(const std::string& path, const MeasurementVector& v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "PMEAS1\n" << v.values.size() << " " << (v.is_complex ? 1 : 0) << "\n";
  // (re, im) float64 pairs; this build targets little-endian hosts.
  out.write(reinterpret_cast<const char*>(v.values.data()),
            static_cast<std::streamsize>(sizeof(std::complex<double>) *
                                         v.values.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

MeasurementVector load_measurements(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != "PMEAS1") throw std::runtime_error(path + ": not a PMEAS1 file");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  long m = 0;
  int complex_flag = -1;
  hs >> m >> complex_flag;
  if (!hs || m < 1 || (complex_flag != 0 && complex_flag != 1)) {
    throw std::runtime_error(path + ": malformed PMEAS1 header");
  }
  MeasurementVector v;
  v.values.resize(m);
  v.is_complex = complex_flag == 1;
  in.read(reinterpret_cast<char*>(v.values.data()),
          static_cast<std::streamsize>(sizeof(std::complex<double>) * m));
  if (in.gcount() !=
      static_cast<std::streamsize>(sizeof(std::complex<double>) * m)) {
    throw std::runtime_error(path + ": truncated PMEAS1 payload");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Spectral norm

double spectral_norm(const AdjointPair& map, int max_iters, double tol,
                     std::uint64_t seed) {
  if (map.domain_dim < 1) throw std::invalid_argument("empty domain");
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x(map.domain_dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = gauss(rng);
  const double xn = x.norm();
  if (xn == 0.0) throw std::runtime_error("degenerate start vector");
  x /= xn;

  double estimate = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXcd y = map.forward(x);
    const double sigma = y.norm();  // ||A x|| for unit x
    if (sigma == 0.0) return 0.0;
    const Eigen::VectorXd z = map.adjoint(y);
    const double zn = z.norm();
    if (zn == 0.0) return sigma;
    x = z / zn;
    if (it > 0 && std::abs(sigma - estimate) <= tol * std::max(sigma, 1e-300)) {
      return sigma;
    }
    estimate = sigma;
  }
  return estimate;
}

}  // namespace patchrec
