#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace patchrec {

// Grayscale raster, double precision, nominal pixel range [0, 255].
// Quantization to 8 bits happens only at PGM export.
struct Image {
  Eigen::MatrixXd pixels;

  Image() = default;
  explicit Image(Eigen::MatrixXd m) : pixels(std::move(m)) {}

  static Image zero(Eigen::Index rows, Eigen::Index cols) {
    return Image(Eigen::MatrixXd::Zero(rows, cols));
  }

  Eigen::Index rows() const { return pixels.rows(); }
  Eigen::Index cols() const { return pixels.cols(); }
};

// Throws std::invalid_argument on empty dims or non-finite pixels.
void validate_image(const Image& img);

// PGM readers for P2 (ASCII) and P5 (binary) with maxval <= 255; P5 writer.
// Export rounds half away from zero and clamps to [0, 255]. Parse errors
// report the byte offset of the offending data.
Image image_from_pgm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> image_to_pgm(const Image& img);

Image load_pgm(const std::string& path);
void save_pgm(const std::string& path, const Image& img);

}  // namespace patchrec
