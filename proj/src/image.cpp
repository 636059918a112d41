#include "patchrec/image.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace patchrec {

void validate_image(const Image& img) {
  if (img.rows() < 1 || img.cols() < 1) {
    throw std::invalid_argument("image must have at least one row and column");
  }
  if (!img.pixels.allFinite()) {
    throw std::invalid_argument("image contains non-finite pixel values");
  }
}

namespace {

[[noreturn]] void parse_fail(std::size_t offset, const std::string& what) {
  throw std::runtime_error("PGM parse error at byte " + std::to_string(offset) +
                           ": " + what);
}

bool is_pgm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

// Skips whitespace and '#' comments; leaves pos at the next token byte.
void skip_separators(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (is_pgm_space(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

long read_int(const std::vector<std::uint8_t>& b, std::size_t& pos,
              const char* what) {
  skip_separators(b, pos);
  if (pos >= b.size()) parse_fail(pos, std::string("missing ") + what);
  if (b[pos] < '0' || b[pos] > '9') {
    parse_fail(pos, std::string("expected digit while reading ") + what);
  }
  long value = 0;
  while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
    value = value * 10 + (b[pos] - '0');
    if (value > 1000000000L) parse_fail(pos, std::string(what) + " out of range");
    ++pos;
  }
  return value;
}

}  // namespace

Image image_from_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    parse_fail(0, "expected magic P2 or P5");
  }
  const bool binary = bytes[1] == '5';
  pos = 2;

  const long cols = read_int(bytes, pos, "width");
  const long rows = read_int(bytes, pos, "height");
  const long maxval = read_int(bytes, pos, "maxval");
  if (cols < 1 || rows < 1) parse_fail(pos, "width and height must be positive");
  if (maxval < 1) parse_fail(pos, "maxval must be positive");
  if (maxval > 255) parse_fail(pos, "maxval " + std::to_string(maxval) + " exceeds 255");

  Eigen::MatrixXd px(rows, cols);
  if (binary) {
    if (pos >= bytes.size() || !is_pgm_space(bytes[pos])) {
      parse_fail(pos, "expected single whitespace before raster data");
    }
    ++pos;
    const std::size_t need = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (bytes.size() - pos < need) {
      parse_fail(bytes.size(), "truncated raster, expected " + std::to_string(need) +
                                   " bytes after offset " + std::to_string(pos));
    }
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        const std::uint8_t v = bytes[pos++];
        if (v > maxval) parse_fail(pos - 1, "sample exceeds maxval");
        px(r, c) = static_cast<double>(v);
      }
    }
  } else {
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        const std::size_t at = pos;
        const long v = read_int(bytes, pos, "sample");
        if (v > maxval) parse_fail(at, "sample exceeds maxval");
        px(r, c) = static_cast<double>(v);
      }
    }
  }
  return Image(std::move(px));
}

std::vector<std::uint8_t> image_to_pgm(const Image& img) {
  validate_image(img);
  std::string header = "P5\n" + std::to_string(img.cols()) + " " +
                       std::to_string(img.rows()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(img.rows() * img.cols()));
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      double v = std::round(img.pixels(r, c));  // half away from zero
      if (v < 0.0) v = 0.0;
      if (v > 255.0) v = 255.0;
      out.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return out;
}

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return image_from_pgm(bytes);
}

void save_pgm(const std::string& path, const Image& img) {
  const std::vector<std::uint8_t> bytes = image_to_pgm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace patchrec
