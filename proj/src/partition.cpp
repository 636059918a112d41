#include "patchrec/partition.hpp"

#include <stdexcept>
#include <string>

namespace patchrec {

namespace {

// Segment lengths along one axis: leading cell of size `corner`, interior
// cells of size `patch`, trailing cell truncated by the border.
std::vector<int> axis_segments(int extent, int patch, int corner) {
  std::vector<int> seg;
  seg.push_back(corner);
  int covered = corner;
  while (covered < extent) {
    const int len = std::min(patch, extent - covered);
    seg.push_back(len);
    covered += len;
  }
  return seg;
}

}  // namespace

Partition build_partition(int image_rows, int image_cols, int patch_rows,
                          int patch_cols, int corner_rows, int corner_cols) {
  if (patch_rows < 1 || patch_cols < 1 || patch_rows > image_rows ||
      patch_cols > image_cols) {
    throw std::invalid_argument("patch size must satisfy 1 <= n <= image extent");
  }
  if (corner_rows < 1 || corner_rows > patch_rows || corner_cols < 1 ||
      corner_cols > patch_cols) {
    throw std::invalid_argument("corner patch size must lie in [1, patch size]");
  }

  Partition p;
  p.image_rows = image_rows;
  p.image_cols = image_cols;
  p.patch_rows = patch_rows;
  p.patch_cols = patch_cols;
  p.corner_rows = corner_rows;
  p.corner_cols = corner_cols;

  const std::vector<int> row_seg = axis_segments(image_rows, patch_rows, corner_rows);
  const std::vector<int> col_seg = axis_segments(image_cols, patch_cols, corner_cols);
  p.cells.reserve(row_seg.size() * col_seg.size());
  int r = 0;
  for (int h : row_seg) {
    int c = 0;
    for (int w : col_seg) {
      p.cells.push_back(Cell{r, c, h, w});
      c += w;
    }
    r += h;
  }
  return p;
}

std::vector<Partition> enumerate_partitions(int image_rows, int image_cols,
                                            int patch_rows, int patch_cols) {
  std::vector<Partition> out;
  for (int r0 = 1; r0 <= patch_rows; ++r0) {
    for (int c0 = 1; c0 <= patch_cols; ++c0) {
      Partition p = build_partition(image_rows, image_cols, patch_rows,
                                    patch_cols, r0, c0);
      bool duplicate = false;
      for (const Partition& q : out) {
        if (q.cells == p.cells) {
          duplicate = true;
          break;
        }
      }
      if (!duplicate) out.push_back(std::move(p));
    }
  }
  return out;
}

std::pair<int, int> frame_offsets(const Partition& p, const Cell& cell) {
  // Leading cells keep offset 0 (top/left aligned); truncated trailing cells
  // are pushed against the opposite frame edge. Full-size cells get 0 either
  // way.
  const int roff = cell.row_start == 0 ? 0 : p.patch_rows - cell.rows;
  const int coff = cell.col_start == 0 ? 0 : p.patch_cols - cell.cols;
  return {roff, coff};
}

PatchFrame extract_patch(const Image& img, const Partition& p, int cell_index) {
  if (img.rows() != p.image_rows || img.cols() != p.image_cols) {
    throw std::invalid_argument("image dims do not match partition");
  }
  if (cell_index < 0 || cell_index >= p.num_cells()) {
    throw std::invalid_argument("cell index out of range: " +
                                std::to_string(cell_index));
  }
  const Cell& cell = p.cells[cell_index];
  const auto [roff, coff] = frame_offsets(p, cell);

  Eigen::MatrixXd frame = Eigen::MatrixXd::Zero(p.patch_rows, p.patch_cols);
  frame.block(roff, coff, cell.rows, cell.cols) =
      img.pixels.block(cell.row_start, cell.col_start, cell.rows, cell.cols);
  return Eigen::Map<const PatchFrame>(frame.data(), frame.size());
}

void embed_patch(const PatchFrame& frame, const Partition& p, int cell_index,
                 Image& accumulator) {
  if (frame.size() != static_cast<Eigen::Index>(p.patch_rows) * p.patch_cols) {
    throw std::invalid_argument("frame length does not match patch size");
  }
  if (accumulator.rows() != p.image_rows || accumulator.cols() != p.image_cols) {
    throw std::invalid_argument("accumulator dims do not match partition");
  }
  if (cell_index < 0 || cell_index >= p.num_cells()) {
    throw std::invalid_argument("cell index out of range: " +
                                std::to_string(cell_index));
  }
  const Cell& cell = p.cells[cell_index];
  const auto [roff, coff] = frame_offsets(p, cell);

  Eigen::Map<const Eigen::MatrixXd> fm(frame.data(), p.patch_rows, p.patch_cols);
  accumulator.pixels.block(cell.row_start, cell.col_start, cell.rows, cell.cols) +=
      fm.block(roff, coff, cell.rows, cell.cols);
}

}  // namespace patchrec
