#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "patchrec/image.hpp"

namespace patchrec {

// One tile of a partition; row_start/col_start are 0-based pixel offsets.
struct Cell {
  int row_start = 0;
  int col_start = 0;
  int rows = 0;
  int cols = 0;

  bool operator==(const Cell&) const = default;
};

// Non-overlapping covering tiling of an N1 x N2 image by patches no larger
// than n1 x n2, all vertically and horizontally aligned. The tiling is
// uniquely determined by the size (r0, c0) of the upper-left corner patch:
// the first row of cells has height r0, the following rows height n1, and
// the last row keeps whatever the border leaves; columns likewise.
struct Partition {
  int image_rows = 0;    // N1
  int image_cols = 0;    // N2
  int patch_rows = 0;    // n1
  int patch_cols = 0;    // n2
  int corner_rows = 0;   // r0
  int corner_cols = 0;   // c0
  std::vector<Cell> cells;  // row-major by (row_start, col_start)

  int num_cells() const { return static_cast<int>(cells.size()); }
};

Partition build_partition(int image_rows, int image_cols, int patch_rows,
                          int patch_cols, int corner_rows, int corner_cols);

// All distinct partitions over (r0, c0) in [1, n1] x [1, n2]; size <= n1*n2.
std::vector<Partition> enumerate_partitions(int image_rows, int image_cols,
                                            int patch_rows, int patch_cols);

// A patch lifted to the full n1*n2 frame, column-major vectorization.
// Cells smaller than the frame sit against the image borders they touch:
// the leading (top/left) cells align top/left inside the frame, cells
// truncated by the bottom/right border align bottom/right; the rest of the
// frame is zero.
using PatchFrame = Eigen::VectorXd;

// Frame offsets (row_offset, col_offset) of a cell's sub-block.
std::pair<int, int> frame_offsets(const Partition& p, const Cell& cell);

PatchFrame extract_patch(const Image& img, const Partition& p, int cell_index);

// Adjoint of extract_patch: adds the cell-supported sub-block of the frame
// into the accumulator at the cell's pixel locations. Frame entries outside
// that sub-block are ignored.
void embed_patch(const PatchFrame& frame, const Partition& p, int cell_index,
                 Image& accumulator);

}  // namespace patchrec
