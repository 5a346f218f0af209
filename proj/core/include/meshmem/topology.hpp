#pragma once

#include <cstdint>
#include <vector>

#include "meshmem/types.hpp"

namespace meshmem {

/// Rectangular region of the chip minus a set of disabled cores, with the
/// bijection between 1D virtual PE ranks and 2D physical coordinates.
/// Ranks enumerate live cores in row-major order over the rectangle. Both
/// directions of the mapping are table lookups built at construction.
/// Immutable after construction and freely shareable.
class Workgroup {
 public:
  /// Throws TopologyError when the rectangle overflows the 6-bit coordinate
  /// range, a disabled coordinate lies outside the rectangle, or no live
  /// core remains.
  Workgroup(Coord origin, int rows, int cols,
            std::vector<Coord> disabled = {});

  Coord origin() const { return origin_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int n_pes() const { return static_cast<int>(rank_to_coord_.size()); }
  const std::vector<Coord>& disabled() const { return disabled_; }
  const std::vector<Coord>& live_coords() const { return rank_to_coord_; }

  /// The (pe+1)-th live core in row-major order. Throws TopologyError for
  /// ranks outside [0, n_pes).
  Coord coord_of_pe(int pe) const;

  /// Inverse of coord_of_pe. Throws TopologyError when the coordinate is
  /// disabled or outside the rectangle.
  int pe_of_coord(Coord c) const;

  bool in_rect(Coord c) const;
  bool is_live(Coord c) const;

 private:
  int rect_index(Coord c) const {
    return (c.row - origin_.row) * cols_ + (c.col - origin_.col);
  }

  Coord origin_;
  int rows_;
  int cols_;
  std::vector<Coord> disabled_;
  std::vector<Coord> rank_to_coord_;
  std::vector<int> coord_to_rank_;  // rect-indexed, -1 for disabled
};

/// Confirms the workgroup rectangle lies inside the machine grid and that
/// every machine-disabled core inside the rectangle is also excluded by the
/// workgroup. Throws TopologyError otherwise.
void validate_workgroup(const Workgroup& wg, const Workgroup& machine_grid);

}  // namespace meshmem
