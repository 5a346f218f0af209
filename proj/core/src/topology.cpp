#include "meshmem/topology.hpp"

#include <algorithm>

#include "meshmem/errors.hpp"

namespace meshmem {

Workgroup::Workgroup(Coord origin, int rows, int cols,
                     std::vector<Coord> disabled)
    : origin_(origin), rows_(rows), cols_(cols), disabled_(std::move(disabled)) {
  if (rows_ < 1 || cols_ < 1) {
    throw TopologyError("workgroup extent must be at least 1x1");
  }
  if (origin_.row < 0 || origin_.col < 0 ||
      origin_.row + rows_ - 1 > kMaxCoord ||
      origin_.col + cols_ - 1 > kMaxCoord) {
    throw TopologyError("workgroup rectangle " + to_string(origin_) + "+" +
                        std::to_string(rows_) + "x" + std::to_string(cols_) +
                        " does not fit the 6-bit coordinate range");
  }

  std::sort(disabled_.begin(), disabled_.end());
  disabled_.erase(std::unique(disabled_.begin(), disabled_.end()),
                  disabled_.end());
  for (Coord c : disabled_) {
    if (!in_rect(c)) {
      throw TopologyError("disabled core " + to_string(c) +
                          " lies outside the workgroup rectangle");
    }
  }

  coord_to_rank_.assign(static_cast<std::size_t>(rows_) * cols_, -1);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      Coord coord{origin_.row + r, origin_.col + c};
      if (std::binary_search(disabled_.begin(), disabled_.end(), coord)) {
        continue;
      }
      coord_to_rank_[rect_index(coord)] = static_cast<int>(rank_to_coord_.size());
      rank_to_coord_.push_back(coord);
    }
  }
  if (rank_to_coord_.empty()) {
    throw TopologyError("disabled set covers every core of the workgroup");
  }
}

Coord Workgroup::coord_of_pe(int pe) const {
  if (pe < 0 || pe >= n_pes()) {
    throw TopologyError("PE rank " + std::to_string(pe) +
                        " out of range [0," + std::to_string(n_pes()) + ")");
  }
  return rank_to_coord_[static_cast<std::size_t>(pe)];
}

int Workgroup::pe_of_coord(Coord c) const {
  if (!in_rect(c)) {
    throw TopologyError("coordinate " + to_string(c) +
                        " outside the workgroup rectangle");
  }
  int rank = coord_to_rank_[rect_index(c)];
  if (rank < 0) {
    throw TopologyError("coordinate " + to_string(c) + " is disabled");
  }
  return rank;
}

bool Workgroup::in_rect(Coord c) const {
  return c.row >= origin_.row && c.row < origin_.row + rows_ &&
         c.col >= origin_.col && c.col < origin_.col + cols_;
}

bool Workgroup::is_live(Coord c) const {
  return in_rect(c) && coord_to_rank_[rect_index(c)] >= 0;
}

void validate_workgroup(const Workgroup& wg, const Workgroup& machine_grid) {
  if (!machine_grid.in_rect(wg.origin()) ||
      !machine_grid.in_rect(Coord{wg.origin().row + wg.rows() - 1,
                                  wg.origin().col + wg.cols() - 1})) {
    throw TopologyError("workgroup rectangle extends outside the machine grid");
  }
  for (Coord c : machine_grid.disabled()) {
    if (wg.in_rect(c) && wg.is_live(c)) {
      throw TopologyError("machine-disabled core " + to_string(c) +
                          " is not excluded by the workgroup");
    }
  }
}

}  // namespace meshmem
