#include "nrflow/grid.hpp"

#include <stdexcept>

namespace nrflow {

Grid::Grid(int nx, double Lx) : dim_(1), n_{nx, 1}, h_{Lx / nx, 1.0} {
  if (nx < 1 || !(Lx > 0.0)) throw std::invalid_argument("Grid: need nx >= 1 and Lx > 0");
  build();
}

Grid::Grid(int nx, int ny, double Lx, double Ly) : dim_(2), n_{nx, ny}, h_{Lx / nx, Ly / ny} {
  if (nx < 1 || ny < 1 || !(Lx > 0.0) || !(Ly > 0.0)) {
    throw std::invalid_argument("Grid: need positive cell counts and extents");
  }
  build();
}

std::array<double, 2> Grid::center(int c) const {
  const auto [i, j] = ij(c);
  return {(i + 0.5) * h_[0], dim_ == 2 ? (j + 0.5) * h_[1] : 0.0};
}

void Grid::build() {
  vol_ = dim_ == 1 ? h_[0] : h_[0] * h_[1];
  // Face area is the product of the transverse spacings (1 in 1D).
  const double area_x = dim_ == 1 ? 1.0 : h_[1];
  const double area_y = h_[0];
  faces_.clear();
  bfaces_.clear();
  cell_faces_.assign(static_cast<size_t>(num_cells()), {});
  for (int j = 0; j < n_[1]; ++j) {
    for (int i = 0; i < n_[0]; ++i) {
      const int c = index(i, j);
      if (i + 1 < n_[0]) faces_.push_back({c, index(i + 1, j), 0, area_x, h_[0]});
      if (dim_ == 2 && j + 1 < n_[1]) faces_.push_back({c, index(i, j + 1), 1, area_y, h_[1]});
      if (i == 0) bfaces_.push_back({c, 0, -1, area_x});
      if (i + 1 == n_[0]) bfaces_.push_back({c, 0, 1, area_x});
      if (dim_ == 2) {
        if (j == 0) bfaces_.push_back({c, 1, -1, area_y});
        if (j + 1 == n_[1]) bfaces_.push_back({c, 1, 1, area_y});
      }
    }
  }
  for (size_t f = 0; f < faces_.size(); ++f) {
    cell_faces_[static_cast<size_t>(faces_[f].left)].push_back(static_cast<int>(f));
    cell_faces_[static_cast<size_t>(faces_[f].right)].push_back(static_cast<int>(f));
  }
}

}  // namespace nrflow
