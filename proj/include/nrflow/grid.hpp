#pragma once

#include <array>
#include <vector>

namespace nrflow {

/// Face between two cells; the normal points from `left` to `right`.
struct InteriorFace {
  int left = 0;
  int right = 0;
  int axis = 0;
  double area = 0.0;
  double dist = 0.0;  // distance between the two cell centres
};

/// Face on the domain boundary with outward normal sign along `axis`.
struct BoundaryFace {
  int cell = 0;
  int axis = 0;
  int sign = 1;
  double area = 0.0;
};

/// Uniform structured grid on [0,Lx] (x [0,Ly]) with cell-centred unknowns.
class Grid {
 public:
  Grid() = default;
  Grid(int nx, double Lx);
  Grid(int nx, int ny, double Lx, double Ly);

  int dim() const { return dim_; }
  int nx() const { return n_[0]; }
  int ny() const { return n_[1]; }
  int num_cells() const { return n_[0] * n_[1]; }
  double spacing(int axis) const { return h_[static_cast<size_t>(axis)]; }
  double extent(int axis) const { return n_[static_cast<size_t>(axis)] * h_[static_cast<size_t>(axis)]; }
  double cell_volume() const { return vol_; }
  double total_volume() const { return vol_ * num_cells(); }

  int index(int i, int j = 0) const { return i + n_[0] * j; }
  std::array<int, 2> ij(int c) const { return {c % n_[0], c / n_[0]}; }
  std::array<double, 2> center(int c) const;

  const std::vector<InteriorFace>& faces() const { return faces_; }
  const std::vector<BoundaryFace>& boundary_faces() const { return bfaces_; }

  /// Faces adjacent to each cell, as indices into faces().
  const std::vector<int>& cell_faces(int c) const { return cell_faces_[static_cast<size_t>(c)]; }

 private:
  void build();

  int dim_ = 1;
  std::array<int, 2> n_{1, 1};
  std::array<double, 2> h_{1.0, 1.0};
  double vol_ = 1.0;
  std::vector<InteriorFace> faces_;
  std::vector<BoundaryFace> bfaces_;
  std::vector<std::vector<int>> cell_faces_;
};

}  // namespace nrflow
