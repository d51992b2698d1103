#pragma once

#include <array>
#include <vector>

#include "finsler/measure_space.hpp"

namespace finsler {

/// 2-D simplicial mesh with per-cell quadrature under dm = e^{Phi} dx.
/// Cell integrals use the 3-edge-midpoint rule (exact for quadratics under
/// constant weight); nodal dual volumes are the w_c/3 splits.
struct Mesh {
  std::vector<Vec> nodes;
  std::vector<std::array<int, 3>> cells;
  std::vector<char> boundary;  // per node

  std::vector<double> cell_area;       // Euclidean area
  std::vector<Vec> cell_centroid;
  std::vector<double> cell_weight;     // m(cell), midpoint rule
  std::vector<std::array<Vec, 3>> grad_basis;  // P1 basis gradients per cell
  std::vector<double> node_dual_volume;
  std::vector<std::vector<int>> node_cells;    // cells adjacent to each node

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  double total_mass() const;

  /// Crossed-triangle grid on [lo, hi]: grid nodes plus cell centers, four
  /// triangles per rectangle.
  static Mesh rectangle(const MeasureSpace& space, const Vec& lo, const Vec& hi, int nx, int ny);

  /// Polar disk mesh with explicit ring radii (model coordinates), a center
  /// fan and two triangles per quad between consecutive rings.
  static Mesh disk(const MeasureSpace& space, const Vec& center,
                   const std::vector<double>& ring_radii, int sectors);

  /// Uniform rings 0 < R/n <= ... <= R.
  static Mesh disk_uniform(const MeasureSpace& space, const Vec& center, double radius,
                           int rings, int sectors);

  /// Finish construction from raw nodes/cells/flags: areas, gradients,
  /// weights. Throws DegenerateMesh when a cell has area <= 0.
  void finalize(const MeasureSpace& space);
};

struct DiscreteFunction {
  const Mesh* mesh = nullptr;
  Vec values;

  DiscreteFunction() = default;
  DiscreteFunction(const Mesh& m, Vec v) : mesh(&m), values(std::move(v)) {}
  static DiscreteFunction zeros(const Mesh& m) { return {m, Vec::Zero(m.n_nodes())}; }

  /// Per-cell differential du (a covector) from the P1 interpolant.
  Vec cell_du(int cell) const;
};

/// Per-cell gradient field grad u = L^{-1}(du), evaluated at centroids;
/// cells with du = 0 return the zero vector.
std::vector<Vec> gradient_field(const MeasureSpace& space, const DiscreteFunction& u);

/// Summation-by-parts check: returns
///   int dphi(V) dm + int phi div_m V dm
/// with V and its coordinate divergence sampled per cell and
/// div_m V = div V + V . grad Phi evaluated at the quadrature points.
double weak_divergence_residual(const MeasureSpace& space, const Mesh& mesh,
                                const std::vector<Vec>& V_cells,
                                const std::vector<double>& divV_cells,
                                const DiscreteFunction& phi);

}  // namespace finsler
