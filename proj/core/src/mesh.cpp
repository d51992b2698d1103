#include "finsler/mesh.hpp"

#include <cmath>

#include "finsler/error.hpp"

namespace finsler {

double Mesh::total_mass() const {
  double m = 0.0;
  for (double w : cell_weight) m += w;
  return m;
}

void Mesh::finalize(const MeasureSpace& space) {
  const int nc = n_cells();
  cell_area.assign(nc, 0.0);
  cell_centroid.assign(nc, Vec::Zero(2));
  cell_weight.assign(nc, 0.0);
  grad_basis.assign(nc, {Vec::Zero(2), Vec::Zero(2), Vec::Zero(2)});
  node_dual_volume.assign(n_nodes(), 0.0);
  node_cells.assign(n_nodes(), {});
  for (int c = 0; c < nc; ++c)
    for (int k = 0; k < 3; ++k) node_cells[cells[c][k]].push_back(c);

  for (int c = 0; c < nc; ++c) {
    const Vec& p0 = nodes[cells[c][0]];
    const Vec& p1 = nodes[cells[c][1]];
    const Vec& p2 = nodes[cells[c][2]];
    const Vec e1 = p1 - p0, e2 = p2 - p0;
    const double det = e1[0] * e2[1] - e1[1] * e2[0];
    if (det <= 1e-14)
      throw DegenerateMesh("cell " + std::to_string(c) + " has non-positive area");
    cell_area[c] = 0.5 * det;
    cell_centroid[c] = (p0 + p1 + p2) / 3.0;

    Mat B(2, 2);
    B << e1[0], e2[0], e1[1], e2[1];
    const Mat Binv_t = B.inverse().transpose();
    grad_basis[c][1] = Binv_t.col(0);
    grad_basis[c][2] = Binv_t.col(1);
    grad_basis[c][0] = -grad_basis[c][1] - grad_basis[c][2];

    const Vec m01 = 0.5 * (p0 + p1), m12 = 0.5 * (p1 + p2), m20 = 0.5 * (p2 + p0);
    cell_weight[c] = cell_area[c] / 3.0 *
                     (space.weight(m01) + space.weight(m12) + space.weight(m20));
    for (int k = 0; k < 3; ++k) node_dual_volume[cells[c][k]] += cell_weight[c] / 3.0;
  }
}

Mesh Mesh::rectangle(const MeasureSpace& space, const Vec& lo, const Vec& hi, int nx, int ny) {
  Mesh m;
  const double hx = (hi[0] - lo[0]) / nx;
  const double hy = (hi[1] - lo[1]) / ny;
  auto grid_id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      m.nodes.push_back(vec2(lo[0] + i * hx, lo[1] + j * hy));
      m.boundary.push_back(i == 0 || j == 0 || i == nx || j == ny ? 1 : 0);
    }
  const int center0 = m.n_nodes();
  auto center_id = [&](int i, int j) { return center0 + j * nx + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.nodes.push_back(vec2(lo[0] + (i + 0.5) * hx, lo[1] + (j + 0.5) * hy));
      m.boundary.push_back(0);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int c = center_id(i, j);
      const int sw = grid_id(i, j), se = grid_id(i + 1, j);
      const int nw = grid_id(i, j + 1), ne = grid_id(i + 1, j + 1);
      m.cells.push_back({sw, se, c});
      m.cells.push_back({se, ne, c});
      m.cells.push_back({ne, nw, c});
      m.cells.push_back({nw, sw, c});
    }
  m.finalize(space);
  return m;
}

Mesh Mesh::disk(const MeasureSpace& space, const Vec& center,
                const std::vector<double>& ring_radii, int sectors) {
  Mesh m;
  const int nr = static_cast<int>(ring_radii.size());
  m.nodes.push_back(center);
  m.boundary.push_back(0);
  auto ring_id = [&](int ring, int j) { return 1 + ring * sectors + ((j % sectors + sectors) % sectors); };
  for (int ring = 0; ring < nr; ++ring)
    for (int j = 0; j < sectors; ++j) {
      const double th = 2.0 * M_PI * j / sectors;
      m.nodes.push_back(center + ring_radii[ring] * vec2(std::cos(th), std::sin(th)));
      m.boundary.push_back(ring == nr - 1 ? 1 : 0);
    }
  for (int j = 0; j < sectors; ++j) m.cells.push_back({0, ring_id(0, j), ring_id(0, j + 1)});
  for (int ring = 0; ring + 1 < nr; ++ring)
    for (int j = 0; j < sectors; ++j) {
      const int a = ring_id(ring, j), b = ring_id(ring, j + 1);
      const int c = ring_id(ring + 1, j), d = ring_id(ring + 1, j + 1);
      m.cells.push_back({a, c, d});
      m.cells.push_back({a, d, b});
    }
  m.finalize(space);
  return m;
}

Mesh Mesh::disk_uniform(const MeasureSpace& space, const Vec& center, double radius, int rings,
                        int sectors) {
  std::vector<double> rr(rings);
  for (int i = 0; i < rings; ++i) rr[i] = radius * (i + 1) / rings;
  return disk(space, center, rr, sectors);
}

Vec DiscreteFunction::cell_du(int cell) const {
  const auto& cn = mesh->cells[cell];
  Vec du = Vec::Zero(2);
  for (int k = 0; k < 3; ++k) du += values[cn[k]] * mesh->grad_basis[cell][k];
  return du;
}

std::vector<Vec> gradient_field(const MeasureSpace& space, const DiscreteFunction& u) {
  const Mesh& mesh = *u.mesh;
  std::vector<Vec> out(mesh.n_cells(), Vec::Zero(2));
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Vec du = u.cell_du(c);
    if (du.norm() == 0.0) continue;
    out[c] = space.metric.legendre_inverse(mesh.cell_centroid[c], du);
  }
  return out;
}

double weak_divergence_residual(const MeasureSpace& space, const Mesh& mesh,
                                const std::vector<Vec>& V_cells,
                                const std::vector<double>& divV_cells,
                                const DiscreteFunction& phi) {
  double acc = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Vec dphi = phi.cell_du(c);
    acc += mesh.cell_weight[c] * dphi.dot(V_cells[c]);

    const auto& cn = mesh.cells[c];
    const Vec& p0 = mesh.nodes[cn[0]];
    const Vec& p1 = mesh.nodes[cn[1]];
    const Vec& p2 = mesh.nodes[cn[2]];
    const Vec mids[3] = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
    const double phim[3] = {0.5 * (phi.values[cn[0]] + phi.values[cn[1]]),
                            0.5 * (phi.values[cn[1]] + phi.values[cn[2]]),
                            0.5 * (phi.values[cn[2]] + phi.values[cn[0]])};
    for (int q = 0; q < 3; ++q) {
      const double divm = divV_cells[c] + V_cells[c].dot(space.grad_log_density(mids[q]));
      acc += (mesh.cell_area[c] / 3.0) * space.weight(mids[q]) * phim[q] * divm;
    }
  }
  return acc;
}

}  // namespace finsler
