#include "finsler/solver.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <limits>

#include "finsler/error.hpp"

namespace finsler {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

constexpr double kTinyGrad = 1e-15;

struct CellEval {
  double energy = 0.0;
  bool has_grad = false;
  Vec y;  // grad u on the cell (Legendre-inverse of du)
};

CellEval eval_cell(const MeasureSpace& space, const Mesh& mesh, int c, const Vec& du) {
  CellEval out;
  if (du.norm() < kTinyGrad) return out;  // du = 0: zero energy, zero gradient
  const Vec& xc = mesh.cell_centroid[c];
  out.y = space.metric.legendre_inverse(xc, du);
  const double f = space.metric.norm(xc, out.y);  // F(grad u) = F*(du)
  out.energy = 0.5 * mesh.cell_weight[c] * f * f;
  out.has_grad = true;
  return out;
}

double energy_and_gradient(const MeasureSpace& space, const Mesh& mesh, const Vec& u, Vec& grad) {
  grad.setZero();
  double energy = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cn = mesh.cells[c];
    Vec du = Vec::Zero(2);
    for (int k = 0; k < 3; ++k) du += u[cn[k]] * mesh.grad_basis[c][k];
    const CellEval ce = eval_cell(space, mesh, c, du);
    energy += ce.energy;
    if (!ce.has_grad) continue;
    for (int k = 0; k < 3; ++k)
      grad[cn[k]] += mesh.cell_weight[c] * mesh.grad_basis[c][k].dot(ce.y);
  }
  return energy;
}

// Riemannian-part stiffness (the quadratic upper model of F*^2), used both
// as NCG preconditioner and as the initial linear solve.
SpMat assemble_quadratic_stiffness(const MeasureSpace& space, const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.n_cells() * 9);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Mat A = space.metric.a_field().eval(mesh.cell_centroid[c]);
    const Mat Ainv = A.inverse();
    const auto& cn = mesh.cells[c];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double v =
            mesh.cell_weight[c] * mesh.grad_basis[c][a].dot(Ainv * mesh.grad_basis[c][b]);
        trips.emplace_back(cn[a], cn[b], v);
      }
  }
  SpMat K(mesh.n_nodes(), mesh.n_nodes());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

// Frozen-coefficient Hessian with g*(du) per cell (falls back to the
// Riemannian part where du vanishes: F*^2 is not C^2 there).
SpMat assemble_frozen_hessian(const MeasureSpace& space, const Mesh& mesh, const Vec& u) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.n_cells() * 9);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cn = mesh.cells[c];
    Vec du = Vec::Zero(2);
    for (int k = 0; k < 3; ++k) du += u[cn[k]] * mesh.grad_basis[c][k];
    Mat G;
    if (du.norm() < kTinyGrad) {
      G = space.metric.a_field().eval(mesh.cell_centroid[c]).inverse();
    } else {
      G = space.metric.dual_tensor(mesh.cell_centroid[c], du);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double v = mesh.cell_weight[c] * mesh.grad_basis[c][a].dot(G * mesh.grad_basis[c][b]);
        trips.emplace_back(cn[a], cn[b], v);
      }
  }
  SpMat K(mesh.n_nodes(), mesh.n_nodes());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

SpMat restrict_interior(const SpMat& K, const std::vector<int>& interior,
                        const std::vector<int>& node_to_interior) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < K.outerSize(); ++col)
    for (SpMat::InnerIterator it(K, col); it; ++it) {
      const int i = node_to_interior[it.row()];
      const int j = node_to_interior[it.col()];
      if (i >= 0 && j >= 0) trips.emplace_back(i, j, it.value());
    }
  SpMat Ki(static_cast<int>(interior.size()), static_cast<int>(interior.size()));
  Ki.setFromTriplets(trips.begin(), trips.end());
  return Ki;
}

}  // namespace

double DirichletProblem::boundary_scale() const {
  double s = 0.0;
  for (int i = 0; i < mesh->n_nodes(); ++i)
    if (mesh->boundary[i]) s = std::max(s, std::abs(boundary_values[i]));
  return s;
}

double dirichlet_energy(const MeasureSpace& space, const DiscreteFunction& u) {
  const Mesh& mesh = *u.mesh;
  double energy = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c)
    energy += eval_cell(space, mesh, c, u.cell_du(c)).energy;
  return energy;
}

Vec energy_gradient(const MeasureSpace& space, const DiscreteFunction& u) {
  Vec grad = Vec::Zero(u.mesh->n_nodes());
  energy_and_gradient(space, *u.mesh, u.values, grad);
  return grad;
}

double weak_residual(const MeasureSpace& space, const DiscreteFunction& u) {
  const Vec grad = energy_gradient(space, u);
  double r = 0.0;
  for (int i = 0; i < u.mesh->n_nodes(); ++i)
    if (!u.mesh->boundary[i]) r = std::max(r, std::abs(grad[i]));
  return r;
}

DiscreteFunction solve_harmonic(const DirichletProblem& problem, const SolveOptions& opts,
                                SolveStats* stats) {
  const Mesh& mesh = *problem.mesh;
  const MeasureSpace& space = *problem.space;
  const int n = mesh.n_nodes();

  std::vector<int> interior;
  std::vector<int> node_to_interior(n, -1);
  for (int i = 0; i < n; ++i)
    if (!mesh.boundary[i]) {
      node_to_interior[i] = static_cast<int>(interior.size());
      interior.push_back(i);
    }
  if (interior.empty() || interior.size() == static_cast<std::size_t>(n))
    throw PreconditionFailed("Dirichlet problem needs both boundary and interior nodes");

  const double scale = 1.0 + problem.boundary_scale();
  const double res_tol = opts.residual_tol_factor * scale;
  const int ni = static_cast<int>(interior.size());

  Vec u = problem.boundary_values;
  for (int i : interior) u[i] = 0.0;

  // Linear solve with the quadratic model as the starting point; for
  // Euclidean/Riemannian metrics this is already the minimizer.
  const SpMat K = assemble_quadratic_stiffness(space, mesh);
  const SpMat Ki = restrict_interior(K, interior, node_to_interior);
  Eigen::SimplicialLDLT<SpMat> prec(Ki);
  if (prec.info() != Eigen::Success) throw DegenerateMesh("stiffness factorization failed");
  {
    const Vec Ku = K * u;
    Vec rhs(ni);
    for (int r = 0; r < ni; ++r) rhs[r] = -Ku[interior[r]];
    const Vec ui = prec.solve(rhs);
    for (int r = 0; r < ni; ++r) u[interior[r]] = ui[r];
  }

  Vec grad(n);
  double energy = energy_and_gradient(space, mesh, u, grad);
  auto interior_residual = [&](const Vec& g) {
    double r = 0.0;
    for (int i : interior) r = std::max(r, std::abs(g[i]));
    return r;
  };

  Vec gi(ni), pg(ni), dir(ni), gi_prev(ni);
  for (int r = 0; r < ni; ++r) gi[r] = grad[interior[r]];
  pg = prec.solve(gi);
  dir = -pg;

  int it = 0;
  int newton_steps = 0;
  double res = interior_residual(grad);
  double last_check_res = res;
  for (; it < opts.max_iterations && res > res_tol; ++it) {
    double slope = gi.dot(dir);
    if (slope >= 0.0) {
      dir = -pg;
      slope = gi.dot(dir);
    }
    // quadratic-model initial step
    Vec dir_full = Vec::Zero(n);
    for (int r = 0; r < ni; ++r) dir_full[interior[r]] = dir[r];
    const double dKd = dir.dot(Ki * dir);
    double s = dKd > 0 ? -slope / dKd : 1.0;
    if (!std::isfinite(s) || s <= 0) s = 1.0;

    Vec u_try = u;
    double e_try = energy;
    bool accepted = false;
    for (int bt = 0; bt < 50; ++bt) {
      u_try = u + s * dir_full;
      Vec grad_try(n);
      e_try = energy_and_gradient(space, mesh, u_try, grad_try);
      if (e_try <= energy + 1e-4 * s * slope) {
        u = u_try;
        energy = e_try;
        gi_prev = gi;
        grad = grad_try;
        for (int r = 0; r < ni; ++r) gi[r] = grad[interior[r]];
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      // Armijo stalled on the kink; take a damped Newton step with the
      // frozen g*-Hessian.
      const SpMat H = assemble_frozen_hessian(space, mesh, u);
      Eigen::SimplicialLDLT<SpMat> hess(restrict_interior(H, interior, node_to_interior));
      if (hess.info() != Eigen::Success) throw NoConvergence("frozen Hessian factorization failed");
      const Vec step = hess.solve(gi);
      double sn = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt) {
        Vec u_n = u;
        for (int r = 0; r < ni; ++r) u_n[interior[r]] -= sn * step[r];
        Vec grad_n(n);
        const double e_n = energy_and_gradient(space, mesh, u_n, grad_n);
        if (e_n < energy) {
          u = u_n;
          energy = e_n;
          gi_prev = gi;
          grad = grad_n;
          for (int r = 0; r < ni; ++r) gi[r] = grad[interior[r]];
          moved = true;
          ++newton_steps;
          break;
        }
        sn *= 0.5;
      }
      if (!moved) break;  // fully stalled; final residual checked below
    }

    res = interior_residual(grad);
    const Vec pg_new = prec.solve(gi);
    const double denom = gi_prev.dot(pg);
    const double beta = denom > 0 ? std::max(0.0, gi.dot(pg_new - pg) / denom) : 0.0;
    dir = -pg_new + beta * dir;
    pg = pg_new;

    // periodic progress check: switch to Newton polishing when NCG crawls
    if (it % 64 == 63) {
      if (res > 0.5 * last_check_res && res > res_tol) {
        const SpMat H = assemble_frozen_hessian(space, mesh, u);
        Eigen::SimplicialLDLT<SpMat> hess(restrict_interior(H, interior, node_to_interior));
        if (hess.info() == Eigen::Success) {
          const Vec step = hess.solve(gi);
          Vec u_n = u;
          for (int r = 0; r < ni; ++r) u_n[interior[r]] -= step[r];
          Vec grad_n(n);
          const double e_n = energy_and_gradient(space, mesh, u_n, grad_n);
          if (e_n <= energy) {
            u = u_n;
            energy = e_n;
            grad = grad_n;
            for (int r = 0; r < ni; ++r) gi[r] = grad[interior[r]];
            pg = prec.solve(gi);
            dir = -pg;
            res = interior_residual(grad);
            ++newton_steps;
          }
        }
      }
      last_check_res = res;
    }
  }

  if (stats) {
    stats->iterations = it;
    stats->residual = res;
    stats->energy = energy;
    stats->newton_steps = newton_steps;
  }
  if (res > res_tol)
    throw NoConvergence("harmonic solve: residual " + std::to_string(res) +
                        " above tolerance after " + std::to_string(it) + " iterations");
  return {mesh, u};
}

Vec hat_pairing(const MeasureSpace& space, const Mesh& mesh, const Vec& w) {
  Vec out = Vec::Zero(mesh.n_nodes());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cn = mesh.cells[c];
    const Vec& p0 = mesh.nodes[cn[0]];
    const Vec& p1 = mesh.nodes[cn[1]];
    const Vec& p2 = mesh.nodes[cn[2]];
    const Vec mids[3] = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
    const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    for (int q = 0; q < 3; ++q) {
      const double wm = 0.5 * (w[cn[pairs[q][0]]] + w[cn[pairs[q][1]]]);
      const double qw = (mesh.cell_area[c] / 3.0) * space.weight(mids[q]);
      // phi_i at an edge midpoint is 1/2 on the edge's endpoints, 0 opposite
      out[cn[pairs[q][0]]] += 0.5 * qw * wm;
      out[cn[pairs[q][1]]] += 0.5 * qw * wm;
    }
  }
  return out;
}

InequalityReport check_subsolution(const DirichletProblem& problem, const DiscreteFunction& u,
                                   const Vec& f, SolutionSense sense, double tol) {
  const Mesh& mesh = *problem.mesh;
  const MeasureSpace& space = *problem.space;
  const Vec lhs_all = energy_gradient(space, u);  // int dphi_i(grad u) dm
  const Vec rhs_all = hat_pairing(space, mesh, f.cwiseProduct(u.values));

  InequalityReport rep;
  rep.ineq_id = sense == SolutionSense::Subsolution ? "weak-subsolution" : "weak-supersolution";
  rep.space = space.name;
  rep.params["sense"] = sense == SolutionSense::Subsolution ? "subsolution" : "supersolution";
  rep.params["tol"] = tol;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (mesh.boundary[i]) continue;
    const double margin = sense == SolutionSense::Subsolution ? rhs_all[i] - lhs_all[i]
                                                              : lhs_all[i] + rhs_all[i];
    worst = std::min(worst, margin);
  }
  rep.lhs = -worst;
  rep.rhs = tol;
  rep.margin = worst + tol;
  rep.status =
      worst >= -tol ? InequalityReport::Status::Pass : InequalityReport::Status::Fail;
  rep.params["worst_margin"] = worst;
  return rep;
}

InequalityReport maximum_principle_check(const DirichletProblem& problem,
                                         const DiscreteFunction& u, double tol) {
  const Mesh& mesh = *problem.mesh;
  double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
  double imin = bmin, imax = -bmin;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (mesh.boundary[i]) {
      bmin = std::min(bmin, u.values[i]);
      bmax = std::max(bmax, u.values[i]);
    } else {
      imin = std::min(imin, u.values[i]);
      imax = std::max(imax, u.values[i]);
    }
  }
  const double scale = 1.0 + std::max(std::abs(bmin), std::abs(bmax));
  InequalityReport rep;
  rep.ineq_id = "maximum-principle";
  rep.space = problem.space->name;
  rep.params["interior_max"] = imax;
  rep.params["boundary_max"] = bmax;
  rep.params["interior_min"] = imin;
  rep.params["boundary_min"] = bmin;
  rep.lhs = std::max(imax - bmax, bmin - imin);
  rep.rhs = tol * scale;
  rep.margin = rep.rhs - rep.lhs;
  rep.status = rep.lhs <= rep.rhs ? InequalityReport::Status::Pass : InequalityReport::Status::Fail;
  return rep;
}

}  // namespace finsler
