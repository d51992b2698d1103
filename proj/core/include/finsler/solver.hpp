#pragma once

#include <optional>

#include "finsler/mesh.hpp"
#include "finsler/report.hpp"

namespace finsler {

/// Dirichlet data for the weak Finsler Laplacian on a mesh. The optional
/// nodal source f (bounded, nonnegative) feeds the subsolution checks.
struct DirichletProblem {
  const MeasureSpace* space = nullptr;
  const Mesh* mesh = nullptr;
  Vec boundary_values;  // full-length nodal vector; only boundary entries used
  std::optional<Vec> source_f;

  double boundary_scale() const;
};

struct SolveOptions {
  double residual_tol_factor = 1e-11;  // times (1 + boundary scale)
  int max_iterations = 100000;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
  double energy = 0.0;
  int newton_steps = 0;
};

/// Dirichlet energy 1/2 int F*^2(du) dm over the mesh cells.
double dirichlet_energy(const MeasureSpace& space, const DiscreteFunction& u);

/// Nodal gradient of the energy; entry i equals int dphi_i(grad u) dm, the
/// weak-Laplacian pairing with the hat function at node i.
Vec energy_gradient(const MeasureSpace& space, const DiscreteFunction& u);

/// Minimize the Dirichlet energy over interior nodes: preconditioned
/// nonlinear CG with Armijo backtracking, periodic damped-Newton fallback
/// with the frozen g*-Hessian. Throws NoConvergence at the iteration cap.
DiscreteFunction solve_harmonic(const DirichletProblem& problem, const SolveOptions& opts = {},
                                SolveStats* stats = nullptr);

/// max over interior hat functions phi of |int dphi(grad u) dm|.
double weak_residual(const MeasureSpace& space, const DiscreteFunction& u);

/// (int phi_i w dm)_i for the P1 interpolant of the nodal field w.
Vec hat_pairing(const MeasureSpace& space, const Mesh& mesh, const Vec& w);

enum class SolutionSense { Subsolution, Supersolution };

/// Verifies int dphi(grad u) dm <= int phi f u dm for every interior hat
/// (Supersolution flips the orientation). Reports the worst margin.
InequalityReport check_subsolution(const DirichletProblem& problem, const DiscreteFunction& u,
                                   const Vec& f, SolutionSense sense = SolutionSense::Subsolution,
                                   double tol = 1e-8);

/// Discrete maximum principle: interior range within boundary range.
InequalityReport maximum_principle_check(const DirichletProblem& problem,
                                         const DiscreteFunction& u, double tol = 1e-8);

}  // namespace finsler
