#include "finsler/inequalities.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "finsler/error.hpp"

namespace finsler {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

double certified_k(const MeasureSpace& space) {
  if (!space.certified.distortion_bound)
    throw PreconditionFailed("space lacks a certified distortion bound k");
  return *space.certified.distortion_bound;
}

double shape_sqrtK(const MeasureSpace& space) {
  return std::sqrt(std::abs(space.certified.ric_inf_lower));
}

}  // namespace

double HarnessParams::resolved_nu(const MeasureSpace& space) const {
  if (nu > 0.0) return nu;
  return 4.0 * (space.dim() + 4.0 * certified_k(space)) - 2.0;
}

BallContext::BallContext(const MeasureSpace& space, const Mesh& mesh, Vec x0,
                         const DistanceOptions& dist_opts)
    : space_(&space), mesh_(&mesh), x0_(std::move(x0)) {
  const auto dists = distance_batch(space, x0_, mesh.nodes, dist_opts);
  node_dist_ = Vec::Zero(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) node_dist_[i] = dists[i];
  cell_dist_.resize(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cn = mesh.cells[c];
    cell_dist_[c] = (node_dist_[cn[0]] + node_dist_[cn[1]] + node_dist_[cn[2]]) / 3.0;
  }
  uniformity_ = uniformity_constants(space.metric, SampleRegion{x0_, 0.0, 1});
}

double BallContext::ball_mass(double rho) const {
  double m = 0.0;
  for (int c = 0; c < mesh_->n_cells(); ++c)
    if (cell_in(c, rho)) m += mesh_->cell_weight[c];
  return m;
}

double BallContext::integrate(const Vec& nodal, double rho,
                              const std::function<double(double)>& fn) const {
  double acc = 0.0;
  for (int c = 0; c < mesh_->n_cells(); ++c) {
    if (!cell_in(c, rho)) continue;
    const auto& cn = mesh_->cells[c];
    const Vec& p0 = mesh_->nodes[cn[0]];
    const Vec& p1 = mesh_->nodes[cn[1]];
    const Vec& p2 = mesh_->nodes[cn[2]];
    const Vec mids[3] = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
    const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    for (int q = 0; q < 3; ++q) {
      const double vm = 0.5 * (nodal[cn[pairs[q][0]]] + nodal[cn[pairs[q][1]]]);
      acc += (mesh_->cell_area[c] / 3.0) * space_->weight(mids[q]) * fn(vm);
    }
  }
  return acc;
}

double BallContext::integrate_pow(const Vec& nodal, double p, double rho) const {
  return integrate(nodal, rho, [p](double v) { return std::pow(std::abs(v), p); });
}

double BallContext::energy(const Vec& nodal, double rho) const {
  double acc = 0.0;
  for (int c = 0; c < mesh_->n_cells(); ++c) {
    if (!cell_in(c, rho)) continue;
    Vec du = Vec::Zero(2);
    for (int k = 0; k < 3; ++k) du += nodal[mesh_->cells[c][k]] * mesh_->grad_basis[c][k];
    if (du.norm() < 1e-15) continue;
    const double fs = space_->metric.dual_norm(mesh_->cell_centroid[c], du);
    acc += mesh_->cell_weight[c] * fs * fs;
  }
  return acc;
}

double BallContext::sup(const Vec& nodal, double rho) const {
  double s = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh_->n_nodes(); ++i)
    if (node_in(i, rho)) s = std::max(s, nodal[i]);
  return s;
}

double BallContext::inf(const Vec& nodal, double rho) const {
  double s = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh_->n_nodes(); ++i)
    if (node_in(i, rho)) s = std::min(s, nodal[i]);
  return s;
}

double BallContext::level_set_mass(const Vec& nodal, double vbar, double t, double rho) const {
  double m = 0.0;
  for (int i = 0; i < mesh_->n_nodes(); ++i)
    if (node_in(i, rho) && std::abs(nodal[i] - vbar) >= t) m += mesh_->node_dual_volume[i];
  return m;
}

double BallContext::ball_average(const Vec& nodal, double rho) const {
  const double m = ball_mass(rho);
  const double s = integrate(nodal, rho, [](double v) { return v; });
  return s / m;
}

Vec BallContext::cutoff(double delta, double delta_prime, double R) const {
  Vec phi = Vec::Zero(mesh_->n_nodes());
  const double width = (delta_prime - delta) * R;
  for (int i = 0; i < mesh_->n_nodes(); ++i)
    phi[i] = std::clamp((delta_prime * R - node_dist_[i]) / width, 0.0, 1.0);
  return phi;
}

const std::vector<Vec>& BallContext::trial_family(double R, std::uint64_t seed) const {
  if (!family_.empty() && family_R_ == R && family_seed_ == seed) return family_;
  family_.clear();
  family_R_ = R;
  family_seed_ = seed;
  const int n = mesh_->n_nodes();

  // 8 hats at ring centers
  for (int i = 0; i < 8; ++i) {
    const double th = 2.0 * M_PI * i / 8;
    const Vec target = x0_ + 0.5 * R * vec2(std::cos(th), std::sin(th));
    int best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double d = (mesh_->nodes[j] - target).norm();
      if (d < bestd) {
        bestd = d;
        best = j;
      }
    }
    Vec u = Vec::Zero(n);
    u[best] = 1.0;
    family_.push_back(u);
  }
  // 4 cones in the forward distance
  for (double q : {0.5, 1.0, 2.0, 3.0}) {
    Vec u = Vec::Zero(n);
    for (int i = 0; i < n; ++i) u[i] = std::pow(std::max(0.0, 1.0 - node_dist_[i] / R), q);
    family_.push_back(u);
  }
  // 2 plateaus
  family_.push_back(cutoff(0.5, 0.75, R));
  family_.push_back(cutoff(0.25, 1.0, R));
  // 4 harmonic solver outputs on the full mesh
  {
    const double Rm = node_dist_.maxCoeff();
    std::vector<std::function<double(const Vec&)>> profiles = {
        [&](const Vec& x) { return 2.0 + (x[0] - x0_[0]); },
        [&](const Vec& x) { return 2.0 + (x[1] - x0_[1]); },
        [&](const Vec& x) { return 1.0 + 0.5 * std::sin(M_PI * (x[0] - x0_[0]) / Rm); },
        [&](const Vec& x) { return 1.0 + 0.5 * std::sin(M_PI * (x[1] - x0_[1]) / Rm); }};
    for (const auto& g : profiles) {
      DirichletProblem prob;
      prob.space = space_;
      prob.mesh = mesh_;
      prob.boundary_values = Vec::Zero(n);
      for (int i = 0; i < n; ++i)
        if (mesh_->boundary[i]) prob.boundary_values[i] = g(mesh_->nodes[i]);
      family_.push_back(solve_harmonic(prob).values);
    }
  }
  // 22 seeded bumps
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (family_.size() < 40) {
    const double r = R * std::sqrt(unif(rng));
    const double th = 2.0 * M_PI * unif(rng);
    const double w = R * (0.15 + 0.35 * unif(rng));
    const Vec c = x0_ + r * vec2(std::cos(th), std::sin(th));
    Vec u = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
      u[i] = std::exp(-(mesh_->nodes[i] - c).squaredNorm() / (2.0 * w * w));
    family_.push_back(u);
  }
  return family_;
}

namespace {

// ---- Poincare machinery -------------------------------------------------

double poincare_quotient_value(const BallContext& ctx, const Vec& u, double R) {
  const double ubar = ctx.ball_average(u, R);
  const double num = ctx.integrate(u, R, [ubar](double v) { return (v - ubar) * (v - ubar); });
  const double den = ctx.energy(u, R);
  if (den < 1e-14 * (1.0 + num)) return -1.0;  // constants are excluded (0/0)
  return num / den;
}

struct BallSystem {
  std::vector<int> nodes;  // global ids
  std::vector<int> global_to_local;
  SpMat K;  // Riemannian-part stiffness
  SpMat M;  // P1 mass under dm
};

BallSystem assemble_ball_system(const BallContext& ctx, double R) {
  const Mesh& mesh = ctx.mesh();
  const MeasureSpace& space = ctx.space();
  BallSystem sys;
  sys.global_to_local.assign(mesh.n_nodes(), -1);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (!ctx.cell_in(c, R)) continue;
    for (int k = 0; k < 3; ++k) {
      const int g = mesh.cells[c][k];
      if (sys.global_to_local[g] < 0) {
        sys.global_to_local[g] = static_cast<int>(sys.nodes.size());
        sys.nodes.push_back(g);
      }
    }
  }
  const int nl = static_cast<int>(sys.nodes.size());
  std::vector<Eigen::Triplet<double>> kt, mt;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (!ctx.cell_in(c, R)) continue;
    const auto& cn = mesh.cells[c];
    const Mat A = space.metric.a_field().eval(mesh.cell_centroid[c]);
    const Mat Ainv = A.inverse();
    const Vec& p0 = mesh.nodes[cn[0]];
    const Vec& p1 = mesh.nodes[cn[1]];
    const Vec& p2 = mesh.nodes[cn[2]];
    const Vec mids[3] = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
    const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double kv =
            mesh.cell_weight[c] * mesh.grad_basis[c][a].dot(Ainv * mesh.grad_basis[c][b]);
        kt.emplace_back(sys.global_to_local[cn[a]], sys.global_to_local[cn[b]], kv);
      }
    for (int q = 0; q < 3; ++q) {
      const double qw = (mesh.cell_area[c] / 3.0) * space.weight(mids[q]);
      const int i = sys.global_to_local[cn[pairs[q][0]]];
      const int j = sys.global_to_local[cn[pairs[q][1]]];
      mt.emplace_back(i, i, 0.25 * qw);
      mt.emplace_back(j, j, 0.25 * qw);
      mt.emplace_back(i, j, 0.25 * qw);
      mt.emplace_back(j, i, 0.25 * qw);
    }
  }
  sys.K.resize(nl, nl);
  sys.M.resize(nl, nl);
  sys.K.setFromTriplets(kt.begin(), kt.end());
  sys.M.setFromTriplets(mt.begin(), mt.end());
  return sys;
}

// Smallest nonzero Neumann eigenpair of K u = lambda M u by shifted inverse
// iteration with constant deflation.
Vec neumann_eigenvector(const BallSystem& sys, double& lambda_out) {
  const int nl = static_cast<int>(sys.nodes.size());
  const Vec ones = Vec::Ones(nl);
  const double m_total = ones.dot(sys.M * ones);
  double trace = 0.0;
  for (int i = 0; i < nl; ++i) trace += sys.K.coeff(i, i);
  const double sigma = 1e-8 * trace / nl;
  SpMat shifted = sys.K;
  shifted += SpMat((sigma * sys.M).pruned());
  Eigen::SimplicialLDLT<SpMat> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw DegenerateMesh("ball stiffness factorization failed in the eigen solve");

  Vec q = Vec::Zero(nl);
  for (int i = 0; i < nl; ++i) q[i] = std::sin(1.0 + 0.7 * i);  // fixed start
  auto deflate = [&](Vec& v) { v -= (ones.dot(sys.M * v) / m_total) * ones; };
  deflate(q);
  q /= std::sqrt(q.dot(sys.M * q));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vec z = solver.solve(sys.M * q);
    deflate(z);
    const double nz = std::sqrt(z.dot(sys.M * z));
    if (nz <= 0) break;
    z /= nz;
    const double lam = z.dot(sys.K * z);
    if (it > 4 && std::abs(lam - lambda) <= 1e-12 * std::max(1.0, lam)) {
      lambda = lam;
      q = z;
      break;
    }
    lambda = lam;
    q = z;
  }
  lambda_out = lambda;
  return q;
}

// Gradient ascent on the true-quotient log under Armijo; u is a full-mesh
// nodal vector, only ball nodes move.
Vec ascend_quotient(const BallContext& ctx, const BallSystem& sys, Vec u, double R, int iters) {
  const Mesh& mesh = ctx.mesh();
  const MeasureSpace& space = ctx.space();
  auto quotient = [&](const Vec& v) { return poincare_quotient_value(ctx, v, R); };
  double q0 = quotient(u);
  if (q0 <= 0) return u;
  double step = 1.0;
  for (int it = 0; it < iters; ++it) {
    const double ubar = ctx.ball_average(u, R);
    Vec ul(static_cast<int>(sys.nodes.size()));
    for (std::size_t l = 0; l < sys.nodes.size(); ++l)
      ul[static_cast<int>(l)] = u[sys.nodes[l]] - ubar;
    const Vec gN_local = 2.0 * (sys.M * ul);
    const double num = ul.dot(sys.M * ul);
    Vec gD = Vec::Zero(mesh.n_nodes());
    double den = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      if (!ctx.cell_in(c, R)) continue;
      Vec du = Vec::Zero(2);
      for (int k = 0; k < 3; ++k) du += u[mesh.cells[c][k]] * mesh.grad_basis[c][k];
      if (du.norm() < 1e-15) continue;
      const Vec y = space.metric.legendre_inverse(mesh.cell_centroid[c], du);
      const double f = space.metric.norm(mesh.cell_centroid[c], y);
      den += mesh.cell_weight[c] * f * f;
      for (int k = 0; k < 3; ++k)
        gD[mesh.cells[c][k]] += 2.0 * mesh.cell_weight[c] * mesh.grad_basis[c][k].dot(y);
    }
    if (num <= 0 || den <= 0) break;
    Vec dir = Vec::Zero(mesh.n_nodes());
    double gnorm2 = 0.0;
    for (std::size_t l = 0; l < sys.nodes.size(); ++l) {
      const int g = sys.nodes[l];
      const double d = gN_local[static_cast<int>(l)] / num - gD[g] / den;
      dir[g] = d;
      gnorm2 += d * d;
    }
    if (gnorm2 < 1e-24) break;
    bool moved = false;
    for (int bt = 0; bt < 25; ++bt) {
      const Vec cand = u + step * dir;
      const double qc = quotient(cand);
      if (qc > q0 * (1.0 + 1e-14)) {
        u = cand;
        q0 = qc;
        step *= 1.6;
        moved = true;
        break;
      }
      step *= 0.4;
    }
    if (!moved) break;
  }
  return u;
}

void require_nonneg_on_ball(const BallContext& ctx, const Vec& u, double R) {
  for (int i = 0; i < ctx.mesh().n_nodes(); ++i)
    if (ctx.node_in(i, R) && u[i] < 0)
      throw PreconditionFailed("nodal values must be nonnegative on the ball");
}

// Weak subsolution margins restricted to hats supported inside B_R.
void require_subsolution_on_ball(const BallContext& ctx, const DiscreteFunction& u, const Vec& f,
                                 double R, SolutionSense sense, double tol) {
  const Mesh& mesh = ctx.mesh();
  const Vec lhs = energy_gradient(ctx.space(), u);
  const Vec rhs = hat_pairing(ctx.space(), mesh, f.cwiseProduct(u.values));
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (mesh.boundary[i]) continue;
    bool supported = true;
    for (int c : mesh.node_cells[i])
      if (!ctx.cell_in(c, R)) {
        supported = false;
        break;
      }
    if (!supported) continue;
    const double margin =
        sense == SolutionSense::Subsolution ? rhs[i] - lhs[i] : lhs[i] + rhs[i];
    if (margin < -tol)
      throw PreconditionFailed(
          "weak " + std::string(sense == SolutionSense::Subsolution ? "sub" : "super") +
          "solution check failed at a ball node (margin " + std::to_string(margin) + ")");
  }
}

}  // namespace

InequalityReport poincare_quotient(const BallContext& ctx, const HarnessParams& prm) {
  const double R = prm.R;
  InequalityReport rep;
  rep.ineq_id = "poincare-quotient";
  rep.space = ctx.space().name;

  const auto& family = ctx.trial_family(R, prm.seed);
  double best = 0.0;
  int excluded = 0, best_idx = -1;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double q = poincare_quotient_value(ctx, family[i], R);
    if (q < 0) {
      ++excluded;
      continue;
    }
    if (q > best) {
      best = q;
      best_idx = static_cast<int>(i);
    }
  }

  const BallSystem sys = assemble_ball_system(ctx, R);
  double lambda1 = 0.0;
  const Vec eig_local = neumann_eigenvector(sys, lambda1);
  Vec eig = Vec::Zero(ctx.mesh().n_nodes());
  for (std::size_t l = 0; l < sys.nodes.size(); ++l)
    eig[sys.nodes[l]] = eig_local[static_cast<int>(l)];
  eig = ascend_quotient(ctx, sys, eig, R, 60);
  const double q_eig = poincare_quotient_value(ctx, eig, R);
  if (q_eig > best) {
    best = q_eig;
    best_idx = -2;
  }

  rep.lhs = best;            // measured quotient
  rep.rhs = best / (R * R);  // shape constant of c1 e^{c2 sqrt|K| R} R^2
  rep.margin = 0.0;
  rep.status = InequalityReport::Status::Measured;
  rep.params["R"] = R;
  rep.params["eig_lambda1"] = lambda1;
  rep.params["family_size"] = family.size();
  rep.params["excluded_constant_trials"] = excluded;
  rep.params["argmax"] = best_idx;  // -2: ascended eigenvector
  rep.params["sqrtK"] = shape_sqrtK(ctx.space());
  return rep;
}

double sobolev_quotient_value(const BallContext& ctx, const Vec& u, double R, double nu,
                              bool centered) {
  const double q = 2.0 * nu / (nu - 2.0);
  const double mass = ctx.ball_mass(R);
  Vec w = u;
  if (centered) {
    const double ubar = ctx.ball_average(u, R);
    w = u.array() - ubar;
  }
  const double lq = std::pow(ctx.integrate_pow(w, q, R), (nu - 2.0) / nu);
  double den = ctx.energy(u, R);
  if (!centered) den += ctx.integrate_pow(u, 2.0, R) / (R * R);
  den *= R * R * std::pow(mass, -2.0 / nu);
  if (den < 1e-14 * (1.0 + lq)) return -1.0;
  return lq / den;
}

InequalityReport sobolev_quotient(const BallContext& ctx, const HarnessParams& prm) {
  const double R = prm.R;
  const double nu = prm.resolved_nu(ctx.space());
  InequalityReport rep;
  rep.ineq_id = "sobolev-quotient";
  rep.space = ctx.space().name;

  const auto& family = ctx.trial_family(R, prm.seed);
  double best48 = 0.0, best49 = 0.0;
  for (const Vec& u : family) {
    best48 = std::max(best48, sobolev_quotient_value(ctx, u, R, nu, true));
    best49 = std::max(best49, sobolev_quotient_value(ctx, u, R, nu, false));
  }
  rep.lhs = best48;
  rep.rhs = best49;
  rep.margin = 0.0;
  rep.status = InequalityReport::Status::Measured;
  rep.params["R"] = R;
  rep.params["nu"] = nu;
  rep.params["exponent"] = 2.0 * nu / (nu - 2.0);
  rep.params["measured_centered"] = best48;
  rep.params["measured_full"] = best49;
  rep.params["sqrtK"] = shape_sqrtK(ctx.space());
  return rep;
}

InequalityReport mean_value_check(const BallContext& ctx, const HarnessParams& prm,
                                  const DiscreteFunction& u, const Vec& f) {
  const double R = prm.R;
  const double delta = prm.delta;
  const double nu = prm.resolved_nu(ctx.space());
  if (!(prm.p > 0.0 && prm.p <= 2.0)) throw PreconditionFailed("mean value: p must be in (0,2]");
  require_nonneg_on_ball(ctx, u.values, R);
  require_subsolution_on_ball(ctx, u, f, R, SolutionSense::Subsolution, 1e-8);

  double A = 0.0;
  for (int i = 0; i < ctx.mesh().n_nodes(); ++i)
    if (ctx.node_in(i, R)) A = std::max(A, std::abs(f[i]));

  const double sup_p = std::pow(ctx.sup(u.values, delta * R), prm.p);
  const double avg = ctx.integrate_pow(u.values, prm.p, R) / ctx.ball_mass(R);
  const double shape = std::pow(1.0 + A * R * R, 0.5 * nu) * std::pow(1.0 - delta, -nu) * avg;

  InequalityReport rep;
  rep.ineq_id = "mean-value";
  rep.space = ctx.space().name;
  rep.lhs = sup_p;
  rep.rhs = sup_p / shape;  // measured constant of the e^{C(1+sqrt|K| R)} shape
  rep.margin = 0.0;
  rep.status = InequalityReport::Status::Measured;
  rep.params["R"] = R;
  rep.params["delta"] = delta;
  rep.params["p"] = prm.p;
  rep.params["nu"] = nu;
  rep.params["A"] = A;
  rep.params["ball_average"] = avg;
  rep.params["measured_raw"] = sup_p / avg;
  rep.params["sqrtK"] = shape_sqrtK(ctx.space());
  return rep;
}

InequalityReport mean_value_delta_monotonicity(const BallContext& ctx, const HarnessParams& prm,
                                               const DiscreteFunction& u, const Vec& f,
                                               const std::vector<double>& deltas) {
  std::vector<double> ds = deltas;
  std::sort(ds.begin(), ds.end(), std::greater<>());
  require_nonneg_on_ball(ctx, u.values, prm.R);
  require_subsolution_on_ball(ctx, u, f, prm.R, SolutionSense::Subsolution, 1e-8);
  const double avg = ctx.integrate_pow(u.values, prm.p, prm.R) / ctx.ball_mass(prm.R);

  InequalityReport rep;
  rep.ineq_id = "mean-value/delta-monotonicity";
  rep.space = ctx.space().name;
  rep.params["deltas"] = ds;
  rep.params["p"] = prm.p;
  bool ok = true;
  double prev = std::numeric_limits<double>::infinity();
  std::vector<double> raws;
  for (double d : ds) {
    const double raw = std::pow(ctx.sup(u.values, d * prm.R), prm.p) / avg;
    raws.push_back(raw);
    if (raw > prev * (1.0 + 1e-12)) ok = false;
    prev = raw;
  }
  rep.params["measured_raw_by_delta"] = raws;
  rep.lhs = raws.empty() ? 0.0 : raws.back();
  rep.rhs = raws.empty() ? 0.0 : raws.front();
  rep.margin = rep.rhs - rep.lhs;
  rep.status = ok ? InequalityReport::Status::Pass : InequalityReport::Status::Fail;
  return rep;
}

InequalityReport moser_chain_check(const BallContext& ctx, const HarnessParams& prm,
                                   const DiscreteFunction& u) {
  const double R = prm.R;
  const double delta = prm.delta;
  const double nu = prm.resolved_nu(ctx.space());
  const double t = 1.0 + 2.0 / nu;
  const double Lambda = ctx.uniformity().lambda_rev;
  require_nonneg_on_ball(ctx, u.values, R);
  require_subsolution_on_ball(ctx, u, Vec::Zero(ctx.mesh().n_nodes()), R,
                              SolutionSense::Subsolution, 1e-8);

  // measured Sobolev constant: trial family plus the chain's own functions
  const auto& family = ctx.trial_family(R, prm.seed);
  double c_sob = 0.0;
  for (const Vec& w : family)
    c_sob = std::max(c_sob, sobolev_quotient_value(ctx, w, R, nu, false));

  std::vector<double> schedule = {1.0};
  for (int i = 0; i < 8; ++i)
    schedule.push_back(schedule.back() - (1.0 - delta) / std::pow(2.0, i + 1));

  for (int i = 0; i < 8; ++i) {
    const double a = std::pow(t, i);
    const Vec phi = ctx.cutoff(schedule[i + 1], schedule[i], R);
    Vec w(ctx.mesh().n_nodes());
    for (int j = 0; j < w.size(); ++j)
      w[j] = std::pow(u.values[j], a) * std::pow(phi[j], a);
    c_sob = std::max(c_sob, sobolev_quotient_value(ctx, w, R, nu, false));
  }

  const double mass = ctx.ball_mass(R);
  const double B = c_sob * R * R * std::pow(mass, -2.0 / nu);

  InequalityReport rep;
  rep.ineq_id = "moser-chain";
  rep.space = ctx.space().name;
  rep.params["R"] = R;
  rep.params["delta"] = delta;
  rep.params["nu"] = nu;
  rep.params["t"] = t;
  rep.params["lambda_rev"] = Lambda;
  rep.params["measured_sobolev"] = c_sob;

  bool ok = true;
  std::vector<double> norms;
  double worst_ratio = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double a = std::pow(t, i);
    const double lhs = ctx.integrate_pow(u.values, 2.0 * a * t, schedule[i + 1] * R);
    const double base = ctx.integrate_pow(u.values, 2.0 * a, schedule[i] * R);
    const double gap = schedule[i] - schedule[i + 1];
    const double Theta = 11.0 * a * a * Lambda * Lambda;
    const double rhs = B * Theta / (gap * gap * R * R) * std::pow(base, t);
    norms.push_back(std::pow(lhs, 1.0 / (2.0 * a * t)));
    if (!(lhs <= rhs * (1.0 + prm.tol))) ok = false;
    worst_ratio = std::max(worst_ratio, lhs / rhs);
  }
  rep.params["norm_sequence"] = norms;
  rep.params["worst_step_ratio"] = worst_ratio;

  // infinite-schedule sup bound, assembled in logs
  const double log_c0 = (nu * nu + 2.0 * nu) / 4.0 * std::log(4.0);
  const double ThetaBar = 11.0 * Lambda * Lambda;
  const double log_bound =
      log_c0 +
      0.5 * nu * (std::log(B) + std::log(ThetaBar) - 2.0 * std::log((1.0 - delta) * R)) +
      std::log(ctx.integrate_pow(u.values, 2.0, R));
  const double log_sup = 2.0 * std::log(std::max(ctx.sup(u.values, delta * R), 1e-300));
  rep.params["log_sup_bound"] = log_bound;
  rep.params["log_sup"] = log_sup;
  if (!(log_sup <= log_bound + std::log1p(prm.tol))) ok = false;

  rep.lhs = worst_ratio;
  rep.rhs = 1.0 + prm.tol;
  rep.margin = rep.rhs - rep.lhs;
  rep.status = ok ? InequalityReport::Status::Pass : InequalityReport::Status::Fail;
  return rep;
}

InequalityReport harnack_check(const BallContext& ctx, const HarnessParams& prm,
                               const DiscreteFunction& u) {
  const double rho = prm.delta * prm.R;
  const double lo = ctx.inf(u.values, rho);
  if (!(lo > 0.0)) throw NonPositive("harnack_check needs min u > 0 on the ball");
  const double hi = ctx.sup(u.values, rho);
  const double ratio = hi / lo;

  // scaling invariance of the ratio
  const Vec scaled = 3.7 * u.values;
  const double ratio2 = ctx.sup(scaled, rho) / ctx.inf(scaled, rho);
  const bool invariant = std::abs(ratio - ratio2) <= 1e-10 * ratio;

  InequalityReport rep;
  rep.ineq_id = "harnack-ratio";
  rep.space = ctx.space().name;
  rep.lhs = ratio;
  const double sqrtK = shape_sqrtK(ctx.space());
  rep.rhs = std::log(ratio) / (1.0 + sqrtK * prm.R);  // measured exponent shape
  rep.margin = 0.0;
  rep.status = invariant ? InequalityReport::Status::Measured : InequalityReport::Status::Fail;
  rep.params["R"] = prm.R;
  rep.params["delta"] = prm.delta;
  rep.params["sup"] = hi;
  rep.params["inf"] = lo;
  rep.params["scale_invariance_gap"] = std::abs(ratio - ratio2);
  rep.params["sqrtK"] = sqrtK;
  return rep;
}

InequalityReport superharmonic_inf_check(const BallContext& ctx, const HarnessParams& prm,
                                         const DiscreteFunction& u) {
  const double R = prm.R;
  require_subsolution_on_ball(ctx, u, Vec::Zero(ctx.mesh().n_nodes()), R,
                              SolutionSense::Supersolution, 1e-8);
  const double lo_ball = ctx.inf(u.values, prm.delta * R);
  const double lo_R = ctx.inf(u.values, R);
  if (!(lo_R > 0.0)) throw NonPositive("superharmonic_inf_check needs u > 0 on B_R");

  const double lhs = 1.0 / lo_ball;  // sup of u^{-1} over the delta-ball
  const double avg_inv =
      ctx.integrate(u.values, R, [](double v) { return 1.0 / v; }) / ctx.ball_mass(R);

  InequalityReport rep;
  rep.ineq_id = "superharmonic-inf";
  rep.space = ctx.space().name;
  rep.lhs = lhs;
  rep.rhs = lhs / avg_inv;  // measured constant
  rep.margin = 0.0;
  rep.status = InequalityReport::Status::Measured;
  rep.params["R"] = R;
  rep.params["delta"] = prm.delta;
  rep.params["avg_u_inverse"] = avg_inv;
  rep.params["sqrtK"] = shape_sqrtK(ctx.space());
  return rep;
}

InequalityReport weak_l1_log_check(const BallContext& ctx, const HarnessParams& prm,
                                   const DiscreteFunction& u) {
  const double R = prm.R;
  const double delta = prm.delta;
  const double dprime = prm.delta_prime;
  const double Lambda = ctx.uniformity().lambda_rev;
  for (int i = 0; i < u.values.size(); ++i)
    if (!(u.values[i] > 0.0)) throw NonPositive("weak_l1_log_check needs u > 0");

  Vec v(u.values.size());
  for (int i = 0; i < v.size(); ++i) v[i] = std::log(u.values[i]);

  // Dirichlet bound with the module-1 reversibility
  const double lhs513 = ctx.energy(v, delta * R);
  const double rhs513 = 4.0 * Lambda * Lambda /
                        ((dprime - delta) * (dprime - delta) * R * R) *
                        ctx.ball_mass(dprime * R);
  const bool ok513 = lhs513 <= rhs513 * (1.0 + prm.tol);

  // lumped average and lumped Poincare quotient of v on the delta-ball
  double mw = 0.0, msum = 0.0;
  for (int i = 0; i < ctx.mesh().n_nodes(); ++i)
    if (ctx.node_in(i, delta * R)) {
      mw += ctx.mesh().node_dual_volume[i] * v[i];
      msum += ctx.mesh().node_dual_volume[i];
    }
  const double vbar = mw / msum;
  double lumped_sq = 0.0;
  for (int i = 0; i < ctx.mesh().n_nodes(); ++i)
    if (ctx.node_in(i, delta * R))
      lumped_sq += ctx.mesh().node_dual_volume[i] * (v[i] - vbar) * (v[i] - vbar);

  const double energy_v = ctx.energy(v, delta * R);
  double c_p = energy_v > 1e-14 ? lumped_sq / (energy_v * delta * delta * R * R) : 0.0;
  // widen with the family-measured Poincare constant on the delta-ball
  const auto& family = ctx.trial_family(R, prm.seed);
  for (const Vec& w : family) {
    const double q = poincare_quotient_value(ctx, w, delta * R);
    if (q > 0) c_p = std::max(c_p, q / (delta * delta * R * R));
  }

  const double c_emp = 2.0 * Lambda * delta * std::sqrt(c_p) / (dprime - delta);
  const double mR = ctx.ball_mass(R);

  InequalityReport rep;
  rep.ineq_id = "weak-l1-log";
  rep.space = ctx.space().name;
  rep.params["R"] = R;
  rep.params["delta"] = delta;
  rep.params["delta_prime"] = dprime;
  rep.params["lambda_rev"] = Lambda;
  rep.params["dirichlet_lhs"] = lhs513;
  rep.params["dirichlet_rhs"] = rhs513;
  rep.params["poincare_constant"] = c_p;
  rep.params["C_emp"] = c_emp;

  double osc = 0.0;
  for (int i = 0; i < v.size(); ++i)
    if (ctx.node_in(i, delta * R)) osc = std::max(osc, std::abs(v[i] - vbar));
  bool ok_levels = true;
  double worst = 0.0;
  const double t0 = osc > 0 ? osc : 1.0;
  std::vector<double> lhs_by_t;
  for (int j = 0; j < 10; ++j) {
    const double tj = t0 * std::pow(2.0, -j);
    const double lhs_t = tj * ctx.level_set_mass(v, vbar, tj, delta * R);
    lhs_by_t.push_back(lhs_t);
    if (lhs_t > c_emp * mR * (1.0 + prm.tol)) ok_levels = false;
    worst = std::max(worst, lhs_t);
  }
  rep.params["level_lhs_max"] = worst;

  rep.lhs = worst / std::max(mR, 1e-300);
  rep.rhs = c_emp;
  rep.margin = rep.rhs - rep.lhs;
  rep.status =
      (ok513 && ok_levels) ? InequalityReport::Status::Pass : InequalityReport::Status::Fail;
  return rep;
}

InequalityReport gradient_estimate_check(const BallContext& ctx, const HarnessParams& prm,
                                         const DiscreteFunction& u) {
  const Mesh& mesh = ctx.mesh();
  const MeasureSpace& space = ctx.space();
  const double R = prm.R;
  for (int i = 0; i < u.values.size(); ++i)
    if (ctx.node_in(i, R) && !(u.values[i] > 0.0))
      throw NonPositive("gradient_estimate_check needs u > 0 on the ball");

  Vec v(u.values.size());
  for (int i = 0; i < v.size(); ++i) v[i] = std::log(std::max(u.values[i], 1e-300));

  // max of F(grad log u) and F(grad(-log u)) over ball cells
  double grad_max = 0.0;
  int zero_cells = 0, ball_cells = 0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (!ctx.cell_in(c, prm.delta * R)) continue;
    ++ball_cells;
    Vec dv = Vec::Zero(2);
    for (int k = 0; k < 3; ++k) dv += v[mesh.cells[c][k]] * mesh.grad_basis[c][k];
    if (dv.norm() < 1e-14) {
      ++zero_cells;
      continue;
    }
    const Vec& xc = mesh.cell_centroid[c];
    grad_max = std::max(
        {grad_max, space.metric.dual_norm(xc, dv), space.metric.dual_norm(xc, Vec(-dv))});
  }

  // Subsolution test on h = F^2(grad u) under the frozen-coefficient
  // weighted Laplacian.
  Vec h_cell = Vec::Zero(mesh.n_cells());
  int du_zero = 0;
  std::vector<Mat> gstar(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    Vec du = Vec::Zero(2);
    for (int k = 0; k < 3; ++k) du += u.values[mesh.cells[c][k]] * mesh.grad_basis[c][k];
    const Vec& xc = mesh.cell_centroid[c];
    if (du.norm() < 1e-14) {
      ++du_zero;
      gstar[c] = space.metric.a_field().eval(xc).inverse();
      h_cell[c] = 0.0;
      continue;
    }
    const double fs = space.metric.dual_norm(xc, du);
    h_cell[c] = fs * fs;
    gstar[c] = space.metric.dual_tensor(xc, du);
  }
  if (du_zero > 0.1 * mesh.n_cells())
    throw InsufficientRegularity("du vanishes on more than 10% of cells");

  Vec h_node = Vec::Zero(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    double wsum = 0.0, hsum = 0.0;
    for (int c : mesh.node_cells[i]) {
      wsum += mesh.cell_weight[c];
      hsum += mesh.cell_weight[c] * h_cell[c];
    }
    h_node[i] = wsum > 0 ? hsum / wsum : 0.0;
  }

  const double K = std::max(0.0, -space.certified.ric_inf_lower);
  Vec lhs_nodes = Vec::Zero(mesh.n_nodes());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    Vec dh = Vec::Zero(2);
    for (int k = 0; k < 3; ++k) dh += h_node[mesh.cells[c][k]] * mesh.grad_basis[c][k];
    const Vec flow = gstar[c] * dh;  // frozen-coefficient gradient of h
    for (int k = 0; k < 3; ++k)
      lhs_nodes[mesh.cells[c][k]] += mesh.cell_weight[c] * mesh.grad_basis[c][k].dot(flow);
  }
  const Vec rhs_nodes = 2.0 * K * hat_pairing(space, mesh, h_node);

  double worst_violation = -std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (mesh.boundary[i]) continue;
    bool supported = true;
    for (int c : mesh.node_cells[i])
      if (!ctx.cell_in(c, prm.delta * R)) {
        supported = false;
        break;
      }
    if (!supported) continue;
    worst_violation = std::max(worst_violation, lhs_nodes[i] - rhs_nodes[i]);
    scale = std::max({scale, std::abs(lhs_nodes[i]), std::abs(rhs_nodes[i])});
  }
  const double tol_abs = prm.tol * std::max(scale, 1e-12);
  const bool lemma_ok = worst_violation <= tol_abs;

  InequalityReport rep;
  rep.ineq_id = "gradient-estimate";
  rep.space = space.name;
  rep.lhs = grad_max;
  const double sqrtK = std::sqrt(K);
  const double nu = prm.resolved_nu(space);
  rep.rhs = std::log(std::max(grad_max, 1e-300)) / (1.0 + sqrtK);  // measured shape exponent
  rep.margin = 0.0;
  rep.status = lemma_ok ? InequalityReport::Status::Measured : InequalityReport::Status::Fail;
  rep.params["R"] = R;
  rep.params["delta"] = prm.delta;
  rep.params["K"] = K;
  rep.params["shape_factor"] = std::exp(1.0 + sqrtK) * std::pow(1.0 + K, 0.25 * (nu + 2.0));
  rep.params["lemma51_worst_violation"] = worst_violation;
  rep.params["lemma51_tolerance"] = tol_abs;
  rep.params["zero_gradient_cells"] = zero_cells;
  rep.params["ball_cells"] = ball_cells;
  return rep;
}

double bochner_residual(const MeasureSpace& space, const Poly2& u,
                        const std::vector<Vec>& points) {
  if (space.metric.variant() == MetricVariant::Randers)
    throw UnsupportedSpace("Bochner residual: Randers Hessians are out of scope");
  if (!space.metric.a_field().is_constant())
    throw UnsupportedSpace("Bochner residual needs a constant-coefficient metric");
  const Mat A = space.metric.a_field().eval(Vec::Zero(2));
  const Mat Ainv = A.inverse();

  Poly2 phi;  // log density as a polynomial
  switch (space.log_density.family) {
    case DensityFamily::Lebesgue:
      break;
    case DensityFamily::Gaussian: {
      const Vec c = space.log_density.center;
      const Poly2 dx = Poly2::var(0) - Poly2::constant(c[0]);
      const Poly2 dy = Poly2::var(1) - Poly2::constant(c[1]);
      phi = (dx * dx + dy * dy) * (-0.5 * space.log_density.strength);
      break;
    }
    case DensityFamily::RiemannianVolume:
      phi = Poly2::constant(space.metric.a_field().half_log_det(Vec::Zero(2)));
      break;
  }

  const Poly2 du[2] = {u.deriv(0), u.deriv(1)};
  const Poly2 dphi[2] = {phi.deriv(0), phi.deriv(1)};
  Poly2 hess_u[2][2], hess_phi[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      hess_u[i][j] = du[i].deriv(j);
      hess_phi[i][j] = dphi[i].deriv(j);
    }
  Poly2 gu[2];  // grad u = A^{-1} du
  for (int i = 0; i < 2; ++i) gu[i] = Ainv(i, 0) * du[0] + Ainv(i, 1) * du[1];

  // weighted Laplacian: tr(A^{-1} Hess w) + <dphi, dw>_{A^{-1}}
  auto weighted_lap = [&](const Poly2& w) {
    const Poly2 dw[2] = {w.deriv(0), w.deriv(1)};
    Poly2 out;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out = out + Ainv(i, j) * dw[i].deriv(j) + Ainv(i, j) * dphi[i] * dw[j];
    return out;
  };

  // h = F^2(grad u)/2 = du . A^{-1} du / 2
  Poly2 h;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) h = h + 0.5 * Ainv(i, j) * du[i] * du[j];

  const Poly2 lap_u = weighted_lap(u);
  const Poly2 lap_h = weighted_lap(h);

  Poly2 dlap_gu;  // d(lap u)(grad u)
  for (int i = 0; i < 2; ++i) dlap_gu = dlap_gu + lap_u.deriv(i) * gu[i];

  Poly2 ric;  // Ric_inf(grad u) = -Hess phi(grad u, grad u) for a flat metric
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) ric = ric - hess_phi[i][j] * gu[i] * gu[j];

  Poly2 hs;  // ||Hess u||^2_{HS} = tr(A^{-1} Hu A^{-1} Hu)
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          hs = hs + Ainv(i, j) * hess_u[j][k] * Ainv(k, l) * hess_u[l][i];

  const Poly2 residual = lap_h - dlap_gu - ric - hs;
  double worst = 0.0;
  for (const Vec& x : points) worst = std::max(worst, std::abs(residual.eval(x)));
  return worst;
}

namespace {

void require_nonnegative_curvature(const MeasureSpace& space, const char* probe) {
  if (space.certified.ric_inf_lower < 0.0)
    throw PreconditionFailed(std::string(probe) +
                             ": space lacks certified Ric_inf >= 0 (hypothesis refused)");
}

}  // namespace

InequalityReport liouville_probe(const MeasureSpace& space, const ProbeOptions& opts) {
  require_nonnegative_curvature(space, "liouville_probe");
  InequalityReport rep;
  rep.ineq_id = "liouville-probe";
  rep.space = space.name;
  rep.params["radii"] = opts.radii;

  std::vector<double> scaled;  // sup F(grad u) * R_j
  std::vector<double> cemp;
  for (double R : opts.radii) {
    const Mesh mesh = Mesh::disk_uniform(space, Vec::Zero(2), R, opts.rings, opts.sectors);
    DirichletProblem prob;
    prob.space = &space;
    prob.mesh = &mesh;
    prob.boundary_values = Vec::Zero(mesh.n_nodes());
    double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      if (!mesh.boundary[i]) continue;
      const double g = 1.0 + std::sin(M_PI * mesh.nodes[i][0] / R) / R;
      prob.boundary_values[i] = g;
      gmin = std::min(gmin, g);
      gmax = std::max(gmax, g);
    }
    const DiscreteFunction u = solve_harmonic(prob);
    double sup_grad = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      if (mesh.cell_centroid[c].norm() >= 0.25 * R) continue;
      Vec du = Vec::Zero(2);
      for (int k = 0; k < 3; ++k) du += u.values[mesh.cells[c][k]] * mesh.grad_basis[c][k];
      if (du.norm() < 1e-16) continue;
      sup_grad = std::max(sup_grad, space.metric.dual_norm(mesh.cell_centroid[c], du));
    }
    scaled.push_back(sup_grad * R);
    cemp.push_back(sup_grad * R / (gmax - gmin));
  }
  rep.params["sup_grad_times_R"] = scaled;
  rep.params["C_emp"] = cemp;
  const double lo = *std::min_element(scaled.begin(), scaled.end());
  const double hi = *std::max_element(scaled.begin(), scaled.end());
  const bool monotone_growth = scaled.size() >= 2 &&
                               std::is_sorted(scaled.begin(), scaled.end()) &&
                               scaled.back() > 1.1 * scaled.front();
  rep.lhs = hi;
  rep.rhs = 1.5 * lo;
  rep.margin = rep.rhs - rep.lhs;
  rep.status = (!monotone_growth && hi <= 1.5 * lo) ? InequalityReport::Status::Pass
                                                    : InequalityReport::Status::Fail;
  return rep;
}

InequalityReport global_harnack_probe(const MeasureSpace& space, const ProbeOptions& opts) {
  require_nonnegative_curvature(space, "global_harnack_probe");
  InequalityReport rep;
  rep.ineq_id = "global-harnack-probe";
  rep.space = space.name;
  rep.params["radii"] = opts.radii;
  rep.params["delta"] = opts.delta;
  rep.params["solver"] = opts.use_solver;

  std::vector<double> ratios;
  for (double R : opts.radii) {
    const Mesh mesh = Mesh::disk_uniform(space, Vec::Zero(2), R, opts.rings, opts.sectors);
    Vec u(mesh.n_nodes());
    if (opts.use_solver) {
      DirichletProblem prob;
      prob.space = &space;
      prob.mesh = &mesh;
      prob.boundary_values = Vec::Zero(mesh.n_nodes());
      for (int i = 0; i < mesh.n_nodes(); ++i)
        if (mesh.boundary[i]) prob.boundary_values[i] = 2.0 + mesh.nodes[i][0] / R;
      u = solve_harmonic(prob).values;
    } else {
      for (int i = 0; i < mesh.n_nodes(); ++i) u[i] = 2.0 * R + mesh.nodes[i][0];
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const double rho = opts.delta * R * (1.0 + 1e-12);
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      if (mesh.nodes[i].norm() > rho) continue;
      lo = std::min(lo, u[i]);
      hi = std::max(hi, u[i]);
    }
    if (!(lo > 0)) throw NonPositive("global_harnack_probe: solution not positive");
    ratios.push_back(hi / lo);
  }
  rep.params["ratios"] = ratios;
  const double lo = *std::min_element(ratios.begin(), ratios.end());
  const double hi = *std::max_element(ratios.begin(), ratios.end());
  rep.lhs = hi / lo - 1.0;
  rep.rhs = opts.drift_allowance;
  rep.margin = rep.rhs - rep.lhs;
  rep.status =
      rep.lhs <= rep.rhs ? InequalityReport::Status::Pass : InequalityReport::Status::Fail;
  return rep;
}

}  // namespace finsler
