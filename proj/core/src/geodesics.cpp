#include "finsler/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "finsler/error.hpp"

namespace finsler {

namespace {

struct State {
  Vec x;
  Vec v;
};

State rhs(const MeasureSpace& space, const State& s) {
  return {s.v, -2.0 * space.metric.spray(s.x, s.v)};
}

State rk4_step(const MeasureSpace& space, const State& s, double dt) {
  const State k1 = rhs(space, s);
  const State k2 = rhs(space, {s.x + 0.5 * dt * k1.x, s.v + 0.5 * dt * k1.v});
  const State k3 = rhs(space, {s.x + 0.5 * dt * k2.x, s.v + 0.5 * dt * k2.v});
  const State k4 = rhs(space, {s.x + dt * k3.x, s.v + dt * k3.v});
  return {s.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          s.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

GeodesicPath integrate(const MeasureSpace& space, const Vec& x0, const Vec& y0,
                       double t_max, double step) {
  GeodesicPath path;
  path.speed = space.metric.norm(x0, y0);
  const double sign = t_max < 0 ? -1.0 : 1.0;
  const double dt = sign * std::abs(step);
  const int nsteps = static_cast<int>(std::ceil(std::abs(t_max) / std::abs(step) - 1e-12));
  path.t.reserve(nsteps + 1);
  path.x.reserve(nsteps + 1);
  path.v.reserve(nsteps + 1);
  State s{x0, y0};
  path.t.push_back(0.0);
  path.x.push_back(s.x);
  path.v.push_back(s.v);
  double t = 0.0;
  for (int i = 0; i < nsteps; ++i) {
    const double h = (i == nsteps - 1) ? (t_max - t) : dt;
    s = rk4_step(space, s, h);
    t += h;
    path.t.push_back(t);
    path.x.push_back(s.x);
    path.v.push_back(s.v);
  }
  return path;
}

}  // namespace

double GeodesicPath::constant_speed_drift(const MeasureSpace& space) const {
  double drift = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    drift = std::max(drift, std::abs(space.metric.norm(x[i], v[i]) - speed));
  return speed > 0 ? drift / speed : drift;
}

GeodesicPath geodesic_shoot(const MeasureSpace& space, const Vec& x0, const Vec& y0,
                            double t_max, double step) {
  if (y0.norm() == 0.0) throw ZeroVector();
  if (step <= 0.0) throw StepFailure("geodesic step must be positive");
  double h = step;
  for (int halving = 0; halving < 14; ++halving) {
    if (h < 1e-12 * std::abs(t_max))
      throw StepFailure("geodesic step underflow (metric breakdown)");
    try {
      GeodesicPath path = integrate(space, x0, y0, t_max, h);
      if (path.constant_speed_drift(space) < 1e-6) return path;
    } catch (const InvalidInput& e) {
      throw StepFailure(std::string("geodesic integration left the metric's domain: ") + e.what());
    }
    h *= 0.5;
  }
  throw StepFailure("constant-speed drift did not settle under step halving");
}

double s_curvature(const MeasureSpace& space, const Vec& x, const Vec& y) {
  const double F0 = space.metric.norm(x, y);
  if (F0 == 0.0) throw ZeroVector();
  const Vec yu = y / F0;

  double scale = 1.0;
  if (space.domain) {
    const double slack = space.domain->radius - (x - space.domain->center).norm();
    scale = std::clamp(0.5 * slack, 1e-2, 1.0);
  }
  const double h = 1e-3 * scale;

  const GeodesicPath fwd = geodesic_shoot(space, x, yu, h, h / 8.0);
  const GeodesicPath bwd = geodesic_shoot(space, x, yu, -h, h / 8.0);
  const double tau_f = space.distortion(fwd.x.back(), fwd.v.back());
  const double tau_b = space.distortion(bwd.x.back(), bwd.v.back());
  // S is 1-homogeneous in y; the differencing runs at unit speed.
  return F0 * (tau_f - tau_b) / (2.0 * h);
}

namespace {

// Simpson along the straight segment from p to q under F(., q - p).
double segment_length(const MeasureSpace& space, const Vec& p, const Vec& q) {
  const Vec d = q - p;
  return (space.metric.norm(p, d) + 4.0 * space.metric.norm(0.5 * (p + q), d) +
          space.metric.norm(q, d)) /
         6.0;
}

bool in_domain(const MeasureSpace& space, const Vec& x) {
  if (!space.domain) return true;
  return (x - space.domain->center).norm() < 0.999 * space.domain->radius;
}

struct Lattice {
  Vec lo;
  double hx = 0, hy = 0;
  int nx = 0, ny = 0;
  std::vector<Vec> pos;        // lattice points, then appended extras
  std::vector<char> usable;

  int id(int i, int j) const { return j * nx + i; }
};

Lattice build_lattice(const MeasureSpace& space, const Vec& lo, const Vec& hi, int n) {
  Lattice L;
  L.nx = n;
  L.ny = n;
  L.lo = lo;
  L.hx = (hi[0] - lo[0]) / (n - 1);
  L.hy = (hi[1] - lo[1]) / (n - 1);
  L.pos.reserve(n * n);
  L.usable.reserve(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Vec p = vec2(lo[0] + i * L.hx, lo[1] + j * L.hy);
      L.pos.push_back(p);
      L.usable.push_back(in_domain(space, p) ? 1 : 0);
    }
  return L;
}

constexpr int kOffsets[16][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1}, {1, 1},  {1, -1},
                                 {-1, 1}, {-1, -1}, {1, 2},  {1, -2}, {-1, 2}, {-1, -2},
                                 {2, 1},  {2, -1}, {-2, 1}, {-2, -1}};

// Forward Dijkstra with asymmetric edge weights from `source` over the
// lattice plus appended extra nodes (each extra node links to lattice nodes
// within reach both ways).
struct Graph {
  const MeasureSpace* space;
  Lattice lat;
  std::vector<std::vector<int>> extra_links;       // extra -> lattice
  std::vector<std::vector<int>> lattice_to_extra;  // lattice -> extra ids

  int lattice_count() const { return lat.nx * lat.ny; }
  int total() const { return static_cast<int>(lat.pos.size()); }

  int add_extra(const Vec& p) {
    if (lattice_to_extra.empty()) lattice_to_extra.assign(lattice_count(), {});
    lat.pos.push_back(p);
    lat.usable.push_back(1);
    const int ev = total() - 1;
    std::vector<int> links;
    const int ci = static_cast<int>(std::round((p[0] - lat.lo[0]) / lat.hx));
    const int cj = static_cast<int>(std::round((p[1] - lat.lo[1]) / lat.hy));
    for (int dj = -2; dj <= 2; ++dj)
      for (int di = -2; di <= 2; ++di) {
        const int i = ci + di, j = cj + dj;
        if (i < 0 || j < 0 || i >= lat.nx || j >= lat.ny) continue;
        if (!lat.usable[lat.id(i, j)]) continue;
        links.push_back(lat.id(i, j));
        lattice_to_extra[lat.id(i, j)].push_back(ev);
      }
    extra_links.push_back(std::move(links));
    return ev;
  }

  template <typename Fn>
  void for_each_out_edge(int u, Fn&& fn) const {
    const int nlat = lattice_count();
    if (u < nlat) {
      const int i = u % lat.nx, j = u / lat.nx;
      for (const auto& off : kOffsets) {
        const int i2 = i + off[0], j2 = j + off[1];
        if (i2 < 0 || j2 < 0 || i2 >= lat.nx || j2 >= lat.ny) continue;
        const int v = lat.id(i2, j2);
        if (lat.usable[v]) fn(v);
      }
      for (int ev : lattice_to_extra[u]) fn(ev);
    } else {
      for (int v : extra_links[u - nlat]) fn(v);
    }
  }
};

struct DijkstraResult {
  std::vector<double> dist;
  std::vector<int> prev;
};

DijkstraResult dijkstra(const Graph& g, int source) {
  const int n = g.total();
  DijkstraResult r;
  r.dist.assign(n, std::numeric_limits<double>::infinity());
  r.prev.assign(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  r.dist[source] = 0.0;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > r.dist[u] + 1e-15) continue;
    g.for_each_out_edge(u, [&](int v) {
      const double w = segment_length(*g.space, g.lat.pos[u], g.lat.pos[v]);
      if (r.dist[u] + w < r.dist[v] - 1e-15) {
        r.dist[v] = r.dist[u] + w;
        r.prev[v] = u;
        pq.push({r.dist[v], v});
      }
    });
  }
  return r;
}

std::vector<Vec> resample_polyline(const std::vector<Vec>& pts, int n_out) {
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i)
    cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double total = cum.back();
  std::vector<Vec> out;
  out.reserve(n_out);
  if (total == 0.0) {
    out.assign(n_out, pts.front());
    return out;
  }
  std::size_t k = 0;
  for (int i = 0; i < n_out; ++i) {
    const double s = total * i / (n_out - 1);
    while (k + 1 < cum.size() && cum[k + 1] < s) ++k;
    const double seg = cum[k + 1] - cum[k];
    const double w = seg > 0 ? (s - cum[k]) / seg : 0.0;
    out.push_back((1.0 - w) * pts[k] + w * pts[k + 1]);
  }
  return out;
}

// Polyline energy E = sum F^2(midpoint_i, delta_i) and its gradient w.r.t.
// the interior points. The minimizer is the constant-speed discrete geodesic.
double polyline_energy(const MeasureSpace& space, const std::vector<Vec>& p) {
  double e = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double f = space.metric.norm(0.5 * (p[i] + p[i + 1]), p[i + 1] - p[i]);
    e += f * f;
  }
  return e;
}

void polyline_energy_grad(const MeasureSpace& space, const std::vector<Vec>& p,
                          std::vector<Vec>& grad) {
  const std::size_t n = p.size();
  grad.assign(n, Vec::Zero(2));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec m = 0.5 * (p[i] + p[i + 1]);
    const Vec d = p[i + 1] - p[i];
    const Vec gx = space.metric.f2_x(m, d);
    const Vec gy = 2.0 * space.metric.legendre(m, d);
    grad[i] += 0.5 * gx - gy;
    grad[i + 1] += 0.5 * gx + gy;
  }
  grad[0].setZero();
  grad[n - 1].setZero();
}

// Polak-Ribiere nonlinear CG with Armijo backtracking on the polyline energy.
void straighten(const MeasureSpace& space, std::vector<Vec>& p, int iterations) {
  std::vector<Vec> grad, grad_prev, dir;
  double e = polyline_energy(space, p);
  polyline_energy_grad(space, p, grad);
  dir = grad;
  for (auto& d : dir) d = -d;
  double step = 0.25;
  for (int it = 0; it < iterations; ++it) {
    double gnorm2 = 0.0, slope = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      gnorm2 += grad[i].squaredNorm();
      slope += grad[i].dot(dir[i]);
    }
    if (gnorm2 < 1e-26 * (1.0 + e * e)) break;
    if (slope >= 0) {
      for (std::size_t i = 0; i < p.size(); ++i) dir[i] = -grad[i];
      slope = -gnorm2;
    }
    double s = step * 2.0;
    bool accepted = false;
    std::vector<Vec> cand(p.size(), Vec::Zero(2));
    for (int bt = 0; bt < 40; ++bt) {
      bool ok = true;
      for (std::size_t i = 0; i < p.size(); ++i) {
        cand[i] = p[i] + s * dir[i];
        if (!in_domain(space, cand[i])) {
          ok = false;
          break;
        }
      }
      if (ok) {
        const double ec = polyline_energy(space, cand);
        if (ec <= e + 1e-4 * s * slope) {
          p.swap(cand);
          e = ec;
          step = s;
          accepted = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!accepted) break;
    grad_prev = grad;
    polyline_energy_grad(space, p, grad);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      num += grad[i].dot(grad[i] - grad_prev[i]);
      den += grad_prev[i].squaredNorm();
    }
    const double beta = den > 0 ? std::max(0.0, num / den) : 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dir[i] = -grad[i] + beta * dir[i];
  }
}

std::vector<Vec> backtrack_path(const Lattice& lat, const std::vector<int>& prev, int target) {
  std::vector<Vec> pts;
  for (int u = target; u != -1; u = prev[u]) pts.push_back(lat.pos[u]);
  std::reverse(pts.begin(), pts.end());
  return pts;
}

}  // namespace

double path_length(const MeasureSpace& space, const std::vector<Vec>& pts) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    len += segment_length(space, pts[i], pts[i + 1]);
  return len;
}

double distance(const MeasureSpace& space, const Vec& x1, const Vec& x2,
                const DistanceOptions& opts) {
  if ((x2 - x1).norm() == 0.0) return 0.0;
  if (space.metric.is_constant_coefficient()) return space.metric.norm(x1, x2 - x1);
  const auto d = distance_batch(space, x1, {x2}, opts);
  return d[0];
}

DistanceResult distance_path(const MeasureSpace& space, const Vec& x1, const Vec& x2,
                             const DistanceOptions& opts) {
  DistanceResult out;
  if ((x2 - x1).norm() == 0.0) {
    out.polyline = {x1, x2};
    return out;
  }
  if (space.metric.is_constant_coefficient()) {
    out.value = space.metric.norm(x1, x2 - x1);
    out.polyline.reserve(opts.polyline_points);
    for (int i = 0; i < opts.polyline_points; ++i)
      out.polyline.push_back(x1 + (x2 - x1) * (double(i) / (opts.polyline_points - 1)));
    return out;
  }

  Graph g;
  g.space = &space;
  Vec lo = x1.cwiseMin(x2), hi = x1.cwiseMax(x2);
  const double span = std::max((hi - lo).maxCoeff(), 1e-3);
  lo.array() -= 0.35 * span;
  hi.array() += 0.35 * span;
  if (space.domain) {
    const Vec dlo = space.domain->center.array() - space.domain->radius;
    const Vec dhi = space.domain->center.array() + space.domain->radius;
    lo = lo.cwiseMax(dlo);
    hi = hi.cwiseMin(dhi);
  }
  g.lat = build_lattice(space, lo, hi, opts.grid);
  const int src = g.add_extra(x1);
  const int tgt = g.add_extra(x2);
  const DijkstraResult r = dijkstra(g, src);
  if (!std::isfinite(r.dist[tgt]))
    throw NoConvergence("distance: target unreachable on the working lattice");
  out.polyline = backtrack_path(g.lat, r.prev, tgt);
  out.polyline = resample_polyline(out.polyline, opts.polyline_points);
  straighten(space, out.polyline, opts.descent_iterations);
  out.value = path_length(space, out.polyline);
  return out;
}

std::vector<double> distance_batch(const MeasureSpace& space, const Vec& x0,
                                   const std::vector<Vec>& targets,
                                   const DistanceOptions& opts) {
  std::vector<double> out(targets.size(), 0.0);
  if (space.metric.is_constant_coefficient()) {
    for (std::size_t i = 0; i < targets.size(); ++i)
      out[i] = space.metric.norm(x0, targets[i] - x0);
    return out;
  }

  Vec lo = x0, hi = x0;
  for (const Vec& t : targets) {
    lo = lo.cwiseMin(t);
    hi = hi.cwiseMax(t);
  }
  const double span = std::max({(hi - lo).maxCoeff(), 1e-3});
  const double pad = 0.35 * span;
  lo.array() -= pad;
  hi.array() += pad;
  if (space.domain) {
    const Vec dlo = space.domain->center.array() - space.domain->radius;
    const Vec dhi = space.domain->center.array() + space.domain->radius;
    lo = lo.cwiseMax(dlo);
    hi = hi.cwiseMin(dhi);
  }

  Graph g;
  g.space = &space;
  g.lat = build_lattice(space, lo, hi, opts.grid);
  const int src = g.add_extra(x0);
  std::vector<int> tgt_ids;
  tgt_ids.reserve(targets.size());
  for (const Vec& t : targets) tgt_ids.push_back(g.add_extra(t));

  const DijkstraResult r = dijkstra(g, src);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const int tid = tgt_ids[k];
    if ((targets[k] - x0).norm() == 0.0) {
      out[k] = 0.0;
      continue;
    }
    if (!std::isfinite(r.dist[tid]))
      throw NoConvergence("distance: target unreachable on the working lattice");
    std::vector<Vec> poly = backtrack_path(g.lat, r.prev, tid);
    poly = resample_polyline(poly, opts.polyline_points);
    straighten(space, poly, opts.descent_iterations);
    out[k] = path_length(space, poly);
  }
  return out;
}

}  // namespace finsler
