#include "mgn/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

namespace mgn {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr double kGeomTol = 1e-9;

// Degree-5 rule on the reference triangle (barycentric points, weights sum to 1).
struct Quadrature {
  std::array<std::array<double, 3>, 7> bary;
  std::array<double, 7> weight;
};

const Quadrature& quadrature() {
  static const Quadrature q = [] {
    Quadrature r{};
    const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    r.bary = {{{1.0 / 3, 1.0 / 3, 1.0 / 3},
               {a1, b1, b1},
               {b1, a1, b1},
               {b1, b1, a1},
               {a2, b2, b2},
               {b2, a2, b2},
               {b2, b2, a2}}};
    r.weight = {0.225, w1, w1, w1, w2, w2, w2};
    return r;
  }();
  return q;
}

// Local P2 numbering: vertices 0..2, then midpoints of (0,1), (1,2), (2,0).
constexpr std::array<std::array<int, 2>, 3> kLocalEdges = {{{0, 1}, {1, 2}, {2, 0}}};

std::array<double, 6> p2_values(const std::array<double, 3>& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
}

using Grad3 = std::array<Vec2, 3>;

std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& l, const Grad3& gl) {
  std::array<Vec2, 6> g;
  for (int i = 0; i < 3; ++i) g[i] = (4 * l[i] - 1) * gl[i];
  for (int k = 0; k < 3; ++k) {
    const int i = kLocalEdges[k][0], j = kLocalEdges[k][1];
    g[3 + k] = 4.0 * (l[j] * gl[i] + l[i] * gl[j]);
  }
  return g;
}

// Factored system with eliminated Dirichlet rows/columns.
class ReducedSystem {
 public:
  ReducedSystem() = default;

  void setup(const SpMat& full, const std::vector<char>& dirichlet) {
    const int n = static_cast<int>(full.rows());
    to_reduced_.assign(n, -1);
    int m = 0;
    for (int i = 0; i < n; ++i) {
      if (!dirichlet[i]) to_reduced_[i] = m++;
    }
    Triplets ff;
    Triplets fd;
    for (int col = 0; col < full.outerSize(); ++col) {
      for (SpMat::InnerIterator it(full, col); it; ++it) {
        const int r = to_reduced_[it.row()];
        if (r < 0) continue;
        if (to_reduced_[col] >= 0) {
          ff.emplace_back(r, to_reduced_[col], it.value());
        } else {
          fd.emplace_back(r, col, it.value());
        }
      }
    }
    SpMat a(m, m);
    a.setFromTriplets(ff.begin(), ff.end());
    coupling_.resize(m, n);
    coupling_.setFromTriplets(fd.begin(), fd.end());
    solver_.compute(a);
    if (solver_.info() != Eigen::Success) throw SolverError("sparse factorization failed");
    size_ = m;
  }

  /// Solves with Dirichlet values taken from `boundary` (full-length vector).
  Vec solve(const Vec& rhs, const Vec& boundary) const {
    Vec b(size_);
    for (int i = 0; i < static_cast<int>(to_reduced_.size()); ++i) {
      if (to_reduced_[i] >= 0) b[to_reduced_[i]] = rhs[i];
    }
    b -= coupling_ * boundary;
    const Vec x = solver_.solve(b);
    if (solver_.info() != Eigen::Success) throw SolverError("sparse solve failed");
    Vec full = boundary;
    for (int i = 0; i < static_cast<int>(to_reduced_.size()); ++i) {
      if (to_reduced_[i] >= 0) full[i] = x[to_reduced_[i]];
    }
    return full;
  }

 private:
  std::vector<int> to_reduced_;
  SpMat coupling_;
  Eigen::SimplicialLDLT<SpMat> solver_;
  int size_ = 0;
};

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

struct IpcsSolver::Impl {
  std::vector<Vec2> verts;
  std::vector<std::array<int, 3>> tris;
  std::vector<std::array<int, 6>> dofs;
  std::vector<double> area;
  std::vector<Grad3> grad_lambda;
  std::vector<Vec2> dof_pos;
  std::vector<std::vector<std::array<int, 2>>> obstacle_edges;
  std::map<std::pair<int, int>, int> edge_triangle;  // ordered vertex pair -> triangle

  double length = kChannelLength;
  double peak = 1.0;
  double dt = 1e-3;
  double nu = 1e-3;
  double t = 0.0;
  int n1 = 0, n2 = 0;

  SpMat m2, k2, k1, m1, bx, by, gx, gy, explicit_op;
  ReducedSystem tentative, pressure, correction;
  Vec boundary_x, boundary_y, boundary_p;
  Vec ux, uy, p;
  mutable std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> m1_solver;

  void build(const Mesh& mesh) {
    verts = mesh.vertices;
    tris = mesh.triangles;
    n1 = static_cast<int>(verts.size());
    const auto edges = undirected_edges(mesh);
    n2 = n1 + static_cast<int>(edges.size());
    auto edge_dof = [&](int a, int b) {
      const std::array<int, 2> key{std::min(a, b), std::max(a, b)};
      const auto it = std::lower_bound(edges.begin(), edges.end(), key);
      return n1 + static_cast<int>(it - edges.begin());
    };
    dof_pos.resize(n2);
    for (int i = 0; i < n1; ++i) dof_pos[i] = verts[i];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      dof_pos[n1 + e] = 0.5 * (verts[edges[e][0]] + verts[edges[e][1]]);
    }

    dofs.resize(tris.size());
    area.resize(tris.size());
    grad_lambda.resize(tris.size());
    std::map<std::pair<int, int>, int> edge_count;
    for (std::size_t e = 0; e < tris.size(); ++e) {
      const auto& tr = tris[e];
      for (int k = 0; k < 3; ++k) {
        dofs[e][k] = tr[k];
        dofs[e][3 + k] = edge_dof(tr[kLocalEdges[k][0]], tr[kLocalEdges[k][1]]);
        const int a = tr[k], b = tr[(k + 1) % 3];
        edge_triangle[{a, b}] = static_cast<int>(e);
        ++edge_count[{std::min(a, b), std::max(a, b)}];
      }
      const Vec2 p0 = verts[tr[0]], p1 = verts[tr[1]], p2 = verts[tr[2]];
      const double a2 = cross(p1 - p0, p2 - p0);
      area[e] = 0.5 * a2;
      grad_lambda[e] = {Vec2{(p1.y - p2.y) / a2, (p2.x - p1.x) / a2}, Vec2{(p2.y - p0.y) / a2, (p0.x - p2.x) / a2},
                        Vec2{(p0.y - p1.y) / a2, (p1.x - p0.x) / a2}};
    }

    // Boundary conditions from the boundary edges (edges with one triangle).
    std::vector<char> vel_dir(n2, 0), pres_dir(n1, 0);
    boundary_x = Vec::Zero(n2);
    boundary_y = Vec::Zero(n2);
    boundary_p = Vec::Zero(n1);
    for (const auto& [key, count] : edge_count) {
      if (count != 1) continue;
      const int a = key.first, b = key.second;
      const Vec2 pa = verts[a], pb = verts[b];
      const bool outflow = std::abs(pa.x - length) < kGeomTol && std::abs(pb.x - length) < kGeomTol;
      if (outflow) {
        pres_dir[a] = pres_dir[b] = 1;
        continue;
      }
      const bool inflow = std::abs(pa.x) < kGeomTol && std::abs(pb.x) < kGeomTol;
      for (int d : {a, b, edge_dof(a, b)}) {
        vel_dir[d] = 1;
        if (inflow) boundary_x[d] = inflow_profile(dof_pos[d].y, peak).x;
      }
    }
    // Inflow values win at the inflow corners (both are zero there anyway).
    for (int d = 0; d < n2; ++d) {
      if (vel_dir[d] && std::abs(dof_pos[d].x) < kGeomTol) boundary_x[d] = inflow_profile(dof_pos[d].y, peak).x;
    }

    for (const auto& loop : mesh.obstacle_boundaries) {
      std::vector<std::array<int, 2>> seg;
      for (std::size_t i = 0; i < loop.size(); ++i) seg.push_back({loop[i], loop[(i + 1) % loop.size()]});
      obstacle_edges.push_back(std::move(seg));
    }

    assemble();

    tentative.setup(SpMat(m2 / dt + 0.5 * nu * k2), vel_dir);
    explicit_op = m2 / dt - 0.5 * nu * k2;
    pressure.setup(k1, pres_dir);
    correction.setup(m2, vel_dir);

    ux = boundary_x;
    uy = Vec::Zero(n2);
    p = Vec::Zero(n1);
  }

  void assemble() {
    const Quadrature& q = quadrature();
    Triplets tm2, tk2, tk1, tm1, tbx, tby, tgx, tgy;
    for (std::size_t e = 0; e < tris.size(); ++e) {
      const auto& d = dofs[e];
      const auto& gl = grad_lambda[e];
      const double a = area[e];
      double lm2[6][6] = {}, lk2[6][6] = {}, lbx[3][6] = {}, lby[3][6] = {}, lgx[6][3] = {}, lgy[6][3] = {};
      for (int qp = 0; qp < 7; ++qp) {
        const double w = q.weight[qp] * a;
        const auto& l = q.bary[qp];
        const auto phi = p2_values(l);
        const auto gphi = p2_gradients(l, gl);
        for (int i = 0; i < 6; ++i) {
          for (int j = 0; j < 6; ++j) {
            lm2[i][j] += w * phi[i] * phi[j];
            lk2[i][j] += w * dot(gphi[i], gphi[j]);
          }
          for (int k = 0; k < 3; ++k) {
            lbx[k][i] += w * l[k] * gphi[i].x;
            lby[k][i] += w * l[k] * gphi[i].y;
            lgx[i][k] += w * phi[i] * gl[k].x;
            lgy[i][k] += w * phi[i] * gl[k].y;
          }
        }
      }
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          tm2.emplace_back(d[i], d[j], lm2[i][j]);
          tk2.emplace_back(d[i], d[j], lk2[i][j]);
        }
        for (int k = 0; k < 3; ++k) {
          tbx.emplace_back(d[k], d[i], lbx[k][i]);
          tby.emplace_back(d[k], d[i], lby[k][i]);
          tgx.emplace_back(d[i], d[k], lgx[i][k]);
          tgy.emplace_back(d[i], d[k], lgy[i][k]);
        }
      }
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          tk1.emplace_back(d[i], d[j], a * dot(gl[i], gl[j]));
          tm1.emplace_back(d[i], d[j], a / 12.0 * (i == j ? 2.0 : 1.0));
        }
      }
    }
    auto make = [](int r, int c, const Triplets& t) {
      SpMat m(r, c);
      m.setFromTriplets(t.begin(), t.end());
      return m;
    };
    m2 = make(n2, n2, tm2);
    k2 = make(n2, n2, tk2);
    k1 = make(n1, n1, tk1);
    m1 = make(n1, n1, tm1);
    bx = make(n1, n2, tbx);
    by = make(n1, n2, tby);
    gx = make(n2, n1, tgx);
    gy = make(n2, n1, tgy);
  }

  void convection(Vec& nx, Vec& ny) const {
    const Quadrature& q = quadrature();
    nx.setZero(n2);
    ny.setZero(n2);
    for (std::size_t e = 0; e < tris.size(); ++e) {
      const auto& d = dofs[e];
      double lx[6], ly[6];
      for (int i = 0; i < 6; ++i) {
        lx[i] = ux[d[i]];
        ly[i] = uy[d[i]];
      }
      double rx[6] = {}, ry[6] = {};
      for (int qp = 0; qp < 7; ++qp) {
        const auto& l = q.bary[qp];
        const auto phi = p2_values(l);
        const auto gphi = p2_gradients(l, grad_lambda[e]);
        double u = 0, v = 0, uxx = 0, uxy = 0, uyx = 0, uyy = 0;
        for (int i = 0; i < 6; ++i) {
          u += phi[i] * lx[i];
          v += phi[i] * ly[i];
          uxx += gphi[i].x * lx[i];
          uxy += gphi[i].y * lx[i];
          uyx += gphi[i].x * ly[i];
          uyy += gphi[i].y * ly[i];
        }
        const double w = q.weight[qp] * area[e];
        const double cx = w * (u * uxx + v * uxy);
        const double cy = w * (u * uyx + v * uyy);
        for (int i = 0; i < 6; ++i) {
          rx[i] += cx * phi[i];
          ry[i] += cy * phi[i];
        }
      }
      for (int i = 0; i < 6; ++i) {
        nx[d[i]] += rx[i];
        ny[d[i]] += ry[i];
      }
    }
  }

  void step() {
    Vec nx, ny;
    convection(nx, ny);
    const Vec rhs_x = explicit_op * ux - nx + bx.transpose() * p;
    const Vec rhs_y = explicit_op * uy - ny + by.transpose() * p;
    const Vec sx = tentative.solve(rhs_x, boundary_x);
    const Vec sy = tentative.solve(rhs_y, boundary_y);

    const Vec rhs_p = k1 * p - (1.0 / dt) * (bx * sx + by * sy);
    const Vec p_new = pressure.solve(rhs_p, boundary_p);

    const Vec dp = p_new - p;
    ux = correction.solve(m2 * sx - dt * (gx * dp), boundary_x);
    uy = correction.solve(m2 * sy - dt * (gy * dp), boundary_y);
    p = p_new;
    t += dt;
    if (!all_finite(ux) || !all_finite(uy) || !all_finite(p)) {
      throw SolverError("non-finite field at t = " + std::to_string(t));
    }
  }

  // Triangle containing p, or the one whose clamped barycentric point is closest.
  std::pair<int, std::array<double, 3>> locate(Vec2 pt) const {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    std::array<double, 3> best_l{};
    for (std::size_t e = 0; e < tris.size(); ++e) {
      const Vec2 p0 = verts[tris[e][0]];
      std::array<double, 3> l{};
      l[1] = dot(grad_lambda[e][1], pt - p0);
      l[2] = dot(grad_lambda[e][2], pt - p0);
      l[0] = 1.0 - l[1] - l[2];
      const double score = std::min({l[0], l[1], l[2]});
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(e);
        best_l = l;
      }
      if (score >= 0.0) break;
    }
    if (best_score < 0.0) {
      double s = 0.0;
      for (double& v : best_l) s += (v = std::max(v, 0.0));
      for (double& v : best_l) v /= s;
    }
    return {best, best_l};
  }
};

void Trajectory::truncate(int count) {
  if (count < static_cast<int>(frames.size())) {
    frames.resize(count);
    times.resize(count);
  }
}

Vec2 inflow_profile(double y, double peak) {
  return {peak * 4.0 * y * (kChannelHeight - y) / (kChannelHeight * kChannelHeight), 0.0};
}

int substeps_per_frame(double peak, const SolverConfig& cfg) {
  const double dt = cfg.base_timestep * (cfg.base_peak / peak);
  return std::max(1, static_cast<int>(std::ceil(cfg.frame_interval / dt - 1e-9)));
}

double internal_timestep(double peak, const SolverConfig& cfg) {
  return cfg.frame_interval / substeps_per_frame(peak, cfg);
}

IpcsSolver::IpcsSolver(const Mesh& mesh, double channel_length, double inflow_peak, double dt, double viscosity)
    : impl_(std::make_unique<Impl>()) {
  if (!(viscosity > 0.0)) throw SolverError("viscosity must be positive");
  impl_->length = channel_length;
  impl_->peak = inflow_peak;
  impl_->dt = dt;
  impl_->nu = viscosity;
  impl_->build(mesh);
}

IpcsSolver::~IpcsSolver() = default;
IpcsSolver::IpcsSolver(IpcsSolver&&) noexcept = default;
IpcsSolver& IpcsSolver::operator=(IpcsSolver&&) noexcept = default;

void IpcsSolver::step() { impl_->step(); }
double IpcsSolver::time() const { return impl_->t; }
double IpcsSolver::dt() const { return impl_->dt; }
std::size_t IpcsSolver::num_velocity_dofs() const { return static_cast<std::size_t>(impl_->n2); }

std::vector<double> IpcsSolver::sample() const {
  std::vector<double> out(3 * static_cast<std::size_t>(impl_->n1));
  for (int i = 0; i < impl_->n1; ++i) {
    out[3 * i] = impl_->ux[i];
    out[3 * i + 1] = impl_->uy[i];
    out[3 * i + 2] = impl_->p[i];
  }
  return out;
}

double IpcsSolver::divergence_l2() const {
  const Impl& s = *impl_;
  if (!s.m1_solver) {
    s.m1_solver = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(s.m1);
  }
  const Vec div = s.bx * s.ux + s.by * s.uy;
  const Vec proj = s.m1_solver->solve(div);
  return std::sqrt(std::max(0.0, div.dot(proj)));
}

double IpcsSolver::velocity_l2() const {
  const Impl& s = *impl_;
  return std::sqrt(s.ux.dot(s.m2 * s.ux) + s.uy.dot(s.m2 * s.uy));
}

double IpcsSolver::poiseuille_error() const {
  const Impl& s = *impl_;
  Vec ex(s.n2);
  for (int d = 0; d < s.n2; ++d) ex[d] = inflow_profile(s.dof_pos[d].y, s.peak).x;
  const Vec ex_err = s.ux - ex;
  const double err2 = ex_err.dot(s.m2 * ex_err) + s.uy.dot(s.m2 * s.uy);
  return std::sqrt(err2 / ex.dot(s.m2 * ex));
}

Forces IpcsSolver::obstacle_forces(std::size_t index) const {
  const Impl& s = *impl_;
  Forces f;
  if (index >= s.obstacle_edges.size()) return f;
  // 3-point Gauss-Legendre on [0, 1].
  const std::array<double, 3> gp = {0.5 - std::sqrt(0.15), 0.5, 0.5 + std::sqrt(0.15)};
  const std::array<double, 3> gw = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  for (const auto& edge : s.obstacle_edges[index]) {
    auto it = s.edge_triangle.find({edge[0], edge[1]});
    if (it == s.edge_triangle.end()) it = s.edge_triangle.find({edge[1], edge[0]});
    if (it == s.edge_triangle.end()) continue;
    const int e = it->second;
    const auto& tr = s.tris[e];
    int ia = 0, ib = 0, ic = 0;
    for (int k = 0; k < 3; ++k) {
      if (tr[k] == edge[0]) ia = k;
      else if (tr[k] == edge[1]) ib = k;
      else ic = k;
    }
    const Vec2 pa = s.verts[edge[0]], pb = s.verts[edge[1]];
    const Vec2 tangent = pb - pa;
    const double len = norm(tangent);
    Vec2 n{tangent.y / len, -tangent.x / len};
    // Outward from the fluid: away from the triangle's third vertex.
    if (dot(n, s.verts[tr[ic]] - pa) > 0.0) n = -1.0 * n;
    for (int g = 0; g < 3; ++g) {
      std::array<double, 3> l{};
      l[ia] = 1.0 - gp[g];
      l[ib] = gp[g];
      l[ic] = 0.0;
      const auto gphi = p2_gradients(l, s.grad_lambda[e]);
      double pr = 0.0;
      for (int k = 0; k < 3; ++k) pr += l[k] * s.p[tr[k]];
      Vec2 gux{}, guy{};
      for (int i = 0; i < 6; ++i) {
        gux = gux + s.ux[s.dofs[e][i]] * gphi[i];
        guy = guy + s.uy[s.dofs[e][i]] * gphi[i];
      }
      const double w = gw[g] * len;
      // Force on the body: integral of (p n - nu grad(u) n) with n leaving the fluid.
      f.drag += w * (pr * n.x - s.nu * dot(gux, n));
      f.lift += w * (pr * n.y - s.nu * dot(guy, n));
    }
  }
  return f;
}

double IpcsSolver::pressure_at(Vec2 pt) const {
  const auto [e, l] = impl_->locate(pt);
  double v = 0.0;
  for (int k = 0; k < 3; ++k) v += l[k] * impl_->p[impl_->tris[e][k]];
  return v;
}

Trajectory solve_trajectory(const Mesh& mesh, const DomainSpec& spec, const SolverConfig& cfg) {
  const int sub = substeps_per_frame(spec.inflow_peak, cfg);
  IpcsSolver solver(mesh, spec.channel_length, spec.inflow_peak, cfg.frame_interval / sub, cfg.viscosity);
  Trajectory traj;
  traj.mesh = mesh;
  traj.domain = spec;
  traj.frame_interval = cfg.frame_interval;
  traj.frames.reserve(cfg.frames);
  for (int j = 1; j <= cfg.frames; ++j) {
    for (int s = 0; s < sub; ++s) solver.step();
    traj.times.push_back(j * cfg.frame_interval);
    traj.frames.push_back(solver.sample());
  }
  return traj;
}

QoiResult compute_qoi(std::span<const QoiSample> samples, double mean_velocity, double diameter) {
  if (samples.size() < 3) throw std::invalid_argument("compute_qoi: too few samples");
  double lo = samples[0].lift_coefficient, hi = lo;
  for (const auto& s : samples) {
    lo = std::min(lo, s.lift_coefficient);
    hi = std::max(hi, s.lift_coefficient);
  }
  const double threshold = 0.5 * (lo + hi);
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
    const double c = samples[i].lift_coefficient;
    if (c > threshold && c > samples[i - 1].lift_coefficient && c >= samples[i + 1].lift_coefficient) {
      peaks.push_back(i);
    }
  }
  if (peaks.size() < 2) throw std::invalid_argument("compute_qoi: window shorter than one lift period");
  const std::size_t i0 = peaks[peaks.size() - 2], i1 = peaks.back();
  QoiResult r;
  r.window_start = samples[i0].t;
  r.window_end = samples[i1].t;
  r.max_drag = -std::numeric_limits<double>::infinity();
  r.max_lift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = i0; i <= i1; ++i) {
    r.max_drag = std::max(r.max_drag, samples[i].drag_coefficient);
    r.max_lift = std::max(r.max_lift, samples[i].lift_coefficient);
  }
  const double mid = 0.5 * (r.window_start + r.window_end);
  for (std::size_t i = i0; i < i1; ++i) {
    if (samples[i].t <= mid && mid <= samples[i + 1].t) {
      const double span = samples[i + 1].t - samples[i].t;
      const double w = span > 0.0 ? (mid - samples[i].t) / span : 0.0;
      r.pressure_difference = (1 - w) * samples[i].pressure_difference + w * samples[i + 1].pressure_difference;
      break;
    }
  }
  r.frequency = 1.0 / (r.window_end - r.window_start);
  r.strouhal = r.frequency * diameter / mean_velocity;
  return r;
}

std::vector<QoiSample> run_benchmark(const QoiRunOptions& opts, const std::function<void(double)>& progress) {
  DomainSpec spec;
  spec.channel_length = kBenchmarkChannelLength;
  spec.inflow_peak = opts.inflow_peak;
  ObstacleSpec c;
  c.kind = ObstacleKind::circle;
  c.center = {0.2, 0.2};
  c.radius = 0.05;
  spec.obstacles.push_back(c);
  const Mesh mesh = triangulate(spec, opts.mesher);
  IpcsSolver solver(mesh, spec.channel_length, spec.inflow_peak, internal_timestep(spec.inflow_peak, opts.solver),
                    opts.solver.viscosity);
  const double mean_velocity = 2.0 * opts.inflow_peak / 3.0;
  const double diameter = 2.0 * c.radius;
  const double scale = 2.0 / (mean_velocity * mean_velocity * diameter);
  std::vector<QoiSample> out;
  const long steps = std::lround(opts.end_time / solver.dt());
  for (long n = 0; n < steps; ++n) {
    solver.step();
    if (solver.time() + 0.5 * solver.dt() < opts.record_from) continue;
    const Forces f = solver.obstacle_forces(0);
    out.push_back({solver.time(), scale * f.drag, scale * f.lift,
                   solver.pressure_at({0.15, 0.2}) - solver.pressure_at({0.25, 0.2})});
    if (progress && n % 1000 == 0) progress(solver.time());
  }
  return out;
}

}  // namespace mgn
