#include "mgn/mesher.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>
#include <queue>
#include <unordered_map>

namespace mgn {

namespace {

constexpr double kOnBoundaryTol = 1e-9;
constexpr double kMinArea = 1e-10;

double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

// > 0 iff d lies strictly inside the circumcircle of the ccw triangle abc.
double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = dot(ab, ab);
  const double ac2 = dot(ac, ac);
  return a + Vec2{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (a + t * ab));
}

double polygon_distance(Vec2 p, const std::vector<Vec2>& poly) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    d = std::min(d, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  }
  return d;
}

bool inside_convex_ccw(Vec2 p, const std::vector<Vec2>& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (orient(poly[i], poly[(i + 1) % poly.size()], p) <= 0.0) return false;
  }
  return true;
}

double triangle_min_angle(Vec2 a, Vec2 b, Vec2 c) {
  const double la = norm(b - c), lb = norm(c - a), lc = norm(a - b);
  auto angle = [](double opp, double s1, double s2) {
    return std::acos(std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0));
  };
  return std::min({angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)});
}

// Boundary tags carried by segments and their vertices.
enum Tag : int { kInterior = -1, kBottom = 0, kOutflow = 1, kTop = 2, kInflow = 3, kFirstObstacle = 4 };

struct Segment {
  int a, b;
  int tag;
  bool alive = true;
};

// Incremental Delaunay triangulation with Ruppert-style refinement. Boundary
// segments are protected by splitting every encroached segment, so the final
// triangulation conforms to them without constrained edges.
class Refiner {
 public:
  Refiner(const DomainSpec& spec, const MesherOptions& opts) : spec_(spec), opts_(opts) {
    for (const auto& obs : spec.obstacles) outlines_.push_back(obstacle_polygon(obs, opts.near_size));
    length_ = spec.channel_length;
    init_super_triangle();
  }

  Mesh run() {
    insert_boundary();
    refine();
    return extract();
  }

 private:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nbr;  // nbr[i] is across the edge opposite v[i]
    bool alive = true;
  };

  const DomainSpec& spec_;
  MesherOptions opts_;
  double length_ = kChannelLength;
  std::vector<std::vector<Vec2>> outlines_;
  std::vector<Vec2> pts_;
  std::vector<int> vtag_;
  std::vector<Tri> tris_;
  std::vector<int> free_tris_;
  std::vector<int> vert_tri_;
  std::vector<Segment> segs_;
  int last_tri_ = 0;

  // Scratch for insertion.
  std::vector<int> cavity_;
  std::vector<int> mark_;
  int mark_epoch_ = 0;

  [[noreturn]] void fail(const std::string& what) const { throw MeshingError(what, spec_); }

  void init_super_triangle() {
    const Vec2 c{0.5 * length_, 0.5 * kChannelHeight};
    const double r = 20.0 * std::max(length_, kChannelHeight);
    for (int k = 0; k < 3; ++k) {
      const double a = 0.5 * std::numbers::pi + k * 2.0 * std::numbers::pi / 3.0;
      pts_.push_back(c + Vec2{r * std::cos(a), r * std::sin(a)});
      vtag_.push_back(kInterior);
      vert_tri_.push_back(0);
    }
    tris_.push_back(Tri{{0, 1, 2}, {-1, -1, -1}});
  }

  Vec2 P(int i) const { return pts_[i]; }

  int new_tri(const Tri& t) {
    if (!free_tris_.empty()) {
      const int id = free_tris_.back();
      free_tris_.pop_back();
      tris_[id] = t;
      return id;
    }
    tris_.push_back(t);
    return static_cast<int>(tris_.size()) - 1;
  }

  int locate(Vec2 p) const {
    int t = last_tri_;
    if (!tris_[t].alive) {
      t = 0;
      while (!tris_[t].alive) ++t;
    }
    for (std::size_t guard = 0; guard < 4 * tris_.size() + 16; ++guard) {
      const Tri& tri = tris_[t];
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = (k + static_cast<int>(guard)) % 3;
        const Vec2 a = P(tri.v[(i + 1) % 3]);
        const Vec2 b = P(tri.v[(i + 2) % 3]);
        if (orient(a, b, p) < 0.0) {
          if (tri.nbr[i] < 0) return -1;
          t = tri.nbr[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    return -1;
  }

  // Bowyer-Watson insertion; returns the new vertex id.
  int insert_point(Vec2 p, int tag) {
    const int start = locate(p);
    if (start < 0) fail("point location failed");
    const int pid = static_cast<int>(pts_.size());
    for (int v : tris_[start].v) {
      if (norm(P(v) - p) < 1e-13) fail("duplicate vertex insertion");
    }
    pts_.push_back(p);
    vtag_.push_back(tag);
    vert_tri_.push_back(-1);

    ++mark_epoch_;
    if (mark_.size() < tris_.size()) mark_.resize(tris_.size() + 1024, 0);
    cavity_.clear();
    cavity_.push_back(start);
    mark_[start] = mark_epoch_;
    for (std::size_t q = 0; q < cavity_.size(); ++q) {
      const Tri& t = tris_[cavity_[q]];
      for (int n : t.nbr) {
        if (n < 0 || mark_[n] == mark_epoch_) continue;
        const Tri& nt = tris_[n];
        if (incircle(P(nt.v[0]), P(nt.v[1]), P(nt.v[2]), p) > 0.0) {
          mark_[n] = mark_epoch_;
          cavity_.push_back(n);
        }
      }
    }

    struct Rim {
      int a, b, outside;
    };
    std::vector<Rim> rim;
    for (int c : cavity_) {
      const Tri& t = tris_[c];
      for (int i = 0; i < 3; ++i) {
        const int n = t.nbr[i];
        if (n >= 0 && mark_[n] == mark_epoch_) continue;
        rim.push_back({t.v[(i + 1) % 3], t.v[(i + 2) % 3], n});
      }
    }
    for (const Rim& r : rim) {
      if (orient(P(r.a), P(r.b), p) <= 0.0) fail("degenerate cavity during insertion");
    }
    for (int c : cavity_) {
      tris_[c].alive = false;
      free_tris_.push_back(c);
    }

    // New triangle (a, b, p): nbr[2] is the outside triangle across a-b,
    // nbr[0] the new triangle across b-p, nbr[1] the new triangle across p-a.
    std::unordered_map<int, int> by_start;
    std::vector<int> created;
    created.reserve(rim.size());
    for (const Rim& r : rim) {
      const int id = new_tri(Tri{{r.a, r.b, pid}, {-1, -1, r.outside}});
      if (r.outside >= 0) {
        Tri& o = tris_[r.outside];
        for (int k = 0; k < 3; ++k) {
          if (o.v[(k + 1) % 3] == r.b && o.v[(k + 2) % 3] == r.a) o.nbr[k] = id;
        }
      }
      by_start[r.a] = id;
      created.push_back(id);
    }
    for (int id : created) tris_[id].nbr[0] = by_start.at(tris_[id].v[1]);
    for (int id : created) tris_[tris_[id].nbr[0]].nbr[1] = id;
    for (int id : created) {
      for (int v : tris_[id].v) vert_tri_[v] = id;
    }
    last_tri_ = created.front();
    return pid;
  }

  // Triangle containing directed edge a->b (ccw), or -1.
  int find_edge(int a, int b, int* edge_index) const {
    int t = vert_tri_[a];
    if (t < 0 || !tris_[t].alive) return -1;
    const int first = t;
    do {
      const Tri& tri = tris_[t];
      int ia = 0;
      while (tri.v[ia] != a) ++ia;
      if (tri.v[(ia + 1) % 3] == b) {
        if (edge_index) *edge_index = (ia + 2) % 3;
        return t;
      }
      // rotate clockwise around a: cross the edge (a, v[ia+1])
      t = tri.nbr[(ia + 2) % 3];
    } while (t >= 0 && t != first);
    return -1;
  }

  bool in_diametral_circle(const Segment& s, Vec2 p) const {
    const Vec2 a = P(s.a), b = P(s.b);
    return dot(a - p, b - p) < 0.0;
  }

  bool encroached(const Segment& s) const {
    int k = 0;
    const int t1 = find_edge(s.a, s.b, &k);
    if (t1 < 0) return true;
    if (in_diametral_circle(s, P(tris_[t1].v[k]))) return true;
    int k2 = 0;
    const int t2 = find_edge(s.b, s.a, &k2);
    if (t2 < 0) return true;
    return in_diametral_circle(s, P(tris_[t2].v[k2]));
  }

  void split_segment(int si) {
    const Segment s = segs_[si];
    const Vec2 m = 0.5 * (P(s.a) + P(s.b));
    const int mid = insert_point(m, s.tag);
    segs_[si].alive = false;
    segs_.push_back({s.a, mid, s.tag});
    segs_.push_back({mid, s.b, s.tag});
    if (pts_.size() > opts_.max_vertices) fail("vertex budget exhausted while splitting segments");
  }

  void split_encroached_segments() {
    std::deque<int> queue;
    for (int i = 0; i < static_cast<int>(segs_.size()); ++i) {
      if (segs_[i].alive) queue.push_back(i);
    }
    while (!queue.empty()) {
      const int si = queue.front();
      queue.pop_front();
      if (!segs_[si].alive || !encroached(segs_[si])) continue;
      const std::size_t before = segs_.size();
      split_segment(si);
      const Vec2 m = P(static_cast<int>(pts_.size()) - 1);
      for (std::size_t k = before; k < segs_.size(); ++k) queue.push_back(static_cast<int>(k));
      for (int j = 0; j < static_cast<int>(before); ++j) {
        if (segs_[j].alive && in_diametral_circle(segs_[j], m)) queue.push_back(j);
      }
    }
  }

  void add_loop(const std::vector<Vec2>& loop, int tag) {
    std::vector<int> ids;
    for (Vec2 p : loop) ids.push_back(insert_point(p, tag));
    for (std::size_t i = 0; i < ids.size(); ++i) segs_.push_back({ids[i], ids[(i + 1) % ids.size()], tag});
  }

  void insert_boundary() {
    const double h = opts_.far_size;
    auto edge_points = [h](Vec2 a, Vec2 b) {
      const int n = std::max(1, static_cast<int>(std::ceil(norm(b - a) / h - 1e-9)));
      std::vector<Vec2> out;
      for (int k = 0; k < n; ++k) out.push_back(a + (static_cast<double>(k) / n) * (b - a));
      return out;
    };
    const Vec2 c0{0.0, 0.0}, c1{length_, 0.0}, c2{length_, kChannelHeight}, c3{0.0, kChannelHeight};
    const std::array<std::pair<Vec2, Vec2>, 4> sides = {{{c0, c1}, {c1, c2}, {c2, c3}, {c3, c0}}};
    const std::array<int, 4> tags = {kBottom, kOutflow, kTop, kInflow};
    std::vector<int> ids;
    std::vector<int> seg_tags;
    for (int s = 0; s < 4; ++s) {
      for (Vec2 p : edge_points(sides[s].first, sides[s].second)) {
        ids.push_back(insert_point(p, tags[s]));
        seg_tags.push_back(tags[s]);
      }
    }
    for (std::size_t i = 0; i < ids.size(); ++i) segs_.push_back({ids[i], ids[(i + 1) % ids.size()], seg_tags[i]});
    for (std::size_t k = 0; k < outlines_.size(); ++k) add_loop(outlines_[k], kFirstObstacle + static_cast<int>(k));
  }

  bool in_domain(Vec2 p) const {
    if (p.x <= 0.0 || p.x >= length_ || p.y <= 0.0 || p.y >= kChannelHeight) return false;
    for (const auto& poly : outlines_) {
      if (inside_convex_ccw(p, poly)) return false;
    }
    return true;
  }

  bool tri_in_domain(const Tri& t) const {
    if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3) return false;
    return in_domain((1.0 / 3.0) * (P(t.v[0]) + P(t.v[1]) + P(t.v[2])));
  }

  double size_at(Vec2 p) const { return target_size(p, outlines_, opts_); }

  bool is_bad(const Tri& t) const {
    const Vec2 a = P(t.v[0]), b = P(t.v[1]), c = P(t.v[2]);
    const double longest = std::max({norm(b - a), norm(c - b), norm(a - c)});
    if (longest > opts_.size_factor * size_at((1.0 / 3.0) * (a + b + c))) return true;
    return triangle_min_angle(a, b, c) < opts_.min_angle_deg * std::numbers::pi / 180.0;
  }

  void refine() {
    split_encroached_segments();
    std::deque<std::array<int, 4>> queue;  // tri id + vertex snapshot
    auto enqueue_if_bad = [&](int id) {
      const Tri& t = tris_[id];
      if (t.alive && tri_in_domain(t) && is_bad(t)) queue.push_back({id, t.v[0], t.v[1], t.v[2]});
    };
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) enqueue_if_bad(i);

    while (!queue.empty()) {
      const auto item = queue.front();
      queue.pop_front();
      const Tri& t = tris_[item[0]];
      if (!t.alive || t.v[0] != item[1] || t.v[1] != item[2] || t.v[2] != item[3]) continue;
      if (!is_bad(t)) continue;
      const Vec2 cc = circumcenter(P(t.v[0]), P(t.v[1]), P(t.v[2]));

      bool split_any = false;
      const int nseg = static_cast<int>(segs_.size());
      for (int s = 0; s < nseg; ++s) {
        if (segs_[s].alive && in_diametral_circle(segs_[s], cc)) {
          split_segment(s);
          split_any = true;
        }
      }
      if (split_any) {
        split_encroached_segments();
        requeue_all(queue, enqueue_if_bad);
        continue;
      }
      if (!in_domain(cc)) continue;
      insert_point(cc, kInterior);
      if (pts_.size() > opts_.max_vertices) fail("vertex budget exhausted during refinement");
      const int pid = static_cast<int>(pts_.size()) - 1;
      enqueue_star(pid, enqueue_if_bad);
    }

    // Every segment must now be an edge of the triangulation.
    for (const auto& s : segs_) {
      if (s.alive && find_edge(s.a, s.b, nullptr) < 0 && find_edge(s.b, s.a, nullptr) < 0) {
        fail("boundary segment missing after refinement");
      }
    }
  }

  template <class F>
  void enqueue_star(int v, F&& enqueue) {
    const int first = vert_tri_[v];
    int t = first;
    do {
      enqueue(t);
      const Tri& tri = tris_[t];
      int iv = 0;
      while (tri.v[iv] != v) ++iv;
      t = tri.nbr[(iv + 2) % 3];
    } while (t >= 0 && t != first);
  }

  template <class Q, class F>
  void requeue_all(Q& queue, F&& enqueue) {
    queue.clear();
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) enqueue(i);
  }

  Mesh extract() {
    Mesh mesh;
    std::vector<int> remap(pts_.size(), -1);
    for (const Tri& t : tris_) {
      if (!t.alive || !tri_in_domain(t)) continue;
      std::array<int, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        int& r = remap[t.v[k]];
        if (r < 0) {
          r = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(P(t.v[k]));
        }
        tri[k] = r;
      }
      if (signed_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]) <= kMinArea) {
        fail("degenerate triangle in output");
      }
      mesh.triangles.push_back(tri);
    }
    // Obstacle loops from the surviving segments, walked from a start vertex.
    mesh.obstacle_boundaries.resize(outlines_.size());
    for (std::size_t k = 0; k < outlines_.size(); ++k) {
      std::unordered_map<int, int> next;
      for (const auto& s : segs_) {
        if (s.alive && s.tag == kFirstObstacle + static_cast<int>(k)) next[s.a] = s.b;
      }
      if (next.empty()) fail("obstacle outline lost");
      const int start = next.begin()->first;
      int v = start;
      do {
        if (remap[v] < 0) fail("obstacle vertex not in mesh");
        mesh.obstacle_boundaries[k].push_back(remap[v]);
        v = next.at(v);
      } while (v != start && mesh.obstacle_boundaries[k].size() <= next.size());
    }
    mesh.node_type = classify_nodes(mesh.vertices, spec_, opts_);
    // Cross-check with the construction tags.
    for (std::size_t old = 3; old < pts_.size(); ++old) {
      const int r = remap[old];
      if (r < 0) continue;
      const bool tagged = vtag_[old] != kInterior;
      const bool typed = mesh.node_type[r] != NodeType::fluid;
      if (tagged != typed) fail("vertex classification disagrees with boundary construction");
    }
    return mesh;
  }
};

}  // namespace

MeshingError::MeshingError(const std::string& what, const DomainSpec& spec)
    : std::runtime_error("meshing failed: " + what), spec_(spec) {}

double signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * orient(a, b, c); }

double target_size(Vec2 p, const std::vector<std::vector<Vec2>>& obstacle_outlines, const MesherOptions& opts) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& poly : obstacle_outlines) d = std::min(d, polygon_distance(p, poly));
  if (!std::isfinite(d)) return opts.far_size;
  return std::min(opts.far_size, opts.near_size + opts.grading * d);
}

Mesh triangulate(const DomainSpec& spec, const MesherOptions& opts) {
  if (!validate_clearance(spec)) throw MeshingError("domain violates wall clearance", spec);
  Refiner refiner(spec, opts);
  return refiner.run();
}

std::vector<NodeType> classify_nodes(std::span<const Vec2> vertices, const DomainSpec& spec,
                                     const MesherOptions& opts) {
  std::vector<std::vector<Vec2>> outlines;
  for (const auto& obs : spec.obstacles) outlines.push_back(obstacle_polygon(obs, opts.near_size));
  std::vector<NodeType> types(vertices.size(), NodeType::fluid);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec2 p = vertices[i];
    if (std::abs(p.x) <= kOnBoundaryTol) {
      types[i] = NodeType::inflow;
    } else if (std::abs(p.x - spec.channel_length) <= kOnBoundaryTol) {
      types[i] = NodeType::outflow;
    } else if (std::abs(p.y) <= kOnBoundaryTol || std::abs(p.y - kChannelHeight) <= kOnBoundaryTol) {
      types[i] = NodeType::wall;
    } else {
      for (const auto& poly : outlines) {
        if (polygon_distance(p, poly) <= kOnBoundaryTol) {
          types[i] = NodeType::wall;
          break;
        }
      }
    }
  }
  return types;
}

MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s;
  s.vertices = mesh.vertices.size();
  s.cells = mesh.triangles.size();
  s.min_angle_deg = 180.0;
  s.min_edge = std::numeric_limits<double>::infinity();
  s.max_edge = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec2 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
    s.min_angle_deg = std::min(s.min_angle_deg, triangle_min_angle(a, b, c) * 180.0 / std::numbers::pi);
    for (double l : {norm(b - a), norm(c - b), norm(a - c)}) {
      s.min_edge = std::min(s.min_edge, l);
      s.max_edge = std::max(s.max_edge, l);
    }
  }
  if (mesh.triangles.empty()) s.min_edge = 0.0;
  return s;
}

std::vector<std::array<int, 2>> undirected_edges(const Mesh& mesh) {
  std::vector<std::array<int, 2>> edges;
  edges.reserve(3 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.push_back({a, b});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

void write_mesh_text(const Mesh& mesh, std::ostream& os) {
  os.precision(17);
  os << "mesh " << mesh.vertices.size() << ' ' << mesh.triangles.size() << '\n';
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    os << mesh.vertices[i].x << ' ' << mesh.vertices[i].y << ' ' << static_cast<int>(mesh.node_type[i]) << '\n';
  }
  for (const auto& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace mgn
