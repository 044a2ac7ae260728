#include "mgn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mgn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxRejections = 10000;
constexpr double kClearanceSlack = 1e-12;

Vec2 rotate(Vec2 p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

// Corners of a polygonal obstacle, counter-clockwise.
std::vector<Vec2> polygon_corners(const ObstacleSpec& obs) {
  std::vector<Vec2> pts;
  if (obs.kind == ObstacleKind::rectangle) {
    const double hx = 0.5 * obs.side_x;
    const double hy = 0.5 * obs.side_y;
    for (Vec2 p : {Vec2{-hx, -hy}, Vec2{hx, -hy}, Vec2{hx, hy}, Vec2{-hx, hy}}) {
      pts.push_back(obs.center + rotate(p, obs.angle));
    }
  } else if (obs.kind == ObstacleKind::triangle) {
    const double circumradius = obs.side / std::sqrt(3.0);
    for (int k = 0; k < 3; ++k) {
      const double a = obs.angle + 0.5 * std::numbers::pi + k * kTwoPi / 3.0;
      const Vec2 p{circumradius * std::cos(a), circumradius * std::sin(a)};
      pts.push_back(obs.center + Vec2{p.x * obs.stretch, p.y / obs.stretch});
    }
  } else {
    throw std::logic_error("polygon_corners: curved obstacle");
  }
  return pts;
}

double ellipse_perimeter(double a, double b) {
  const double h = (a - b) * (a - b) / ((a + b) * (a + b));
  return std::numbers::pi * (a + b) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
}

// Splits every edge of a closed polygon into pieces no longer than max_segment.
std::vector<Vec2> subdivide(const std::vector<Vec2>& poly, double max_segment) {
  std::vector<Vec2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    const int pieces = std::max(1, static_cast<int>(std::ceil(norm(b - a) / max_segment - 1e-9)));
    for (int k = 0; k < pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

bool boxes_disjoint(const Box& a, const Box& b) {
  return a.xmax < b.xmin || b.xmax < a.xmin || a.ymax < b.ymin || b.ymax < a.ymin;
}

Vec2 sample_center(Rng& rng, double x_shift) {
  const double x = uniform(rng, 0.15, 0.5) + x_shift;
  const double y = uniform(rng, 0.1, 0.3);
  return {x, y};
}

ObstacleSpec sample_circle(Rng& rng, double x_shift) {
  ObstacleSpec o;
  o.kind = ObstacleKind::circle;
  o.center = sample_center(rng, x_shift);
  o.radius = uniform(rng, 0.02, 0.08);
  return o;
}

ObstacleSpec sample_ellipse(Rng& rng, double x_shift) {
  ObstacleSpec o;
  o.kind = ObstacleKind::ellipse;
  o.center = sample_center(rng, x_shift);
  o.half_height = uniform(rng, 0.02, 0.08);
  o.half_width = uniform(rng, 0.02, 0.08);
  return o;
}

ObstacleSpec sample_rectangle(Rng& rng, double x_shift, bool stretched) {
  const double lo = 0.02 * std::numbers::sqrt2;
  const double hi = 0.08 * std::numbers::sqrt2;
  ObstacleSpec o;
  o.kind = ObstacleKind::rectangle;
  o.center = sample_center(rng, x_shift);
  o.side_x = uniform(rng, lo, hi);
  o.side_y = stretched ? uniform(rng, lo, hi) : o.side_x;
  o.angle = uniform(rng, 0.0, kTwoPi);
  return o;
}

ObstacleSpec sample_triangle(Rng& rng, double x_shift, bool stretched) {
  ObstacleSpec o;
  o.kind = ObstacleKind::triangle;
  o.center = sample_center(rng, x_shift);
  o.side = uniform(rng, 0.078, 0.182);
  o.angle = uniform(rng, 0.0, kTwoPi);
  o.stretch = stretched ? uniform(rng, 0.7, 1.3) : 1.0;
  return o;
}

// One obstacle of the three-shape families; `stretched` selects the
// mixed_all variants.
ObstacleSpec sample_shape(Rng& rng, double x_shift, bool stretched) {
  const int choice = std::uniform_int_distribution<int>(0, 2)(rng);
  switch (choice) {
    case 0:
      return stretched ? sample_ellipse(rng, x_shift) : sample_circle(rng, x_shift);
    case 1:
      return sample_rectangle(rng, x_shift, stretched);
    default:
      return sample_triangle(rng, x_shift, stretched);
  }
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

DomainSpec draw_once(DatasetFamily family, Rng& rng) {
  DomainSpec spec;
  spec.family = family;
  spec.inflow_peak = uniform(rng, 0.25, 2.25);
  switch (family) {
    case DatasetFamily::standard_cylinder:
      spec.obstacles.push_back(sample_circle(rng, 0.0));
      break;
    case DatasetFamily::cylinder_stretch:
      spec.obstacles.push_back(sample_ellipse(rng, 0.0));
      break;
    case DatasetFamily::cylinder_tri_quad:
      spec.obstacles.push_back(sample_shape(rng, 0.0, false));
      break;
    case DatasetFamily::two_cylinders:
      spec.obstacles.push_back(sample_circle(rng, 0.0));
      if (coin(rng, 0.5)) spec.obstacles.push_back(sample_circle(rng, 0.5));
      break;
    case DatasetFamily::mixed_all:
      spec.obstacles.push_back(sample_shape(rng, 0.0, true));
      if (coin(rng, 0.25)) spec.obstacles.push_back(sample_shape(rng, 0.5, true));
      break;
  }
  return spec;
}

std::string_view kind_name(ObstacleKind k) {
  switch (k) {
    case ObstacleKind::circle: return "circle";
    case ObstacleKind::ellipse: return "ellipse";
    case ObstacleKind::rectangle: return "rectangle";
    case ObstacleKind::triangle: return "triangle";
  }
  return "?";
}

ObstacleKind parse_kind(const std::string& s) {
  for (ObstacleKind k : {ObstacleKind::circle, ObstacleKind::ellipse, ObstacleKind::rectangle, ObstacleKind::triangle}) {
    if (kind_name(k) == s) return k;
  }
  throw std::runtime_error("unknown obstacle kind: " + s);
}

}  // namespace

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

std::string_view family_name(DatasetFamily f) {
  switch (f) {
    case DatasetFamily::standard_cylinder: return "standard_cylinder";
    case DatasetFamily::cylinder_stretch: return "cylinder_stretch";
    case DatasetFamily::cylinder_tri_quad: return "cylinder_tri_quad";
    case DatasetFamily::two_cylinders: return "2cylinders";
    case DatasetFamily::mixed_all: return "mixed_all";
  }
  return "?";
}

std::optional<DatasetFamily> parse_family(std::string_view name) {
  for (DatasetFamily f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

Box bounding_box(const ObstacleSpec& obs) {
  switch (obs.kind) {
    case ObstacleKind::circle:
      return {obs.center.x - obs.radius, obs.center.y - obs.radius, obs.center.x + obs.radius,
              obs.center.y + obs.radius};
    case ObstacleKind::ellipse:
      return {obs.center.x - obs.half_width, obs.center.y - obs.half_height, obs.center.x + obs.half_width,
              obs.center.y + obs.half_height};
    default: {
      Box b{1e300, 1e300, -1e300, -1e300};
      for (Vec2 p : polygon_corners(obs)) {
        b.xmin = std::min(b.xmin, p.x);
        b.ymin = std::min(b.ymin, p.y);
        b.xmax = std::max(b.xmax, p.x);
        b.ymax = std::max(b.ymax, p.y);
      }
      return b;
    }
  }
}

double obstacle_perimeter(const ObstacleSpec& obs) {
  switch (obs.kind) {
    case ObstacleKind::circle:
      return kTwoPi * obs.radius;
    case ObstacleKind::ellipse:
      return ellipse_perimeter(obs.half_width, obs.half_height);
    default: {
      const auto pts = polygon_corners(obs);
      double p = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) p += norm(pts[(i + 1) % pts.size()] - pts[i]);
      return p;
    }
  }
}

std::vector<Vec2> obstacle_polygon(const ObstacleSpec& obs, double max_segment) {
  if (obs.kind == ObstacleKind::rectangle || obs.kind == ObstacleKind::triangle) {
    return subdivide(polygon_corners(obs), max_segment);
  }
  const double a = obs.kind == ObstacleKind::circle ? obs.radius : obs.half_width;
  const double b = obs.kind == ObstacleKind::circle ? obs.radius : obs.half_height;
  const int n = std::max(16, static_cast<int>(std::ceil(obstacle_perimeter(obs) / max_segment)));
  std::vector<Vec2> pts;
  pts.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double t = kTwoPi * k / n;
    pts.push_back({obs.center.x + a * std::cos(t), obs.center.y + b * std::sin(t)});
  }
  // Eccentric ellipses get uneven chords from uniform parameter spacing.
  return subdivide(pts, max_segment);
}

bool validate_clearance(const DomainSpec& spec) {
  const double lo = kWallClearance - kClearanceSlack;
  std::vector<Box> boxes;
  for (const auto& obs : spec.obstacles) {
    const Box b = bounding_box(obs);
    if (b.xmin < lo || b.ymin < lo) return false;
    if (spec.channel_length - b.xmax < lo || kChannelHeight - b.ymax < lo) return false;
    for (const Box& other : boxes) {
      if (!boxes_disjoint(b, other)) return false;
    }
    boxes.push_back(b);
  }
  return true;
}

DomainSpec sample_geometry(DatasetFamily family, Rng& rng) {
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    DomainSpec spec = draw_once(family, rng);
    if (validate_clearance(spec)) return spec;
  }
  throw std::runtime_error("sample_geometry: no valid placement after 10000 draws for family " +
                           std::string(family_name(family)));
}

DomainSpec sample_geometry(DatasetFamily family, std::uint64_t seed, std::uint64_t index) {
  Rng rng = make_rng(seed, index);
  DomainSpec spec = sample_geometry(family, rng);
  spec.seed = derive_seed(seed, index);
  return spec;
}

DomainSpec reference_domain(double inflow_peak) {
  DomainSpec spec;
  ObstacleSpec c;
  c.kind = ObstacleKind::circle;
  c.center = {0.325, 0.2};
  c.radius = 0.05;
  spec.obstacles.push_back(c);
  spec.inflow_peak = inflow_peak;
  return spec;
}

void to_json(nlohmann::json& j, const DomainSpec& spec) {
  j = nlohmann::json::object();
  j["family"] = std::string(family_name(spec.family));
  j["inflow_peak"] = spec.inflow_peak;
  j["seed"] = spec.seed;
  j["channel_length"] = spec.channel_length;
  j["obstacles"] = nlohmann::json::array();
  for (const auto& o : spec.obstacles) {
    nlohmann::json jo{{"kind", std::string(kind_name(o.kind))},
                      {"center", {o.center.x, o.center.y}},
                      {"radius", o.radius},
                      {"half_width", o.half_width},
                      {"half_height", o.half_height},
                      {"side_x", o.side_x},
                      {"side_y", o.side_y},
                      {"side", o.side},
                      {"angle", o.angle},
                      {"stretch", o.stretch}};
    j["obstacles"].push_back(std::move(jo));
  }
}

void from_json(const nlohmann::json& j, DomainSpec& spec) {
  const auto fam = parse_family(j.at("family").get<std::string>());
  if (!fam) throw std::runtime_error("unknown dataset family in domain record");
  spec.family = *fam;
  spec.inflow_peak = j.at("inflow_peak").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.channel_length = j.value("channel_length", kChannelLength);
  spec.obstacles.clear();
  for (const auto& jo : j.at("obstacles")) {
    ObstacleSpec o;
    o.kind = parse_kind(jo.at("kind").get<std::string>());
    o.center = {jo.at("center").at(0).get<double>(), jo.at("center").at(1).get<double>()};
    o.radius = jo.at("radius").get<double>();
    o.half_width = jo.at("half_width").get<double>();
    o.half_height = jo.at("half_height").get<double>();
    o.side_x = jo.at("side_x").get<double>();
    o.side_y = jo.at("side_y").get<double>();
    o.side = jo.at("side").get<double>();
    o.angle = jo.at("angle").get<double>();
    o.stretch = jo.at("stretch").get<double>();
    spec.obstacles.push_back(o);
  }
}

}  // namespace mgn
