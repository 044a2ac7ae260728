#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgn/rng.hpp"

namespace mgn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

inline constexpr double kChannelHeight = 0.41;
inline constexpr double kChannelLength = 1.6;
/// Elongated channel of the DFG 2D-2 benchmark.
inline constexpr double kBenchmarkChannelLength = 2.2;
inline constexpr double kWallClearance = 0.02;

enum class ObstacleKind { circle, ellipse, rectangle, triangle };

/// One obstacle. Only the fields relevant to `kind` are meaningful:
///  - circle:    radius
///  - ellipse:   half_width (x), half_height (y)
///  - rectangle: side_x, side_y, angle (side_x == side_y for plain squares)
///  - triangle:  side, angle, stretch (x scaled by stretch, y by 1/stretch)
struct ObstacleSpec {
  ObstacleKind kind = ObstacleKind::circle;
  Vec2 center;
  double radius = 0.0;
  double half_width = 0.0;
  double half_height = 0.0;
  double side_x = 0.0;
  double side_y = 0.0;
  double side = 0.0;
  double angle = 0.0;
  double stretch = 1.0;

  friend bool operator==(const ObstacleSpec&, const ObstacleSpec&) = default;
};

enum class DatasetFamily { standard_cylinder, cylinder_stretch, cylinder_tri_quad, two_cylinders, mixed_all };

inline constexpr std::array<DatasetFamily, 5> kAllFamilies = {
    DatasetFamily::standard_cylinder, DatasetFamily::cylinder_stretch, DatasetFamily::cylinder_tri_quad,
    DatasetFamily::two_cylinders, DatasetFamily::mixed_all};

std::string_view family_name(DatasetFamily f);
/// Parses the canonical family names ("2cylinders", "mixed_all", ...).
std::optional<DatasetFamily> parse_family(std::string_view name);

struct DomainSpec {
  std::vector<ObstacleSpec> obstacles;
  double inflow_peak = 1.25;
  DatasetFamily family = DatasetFamily::standard_cylinder;
  std::uint64_t seed = 0;
  double channel_length = kChannelLength;

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct Box {
  double xmin, ymin, xmax, ymax;
};

Box bounding_box(const ObstacleSpec& obs);

/// Obstacle outline as a counter-clockwise polygon. Curved outlines use
/// max(16, ceil(perimeter / max_segment)) vertices; every edge of the result
/// is at most `max_segment` long.
std::vector<Vec2> obstacle_polygon(const ObstacleSpec& obs, double max_segment);

double obstacle_perimeter(const ObstacleSpec& obs);

/// True iff every obstacle bounding box keeps >= 0.02 from all four channel
/// walls and the boxes of distinct obstacles are disjoint.
bool validate_clearance(const DomainSpec& spec);

/// Draws one domain from the family distribution, rejecting placements that
/// fail validate_clearance. Throws after 10000 rejections.
DomainSpec sample_geometry(DatasetFamily family, Rng& rng);

/// Per-simulation stream: simulation `index` of a dataset seeded `seed`.
DomainSpec sample_geometry(DatasetFamily family, std::uint64_t seed, std::uint64_t index);

/// Reference configuration: circle at (0.325, 0.2), r = 0.05.
DomainSpec reference_domain(double inflow_peak = 1.25);

void to_json(nlohmann::json& j, const DomainSpec& spec);
void from_json(const nlohmann::json& j, DomainSpec& spec);

}  // namespace mgn
