#ifndef ROOMLAY_GEOMETRY_HPP
#define ROOMLAY_GEOMETRY_HPP

#include <cmath>
#include <span>
#include <vector>

namespace roomlay {

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
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

using Polygon = std::vector<Vec2>;

// Shoelace formula; positive for counter-clockwise winding.
double signed_area(std::span<const Vec2> poly);

// Even-odd ray crossing. Points on an edge (within `edge_eps`) count as inside.
bool point_in_polygon(Vec2 p, std::span<const Vec2> poly, double edge_eps = 1e-12);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

// Distance from p to the closest polygon edge.
double boundary_distance(Vec2 p, std::span<const Vec2> poly);

// Closed segments [a,b] and [c,d] share at least one point.
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

// No two non-adjacent edges touch, adjacent edges meet only at their shared
// vertex, and no edge is degenerate.
bool is_simple_polygon(std::span<const Vec2> poly);

double min_edge_length(std::span<const Vec2> poly);

struct Bounds {
  Vec2 min;
  Vec2 max;
};

Bounds bounding_box(std::span<const Vec2> poly);

}  // namespace roomlay

#endif  // ROOMLAY_GEOMETRY_HPP
