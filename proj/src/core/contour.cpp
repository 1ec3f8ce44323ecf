#include <array>
#include <unordered_map>

#include "roomlay/error.hpp"
#include "roomlay/layout.hpp"

namespace roomlay {

namespace {

struct Segment {
  long long a;
  long long b;
};

}  // namespace

std::vector<Contour> extract_contour(std::span<const double> field, int resolution,
                                     double threshold) {
  const int res = resolution;
  if (res < 2 || field.size() != static_cast<std::size_t>(res) * res) {
    fail(ErrorCode::kShapeMismatch, "contour field does not match resolution");
  }
  auto value = [&](int r, int c) { return field[static_cast<std::size_t>(r) * res + c]; };
  // Edge ids: horizontal (r,c)-(r,c+1) -> 2k, vertical (r,c)-(r+1,c) -> 2k+1.
  auto h_edge = [res](int r, int c) { return 2LL * (static_cast<long long>(r) * res + c); };
  auto v_edge = [res](int r, int c) { return 2LL * (static_cast<long long>(r) * res + c) + 1; };

  std::unordered_map<long long, Vec2> edge_point;
  auto crossing = [&](long long id) {
    auto it = edge_point.find(id);
    if (it != edge_point.end()) return;
    const long long k = id / 2;
    const int r = static_cast<int>(k / res);
    const int c = static_cast<int>(k % res);
    const int r1 = (id % 2 == 1) ? r + 1 : r;
    const int c1 = (id % 2 == 1) ? c : c + 1;
    const double v0 = value(r, c);
    const double v1 = value(r1, c1);
    const double t = (v1 == v0) ? 0.5 : (threshold - v0) / (v1 - v0);
    const Vec2 p0 = pixel_center(r, c, res);
    const Vec2 p1 = pixel_center(r1, c1, res);
    edge_point.emplace(id, p0 + t * (p1 - p0));
  };

  std::vector<Segment> segments;
  for (int r = 0; r + 1 < res; ++r) {
    for (int c = 0; c + 1 < res; ++c) {
      const double tl = value(r, c), tr = value(r, c + 1);
      const double br = value(r + 1, c + 1), bl = value(r + 1, c);
      const int index = (tl >= threshold ? 1 : 0) | (tr >= threshold ? 2 : 0) |
                        (br >= threshold ? 4 : 0) | (bl >= threshold ? 8 : 0);
      if (index == 0 || index == 15) continue;
      const long long top = h_edge(r, c), bottom = h_edge(r + 1, c);
      const long long left = v_edge(r, c), right = v_edge(r, c + 1);
      auto add = [&](long long a, long long b) {
        crossing(a);
        crossing(b);
        segments.push_back({a, b});
      };
      const bool center_in = 0.25 * (tl + tr + br + bl) >= threshold;
      switch (index) {
        case 1: case 14: add(left, top); break;
        case 2: case 13: add(top, right); break;
        case 3: case 12: add(left, right); break;
        case 4: case 11: add(right, bottom); break;
        case 6: case 9: add(top, bottom); break;
        case 7: case 8: add(left, bottom); break;
        case 5:  // tl and br inside
          if (center_in) { add(left, bottom); add(top, right); }
          else { add(left, top); add(right, bottom); }
          break;
        case 10:  // tr and bl inside
          if (center_in) { add(left, top); add(right, bottom); }
          else { add(top, right); add(left, bottom); }
          break;
        default: break;
      }
    }
  }

  std::unordered_map<long long, std::array<int, 2>> incident;
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    for (long long e : {segments[s].a, segments[s].b}) {
      auto [it, inserted] = incident.try_emplace(e, std::array<int, 2>{s, -1});
      if (!inserted) it->second[1] = s;
    }
  }

  std::vector<char> used(segments.size(), 0);
  std::vector<Contour> contours;
  auto trace = [&](int start_seg, long long start_edge) {
    Contour contour;
    contour.points.push_back(edge_point.at(start_edge));
    long long edge = start_edge;
    int seg = start_seg;
    while (seg >= 0 && !used[seg]) {
      used[seg] = 1;
      edge = (segments[seg].a == edge) ? segments[seg].b : segments[seg].a;
      const auto& inc = incident.at(edge);
      const int next = (inc[0] == seg) ? inc[1] : inc[0];
      if (edge == start_edge) {
        contour.closed = true;
        return contour;
      }
      contour.points.push_back(edge_point.at(edge));
      seg = next;
    }
    contour.closed = false;
    return contour;
  };

  // Open chains start at edges touched by a single segment.
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    if (used[s]) continue;
    for (long long e : {segments[s].a, segments[s].b}) {
      if (incident.at(e)[1] < 0 && !used[s]) contours.push_back(trace(s, e));
    }
  }
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    if (!used[s]) contours.push_back(trace(s, segments[s].a));
  }
  return contours;
}

}  // namespace roomlay
