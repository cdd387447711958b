#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace cellplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }

inline Vec2 normalized(Vec2 v) {
  const double n = norm(v);
  return n > 0.0 ? Vec2{v.x / n, v.y / n} : Vec2{0.0, 0.0};
}

using Polygon = std::vector<Vec2>;

/// Shoelace area; positive for counter-clockwise vertex order.
inline double polygon_signed_area(std::span<const Vec2> poly) {
  double acc = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    acc += cross(a, b);
  }
  return 0.5 * acc;
}

inline double polygon_area(std::span<const Vec2> poly) {
  return std::abs(polygon_signed_area(poly));
}

namespace detail {
constexpr double kGeomEps = 1e-9;

// Sign of the turn a->b->p: +1 left, -1 right, 0 collinear (within kGeomEps of line scale).
inline int orientation(Vec2 a, Vec2 b, Vec2 p) {
  const double c = cross(b - a, p - a);
  const double scale = std::max(1.0, std::max(norm(b - a), norm(p - a)));
  if (c > kGeomEps * scale) return 1;
  if (c < -kGeomEps * scale) return -1;
  return 0;
}

inline bool in_bbox(Vec2 p, Vec2 a, Vec2 b) {
  return p.x >= std::min(a.x, b.x) - kGeomEps && p.x <= std::max(a.x, b.x) + kGeomEps &&
         p.y >= std::min(a.y, b.y) - kGeomEps && p.y <= std::max(a.y, b.y) + kGeomEps;
}
}  // namespace detail

inline bool point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  return detail::orientation(a, b, p) == 0 && detail::in_bbox(p, a, b);
}

/// Inclusive segment intersection test (shared endpoints and collinear overlap count).
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = detail::orientation(a, b, c);
  const int o2 = detail::orientation(a, b, d);
  const int o3 = detail::orientation(c, d, a);
  const int o4 = detail::orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && detail::in_bbox(c, a, b)) return true;
  if (o2 == 0 && detail::in_bbox(d, a, b)) return true;
  if (o3 == 0 && detail::in_bbox(a, c, d)) return true;
  if (o4 == 0 && detail::in_bbox(b, c, d)) return true;
  return false;
}

/// Boundary counts as inside.
inline bool point_in_polygon(Vec2 p, std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (point_on_segment(p, poly[i], poly[(i + 1) % n])) return true;
  }
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_int = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_int) inside = !inside;
    }
  }
  return inside;
}

/// No repeated vertices, no zero-length edges, no crossing or touching between
/// non-adjacent edges.
inline bool polygon_is_simple(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (distance(poly[i], poly[(i + 1) % n]) <= detail::kGeomEps) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

/// Appends every parameter t in [0,1] at which segment p0->p1 meets the polygon
/// boundary. Near-parallel grazing contributes the clamped overlap endpoints.
inline void segment_polygon_crossings(Vec2 p0, Vec2 p1, std::span<const Vec2> poly,
                                      std::vector<double>& ts) {
  const Vec2 d1 = p1 - p0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    const Vec2 d2 = b - a;
    const double denom = cross(d1, d2);
    const double scale = std::max(1.0, norm(d1) * norm(d2));
    if (std::abs(denom) > detail::kGeomEps * scale) {
      const double t = cross(a - p0, d2) / denom;
      const double u = cross(a - p0, d1) / denom;
      if (t >= -detail::kGeomEps && t <= 1.0 + detail::kGeomEps &&
          u >= -detail::kGeomEps && u <= 1.0 + detail::kGeomEps) {
        ts.push_back(std::clamp(t, 0.0, 1.0));
      }
    } else if (detail::orientation(a, b, p0) == 0) {
      // Collinear edge: project overlap of the two segments onto p0->p1.
      const double len2 = dot(d1, d1);
      if (len2 > 0.0) {
        double ta = dot(a - p0, d1) / len2;
        double tb = dot(b - p0, d1) / len2;
        if (ta > tb) std::swap(ta, tb);
        if (tb >= 0.0 && ta <= 1.0) {
          ts.push_back(std::clamp(ta, 0.0, 1.0));
          ts.push_back(std::clamp(tb, 0.0, 1.0));
        }
      }
    }
  }
}

struct RaySegmentHit {
  double t = 0.0;  // distance along the ray (dir must be unit length)
  Vec2 point;
};

/// Nearest forward intersection of ray origin+t*dir with segment a-b, t > t_min.
inline std::optional<RaySegmentHit> ray_segment_intersection(Vec2 origin, Vec2 dir, Vec2 a,
                                                             Vec2 b, double t_min) {
  const Vec2 e = b - a;
  const double denom = cross(dir, e);
  if (std::abs(denom) <= detail::kGeomEps) return std::nullopt;  // parallel graze = miss
  const double t = cross(a - origin, e) / denom;
  const double u = cross(a - origin, dir) / denom;
  if (t <= t_min || u < 0.0 || u > 1.0) return std::nullopt;
  return RaySegmentHit{t, origin + t * dir};
}

/// Mirrors direction d across the line through the segment with direction e.
inline Vec2 reflect_direction(Vec2 d, Vec2 e_unit) {
  const double proj = dot(d, e_unit);
  return normalized(Vec2{2.0 * proj * e_unit.x - d.x, 2.0 * proj * e_unit.y - d.y});
}

/// Mirror image of point p across the infinite line through a-b.
inline Vec2 mirror_point(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 e = normalized(b - a);
  const Vec2 ap = p - a;
  const double along = dot(ap, e);
  const Vec2 foot = a + along * e;
  return foot + (foot - p);
}

}  // namespace cellplan
