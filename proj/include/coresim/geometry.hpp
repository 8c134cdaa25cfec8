#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace coresim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
    Vec2 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
    }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Planar pose; theta is kept in (-pi, pi].
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Vec2 position() const { return {x, y}; }
};

inline double wrap_angle(double a) {
    double r = std::fmod(a, 2.0 * M_PI);
    if (r > M_PI) r -= 2.0 * M_PI;
    if (r <= -M_PI) r += 2.0 * M_PI;
    return r;
}

/// Convex polygon, counter-clockwise vertex order.
using Polygon = std::vector<Vec2>;

inline double polygon_area(const Polygon& poly) {
    double twice = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        twice += a.cross(b);
    }
    return 0.5 * twice;
}

inline bool point_in_convex_polygon(const Vec2& p, const Polygon& poly, double eps = 1e-12) {
    const size_t n = poly.size();
    if (n < 3) return false;
    for (size_t i = 0; i < n; ++i) {
        const Vec2 e = poly[(i + 1) % n] - poly[i];
        if (e.cross(p - poly[i]) < -eps) return false;
    }
    return true;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 <= 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

/// Distance from p to the polygon (0 inside).
inline double point_polygon_distance(const Vec2& p, const Polygon& poly) {
    if (point_in_convex_polygon(p, poly)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i)
        best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    return best;
}

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        const double v = (q - p).cross(r - p);
        return (v > 1e-12) - (v < -1e-12);
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    auto on_seg = [&](const Vec2& p, const Vec2& q, const Vec2& r) {
        return orient(p, q, r) == 0 && r.x >= std::min(p.x, q.x) - 1e-12 &&
               r.x <= std::max(p.x, q.x) + 1e-12 && r.y >= std::min(p.y, q.y) - 1e-12 &&
               r.y <= std::max(p.y, q.y) + 1e-12;
    };
    return on_seg(a, b, c) || on_seg(a, b, d) || on_seg(c, d, a) || on_seg(c, d, b);
}

inline bool segment_intersects_polygon(const Vec2& a, const Vec2& b, const Polygon& poly) {
    if (point_in_convex_polygon(a, poly) || point_in_convex_polygon(b, poly)) return true;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i)
        if (segments_intersect(a, b, poly[i], poly[(i + 1) % n])) return true;
    return false;
}

/// Andrew monotone chain; returns CCW hull (collinear inputs give a 2-point chain).
inline Polygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const size_t n = pts.size();
    if (n <= 2) return pts;
    std::vector<Vec2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Minkowski sum of a convex polygon with a disk of radius r, approximated
/// from inside by sampling arc points at each vertex and re-hulling.
inline Polygon inflate_convex(const Polygon& poly, double r, int arc_steps = 16) {
    if (r <= 0.0) return poly;
    std::vector<Vec2> pts;
    pts.reserve(poly.size() * (arc_steps + 1));
    for (const Vec2& v : poly) {
        for (int s = 0; s <= arc_steps; ++s) {
            const double ang = 2.0 * M_PI * s / (arc_steps + 1);
            pts.push_back({v.x + r * std::cos(ang), v.y + r * std::sin(ang)});
        }
    }
    return convex_hull(std::move(pts));
}

inline Polygon rectangle(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace coresim
