#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "coresim/camera.hpp"
#include "coresim/detection.hpp"
#include "coresim/mask_ops.hpp"

namespace coresim {

struct GridIndex {
    int i = 0;  // x
    int j = 0;  // y
};

/**
 * 2D evidence grid over the robot workspace. Each cell keeps counts of safe
 * and unsafe point observations; counts only ever increase (append-only).
 */
class SafetyGrid {
public:
    SafetyGrid() = default;
    SafetyGrid(double resolution, Vec2 origin, int nx, int ny)
        : resolution_(resolution), origin_(origin), nx_(nx), ny_(ny),
          n_safe_(static_cast<size_t>(nx) * ny, 0),
          n_unsafe_(static_cast<size_t>(nx) * ny, 0) {
        if (resolution <= 0.0) throw std::invalid_argument("SafetyGrid: resolution must be > 0");
        if (nx < 1 || ny < 1) throw std::invalid_argument("SafetyGrid: empty extent");
    }

    double resolution() const { return resolution_; }
    Vec2 origin() const { return origin_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    size_t size() const { return n_safe_.size(); }

    size_t flat(int i, int j) const { return static_cast<size_t>(j) * nx_ + i; }
    bool in_bounds(int i, int j) const { return i >= 0 && i < nx_ && j >= 0 && j < ny_; }

    /// Cell containing the world point, clamped to the grid extent.
    GridIndex cell_of(const Vec2& p) const {
        int i = static_cast<int>(std::floor((p.x - origin_.x) / resolution_));
        int j = static_cast<int>(std::floor((p.y - origin_.y) / resolution_));
        i = std::clamp(i, 0, nx_ - 1);
        j = std::clamp(j, 0, ny_ - 1);
        return {i, j};
    }

    Vec2 center(int i, int j) const {
        return {origin_.x + (i + 0.5) * resolution_, origin_.y + (j + 0.5) * resolution_};
    }

    uint32_t n_safe(int i, int j) const { return n_safe_[flat(i, j)]; }
    uint32_t n_unsafe(int i, int j) const { return n_unsafe_[flat(i, j)]; }
    bool observed(int i, int j) const { return n_safe(i, j) + n_unsafe(i, j) > 0; }

    void add_safe(int i, int j, uint32_t n = 1) { n_safe_[flat(i, j)] += n; }
    void add_unsafe(int i, int j, uint32_t n = 1) { n_unsafe_[flat(i, j)] += n; }

private:
    double resolution_ = 0.2;
    Vec2 origin_;
    int nx_ = 1;
    int ny_ = 1;
    std::vector<uint32_t> n_safe_;
    std::vector<uint32_t> n_unsafe_;
};

enum class TreatUnknown { safe, unsafe };

/// Per-cell safety probability estimate; unobserved cells take the
/// treat_unknown default (1 for safe, 0 for unsafe).
inline double cell_safety_probability(const SafetyGrid& grid, int i, int j,
                                      TreatUnknown treat_unknown = TreatUnknown::safe) {
    const double s = grid.n_safe(i, j);
    const double u = grid.n_unsafe(i, j);
    if (s + u == 0.0) return treat_unknown == TreatUnknown::safe ? 1.0 : 0.0;
    return s / (s + u);
}

/**
 * Thresholded safe set over the grid plus its signed distance field. The
 * boundary is the safe cells 4-adjacent to an unsafe cell or lying on the
 * grid rim. Rebuilt wholesale at every perception delivery; readers take the
 * barrier by value/snapshot, never a partial update.
 */
struct Barrier {
    SafetyGrid grid;
    double tau = 0.5;
    TreatUnknown treat_unknown = TreatUnknown::safe;
    std::vector<uint8_t> safe_set;
    std::vector<GridIndex> boundary;    // safe cells at the interface or grid rim
    std::vector<GridIndex> unsafe_rim;  // unsafe cells adjacent to a safe cell

    bool cell_safe(int i, int j) const { return safe_set[grid.flat(i, j)] != 0; }
};

inline void rebuild_safe_set(Barrier& b) {
    const int nx = b.grid.nx(), ny = b.grid.ny();
    b.safe_set.assign(b.grid.size(), 0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (cell_safety_probability(b.grid, i, j, b.treat_unknown) >= b.tau)
                b.safe_set[b.grid.flat(i, j)] = 1;
    b.boundary.clear();
    b.unsafe_rim.clear();
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const bool safe = b.safe_set[b.grid.flat(i, j)] != 0;
            const bool on_rim = (i == 0 || i == nx - 1 || j == 0 || j == ny - 1);
            bool next_to_other =
                (i > 0 && (b.safe_set[b.grid.flat(i - 1, j)] != 0) != safe) ||
                (i < nx - 1 && (b.safe_set[b.grid.flat(i + 1, j)] != 0) != safe) ||
                (j > 0 && (b.safe_set[b.grid.flat(i, j - 1)] != 0) != safe) ||
                (j < ny - 1 && (b.safe_set[b.grid.flat(i, j + 1)] != 0) != safe);
            if (safe && (on_rim || next_to_other)) b.boundary.push_back({i, j});
            if (!safe && next_to_other) b.unsafe_rim.push_back({i, j});
        }
}

namespace detail {

inline GridIndex nearest_boundary_cell(const Barrier& b, const Vec2& x, double& best) {
    best = std::numeric_limits<double>::infinity();
    GridIndex arg{0, 0};
    for (const GridIndex& c : b.boundary) {
        const Vec2 y = b.grid.center(c.i, c.j);
        const double dx = x.x - y.x, dy = x.y - y.y;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d < best) {
            best = d;
            arg = c;
        }
    }
    return arg;
}

}  // namespace detail

/// Signed distance to the safe-set boundary, measured to boundary-cell
/// centers: positive inside the safe set, negative outside. Out-of-extent
/// queries clamp to the grid.
inline double barrier_value(const Barrier& b, const Vec2& x) {
    if (b.boundary.empty())
        return b.safe_set.empty() || b.safe_set[0] == 0 ? -1e9 : 1e9;  // degenerate grids
    double d;
    detail::nearest_boundary_cell(b, x, d);
    const GridIndex c = b.grid.cell_of(x);
    return b.cell_safe(c.i, c.j) ? d : -d;
}

/// Unit gradient of the SDF: points away from the nearest boundary cell in
/// the safe set and toward it outside, i.e. always toward increasing h.
/// Queries coincident with the boundary center are answered at a 1e-6 m
/// perturbation toward the cell center.
inline Vec2 barrier_gradient(const Barrier& b, const Vec2& x) {
    if (b.boundary.empty()) return {1.0, 0.0};
    double d;
    GridIndex nb = detail::nearest_boundary_cell(b, x, d);
    Vec2 q = x;
    if (d < 1e-9) {
        const GridIndex c = b.grid.cell_of(x);
        Vec2 toward = b.grid.center(c.i, c.j) - x;
        if (toward.norm() < 1e-12) toward = {1.0, 0.0};
        q = x + toward.normalized() * 1e-6;
        nb = detail::nearest_boundary_cell(b, q, d);
        if (d < 1e-12) return {1.0, 0.0};
    }
    const Vec2 y = b.grid.center(nb.i, nb.j);
    const Vec2 g = (q - y) * (1.0 / d);
    const GridIndex c = b.grid.cell_of(x);
    return b.cell_safe(c.i, c.j) ? g : Vec2{-g.x, -g.y};
}

struct BarrierSample {
    double h = 0.0;
    Vec2 gradient{1.0, 0.0};
};

namespace detail {

/// Distance from x to a cell's rectangle, with the closest rectangle point.
inline double point_cell_rect_distance(const SafetyGrid& g, const GridIndex& c, const Vec2& x,
                                       Vec2& closest) {
    const double x0 = g.origin().x + c.i * g.resolution();
    const double y0 = g.origin().y + c.j * g.resolution();
    closest.x = std::clamp(x.x, x0, x0 + g.resolution());
    closest.y = std::clamp(x.y, y0, y0 + g.resolution());
    const double dx = x.x - closest.x, dy = x.y - closest.y;
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace detail

/**
 * Barrier sample for control synthesis: the signed distance to the actual
 * safe/unsafe interface (unsafe-cell rectangles plus the grid rim) minus a
 * half-cell standoff. The center-based field of barrier_value has its zero
 * set half a cell inside the safe region and rises again beyond it, which
 * would let the filter coast between boundary centers straight into unsafe
 * cells; measuring to rectangles closes those gaps, and the standoff keeps
 * the hold line strictly inside the last safe cell so floating-point creep
 * can never flip the robot's cell. The exported barrier_value and
 * barrier_gradient pair is unchanged.
 */
inline BarrierSample barrier_control_sample(const Barrier& b, const Vec2& x) {
    BarrierSample s;
    const GridIndex c = b.grid.cell_of(x);
    const Vec2 lo = b.grid.origin();
    const Vec2 hi{lo.x + b.grid.nx() * b.grid.resolution(),
                  lo.y + b.grid.ny() * b.grid.resolution()};
    const bool inside_extent = x.x >= lo.x && x.x <= hi.x && x.y >= lo.y && x.y <= hi.y;
    const bool member_safe = inside_extent && !b.safe_set.empty() && b.cell_safe(c.i, c.j);
    const double standoff = 0.5 * b.grid.resolution();

    // Two passes: the nearest interface distance sets h, and the outward
    // directions of every near-tie rectangle are blended into the gradient.
    // Blending matters in concave pockets between unsafe regions, where a
    // lone nearest-rectangle direction flip-flops between ticks and lets the
    // filter walk into the apex; the blend points out of the pocket.
    double best = std::numeric_limits<double>::infinity();
    if (member_safe) {
        std::vector<std::pair<double, Vec2>> cand;
        for (const GridIndex& u : b.unsafe_rim) {
            Vec2 p;
            const double d = detail::point_cell_rect_distance(b.grid, u, x, p);
            if (d >= best + 0.5 * b.grid.resolution()) continue;
            const Vec2 dir = d > 1e-6 ? (x - p) * (1.0 / d)
                                      : (b.grid.center(c.i, c.j) - b.grid.center(u.i, u.j))
                                            .normalized();
            cand.emplace_back(d, dir);
            best = std::min(best, d);
        }
        const double de[4] = {x.x - lo.x, hi.x - x.x, x.y - lo.y, hi.y - x.y};
        const Vec2 dn[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (int k = 0; k < 4; ++k)
            if (de[k] < best + 0.5 * b.grid.resolution()) {
                cand.emplace_back(de[k], dn[k]);
                best = std::min(best, de[k]);
            }
        Vec2 g{0.0, 0.0};
        for (const auto& [d, dir] : cand) {
            const double w = std::max(0.0, best + 0.5 * b.grid.resolution() - d);
            g = g + dir * w;
        }
        s.h = best - standoff;
        s.gradient = g.norm() > 1e-12 ? g.normalized() : Vec2{1.0, 0.0};
        return s;
    }
    // unsafe side, or beyond the grid extent: distance back to the safe set
    std::vector<std::pair<double, Vec2>> cand;
    for (const GridIndex& sf : b.boundary) {
        Vec2 p;
        const double d = detail::point_cell_rect_distance(b.grid, sf, x, p);
        if (d >= best + 0.5 * b.grid.resolution()) continue;
        const Vec2 dir = d > 1e-6 ? (p - x) * (1.0 / d)
                                  : (b.grid.center(sf.i, sf.j) - b.grid.center(c.i, c.j))
                                        .normalized();
        cand.emplace_back(d, dir);
        best = std::min(best, d);
    }
    if (!std::isfinite(best)) {  // no safe cell anywhere
        s.h = -1e9;
        return s;
    }
    Vec2 g{0.0, 0.0};
    for (const auto& [d, dir] : cand) {
        const double w = std::max(0.0, best + 0.5 * b.grid.resolution() - d);
        g = g + dir * w;
    }
    s.h = -best - standoff;
    s.gradient = g.norm() > 1e-12 ? g.normalized() : Vec2{1.0, 0.0};
    return s;
}

/**
 * Unprojects the masked pixels of a frame (skipping infinite depth), range
 * gates them around the capture pose, drops them to the plane and accumulates
 * safe/unsafe counts. Unsafe evidence comes from the unsafe union; Eq-2
 * composition guarantees the two masks are disjoint.
 */
inline void project_and_accumulate(const PixelMask& safe_mask, const PixelMask& unsafe_mask,
                                   const Frame& frame, const Pose& robot, SafetyGrid& grid,
                                   double min_range = 3.0, double max_range = 7.0) {
    if (safe_mask.width != frame.width || safe_mask.height != frame.height ||
        !safe_mask.same_size(unsafe_mask))
        throw std::invalid_argument("project_and_accumulate: mask/frame dimension mismatch");
    if (min_range > max_range)
        throw std::invalid_argument("project_and_accumulate: min_range > max_range");
    auto bin = [&](int u, int v, bool unsafe) {
        const float d = frame.depth_at(u, v);
        if (!std::isfinite(d) || d <= 0.0f) return;
        const Vec3 pc = pixel_to_point(u, v, d, frame.camera);
        const Vec3 pw = camera_point_to_world(pc, frame.camera, frame.camera_pose);
        const double dx = pw.x - robot.x, dy = pw.y - robot.y;
        const double r = std::sqrt(dx * dx + dy * dy);
        if (r < min_range || r > max_range) return;
        const GridIndex c = grid.cell_of({pw.x, pw.y});
        if (unsafe) grid.add_unsafe(c.i, c.j);
        else grid.add_safe(c.i, c.j);
    };
    for (int v = 0; v < frame.height; ++v)
        for (int u = 0; u < frame.width; ++u) {
            if (unsafe_mask.get(u, v)) bin(u, v, true);
            else if (safe_mask.get(u, v)) bin(u, v, false);
        }
}

/// Text header plus row-major (n_safe, n_unsafe) pairs.
inline void write_grid_snapshot(const Barrier& b, const std::string& path) {
    std::ofstream out(path);
    out << "resolution " << b.grid.resolution() << "\n";
    out << "origin " << b.grid.origin().x << " " << b.grid.origin().y << "\n";
    out << "extent " << b.grid.nx() << " " << b.grid.ny() << "\n";
    out << "tau " << b.tau << "\n";
    for (int j = 0; j < b.grid.ny(); ++j) {
        for (int i = 0; i < b.grid.nx(); ++i) {
            if (i) out << " ";
            out << b.grid.n_safe(i, j) << " " << b.grid.n_unsafe(i, j);
        }
        out << "\n";
    }
}

/// (cell_x, cell_y, h) rows for plotting.
inline void write_sdf_csv(const Barrier& b, const std::string& path) {
    std::ofstream out(path);
    out << "cell_x,cell_y,h\n";
    char buf[128];
    for (int j = 0; j < b.grid.ny(); ++j)
        for (int i = 0; i < b.grid.nx(); ++i) {
            const Vec2 c = b.grid.center(i, j);
            std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", c.x, c.y,
                          barrier_value(b, c));
            out << buf;
        }
}

}  // namespace coresim
