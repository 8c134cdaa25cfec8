#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "coresim/camera.hpp"
#include "coresim/predicate.hpp"

namespace coresim {

struct PixelMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;

    PixelMask() = default;
    PixelMask(int w, int h) : width(w), height(h), bits(static_cast<size_t>(w) * h, 0) {}

    bool get(int u, int v) const { return bits[static_cast<size_t>(v) * width + u] != 0; }
    void set(int u, int v, bool b = true) {
        bits[static_cast<size_t>(v) * width + u] = b ? 1 : 0;
    }
    size_t count() const {
        size_t n = 0;
        for (uint8_t b : bits) n += b != 0;
        return n;
    }
    bool same_size(const PixelMask& o) const { return width == o.width && height == o.height; }
};

inline std::map<std::string, PixelMask> class_masks_from_frame(const Frame& f) {
    std::map<std::string, PixelMask> out;
    for (size_t c = 1; c < f.class_names.size(); ++c)
        out.emplace(f.class_names[c], PixelMask(f.width, f.height));
    for (int v = 0; v < f.height; ++v)
        for (int u = 0; u < f.width; ++u) {
            const uint16_t l = f.label_at(u, v);
            if (l != 0) out[f.class_names[l]].set(u, v);
        }
    return out;
}

/// Binary dilation with a square structuring element of side `side`, anchored
/// at the element center (even sides reach one pixel further up-left, the
/// OpenCV convention). Separable two-pass sliding window, O(pixels).
inline PixelMask dilate_square(const PixelMask& m, int side) {
    if (side < 1) throw std::invalid_argument("dilate_square: side must be >= 1");
    const int lo = side / 2;          // reach toward -inf
    const int hi = side - 1 - lo;     // reach toward +inf
    PixelMask tmp(m.width, m.height);
    for (int v = 0; v < m.height; ++v) {
        // prefix counts of set pixels in the row
        std::vector<int> pre(m.width + 1, 0);
        for (int u = 0; u < m.width; ++u) pre[u + 1] = pre[u] + (m.get(u, v) ? 1 : 0);
        for (int u = 0; u < m.width; ++u) {
            const int a = std::max(0, u - lo);
            const int b = std::min(m.width - 1, u + hi);
            if (pre[b + 1] - pre[a] > 0) tmp.set(u, v);
        }
    }
    PixelMask out(m.width, m.height);
    for (int u = 0; u < m.width; ++u) {
        std::vector<int> pre(m.height + 1, 0);
        for (int v = 0; v < m.height; ++v) pre[v + 1] = pre[v] + (tmp.get(u, v) ? 1 : 0);
        for (int v = 0; v < m.height; ++v) {
            const int a = std::max(0, v - lo);
            const int b = std::min(m.height - 1, v + hi);
            if (pre[b + 1] - pre[a] > 0) out.set(u, v);
        }
    }
    return out;
}

/// Filled convex hull of all set pixels, including degenerate (collinear)
/// inputs which fill the pixel segment between the extremes.
inline PixelMask fill_convex_hull(const PixelMask& m) {
    std::vector<Vec2> pts;
    for (int v = 0; v < m.height; ++v)
        for (int u = 0; u < m.width; ++u)
            if (m.get(u, v)) pts.push_back({static_cast<double>(u), static_cast<double>(v)});
    PixelMask out(m.width, m.height);
    if (pts.empty()) return out;
    const Polygon hull = convex_hull(pts);
    int lo_u = m.width, hi_u = -1, lo_v = m.height, hi_v = -1;
    for (const Vec2& p : pts) {
        lo_u = std::min(lo_u, static_cast<int>(p.x));
        hi_u = std::max(hi_u, static_cast<int>(p.x));
        lo_v = std::min(lo_v, static_cast<int>(p.y));
        hi_v = std::max(hi_v, static_cast<int>(p.y));
    }
    if (hull.size() <= 2) {
        // Degenerate: all pixels collinear. Fill integer points on the segment.
        const Vec2 a = hull.front();
        const Vec2 b = hull.back();
        for (int v = lo_v; v <= hi_v; ++v)
            for (int u = lo_u; u <= hi_u; ++u) {
                const Vec2 p{static_cast<double>(u), static_cast<double>(v)};
                if (std::abs((b - a).cross(p - a)) < 1e-9) out.set(u, v);
            }
        return out;
    }
    for (int v = lo_v; v <= hi_v; ++v)
        for (int u = lo_u; u <= hi_u; ++u)
            if (point_in_convex_polygon({static_cast<double>(u), static_cast<double>(v)}, hull,
                                        1e-9))
                out.set(u, v);
    return out;
}

struct OperatorResult {
    PixelMask mask;
    bool known_class = true;  // false feeds the grounding-failure attribution
};

/**
 * Grounds one predicate into image space. ON/NEAR select the class pixels,
 * AROUND dilates them with a square element (50 px in deployment), BETWEEN
 * fills the convex hull of the class instances.
 */
inline OperatorResult apply_operator(const Predicate& pred,
                                     const std::map<std::string, PixelMask>& class_masks,
                                     int dilation_px = 50) {
    const auto it = class_masks.find(pred.class_label);
    if (it == class_masks.end()) {
        OperatorResult r;
        r.known_class = false;
        if (!class_masks.empty()) {
            const auto& any = class_masks.begin()->second;
            r.mask = PixelMask(any.width, any.height);
        }
        return r;
    }
    OperatorResult r;
    switch (pred.op) {
        case SpatialOp::ON:
        case SpatialOp::NEAR: r.mask = it->second; break;
        case SpatialOp::AROUND: r.mask = dilate_square(it->second, dilation_px); break;
        case SpatialOp::BETWEEN: r.mask = fill_convex_hull(it->second); break;
    }
    return r;
}

struct ImageSafeSet {
    PixelMask safe;          // (union of safe) minus (union of unsafe)
    PixelMask unsafe_union;  // projected as unsafe evidence
};

/// Image-space partition: safe pixels are those in some safe set and no unsafe set.
inline ImageSafeSet compose_image_safe_set(const std::vector<PixelMask>& safe_masks,
                                           const std::vector<PixelMask>& unsafe_masks) {
    int w = -1, h = -1;
    auto note_dims = [&](const PixelMask& m) {
        if (w < 0) { w = m.width; h = m.height; }
        else if (m.width != w || m.height != h)
            throw std::invalid_argument("compose_image_safe_set: mask dimension mismatch");
    };
    for (const auto& m : safe_masks) note_dims(m);
    for (const auto& m : unsafe_masks) note_dims(m);
    if (w < 0) { w = 0; h = 0; }

    ImageSafeSet out{PixelMask(w, h), PixelMask(w, h)};
    for (const auto& m : unsafe_masks)
        for (size_t i = 0; i < m.bits.size(); ++i) out.unsafe_union.bits[i] |= m.bits[i];
    for (const auto& m : safe_masks)
        for (size_t i = 0; i < m.bits.size(); ++i) out.safe.bits[i] |= m.bits[i];
    for (size_t i = 0; i < out.safe.bits.size(); ++i)
        if (out.unsafe_union.bits[i]) out.safe.bits[i] = 0;
    return out;
}

}  // namespace coresim
