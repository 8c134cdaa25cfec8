#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "coresim/geometry.hpp"
#include "coresim/world.hpp"

namespace coresim {

/// Pinhole RGB-D camera, rigidly mounted on the robot body.
struct CameraModel {
    double fx = 274.9;
    double fy = 376.7;
    double cx = 250.0;
    double cy = 160.0;
    int width = 500;
    int height = 320;
    double mount_height = 0.5;  // meters above ground
    double pitch = 0.111;       // radians, downward positive
    double body_offset = 0.2;   // meters forward of robot center

    bool valid() const {
        return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height;
    }
};

/// Synthetic RGB-D frame: class-index labels (0 = background) and z-depth in
/// meters (infinity where no hit). entity_ids is a renderer extra used by the
/// perception oracle to resolve per-entity visibility (0 = none).
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<uint16_t> labels;
    std::vector<uint16_t> entity_ids;
    std::vector<float> depth;
    double timestamp = 0.0;
    Pose camera_pose;  // robot pose at capture
    CameraModel camera;
    std::vector<std::string> class_names;  // index -> label, [0]="background", [1]="floor"

    size_t idx(int u, int v) const { return static_cast<size_t>(v) * width + u; }
    uint16_t label_at(int u, int v) const { return labels[idx(u, v)]; }
    float depth_at(int u, int v) const { return depth[idx(u, v)]; }

    int class_index(const std::string& name) const {
        for (size_t i = 0; i < class_names.size(); ++i)
            if (class_names[i] == name) return static_cast<int>(i);
        return -1;
    }
};

/// Pinhole unprojection: (d(u-cx)/fx, d(v-cy)/fy, d) in the camera frame.
inline Vec3 pixel_to_point(double u, double v, double d, const CameraModel& cam) {
    if (d <= 0.0) throw std::invalid_argument("pixel_to_point: depth must be positive");
    return {d * (u - cam.cx) / cam.fx, d * (v - cam.cy) / cam.fy, d};
}

namespace detail {

/// Camera frame axes expressed in the world frame, plus camera origin.
struct CameraPoseW {
    Vec3 origin;
    Vec3 ex;  // image right
    Vec3 ey;  // image down
    Vec3 ez;  // optical axis
};

inline CameraPoseW camera_pose_in_world(const CameraModel& cam, const Pose& robot) {
    const double ct = std::cos(robot.theta), st = std::sin(robot.theta);
    const double cp = std::cos(cam.pitch), sp = std::sin(cam.pitch);
    // Robot frame: x forward, y left, z up. Optical axis pitched down.
    const Vec3 ez_r{cp, 0.0, -sp};
    const Vec3 ex_r{0.0, -1.0, 0.0};
    const Vec3 ey_r{-sp, 0.0, -cp};
    auto to_world = [&](const Vec3& v) {
        return Vec3{ct * v.x - st * v.y, st * v.x + ct * v.y, v.z};
    };
    CameraPoseW out;
    out.ex = to_world(ex_r);
    out.ey = to_world(ey_r);
    out.ez = to_world(ez_r);
    out.origin = Vec3{robot.x + ct * cam.body_offset, robot.y + st * cam.body_offset,
                      cam.mount_height};
    return out;
}

}  // namespace detail

inline Vec3 camera_point_to_world(const Vec3& p_cam, const CameraModel& cam, const Pose& robot) {
    const auto T = detail::camera_pose_in_world(cam, robot);
    return {T.origin.x + T.ex.x * p_cam.x + T.ey.x * p_cam.y + T.ez.x * p_cam.z,
            T.origin.y + T.ex.y * p_cam.x + T.ey.y * p_cam.y + T.ez.y * p_cam.z,
            T.origin.z + T.ex.z * p_cam.x + T.ey.z * p_cam.y + T.ez.z * p_cam.z};
}

namespace detail {

struct Prism {
    const Entity* entity;
    uint16_t entity_id;
    uint16_t class_id;
    Vec2 center;
    double radius2;  // circumscribed circle of the footprint, squared
};

/// Ray vs extruded convex footprint over z in [0, height]; parametric clipping
/// against the footprint half-planes and the z slab. t is z-depth (dir.z-scaled).
inline bool ray_prism_hit(const Vec3& o, const Vec3& dir, const Entity& e, double& t_hit) {
    double t_in = 1e-9, t_out = std::numeric_limits<double>::infinity();
    const size_t n = e.footprint.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2 a = e.footprint[i];
        const Vec2 b = e.footprint[(i + 1) % n];
        // Inward normal of a CCW edge.
        const Vec2 nrm{-(b.y - a.y), b.x - a.x};
        const double denom = nrm.x * dir.x + nrm.y * dir.y;
        const double num = nrm.x * (a.x - o.x) + nrm.y * (a.y - o.y);
        if (std::abs(denom) < 1e-15) {
            if (num > 0.0) return false;  // parallel and outside
            continue;
        }
        const double t = num / denom;
        if (denom > 0.0) t_in = std::max(t_in, t);
        else t_out = std::min(t_out, t);
        if (t_in > t_out) return false;
    }
    // z slab [0, height]
    if (std::abs(dir.z) < 1e-15) {
        if (o.z < 0.0 || o.z > e.height) return false;
    } else {
        double t0 = (0.0 - o.z) / dir.z;
        double t1 = (e.height - o.z) / dir.z;
        if (t0 > t1) std::swap(t0, t1);
        t_in = std::max(t_in, t0);
        t_out = std::min(t_out, t1);
        if (t_in > t_out) return false;
    }
    t_hit = t_in;
    return t_hit > 1e-9;
}

}  // namespace detail

/**
 * Casts one pinhole ray per pixel against the extruded entity footprints and
 * the ground plane. Depth is camera-frame z so pixel_to_point inverts exactly;
 * ground hits are labeled by the covering surface entity, else "floor".
 */
inline Frame render_frame(const Scenario& scenario, const Pose& robot, const CameraModel& cam,
                          double timestamp = 0.0) {
    if (!std::isfinite(robot.x) || !std::isfinite(robot.y) || !std::isfinite(robot.theta))
        throw std::invalid_argument("render_frame: robot pose must be finite");
    Frame f;
    f.width = cam.width;
    f.height = cam.height;
    f.labels.assign(static_cast<size_t>(cam.width) * cam.height, 0);
    f.entity_ids.assign(static_cast<size_t>(cam.width) * cam.height, 0);
    f.depth.assign(static_cast<size_t>(cam.width) * cam.height,
                   std::numeric_limits<float>::infinity());
    f.timestamp = timestamp;
    f.camera_pose = robot;
    f.camera = cam;

    f.class_names = {"background", "floor"};
    auto class_id_of = [&](const std::string& label) -> uint16_t {
        for (size_t i = 0; i < f.class_names.size(); ++i)
            if (f.class_names[i] == label) return static_cast<uint16_t>(i);
        f.class_names.push_back(label);
        return static_cast<uint16_t>(f.class_names.size() - 1);
    };

    std::vector<detail::Prism> prisms;
    std::vector<std::pair<const Entity*, uint16_t>> surfaces;  // entity, class id
    for (size_t i = 0; i < scenario.entities.size(); ++i) {
        const Entity& e = scenario.entities[i];
        const uint16_t cid = class_id_of(e.class_label);
        if (e.height > 0.0) {
            detail::Prism p;
            p.entity = &e;
            p.entity_id = static_cast<uint16_t>(i + 1);
            p.class_id = cid;
            Vec2 c{0.0, 0.0};
            for (const Vec2& v : e.footprint) c = c + v;
            c = c * (1.0 / e.footprint.size());
            double r2 = 0.0;
            for (const Vec2& v : e.footprint) r2 = std::max(r2, (v - c).dot(v - c));
            p.center = c;
            p.radius2 = r2;
            prisms.push_back(p);
        } else {
            surfaces.emplace_back(&e, cid);
        }
    }

    const auto T = detail::camera_pose_in_world(cam, robot);
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const double dx = (u - cam.cx) / cam.fx;
            const double dy = (v - cam.cy) / cam.fy;
            // World direction scaled so that t equals camera-frame z.
            const Vec3 dir{T.ex.x * dx + T.ey.x * dy + T.ez.x,
                           T.ex.y * dx + T.ey.y * dy + T.ez.y,
                           T.ex.z * dx + T.ey.z * dy + T.ez.z};
            double best_t = std::numeric_limits<double>::infinity();
            uint16_t best_label = 0, best_entity = 0;

            if (dir.z < 0.0) {
                const double t = -T.origin.z / dir.z;
                if (t > 1e-9) {
                    best_t = t;
                    best_label = 1;  // default floor
                    const Vec2 hit{T.origin.x + t * dir.x, T.origin.y + t * dir.y};
                    for (const auto& [se, cid] : surfaces) {
                        if (point_in_convex_polygon(hit, se->footprint)) {
                            best_label = cid;
                            best_entity = static_cast<uint16_t>((se - scenario.entities.data()) + 1);
                            break;
                        }
                    }
                }
            }
            for (const auto& p : prisms) {
                // cheap reject: ray vs vertical cylinder around the footprint
                const double ox = T.origin.x - p.center.x, oy = T.origin.y - p.center.y;
                const double a = dir.x * dir.x + dir.y * dir.y;
                const double b = ox * dir.x + oy * dir.y;
                const double c = ox * ox + oy * oy - p.radius2;
                if (c > 0.0 && (a < 1e-15 ? true : b * b < a * c)) continue;
                double t;
                if (detail::ray_prism_hit(T.origin, dir, *p.entity, t) && t < best_t) {
                    best_t = t;
                    best_label = p.class_id;
                    best_entity = p.entity_id;
                }
            }
            if (best_t < std::numeric_limits<double>::infinity()) {
                const size_t k = f.idx(u, v);
                f.depth[k] = static_cast<float>(best_t);
                f.labels[k] = best_label;
                f.entity_ids[k] = best_entity;
            }
        }
    }
    return f;
}

struct LabeledPoint {
    Vec3 world;
    uint16_t label = 0;
};

/// Keeps points whose planar distance from the robot lies in [min_range, max_range].
inline std::vector<LabeledPoint> range_gate(const std::vector<LabeledPoint>& points,
                                            const Pose& robot, double min_range = 3.0,
                                            double max_range = 7.0) {
    if (min_range > max_range)
        throw std::invalid_argument("range_gate: min_range > max_range");
    std::vector<LabeledPoint> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        const double dx = p.world.x - robot.x, dy = p.world.y - robot.y;
        const double r = std::sqrt(dx * dx + dy * dy);
        if (r >= min_range && r <= max_range) out.push_back(p);
    }
    return out;
}

/// Two flat binary rasters (row-major u16 labels, f32 depth) plus a text header.
inline void write_frame(const Frame& f, const std::string& path_prefix) {
    {
        std::ofstream h(path_prefix + ".header.txt");
        h << "width " << f.width << "\nheight " << f.height << "\n";
        h << "fx " << f.camera.fx << "\nfy " << f.camera.fy << "\ncx " << f.camera.cx << "\ncy "
          << f.camera.cy << "\n";
        h << "pose " << f.camera_pose.x << " " << f.camera_pose.y << " " << f.camera_pose.theta
          << "\n";
        h << "timestamp " << f.timestamp << "\nclasses";
        for (const auto& c : f.class_names) h << " " << c;
        h << "\n";
    }
    std::ofstream lbl(path_prefix + ".labels.u16", std::ios::binary);
    lbl.write(reinterpret_cast<const char*>(f.labels.data()),
              static_cast<std::streamsize>(f.labels.size() * sizeof(uint16_t)));
    std::ofstream dep(path_prefix + ".depth.f32", std::ios::binary);
    dep.write(reinterpret_cast<const char*>(f.depth.data()),
              static_cast<std::streamsize>(f.depth.size() * sizeof(float)));
}

}  // namespace coresim
