#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coresim/geometry.hpp"
#include "coresim/predicate.hpp"

namespace coresim {

enum class EntityCategory {
    metric_obstacle,
    hazard_indicator,
    social_zone,
    semantic_barrier,
    navigable_surface,
    non_navigable_surface,
};

inline bool is_surface_category(EntityCategory c) {
    return c == EntityCategory::navigable_surface || c == EntityCategory::non_navigable_surface;
}

inline const char* to_string(EntityCategory c) {
    switch (c) {
        case EntityCategory::metric_obstacle: return "metric_obstacle";
        case EntityCategory::hazard_indicator: return "hazard_indicator";
        case EntityCategory::social_zone: return "social_zone";
        case EntityCategory::semantic_barrier: return "semantic_barrier";
        case EntityCategory::navigable_surface: return "navigable_surface";
        case EntityCategory::non_navigable_surface: return "non_navigable_surface";
    }
    return "?";
}

inline EntityCategory entity_category_from_string(const std::string& s) {
    if (s == "metric_obstacle") return EntityCategory::metric_obstacle;
    if (s == "hazard_indicator") return EntityCategory::hazard_indicator;
    if (s == "social_zone") return EntityCategory::social_zone;
    if (s == "semantic_barrier") return EntityCategory::semantic_barrier;
    if (s == "navigable_surface") return EntityCategory::navigable_surface;
    if (s == "non_navigable_surface") return EntityCategory::non_navigable_surface;
    throw std::invalid_argument("unknown entity category: '" + s + "'");
}

struct Entity {
    std::string id;
    std::string class_label;
    Polygon footprint;   // convex, world meters
    double height = 0.0; // extrusion height; 0 for surfaces
    EntityCategory category = EntityCategory::metric_obstacle;
};

enum class RegionRule { near_buffer, around_buffer, between_hull, off_surface };

inline const char* to_string(RegionRule r) {
    switch (r) {
        case RegionRule::near_buffer: return "near_buffer";
        case RegionRule::around_buffer: return "around_buffer";
        case RegionRule::between_hull: return "between_hull";
        case RegionRule::off_surface: return "off_surface";
    }
    return "?";
}

inline RegionRule region_rule_from_string(const std::string& s) {
    if (s == "near_buffer") return RegionRule::near_buffer;
    if (s == "around_buffer") return RegionRule::around_buffer;
    if (s == "between_hull") return RegionRule::between_hull;
    if (s == "off_surface") return RegionRule::off_surface;
    throw std::invalid_argument("unknown region rule: '" + s + "'");
}

struct GroundTruthRegion {
    Polygon polygon;
    std::string source_entity;
    RegionRule rule = RegionRule::near_buffer;
};

/// Per-entity predicates a perfect contextual reasoner would emit on detection.
struct ScriptedPredicates {
    std::vector<Predicate> safe;
    std::vector<Predicate> unsafe;
};

enum class TaskLabel { safe, unsafe };

/**
 * Scripted world: immutable after load, shared read-only across episodes.
 * Ground-truth regions are the scoring oracle; scripted predicates are what
 * the perception oracle emits per detected entity.
 */
struct Scenario {
    std::string name;
    std::vector<Entity> entities;
    std::vector<GroundTruthRegion> unsafe_regions;
    Pose start_pose;
    std::vector<Vec2> waypoints;
    TaskLabel task_label = TaskLabel::safe;
    std::map<std::string, ScriptedPredicates> scripted_predicates;

    // Per-scenario generation/validation knobs.
    double near_buffer = 0.3;
    double around_buffer = 1.0;
    double initial_safe_radius = 0.75;

    const Entity* find_entity(const std::string& id) const {
        for (const auto& e : entities)
            if (e.id == id) return &e;
        return nullptr;
    }

    bool declares_navigable_surfaces() const {
        for (const auto& e : entities)
            if (e.category == EntityCategory::navigable_surface) return true;
        return false;
    }
};

/// True iff p is in no ground-truth unsafe region and, when the scenario
/// declares navigable surfaces, p lies on one of them. Deterministic and pure.
inline bool ground_truth_safe(const Scenario& s, const Vec2& p) {
    for (const auto& region : s.unsafe_regions)
        if (point_in_convex_polygon(p, region.polygon)) return false;
    if (s.declares_navigable_surfaces()) {
        for (const auto& e : s.entities)
            if (e.category == EntityCategory::navigable_surface &&
                point_in_convex_polygon(p, e.footprint))
                return true;
        return false;
    }
    return true;
}

/// Straight-line waypoint path (start -> w1 -> ... -> wn) against the listed regions.
inline bool waypoint_path_enters_unsafe(const Scenario& s) {
    Vec2 prev = s.start_pose.position();
    for (const Vec2& w : s.waypoints) {
        for (const auto& region : s.unsafe_regions)
            if (segment_intersects_polygon(prev, w, region.polygon)) return true;
        prev = w;
    }
    return false;
}

/// Axis-aligned bounds over everything the scenario references.
inline void scenario_bounds(const Scenario& s, Vec2& lo, Vec2& hi) {
    lo = {1e300, 1e300};
    hi = {-1e300, -1e300};
    auto absorb = [&](const Vec2& p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    };
    absorb(s.start_pose.position());
    for (const Vec2& w : s.waypoints) absorb(w);
    for (const auto& e : s.entities)
        for (const Vec2& v : e.footprint) absorb(v);
    for (const auto& r : s.unsafe_regions)
        for (const Vec2& v : r.polygon) absorb(v);
}

/// Rejects invariant violations; throws std::invalid_argument naming the field.
inline void validate_scenario(const Scenario& s) {
    if (s.name.empty()) throw std::invalid_argument("scenario.name: must be non-empty");
    for (const auto& e : s.entities) {
        if (e.id.empty()) throw std::invalid_argument("entity.id: must be non-empty");
        if (e.footprint.size() < 3)
            throw std::invalid_argument("entity '" + e.id + "'.footprint: needs >= 3 vertices");
        if (polygon_area(e.footprint) <= 0.0)
            throw std::invalid_argument("entity '" + e.id +
                                        "'.footprint: degenerate or not counter-clockwise");
        if (e.height < 0.0)
            throw std::invalid_argument("entity '" + e.id + "'.height: must be >= 0");
        const bool surface = is_surface_category(e.category);
        if (surface != (e.height == 0.0))
            throw std::invalid_argument("entity '" + e.id +
                                        "'.height: must be 0 iff category is a surface");
    }
    for (const auto& r : s.unsafe_regions) {
        if (r.polygon.size() < 3)
            throw std::invalid_argument("unsafe_region(source '" + r.source_entity +
                                        "').polygon: needs >= 3 vertices");
        if (polygon_area(r.polygon) <= 0.0)
            throw std::invalid_argument("unsafe_region(source '" + r.source_entity +
                                        "').polygon: degenerate or not counter-clockwise");
        if (!s.find_entity(r.source_entity))
            throw std::invalid_argument("unsafe_region.source_entity: unknown id '" +
                                        r.source_entity + "'");
    }
    if (s.waypoints.empty())
        throw std::invalid_argument("scenario.waypoints: must contain at least one waypoint");
    for (const auto& [id, preds] : s.scripted_predicates) {
        const Entity* e = s.find_entity(id);
        if (!e) throw std::invalid_argument("scripted_predicates: unknown entity id '" + id + "'");
        auto check = [&](const Predicate& p) {
            if (p.op == SpatialOp::ON) {
                const Entity* target = nullptr;
                for (const auto& ent : s.entities)
                    if (ent.class_label == p.class_label) { target = &ent; break; }
                if (target && !is_surface_category(target->category))
                    throw std::invalid_argument("scripted_predicates['" + id + "']: ON(" +
                                                p.class_label + ") requires a surface category");
            }
        };
        for (const auto& p : preds.safe) check(p);
        for (const auto& p : preds.unsafe) check(p);
    }
    // Start clearance (houses the initial safe radius of the certificate).
    const Vec2 start = s.start_pose.position();
    for (const auto& r : s.unsafe_regions) {
        const double d = point_polygon_distance(start, r.polygon);
        if (d + 1e-9 < s.initial_safe_radius)
            throw std::invalid_argument(
                "scenario.start_pose: within initial_safe_radius of unsafe_region(source '" +
                r.source_entity + "')");
    }
    const bool enters = waypoint_path_enters_unsafe(s);
    if (enters != (s.task_label == TaskLabel::unsafe))
        throw std::invalid_argument(
            "scenario.task_label: must be 'unsafe' iff the straight-line waypoint path "
            "intersects a ground-truth unsafe region");
}

}  // namespace coresim
