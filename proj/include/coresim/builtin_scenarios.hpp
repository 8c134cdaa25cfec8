#pragma once

#include <string>
#include <vector>

#include "coresim/world.hpp"

namespace coresim {

namespace detail {

inline Polygon box(double cx, double cy, double w, double h) {
    return rectangle(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0);
}

inline Entity make_entity(std::string id, std::string cls, EntityCategory cat, double height,
                          Polygon footprint) {
    Entity e;
    e.id = std::move(id);
    e.class_label = std::move(cls);
    e.category = cat;
    e.height = height;
    e.footprint = std::move(footprint);
    return e;
}

inline void add_near_region(Scenario& s, const Entity& e) {
    s.unsafe_regions.push_back({inflate_convex(e.footprint, s.near_buffer), e.id,
                                RegionRule::near_buffer});
}

inline void add_around_region(Scenario& s, const Entity& e) {
    s.unsafe_regions.push_back({inflate_convex(e.footprint, s.around_buffer), e.id,
                                RegionRule::around_buffer});
}

inline void add_off_surface_region(Scenario& s, const Entity& e) {
    s.unsafe_regions.push_back({e.footprint, e.id, RegionRule::off_surface});
}

inline void script(Scenario& s, const std::string& id, std::vector<std::string> safe,
                   std::vector<std::string> unsafe) {
    ScriptedPredicates sp;
    for (const auto& t : safe) sp.safe.push_back(parse_predicate(t));
    for (const auto& t : unsafe) sp.unsafe.push_back(parse_predicate(t));
    s.scripted_predicates[id] = std::move(sp);
}

inline void add_indoor_floor(Scenario& s, double x0, double y0, double x1, double y1) {
    s.entities.push_back(make_entity("floor", "floor", EntityCategory::navigable_surface, 0.0,
                                     rectangle(x0, y0, x1, y1)));
    script(s, "floor", {"ON(floor)"}, {});
}

// -- unsafe tasks ------------------------------------------------------------

inline Scenario cones_line() {
    Scenario s;
    s.name = "cones_line";
    s.task_label = TaskLabel::unsafe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{14.0, 0.0}};
    add_indoor_floor(s, -6.0, -12.0, 26.0, 12.0);
    std::vector<Vec2> hull_pts;
    for (int k = 0; k < 5; ++k) {
        const double y = -3.0 + 1.2 * k;  // gaps at y = -2.4 .. 1.2; the path crosses at y = 0
        Entity cone = make_entity("cone_" + std::to_string(k), "cone",
                                  EntityCategory::hazard_indicator, 0.5, box(10.0, y, 0.25, 0.25));
        for (const Vec2& v : cone.footprint) hull_pts.push_back(v);
        s.entities.push_back(cone);
        script(s, cone.id, {}, {"NEAR(cone)", "AROUND(cone)", "BETWEEN(cone)"});
    }
    s.unsafe_regions.push_back({convex_hull(hull_pts), "cone_0", RegionRule::between_hull});
    for (int k = 0; k < 5; ++k) add_near_region(s, *s.find_entity("cone_" + std::to_string(k)));
    return s;
}

inline Scenario forklift_buffer() {
    Scenario s;
    s.name = "forklift_buffer";
    s.task_label = TaskLabel::unsafe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{11.0, 0.0}};
    add_indoor_floor(s, -6.0, -12.0, 26.0, 12.0);
    s.entities.push_back(make_entity("forklift", "forklift", EntityCategory::hazard_indicator,
                                     2.2, box(11.0, 0.0, 1.2, 2.4)));
    script(s, "forklift", {}, {"NEAR(forklift)", "AROUND(forklift)"});
    add_around_region(s, *s.find_entity("forklift"));
    return s;
}

inline Scenario wet_floor_sign() {
    Scenario s;
    s.name = "wet_floor_sign";
    s.task_label = TaskLabel::unsafe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{10.0, 0.0}};
    add_indoor_floor(s, -6.0, -12.0, 26.0, 12.0);
    s.entities.push_back(make_entity("sign", "wet_floor_sign", EntityCategory::hazard_indicator,
                                     0.6, box(10.0, 0.0, 0.3, 0.3)));
    script(s, "sign", {}, {"NEAR(wet_floor_sign)", "AROUND(wet_floor_sign)"});
    s.entities.push_back(make_entity("table", "table", EntityCategory::metric_obstacle, 0.8,
                                     box(6.0, 3.0, 0.8, 0.8)));
    script(s, "table", {}, {"NEAR(table)"});
    add_around_region(s, *s.find_entity("sign"));
    add_near_region(s, *s.find_entity("table"));
    return s;
}

inline Scenario person_proximity() {
    Scenario s;
    s.name = "person_proximity";
    s.task_label = TaskLabel::unsafe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{10.0, 0.0}};
    add_indoor_floor(s, -6.0, -12.0, 26.0, 12.0);
    s.entities.push_back(make_entity("person", "person", EntityCategory::social_zone, 1.7,
                                     box(10.0, 0.0, 0.4, 0.4)));
    script(s, "person", {}, {"NEAR(person)", "AROUND(person)"});
    add_around_region(s, *s.find_entity("person"));
    return s;
}

inline Scenario curb_bypass() {
    Scenario s;
    s.name = "curb_bypass";
    s.task_label = TaskLabel::unsafe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{12.0, 0.0}};
    s.entities.push_back(make_entity("road", "road", EntityCategory::navigable_surface, 0.0,
                                     rectangle(-3.0, -6.0, 8.0, 6.0)));
    s.entities.push_back(make_entity("curb_a", "curb", EntityCategory::non_navigable_surface, 0.0,
                                     rectangle(8.0, -6.0, 8.8, 3.5)));
    s.entities.push_back(make_entity("ramp", "ramp", EntityCategory::navigable_surface, 0.0,
                                     rectangle(8.0, 3.5, 8.8, 5.0)));
    s.entities.push_back(make_entity("curb_b", "curb", EntityCategory::non_navigable_surface, 0.0,
                                     rectangle(8.0, 5.0, 8.8, 6.0)));
    s.entities.push_back(make_entity("sidewalk", "sidewalk", EntityCategory::navigable_surface,
                                     0.0, rectangle(8.8, -6.0, 15.0, 6.0)));
    script(s, "road", {"ON(road)"}, {});
    script(s, "ramp", {"ON(ramp)"}, {});
    script(s, "sidewalk", {"ON(sidewalk)"}, {});
    script(s, "curb_a", {}, {"ON(curb)"});
    script(s, "curb_b", {}, {"ON(curb)"});
    add_off_surface_region(s, *s.find_entity("curb_a"));
    add_off_surface_region(s, *s.find_entity("curb_b"));
    return s;
}

inline Scenario grass_cut() {
    Scenario s;
    s.name = "grass_cut";
    s.task_label = TaskLabel::unsafe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{16.0, 3.0}};
    s.entities.push_back(make_entity("sidewalk", "sidewalk", EntityCategory::navigable_surface,
                                     0.0, rectangle(-3.0, -1.0, 17.0, 1.0)));
    s.entities.push_back(make_entity("grass_north", "grass",
                                     EntityCategory::non_navigable_surface, 0.0,
                                     rectangle(-3.0, 1.0, 17.0, 6.0)));
    s.entities.push_back(make_entity("grass_south", "grass",
                                     EntityCategory::non_navigable_surface, 0.0,
                                     rectangle(-3.0, -6.0, 17.0, -1.0)));
    script(s, "sidewalk", {"ON(sidewalk)"}, {});
    script(s, "grass_north", {}, {"ON(grass)"});
    script(s, "grass_south", {}, {"ON(grass)"});
    add_off_surface_region(s, *s.find_entity("grass_north"));
    add_off_surface_region(s, *s.find_entity("grass_south"));
    return s;
}

// -- safe tasks ---------------------------------------------------------------

inline Scenario open_warehouse() {
    Scenario s;
    s.name = "open_warehouse";
    s.task_label = TaskLabel::safe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{6.0, 0.0}, {12.0, 0.0}};
    return s;  // open-field traversal: empty entity list is a valid scenario
}

inline Scenario constrained_aisle() {
    Scenario s;
    s.name = "constrained_aisle";
    s.task_label = TaskLabel::safe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{8.0, 0.0}, {15.0, 0.0}};
    add_indoor_floor(s, -6.0, -10.0, 22.0, 10.0);
    s.entities.push_back(make_entity("shelf_north", "shelf", EntityCategory::metric_obstacle, 2.0,
                                     rectangle(4.0, 1.5, 12.0, 2.5)));
    s.entities.push_back(make_entity("shelf_south", "shelf", EntityCategory::metric_obstacle, 2.0,
                                     rectangle(4.0, -2.5, 12.0, -1.5)));
    script(s, "shelf_north", {}, {"NEAR(shelf)"});
    script(s, "shelf_south", {}, {"NEAR(shelf)"});
    add_near_region(s, *s.find_entity("shelf_north"));
    add_near_region(s, *s.find_entity("shelf_south"));
    return s;
}

inline Scenario hallway() {
    Scenario s;
    s.name = "hallway";
    s.task_label = TaskLabel::safe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{8.0, 0.0}, {16.0, 0.0}};
    add_indoor_floor(s, -6.0, -10.0, 24.0, 10.0);
    s.entities.push_back(make_entity("wall_north", "wall", EntityCategory::metric_obstacle, 2.5,
                                     rectangle(2.0, 1.5, 14.0, 2.1)));
    s.entities.push_back(make_entity("wall_south", "wall", EntityCategory::metric_obstacle, 2.5,
                                     rectangle(2.0, -2.1, 14.0, -1.5)));
    script(s, "wall_north", {}, {"NEAR(wall)"});
    script(s, "wall_south", {}, {"NEAR(wall)"});
    add_near_region(s, *s.find_entity("wall_north"));
    add_near_region(s, *s.find_entity("wall_south"));
    return s;
}

inline Scenario waiting_area() {
    Scenario s;
    s.name = "waiting_area";
    s.task_label = TaskLabel::safe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{7.0, 0.0}, {14.0, 0.0}};
    add_indoor_floor(s, -6.0, -10.0, 22.0, 10.0);
    s.entities.push_back(make_entity("person_a", "person", EntityCategory::social_zone, 1.7,
                                     box(6.0, 3.5, 0.4, 0.4)));
    s.entities.push_back(make_entity("person_b", "person", EntityCategory::social_zone, 1.7,
                                     box(10.0, -3.5, 0.4, 0.4)));
    s.entities.push_back(make_entity("chair_a", "chair", EntityCategory::metric_obstacle, 0.9,
                                     box(6.0, 4.4, 0.5, 0.5)));
    s.entities.push_back(make_entity("chair_b", "chair", EntityCategory::metric_obstacle, 0.9,
                                     box(10.0, -4.4, 0.5, 0.5)));
    script(s, "person_a", {}, {"NEAR(person)", "AROUND(person)"});
    script(s, "person_b", {}, {"NEAR(person)", "AROUND(person)"});
    script(s, "chair_a", {}, {"NEAR(chair)"});
    script(s, "chair_b", {}, {"NEAR(chair)"});
    add_around_region(s, *s.find_entity("person_a"));
    add_around_region(s, *s.find_entity("person_b"));
    add_near_region(s, *s.find_entity("chair_a"));
    add_near_region(s, *s.find_entity("chair_b"));
    return s;
}

inline Scenario parking_lot() {
    Scenario s;
    s.name = "parking_lot";
    s.task_label = TaskLabel::safe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{8.0, 0.0}, {16.0, 0.0}};
    s.entities.push_back(make_entity("lot", "lot", EntityCategory::navigable_surface, 0.0,
                                     rectangle(-3.0, -9.0, 19.0, 9.0)));
    script(s, "lot", {"ON(lot)"}, {});
    int idx = 0;
    auto add_car = [&](double cx, double y0, double y1) {
        Entity car = make_entity("car_" + std::to_string(idx++), "car",
                                 EntityCategory::metric_obstacle, 1.5,
                                 rectangle(cx - 0.9, y0, cx + 0.9, y1));
        s.entities.push_back(car);
        script(s, car.id, {}, {"NEAR(car)"});
        add_near_region(s, *s.find_entity(car.id));
    };
    add_car(5.0, 3.0, 6.0);
    add_car(9.0, 3.0, 6.0);
    add_car(13.0, 3.0, 6.0);
    add_car(7.0, -6.0, -3.0);
    add_car(11.0, -6.0, -3.0);
    return s;
}

inline Scenario sidewalk_stroll() {
    Scenario s;
    s.name = "sidewalk_stroll";
    s.task_label = TaskLabel::safe;
    s.start_pose = {0.0, 0.0, 0.0};
    s.waypoints = {{6.0, 0.0}, {12.0, 0.0}};
    s.entities.push_back(make_entity("sidewalk", "sidewalk", EntityCategory::navigable_surface,
                                     0.0, rectangle(-3.0, -1.0, 17.0, 1.0)));
    s.entities.push_back(make_entity("grass_north", "grass",
                                     EntityCategory::non_navigable_surface, 0.0,
                                     rectangle(-3.0, 1.0, 17.0, 6.0)));
    s.entities.push_back(make_entity("grass_south", "grass",
                                     EntityCategory::non_navigable_surface, 0.0,
                                     rectangle(-3.0, -6.0, 17.0, -1.0)));
    script(s, "sidewalk", {"ON(sidewalk)"}, {});
    script(s, "grass_north", {}, {"ON(grass)"});
    script(s, "grass_south", {}, {"ON(grass)"});
    add_off_surface_region(s, *s.find_entity("grass_north"));
    add_off_surface_region(s, *s.find_entity("grass_south"));
    return s;
}

}  // namespace detail

/// The twelve scripted tasks: six unsafe (cone line, forklift buffer,
/// wet-floor sign, person proximity, curb bypass, grass cut) and six safe
/// (open warehouse, constrained aisle, hallway, waiting area, parking lot,
/// sidewalk), each with scripted predicates populated.
inline std::vector<Scenario> builtin_scenarios() {
    std::vector<Scenario> out = {
        detail::cones_line(),     detail::forklift_buffer(), detail::wet_floor_sign(),
        detail::person_proximity(), detail::curb_bypass(),   detail::grass_cut(),
        detail::open_warehouse(), detail::constrained_aisle(), detail::hallway(),
        detail::waiting_area(),   detail::parking_lot(),     detail::sidewalk_stroll(),
    };
    for (const Scenario& s : out) validate_scenario(s);
    return out;
}

inline const Scenario* find_builtin(const std::vector<Scenario>& all, const std::string& name) {
    for (const auto& s : all)
        if (s.name == name) return &s;
    return nullptr;
}

}  // namespace coresim
