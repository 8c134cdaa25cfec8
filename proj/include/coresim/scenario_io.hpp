#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "coresim/world.hpp"

namespace coresim {

inline nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["task_label"] = s.task_label == TaskLabel::unsafe ? "unsafe" : "safe";
    j["start_pose"] = {{"x", s.start_pose.x}, {"y", s.start_pose.y}, {"theta", s.start_pose.theta}};
    j["waypoints"] = nlohmann::json::array();
    for (const Vec2& w : s.waypoints) j["waypoints"].push_back({w.x, w.y});
    j["entities"] = nlohmann::json::array();
    for (const Entity& e : s.entities) {
        nlohmann::json je;
        je["id"] = e.id;
        je["class_label"] = e.class_label;
        je["category"] = to_string(e.category);
        je["height"] = e.height;
        je["footprint"] = nlohmann::json::array();
        for (const Vec2& v : e.footprint) je["footprint"].push_back({v.x, v.y});
        j["entities"].push_back(je);
    }
    j["unsafe_regions"] = nlohmann::json::array();
    for (const GroundTruthRegion& r : s.unsafe_regions) {
        nlohmann::json jr;
        jr["polygon"] = nlohmann::json::array();
        for (const Vec2& v : r.polygon) jr["polygon"].push_back({v.x, v.y});
        jr["source_entity"] = r.source_entity;
        jr["rule"] = to_string(r.rule);
        j["unsafe_regions"].push_back(jr);
    }
    j["scripted_predicates"] = nlohmann::json::object();
    for (const auto& [id, preds] : s.scripted_predicates) {
        nlohmann::json jp;
        jp["safe"] = nlohmann::json::array();
        for (const Predicate& p : preds.safe) jp["safe"].push_back(to_string(p));
        jp["unsafe"] = nlohmann::json::array();
        for (const Predicate& p : preds.unsafe) jp["unsafe"].push_back(to_string(p));
        j["scripted_predicates"][id] = jp;
    }
    j["near_buffer"] = s.near_buffer;
    j["around_buffer"] = s.around_buffer;
    j["initial_safe_radius"] = s.initial_safe_radius;
    return j;
}

namespace detail {

inline Polygon polygon_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array()) throw std::invalid_argument(field + ": expected an array of [x, y]");
    Polygon poly;
    for (const auto& v : j) {
        if (!v.is_array() || v.size() != 2)
            throw std::invalid_argument(field + ": vertices must be [x, y] pairs");
        poly.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    return poly;
}

}  // namespace detail

/// Builds a Scenario from its JSON document; invariant violations are
/// rejected with the offending field named, never repaired.
inline Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    try {
        s.name = j.at("name").get<std::string>();
        const std::string label = j.at("task_label").get<std::string>();
        if (label == "safe") s.task_label = TaskLabel::safe;
        else if (label == "unsafe") s.task_label = TaskLabel::unsafe;
        else throw std::invalid_argument("task_label: must be 'safe' or 'unsafe'");
        const auto& sp = j.at("start_pose");
        s.start_pose = {sp.at("x").get<double>(), sp.at("y").get<double>(),
                        sp.at("theta").get<double>()};
        for (const auto& w : j.at("waypoints")) {
            if (!w.is_array() || w.size() != 2)
                throw std::invalid_argument("waypoints: entries must be [x, y] pairs");
            s.waypoints.push_back({w[0].get<double>(), w[1].get<double>()});
        }
        for (const auto& je : j.at("entities")) {
            Entity e;
            e.id = je.at("id").get<std::string>();
            e.class_label = je.at("class_label").get<std::string>();
            e.category = entity_category_from_string(je.at("category").get<std::string>());
            e.height = je.at("height").get<double>();
            e.footprint = detail::polygon_from_json(je.at("footprint"),
                                                    "entity '" + e.id + "'.footprint");
            s.entities.push_back(std::move(e));
        }
        for (const auto& jr : j.at("unsafe_regions")) {
            GroundTruthRegion r;
            r.polygon = detail::polygon_from_json(jr.at("polygon"), "unsafe_region.polygon");
            r.source_entity = jr.at("source_entity").get<std::string>();
            r.rule = region_rule_from_string(jr.at("rule").get<std::string>());
            s.unsafe_regions.push_back(std::move(r));
        }
        if (j.contains("scripted_predicates"))
            for (const auto& [id, jp] : j.at("scripted_predicates").items()) {
                ScriptedPredicates preds;
                for (const auto& t : jp.value("safe", nlohmann::json::array()))
                    preds.safe.push_back(parse_predicate(t.get<std::string>()));
                for (const auto& t : jp.value("unsafe", nlohmann::json::array()))
                    preds.unsafe.push_back(parse_predicate(t.get<std::string>()));
                s.scripted_predicates[id] = std::move(preds);
            }
        s.near_buffer = j.value("near_buffer", 0.3);
        s.around_buffer = j.value("around_buffer", 1.0);
        s.initial_safe_radius = j.value("initial_safe_radius", 0.75);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("scenario schema error: ") + e.what());
    }
    validate_scenario(s);
    return s;
}

/// Loads and validates one scenario document.
inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("parse error in '" + path + "': " + e.what());
    }
    return scenario_from_json(j);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario file: " + path);
    out << scenario_to_json(s).dump(2) << "\n";
}

}  // namespace coresim
