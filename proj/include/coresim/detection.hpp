#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "coresim/camera.hpp"
#include "coresim/world.hpp"

namespace coresim {

/**
 * Bernoulli detection-probability curve m_D(r) = max(0, p0 - epsilon*r/D) for
 * r < D and 0 beyond the maximal sensing radius D. Valid parameterizations
 * keep 0 < p0 - epsilon < p0 < 1, so m_D is strictly decreasing on (0, D) and
 * never reaches 0 or 1 there. min_range/max_range carry the projection band.
 */
struct DetectionModel {
    double p0 = 0.75;
    double epsilon = 1e-3;
    double D = 4.0;
    double min_range = 3.0;
    double max_range = 7.0;

    double probability(double r) const {
        if (r >= D) return 0.0;
        return std::max(0.0, p0 - epsilon * r / D);
    }

    bool valid() const {
        return D > 0.0 && epsilon > 0.0 && p0 < 1.0 && p0 - epsilon > 0.0 &&
               min_range <= max_range;
    }
};

struct PerceptionEvent {
    std::vector<Predicate> predicates_safe;
    std::vector<Predicate> predicates_unsafe;
    std::vector<std::string> emitted_sources;  // entity ids behind the predicates
    int frame_id = 0;
    double capture_time = 0.0;
    double delivery_time = 0.0;
};

namespace detail {

inline void append_unique(std::vector<Predicate>& dst, const Predicate& p) {
    if (std::find(dst.begin(), dst.end(), p) == dst.end()) dst.push_back(p);
}

}  // namespace detail

/**
 * The stochastic perception oracle standing in for the VLM. For each entity
 * with at least one visible pixel: scripted safe predicates (the surface
 * rules) are emitted deterministically; scripted unsafe predicates are
 * emitted with probability m_D(r), r being the planar distance from the robot
 * to the entity's nearest footprint point. Draws are independent per frame.
 */
inline PerceptionEvent oracle_predicates(const Scenario& scenario, const Frame& frame,
                                         const DetectionModel& model, std::mt19937_64& rng) {
    PerceptionEvent ev;
    ev.capture_time = frame.timestamp;
    ev.delivery_time = frame.timestamp;

    std::vector<uint8_t> visible(scenario.entities.size() + 1, 0);
    for (uint16_t id : frame.entity_ids)
        if (id != 0) visible[id] = 1;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vec2 robot = frame.camera_pose.position();
    for (size_t i = 0; i < scenario.entities.size(); ++i) {
        if (!visible[i + 1]) continue;
        const Entity& e = scenario.entities[i];
        const auto it = scenario.scripted_predicates.find(e.id);
        if (it == scenario.scripted_predicates.end()) continue;
        const ScriptedPredicates& sp = it->second;

        bool emitted = false;
        for (const Predicate& p : sp.safe) {
            detail::append_unique(ev.predicates_safe, p);
            emitted = true;
        }
        if (!sp.unsafe.empty()) {
            const double r = point_polygon_distance(robot, e.footprint);
            if (unit(rng) < model.probability(r)) {
                for (const Predicate& p : sp.unsafe) detail::append_unique(ev.predicates_unsafe, p);
                emitted = true;
            }
        }
        if (emitted) ev.emitted_sources.push_back(e.id);
    }
    return ev;
}

/// Capture/delivery instants of the slow perception loop.
struct LatencySchedule {
    double period = 3.0;
    double latency = 3.0;

    double capture_time(int i) const { return i * period; }
    double delivery_time(int i) const { return i * period + latency; }

    /// Number of frames captured in [0, horizon].
    int captures_until(double horizon) const {
        if (period <= 0.0) throw std::invalid_argument("latency_schedule: period must be > 0");
        return static_cast<int>(std::floor(horizon / period)) + 1;
    }
};

}  // namespace coresim
