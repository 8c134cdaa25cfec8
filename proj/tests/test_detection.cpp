#include <catch2/catch.hpp>

#include <random>

#include "coresim/builtin_scenarios.hpp"
#include "coresim/detection.hpp"

using namespace coresim;

TEST_CASE("detection curve satisfies the sensing assumptions", "[detection]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> p0d(0.1, 0.95);
    for (int trial = 0; trial < 50; ++trial) {
        DetectionModel m;
        m.p0 = p0d(rng);
        m.epsilon = std::uniform_real_distribution<double>(1e-6, m.p0 * 0.9)(rng);
        m.D = std::uniform_real_distribution<double>(1.0, 10.0)(rng);
        REQUIRE(m.valid());
        REQUIRE(m.probability(m.D) == 0.0);          // bounded maximal sensing radius
        REQUIRE(m.probability(m.D * 1.7) == 0.0);
        double prev = 1.0;
        for (int i = 1; i < 100; ++i) {
            const double r = m.D * i / 100.0;
            const double p = m.probability(r);
            REQUIRE(p > 0.0);        // non-boundary detection function
            REQUIRE(p < 1.0);
            REQUIRE(p < prev);       // strictly decreasing on (0, D)
            prev = p;
        }
    }
}

TEST_CASE("empirical detection frequency is nonincreasing in range", "[detection]") {
    DetectionModel m;
    m.p0 = 0.75;
    m.epsilon = 0.3;
    m.D = 7.0;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = 100000;
    const std::vector<double> radii = {1.0, 2.5, 4.0, 5.5, 6.9};
    std::vector<double> freq;
    for (double r : radii) {
        int hits = 0;
        for (int i = 0; i < n; ++i) hits += unit(rng) < m.probability(r);
        freq.push_back(static_cast<double>(hits) / n);
    }
    for (size_t i = 1; i < freq.size(); ++i) {
        const double sigma = std::sqrt(0.25 / n);  // bound on binomial sd
        REQUIRE(freq[i] <= freq[i - 1] + 3.0 * sigma);
    }
}

namespace {
const Scenario& wet_floor() {
    static const std::vector<Scenario> all = builtin_scenarios();
    return *find_builtin(all, "wet_floor_sign");
}
}  // namespace

TEST_CASE("near-perfect oracle emits the hazard predicates at 5 m", "[detection]") {
    const Scenario& s = wet_floor();
    CameraModel cam;
    const Pose robot{5.0, 0.0, 0.0};  // sign at 5 m
    const Frame f = render_frame(s, robot, cam);
    DetectionModel m;
    m.p0 = 0.999;
    m.epsilon = 1e-6;
    m.D = 7.0;
    std::mt19937_64 rng(1);
    const PerceptionEvent ev = oracle_predicates(s, f, m, rng);
    REQUIRE(std::find(ev.predicates_unsafe.begin(), ev.predicates_unsafe.end(),
                      Predicate{SpatialOp::AROUND, "wet_floor_sign"}) !=
            ev.predicates_unsafe.end());
    // surface predicates ride along deterministically
    REQUIRE(std::find(ev.predicates_safe.begin(), ev.predicates_safe.end(),
                      Predicate{SpatialOp::ON, "floor"}) != ev.predicates_safe.end());
}

TEST_CASE("entities beyond the sensing radius are never detected", "[detection]") {
    const Scenario& s = wet_floor();
    CameraModel cam;
    const Pose robot{0.0, 0.0, 0.0};  // sign at 10 m
    const Frame f = render_frame(s, robot, cam);
    REQUIRE(std::count(f.entity_ids.begin(), f.entity_ids.end(),
                       static_cast<uint16_t>(2)) > 0);  // visible
    DetectionModel m;
    m.p0 = 0.95;
    m.epsilon = 1e-3;
    m.D = 7.0;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const PerceptionEvent ev = oracle_predicates(s, f, m, rng);
        REQUIRE(std::find(ev.predicates_unsafe.begin(), ev.predicates_unsafe.end(),
                          Predicate{SpatialOp::AROUND, "wet_floor_sign"}) ==
                ev.predicates_unsafe.end());
    }
}

TEST_CASE("per-frame miss rate matches the calibrated bound", "[detection]") {
    const Scenario& s = wet_floor();
    CameraModel cam;
    const Pose robot{5.0, 0.0, 0.0};
    const Frame f = render_frame(s, robot, cam);
    DetectionModel m;
    m.p0 = 0.75;
    m.epsilon = 1e-9;
    m.D = 7.0;
    std::mt19937_64 rng(17);
    const int n = 20000;
    int misses = 0;
    for (int i = 0; i < n; ++i) {
        const PerceptionEvent ev = oracle_predicates(s, f, m, rng);
        misses += ev.predicates_unsafe.empty();
    }
    const double rate = static_cast<double>(misses) / n;
    REQUIRE(rate == Approx(0.25).margin(3.0 * std::sqrt(0.25 * 0.75 / n)));
}

TEST_CASE("latency schedule arithmetic", "[detection]") {
    LatencySchedule sched{3.0, 3.0};
    REQUIRE(sched.captures_until(10.0) == 4);
    std::vector<double> captures, deliveries;
    for (int i = 0; i < sched.captures_until(10.0); ++i) {
        captures.push_back(sched.capture_time(i));
        deliveries.push_back(sched.delivery_time(i));
    }
    REQUIRE(captures == std::vector<double>{0.0, 3.0, 6.0, 9.0});
    REQUIRE(deliveries == std::vector<double>{3.0, 6.0, 9.0, 12.0});

    LatencySchedule instant{3.0, 0.0};  // oracle-style instantaneous updates
    REQUIRE(instant.delivery_time(2) == instant.capture_time(2));
    REQUIRE_THROWS(LatencySchedule{0.0, 1.0}.captures_until(5.0));
}

TEST_CASE("three measurements fit one sensing-radius traversal", "[detection]") {
    // period 3 s at 0.35 m/s covers D=4 m in 4/(0.35*3) ~ 3.8 periods
    const double per_traversal = 4.0 / (0.35 * 3.0);
    REQUIRE(static_cast<int>(std::floor(per_traversal)) == 3);
}
