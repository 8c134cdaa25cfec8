#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coresim/builtin_scenarios.hpp"
#include "coresim/simulate.hpp"

using namespace coresim;

namespace {

const std::vector<Scenario>& builtins() {
    static const std::vector<Scenario> all = builtin_scenarios();
    return all;
}

EpisodeConfig fast_cfg(Mode mode, uint64_t seed = 1) {
    EpisodeConfig cfg;
    cfg.mode = mode;
    cfg.seed = seed;
    return cfg;
}

std::string csv_bytes(const TrajectoryLog& log) {
    const auto path = std::filesystem::temp_directory_path() /
                      ("coresim_traj_" + std::to_string(::getpid()) + ".csv");
    write_trajectory_csv(log, path.string());
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    std::filesystem::remove(path);
    return ss.str();
}

}  // namespace

TEST_CASE("nominal controller primitives", "[simulate]") {
    ControllerGains g;
    SECTION("at the final waypoint the command is zero") {
        NominalController ctl({{1.0, 0.0}}, g);
        const ControlInput u = ctl({1.05, 0.0, 0.0});
        REQUIRE(u.vx == 0.0);
        REQUIRE(u.vy == 0.0);
        REQUIRE(u.omega == 0.0);
    }
    SECTION("waypoint ahead drives straight") {
        NominalController ctl({{1.0, 0.0}}, g);
        const ControlInput u = ctl({0.0, 0.0, 0.0});
        REQUIRE(u.vx > 0.0);
        REQUIRE(u.vy == Approx(0.0).margin(1e-12));
        REQUIRE(u.omega == Approx(0.0).margin(1e-12));
        REQUIRE(u.planar_norm() <= g.v_max + 1e-12);
    }
    SECTION("waypoint to the left strafes and turns left") {
        NominalController ctl({{0.0, 2.0}}, g);
        const ControlInput u = ctl({0.0, 0.0, 0.0});
        REQUIRE(u.vy > 0.0);
        REQUIRE(u.omega > 0.0);
    }
    SECTION("empty waypoint list is rejected") {
        REQUIRE_THROWS(NominalController({}, g));
    }
}

TEST_CASE("uninterfered rollouts follow the task labels", "[simulate]") {
    // nominal controller with the filter disabled: every unsafe builtin enters
    // a ground-truth region, every safe one reaches the goal untouched
    for (const Scenario& s : builtins()) {
        EpisodeConfig cfg = fast_cfg(Mode::oracle, 3);
        cfg.filter_enabled = false;
        cfg.start_randomization = 0.0;
        INFO(s.name);
        const EpisodeResult res = run_episode(s, cfg);
        if (s.task_label == TaskLabel::unsafe) {
            REQUIRE(res.metrics.ground_truth_violation);
        } else {
            REQUIRE(!res.metrics.ground_truth_violation);
            REQUIRE(res.metrics.goal_reached);
        }
    }
}

TEST_CASE("oracle filter stays passive on safe tasks", "[simulate]") {
    for (const Scenario& s : builtins()) {
        if (s.task_label != TaskLabel::safe) continue;
        INFO(s.name);
        const EpisodeResult res = run_episode(s, fast_cfg(Mode::oracle, 4));
        REQUIRE(res.metrics.goal_reached);
        REQUIRE(!res.metrics.ground_truth_violation);
        // bounded cumulative interference: the nominal path is respected
        REQUIRE(res.metrics.cumulative_intervention < 2.0);
    }
}

TEST_CASE("oracle mode prevents every unsafe builtin", "[simulate]") {
    for (const Scenario& s : builtins()) {
        if (s.task_label != TaskLabel::unsafe) continue;
        INFO(s.name);
        const EpisodeResult res = run_episode(s, fast_cfg(Mode::oracle, 11));
        REQUIRE(!res.metrics.ground_truth_violation);
        REQUIRE(res.metrics.success);
    }
}

TEST_CASE("geometric mode cannot prevent contextual hazards", "[simulate]") {
    const Scenario& cones = *find_builtin(builtins(), "cones_line");
    const EpisodeResult res = run_episode(cones, fast_cfg(Mode::geometric, 5));
    REQUIRE(res.metrics.ground_truth_violation);
    REQUIRE(res.metrics.failure_attribution == Attribution::ctx);
}

TEST_CASE("identical seeds give bit-identical trajectories", "[simulate]") {
    const Scenario& s = *find_builtin(builtins(), "wet_floor_sign");
    const EpisodeConfig cfg = fast_cfg(Mode::core, 42);
    const EpisodeResult a = run_episode(s, cfg);
    const EpisodeResult b = run_episode(s, cfg);
    REQUIRE(csv_bytes(a.log) == csv_bytes(b.log));
    EpisodeConfig other = cfg;
    other.seed = 43;
    const EpisodeResult c = run_episode(s, other);
    REQUIRE(csv_bytes(a.log) != csv_bytes(c.log));
}

TEST_CASE("blind detector fails with a context attribution", "[simulate]") {
    const Scenario& s = *find_builtin(builtins(), "wet_floor_sign");
    EpisodeConfig cfg = fast_cfg(Mode::core, 7);
    cfg.detection.p0 = 1e-6;  // emission effectively impossible
    cfg.detection.epsilon = 1e-7;
    const EpisodeResult res = run_episode(s, cfg);
    REQUIRE(res.metrics.ground_truth_violation);
    REQUIRE(res.metrics.failure_attribution == Attribution::ctx);
}

TEST_CASE("hazard inside the blind band fails with a grounding attribution", "[simulate]") {
    // the hazard sits closer than min_range from the start, so its predicates
    // arrive but no projected evidence can ever cover the violated cells
    Scenario s;
    s.name = "blind_band";
    s.task_label = TaskLabel::unsafe;
    s.start_pose = {0, 0, 0};
    s.waypoints = {{4.0, 0.0}};
    Entity sign;
    sign.id = "sign";
    sign.class_label = "wet_floor_sign";
    sign.category = EntityCategory::hazard_indicator;
    sign.height = 0.6;
    sign.footprint = rectangle(2.4, -0.15, 2.7, 0.15);
    s.entities.push_back(sign);
    s.unsafe_regions.push_back(
        {inflate_convex(sign.footprint, 1.0), "sign", RegionRule::around_buffer});
    detail::script(s, "sign", {}, {"NEAR(wet_floor_sign)", "AROUND(wet_floor_sign)"});
    validate_scenario(s);

    EpisodeConfig cfg = fast_cfg(Mode::core, 5);
    cfg.detection.p0 = 0.999;  // detection is not the failing stage
    cfg.detection.epsilon = 1e-6;
    cfg.start_randomization = 0.0;
    const EpisodeResult res = run_episode(s, cfg);
    REQUIRE(res.metrics.ground_truth_violation);
    REQUIRE(!res.log.deliveries.empty());
    REQUIRE(res.metrics.failure_attribution == Attribution::grnd);
}

TEST_CASE("disabled filter with a correct barrier is an enforcement failure", "[simulate]") {
    const Scenario& cones = *find_builtin(builtins(), "cones_line");
    EpisodeConfig cfg = fast_cfg(Mode::oracle, 2);
    cfg.filter_enabled = false;
    const EpisodeResult res = run_episode(cones, cfg);
    REQUIRE(res.metrics.ground_truth_violation);
    REQUIRE(res.metrics.failure_attribution == Attribution::enf);
}

TEST_CASE("late delivery under the robot logs an assumption violation", "[simulate]") {
    // 16 s of latency puts the robot inside the dilated hazard blob by the
    // time the first frame is delivered: the flip is logged and applied
    Scenario s = *find_builtin(builtins(), "wet_floor_sign");
    for (auto& e : s.entities)
        if (e.id == "sign") {
            e.footprint = rectangle(6.85, -0.15, 7.15, 0.15);
        }
    s.unsafe_regions.clear();
    s.unsafe_regions.push_back(
        {inflate_convex(s.find_entity("sign")->footprint, s.around_buffer), "sign",
         RegionRule::around_buffer});
    s.unsafe_regions.push_back(
        {inflate_convex(s.find_entity("table")->footprint, s.near_buffer), "table",
         RegionRule::near_buffer});
    validate_scenario(s);

    EpisodeConfig cfg = fast_cfg(Mode::core, 12);
    cfg.frame_period = 16.0;
    cfg.perception_latency = 16.0;
    cfg.horizon = 18.0;  // long enough to watch the flip and the recovery
    cfg.detection.p0 = 0.999;
    cfg.detection.epsilon = 1e-6;
    cfg.start_randomization = 0.0;
    const EpisodeResult res = run_episode(s, cfg);
    bool flagged = false;
    for (const auto& d : res.log.deliveries) flagged = flagged || d.assumption1_violation;
    REQUIRE(flagged);
    REQUIRE(res.metrics.min_h < 0.0);  // the flip is applied, not clamped
    // recovery: the constraint pushes h back up instead of freezing
    REQUIRE(res.log.ticks.back().h > res.metrics.min_h + 0.05);
}

TEST_CASE("suite execution is parallel-deterministic", "[simulate]") {
    std::vector<Scenario> subset = {*find_builtin(builtins(), "open_warehouse"),
                                    *find_builtin(builtins(), "cones_line")};
    const std::vector<Mode> modes = {Mode::oracle, Mode::geometric};
    EpisodeConfig base = fast_cfg(Mode::core, 0);
    const SuiteResult serial = run_suite(subset, modes, 2, 77, base, 1);
    const SuiteResult parallel = run_suite(subset, modes, 2, 77, base, 2);
    REQUIRE(serial.rows.size() == 8);
    REQUIRE(parallel.rows.size() == 8);
    for (size_t i = 0; i < serial.rows.size(); ++i) {
        REQUIRE(serial.rows[i].seed == parallel.rows[i].seed);
        REQUIRE(serial.rows[i].metrics.success == parallel.rows[i].metrics.success);
        REQUIRE(serial.rows[i].metrics.path_length ==
                parallel.rows[i].metrics.path_length);
    }
    // derived seeds differ across repeats and modes
    REQUIRE(serial.rows[0].seed != serial.rows[1].seed);
}

TEST_CASE("suite table formats every mode row", "[simulate]") {
    std::vector<Scenario> subset = {*find_builtin(builtins(), "open_warehouse")};
    const SuiteResult suite =
        run_suite(subset, {Mode::oracle}, 1, 1, fast_cfg(Mode::oracle, 0), 1);
    const std::string table = format_suite_table(suite);
    REQUIRE(table.find("oracle") != std::string::npos);
    REQUIRE(table.find("100.0%") != std::string::npos);
}
