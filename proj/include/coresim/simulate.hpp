#pragma once

#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coresim/camera.hpp"
#include "coresim/cbf_filter.hpp"
#include "coresim/detection.hpp"
#include "coresim/mask_ops.hpp"
#include "coresim/safety_grid.hpp"
#include "coresim/stats.hpp"
#include "coresim/world.hpp"

namespace coresim {

/// Episode execution mode: the full stochastic pipeline, the ground-truth
/// oracle, the fixed generic-rule baseline, or metric-only sensing. All modes
/// share the control synthesis layer.
enum class Mode { core, oracle, no_context, geometric };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::core: return "core";
        case Mode::oracle: return "oracle";
        case Mode::no_context: return "no_context";
        case Mode::geometric: return "geometric";
    }
    return "?";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "core") return Mode::core;
    if (s == "oracle") return Mode::oracle;
    if (s == "no_context") return Mode::no_context;
    if (s == "geometric") return Mode::geometric;
    throw std::invalid_argument("unknown mode: '" + s + "'");
}

struct ControllerGains {
    double kp = 0.8;                 // 1/s proportional position gain
    double kw = 1.5;                 // 1/s heading gain
    double waypoint_tolerance = 0.3; // m
    double v_max = 0.35;             // m/s planar norm
    double w_max = 1.0;              // rad/s
};

struct EpisodeConfig {
    Mode mode = Mode::core;
    uint64_t seed = 1;
    double dt = 0.1;
    double horizon = 120.0;
    double frame_period = 3.0;
    double perception_latency = 3.0;
    DetectionModel detection{0.75, 1e-3, 25.0, 3.0, 7.0};
    CameraModel camera;
    ControllerGains gains;
    double grid_resolution = 0.2;
    double tau = 0.5;
    TreatUnknown treat_unknown = TreatUnknown::safe;
    int dilation_px = 50;
    ClassK alpha;
    double start_randomization = 0.5;  // m
    bool filter_enabled = true;        // test hook for enforcement-failure injection
};

struct TickRecord {
    double t = 0.0;
    RobotState state;
    ControlInput u_nom;
    ControlInput u_safe;
    double h = 0.0;
    double margin = 0.0;
    bool intervened = false;
};

struct DeliveryRecord {
    double capture_time = 0.0;
    double delivery_time = 0.0;
    int n_safe_predicates = 0;
    int n_unsafe_predicates = 0;
    std::vector<std::string> emitted_sources;
    std::vector<Predicate> predicates_unsafe;
    bool assumption1_violation = false;
};

struct TrajectoryLog {
    std::vector<TickRecord> ticks;
    std::vector<DeliveryRecord> deliveries;
    int grounding_failures = 0;
    int filter_degeneracies = 0;
};

enum class Attribution { none, ctx, grnd, enf };

inline const char* to_string(Attribution a) {
    switch (a) {
        case Attribution::none: return "none";
        case Attribution::ctx: return "ctx";
        case Attribution::grnd: return "grnd";
        case Attribution::enf: return "enf";
    }
    return "?";
}

struct RunMetrics {
    bool success = false;
    Attribution failure_attribution = Attribution::none;
    double min_h = std::numeric_limits<double>::infinity();
    bool ground_truth_violation = false;
    double violation_time = -1.0;
    bool goal_reached = false;
    double path_length = 0.0;
    double cumulative_intervention = 0.0;  // sum ||u_safe - u_nom|| * dt
};

/**
 * Waypoint follower: proportional pursuit of the active waypoint in the body
 * frame (integral/derivative terms zeroed), heading turned toward the target,
 * commands clipped to the speed bounds. Advances within the tolerance radius
 * and commands zero at the final waypoint.
 */
class NominalController {
public:
    NominalController(std::vector<Vec2> waypoints, ControllerGains gains)
        : waypoints_(std::move(waypoints)), gains_(gains) {
        if (waypoints_.empty())
            throw std::invalid_argument("nominal_controller: empty waypoint list");
    }

    ControlInput operator()(const RobotState& s) {
        while (active_ + 1 < waypoints_.size() &&
               (waypoints_[active_] - s.position()).norm() <= gains_.waypoint_tolerance)
            ++active_;
        const Vec2 err = waypoints_[active_] - s.position();
        if (active_ + 1 == waypoints_.size() && err.norm() <= gains_.waypoint_tolerance)
            return {};
        const double c = std::cos(s.theta), sn = std::sin(s.theta);
        Vec2 body{c * err.x + sn * err.y, -sn * err.x + c * err.y};
        ControlInput u;
        u.vx = gains_.kp * body.x;
        u.vy = gains_.kp * body.y;
        const double speed = u.planar_norm();
        if (speed > gains_.v_max) {
            u.vx *= gains_.v_max / speed;
            u.vy *= gains_.v_max / speed;
        }
        const double bearing = std::atan2(err.y, err.x);
        u.omega = std::clamp(gains_.kw * wrap_angle(bearing - s.theta), -gains_.w_max,
                             gains_.w_max);
        return u;
    }

    size_t active_waypoint() const { return active_; }

private:
    std::vector<Vec2> waypoints_;
    ControllerGains gains_;
    size_t active_ = 0;
};

namespace detail {

inline Barrier make_barrier(const Scenario& scenario, const EpisodeConfig& cfg) {
    Vec2 lo, hi;
    scenario_bounds(scenario, lo, hi);
    const double margin = 2.0 * cfg.detection.max_range;
    lo = lo - Vec2{margin, margin};
    hi = hi + Vec2{margin, margin};
    const double res = cfg.grid_resolution;
    // snap origin to the resolution lattice for reproducible cell layouts
    lo.x = std::floor(lo.x / res) * res;
    lo.y = std::floor(lo.y / res) * res;
    const int nx = static_cast<int>(std::ceil((hi.x - lo.x) / res)) + 1;
    const int ny = static_cast<int>(std::ceil((hi.y - lo.y) / res)) + 1;
    Barrier b;
    b.grid = SafetyGrid(res, lo, nx, ny);
    b.tau = cfg.tau;
    b.treat_unknown = cfg.treat_unknown;
    rebuild_safe_set(b);
    return b;
}

/// Oracle mode: rasterize the ground truth into the grid at t=0.
inline void write_ground_truth(const Scenario& scenario, SafetyGrid& grid) {
    const bool surfaces = scenario.declares_navigable_surfaces();
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            const Vec2 c = grid.center(i, j);
            bool unsafe = false;
            for (const auto& r : scenario.unsafe_regions)
                if (point_in_convex_polygon(c, r.polygon)) {
                    unsafe = true;
                    break;
                }
            if (!unsafe && surfaces) {
                bool on_surface = false;
                for (const auto& e : scenario.entities)
                    if (e.category == EntityCategory::navigable_surface &&
                        point_in_convex_polygon(c, e.footprint)) {
                        on_surface = true;
                        break;
                    }
                unsafe = !on_surface;
            }
            if (unsafe) grid.add_unsafe(i, j);
        }
}

/// Geometric baseline: anything with physical height is an obstacle.
inline PixelMask metric_obstacle_mask(const Scenario& scenario, const Frame& f) {
    PixelMask m(f.width, f.height);
    for (size_t k = 0; k < f.entity_ids.size(); ++k) {
        const uint16_t id = f.entity_ids[k];
        if (id != 0 && scenario.entities[id - 1].height > 0.0) m.bits[k] = 1;
    }
    return m;
}

/// No-context baseline: fixed generic table, NEAR on metric-obstacle classes.
inline PerceptionEvent no_context_event(const Scenario& scenario, const Frame& f) {
    PerceptionEvent ev;
    ev.capture_time = f.timestamp;
    std::vector<uint8_t> visible(scenario.entities.size() + 1, 0);
    for (uint16_t id : f.entity_ids)
        if (id) visible[id] = 1;
    for (size_t i = 0; i < scenario.entities.size(); ++i) {
        const Entity& e = scenario.entities[i];
        if (!visible[i + 1] || e.category != EntityCategory::metric_obstacle) continue;
        Predicate p{SpatialOp::NEAR, e.class_label};
        if (std::find(ev.predicates_unsafe.begin(), ev.predicates_unsafe.end(), p) ==
            ev.predicates_unsafe.end())
            ev.predicates_unsafe.push_back(p);
        ev.emitted_sources.push_back(e.id);
    }
    return ev;
}

struct PendingDelivery {
    Frame frame;
    PerceptionEvent event;
    PixelMask safe_mask;    // pre-grounded for geometric mode
    PixelMask unsafe_mask;
    bool pre_grounded = false;
};

}  // namespace detail

struct ViolationFacts {
    Vec2 cell_center;
    double time = 0.0;
    bool cell_was_safe = false;    // barrier membership of the violated cell
    bool constraints_given = false;  // oracle mode: everything emitted a priori
};

/**
 * Failure attribution, precedence ctx > grnd > enf: ctx when no delivered
 * event carried a generating predicate of the violated region in time, grnd
 * when the predicates arrived but the violated cell stayed in the safe set,
 * enf when the cell was already out of the safe set yet the robot entered.
 */
inline Attribution classify_failure(const Scenario& scenario, const ViolationFacts& facts,
                                    const std::vector<DeliveryRecord>& deliveries) {
    std::vector<const Entity*> sources;
    for (const auto& r : scenario.unsafe_regions)
        if (point_in_convex_polygon(facts.cell_center, r.polygon))
            if (const Entity* e = scenario.find_entity(r.source_entity)) sources.push_back(e);
    if (sources.empty() && scenario.declares_navigable_surfaces()) {
        // off-surface violation: attribute to the non-navigable surface underfoot
        for (const auto& e : scenario.entities)
            if (e.category == EntityCategory::non_navigable_surface &&
                point_in_convex_polygon(facts.cell_center, e.footprint))
                sources.push_back(&e);
    }

    bool emitted_in_time = facts.constraints_given;
    if (!emitted_in_time) {
        for (const Entity* src : sources) {
            const auto it = scenario.scripted_predicates.find(src->id);
            if (it == scenario.scripted_predicates.end()) continue;
            for (const auto& d : deliveries) {
                if (d.delivery_time > facts.time) continue;
                for (const Predicate& gen : it->second.unsafe)
                    if (std::find(d.predicates_unsafe.begin(), d.predicates_unsafe.end(), gen) !=
                        d.predicates_unsafe.end()) {
                        emitted_in_time = true;
                        break;
                    }
                if (emitted_in_time) break;
            }
            if (emitted_in_time) break;
        }
    }
    if (!emitted_in_time) return Attribution::ctx;
    return facts.cell_was_safe ? Attribution::grnd : Attribution::enf;
}

struct EpisodeResult {
    TrajectoryLog log;
    RunMetrics metrics;
    Barrier final_barrier;
    RobotState final_state;
};

/**
 * Closed-loop episode: ticks at dt; frames captured and delivered on the
 * latency schedule mutate the grid only at delivery instants; the filter runs
 * every tick; terminates at goal, horizon, or first ground-truth violation
 * (checked at cell-center resolution). Deterministic given the seed.
 */
inline EpisodeResult run_episode(const Scenario& scenario, const EpisodeConfig& cfg) {
    validate_scenario(scenario);
    if (cfg.horizon <= 0.0) throw std::invalid_argument("episode: horizon must be > 0");
    std::mt19937_64 rng(cfg.seed);

    EpisodeResult out;
    Barrier barrier = detail::make_barrier(scenario, cfg);

    RobotState s = scenario.start_pose;
    if (cfg.start_randomization > 0.0) {
        std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double a = ang(rng);
        const double r = cfg.start_randomization * std::sqrt(unit(rng));
        s.x += r * std::cos(a);
        s.y += r * std::sin(a);
    }

    const bool unsafe_task = scenario.task_label == TaskLabel::unsafe;
    if (cfg.mode == Mode::oracle) {
        detail::write_ground_truth(scenario, barrier.grid);
        rebuild_safe_set(barrier);
        DeliveryRecord d;
        d.capture_time = 0.0;
        d.delivery_time = 0.0;
        out.log.deliveries.push_back(d);
    }

    NominalController nominal(scenario.waypoints, cfg.gains);
    std::deque<detail::PendingDelivery> pending;
    const int ticks = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
    int next_capture = 0;
    std::optional<ViolationFacts> violation;

    const Vec2 goal = scenario.waypoints.back();
    for (int k = 0; k <= ticks; ++k) {
        const double t = k * cfg.dt;

        if (cfg.mode != Mode::oracle) {
            while (t + 1e-9 >= next_capture * cfg.frame_period) {
                const double ct = next_capture * cfg.frame_period;
                detail::PendingDelivery pd;
                pd.frame = render_frame(scenario, s, cfg.camera, ct);
                if (cfg.mode == Mode::core) {
                    pd.event = oracle_predicates(scenario, pd.frame, cfg.detection, rng);
                } else if (cfg.mode == Mode::no_context) {
                    pd.event = detail::no_context_event(scenario, pd.frame);
                } else {  // geometric
                    pd.safe_mask = PixelMask(pd.frame.width, pd.frame.height);
                    pd.unsafe_mask = detail::metric_obstacle_mask(scenario, pd.frame);
                    pd.pre_grounded = true;
                    pd.event.capture_time = ct;
                }
                pd.event.frame_id = next_capture;
                pd.event.delivery_time = ct + cfg.perception_latency;
                pending.push_back(std::move(pd));
                ++next_capture;
            }
            while (!pending.empty() && pending.front().event.delivery_time <= t + 1e-9) {
                detail::PendingDelivery pd = std::move(pending.front());
                pending.pop_front();
                PixelMask safe_mask, unsafe_mask;
                if (pd.pre_grounded) {
                    safe_mask = std::move(pd.safe_mask);
                    unsafe_mask = std::move(pd.unsafe_mask);
                } else {
                    const auto class_masks = class_masks_from_frame(pd.frame);
                    std::vector<PixelMask> safes, unsafes;
                    for (const Predicate& p : pd.event.predicates_safe) {
                        OperatorResult r = apply_operator(p, class_masks, cfg.dilation_px);
                        if (!r.known_class) ++out.log.grounding_failures;
                        else safes.push_back(std::move(r.mask));
                    }
                    for (const Predicate& p : pd.event.predicates_unsafe) {
                        OperatorResult r = apply_operator(p, class_masks, cfg.dilation_px);
                        if (!r.known_class) ++out.log.grounding_failures;
                        else unsafes.push_back(std::move(r.mask));
                    }
                    if (safes.empty() && unsafes.empty()) {
                        safe_mask = PixelMask(pd.frame.width, pd.frame.height);
                        unsafe_mask = PixelMask(pd.frame.width, pd.frame.height);
                    } else {
                        ImageSafeSet iss = compose_image_safe_set(safes, unsafes);
                        safe_mask = std::move(iss.safe);
                        unsafe_mask = std::move(iss.unsafe_union);
                    }
                }
                project_and_accumulate(safe_mask, unsafe_mask, pd.frame, pd.frame.camera_pose,
                                       barrier.grid, cfg.detection.min_range,
                                       cfg.detection.max_range);
                const GridIndex rc = barrier.grid.cell_of(s.position());
                const bool was_safe = barrier.cell_safe(rc.i, rc.j);
                rebuild_safe_set(barrier);

                DeliveryRecord d;
                d.capture_time = pd.event.capture_time;
                d.delivery_time = pd.event.delivery_time;
                d.n_safe_predicates = static_cast<int>(pd.event.predicates_safe.size());
                d.n_unsafe_predicates = static_cast<int>(pd.event.predicates_unsafe.size());
                d.emitted_sources = pd.event.emitted_sources;
                d.predicates_unsafe = pd.event.predicates_unsafe;
                d.assumption1_violation = was_safe && !barrier.cell_safe(rc.i, rc.j);
                out.log.deliveries.push_back(std::move(d));
            }
        }

        ControlInput u_nom = nominal(s);
        ControlInput u_safe = u_nom;
        FilterDiagnostics diag;
        if (cfg.filter_enabled) {
            auto [u, dg] = filter_step(s, u_nom, barrier, cfg.alpha);
            u_safe = u;
            diag = dg;
            if (diag.degenerate) ++out.log.filter_degeneracies;
        } else {
            diag.h = barrier_value(barrier, s.position());
        }
        out.metrics.min_h = std::min(out.metrics.min_h, diag.h);
        out.metrics.cumulative_intervention += diag.intervention * cfg.dt;

        TickRecord rec;
        rec.t = t;
        rec.state = s;
        rec.u_nom = u_nom;
        rec.u_safe = u_safe;
        rec.h = diag.h;
        rec.margin = diag.margin;
        rec.intervened = diag.intervened;
        out.log.ticks.push_back(rec);

        // ground-truth scoring at cell-center resolution
        const GridIndex rc = barrier.grid.cell_of(s.position());
        const Vec2 cc = barrier.grid.center(rc.i, rc.j);
        if (!ground_truth_safe(scenario, cc)) {
            ViolationFacts vf;
            vf.cell_center = cc;
            vf.time = t;
            vf.cell_was_safe = barrier.cell_safe(rc.i, rc.j);
            vf.constraints_given = cfg.mode == Mode::oracle;
            violation = vf;
            out.metrics.ground_truth_violation = true;
            out.metrics.violation_time = t;
            break;
        }
        if ((goal - s.position()).norm() <= cfg.gains.waypoint_tolerance) {
            out.metrics.goal_reached = true;
            break;
        }

        const RobotState next = step_dynamics(s, u_safe, cfg.dt);
        out.metrics.path_length += (next.position() - s.position()).norm();
        s = next;
    }

    out.metrics.success = unsafe_task ? !out.metrics.ground_truth_violation
                                      : out.metrics.goal_reached &&
                                            !out.metrics.ground_truth_violation;
    if (violation)
        out.metrics.failure_attribution =
            classify_failure(scenario, *violation, out.log.deliveries);
    else if (!out.metrics.success)
        out.metrics.failure_attribution = Attribution::grnd;  // stalled: spurious grounding blocked traversal
    out.final_barrier = std::move(barrier);
    out.final_state = s;
    return out;
}

/// Per-tick diagnostics, bit-stable formatting for determinism checks.
inline void write_trajectory_csv(const TrajectoryLog& log, const std::string& path) {
    std::ofstream out(path);
    out << "t,x,y,theta,vx_nom,vy_nom,w_nom,vx_safe,vy_safe,w_safe,h,margin,intervened\n";
    char buf[512];
    for (const auto& r : log.ticks) {
        std::snprintf(buf, sizeof(buf),
                      "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", r.t,
                      r.state.x, r.state.y, r.state.theta, r.u_nom.vx, r.u_nom.vy, r.u_nom.omega,
                      r.u_safe.vx, r.u_safe.vy, r.u_safe.omega, r.h, r.margin,
                      r.intervened ? 1 : 0);
        out << buf;
    }
}

struct SuiteRow {
    std::string scenario;
    Mode mode = Mode::core;
    int repeat = 0;
    uint64_t seed = 0;
    RunMetrics metrics;
    TaskLabel task_label = TaskLabel::safe;
};

struct ModeAggregate {
    Mode mode = Mode::core;
    int episodes = 0;
    int safe_total = 0, safe_success = 0;
    int unsafe_total = 0, unsafe_success = 0;
    int failures = 0;
    int ctx = 0, grnd = 0, enf = 0;

    double total_rate() const {
        return episodes ? 100.0 * (safe_success + unsafe_success) / episodes : 0.0;
    }
    double safe_rate() const { return safe_total ? 100.0 * safe_success / safe_total : 0.0; }
    double unsafe_rate() const {
        return unsafe_total ? 100.0 * unsafe_success / unsafe_total : 0.0;
    }
    double ctx_rate() const { return failures ? 100.0 * ctx / failures : 0.0; }
    double grnd_rate() const { return failures ? 100.0 * grnd / failures : 0.0; }
    double enf_rate() const { return failures ? 100.0 * enf / failures : 0.0; }
};

struct SuiteResult {
    std::vector<SuiteRow> rows;
    std::vector<ModeAggregate> aggregates;
};

/**
 * Runs scenarios x modes x repeats with per-episode seeds derived from the
 * base seed. Episodes are independent and may run on up to `jobs` workers;
 * rows and aggregation order stay deterministic. The optional sink receives
 * every finished episode (from worker threads; it must only touch
 * per-episode state such as distinct output files).
 */
using EpisodeSink = std::function<void(const SuiteRow&, const EpisodeResult&)>;

inline SuiteResult run_suite(const std::vector<Scenario>& scenarios,
                             const std::vector<Mode>& modes, int repeats, uint64_t base_seed,
                             const EpisodeConfig& base_cfg, int jobs = 1,
                             const EpisodeSink& sink = {}) {
    if (repeats < 1) throw std::invalid_argument("run_suite: repeats must be >= 1");
    struct Job {
        size_t scenario_idx;
        Mode mode;
        int repeat;
        uint64_t seed;
    };
    std::vector<Job> jobs_list;
    for (Mode m : modes)
        for (size_t si = 0; si < scenarios.size(); ++si)
            for (int r = 0; r < repeats; ++r)
                jobs_list.push_back(
                    {si, m, r,
                     derive_seed(base_seed, si, static_cast<uint64_t>(m), static_cast<uint64_t>(r))});

    std::vector<SuiteRow> rows(jobs_list.size());
    auto work = [&](size_t begin, size_t stride) {
        for (size_t i = begin; i < jobs_list.size(); i += stride) {
            const Job& jb = jobs_list[i];
            EpisodeConfig cfg = base_cfg;
            cfg.mode = jb.mode;
            cfg.seed = jb.seed;
            EpisodeResult res = run_episode(scenarios[jb.scenario_idx], cfg);
            SuiteRow row;
            row.scenario = scenarios[jb.scenario_idx].name;
            row.mode = jb.mode;
            row.repeat = jb.repeat;
            row.seed = jb.seed;
            row.metrics = res.metrics;
            row.task_label = scenarios[jb.scenario_idx].task_label;
            if (sink) sink(row, res);
            rows[i] = std::move(row);
        }
    };
    const int workers = std::max(1, jobs);
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::future<void>> futs;
        for (int w = 0; w < workers; ++w)
            futs.push_back(std::async(std::launch::async, work, static_cast<size_t>(w),
                                      static_cast<size_t>(workers)));
        for (auto& f : futs) f.get();
    }

    SuiteResult out;
    out.rows = std::move(rows);
    for (Mode m : modes) {
        ModeAggregate agg;
        agg.mode = m;
        for (const SuiteRow& r : out.rows) {
            if (r.mode != m) continue;
            ++agg.episodes;
            const bool safe_task = r.task_label == TaskLabel::safe;
            if (safe_task) {
                ++agg.safe_total;
                agg.safe_success += r.metrics.success;
            } else {
                ++agg.unsafe_total;
                agg.unsafe_success += r.metrics.success;
            }
            if (!r.metrics.success) {
                ++agg.failures;
                switch (r.metrics.failure_attribution) {
                    case Attribution::ctx: ++agg.ctx; break;
                    case Attribution::grnd: ++agg.grnd; break;
                    case Attribution::enf: ++agg.enf; break;
                    case Attribution::none: break;
                }
            }
        }
        out.aggregates.push_back(agg);
    }
    return out;
}

/// Table-style text summary: success split plus failure attribution shares.
inline std::string format_suite_table(const SuiteResult& suite) {
    std::string s;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-12s %8s %8s %8s %8s %8s %8s\n", "mode", "total", "safe",
                  "unsafe", "ctx", "grnd", "enf");
    s += buf;
    s += "  (success rates; attribution columns are shares of failed episodes)\n";
    for (const auto& a : suite.aggregates) {
        std::snprintf(buf, sizeof(buf), "%-12s %7.1f%% %7.1f%% %7.1f%% %7.1f%% %7.1f%% %7.1f%%\n",
                      to_string(a.mode), a.total_rate(), a.safe_rate(), a.unsafe_rate(),
                      a.ctx_rate(), a.grnd_rate(), a.enf_rate());
        s += buf;
    }
    return s;
}

}  // namespace coresim
