// Command-line front end: closed-loop simulation, certificate synthesis,
// report aggregation, and scenario management.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "coresim/builtin_scenarios.hpp"
#include "coresim/certificate.hpp"
#include "coresim/scenario_io.hpp"
#include "coresim/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coresim;

namespace {

std::string episode_stem(const std::string& scenario, Mode mode, int repeat) {
    return scenario + "_" + to_string(mode) + "_" + std::to_string(repeat);
}

json metrics_to_json(const SuiteRow& row, const TrajectoryLog& log) {
    json j;
    j["scenario"] = row.scenario;
    j["mode"] = to_string(row.mode);
    j["repeat"] = row.repeat;
    j["seed"] = row.seed;
    j["task_label"] = row.task_label == TaskLabel::unsafe ? "unsafe" : "safe";
    j["success"] = row.metrics.success;
    j["failure_attribution"] = to_string(row.metrics.failure_attribution);
    j["min_h"] = row.metrics.min_h;
    j["ground_truth_violation"] = row.metrics.ground_truth_violation;
    j["violation_time"] = row.metrics.violation_time;
    j["goal_reached"] = row.metrics.goal_reached;
    j["path_length"] = row.metrics.path_length;
    j["cumulative_intervention"] = row.metrics.cumulative_intervention;
    j["ticks"] = log.ticks.size();
    j["deliveries"] = log.deliveries.size();
    int a1 = 0;
    for (const auto& d : log.deliveries) a1 += d.assumption1_violation;
    j["assumption1_violations"] = a1;
    j["grounding_failures"] = log.grounding_failures;
    j["filter_degeneracies"] = log.filter_degeneracies;
    return j;
}

std::string suggest_scenarios(const std::vector<Scenario>& all, const std::string& query) {
    std::string out;
    for (const auto& s : all) {
        const size_t n = std::min<size_t>(4, std::min(query.size(), s.name.size()));
        if (n > 0 && (s.name.find(query.substr(0, n)) != std::string::npos ||
                      query.find(s.name.substr(0, n)) != std::string::npos))
            out += "  " + s.name + "\n";
    }
    if (out.empty())
        for (const auto& s : all) out += "  " + s.name + "\n";
    return out;
}

struct SimulateOptions {
    std::string scenario;
    bool suite = false;
    std::string mode = "core";
    std::string modes = "core,oracle,no_context,geometric";
    int repeats = 5;
    uint64_t seed = 1;
    std::string out_dir = "out";
    int jobs = 1;
    bool export_grids = false;
    EpisodeConfig cfg;
};

std::vector<Mode> parse_modes(const std::string& csv) {
    std::vector<Mode> modes;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) modes.push_back(mode_from_string(tok));
    if (modes.empty()) throw std::invalid_argument("no modes given");
    return modes;
}

int cmd_simulate(const SimulateOptions& opt) {
    const std::vector<Scenario> all = builtin_scenarios();
    fs::create_directories(opt.out_dir);

    std::vector<Scenario> chosen;
    if (opt.suite) {
        chosen = all;
    } else {
        if (const Scenario* s = find_builtin(all, opt.scenario)) {
            chosen.push_back(*s);
        } else if (fs::exists(opt.scenario)) {
            chosen.push_back(load_scenario(opt.scenario));
        } else {
            std::cerr << "unknown scenario '" << opt.scenario
                      << "'; available builtins:\n" << suggest_scenarios(all, opt.scenario);
            return 1;
        }
    }
    const std::vector<Mode> modes =
        opt.suite ? parse_modes(opt.modes) : std::vector<Mode>{mode_from_string(opt.mode)};
    const int repeats = opt.suite ? opt.repeats : 1;

    const EpisodeSink sink = [&](const SuiteRow& row, const EpisodeResult& res) {
        const std::string stem = episode_stem(row.scenario, row.mode, row.repeat);
        write_trajectory_csv(res.log, opt.out_dir + "/" + stem + "_trajectory.csv");
        std::ofstream js(opt.out_dir + "/" + stem + "_summary.json");
        js << metrics_to_json(row, res.log).dump(2) << "\n";
        if (opt.export_grids) {
            write_grid_snapshot(res.final_barrier, opt.out_dir + "/" + stem + "_grid.txt");
            write_sdf_csv(res.final_barrier, opt.out_dir + "/" + stem + "_sdf.csv");
        }
    };

    SuiteResult suite;
    if (opt.suite) {
        suite = run_suite(chosen, modes, repeats, opt.seed, opt.cfg, std::max(1, opt.jobs),
                          sink);
    } else {
        // single episode: --seed is used verbatim
        EpisodeConfig cfg = opt.cfg;
        cfg.mode = modes[0];
        cfg.seed = opt.seed;
        const EpisodeResult res = run_episode(chosen[0], cfg);
        SuiteRow row;
        row.scenario = chosen[0].name;
        row.mode = modes[0];
        row.repeat = 0;
        row.seed = opt.seed;
        row.metrics = res.metrics;
        row.task_label = chosen[0].task_label;
        sink(row, res);
        suite.rows.push_back(row);
        ModeAggregate agg;
        agg.mode = modes[0];
        agg.episodes = 1;
        if (row.task_label == TaskLabel::safe) {
            agg.safe_total = 1;
            agg.safe_success = row.metrics.success;
        } else {
            agg.unsafe_total = 1;
            agg.unsafe_success = row.metrics.success;
        }
        if (!row.metrics.success) {
            agg.failures = 1;
            agg.ctx = row.metrics.failure_attribution == Attribution::ctx;
            agg.grnd = row.metrics.failure_attribution == Attribution::grnd;
            agg.enf = row.metrics.failure_attribution == Attribution::enf;
        }
        suite.aggregates.push_back(agg);
    }

    const std::string table = format_suite_table(suite);
    std::cout << table;
    std::ofstream tf(opt.out_dir + "/suite_table.txt");
    tf << table;
    json summary;
    summary["episodes"] = json::array();
    for (const SuiteRow& r : suite.rows) {
        json je;
        je["scenario"] = r.scenario;
        je["mode"] = to_string(r.mode);
        je["repeat"] = r.repeat;
        je["seed"] = r.seed;
        je["success"] = r.metrics.success;
        je["failure_attribution"] = to_string(r.metrics.failure_attribution);
        summary["episodes"].push_back(je);
    }
    summary["aggregates"] = json::array();
    for (const auto& a : suite.aggregates) {
        json ja;
        ja["mode"] = to_string(a.mode);
        ja["episodes"] = a.episodes;
        ja["total_rate"] = a.total_rate();
        ja["safe_rate"] = a.safe_rate();
        ja["unsafe_rate"] = a.unsafe_rate();
        ja["ctx_rate"] = a.ctx_rate();
        ja["grnd_rate"] = a.grnd_rate();
        ja["enf_rate"] = a.enf_rate();
        summary["aggregates"].push_back(ja);
    }
    std::ofstream sf(opt.out_dir + "/suite_summary.json");
    sf << summary.dump(2) << "\n";
    return 0;
}

struct CertifyOptions {
    double c = 0.0;       // 0 = search
    double ell = 0.0;     // 0 = search
    double p0 = 0.75;
    double epsilon = 1e-3;
    double D = 4.0;
    double R = 4.0;
    double delta = 0.1;
    double gamma = 0.0;
    double speed = 0.35;
    double latency = 3.0;
    std::string prior = "uniform";
    int k_max = 200;
    uint64_t validate_trials = 0;
    uint64_t seed = 1;
};

int cmd_certify(const CertifyOptions& opt) {
    DetectionModel model;
    model.p0 = opt.p0;
    model.epsilon = opt.epsilon;
    model.D = opt.D;
    const PriorKind prior = opt.prior == "point_mass" ? PriorKind::point_mass_at_R
                                                      : PriorKind::uniform_on_R_D;
    const int budget = nondimensionalize(opt.speed, opt.latency, opt.D, opt.k_max);
    std::printf("measurement budget: %d per %.3g m traversal (speed %.3g m/s, latency %.3g s)\n",
                budget, opt.D, opt.speed, opt.latency);
    std::printf("detection model: m(r) = max(0, %.4g - %.4g r / %.4g), zero beyond D\n",
                model.p0, model.epsilon, model.D);

    InverseDistanceParams params{opt.c, opt.ell};
    bool searched = false;
    if (params.c <= 0.0 || params.ell <= 0.0) {
        const CertificateSearch search = search_certificate(
            opt.delta, opt.gamma, std::max(1, budget), model, prior, opt.R, opt.speed,
            opt.latency);
        searched = true;
        int feasible_points = 0;
        for (const auto& pt : search.grid) feasible_points += pt.result.feasible;
        std::printf("grid search over (c, ell): %d/%zu feasible points\n", feasible_points,
                    search.grid.size());
        params = search.best.params;
        if (!search.any_feasible) {
            std::printf("no feasible certificate at delta=%.4g gamma=%.4g within budget %d\n",
                        opt.delta, opt.gamma, budget);
            std::printf("best residual %.6g at c=%.4g ell=%.4g (infeasibility is the answer)\n",
                        search.best.result.residual, params.c, params.ell);
            return 0;
        }
    }

    CertificateProblem prob;
    prob.params = params;
    prob.model = model;
    prob.R = opt.R;
    prob.delta = opt.delta;
    prob.gamma = opt.gamma;
    prob.prior = prior;
    prob.speed = opt.speed;
    prob.latency = opt.latency;

    std::printf("\nchosen parameters: c=%.6g ell=%.6g%s\n", params.c, params.ell,
                searched ? " (search, max residual)" : "");
    std::printf("%-6s %-14s %-14s %-10s %s\n", "kappa", "lhs", "rhs", "feasible", "miss-prob");
    const double rhs = prob.rhs();
    for (int kappa = 0; kappa <= std::max(1, budget) + 1; ++kappa) {
        const MtsEvaluation ev = mts_lhs(prob, kappa + 1);
        std::printf("%-6d %-14.6g %-14.6g %-10s %.6g\n", kappa, ev.lhs, rhs,
                    ev.lhs <= rhs ? "yes" : "no", ev.miss_probability);
    }

    const CertificateResult mts = solve_mts(prob, std::max(1, budget));
    const CertificateResult nopm = solve_nopm(prob, opt.k_max);
    std::printf("\nbeeline (speed) certificate: %s at kappa*=%d, residual %.6g, "
                "max safe speed %.4g m/s\n",
                mts.feasible ? "FEASIBLE" : "infeasible", mts.kappa, mts.residual,
                mts.max_safe_speed);
    std::printf("per-position certificate: %s at kappa*=%d (budget %d)\n",
                nopm.feasible ? "FEASIBLE" : "infeasible", nopm.kappa, budget);

    // canonical reference point, reported for reproducibility
    CertificateProblem ref = prob;
    ref.params = {1.0, 0.1};
    const CertificateResult ref_res = solve_mts(ref, std::max(1, budget));
    std::printf("reference point (c=1, ell=0.1): %s at kappa*=%d\n",
                ref_res.feasible ? "feasible" : "infeasible", ref_res.kappa);

    if (opt.validate_trials > 0) {
        std::mt19937_64 rng(opt.seed);
        const int kappa = std::max(1, budget);
        const MonteCarloResult mc =
            monte_carlo_validate(kappa, model, opt.validate_trials, rng);
        std::printf("\nMonte Carlo validation: kappa=%d trials=%llu unsafe rate %.6g "
                    "(95%% CI [%.6g, %.6g])\n",
                    kappa, static_cast<unsigned long long>(mc.trials), mc.unsafe_rate,
                    mc.ci.low, mc.ci.high);
        std::printf("certificate bound delta = %.4g: %s\n", opt.delta,
                    mc.ci.high <= opt.delta ? "validated" : "NOT validated");
    }
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_dir) {
    if (!fs::is_directory(in_dir)) {
        std::cerr << "report: '" << in_dir << "' is not a directory\n";
        return 1;
    }
    std::vector<json> episodes;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 13 && name.substr(name.size() - 13) == "_summary.json" &&
            name != "suite_summary.json") {
            std::ifstream in(entry.path());
            json j;
            in >> j;
            episodes.push_back(j);
        }
    }
    if (episodes.empty()) {
        std::cerr << "report: no *_summary.json episode files under '" << in_dir
                  << "'; expected outputs of `coresim simulate`\n";
        return 1;
    }
    std::sort(episodes.begin(), episodes.end(),
              [](const json& a, const json& b) { return a.dump() < b.dump(); });

    fs::create_directories(out_dir);
    std::map<std::string, ModeAggregate> by_mode;
    for (const auto& e : episodes) {
        ModeAggregate& agg = by_mode[e.at("mode").get<std::string>()];
        agg.mode = mode_from_string(e.at("mode").get<std::string>());
        ++agg.episodes;
        const bool safe_task = e.at("task_label").get<std::string>() == "safe";
        const bool success = e.at("success").get<bool>();
        if (safe_task) {
            ++agg.safe_total;
            agg.safe_success += success;
        } else {
            ++agg.unsafe_total;
            agg.unsafe_success += success;
        }
        if (!success) {
            ++agg.failures;
            const std::string attr = e.at("failure_attribution").get<std::string>();
            if (attr == "ctx") ++agg.ctx;
            else if (attr == "grnd") ++agg.grnd;
            else if (attr == "enf") ++agg.enf;
        }
    }
    SuiteResult suite;
    for (auto& [name, agg] : by_mode) suite.aggregates.push_back(agg);
    const std::string table = format_suite_table(suite);
    std::cout << table;
    std::ofstream tf(out_dir + "/suite_table.txt");
    tf << table;

    // plot-ready per-episode h(x) time series extracted from the trajectories
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() <= 15 || name.substr(name.size() - 15) != "_trajectory.csv") continue;
        std::ifstream in(entry.path());
        std::string line;
        std::getline(in, line);  // header
        std::ofstream out(out_dir + "/" + name.substr(0, name.size() - 15) + "_h.csv");
        out << "t,h\n";
        while (std::getline(in, line)) {
            int field = 0;
            std::string t_field, h_field;
            std::stringstream ls(line);
            std::string tok;
            while (std::getline(ls, tok, ',')) {
                if (field == 0) t_field = tok;
                if (field == 10) h_field = tok;
                ++field;
            }
            out << t_field << "," << h_field << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contextual-safety simulation and certificate toolkit"};
    app.require_subcommand(1);
    app.set_config("--config");

    SimulateOptions sim;
    CLI::App* simulate = app.add_subcommand("simulate", "run one episode or the full suite");
    simulate->add_option("--scenario", sim.scenario, "builtin name or scenario file path");
    simulate->add_flag("--suite", sim.suite, "run all builtin scenarios");
    simulate->add_option("--mode", sim.mode, "core|oracle|no_context|geometric")
        ->envname("CORE_SIM_MODE");
    simulate->add_option("--modes", sim.modes, "comma list for --suite runs");
    simulate->add_option("--repeats", sim.repeats, "repeats per scenario in a suite (count)");
    simulate->add_option("--seed", sim.seed, "base random seed")->envname("CORE_SIM_SEED");
    simulate->add_option("--out", sim.out_dir, "output directory")->envname("CORE_SIM_OUT");
    simulate->add_option("--jobs", sim.jobs, "max parallel episodes (count)")
        ->envname("CORE_SIM_JOBS");
    simulate->add_flag("--export-grids", sim.export_grids,
                       "write final grid snapshots and SDF CSVs");
    simulate->add_option("--dt", sim.cfg.dt, "control period (s)");
    simulate->add_option("--horizon", sim.cfg.horizon, "episode horizon (s)");
    simulate->add_option("--frame-period", sim.cfg.frame_period, "perception period (s)");
    simulate->add_option("--latency", sim.cfg.perception_latency, "perception latency (s)");
    simulate->add_option("--p0", sim.cfg.detection.p0, "detection probability intercept");
    simulate->add_option("--epsilon", sim.cfg.detection.epsilon,
                         "detection slope parameter (unitless)");
    simulate->add_option("--detect-D", sim.cfg.detection.D,
                         "oracle maximal sensing radius (m); spans the projection band");
    simulate->add_option("--min-range", sim.cfg.detection.min_range, "projection band low (m)");
    simulate->add_option("--max-range", sim.cfg.detection.max_range,
                         "projection band high (m)");
    simulate->add_option("--grid-res", sim.cfg.grid_resolution, "grid resolution (m/cell)");
    simulate->add_option("--tau", sim.cfg.tau, "safety probability threshold");
    simulate
        ->add_option_function<std::string>(
            "--treat-unknown",
            [&sim](const std::string& v) {
                sim.cfg.treat_unknown =
                    v == "unsafe" ? TreatUnknown::unsafe : TreatUnknown::safe;
            },
            "unobserved cells: safe|unsafe")
        ->default_str("safe");
    simulate->add_option("--dilation-px", sim.cfg.dilation_px, "AROUND kernel side (pixels)");
    simulate->add_option("--alpha-slope", sim.cfg.alpha.slope, "class-K slope (1/s)");
    simulate->add_option("--v-max", sim.cfg.gains.v_max, "planar speed bound (m/s)");
    simulate->add_option("--w-max", sim.cfg.gains.w_max, "yaw rate bound (rad/s)");
    simulate->add_option("--start-randomization", sim.cfg.start_randomization,
                         "start position randomization radius (m)");

    CertifyOptions cert;
    CLI::App* certify = app.add_subcommand("certify", "compute a safe-traversal certificate");
    certify->add_option("--c", cert.c, "inverse-distance scale (m); omit to search");
    certify->add_option("--ell", cert.ell, "inverse-distance regularizer (m); omit to search");
    certify->add_option("--p0", cert.p0, "detection probability intercept");
    certify->add_option("--epsilon", cert.epsilon, "detection slope parameter (unitless)");
    certify->add_option("--D", cert.D, "maximal sensing radius (m)");
    certify->add_option("--R", cert.R, "safe initial radius (m)");
    certify->add_option("--delta", cert.delta, "total risk budget");
    certify->add_option("--gamma", cert.gamma, "context-failure risk fraction");
    certify->add_option("--speed", cert.speed, "maximum robot speed (m/s)");
    certify->add_option("--latency", cert.latency, "seconds per measurement (s)");
    certify->add_option("--prior", cert.prior, "initial-distance prior: uniform|point_mass");
    certify->add_option("--k-max", cert.k_max, "search cap on kappa (count)");
    certify->add_option("--validate", cert.validate_trials,
                        "Monte Carlo validation trials (0 = off)");
    certify->add_option("--seed", cert.seed, "validation seed")->envname("CORE_SIM_SEED");

    std::string report_in = "out", report_out;
    CLI::App* report = app.add_subcommand("report", "aggregate prior simulate outputs");
    report->add_option("--in", report_in, "directory with simulate outputs");
    report->add_option("--out", report_out, "report output directory (default: --in)");

    std::string export_dir;
    CLI::App* scenarios = app.add_subcommand("scenarios", "list builtin scenarios");
    scenarios->add_option("--export", export_dir, "write builtin scenario files to a directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            if (!sim.suite && sim.scenario.empty()) {
                std::cerr << "simulate: give --scenario <name|path> or --suite\n";
                return 1;
            }
            return cmd_simulate(sim);
        }
        if (certify->parsed()) return cmd_certify(cert);
        if (report->parsed())
            return cmd_report(report_in, report_out.empty() ? report_in : report_out);
        if (scenarios->parsed()) {
            const auto all = builtin_scenarios();
            for (const auto& s : all)
                std::printf("%-18s %-7s %2zu entities, %zu waypoints\n", s.name.c_str(),
                            s.task_label == TaskLabel::unsafe ? "unsafe" : "safe",
                            s.entities.size(), s.waypoints.size());
            if (!export_dir.empty()) {
                fs::create_directories(export_dir);
                for (const auto& s : all)
                    save_scenario(s, export_dir + "/" + s.name + ".json");
                std::printf("wrote %zu scenario files to %s\n", all.size(),
                            export_dir.c_str());
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
