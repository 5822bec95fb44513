#include "hydrolin/hydrolin.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#ifndef HYDROLIN_CONFIG_DIR
#define HYDROLIN_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace hydrolin;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 1;
constexpr int exit_runtime = 2;

struct Globals {
    std::string config;
    std::string plant;
    std::string out = "hydrolin-out";
    std::optional<unsigned long> seed;
    std::optional<double> dt;
    std::optional<double> t_end;
};

fs::path config_path(const Globals& g) {
    if (!g.config.empty()) return g.config;
    if (!g.plant.empty()) return fs::path(HYDROLIN_CONFIG_DIR) / (g.plant + ".json");
    throw ConfigError("no plant given: use --config <path> or --plant francis|kaplan");
}

fs::path prepare_out(const Globals& g) {
    const fs::path dir = g.out;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

RunManifest manifest(const Globals& g, const std::string& command, const fs::path& cfg,
                     std::map<std::string, std::string> options) {
    RunManifest m;
    m.config_path = cfg.string();
    m.command = command;
    if (g.seed) options["seed"] = std::to_string(*g.seed);
    if (g.dt) options["dt"] = format_double(*g.dt);
    if (g.t_end) options["t_end"] = format_double(*g.t_end);
    m.options = std::move(options);
    m.timestamp = RunManifest::now_utc();
    m.output_dir = g.out;
    return m;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    return f;
}

std::optional<double> pitch_for(const PlantConfig& cfg, double y) {
    if (cfg.kind != TurbineKind::kaplan) return std::nullopt;
    return on_cam(*cfg.on_cam, y);
}

int cmd_validate(const Globals& g) {
    const fs::path path = config_path(g);
    if (!fs::exists(path)) {
        std::cerr << "validate: file not found: " << path.string() << '\n';
        return exit_validation;
    }
    const ValidationReport rep = validate_plant_file(path);
    for (const auto& m : rep.messages) (rep.ok ? std::cout : std::cerr) << m << '\n';
    return rep.ok ? exit_ok : exit_validation;
}

struct SimulateArgs {
    std::string model = "nonlinear";
    double y0 = 0.8;
    double step_at = 1.0;
    double step_size = 0.0;
    double rate_limit = 0.0;
    std::size_t record_every = 10;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
    const fs::path cfg_path = config_path(g);
    const Plant p = load_plant(cfg_path);
    const PlantConfig& cfg = p.config;

    SimOptions so;
    so.dt = g.dt.value_or(default_dt(cfg));
    so.t_end = g.t_end.value_or(10.0);
    so.record_every = a.record_every;
    so.validate(cfg);

    const OperatingPoint op = find_equilibrium(cfg, p.curves, a.y0, pitch_for(cfg, a.y0), cfg.N_sync);
    StepSchedule step;
    step.y_before = a.y0;
    step.y_after = a.y0 + a.step_size;
    step.t_step = a.step_at;
    step.T_el = op.T_t0;
    step.rate_limit = a.rate_limit;
    if (cfg.kind == TurbineKind::kaplan) step.cam = cfg.on_cam;
    if (!(step.y_after >= cfg.y_min - 1e-9 && step.y_after <= cfg.y_max + 1e-9))
        throw ConfigError("simulate: y0 + step-size leaves the operating range [" +
                          format_double(cfg.y_min) + ", " + format_double(cfg.y_max) + "]");

    Trajectory traj;
    if (a.model == "nonlinear") {
        traj = simulate_nonlinear(cfg, p.curves, op.x0, step, so);
    } else {
        const LinearStateSpace lin = linearize(cfg, p.curves, op, p.steps);
        traj = simulate_linear(lin, op.x0, linear_schedule(lin, step), so);
    }

    const fs::path dir = prepare_out(g);
    auto out = open_out(dir / "trajectory.csv");
    write_trajectory_csv(out, traj, static_cast<std::size_t>(cfg.n));
    manifest(g, "simulate", cfg_path,
             {{"model", a.model},
              {"y0", format_double(a.y0)},
              {"step_at", format_double(a.step_at)},
              {"step_size", format_double(a.step_size)},
              {"rate_limit", format_double(a.rate_limit)},
              {"record_every", std::to_string(a.record_every)},
              {"dt_used", format_double(so.dt)},
              {"t_end_used", format_double(so.t_end)}})
        .write(dir);
    std::cout << "wrote " << traj.size() << " samples to " << (dir / "trajectory.csv").string() << '\n';
    return exit_ok;
}

int cmd_linearize(const Globals& g, double y0) {
    const fs::path cfg_path = config_path(g);
    const Plant p = load_plant(cfg_path);
    const OperatingPoint op =
        find_equilibrium(p.config, p.curves, y0, pitch_for(p.config, y0), p.config.N_sync);
    const LinearStateSpace lin = linearize(p.config, p.curves, op, p.steps);
    const fs::path dir = prepare_out(g);
    auto out = open_out(dir / "linear_model.json");
    write_linear_model(out, lin, p.config.name);
    manifest(g, "linearize", cfg_path, {{"y0", format_double(y0)}}).write(dir);
    std::cout << "wrote " << (dir / "linear_model.json").string() << " (" << lin.state_size()
              << " states, " << lin.input_size() << " inputs)\n";
    return exit_ok;
}

struct BenchArgs {
    unsigned threads = 1;
    bool svg = false;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
    const fs::path cfg_path = config_path(g);
    const Plant p = load_plant(cfg_path);
    BenchOptions bo;
    bo.dt = g.dt.value_or(default_dt(p.config));
    if (g.t_end) bo.horizon = *g.t_end;
    bo.transient_window = std::min(bo.transient_window, bo.horizon);
    bo.steady_window = std::min(bo.steady_window, bo.horizon);
    bo.threads = a.threads;
    bo.steps = p.steps;

    const ExperimentGrid grid = build_grid(p.config);
    const auto start = std::chrono::steady_clock::now();
    const auto results = run_benchmark(p.config, p.curves, grid, bo);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path dir = prepare_out(g);
    {
        auto out = open_out(dir / "results.csv");
        write_results_csv(out, results);
    }
    for (const auto& metric : metric_names()) {
        const fs::path csv = dir / ("heatmap_" + metric + ".csv");
        {
            auto out = open_out(csv);
            write_heatmap_csv(out, build_heatmap(grid, results, metric));
        }
        if (a.svg) {
            // Plots are rendered from the CSV on disk only.
            std::ifstream in(csv);
            const Heatmap h = read_heatmap_csv(in, metric);
            auto out = open_out(dir / ("heatmap_" + metric + ".svg"));
            out << render_heatmap_svg(h);
        }
    }
    manifest(g, "bench", cfg_path,
             {{"dt_used", format_double(bo.dt)},
              {"horizon", format_double(bo.horizon)},
              {"threads", std::to_string(bo.threads)},
              {"svg", a.svg ? "true" : "false"}})
        .write(dir);

    std::size_t failed = 0;
    std::size_t unsettled = 0;
    for (const auto& r : results) {
        if (!r.ok()) ++failed;
        else if (r.settle_residual > bo.settle_threshold) ++unsettled;
    }
    std::cout << p.config.name << ": " << results.size() << " cells, " << failed << " failed, "
              << unsettled << " not settled when the steady window opens, "
              << format_fixed(elapsed, 1) << " s\n";
    // Every cell failing means the setup itself is broken.
    if (!results.empty() && failed == results.size()) return exit_runtime;
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hydropower plant linearization and fidelity benchmark"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "Plant configuration file (JSON)");
    app.add_option("--plant", g.plant, "Bundled plant instead of --config")
        ->check(CLI::IsMember({"francis", "kaplan"}));
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--seed", g.seed, "Reserved; recorded in the manifest");
    app.add_option("--dt", g.dt, "Integration step (s)")->check(CLI::PositiveNumber);
    app.add_option("--t-end", g.t_end, "Simulated time (s)")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "Check a plant configuration");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Simulate one guide vane step");
    simulate->add_option("--model", sa.model, "nonlinear | linear")
        ->check(CLI::IsMember({"nonlinear", "linear"}));
    simulate->add_option("--y0", sa.y0, "Initial guide vane opening (pu)");
    simulate->add_option("--step-at", sa.step_at, "Step time (s)");
    simulate->add_option("--step-size", sa.step_size, "Guide vane step (pu)");
    simulate->add_option("--rate-limit", sa.rate_limit, "Servo rate limit (pu/s), 0 = ideal step");
    simulate->add_option("--record-every", sa.record_every, "Record every k-th step")
        ->check(CLI::PositiveNumber);

    double lin_y0 = 0.8;
    auto* lin = app.add_subcommand("linearize", "Export the linear model at an operating point");
    lin->add_option("--y0", lin_y0, "Guide vane opening (pu)");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Run the step-change fidelity benchmark");
    bench->add_option("--threads", ba.threads, "Worker threads")->check(CLI::PositiveNumber);
    bench->add_flag("--svg", ba.svg, "Also render heatmaps as SVG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*validate) return cmd_validate(g);
        if (*simulate) return cmd_simulate(g, sa);
        if (*lin) return cmd_linearize(g, lin_y0);
        if (*bench) return cmd_bench(g, ba);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_validation;
}
