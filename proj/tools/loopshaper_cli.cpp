// Batch front end: fixture export, synthesis, K-factor design, norm
// analysis, closed-loop simulation and the built-in verification table.

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "loopshaper/io.hpp"
#include "loopshaper/io_config.hpp"
#include "loopshaper/kfactor.hpp"
#include "loopshaper/simulator.hpp"
#include "loopshaper/synthesis.hpp"
#include "loopshaper/verify_paper.hpp"

namespace {

namespace fs = std::filesystem;
using loopshaper::Json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumeric = 4;

Json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw loopshaper::Error("cannot open " + path);
    Json j;
    is >> j;
    return j;
}

void write_json(const fs::path& path, const Json& j) { loopshaper::write_file_atomic(path, j.dump(2) + "\n"); }

// Wall-clock facts live in their own file so every other artifact is
// byte-identical across repeated runs.
void write_meta(const fs::path& outdir, const std::string& command) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    write_json(outdir / "meta.json",
               Json{{"command", command},
                    {"unix_time_s", std::chrono::duration_cast<std::chrono::seconds>(now).count()}});
}

void write_error(const std::optional<fs::path>& outdir, int code, const std::string& what) {
    std::cerr << "error: " << what << "\n";
    if (outdir) {
        try {
            write_json(*outdir / "error.json", Json{{"exit_code", code}, {"message", what}});
        } catch (...) {
        }
    }
}

int run_models(const std::string& out, const std::string& params_path) {
    const fs::path outdir(out);
    const loopshaper::ConverterParams params = params_path.empty()
                                                   ? loopshaper::prototype_params()
                                                   : loopshaper::converter_params_from_json(load_json(params_path));
    const auto plants = loopshaper::identified_plant_set();
    const auto weights = loopshaper::paper_weights();
    const auto ctrls = loopshaper::paper_controllers();
    const auto op = loopshaper::dc_operating_point(params);
    const auto math = loopshaper::math_models(params, op);

    write_json(outdir / "plants.json", to_json(plants));
    write_json(outdir / "weights.json", to_json(weights));
    write_json(outdir / "controllers.json", Json{{"K_x", to_json(ctrls.K_x)},
                                                 {"K_k", to_json(ctrls.K_k)},
                                                 {"K_2x", to_json(ctrls.K_2x)},
                                                 {"Q", to_json(ctrls.Q)}});
    write_json(outdir / "converter_params.json", to_json(params));
    write_json(outdir / "operating_point.json", Json{{"U", op.U}, {"I_L", op.I_L}, {"V_c", op.V_c}});
    write_json(outdir / "math_models.json",
               Json{{"G_m", to_json(math.G_m)}, {"G_vm", to_json(math.G_vm)}, {"G_im", to_json(math.G_im)}});

    const auto grid = loopshaper::make_grid(1e1, 1e6, 600);
    loopshaper::write_file_atomic(outdir / "bode_G.csv", bode_csv(plants.G, grid));
    loopshaper::write_file_atomic(outdir / "bode_G_i.csv", bode_csv(plants.G_i, grid));
    loopshaper::write_file_atomic(outdir / "bode_G_v.csv", bode_csv(plants.G_v, grid));
    loopshaper::write_file_atomic(outdir / "bode_W_n.csv", bode_csv(plants.W_n, grid));
    loopshaper::write_file_atomic(outdir / "bode_G_m.csv", bode_csv(math.G_m, grid));
    write_meta(outdir, "models");
    return kExitOk;
}

int run_synthesize(const std::string& config_path, const std::string& out, const std::string& dump_subproblem) {
    const fs::path outdir(out);
    loopshaper::SynthesisConfig cfg =
        config_path.empty() ? loopshaper::SynthesisConfig::paper_default()
                            : loopshaper::synthesis_config_from_json(load_json(config_path));

    if (!dump_subproblem.empty()) {
        const loopshaper::LinearizationState lin{cfg.init_comp.X, cfg.init_comp.Y, cfg.init_filt.N,
                                                 cfg.init_filt.M};
        const auto sp = loopshaper::stage1_program(cfg, lin);
        write_json(dump_subproblem, to_json(sp.program));
    }

    const loopshaper::SynthesisReport rep = loopshaper::synthesize(cfg);

    write_json(outdir / "report.json", to_json(rep));
    write_json(outdir / "controller.json", to_json(rep.compensator.controller()));
    write_json(outdir / "filter.json", to_json(rep.filter.q()));
    std::ostringstream trace;
    trace << "iter,stage,gamma1,gamma2,solve_ms\n";
    double g1 = std::numeric_limits<double>::quiet_NaN();
    double g2 = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rep.trace) {
        g1 = r.gamma1;
        trace << r.iter << ",1," << loopshaper::format_double(g1) << ',' << loopshaper::format_double(g2) << ','
              << loopshaper::format_double(r.stage1_ms) << '\n';
        g2 = r.gamma2;
        trace << r.iter << ",2," << loopshaper::format_double(g1) << ',' << loopshaper::format_double(g2) << ','
              << loopshaper::format_double(r.stage2_ms) << '\n';
    }
    loopshaper::write_file_atomic(outdir / "trace.csv", trace.str());
    write_meta(outdir, "synthesize");

    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "status: " << (rep.status == loopshaper::SynthesisReport::Status::Converged ? "converged"
                                : rep.status == loopshaper::SynthesisReport::Status::MaxIterations
                                    ? "max_iterations"
                                    : "non_descent")
              << "  gamma1 " << rep.gamma1 << "  gamma2 " << rep.gamma2 << "  (" << rep.iterations
              << " iterations)\n";
    if (rep.status == loopshaper::SynthesisReport::Status::NonDescent) {
        write_error(outdir, kExitNumeric, rep.message);
        return kExitNumeric;
    }
    return kExitOk;
}

int run_kfactor(double fc, double phase_boost, double gain_db, const std::string& out) {
    const loopshaper::KFactorSpec spec{fc, phase_boost, std::pow(10.0, gain_db / 20.0)};
    const loopshaper::RationalTF K = loopshaper::kfactor_design(spec);
    const auto zp = loopshaper::place_zeros_poles(fc, phase_boost);
    Json j{{"compensator", to_json(K)},
           {"zeros_hz", Json::array({zp.f_z, zp.f_z})},
           {"poles_hz", Json::array({0.0, zp.f_p, zp.f_p})},
           {"k_gain", loopshaper::k_gain(phase_boost)},
           {"crossover_gain", std::abs(K.eval_jw(2.0 * M_PI * fc))}};
    std::cout << j.dump(2) << "\n";
    if (!out.empty()) {
        write_json(fs::path(out) / "kfactor.json", j);
        write_meta(out, "kfactor");
    }
    return kExitOk;
}

int run_analyze(const std::string& controller, const std::string& filter, const std::string& out, double lo,
                double hi, std::size_t count) {
    const fs::path outdir(out);
    const auto K = loopshaper::tf_from_json(load_json(controller));
    const auto comp = loopshaper::CompensatorParams::from_controller(K);
    loopshaper::FilterParams filt{loopshaper::Polynomial::zero(), loopshaper::Polynomial{120.0, 1.0}};
    if (!filter.empty()) filt = loopshaper::FilterParams::from_q(loopshaper::tf_from_json(load_json(filter)));
    const auto rep = loopshaper::verify_norms(comp, filt, loopshaper::identified_plant_set(),
                                              loopshaper::paper_weights(), loopshaper::make_grid(lo, hi, count));
    write_json(outdir / "norms.json", to_json(rep));
    write_meta(outdir, "analyze");
    for (const auto& row : rep.rows)
        std::printf("%-10s peak %12.5g at %10.1f rad/s%s\n", row.name.c_str(), row.peak, row.omega_at_peak,
                    row.informational ? "  (informational)" : "");
    return kExitOk;
}

int run_simulate(const std::string& scenario_path, const std::string& controller, const std::string& filter,
                 const std::string& out, double dt, double output_dt, std::uint64_t seed_override,
                 bool has_seed) {
    const fs::path outdir(out);
    loopshaper::SimScenario sc = loopshaper::scenario_from_json(load_json(scenario_path));
    if (has_seed) sc.noise_seed = seed_override;
    const auto K = loopshaper::tf_from_json(load_json(controller));
    const auto comp = loopshaper::CompensatorParams::from_controller(K);
    std::optional<loopshaper::FilterParams> filt;
    if (!filter.empty()) filt = loopshaper::FilterParams::from_q(loopshaper::tf_from_json(load_json(filter)));

    loopshaper::SimConfig cfg;
    cfg.dt = dt;
    cfg.output_dt = output_dt;
    const loopshaper::ClosedLoop loop(sc.mode, comp, filt, loopshaper::identified_plant_set(),
                                      loopshaper::prototype_params(), cfg);
    const loopshaper::SimResult res = loop.run(sc);

    std::vector<std::pair<double, double>> windows;
    for (std::size_t i = 0; i < sc.events.size(); ++i) {
        const double t1 = (i + 1 < sc.events.size()) ? sc.events[i + 1].t : sc.duration;
        if (t1 > sc.events[i].t) windows.push_back({sc.events[i].t, t1});
    }
    loopshaper::write_file_atomic(outdir / "result.csv", sim_result_csv(res));
    if (!windows.empty()) write_json(outdir / "metrics.json", to_json(loopshaper::metrics(res, windows)));
    write_meta(outdir, "simulate");
    return kExitOk;
}

int run_verify_paper(const std::string& out, double lo, double hi, std::size_t count, bool skip_sim) {
    const fs::path outdir(out);
    loopshaper::VerifyPaperOptions opt;
    opt.grid_lo = lo;
    opt.grid_hi = hi;
    opt.grid_count = count;
    opt.run_simulation = !skip_sim;
    const auto rep = loopshaper::verify_paper_suite(opt);
    write_json(outdir / "verify_paper.json", to_json(rep));
    write_meta(outdir, "verify-paper");
    for (const auto& row : rep.rows) {
        const char* outcome = row.outcome == loopshaper::VerifyPaperRow::Outcome::Pass ? "pass"
                              : row.outcome == loopshaper::VerifyPaperRow::Outcome::GridInsufficient
                                  ? "grid-insufficient"
                                  : "FAIL";
        std::printf("%-18s %-40s %s\n", outcome, row.name.c_str(), row.detail.c_str());
    }
    return rep.all_pass() ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-order H-infinity compensator and DOB synthesis toolkit for interleaved boost converters"};
    app.require_subcommand(1);

    std::string out = "out";
    std::string config_path, params_path, dump_subproblem, controller_path, filter_path, scenario_path;
    double fc = 2300.0, phase_boost = 172.0, gain_db = -40.0;
    double grid_lo = 1e2, grid_hi = 1e5;
    std::size_t grid_count = 2000;
    double dt = 1e-6, output_dt = 1e-4;
    std::uint64_t seed = 0;
    bool skip_sim = false;

    auto* models = app.add_subcommand("models", "export built-in models, weights and controllers");
    models->add_option("--out", out, "output directory")->required();
    models->add_option("--params", params_path, "converter parameter JSON (defaults to the prototype)");

    auto* synth = app.add_subcommand("synthesize", "run the two-stage compensator/filter synthesis");
    synth->add_option("--config", config_path, "synthesis configuration JSON (defaults to the built-in setup)");
    synth->add_option("--out", out, "output directory")->required();
    synth->add_option("--dump-subproblem", dump_subproblem, "write the first stage-1 cone program to this path");

    auto* kf = app.add_subcommand("kfactor", "analytic Type-III design by the K-factor method");
    kf->add_option("--fc", fc, "crossover frequency [Hz]")->required();
    kf->add_option("--phase-boost", phase_boost, "required phase boost [deg]")->required();
    kf->add_option("--gain-db", gain_db, "compensator gain at crossover [dB]")->required();
    kf->add_option("--out", out, "optional output directory");

    auto* analyze = app.add_subcommand("analyze", "weighted-norm verification of a controller/filter pair");
    analyze->add_option("--controller", controller_path, "controller JSON (num/den)")->required();
    analyze->add_option("--filter", filter_path, "Q-filter JSON (num/den)");
    analyze->add_option("--out", out, "output directory")->required();
    analyze->add_option("--grid-lo", grid_lo, "grid lower bound [rad/s]");
    analyze->add_option("--grid-hi", grid_hi, "grid upper bound [rad/s]");
    analyze->add_option("--grid-count", grid_count, "grid point count");

    auto* sim = app.add_subcommand("simulate", "closed-loop time-domain simulation");
    sim->add_option("--scenario", scenario_path, "scenario JSON")->required();
    sim->add_option("--controller", controller_path, "controller JSON")->required();
    sim->add_option("--filter", filter_path, "Q-filter JSON (enables the DOB loop)");
    sim->add_option("--out", out, "output directory")->required();
    sim->add_option("--dt", dt, "integration step [s]");
    sim->add_option("--output-dt", output_dt, "recording step [s]");
    auto* seed_opt = sim->add_option("--seed", seed, "noise seed override");

    auto* verify = app.add_subcommand("verify-paper", "run the built-in verification table");
    verify->add_option("--out", out, "output directory")->required();
    verify->add_option("--grid-lo", grid_lo, "norm grid lower bound [rad/s]");
    verify->add_option("--grid-hi", grid_hi, "norm grid upper bound [rad/s]");
    verify->add_option("--grid-count", grid_count, "norm grid point count");
    verify->add_flag("--skip-simulation", skip_sim, "skip the load-step simulation rows");

    CLI11_PARSE(app, argc, argv);

    const std::optional<fs::path> outdir =
        out.empty() ? std::nullopt : std::optional<fs::path>(fs::path(out));
    try {
        if (models->parsed()) return run_models(out, params_path);
        if (synth->parsed()) return run_synthesize(config_path, out, dump_subproblem);
        if (kf->parsed()) return run_kfactor(fc, phase_boost, gain_db, kf->count("--out") ? out : "");
        if (analyze->parsed()) return run_analyze(controller_path, filter_path, out, grid_lo, grid_hi, grid_count);
        if (sim->parsed())
            return run_simulate(scenario_path, controller_path, filter_path, out, dt, output_dt, seed,
                                seed_opt->count() > 0);
        if (verify->parsed()) return run_verify_paper(out, grid_lo, grid_hi, grid_count, skip_sim);
    } catch (const loopshaper::InfeasibleSubproblem& e) {
        write_error(outdir, kExitInfeasible, e.what());
        return kExitInfeasible;
    } catch (const loopshaper::SolverFailure& e) {
        write_error(outdir, kExitNumeric, e.what());
        return kExitNumeric;
    } catch (const loopshaper::NonFiniteState& e) {
        write_error(outdir, kExitNumeric, e.what());
        return kExitNumeric;
    } catch (const loopshaper::NonDescent& e) {
        write_error(outdir, kExitNumeric, e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        write_error(outdir, kExitConfig, e.what());
        return kExitConfig;
    }
    return kExitConfig;
}
