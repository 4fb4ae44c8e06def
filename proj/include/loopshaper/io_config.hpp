#pragma once

// JSON bindings for configs, scenarios and reports.

#include <string>

#include "loopshaper/io.hpp"
#include "loopshaper/simulator.hpp"
#include "loopshaper/synthesis.hpp"
#include "loopshaper/verify_paper.hpp"

namespace loopshaper {

inline Json to_json(const Polynomial& p) { return Json(p.coeffs()); }

inline ConverterParams converter_params_from_json(const Json& j) {
    ConverterParams p{};
    p.L1 = j.at("L1").get<double>();
    p.L2 = j.at("L2").get<double>();
    p.Co = j.at("Co").get<double>();
    p.r_l = j.at("r_l").get<double>();
    p.r_s = j.at("r_s").get<double>();
    p.r_c = j.at("r_c").get<double>();
    p.R_o = j.at("R_o").get<double>();
    p.v_in = j.at("v_in").get<double>();
    p.v_o = j.at("v_o").get<double>();
    p.f_sw = j.at("f_sw").get<double>();
    p.validate();
    return p;
}

inline Json to_json(const ConverterParams& p) {
    return Json{{"L1", p.L1},   {"L2", p.L2},   {"Co", p.Co},     {"r_l", p.r_l},   {"r_s", p.r_s},
                {"r_c", p.r_c}, {"R_o", p.R_o}, {"v_in", p.v_in}, {"v_o", p.v_o},   {"f_sw", p.f_sw}};
}

inline Json to_json(const PlantSet& ps) {
    return Json{{"G", to_json(ps.G)}, {"G_i", to_json(ps.G_i)}, {"G_v", to_json(ps.G_v)}, {"W_n", to_json(ps.W_n)}};
}

inline PlantSet plant_set_from_json(const Json& j) {
    PlantSet ps;
    ps.G = tf_from_json(j.at("G"));
    ps.G_i = tf_from_json(j.at("G_i"));
    ps.G_v = tf_from_json(j.at("G_v"));
    ps.W_n = tf_from_json(j.at("W_n"));
    return ps;
}

inline Json to_json(const WeightSet& w) {
    return Json{{"W1", to_json(w.W1)},   {"W2", to_json(w.W2)},   {"W3", to_json(w.W3)},
                {"Wv", to_json(w.Wv)},   {"Wi", to_json(w.Wi)},   {"WQ", to_json(w.WQ)},
                {"W1C", to_json(w.W1C)}, {"W3C", to_json(w.W3C)}};
}

inline WeightSet weight_set_from_json(const Json& j) {
    WeightSet w;
    w.W1 = tf_from_json(j.at("W1"));
    w.W2 = tf_from_json(j.at("W2"));
    w.W3 = tf_from_json(j.at("W3"));
    w.Wv = tf_from_json(j.at("Wv"));
    w.Wi = tf_from_json(j.at("Wi"));
    w.WQ = tf_from_json(j.at("WQ"));
    w.W1C = tf_from_json(j.at("W1C"));
    w.W3C = tf_from_json(j.at("W3C"));
    return w;
}

// ----------------------------------------------------------------------------
// SynthesisConfig
// ----------------------------------------------------------------------------

inline SynthesisConfig synthesis_config_from_json(const Json& j) {
    SynthesisConfig cfg = SynthesisConfig::paper_default();
    if (j.contains("plants")) cfg.plants = plant_set_from_json(j.at("plants"));
    if (j.contains("weights")) cfg.weights = weight_set_from_json(j.at("weights"));
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.grid = make_grid(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("count").get<std::size_t>());
    }
    if (j.contains("comp_orders")) {
        cfg.comp_order_h = j.at("comp_orders").at("h").get<int>();
        cfg.comp_order_o = j.at("comp_orders").at("o").get<int>();
        cfg.init_comp = SynthesisConfig::default_init_comp(cfg.comp_order_h, cfg.comp_order_o);
    }
    if (j.contains("filt_orders")) {
        cfg.filt_order_n = j.at("filt_orders").at("n").get<int>();
        cfg.filt_order_m = j.at("filt_orders").at("m").get<int>();
    }
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<int>();
    if (j.contains("solver_tol")) cfg.solver_tol = j.at("solver_tol").get<double>();
    if (j.contains("init")) {
        const auto& init = j.at("init");
        if (init.is_string()) {
            const std::string mode = init.get<std::string>();
            if (mode == "near_zero") {
                cfg.init_comp = SynthesisConfig::default_init_comp(cfg.comp_order_h, cfg.comp_order_o);
            } else if (mode == "kfactor") {
                cfg.use_kfactor_init();
            } else {
                throw OutOfRange("init must be near_zero, kfactor or an explicit object");
            }
        } else {
            cfg.init_comp = CompensatorParams(Polynomial(init.at("X").get<std::vector<double>>()),
                                              Polynomial(init.at("Y").get<std::vector<double>>()));
            if (init.contains("N"))
                cfg.init_filt = FilterParams(Polynomial(init.at("N").get<std::vector<double>>()),
                                             Polynomial(init.at("M").get<std::vector<double>>()));
        }
    }
    if (j.contains("update_mode")) {
        const std::string m = j.at("update_mode").get<std::string>();
        if (m == "per_stage")
            cfg.update_mode = SynthesisConfig::UpdateMode::PerStage;
        else if (m == "per_sweep")
            cfg.update_mode = SynthesisConfig::UpdateMode::PerSweep;
        else
            throw OutOfRange("update_mode must be per_stage or per_sweep");
    }
    if (j.contains("stages")) {
        const std::string s = j.at("stages").get<std::string>();
        if (s == "both")
            cfg.stages = SynthesisConfig::Stages::Both;
        else if (s == "compensator_only")
            cfg.stages = SynthesisConfig::Stages::CompensatorOnly;
        else if (s == "filter_only")
            cfg.stages = SynthesisConfig::Stages::FilterOnly;
        else
            throw OutOfRange("stages must be both, compensator_only or filter_only");
    }
    if (j.contains("effort_weight")) {
        const std::string e = j.at("effort_weight").get<std::string>();
        if (e == "physical_input")
            cfg.effort_weight = SynthesisConfig::EffortWeight::PhysicalInput;
        else if (e == "compensator_output")
            cfg.effort_weight = SynthesisConfig::EffortWeight::CompensatorOutput;
        else
            throw OutOfRange("effort_weight must be physical_input or compensator_output");
    }
    if (j.contains("stability_guard")) cfg.stability_guard = j.at("stability_guard").get<bool>();
    return cfg;
}

inline Json to_json(const NormReport& rep) {
    Json rows = Json::array();
    for (const NormRow& r : rep.rows)
        rows.push_back(Json{{"name", r.name},
                            {"peak", r.peak},
                            {"omega_at_peak", r.omega_at_peak},
                            {"bound", r.bound},
                            {"pass", r.pass},
                            {"informational", r.informational}});
    return Json{{"constraints", rows},
                {"stability",
                 Json{{"outer", rep.stability.outer},
                      {"inner", rep.stability.inner},
                      {"combined", rep.stability.combined}}}};
}

inline Json to_json(const SynthesisReport& rep) {
    // Solve timings stay out of the report so repeated runs are
    // byte-identical; trace.csv carries them.
    Json trace = Json::array();
    for (const auto& r : rep.trace)
        trace.push_back(Json{{"iter", r.iter}, {"gamma1", r.gamma1}, {"gamma2", r.gamma2}});
    const char* status = rep.status == SynthesisReport::Status::Converged      ? "converged"
                         : rep.status == SynthesisReport::Status::MaxIterations ? "max_iterations"
                                                                                : "non_descent";
    Json j{{"status", status},
           {"message", rep.message},
           {"trace", trace},
           {"iterations", rep.iterations},
           {"gamma1", rep.gamma1},
           {"gamma2", rep.gamma2},
           {"hinf_bound1", rep.hinf_bound1},
           {"hinf_bound2", rep.hinf_bound2},
           {"stage1_vars", rep.stage1_vars},
           {"stage2_vars", rep.stage2_vars},
           {"compensator", Json{{"X", to_json(rep.compensator.X)},
                                {"Y", to_json(rep.compensator.Y)},
                                {"K", to_json(rep.compensator.controller())}}},
           {"filter", Json{{"N", to_json(rep.filter.N)}, {"M", to_json(rep.filter.M)}, {"Q", to_json(rep.filter.q())}}},
           {"verification", to_json(rep.verification)},
           {"inter_grid_violations", rep.inter_grid_violations},
           {"warnings", rep.warnings}};
    if (rep.descent_violation)
        j["descent_violation"] = Json{{"iter", rep.descent_violation->iter},
                                      {"stage", rep.descent_violation->stage},
                                      {"increase", rep.descent_violation->increase}};
    return j;
}

// ----------------------------------------------------------------------------
// Scenarios and simulation artifacts
// ----------------------------------------------------------------------------

inline SimScenario scenario_from_json(const Json& j) {
    SimScenario sc;
    sc.duration = j.at("duration").get<double>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "lti")
        sc.mode = SimScenario::Mode::Lti;
    else if (mode == "averaged")
        sc.mode = SimScenario::Mode::Averaged;
    else
        throw InvalidScenario("mode must be lti or averaged");
    if (j.contains("noise_enabled")) sc.noise_enabled = j.at("noise_enabled").get<bool>();
    if (j.contains("seed")) sc.noise_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("setpoint")) sc.setpoint = j.at("setpoint").get<double>();
    if (j.contains("R_o")) sc.R_o = j.at("R_o").get<double>();
    if (j.contains("v_in")) sc.v_in = j.at("v_in").get<double>();
    for (const auto& je : j.value("events", Json::array()))
        sc.events.push_back(Event{je.at("t").get<double>(), event_kind_from_string(je.at("kind").get<std::string>()),
                                  je.at("value").get<double>()});
    sc.validate();
    return sc;
}

inline Json to_json(const SimScenario& sc) {
    Json events = Json::array();
    for (const Event& e : sc.events)
        events.push_back(Json{{"t", e.t}, {"kind", to_string(e.kind)}, {"value", e.value}});
    return Json{{"duration", sc.duration},
                {"mode", sc.mode == SimScenario::Mode::Lti ? "lti" : "averaged"},
                {"noise_enabled", sc.noise_enabled},
                {"seed", sc.noise_seed},
                {"setpoint", sc.setpoint},
                {"R_o", sc.R_o},
                {"v_in", sc.v_in},
                {"events", events}};
}

inline std::string sim_result_csv(const SimResult& res) {
    std::ostringstream os;
    os << "t,v_o,u,i_L1,i_L2,d_hat\n";
    for (std::size_t i = 0; i < res.t.size(); ++i)
        os << format_double(res.t[i]) << ',' << format_double(res.v_o[i]) << ',' << format_double(res.u[i]) << ','
           << format_double(res.i_L1[i]) << ',' << format_double(res.i_L2[i]) << ',' << format_double(res.d_hat[i])
           << '\n';
    return os.str();
}

inline Json to_json(const PerfMetrics& pm) {
    Json rows = Json::array();
    for (const auto& w : pm.windows)
        rows.push_back(Json{{"t_begin", w.t_begin},
                            {"t_end", w.t_end},
                            {"overshoot_pct", w.overshoot_pct},
                            {"settling_s", w.settling_s},
                            {"settled", w.settled}});
    return Json{{"definition", "overshoot: peak exceedance beyond the settled value in the travel direction, "
                               "% of nominal; settling: time into the 2%-of-peak-deviation band"},
                {"windows", rows}};
}

inline Json to_json(const VerifyPaperReport& rep) {
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
        const char* outcome = r.outcome == VerifyPaperRow::Outcome::Pass              ? "pass"
                              : r.outcome == VerifyPaperRow::Outcome::GridInsufficient ? "grid-insufficient"
                                                                                       : "fail";
        rows.push_back(Json{{"name", r.name}, {"detail", r.detail}, {"outcome", outcome}});
    }
    return Json{{"rows", rows}, {"all_pass", rep.all_pass()}};
}

}  // namespace loopshaper
