#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "loopshaper/errors.hpp"
#include "loopshaper/loop_functions.hpp"
#include "loopshaper/plant_models.hpp"
#include "loopshaper/stability.hpp"
#include "loopshaper/state_space.hpp"

namespace loopshaper {

// ============================================================================
// Scenario description
// ============================================================================

struct Event {
    enum class Kind { Setpoint, LoadResistance, InputVoltage, ExternalLoadCurrent, InductanceScale };
    double t = 0.0;
    Kind kind = Kind::Setpoint;
    double value = 0.0;
};

inline const char* to_string(Event::Kind k) {
    switch (k) {
        case Event::Kind::Setpoint: return "setpoint";
        case Event::Kind::LoadResistance: return "load_resistance";
        case Event::Kind::InputVoltage: return "input_voltage";
        case Event::Kind::ExternalLoadCurrent: return "external_load_current";
        case Event::Kind::InductanceScale: return "inductance_scale";
    }
    return "?";
}

inline Event::Kind event_kind_from_string(const std::string& s) {
    if (s == "setpoint") return Event::Kind::Setpoint;
    if (s == "load_resistance") return Event::Kind::LoadResistance;
    if (s == "input_voltage") return Event::Kind::InputVoltage;
    if (s == "external_load_current") return Event::Kind::ExternalLoadCurrent;
    if (s == "inductance_scale") return Event::Kind::InductanceScale;
    throw InvalidScenario("unknown event kind: " + s);
}

struct SimScenario {
    double duration = 1.0;
    enum class Mode { Lti, Averaged } mode = Mode::Averaged;
    bool noise_enabled = false;
    std::uint64_t noise_seed = 1;
    double setpoint = 100.0;  // initial set-point [V]
    // Initial operating condition (averaged mode); LTI mode starts at the
    // identified model's operating point with zero deviations.
    double R_o = 50.0;
    double v_in = 46.0;
    std::vector<Event> events;

    void validate() const {
        if (!(duration > 0.0)) throw InvalidScenario("duration must be positive");
        double prev = -1.0;
        for (const Event& e : events) {
            if (e.t < 0.0 || e.t > duration) throw InvalidScenario("event outside [0, duration]");
            if (e.t < prev) throw InvalidScenario("events must be time-sorted");
            prev = e.t;
            const bool param_change =
                e.kind == Event::Kind::LoadResistance || e.kind == Event::Kind::InductanceScale;
            if (param_change && mode == Mode::Lti)
                throw InvalidScenario("parameter-change events are only valid in averaged mode");
            if ((e.kind == Event::Kind::LoadResistance || e.kind == Event::Kind::InductanceScale) &&
                !(e.value > 0.0))
                throw InvalidScenario("resistance/inductance values must be positive");
        }
    }
};

struct SimConfig {
    double dt = 1e-6;        // integration step
    double output_dt = 1e-4;  // decimated recording step
    double u_min = 0.01;
    double u_max = 0.99;
};

struct SimResult {
    std::vector<double> t;
    std::vector<double> v_o;
    std::vector<double> u;
    std::vector<double> i_L1, i_L2;  // averaged mode only (zero otherwise)
    std::vector<double> d_hat;       // 2-DOF only (zero otherwise)
};

// ============================================================================
// Averaged converter model
// ============================================================================

struct ConverterState {
    double i_L1 = 0.0;
    double i_L2 = 0.0;
    double v_c = 0.0;
};

struct ConverterInputs {
    double u = 0.0;
    double v_in = 0.0;
    double R_o = 1.0;
    double i_o_ext = 0.0;
};

// Output voltage including the ESR drop, solved from the algebraic output
// equation v_o = v_c + r_c*Co*dv_c/dt.
inline double converter_output(const ConverterState& x, const ConverterInputs& in, const ConverterParams& p) {
    const double i_T = x.i_L1 + x.i_L2;
    return (in.R_o * x.v_c + in.R_o * p.r_c * ((1.0 - in.u) * i_T - in.i_o_ext)) / (in.R_o + p.r_c);
}

// d v_o / d u at fixed state, used to resolve the DOB feedthrough loop.
inline double converter_output_du(const ConverterState& x, const ConverterInputs& in, const ConverterParams& p) {
    return -in.R_o * p.r_c * (x.i_L1 + x.i_L2) / (in.R_o + p.r_c);
}

inline ConverterState averaged_converter_derivative(const ConverterState& x, const ConverterInputs& in,
                                                    const ConverterParams& p) {
    const double v_o = converter_output(x, in, p);
    ConverterState dx;
    dx.i_L1 = (in.v_in - x.i_L1 * (p.r_l + in.u * p.r_s) - (1.0 - in.u) * v_o) / p.L1;
    dx.i_L2 = (in.v_in - x.i_L2 * (p.r_l + in.u * p.r_s) - (1.0 - in.u) * v_o) / p.L2;
    dx.v_c = ((1.0 - in.u) * (x.i_L1 + x.i_L2) - v_o / in.R_o - in.i_o_ext) / p.Co;
    return dx;
}

// ============================================================================
// Closed-loop system
// ============================================================================

// Compensator realized as the biproper core X/Y followed by an explicit
// output integrator, so anti-windup is plain conditional integration.
// The DOB branch inverts the reflected minimum-phase factor of the plant.
class ClosedLoop {
public:
    ClosedLoop(SimScenario::Mode mode, const CompensatorParams& comp, const std::optional<FilterParams>& filt,
               const PlantSet& plants, const ConverterParams& params, const SimConfig& cfg = SimConfig{})
        : mode_(mode), cfg_(cfg), plants_(plants), params_(params) {
        core_ = realize(comp.k_prime());
        n_core_ = core_.order();

        if (filt) {
            if (!filt->strictly_proper())
                throw ImproperComposite("build_closed_loop: Q must be strictly proper");
            const RationalTF q = filt->q();
            const RationalTF g_mp = minimum_phase_reflect(plants.G);
            const RationalTF q_ginv = q * g_mp.inverse();
            if (!q_ginv.proper())
                throw ImproperComposite("build_closed_loop: Q*G_mp^-1 must be proper (raise the filter order)");
            dob_y_ = realize(q_ginv);
            dob_u_ = realize(q);
            has_dob_ = true;
        }

        noise_shape_ = realize(plants.W_n);

        ConverterParams op_params = params_;
        op_ = dc_operating_point(op_params);

        if (mode_ == SimScenario::Mode::Averaged) {
            n_plant_ = 3;
        } else {
            gn_ = realize(plants.G);
            gi_ = realize(plants.G_i);
            gv_ = realize(plants.G_v);
            n_plant_ = gn_.order() + gi_.order() + gv_.order();
        }

        // Fastest linear mode across the realized subsystems; run() rejects
        // steps the integrator cannot resolve.
        for (const StateSpace* ss : {&core_, &dob_y_, &dob_u_, &noise_shape_, &gn_, &gi_, &gv_}) {
            if (ss->order() == 0) continue;
            Eigen::EigenSolver<Eigen::MatrixXd> es(ss->A, false);
            for (int i = 0; i < ss->order(); ++i)
                fastest_mode_ = std::max(fastest_mode_, std::abs(es.eigenvalues()(i)));
        }
    }

    const OperatingPoint& operating_point() const { return op_; }

    SimResult run(const SimScenario& scenario) const;

private:
    struct Inputs {
        double setpoint = 100.0;
        double v_in = 46.0;
        double R_o = 50.0;
        double i_ext = 0.0;
        double L_scale = 1.0;
        double noise_sample = 0.0;
    };

    // State layout: [plant | core | integrator | dob_y | dob_u | noise].
    int state_size() const {
        int n = n_plant_ + n_core_ + 1;
        if (has_dob_) n += dob_y_.order() + dob_u_.order();
        n += noise_shape_.order();
        return n;
    }

    struct Taps {
        double v_o = 0.0;   // physical output voltage
        double duty = 0.0;  // saturated duty command
        double d_hat = 0.0;
        double i1 = 0.0, i2 = 0.0;
    };

    void derivative(const std::vector<double>& x, const Inputs& in, std::vector<double>& dx, Taps* taps) const;

    SimScenario::Mode mode_;
    SimConfig cfg_;
    PlantSet plants_;
    ConverterParams params_;
    OperatingPoint op_;
    StateSpace core_, dob_y_, dob_u_, noise_shape_, gn_, gi_, gv_;
    int n_core_ = 0, n_plant_ = 0;
    bool has_dob_ = false;
    double fastest_mode_ = 0.0;
};

inline void ClosedLoop::derivative(const std::vector<double>& x, const Inputs& in, std::vector<double>& dx,
                                   Taps* taps) const {
    const int n = state_size();
    dx.assign(static_cast<std::size_t>(n), 0.0);

    int at_plant = 0;
    int at_core = n_plant_;
    int at_int = at_core + n_core_;
    int at_doby = at_int + 1;
    int at_dobu = at_doby + (has_dob_ ? dob_y_.order() : 0);
    int at_noise = at_dobu + (has_dob_ ? dob_u_.order() : 0);

    auto ss_out = [&x](const StateSpace& ss, int at, double input) {
        double y = ss.D * input;
        for (int i = 0; i < ss.order(); ++i) y += ss.C(i) * x[static_cast<std::size_t>(at + i)];
        return y;
    };
    auto ss_deriv = [&x, &dx](const StateSpace& ss, int at, double input) {
        for (int i = 0; i < ss.order(); ++i) {
            double d = ss.B(i) * input;
            for (int j = 0; j < ss.order(); ++j) d += ss.A(i, j) * x[static_cast<std::size_t>(at + j)];
            dx[static_cast<std::size_t>(at + i)] = d;
        }
    };

    const double noise_out = noise_shape_.order() ? ss_out(noise_shape_, at_noise, in.noise_sample) : 0.0;

    // --- Resolve duty, output voltage and the DOB estimate.
    double v_o = 0.0;
    double u = 0.0;
    double d_hat = 0.0;
    const double u_ff = x[static_cast<std::size_t>(at_int)];  // integrator output (absolute duty)

    ConverterParams pscale = params_;
    ConverterState cs;
    ConverterInputs ci;
    if (mode_ == SimScenario::Mode::Averaged) {
        pscale.L1 *= in.L_scale;
        pscale.L2 *= in.L_scale;
        pscale.r_l *= in.L_scale;
        cs = ConverterState{x[0], x[1], x[2]};
        ci.v_in = in.v_in;
        ci.R_o = in.R_o;
        ci.i_o_ext = in.i_ext;
        // v_o = alpha - beta*u with the ESR feedthrough.
        ci.u = 0.0;
        const double alpha = converter_output(cs, ci, pscale);
        const double beta = -converter_output_du(cs, ci, pscale);
        double dob_state = 0.0, dob_dy = 0.0;
        if (has_dob_) {
            dob_state = ss_out(dob_y_, at_doby, 0.0) - ss_out(dob_u_, at_dobu, 0.0);
            dob_dy = dob_y_.D;  // feedthrough from measured voltage deviation
        }
        // u = u_ff - d_hat, d_hat = dob_state + D1*(v_o + n - V_nom); v_o = alpha - beta*u.
        const double rhs = u_ff - dob_state - (has_dob_ ? dob_dy * (alpha + noise_out - op_.V_c) : 0.0);
        const double denom = 1.0 - (has_dob_ ? dob_dy * beta : 0.0);
        u = rhs / denom;
        u = std::clamp(u, cfg_.u_min, cfg_.u_max);
        ci.u = u;
        v_o = converter_output(cs, ci, pscale);
        if (has_dob_) d_hat = dob_state + dob_dy * (v_o + noise_out - op_.V_c);
    } else {
        const double y_gn = ss_out(gn_, at_plant, 0.0);
        const double y_gi = ss_out(gi_, at_plant + gn_.order(), 0.0);
        const double y_gv = ss_out(gv_, at_plant + gn_.order() + gi_.order(), 0.0);
        v_o = op_.V_c + y_gn + y_gi + y_gv;  // absolute output voltage
        double dob_state = 0.0, dob_dy = 0.0;
        if (has_dob_) {
            dob_state = ss_out(dob_y_, at_doby, 0.0) - ss_out(dob_u_, at_dobu, 0.0);
            dob_dy = dob_y_.D;
            d_hat = dob_state + dob_dy * (v_o + noise_out - op_.V_c);
        }
        u = std::clamp(u_ff - d_hat, cfg_.u_min, cfg_.u_max);
    }

    const double y_meas = v_o + noise_out;
    const double e = in.setpoint - y_meas;

    // --- Compensator core and conditional integration.
    const double w = n_core_ ? ss_out(core_, at_core, e) : core_.D * e;
    if (n_core_) ss_deriv(core_, at_core, e);
    const bool sat_high = (u >= cfg_.u_max) && (w > 0.0);
    const bool sat_low = (u <= cfg_.u_min) && (w < 0.0);
    dx[static_cast<std::size_t>(at_int)] = (sat_high || sat_low) ? 0.0 : w;

    // --- Plant dynamics.
    if (mode_ == SimScenario::Mode::Averaged) {
        ConverterState cs2{x[0], x[1], x[2]};
        ConverterInputs ci2{u, in.v_in, in.R_o, in.i_ext};
        const ConverterState d = averaged_converter_derivative(cs2, ci2, pscale);
        dx[0] = d.i_L1;
        dx[1] = d.i_L2;
        dx[2] = d.v_c;
        if (taps) {
            taps->i1 = x[0];
            taps->i2 = x[1];
        }
    } else {
        ss_deriv(gn_, at_plant, u - op_.U);
        ss_deriv(gi_, at_plant + gn_.order(), in.i_ext);
        ss_deriv(gv_, at_plant + gn_.order() + gi_.order(), in.v_in - params_.v_in);
    }

    // --- DOB branch dynamics (deviation signals).
    if (has_dob_) {
        ss_deriv(dob_y_, at_doby, y_meas - op_.V_c);
        ss_deriv(dob_u_, at_dobu, u - op_.U);
    }
    if (noise_shape_.order()) ss_deriv(noise_shape_, at_noise, in.noise_sample);

    if (taps) {
        taps->v_o = v_o;
        taps->duty = u;
        taps->d_hat = d_hat;
    }
}

inline SimResult ClosedLoop::run(const SimScenario& scenario) const {
    scenario.validate();
    const double dt = cfg_.dt;
    // Classic RK4 stability boundary; beyond it the fast controller or
    // filter modes blow up regardless of the physical dynamics.
    if (dt * fastest_mode_ > 2.5)
        throw InvalidScenario("dt " + std::to_string(dt) + " cannot resolve the fastest closed-loop mode (" +
                              std::to_string(fastest_mode_) + " rad/s); reduce dt below " +
                              std::to_string(2.5 / fastest_mode_));
    const long out_every = std::lround(cfg_.output_dt / dt);
    if (out_every < 1 || std::abs(out_every * dt - cfg_.output_dt) > 1e-9 * cfg_.output_dt)
        throw InvalidScenario("output_dt must be an integer multiple of dt");

    const long total_steps = std::lround(scenario.duration / dt);
    auto step_of = [&](double t) {
        const double raw = t / dt;
        const long s = std::lround(raw);
        if (std::abs(raw - static_cast<double>(s)) > 1e-6)
            throw InvalidScenario("event times must align with the integration step");
        return s;
    };

    Inputs in;
    in.setpoint = scenario.setpoint;
    in.v_in = scenario.v_in;
    in.R_o = scenario.R_o;

    // Initial state: converter equilibrium with the integrator preloaded at
    // the equilibrium duty, everything else at rest.
    std::vector<double> x(static_cast<std::size_t>(state_size()), 0.0);
    if (mode_ == SimScenario::Mode::Averaged) {
        ConverterParams p0 = params_;
        p0.R_o = scenario.R_o;
        p0.v_in = scenario.v_in;
        p0.v_o = scenario.setpoint;
        const OperatingPoint op0 = dc_operating_point(p0);
        x[0] = op0.I_L;
        x[1] = op0.I_L;
        x[2] = op0.V_c;
        x[static_cast<std::size_t>(n_plant_ + n_core_)] = op0.U;
    } else {
        x[static_cast<std::size_t>(n_plant_ + n_core_)] = op_.U;
    }

    std::mt19937_64 rng(scenario.noise_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SimResult res;
    const std::size_t approx = static_cast<std::size_t>(total_steps / out_every) + 2;
    res.t.reserve(approx);
    res.v_o.reserve(approx);
    res.u.reserve(approx);
    res.i_L1.reserve(approx);
    res.i_L2.reserve(approx);
    res.d_hat.reserve(approx);

    std::size_t next_event = 0;
    std::vector<double> k1, k2, k3, k4, xt;
    Taps taps;

    for (long step = 0; step <= total_steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        while (next_event < scenario.events.size() && step_of(scenario.events[next_event].t) == step) {
            const Event& e = scenario.events[next_event];
            switch (e.kind) {
                case Event::Kind::Setpoint: in.setpoint = e.value; break;
                case Event::Kind::LoadResistance: in.R_o = e.value; break;
                case Event::Kind::InputVoltage: in.v_in = e.value; break;
                case Event::Kind::ExternalLoadCurrent: in.i_ext = e.value; break;
                case Event::Kind::InductanceScale: in.L_scale = e.value; break;
            }
            ++next_event;
        }
        if (scenario.noise_enabled && step % out_every == 0) in.noise_sample = gauss(rng);

        if (step % out_every == 0) {
            derivative(x, in, k1, &taps);
            for (double xi : x)
                if (!std::isfinite(xi)) throw NonFiniteState("simulation diverged at t = " + std::to_string(t));
            if (!std::isfinite(taps.v_o))
                throw NonFiniteState("simulation diverged at t = " + std::to_string(t));
            res.t.push_back(t);
            res.v_o.push_back(taps.v_o);
            res.u.push_back(taps.duty);
            res.i_L1.push_back(mode_ == SimScenario::Mode::Averaged ? taps.i1 : 0.0);
            res.i_L2.push_back(mode_ == SimScenario::Mode::Averaged ? taps.i2 : 0.0);
            res.d_hat.push_back(taps.d_hat);
        }
        if (step == total_steps) break;

        // Classic RK4 with inputs held over the step.
        const std::size_t ns = x.size();
        derivative(x, in, k1, nullptr);
        xt.resize(ns);
        for (std::size_t i = 0; i < ns; ++i) xt[i] = x[i] + 0.5 * dt * k1[i];
        derivative(xt, in, k2, nullptr);
        for (std::size_t i = 0; i < ns; ++i) xt[i] = x[i] + 0.5 * dt * k2[i];
        derivative(xt, in, k3, nullptr);
        for (std::size_t i = 0; i < ns; ++i) xt[i] = x[i] + dt * k3[i];
        derivative(xt, in, k4, nullptr);
        for (std::size_t i = 0; i < ns; ++i)
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return res;
}

inline ClosedLoop build_closed_loop(SimScenario::Mode mode, const CompensatorParams& comp,
                                    const std::optional<FilterParams>& filt, const PlantSet& plants,
                                    const ConverterParams& params, const SimConfig& cfg = SimConfig{}) {
    return ClosedLoop(mode, comp, filt, plants, params, cfg);
}

// ============================================================================
// Performance metrics
// ============================================================================

struct MetricWindow {
    double t_begin = 0.0;
    double t_end = 0.0;
    double overshoot_pct = 0.0;  // peak exceedance beyond the settled value, % of nominal
    double settling_s = 0.0;     // time from window start into the 2%-of-peak band
    bool settled = true;
};

struct PerfMetrics {
    std::vector<MetricWindow> windows;
};

// Overshoot: peak excursion beyond the window's settled value, in the
// direction of travel for set-point moves and in both directions for
// disturbance windows; referenced to the nominal voltage. Settling: first
// time after which |v_o - v_final| stays within 2% of the peak deviation.
inline PerfMetrics metrics(const SimResult& res, const std::vector<std::pair<double, double>>& windows,
                           double v_nominal = 100.0) {
    PerfMetrics pm;
    for (auto [t0, t1] : windows) {
        if (t1 <= t0) throw OutOfRange("metrics: empty window");
        std::size_t i0 = res.t.size(), i1 = res.t.size();
        for (std::size_t i = 0; i < res.t.size(); ++i) {
            if (i0 == res.t.size() && res.t[i] >= t0) i0 = i;
            if (res.t[i] <= t1) i1 = i;
        }
        if (i0 >= res.t.size() || i1 <= i0) throw OutOfRange("metrics: window outside the recorded span");

        // Settled value: average of the last 5% of the window.
        const std::size_t tail = std::max<std::size_t>(1, (i1 - i0) / 20);
        double v_final = 0.0;
        for (std::size_t i = i1 - tail + 1; i <= i1; ++i) v_final += res.v_o[i];
        v_final /= static_cast<double>(tail);

        const double v_start = res.v_o[i0];
        const bool is_step = std::abs(v_final - v_start) > 0.005 * v_nominal;
        const double dir = (v_final >= v_start) ? 1.0 : -1.0;

        double peak_dev = 0.0, exceed = 0.0;
        for (std::size_t i = i0; i <= i1; ++i) {
            const double dev = res.v_o[i] - v_final;
            peak_dev = std::max(peak_dev, std::abs(dev));
            exceed = std::max(exceed, is_step ? dir * dev : std::abs(dev));
        }
        MetricWindow w;
        w.t_begin = t0;
        w.t_end = t1;
        w.overshoot_pct = std::max(0.0, exceed) / v_nominal * 100.0;

        const double band = 0.02 * peak_dev;
        std::size_t settle_idx = i0;
        for (std::size_t i = i1 + 1; i-- > i0;) {
            if (std::abs(res.v_o[i] - v_final) > band) {
                settle_idx = std::min(i + 1, i1);
                break;
            }
            if (i == i0) settle_idx = i0;
        }
        w.settling_s = res.t[settle_idx] - t0;
        // Flag windows that only enter the band in their final stretch.
        w.settled = res.t[settle_idx] <= t1 - 0.05 * (t1 - t0);
        pm.windows.push_back(w);
    }
    return pm;
}

}  // namespace loopshaper
