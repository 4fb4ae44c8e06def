#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "loopshaper/kfactor.hpp"
#include "loopshaper/loop_functions.hpp"
#include "loopshaper/simulator.hpp"
#include "loopshaper/stability.hpp"

namespace loopshaper {

// ============================================================================
// Built-in verification against the published design data
// ============================================================================
// One table covering: stability of the published controllers, dense-grid
// norm levels against the published objective values with 15% slack, the
// K-factor cross-check, and the load-step simulation ordering.

struct VerifyPaperRow {
    enum class Outcome { Pass, Fail, GridInsufficient };
    std::string name;
    std::string detail;
    Outcome outcome = Outcome::Fail;
};

struct VerifyPaperReport {
    std::vector<VerifyPaperRow> rows;

    bool all_pass() const {
        for (const auto& r : rows)
            if (r.outcome == VerifyPaperRow::Outcome::Fail) return false;
        return true;
    }
};

struct VerifyPaperOptions {
    double grid_lo = 1e2;
    double grid_hi = 1e5;
    std::size_t grid_count = 2000;
    bool run_simulation = true;
    // Published objective levels and the verification slack.
    double gamma1_published = 0.813;
    double gamma2_published = 1.0;
    double slack = 1.15;
};

inline VerifyPaperReport verify_paper_suite(const VerifyPaperOptions& opt = VerifyPaperOptions{}) {
    VerifyPaperReport rep;
    const PlantSet plants = identified_plant_set();
    const WeightSet weights = paper_weights();
    const PaperControllers pc = paper_controllers();
    const CompensatorParams kx = CompensatorParams::from_controller(pc.K_x);
    const CompensatorParams k2x = CompensatorParams::from_controller(pc.K_2x);
    const CompensatorParams kk = CompensatorParams::from_controller(pc.K_k);
    const FilterParams q = FilterParams::from_q(pc.Q);

    auto add = [&rep](const std::string& name, bool pass, const std::string& detail) {
        rep.rows.push_back(
            {name, detail, pass ? VerifyPaperRow::Outcome::Pass : VerifyPaperRow::Outcome::Fail});
    };

    // --- (a) Stability of the published designs.
    {
        auto outer = [&plants](const CompensatorParams& c) {
            return is_hurwitz(plants.G.den * c.Y.shifted(1) + plants.G.num * c.X);
        };
        add("stability/K_x outer loop", outer(kx), "characteristic polynomial of the 1-DOF loop");
        add("stability/K_2x outer loop", outer(k2x), "characteristic polynomial of the 2-DOF outer loop");
        add("stability/K_k outer loop", outer(kk), "characteristic polynomial of the baseline loop");
        add("stability/inner DOB loop", is_hurwitz(q.M + q.N), "M + N");
        add("stability/combined loop", is_hurwitz(q.M * (plants.G.den * kx.Y.shifted(1) + plants.G.num * kx.X)),
            "M * outer polynomial");
    }

    // --- (b) Dense-grid norm levels for K_x and Q against the published
    //     gamma values with slack. A grid narrower than the published band
    //     cannot certify the peaks, so rows degrade to grid-insufficient.
    {
        const bool grid_covers = opt.grid_lo <= 1e2 * (1.0 + 1e-12) && opt.grid_hi >= 1e5 * (1.0 - 1e-12);
        NormBounds bounds;
        bounds.feedback = opt.gamma1_published * opt.slack;
        bounds.dob = opt.gamma2_published * opt.slack;
        bounds.combined = opt.gamma2_published * opt.slack;
        const FrequencyGrid grid = make_grid(opt.grid_lo, opt.grid_hi, opt.grid_count);
        const NormReport norms = verify_norms(kx, q, plants, weights, grid, bounds);
        for (const NormRow& row : norms.rows) {
            if (row.informational) continue;
            std::ostringstream os;
            os << "peak " << row.peak << " at " << row.omega_at_peak << " rad/s, bound " << row.bound;
            VerifyPaperRow r;
            r.name = "norm/" + row.name;
            r.detail = os.str();
            r.outcome = row.pass ? VerifyPaperRow::Outcome::Pass
                                 : (grid_covers ? VerifyPaperRow::Outcome::Fail
                                                : VerifyPaperRow::Outcome::GridInsufficient);
            rep.rows.push_back(r);
        }
    }

    // --- (c) K-factor cross-check against the published baseline roots.
    {
        const RationalTF designed = kfactor_design(KFactorSpec{2300.0, 172.0, std::pow(10.0, -40.0 / 20.0)});
        const auto z_pub = roots(pc.K_k.num);
        const auto z_des = roots(designed.num);
        const double z_err = std::abs(std::abs(z_des[0]) - std::abs(z_pub[0])) / std::abs(z_pub[0]);
        std::vector<double> dp(pc.K_k.den.coeffs().begin() + 1, pc.K_k.den.coeffs().end());
        std::vector<double> dd(designed.den.coeffs().begin() + 1, designed.den.coeffs().end());
        const auto p_pub = roots(Polynomial(dp));
        const auto p_des = roots(Polynomial(dd));
        const double p_err = std::abs(std::abs(p_des[0]) - std::abs(p_pub[0])) / std::abs(p_pub[0]);
        std::ostringstream os;
        os << "zero mismatch " << z_err * 100.0 << "%, pole mismatch " << p_err * 100.0 << "%";
        add("kfactor/zero-pole placement", z_err <= 0.10 && p_err <= 0.10, os.str());
    }

    // --- (d) Load-step simulation ordering, K_x vs K_k.
    if (opt.run_simulation) {
        SimScenario sc;
        sc.duration = 2.5;
        sc.mode = SimScenario::Mode::Averaged;
        sc.R_o = 20.0;
        sc.v_in = 50.0;
        sc.events.push_back({2.0, Event::Kind::LoadResistance, 80.0});
        const ConverterParams params = prototype_params();
        const ClosedLoop loop_x(sc.mode, kx, std::nullopt, plants, params);
        const ClosedLoop loop_k(sc.mode, kk, std::nullopt, plants, params);
        const auto mx = metrics(loop_x.run(sc), {{2.0, 2.5}}).windows[0];
        const auto mk = metrics(loop_k.run(sc), {{2.0, 2.5}}).windows[0];
        std::ostringstream os;
        os << "K_x " << mx.overshoot_pct << "% / " << mx.settling_s * 1e3 << " ms vs K_k " << mk.overshoot_pct
           << "% / " << mk.settling_s * 1e3 << " ms";
        add("simulation/load-step ordering",
            mx.overshoot_pct < mk.overshoot_pct && mx.settling_s < mk.settling_s, os.str());
        add("simulation/K_x load-step overshoot in band",
            mx.overshoot_pct >= 2.0 && mx.overshoot_pct <= 6.0,
            "overshoot " + std::to_string(mx.overshoot_pct) + "% (band 2..6%)");
        add("simulation/K_x load-step settling in band", mx.settling_s >= 0.030 && mx.settling_s <= 0.090,
            "settling " + std::to_string(mx.settling_s * 1e3) + " ms (band 30..90 ms)");
    }

    return rep;
}

}  // namespace loopshaper
