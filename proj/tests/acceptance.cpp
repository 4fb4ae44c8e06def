// Acceptance suite: one line per criterion, exit nonzero when any fails.
//
// Each criterion pins its thresholds here, in code. Two of them (1 and 3)
// encode published target values that the shipped fixture data cannot meet;
// they run faithfully and report the measured numbers instead of being
// weakened. The analysis lives in the verification rows they print.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <vector>

#include "loopshaper/kfactor.hpp"
#include "loopshaper/simulator.hpp"
#include "loopshaper/synthesis.hpp"
#include "loopshaper/verify_paper.hpp"

using namespace loopshaper;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

void report(int criterion, const char* title, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s -- %s\n", pass ? "PASS" : "FAIL", criterion, title, detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// Hermitian PSD oracle on the assembled block, independent of the reduced test.
bool psd_eig(double a, const std::vector<Complex>& b, double g, double tol_scale) {
    const int n = 1 + static_cast<int>(b.size());
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
    H(0, 0) = a;
    for (int k = 0; k + 1 < n; ++k) {
        H(k + 1, 0) = b[static_cast<std::size_t>(k)];
        H(0, k + 1) = std::conj(b[static_cast<std::size_t>(k)]);
        H(k + 1, k + 1) = g;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    return es.eigenvalues().minCoeff() >= -tol_scale * std::max(1.0, H.cwiseAbs().maxCoeff());
}

void criterion_1_and_2() {
    Timer timer;
    SynthesisConfig cfg = SynthesisConfig::paper_default();
    SynthesisReport rep;
    bool ran = true;
    std::string error;
    try {
        rep = synthesize(cfg);
    } catch (const std::exception& e) {
        ran = false;
        error = e.what();
    }
    const double secs = timer.seconds();

    if (!ran) {
        report(1, "paper-run reproduction", false, "synthesis aborted: " + error);
        report(2, "CCP descent property", false, "no trace available");
        return;
    }
    const bool converged = rep.status == SynthesisReport::Status::Converged && rep.iterations <= 50;
    const bool g1_ok = rep.gamma1 <= 0.9;
    const bool g2_ok = rep.gamma2 <= 1.1;
    const bool stable = rep.verification.stability.outer && rep.verification.stability.inner &&
                        rep.verification.stability.combined;
    const bool time_ok = secs <= 60.0;
    report(1, "paper-run reproduction", converged && g1_ok && g2_ok && stable && time_ok,
           fmt("status=%s iters=%d gamma1=%.4f (<=0.9 %s) gamma2=%.4f (<=1.1 %s) stable=%d%d%d runtime=%.1fs",
               converged ? "converged" : "not-converged", rep.iterations, rep.gamma1, g1_ok ? "ok" : "VIOLATED",
               rep.gamma2, g2_ok ? "ok" : "VIOLATED", rep.verification.stability.outer,
               rep.verification.stability.inner, rep.verification.stability.combined, secs));
    if (!(converged && g1_ok && g2_ok && stable)) {
        for (const auto& row : rep.verification.rows)
            if (!row.informational)
                std::printf("       %-10s peak %10.4f at %9.1f rad/s (enforced level %.4f)\n", row.name.c_str(),
                            row.peak, row.omega_at_peak, row.bound);
    }

    double worst_increase = 0.0;
    for (std::size_t i = 1; i < rep.trace.size(); ++i) {
        worst_increase = std::max(worst_increase, rep.trace[i].gamma1 - rep.trace[i - 1].gamma1);
        worst_increase = std::max(worst_increase, rep.trace[i].gamma2 - rep.trace[i - 1].gamma2);
    }
    const double slack = 10.0 * cfg.solver_tol;
    report(2, "CCP descent property", worst_increase <= slack && !rep.descent_violation,
           fmt("worst per-stage increase %.3e (allowed %.1e) over %zu iterations", worst_increase, slack,
               rep.trace.size()));

    // Working warm start for reference (not part of the criterion verdict).
    SynthesisConfig alt = SynthesisConfig::paper_default();
    alt.use_kfactor_init();
    try {
        const SynthesisReport arep = synthesize(alt);
        std::printf("       note: K-factor warm start reaches gamma1=%.4f gamma2=%.4f stable=%d%d%d in %d"
                    " iterations\n",
                    arep.gamma1, arep.gamma2, arep.verification.stability.outer,
                    arep.verification.stability.inner, arep.verification.stability.combined, arep.iterations);
    } catch (const std::exception& e) {
        std::printf("       note: K-factor warm start failed: %s\n", e.what());
    }
}

void criterion_3() {
    Timer timer;
    VerifyPaperOptions opt;
    opt.run_simulation = false;
    const VerifyPaperReport rep = verify_paper_suite(opt);
    bool pass = true;
    int shown = 0;
    std::string first_fail;
    for (const auto& row : rep.rows) {
        const bool is_norm = row.name.rfind("norm/", 0) == 0;
        const bool is_stab = row.name.rfind("stability/", 0) == 0;
        if (!is_norm && !is_stab) continue;
        if (row.outcome != VerifyPaperRow::Outcome::Pass) {
            pass = false;
            if (first_fail.empty()) first_fail = row.name;
            ++shown;
        }
    }
    const double secs = timer.seconds();
    report(3, "published-controller verification", pass && secs <= 5.0,
           fmt("%d constraint/stability rows exceed 1.15x the published levels; runtime %.1fs", shown, secs));
    for (const auto& row : rep.rows)
        if (row.outcome == VerifyPaperRow::Outcome::Fail)
            std::printf("       %-22s %s\n", row.name.c_str(), row.detail.c_str());
}

void criterion_4() {
    Timer timer;
    const RationalTF designed = kfactor_design(KFactorSpec{2300.0, 172.0, std::pow(10.0, -40.0 / 20.0)});
    const auto pc = paper_controllers();
    const auto z = roots(designed.num);
    std::vector<double> dd(designed.den.coeffs().begin() + 1, designed.den.coeffs().end());
    const auto p = roots(Polynomial(dd));
    const double z_err = std::abs(std::abs(z[0]) - 482.6) / 482.6;
    const double p_err = std::abs(std::abs(p[0]) - 395930.0) / 395930.0;
    report(4, "K-factor cross-check", z_err <= 0.10 && p_err <= 0.10 && timer.seconds() < 1.0,
           fmt("repeated zero %.1f rad/s (%.2f%% from 482.6), repeated pole %.0f rad/s (%.2f%% from 395930)",
               std::abs(z[0]), z_err * 100.0, std::abs(p[0]), p_err * 100.0));
}

void criterion_5() {
    Timer timer;
    std::mt19937_64 rng(90210);
    std::uniform_real_distribution<double> ua(-0.5, 3.0);
    std::uniform_real_distribution<double> ub(-2.0, 2.0);
    int disagreements = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const double a = ua(rng);
        const double g = ua(rng);
        std::vector<Complex> b(trial % 2 ? 2 : 1);
        for (auto& bk : b) bk = Complex(ub(rng), ub(rng));
        if (reduce_hermitian_block(a, b, g) != psd_eig(a, b, g, 1e-10)) ++disagreements;
    }
    report(5, "LMI-cone oracle equivalence", disagreements == 0 && timer.seconds() < 5.0,
           fmt("%d disagreements on 500 random 2x2/3x3 Hermitian blocks", disagreements));
}

void criterion_6() {
    Timer timer;
    const auto plants = identified_plant_set();
    const auto params = prototype_params();
    const auto kx = CompensatorParams::from_controller(paper_controllers().K_x);
    const auto kk = CompensatorParams::from_controller(paper_controllers().K_k);

    SimScenario load_step;
    load_step.duration = 2.5;
    load_step.mode = SimScenario::Mode::Averaged;
    load_step.R_o = 20.0;
    load_step.v_in = 50.0;
    load_step.events.push_back({2.0, Event::Kind::LoadResistance, 80.0});

    SimScenario vin_step;
    vin_step.duration = 1.2;
    vin_step.mode = SimScenario::Mode::Averaged;
    vin_step.R_o = 20.0;
    vin_step.v_in = 46.0;
    vin_step.events.push_back({0.5, Event::Kind::InputVoltage, 52.0});
    vin_step.events.push_back({0.85, Event::Kind::InputVoltage, 46.0});

    const ClosedLoop lx(SimScenario::Mode::Averaged, kx, std::nullopt, plants, params);
    const ClosedLoop lk(SimScenario::Mode::Averaged, kk, std::nullopt, plants, params);
    const auto m_load_x = metrics(lx.run(load_step), {{2.0, 2.5}}).windows[0];
    const auto m_load_k = metrics(lk.run(load_step), {{2.0, 2.5}}).windows[0];
    const auto m_vin_x = metrics(lx.run(vin_step), {{0.5, 0.85}, {0.85, 1.2}});
    const auto m_vin_k = metrics(lk.run(vin_step), {{0.5, 0.85}, {0.85, 1.2}});

    bool ordering = m_load_x.overshoot_pct < m_load_k.overshoot_pct && m_load_x.settling_s < m_load_k.settling_s;
    for (std::size_t i = 0; i < 2; ++i) {
        ordering = ordering && m_vin_x.windows[i].overshoot_pct < m_vin_k.windows[i].overshoot_pct &&
                   m_vin_x.windows[i].settling_s < m_vin_k.windows[i].settling_s;
    }
    const bool bands = m_load_x.overshoot_pct >= 2.0 && m_load_x.overshoot_pct <= 6.0 &&
                       m_load_x.settling_s >= 0.030 && m_load_x.settling_s <= 0.090;
    const double secs = timer.seconds();
    report(6, "scenario ordering vs published table", ordering && bands && secs <= 30.0,
           fmt("load step: K_x %.2f%%/%.0fms vs K_k %.2f%%/%.0fms; input steps ordered=%d; runtime %.1fs",
               m_load_x.overshoot_pct, m_load_x.settling_s * 1e3, m_load_k.overshoot_pct,
               m_load_k.settling_s * 1e3, ordering, secs));
}

void criterion_7() {
    Timer timer;
    bool pass = true;
    std::string detail;

    // Routh-Hurwitz vs companion roots on 1000 random polynomials.
    {
        std::mt19937_64 rng(20240817);
        std::uniform_int_distribution<int> deg(1, 8);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        int mismatches = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int n = deg(rng);
            std::vector<double> c(static_cast<std::size_t>(n) + 1);
            for (auto& x : c) x = u(rng);
            while (std::abs(c.back()) < 0.1) c.back() = u(rng);
            const Polynomial p(c);
            bool oracle = true;
            for (const auto& r : roots(p)) oracle = oracle && (r.real() < -1e-9);
            if (is_hurwitz(p) != oracle) ++mismatches;
        }
        pass = pass && mismatches == 0;
        detail += fmt("routh-vs-roots mismatches %d; ", mismatches);
    }

    // realize/eval consistency on random proper transfer functions.
    {
        std::mt19937_64 rng(31337);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 40; ++trial) {
            Polynomial den{1.0};
            const int order = 1 + trial % 6;
            for (int k = 0; k < order; ++k) den = den * Polynomial{std::pow(10.0, 2.0 * u01(rng)), 1.0};
            Polynomial num{0.5 + u01(rng)};
            for (int k = 0; k < order - 1; ++k)
                if (u01(rng) < 0.6) num = num * Polynomial{std::pow(10.0, 2.0 * u01(rng)), 1.0};
            const RationalTF tf{num, den};
            const StateSpace ss = realize(tf);
            for (double w : make_grid(1e-1, 1e4, 50)) {
                const Complex direct = tf.eval_jw(w);
                worst = std::max(worst, std::abs(direct - ss.eval_jw(w)) / (1.0 + std::abs(direct)));
            }
        }
        pass = pass && worst <= 1e-9;
        detail += fmt("realize/eval worst %.2e; ", worst);
    }

    // RK4 order on a smooth closed-loop segment.
    {
        const auto plants = identified_plant_set();
        const auto params = prototype_params();
        const auto kx = CompensatorParams::from_controller(paper_controllers().K_x);
        SimScenario sc;
        sc.duration = 0.02;
        sc.mode = SimScenario::Mode::Lti;
        sc.events.push_back({0.004, Event::Kind::Setpoint, 100.5});
        auto run_dt = [&](double dt) {
            SimConfig cfg;
            cfg.dt = dt;
            cfg.output_dt = 4e-4;
            return ClosedLoop(sc.mode, kx, std::nullopt, plants, params, cfg).run(sc);
        };
        const SimResult ref = run_dt(2.5e-6);
        auto err = [&ref](const SimResult& r) {
            double e = 0.0;
            for (std::size_t i = 0; i < r.t.size(); ++i) e = std::max(e, std::abs(r.v_o[i] - ref.v_o[i]));
            return e;
        };
        const double order = std::log2(err(run_dt(4e-5)) / err(run_dt(2e-5)));
        pass = pass && order >= 3.2 && order <= 4.8;
        detail += fmt("RK4 order %.2f; ", order);
    }

    // Grid H-infinity estimates vs analytic values.
    {
        const auto e1 = hinf_norm(RationalTF{Polynomial{1.0}, Polynomial{1.0, 1.0}}, make_grid(1e-4, 1e3, 400));
        const double peak2_true = 5.0 / std::sqrt(0.0396);
        const auto e2 = hinf_norm(RationalTF{Polynomial{5.0}, Polynomial{1.0, 0.2, 1.0}}, make_grid(1e-2, 1e2, 500));
        const bool ok1 = std::abs(e1.peak - 1.0) <= 1e-3;
        const bool ok2 = std::abs(e2.peak - peak2_true) <= 1e-3 * peak2_true;
        pass = pass && ok1 && ok2;
        detail += fmt("hinf errors %.1e / %.1e", std::abs(e1.peak - 1.0), std::abs(e2.peak - peak2_true));
    }

    pass = pass && timer.seconds() <= 10.0;
    report(7, "numerical infrastructure properties", pass, detail + fmt(" (runtime %.1fs)", timer.seconds()));
}

void criterion_8() {
    const int L = grid_size_bound(0.1, 0.001, 6);
    report(8, "scenario-bound formula", L == 239, fmt("grid_size_bound(0.1, 0.001, 6) = %d", L));
}

}  // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    criterion_1_and_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    std::printf("================\n%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
