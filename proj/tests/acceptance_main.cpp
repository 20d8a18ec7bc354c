// Acceptance battery: every criterion at its stated tolerance, one
// PASS/FAIL line each, exit code = number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "chns/epsilon_study.hpp"
#include "chns/solver.hpp"
#include "chns/trudinger_moser.hpp"
#include "chns/weakform.hpp"

using namespace chns;
namespace fs = std::filesystem;

namespace {

int failures = 0;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

void verdict(int idx, bool pass, const std::string& what) {
    std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", idx, what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

RunConfig default_config() {
    RunConfig cfg; // 64x64, T = 1, eps = 0.1 are the documented defaults
    return cfg;
}

RunConfig heat_config() {
    // both transported fields reduce to heat flow: S = 0, f = 0, u = 0
    RunConfig cfg;
    cfg.a0 = 0.0;
    cfg.beta0 = 0.0;
    cfg.f_choice = FChoice::Zero;
    cfg.u0_choice = U0Choice::Zero;
    cfg.n0_choice = N0Choice::Cosine;
    cfg.c0_choice = C0Choice::Cosine;
    cfg.diag_every = 4;
    return cfg;
}

} // namespace

int main() {
    const double t_battery0 = now_seconds();
    std::printf("acceptance battery\n");

    // ---- functional-inequality calibration (also criterion 5) ----------
    const double t5a = now_seconds();
    Grid g64 = Grid::unit(64, 64);
    RunConfig cfg = default_config();
    State init64 = build_initial_state(cfg, g64);
    CheckContext base_ctx = make_check_context(cfg, init64);
    const double cp = CheckContext::poincare_const();
    const double K2phi = 2.0 * base_ctx.grad_phi_inf * base_ctx.grad_phi_inf +
                         2.0 * base_ctx.hess_phi_inf * base_ctx.hess_phi_inf * cp * cp;
    const double k3 = 4.0 * M_PI / (K2phi * (base_ctx.mass0 + 1.0));

    TestFunctionFamily fam = generate_family(g64, 7, 1000, "mixed");
    CalibrationResult cal = calibrate_C(fam, default_a_grid(k3));

    double worst1 = 1e300, worst2 = 1e300, worst_jensen = -1e300;
    for (int m = 0; m < fam.count(); ++m) {
        for (double a : cal.a_grid)
            worst1 = std::min(worst1, check_ineq1(fam.phis[m], fam.psis[m], a, cal.C_est));
        worst2 = std::min(worst2, check_ineq2(fam.psis[m], cal.C_est));
        worst_jensen = std::max(worst_jensen, jensen_check(fam.psis[m]));
    }
    TestFunctionFamily fam2 = generate_family(g64, 7, 2000, "mixed");
    CalibrationResult cal2 = calibrate_C(fam2, default_a_grid(k3));
    const bool stable = (cal.C_est == 0.0 && cal2.C_est <= 1e-6) ||
                        (cal.C_est > 0.0 && std::abs(cal2.C_est - cal.C_est) <= 0.05 * cal.C_est);
    const double t5 = now_seconds() - t5a;

    // ---- the default run (criteria 1, 2, 3, 4, 6, 7) --------------------
    const double t1a = now_seconds();
    Trajectory traj = run(cfg, {true, ""});
    const double t_run = now_seconds() - t1a;

    CheckContext ctx = base_ctx;
    ctx.K1 = cal.C_est;
    ctx.have_K1 = true;
    InequalityReport rep = run_checks(traj.series, ctx);
    auto entry = [&](const char* name) -> const CheckEntry& {
        const CheckEntry* e = rep.find(name);
        if (!e) throw std::logic_error(std::string("missing report entry ") + name);
        return *e;
    };

    {
        const CheckEntry& e = entry("mass-conservation");
        verdict(1, e.pass && t_run <= 120.0,
                "mass conservation: relative drift " + fmt(e.lhs) + " <= 1e-10, runtime " +
                    fmt(t_run) + " s <= 120 s");
    }
    {
        const bool ok = entry("c-monotone-L1").pass && entry("c-monotone-L2").pass &&
                        entry("c-monotone-Linf").pass;
        verdict(2, ok, "attractant norms nonincreasing for p in {1, 2, inf} within 1e-10");
    }
    {
        const CheckEntry& e = entry("grad-c-budget");
        bool ok = e.pass && e.margin > 0.0;
        // decoupled heat run: the p = 2 energy identity within one percent
        RunConfig hc = heat_config();
        Trajectory heat = run(hc, {false, ""});
        const SeriesRow& last = heat.series.back();
        State hinit = build_initial_state(hc, Grid::unit(hc.nx, hc.ny));
        const double half_c0 = 0.5 * std::pow(norm(hinit.c, NormKind::L2), 2);
        const double identity = 0.5 * last.c_l2 * last.c_l2 + last.D_c;
        const double id_err = std::abs(identity - half_c0) / half_c0;
        ok = ok && id_err <= 0.01;
        verdict(3, ok, "grad-c budget margin " + fmt(e.margin) + " > 0; heat-run p=2 identity off by " +
                           fmt(id_err) + " <= 1e-2");
    }
    {
        const CheckEntry& e = entry("grad-n-budget");
        verdict(4, e.pass && e.margin > 0.0,
                "weighted grad-n budget: " + fmt(e.lhs) + " <= " + fmt(e.rhs) + " with margin " +
                    fmt(e.margin));
    }
    {
        const bool ok = std::isfinite(cal.C_est) && stable && worst1 >= -1e-9 &&
                        worst2 >= -1e-9 && worst_jensen <= 1e-12 && t5 <= 300.0;
        verdict(5, ok,
                "functional-inequality suite: C_est " + fmt(cal.C_est) + " (doubled: " +
                    fmt(cal2.C_est) + "), min margins " + fmt(worst1) + "/" + fmt(worst2) +
                    ", max jensen " + fmt(worst_jensen) + ", K1_raw " + fmt(cal.K1_est) +
                    ", runtime " + fmt(t5) + " s <= 300 s");
    }
    {
        const CheckEntry& ei = entry("entropy-time-integral");
        const CheckEntry& ep = entry("entropy-pointwise");
        verdict(6, ei.pass && ep.pass,
                "entropy bound: integrated margin " + fmt(ei.margin) + ", pointwise margin " +
                    fmt(ep.margin));
    }
    {
        const CheckEntry& es = entry("u-energy-sup");
        const CheckEntry& ed = entry("u-dissipation-total");
        verdict(7, es.pass && ed.pass,
                "velocity energy: sup " + fmt(es.lhs) + " <= " + fmt(es.rhs) +
                    " (constants assembled per the estimate chain)");
    }

    // ---- weak-form residual studies (criterion 8) -----------------------
    {
        RunConfig hc = heat_config();
        hc.wf_levels = 3;
        hc.wf_base_nx = 16;
        hc.wf_tsupp = 0.25;
        hc.wf_snap_every = 8;
        WeakformStudy heat_study = run_weakform_study(hc);

        WeakformStudy coupled = run_weakform_study_matched(traj, 3);
        evaluate_trajectory(coupled, traj);

        const bool ok = heat_study.order_residual_c >= 1.0 && heat_study.order_gap >= 1.0 &&
                        coupled.min_ratio_c >= 1.5 && coupled.min_ratio_u >= 1.5 &&
                        coupled.traj_gaps_pass;
        verdict(8, ok,
                "weak forms: heat orders c " + fmt(heat_study.order_residual_c) + " gap " +
                    fmt(heat_study.order_gap) + " >= 1; coupled ratios c " +
                    fmt(coupled.min_ratio_c) + " u " + fmt(coupled.min_ratio_u) +
                    " >= 1.5; run gaps >= -" + fmt(coupled.tol_gap));
    }

    // ---- regularization family (criterion 9) ----------------------------
    {
        const double t9a = now_seconds();
        RunConfig ec = default_config();
        ec.eps_T = 0.5;
        ec.snapshot_every = 64;
        ec.diag_every = 16;
        std::vector<Trajectory> family = run_family(ec);
        bool ok = true;
        std::string note;
        for (const Trajectory& tr : family) ok = ok && !tr.truncated;
        if (ok) {
            CauchyTable table = cauchy_table(family, ec.eps_T, cal.C_est);
            for (const Trajectory& tr : family) {
                State ini = build_initial_state(tr.config, tr.grid);
                CheckContext mctx = make_check_context(tr.config, ini);
                mctx.K1 = cal.C_est;
                mctx.have_K1 = true;
                mctx.k4_from_bound = true;
                ok = ok && run_checks(tr.series, mctx).all_pass();
            }
            auto monotone = [&](double CauchyRow::*col) {
                for (std::size_t k = 0; k + 1 < table.rows.size(); ++k)
                    if (table.rows[k].*col < table.rows[k + 1].*col * (1.0 - 1e-12)) return false;
                return true;
            };
            const bool mono = monotone(&CauchyRow::l1_n) && monotone(&CauchyRow::l2_c) &&
                              monotone(&CauchyRow::l2_u) && monotone(&CauchyRow::l2_grad_c);
            const bool ui_ok = table.ui_value <= table.ui_bound;
            ok = ok && mono && ui_ok;
            note = "pairs L1n";
            for (const CauchyRow& r : table.rows) note += " " + fmt(r.l1_n);
            note += std::string("; monotone ") + (mono ? "yes" : "NO") + "; UI " +
                    fmt(table.ui_value) + " <= " + fmt(table.ui_bound);
        }
        const double t9 = now_seconds() - t9a;
        ok = ok && t9 <= 600.0;
        verdict(9, ok, "regularization family: " + note + "; runtime " + fmt(t9) + " s <= 600 s");
    }

    // ---- determinism and total runtime (criterion 10) --------------------
    {
        RunConfig dc;
        dc.nx = dc.ny = 32;
        dc.T = 0.05;
        dc.snapshot_every = 32;
        dc.diag_every = 8;
        const std::string d1 = "acceptance_tmp_a", d2 = "acceptance_tmp_b";
        fs::remove_all(d1);
        fs::remove_all(d2);
        run(dc, {false, d1});
        run(dc, {false, d2});
        const bool identical =
            read_text_file(d1 + "/diagnostics.csv") == read_text_file(d2 + "/diagnostics.csv") &&
            read_text_file(d1 + "/manifest.txt") == read_text_file(d2 + "/manifest.txt");
        fs::remove_all(d1);
        fs::remove_all(d2);
        const double total = now_seconds() - t_battery0;
        verdict(10, identical && total <= 1800.0,
                std::string("repeat runs byte-identical: ") + (identical ? "yes" : "NO") +
                    "; battery total " + fmt(total) + " s <= 1800 s");
    }

    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures;
}
