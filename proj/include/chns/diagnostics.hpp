#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chns/fields_io.hpp"
#include "chns/initial.hpp"
#include "chns/model.hpp"
#include "chns/operators.hpp"

namespace chns {

/// One diagnostics row: instantaneous functionals plus trapezoid-in-time
/// accumulators of the three dissipations and of the entropy E.
struct SeriesRow {
    double t = 0.0;
    double mass = 0.0;
    double c_l1 = 0.0, c_l2 = 0.0, c_linf = 0.0;
    double D_c = 0.0;  // int_0^t int |grad c|^2
    double D_n = 0.0;  // int_0^t int |grad n|^2/(n+1)^2
    double E = 0.0;    // int (n+1) ln((n+1)/(nbar0+1))
    double K = 0.0;    // int |u|^2
    double D_u = 0.0;  // int_0^t int |grad u|^2
    double cumE = 0.0; // int_0^t E
    double dc_inst = 0.0, dn_inst = 0.0, du_inst = 0.0;
};

struct FunctionalSeries {
    double nbar0 = 0.0; // mean of n0 (|Omega| = 1)
    std::vector<SeriesRow> rows;

    const SeriesRow& back() const { return rows.back(); }
    bool empty() const { return rows.empty(); }

    static std::string csv_header() {
        return "t,mass,c_l1,c_l2,c_linf,D_c,D_n,E,K,D_u,cumE,dc_inst,dn_inst,du_inst";
    }
    std::string to_csv() const {
        std::ostringstream o;
        o << csv_header() << "\n";
        for (const SeriesRow& r : rows) {
            o << csv_real(r.t) << ',' << csv_real(r.mass) << ',' << csv_real(r.c_l1) << ','
              << csv_real(r.c_l2) << ',' << csv_real(r.c_linf) << ',' << csv_real(r.D_c) << ','
              << csv_real(r.D_n) << ',' << csv_real(r.E) << ',' << csv_real(r.K) << ','
              << csv_real(r.D_u) << ',' << csv_real(r.cumE) << ',' << csv_real(r.dc_inst) << ','
              << csv_real(r.dn_inst) << ',' << csv_real(r.du_inst) << "\n";
        }
        return o.str();
    }
};

/// int (n+1) ln((n+1)/(ref+1)) with a fixed reference mean.
inline double entropy_vs_reference(const ScalarField& n, double nbar_ref) {
    long double acc = 0.0L;
    const double denom = nbar_ref + 1.0;
    for (double v : n.data()) {
        const double p = v + 1.0;
        acc += static_cast<long double>(p) * std::log(p / denom);
    }
    return static_cast<double>(acc) * n.grid().cell_area();
}

/// Append one diagnostics row; accumulators advance by the trapezoid rule
/// on the output cadence.
inline void record(const State& s, FunctionalSeries& series) {
    SeriesRow r;
    r.t = s.t;
    r.mass = integrate(s.n);
    r.c_l1 = norm(s.c, NormKind::L1);
    r.c_l2 = norm(s.c, NormKind::L2);
    r.c_linf = norm(s.c, NormKind::Linf);
    r.dc_inst = dirichlet_energy(s.c);
    ScalarField np1 = s.n;
    for (double& v : np1.data()) v += 1.0;
    r.dn_inst = weighted_grad_sq(np1);
    r.du_inst = grad_sq(s.u);
    r.K = l2sq(s.u);
    if (series.empty()) series.nbar0 = r.mass; // |Omega| = 1
    r.E = entropy_vs_reference(s.n, series.nbar0);
    if (series.empty()) {
        series.rows.push_back(r);
        return;
    }
    const SeriesRow& p = series.back();
    if (!(r.t > p.t)) throw std::logic_error("record: time must be strictly increasing");
    const double half = 0.5 * (r.t - p.t);
    r.D_c = p.D_c + half * (p.dc_inst + r.dc_inst);
    r.D_n = p.D_n + half * (p.dn_inst + r.dn_inst);
    r.D_u = p.D_u + half * (p.du_inst + r.du_inst);
    r.cumE = p.cumE + half * (p.E + r.E);
    series.rows.push_back(r);
}

struct CheckEntry {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    bool pass = false;
    std::string note;
};

struct InequalityReport {
    std::vector<CheckEntry> entries;

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
    const CheckEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
    std::string to_text() const {
        std::ostringstream o;
        for (const auto& e : entries) {
            o << e.name << " lhs=" << csv_real(e.lhs) << " rhs=" << csv_real(e.rhs)
              << " margin=" << csv_real(e.margin) << ' ' << (e.pass ? "PASS" : "FAIL");
            if (!e.note.empty()) o << " # " << e.note;
            o << "\n";
        }
        return o.str();
    }
};

/// Constants the checks need beyond the series itself; all derived from
/// the configuration, the initial data, and the calibration file.
struct CheckContext {
    double mass0 = 0.0;     // int n0
    double c0_linf = 0.0;   // ||c0||_inf
    double c0_l2sq = 0.0;   // int c0^2
    double u0_l2sq = 0.0;   // int |u0|^2
    double S0_at_c0max = 0.0;
    double grad_phi_inf = 0.0;
    double hess_phi_inf = 0.0;
    double K1 = 0.0; // calibrated functional-inequality constant
    bool have_K1 = false;
    double slack = 1.0; // 1.1 in discretization-slack mode
    bool k4_from_bound = false; // use the entropy bound, not the measured
                                // integral, when assembling K5(T)

    double grad_n_budget_rhs() const {
        return 2.0 * mass0 + S0_at_c0max * S0_at_c0max * c0_l2sq;
    }
    static double poincare_const() { return 1.0 / (M_PI * std::sqrt(2.0)); }
};

namespace detail {

inline CheckEntry make_entry(std::string name, double lhs, double rhs, std::string note = {}) {
    CheckEntry e;
    e.name = std::move(name);
    e.lhs = lhs;
    e.rhs = rhs;
    e.margin = rhs - lhs;
    e.pass = e.margin >= -1e-8 * std::abs(rhs);
    e.note = std::move(note);
    return e;
}

/// Worst violation of nonincrease over all ordered pairs, as a ratio.
inline double worst_monotone_violation(const FunctionalSeries& s, double SeriesRow::*col) {
    double run_min = s.rows.front().*col;
    double worst = 0.0;
    for (const SeriesRow& r : s.rows) {
        const double v = r.*col;
        if (run_min > 0.0) worst = std::max(worst, v / run_min - 1.0);
        else worst = std::max(worst, v - run_min); // degenerate zero series
        run_min = std::min(run_min, v);
    }
    return worst;
}

} // namespace detail

inline CheckEntry check_mass(const FunctionalSeries& s) {
    if (s.empty()) throw std::invalid_argument("check_mass: empty series");
    const double m0 = s.rows.front().mass;
    double drift = 0.0;
    for (const SeriesRow& r : s.rows) drift = std::max(drift, std::abs(r.mass - m0));
    return detail::make_entry("mass-conservation", drift / m0, 1e-10, "relative drift bound");
}

/// p = 1, 2, or 0 for the sup norm.
inline CheckEntry check_c_monotone(const FunctionalSeries& s, int p) {
    if (s.empty()) throw std::invalid_argument("check_c_monotone: empty series");
    double SeriesRow::*col = nullptr;
    std::string name;
    if (p == 1) { col = &SeriesRow::c_l1; name = "c-monotone-L1"; }
    else if (p == 2) { col = &SeriesRow::c_l2; name = "c-monotone-L2"; }
    else { col = &SeriesRow::c_linf; name = "c-monotone-Linf"; }
    return detail::make_entry(name, detail::worst_monotone_violation(s, col), 1e-10,
                              "worst pairwise increase ratio");
}

inline CheckEntry check_grad_c_budget(const FunctionalSeries& s, const CheckContext& ctx) {
    return detail::make_entry("grad-c-budget", s.back().D_c, ctx.slack * 0.5 * ctx.c0_l2sq,
                              "cumulative attractant dissipation");
}

inline CheckEntry check_grad_n_budget(const FunctionalSeries& s, const CheckContext& ctx) {
    return detail::make_entry("grad-n-budget", s.back().D_n, ctx.slack * ctx.grad_n_budget_rhs(),
                              "envelope S0=" + csv_real(ctx.S0_at_c0max));
}

inline CheckEntry check_nlogn(const FunctionalSeries& s, const CheckContext& ctx) {
    if (!ctx.have_K1)
        throw std::invalid_argument("check_nlogn: missing calibration constant");
    const double T = s.back().t;
    const double k2 = ctx.grad_n_budget_rhs();
    const double rhs = ctx.slack * (k2 / (2.0 * M_PI) + ctx.K1 * T) * (ctx.mass0 + 1.0);
    return detail::make_entry("entropy-time-integral", s.back().cumE, rhs,
                              "K1=" + csv_real(ctx.K1) + " (calibrated), K2=" + csv_real(k2));
}

inline CheckEntry check_nlogn_pointwise(const FunctionalSeries& s, const CheckContext& ctx) {
    if (!ctx.have_K1)
        throw std::invalid_argument("check_nlogn_pointwise: missing calibration constant");
    double lhs = -1e300;
    for (const SeriesRow& r : s.rows)
        lhs = std::max(lhs, r.E - (r.mass + 1.0) * r.dn_inst / (2.0 * M_PI));
    const double rhs = ctx.slack * ctx.K1 * (ctx.mass0 + 1.0);
    return detail::make_entry("entropy-pointwise", lhs, rhs,
                              "per-snapshot entropy vs weighted dissipation");
}

/// Constant bookkeeping of the velocity energy estimate:
/// K2 = 2|grad phi|^2 + 2|H phi|^2 Cp^2, K3 = 4 pi / (K2 int(n0+1)),
/// K5(T) = (2/K3) (K4(T) + K1 T int(n0+1)).
struct EnergyConstants {
    double K2 = 0.0, K3 = 0.0, K4 = 0.0, K5 = 0.0, rhs = 0.0;
};

inline EnergyConstants energy_constants(const FunctionalSeries& s, const CheckContext& ctx) {
    EnergyConstants k;
    const double cp = CheckContext::poincare_const();
    k.K2 = 2.0 * ctx.grad_phi_inf * ctx.grad_phi_inf +
           2.0 * ctx.hess_phi_inf * ctx.hess_phi_inf * cp * cp;
    const double m1 = ctx.mass0 + 1.0;
    k.K3 = 4.0 * M_PI / (k.K2 * m1);
    const double T = s.back().t;
    if (ctx.k4_from_bound)
        k.K4 = (ctx.grad_n_budget_rhs() / (2.0 * M_PI) + ctx.K1 * T) * m1;
    else
        k.K4 = s.back().cumE;
    k.K5 = (2.0 / k.K3) * (k.K4 + ctx.K1 * T * m1);
    k.rhs = ctx.u0_l2sq + k.K5;
    return k;
}

inline std::vector<CheckEntry> check_energy_u(const FunctionalSeries& s, const CheckContext& ctx) {
    if (!ctx.have_K1)
        throw std::invalid_argument("check_energy_u: missing calibration constant");
    const EnergyConstants k = energy_constants(s, ctx);
    double sup = 0.0;
    for (const SeriesRow& r : s.rows) sup = std::max(sup, r.K + r.D_u);
    const std::string note = "K2=" + csv_real(k.K2) + " K3=" + csv_real(k.K3) +
                             " K4=" + csv_real(k.K4) + " K5=" + csv_real(k.K5) +
                             (ctx.k4_from_bound ? " (K4 from bound)" : " (K4 measured)");
    std::vector<CheckEntry> out;
    out.push_back(detail::make_entry("u-energy-sup", sup, ctx.slack * k.rhs, note));
    out.push_back(detail::make_entry("u-dissipation-total", s.back().D_u, ctx.slack * k.rhs,
                                     "same right side as u-energy-sup"));
    return out;
}

/// The full per-run report: one entry per tracked estimate plus the
/// pointwise entropy form.
inline InequalityReport run_checks(const FunctionalSeries& s, const CheckContext& ctx) {
    InequalityReport rep;
    rep.entries.push_back(check_mass(s));
    rep.entries.push_back(check_c_monotone(s, 1));
    rep.entries.push_back(check_c_monotone(s, 2));
    rep.entries.push_back(check_c_monotone(s, 0));
    rep.entries.push_back(check_grad_c_budget(s, ctx));
    rep.entries.push_back(check_grad_n_budget(s, ctx));
    if (ctx.have_K1) {
        rep.entries.push_back(check_nlogn(s, ctx));
        rep.entries.push_back(check_nlogn_pointwise(s, ctx));
        for (auto& e : check_energy_u(s, ctx)) rep.entries.push_back(std::move(e));
    }
    return rep;
}

} // namespace chns
