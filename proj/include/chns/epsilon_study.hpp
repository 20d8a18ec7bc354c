#pragma once

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chns/solver.hpp"
#include "chns/trudinger_moser.hpp"

namespace chns {

/// Space-time norms of the difference between two trajectories sharing a
/// grid and an output cadence; a computable stand-in for the
/// epsilon-limit compactness chain.
struct CauchyRow {
    double eps_hi = 0.0, eps_lo = 0.0;
    double l1_n = 0.0;      // L1(Omega x (0,T)) of n difference
    double l2_c = 0.0;      // L2 of c difference
    double l2_u = 0.0;      // L2 of u difference
    double l2_grad_c = 0.0; // L2 of grad c difference
};

struct CauchyTable {
    std::vector<CauchyRow> rows;
    double ui_value = 0.0; // sup over members of the entropy functional
    double ui_bound = 0.0; // the time-integrated entropy bound

    std::string to_csv() const {
        std::ostringstream o;
        o << "eps_hi,eps_lo,L1_n,L2_c,L2_u,L2_grad_c\n";
        for (const CauchyRow& r : rows)
            o << csv_real(r.eps_hi) << ',' << csv_real(r.eps_lo) << ',' << csv_real(r.l1_n) << ','
              << csv_real(r.l2_c) << ',' << csv_real(r.l2_u) << ',' << csv_real(r.l2_grad_c)
              << "\n";
        o << "uniform_integrability," << csv_real(ui_value) << ",bound," << csv_real(ui_bound)
          << ",,\n";
        return o.str();
    }
};

inline int worker_cap(int family_size) {
    int cap = family_size;
    if (const char* env = std::getenv("CHNS_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) cap = std::min(cap, v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw > 0) cap = std::min<int>(cap, static_cast<int>(hw));
    return std::max(cap, 1);
}

/// One trajectory per epsilon; grid, dt, and cadence are shared so the
/// differences isolate the regularization.  The common dt comes from the
/// most restrictive member's initial step bound.  Members run in worker
/// threads (capped by CHNS_THREADS); failures mark the member truncated
/// without aborting its siblings.
inline std::vector<Trajectory> run_family(const RunConfig& base,
                                          const std::string& out_dir = "") {
    if (base.eps_list.empty())
        throw SolverError(SolverError::Kind::BadConfig, "run_family: empty eps list");
    RunConfig shared = base;
    shared.T = base.eps_T;

    double dt = shared.dt_fixed;
    if (dt <= 0.0) {
        dt = 1e300;
        for (double eps : base.eps_list) {
            RunConfig cfg = shared;
            cfg.eps = eps;
            Grid g = Grid::unit(cfg.nx, cfg.ny);
            Stepper probe(g, cfg.model(), eps, StepControl::from_config(cfg));
            dt = std::min(dt, 0.8 * probe.cfl_dt(build_initial_state(cfg, g)));
        }
    }

    const int count = static_cast<int>(base.eps_list.size());
    std::vector<Trajectory> out(count);
    std::vector<std::string> errors(count);
    auto worker = [&](int m) {
        RunConfig cfg = shared;
        cfg.eps = base.eps_list[m];
        cfg.dt_fixed = dt;
        std::string dir;
        if (!out_dir.empty()) {
            std::ostringstream d;
            d << out_dir << "/member_" << csv_real(cfg.eps);
            dir = d.str();
        }
        try {
            out[m] = run(cfg, {true, dir});
        } catch (const std::exception& e) {
            out[m].truncated = true;
            out[m].trunc_reason = e.what();
            errors[m] = e.what();
        }
    };

    const int workers = worker_cap(count);
    if (workers <= 1) {
        for (int m = 0; m < count; ++m) worker(m);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int m = w; m < count; m += workers) worker(m);
            });
        for (auto& t : pool) t.join();
    }
    return out;
}

namespace detail {

inline void check_cadence(const std::vector<Trajectory>& trajs) {
    for (std::size_t m = 1; m < trajs.size(); ++m) {
        if (trajs[m].frames.size() != trajs[0].frames.size())
            throw std::invalid_argument("cauchy_table: cadence mismatch across members");
        for (std::size_t k = 0; k < trajs[m].frames.size(); ++k)
            if (trajs[m].frames[k].t != trajs[0].frames[k].t)
                throw std::invalid_argument("cauchy_table: cadence mismatch across members");
    }
}

} // namespace detail

/// max over members of int_0^T int G(n) with G(s) = (s+1) ln((s+1)/(nbar0+1)),
/// read off the recorded series (cumE column).
inline double uniform_integrability(const std::vector<Trajectory>& trajs, double T) {
    double worst = 0.0;
    for (const Trajectory& tr : trajs) {
        double best = 0.0;
        for (const SeriesRow& r : tr.series.rows)
            if (r.t <= T * (1.0 + 1e-12)) best = r.cumE;
        worst = std::max(worst, best);
    }
    return worst;
}

/// Adjacent-pair space-time differences plus the De La Vallee Poussin
/// functional (the time-integrated entropy) against its bound.
inline CauchyTable cauchy_table(const std::vector<Trajectory>& trajs, double T,
                                double K1 = -1.0) {
    if (trajs.size() < 2) throw std::invalid_argument("cauchy_table: need at least two members");
    detail::check_cadence(trajs);
    const Grid& g = trajs[0].grid;

    CauchyTable table;
    for (std::size_t m = 0; m + 1 < trajs.size(); ++m) {
        const Trajectory& A = trajs[m];
        const Trajectory& B = trajs[m + 1];
        CauchyRow row;
        row.eps_hi = A.config.eps;
        row.eps_lo = B.config.eps;
        // trapezoid in time of the instantaneous spatial norms
        double prev_t = 0.0;
        double prev_l1 = 0.0, prev_c = 0.0, prev_u = 0.0, prev_gc = 0.0;
        long double acc_l1 = 0.0L, acc_c = 0.0L, acc_u = 0.0L, acc_gc = 0.0L;
        for (std::size_t k = 0; k < A.frames.size(); ++k) {
            const Frame& fa = A.frames[k];
            const Frame& fb = B.frames[k];
            if (fa.t > T * (1.0 + 1e-12)) break;
            ScalarField dn = fa.n, dc = fa.c;
            for (std::size_t q = 0; q < dn.data().size(); ++q) {
                dn.data()[q] -= fb.n.data()[q];
                dc.data()[q] -= fb.c.data()[q];
            }
            VectorField du = fa.u;
            for (std::size_t q = 0; q < du.xdata().size(); ++q)
                du.xdata()[q] -= fb.u.xdata()[q];
            for (std::size_t q = 0; q < du.ydata().size(); ++q)
                du.ydata()[q] -= fb.u.ydata()[q];
            const double l1 = norm(dn, NormKind::L1);
            const double c2 = std::pow(norm(dc, NormKind::L2), 2);
            const double u2 = l2sq(du);
            const double gc2 = dirichlet_energy(dc);
            if (k > 0) {
                const double w = 0.5 * (fa.t - prev_t);
                acc_l1 += w * (prev_l1 + l1);
                acc_c += w * (prev_c + c2);
                acc_u += w * (prev_u + u2);
                acc_gc += w * (prev_gc + gc2);
            }
            prev_t = fa.t;
            prev_l1 = l1;
            prev_c = c2;
            prev_u = u2;
            prev_gc = gc2;
        }
        row.l1_n = static_cast<double>(acc_l1);
        row.l2_c = std::sqrt(static_cast<double>(acc_c));
        row.l2_u = std::sqrt(static_cast<double>(acc_u));
        row.l2_grad_c = std::sqrt(static_cast<double>(acc_gc));
        table.rows.push_back(row);
    }

    table.ui_value = uniform_integrability(trajs, T);
    if (K1 >= 0.0) {
        RunConfig cfg0 = trajs[0].config;
        State init = build_initial_state(cfg0, g);
        CheckContext ctx = make_check_context(cfg0, init);
        table.ui_bound =
            (ctx.grad_n_budget_rhs() / (2.0 * M_PI) + K1 * T) * (ctx.mass0 + 1.0);
    }
    return table;
}

} // namespace chns
