#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "chns/config.hpp"
#include "chns/diagnostics.hpp"
#include "chns/fields_io.hpp"
#include "chns/initial.hpp"
#include "chns/linsolve.hpp"
#include "chns/model.hpp"
#include "chns/operators.hpp"

namespace chns {

struct StepControl {
    double dt = 0.01;  // hard cap
    double cfl = 0.45; // Courant number, <= 0.5
    double diffusion_theta = 0.5;
    double poisson_tol = 1e-11;
    int poisson_max_iter = 20000;
    double dt_fixed = 0.0; // > 0 forces a constant step

    static StepControl from_config(const RunConfig& c) {
        StepControl s;
        s.dt = c.dt_cap;
        s.cfl = c.cfl;
        s.diffusion_theta = c.diffusion_theta;
        s.poisson_tol = c.poisson_tol;
        s.poisson_max_iter = c.poisson_max_iter;
        s.dt_fixed = c.dt_fixed;
        return s;
    }
};

namespace detail {

inline double minmod(double a, double b) {
    if (a > 0.0 && b > 0.0) return std::min(a, b);
    if (a < 0.0 && b < 0.0) return std::max(a, b);
    return 0.0;
}

/// Laplacian of staggered components, matching the Helmholtz operators.
inline void lap_ux(const Grid& g, const std::vector<double>& x, std::vector<double>& y) {
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    const int nx = g.nx, ny = g.ny, stride = g.nx + 1;
    for (int j = 0; j < ny; ++j) {
        y[static_cast<std::size_t>(j) * stride] = 0.0;
        y[static_cast<std::size_t>(j) * stride + nx] = 0.0;
        for (int i = 1; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * stride + i;
            const double c = x[k];
            const double s = (j > 0) ? x[k - stride] : -c;
            const double n = (j < ny - 1) ? x[k + stride] : -c;
            y[k] = ax * (x[k - 1] - 2.0 * c + x[k + 1]) + ay * (s - 2.0 * c + n);
        }
    }
}

inline void lap_uy(const Grid& g, const std::vector<double>& x, std::vector<double>& y) {
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    const int nx = g.nx, ny = g.ny;
    for (int i = 0; i < nx; ++i) {
        y[i] = 0.0;
        y[static_cast<std::size_t>(ny) * nx + i] = 0.0;
    }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            const double c = x[k];
            const double w = (i > 0) ? x[k - 1] : -c;
            const double e = (i < nx - 1) ? x[k + 1] : -c;
            y[k] = ax * (w - 2.0 * c + e) + ay * (x[k - nx] - 2.0 * c + x[k + nx]);
        }
}

} // namespace detail

/// Chemotactic face velocity S_eps(x, n, c) grad c.  rho_faces, when
/// given, carries the spatial cutoff pre-sampled on both face families.
inline VectorField chemotactic_velocity(const Model& model, double eps, const ScalarField& n,
                                        const ScalarField& c,
                                        const VectorField* rho_faces = nullptr) {
    const Grid& g = n.grid();
    VectorField s(g);
    VectorField gc = grad_neumann(c);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const Point p{g.xf(i), g.yc(j)};
            const double rho = rho_faces ? rho_faces->ux(i, j) : Model::rho_eps(eps, p);
            if (rho == 0.0) continue;
            const double nf = 0.5 * (n(i - 1, j) + n(i, j));
            const double cf = 0.5 * (c(i - 1, j) + c(i, j));
            const double gx = gc.ux(i, j);
            const double gy = 0.25 * (gc.uy(i - 1, j) + gc.uy(i - 1, j + 1) + gc.uy(i, j) +
                                      gc.uy(i, j + 1));
            const double w = rho * Model::chi_eps(eps, nf);
            const double a = w * model.a_coef(p, nf, cf);
            const double b = w * model.b_coef(p, nf, cf);
            s.ux(i, j) = a * gx - b * gy;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Point p{g.xc(i), g.yf(j)};
            const double rho = rho_faces ? rho_faces->uy(i, j) : Model::rho_eps(eps, p);
            if (rho == 0.0) continue;
            const double nf = 0.5 * (n(i, j - 1) + n(i, j));
            const double cf = 0.5 * (c(i, j - 1) + c(i, j));
            const double gy = gc.uy(i, j);
            const double gx = 0.25 * (gc.ux(i, j - 1) + gc.ux(i + 1, j - 1) + gc.ux(i, j) +
                                      gc.ux(i + 1, j));
            const double w = rho * Model::chi_eps(eps, nf);
            const double a = w * model.a_coef(p, nf, cf);
            const double b = w * model.b_coef(p, nf, cf);
            s.uy(i, j) = b * gx + a * gy;
        }
    return s;
}

/// One time integrator bound to a grid, a parameter set, and one value of
/// the regularization parameter.  Lie splitting: fluid step, then
/// attractant transport, then cell transport; each sub-step keeps its own
/// structural invariant (discrete incompressibility, the max principle,
/// mass) exactly.
class Stepper {
public:
    Stepper(Grid g, Model model, double eps, StepControl ctl)
        : g_(g), model_(std::move(model)), eps_(eps), ctl_(ctl), rho_faces_(g), grad_phi_(g) {
        if (!(eps > 0.0 && eps < 1.0))
            throw SolverError(SolverError::Kind::BadConfig, "eps must lie in (0,1)");
        if (!(ctl.cfl > 0.0 && ctl.cfl <= 0.5))
            throw SolverError(SolverError::Kind::BadConfig, "cfl must lie in (0, 0.5]");
        // the spatial cutoff and the potential gradient are static fields
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i)
                rho_faces_.ux(i, j) = Model::rho_eps(eps, {g.xf(i), g.yc(j)});
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                rho_faces_.uy(i, j) = Model::rho_eps(eps, {g.xc(i), g.yf(j)});
        grad_phi_ = model_.potential.sample_grad(g);
    }

    const Grid& grid() const { return g_; }
    const Model& model() const { return model_; }
    double eps() const { return eps_; }
    const StepControl& control() const { return ctl_; }

    VectorField chem_velocity(const ScalarField& n, const ScalarField& c) const {
        return chemotactic_velocity(model_, eps_, n, c, &rho_faces_);
    }

    /// Step size from the advection, chemotaxis, and explicit-diffusion
    /// constraints; capped by ctl.dt.
    double cfl_dt(const State& s) const {
        const double h = std::min(g_.hx, g_.hy);
        double dt = std::numeric_limits<double>::infinity();
        const double umax = s.u.max_abs();
        if (umax > 0.0) dt = std::min(dt, h / umax);
        const double smax = chem_velocity(s.n, s.c).max_abs();
        if (smax > 0.0) dt = std::min(dt, h / smax);
        const double deff = 1.0 - ctl_.diffusion_theta;
        if (deff > 0.0) dt = std::min(dt, h * h / (4.0 * deff));
        dt *= ctl_.cfl;
        return std::min(dt, ctl_.dt);
    }

    /// Conservative transport of n: upwind/minmod chemotaxis + advection
    /// fluxes, theta-weighted diffusion.  Every contribution is applied as
    /// a face-flux difference, so the total mass telescopes to round-off.
    ScalarField transport_n(const ScalarField& n, const ScalarField& c, const VectorField& u,
                            double dt) {
        const double theta = ctl_.diffusion_theta;
        const double mass_before = integrate(n);

        VectorField w = chem_velocity(n, c);
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 1; i < g_.nx; ++i) w.ux(i, j) += u.ux(i, j);
        for (int j = 1; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) w.uy(i, j) += u.uy(i, j);

        // explicit fluxes: advective (MUSCL upwind) + (1-theta) diffusive
        VectorField flux(g_);
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 1; i < g_.nx; ++i) {
                const double v = w.ux(i, j);
                double q;
                if (v >= 0.0) {
                    const double dm = (i >= 2) ? n(i - 1, j) - n(i - 2, j) : 0.0;
                    q = n(i - 1, j) + 0.5 * detail::minmod(dm, n(i, j) - n(i - 1, j));
                } else {
                    const double dp = (i + 1 < g_.nx) ? n(i + 1, j) - n(i, j) : 0.0;
                    q = n(i, j) - 0.5 * detail::minmod(n(i, j) - n(i - 1, j), dp);
                }
                flux.ux(i, j) = v * q - (1.0 - theta) * (n(i, j) - n(i - 1, j)) / g_.hx;
            }
        for (int j = 1; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) {
                const double v = w.uy(i, j);
                double q;
                if (v >= 0.0) {
                    const double dm = (j >= 2) ? n(i, j - 1) - n(i, j - 2) : 0.0;
                    q = n(i, j - 1) + 0.5 * detail::minmod(dm, n(i, j) - n(i, j - 1));
                } else {
                    const double dp = (j + 1 < g_.ny) ? n(i, j + 1) - n(i, j) : 0.0;
                    q = n(i, j) - 0.5 * detail::minmod(n(i, j) - n(i, j - 1), dp);
                }
                flux.uy(i, j) = v * q - (1.0 - theta) * (n(i, j) - n(i, j - 1)) / g_.hy;
            }

        ScalarField rhs(g_);
        {
            ScalarField dv = divergence(flux);
            for (int j = 0; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i) rhs(i, j) = n(i, j) - dt * dv(i, j);
        }
        double rhs_min = rhs.data()[0];
        for (double v : rhs.data()) rhs_min = std::min(rhs_min, v);
        const double scale = std::max(1.0, norm(n, NormKind::Linf));
        if (rhs_min < -1e-12 * scale)
            throw SolverError(SolverError::Kind::TimestepTooLarge,
                              "transport_n: explicit update lost nonnegativity");

        ScalarField out(g_);
        if (theta > 0.0) {
            std::vector<double> star = rhs.data();
            SolveStats st =
                helmholtz_neumann(g_, theta * dt, rhs.data(), star, 1e-13, ctl_.poisson_max_iter);
            if (!st.converged)
                throw SolverError(SolverError::Kind::PoissonNotConverged,
                                  "transport_n: diffusion solve stalled");
            // recompose as flux differences of the solved field: keeps the
            // update telescoping no matter the linear-solver residual
            ScalarField starf(g_);
            starf.data() = std::move(star);
            VectorField gs = grad_neumann(starf);
            for (int j = 0; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i) {
                    const double dif = (gs.ux(i + 1, j) - gs.ux(i, j)) / g_.hx +
                                       (gs.uy(i, j + 1) - gs.uy(i, j)) / g_.hy;
                    out(i, j) = rhs(i, j) + theta * dt * dif;
                }
        } else {
            out = rhs;
        }

        // clamp solver-residual-sized undershoots and rebalance the mass
        double out_min = out.data()[0];
        for (double v : out.data()) out_min = std::min(out_min, v);
        if (out_min < 0.0) {
            if (out_min < -1e-11 * scale)
                throw SolverError(SolverError::Kind::TimestepTooLarge,
                                  "transport_n: nonnegativity lost beyond solver tolerance");
            for (double& v : out.data()) v = std::max(v, 0.0);
            const double m = integrate(out);
            if (m > 0.0) {
                const double f = mass_before / m;
                if (std::abs(f - 1.0) > 1e-10)
                    throw SolverError(SolverError::Kind::TimestepTooLarge,
                                      "transport_n: clamping changed the mass");
                for (double& v : out.data()) v *= f;
            }
        }
        return out;
    }

    /// Transport of c: advective-form upwinding (max principle holds for
    /// any discrete divergence), theta diffusion, then the positivity-
    /// preserving consumption map c -> c / (1 + dt n f(c)/c).
    ScalarField transport_c(const ScalarField& c, const ScalarField& n, const VectorField& u,
                            double dt) {
        const double theta = ctl_.diffusion_theta;
        const double cmax_before = norm(c, NormKind::Linf);

        ScalarField rhs(g_);
        {
            // conservative upwind flux minus c * div(u) (advective form)
            VectorField flux(g_);
            for (int j = 0; j < g_.ny; ++j)
                for (int i = 1; i < g_.nx; ++i) {
                    const double v = u.ux(i, j);
                    flux.ux(i, j) = v * ((v >= 0.0) ? c(i - 1, j) : c(i, j)) -
                                    (1.0 - theta) * (c(i, j) - c(i - 1, j)) / g_.hx;
                }
            for (int j = 1; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i) {
                    const double v = u.uy(i, j);
                    flux.uy(i, j) = v * ((v >= 0.0) ? c(i, j - 1) : c(i, j)) -
                                    (1.0 - theta) * (c(i, j) - c(i, j - 1)) / g_.hy;
                }
            ScalarField dv = divergence(flux);
            ScalarField du = divergence(u);
            for (int j = 0; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i)
                    rhs(i, j) = c(i, j) - dt * (dv(i, j) - c(i, j) * du(i, j));
        }

        ScalarField mid(g_);
        if (theta > 0.0) {
            std::vector<double> star = rhs.data();
            SolveStats st =
                helmholtz_neumann(g_, theta * dt, rhs.data(), star, 1e-13, ctl_.poisson_max_iter);
            if (!st.converged)
                throw SolverError(SolverError::Kind::PoissonNotConverged,
                                  "transport_c: diffusion solve stalled");
            mid.data() = std::move(star);
        } else {
            mid = rhs;
        }

        const double slack = 1e-12 * std::max(1.0, cmax_before) + 1e-14;
        double cmax = 0.0, cmin = 0.0;
        for (double v : mid.data()) {
            cmax = std::max(cmax, v);
            cmin = std::min(cmin, v);
        }
        if (cmax > cmax_before + slack || cmin < -slack)
            throw SolverError(SolverError::Kind::TimestepTooLarge,
                              "transport_c: max principle violated");

        ScalarField out(g_);
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) {
                const double cv = std::max(mid(i, j), 0.0);
                out(i, j) = cv / (1.0 + dt * n(i, j) * model_.f_over_c(cv));
            }
        return out;
    }

    /// Projection step for the fluid: semi-implicit diffusion, centered
    /// convection, buoyancy n grad(phi); the pressure solve enforces
    /// max |div u| below the projection tolerance.  P is warm-started and
    /// returned with zero mean.
    VectorField ns_step(const VectorField& u, const ScalarField& n, double dt, ScalarField& P) {
        const double theta = ctl_.diffusion_theta;
        VectorField star(g_, true);

        std::vector<double> lapx(u.xdata().size()), lapy(u.ydata().size());
        detail::lap_ux(g_, u.xdata(), lapx);
        detail::lap_uy(g_, u.ydata(), lapy);

        // x-faces
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 1; i < g_.nx; ++i) {
                const double ue = 0.5 * (u.ux(i, j) + u.ux(i + 1, j));
                const double uw = 0.5 * (u.ux(i - 1, j) + u.ux(i, j));
                double conv = (ue * ue - uw * uw) / g_.hx;
                const double vn = 0.5 * (u.uy(i - 1, j + 1) + u.uy(i, j + 1));
                const double vs = 0.5 * (u.uy(i - 1, j) + u.uy(i, j));
                const double uxn = (j + 1 < g_.ny) ? 0.5 * (u.ux(i, j) + u.ux(i, j + 1)) : 0.0;
                const double uxs = (j > 0) ? 0.5 * (u.ux(i, j - 1) + u.ux(i, j)) : 0.0;
                conv += (vn * uxn - vs * uxs) / g_.hy;
                star.ux(i, j) =
                    u.ux(i, j) +
                    dt * ((1.0 - theta) * lapx[static_cast<std::size_t>(j) * (g_.nx + 1) + i] -
                          conv);
            }
        // y-faces
        for (int j = 1; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) {
                const double vn = 0.5 * (u.uy(i, j) + u.uy(i, j + 1));
                const double vs = 0.5 * (u.uy(i, j - 1) + u.uy(i, j));
                double conv = (vn * vn - vs * vs) / g_.hy;
                const double ue = 0.5 * (u.ux(i + 1, j - 1) + u.ux(i + 1, j));
                const double uw = 0.5 * (u.ux(i, j - 1) + u.ux(i, j));
                const double uye = (i + 1 < g_.nx) ? 0.5 * (u.uy(i, j) + u.uy(i + 1, j)) : 0.0;
                const double uyw = (i > 0) ? 0.5 * (u.uy(i - 1, j) + u.uy(i, j)) : 0.0;
                conv += (ue * uye - uw * uyw) / g_.hx;
                star.uy(i, j) =
                    u.uy(i, j) +
                    dt * ((1.0 - theta) * lapy[static_cast<std::size_t>(j) * g_.nx + i] - conv);
            }

        if (theta > 0.0) {
            std::vector<double> sx = star.xdata();
            SolveStats st = helmholtz_ux(g_, theta * dt, star.xdata(), sx, 1e-13,
                                         ctl_.poisson_max_iter);
            if (!st.converged)
                throw SolverError(SolverError::Kind::PoissonNotConverged,
                                  "ns_step: ux viscosity solve stalled");
            star.xdata() = std::move(sx);
            std::vector<double> sy = star.ydata();
            st = helmholtz_uy(g_, theta * dt, star.ydata(), sy, 1e-13, ctl_.poisson_max_iter);
            if (!st.converged)
                throw SolverError(SolverError::Kind::PoissonNotConverged,
                                  "ns_step: uy viscosity solve stalled");
            star.ydata() = std::move(sy);
        }

        // buoyancy enters after the viscous solve: a force that is a
        // discrete gradient (hydrostatic balance) is then removed exactly
        // by the projection
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 1; i < g_.nx; ++i)
                star.ux(i, j) += dt * 0.5 * (n(i - 1, j) + n(i, j)) * grad_phi_.ux(i, j);
        for (int j = 1; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i)
                star.uy(i, j) += dt * 0.5 * (n(i, j - 1) + n(i, j)) * grad_phi_.uy(i, j);

        // pressure: Delta_N P = div(u*)/dt, mean-zero gauge
        ScalarField dv = divergence(star);
        std::vector<double> b(dv.data().size());
        for (std::size_t k = 0; k < b.size(); ++k) b[k] = -dv.data()[k] / dt;
        SolveStats st = poisson_neumann(g_, b, P.data(), ctl_.poisson_tol, ctl_.poisson_max_iter);
        if (!st.converged)
            throw SolverError(SolverError::Kind::PoissonNotConverged,
                              "ns_step: pressure solve exceeded poisson_max_iter");

        VectorField out(g_, true);
        ScalarField pf(g_);
        pf.data() = P.data();
        VectorField gp = grad_neumann(pf);
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 1; i < g_.nx; ++i) out.ux(i, j) = star.ux(i, j) - dt * gp.ux(i, j);
        for (int j = 1; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) out.uy(i, j) = star.uy(i, j) - dt * gp.uy(i, j);
        return out;
    }

    /// One Lie splitting step: fluid, attractant, cells; t advances by dt.
    State advance(const State& s, double dt) {
        State next;
        next.t = s.t + dt;
        next.P = s.P;
        next.u = ns_step(s.u, s.n, dt, next.P);
        next.c = transport_c(s.c, s.n, next.u, dt);
        next.n = transport_n(s.n, next.c, next.u, dt);
        return next;
    }

    State advance(const State& s) { return advance(s, step_size(s)); }

    double step_size(const State& s) const {
        return (ctl_.dt_fixed > 0.0) ? ctl_.dt_fixed : cfl_dt(s);
    }

private:
    Grid g_;
    Model model_;
    double eps_;
    StepControl ctl_;
    VectorField rho_faces_; // spatial cutoff sampled on both face families
    VectorField grad_phi_;
};

// ---------------------------------------------------------------------------
// trajectory container and run driver

struct Frame {
    double t = 0.0;
    ScalarField n, c, P;
    VectorField u;
};

struct Trajectory {
    Grid grid;
    RunConfig config;
    FunctionalSeries series;
    std::vector<Frame> frames;
    bool truncated = false;
    std::string trunc_reason;

    double t_end() const { return frames.empty() ? 0.0 : frames.back().t; }
};

struct RunOptions {
    bool keep_frames = true;
    std::string out_dir; // empty: no files written
};

inline CheckContext make_check_context(const RunConfig& cfg, const State& init) {
    CheckContext ctx;
    Model m = cfg.model();
    ctx.mass0 = integrate(init.n);
    ctx.c0_linf = norm(init.c, NormKind::Linf);
    ctx.c0_l2sq = std::pow(norm(init.c, NormKind::L2), 2);
    ctx.u0_l2sq = l2sq(init.u);
    ctx.S0_at_c0max = m.S0(ctx.c0_linf);
    ctx.grad_phi_inf = m.potential.grad_inf_norm();
    ctx.hess_phi_inf = m.potential.hessian_inf_norm();
    ctx.slack = cfg.report_slack ? 1.1 : 1.0;
    return ctx;
}

namespace detail {

class TrajectoryWriter {
public:
    TrajectoryWriter(const std::string& dir, const RunConfig& cfg) : dir_(dir) {
        if (dir_.empty()) return;
        std::filesystem::create_directories(dir_);
        std::istringstream cfgtext(serialize_config(cfg));
        std::string line;
        manifest_ << "CHNS-TRAJ 1\n";
        while (std::getline(cfgtext, line)) manifest_ << "config " << line << "\n";
    }

    void add_frame(const Grid& g, const State& s) {
        if (dir_.empty()) return;
        char tag[32];
        std::snprintf(tag, sizeof tag, "%06d", count_);
        const std::string base = "snap_" + std::string(tag);
        write_snapshot(dir_ + "/" + base + "_n.bin", "n", g, s.n.data(), s.t);
        write_snapshot(dir_ + "/" + base + "_c.bin", "c", g, s.c.data(), s.t);
        write_snapshot(dir_ + "/" + base + "_u1.bin", "u1", g, s.u.xdata(), s.t);
        write_snapshot(dir_ + "/" + base + "_u2.bin", "u2", g, s.u.ydata(), s.t);
        write_snapshot(dir_ + "/" + base + "_p.bin", "P", g, s.P.data(), s.t);
        manifest_ << "frame " << csv_real(s.t) << ' ' << base << "_n.bin " << base << "_c.bin "
                  << base << "_u1.bin " << base << "_u2.bin " << base << "_p.bin\n";
        ++count_;
    }

    void finish(const FunctionalSeries& series, bool truncated, const std::string& reason) {
        if (dir_.empty()) return;
        manifest_ << (truncated ? "status truncated " + reason : "status complete") << "\n";
        write_text_file(dir_ + "/manifest.txt", manifest_.str());
        write_text_file(dir_ + "/diagnostics.csv", series.to_csv());
    }

private:
    std::string dir_;
    std::ostringstream manifest_;
    int count_ = 0;
};

} // namespace detail

/// Integrate from t = 0 to cfg.T, recording diagnostics every diag_every
/// steps and snapshots every snapshot_every steps (both always include the
/// initial and final states).  Deterministic for a fixed configuration.
inline Trajectory run(const RunConfig& cfg, const RunOptions& opt = {}) {
    Grid g = Grid::unit(cfg.nx, cfg.ny);
    Stepper stepper(g, cfg.model(), cfg.eps, StepControl::from_config(cfg));
    State s = build_initial_state(cfg, g);

    Trajectory traj;
    traj.grid = g;
    traj.config = cfg;
    detail::TrajectoryWriter writer(opt.out_dir, cfg);

    auto emit_snapshot = [&](const State& st) {
        if (opt.keep_frames) traj.frames.push_back({st.t, st.n, st.c, st.P, st.u});
        writer.add_frame(g, st);
    };

    record(s, traj.series);
    emit_snapshot(s);

    const double T = cfg.T;
    long step = 0;
    const long max_steps = 200000000L;
    try {
        while (s.t < T - 1e-14) {
            double dt = stepper.step_size(s);
            if (s.t + dt > T) dt = T - s.t;
            s = stepper.advance(s, dt);
            ++step;
            const bool last = s.t >= T - 1e-14;
            if (step % cfg.diag_every == 0 || last) record(s, traj.series);
            if (step % cfg.snapshot_every == 0 || last) emit_snapshot(s);
            if (step > max_steps)
                throw SolverError(SolverError::Kind::TimestepTooLarge,
                                  "run: step budget exhausted");
        }
    } catch (const SolverError& e) {
        traj.truncated = true;
        traj.trunc_reason = e.what();
        writer.finish(traj.series, true, e.what());
        throw;
    }
    writer.finish(traj.series, false, "");
    return traj;
}

/// Reload a trajectory written by run().  Frames carry the fields; the
/// embedded config echo restores the model parameters.
inline Trajectory load_trajectory(const std::string& dir) {
    Trajectory traj;
    std::istringstream in(read_text_file(dir + "/manifest.txt"));
    std::string line;
    std::string cfg_text;
    std::vector<std::vector<std::string>> frame_files;
    std::vector<double> frame_times;
    bool complete = false;
    if (!std::getline(in, line) || line != "CHNS-TRAJ 1")
        throw std::runtime_error("load_trajectory: bad manifest in " + dir);
    while (std::getline(in, line)) {
        if (line.rfind("config ", 0) == 0) {
            cfg_text += line.substr(7) + "\n";
        } else if (line.rfind("frame ", 0) == 0) {
            std::istringstream ls(line.substr(6));
            double t;
            std::vector<std::string> files(5);
            ls >> t >> files[0] >> files[1] >> files[2] >> files[3] >> files[4];
            if (!ls) throw std::runtime_error("load_trajectory: bad frame line");
            frame_times.push_back(t);
            frame_files.push_back(std::move(files));
        } else if (line.rfind("status ", 0) == 0) {
            complete = line == "status complete";
            if (!complete) {
                traj.truncated = true;
                traj.trunc_reason = line.substr(7);
            }
        }
    }
    ConfigResult cr = parse_config(cfg_text);
    if (!cr.ok) throw std::runtime_error("load_trajectory: bad config echo in manifest");
    traj.config = cr.config;
    traj.grid = Grid::unit(cr.config.nx, cr.config.ny);

    for (std::size_t k = 0; k < frame_files.size(); ++k) {
        Frame f;
        f.t = frame_times[k];
        SnapshotHeader hdr;
        ScalarField n(traj.grid), c(traj.grid), P(traj.grid);
        VectorField u(traj.grid, true);
        read_snapshot(dir + "/" + frame_files[k][0], hdr, n.data());
        read_snapshot(dir + "/" + frame_files[k][1], hdr, c.data());
        read_snapshot(dir + "/" + frame_files[k][2], hdr, u.xdata());
        read_snapshot(dir + "/" + frame_files[k][3], hdr, u.ydata());
        read_snapshot(dir + "/" + frame_files[k][4], hdr, P.data());
        f.n = std::move(n);
        f.c = std::move(c);
        f.u = std::move(u);
        f.P = std::move(P);
        traj.frames.push_back(std::move(f));
    }
    return traj;
}

} // namespace chns
