#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "chns/grid.hpp"
#include "chns/operators.hpp"

namespace chns {

struct SolveStats {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

class SolverError : public std::runtime_error {
public:
    enum class Kind { PoissonNotConverged, TimestepTooLarge, BadConfig };
    SolverError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < a.size(); ++k)
        acc += static_cast<long double>(a[k]) * b[k];
    return static_cast<double>(acc);
}

inline void remove_mean(std::vector<double>& v) {
    long double acc = 0.0L;
    for (double x : v) acc += x;
    const double m = static_cast<double>(acc) / v.size();
    for (double& x : v) x -= m;
}

/// y = (sigma*I - Delta_N) x on cell data (Neumann ghosts).
inline void apply_helmholtz_neumann(const Grid& g, double sigma,
                                    const std::vector<double>& x,
                                    std::vector<double>& y) {
    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = 1.0 / (g.hy * g.hy);
    const int nx = g.nx, ny = g.ny;
    for (int j = 0; j < ny; ++j) {
        const int row = j * nx;
        for (int i = 0; i < nx; ++i) {
            const double c = x[row + i];
            const double w = (i > 0) ? x[row + i - 1] : c;
            const double e = (i < nx - 1) ? x[row + i + 1] : c;
            const double s = (j > 0) ? x[row + i - nx] : c;
            const double n = (j < ny - 1) ? x[row + i + nx] : c;
            y[row + i] = sigma * c - (ax * (w - 2.0 * c + e) + ay * (s - 2.0 * c + n));
        }
    }
}

template <class Apply>
SolveStats cg(const Apply& apply, const std::vector<double>& b, std::vector<double>& x,
              double tol, int max_iter, bool project_mean) {
    const std::size_t n = b.size();
    std::vector<double> r(n), p(n), ap(n);
    std::vector<double> b2 = b;
    if (project_mean) remove_mean(b2);
    const double bnorm = std::sqrt(dot(b2, b2));
    SolveStats stats;
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        stats.converged = true;
        return stats;
    }
    if (project_mean) remove_mean(x);
    apply(x, ap);
    for (std::size_t k = 0; k < n; ++k) r[k] = b2[k] - ap[k];
    if (project_mean) remove_mean(r);
    double rr = dot(r, r);
    if (std::sqrt(rr) <= tol * bnorm) {
        stats.converged = true;
        stats.rel_residual = std::sqrt(rr) / bnorm;
        return stats;
    }
    p = r;
    for (int it = 1; it <= max_iter; ++it) {
        apply(p, ap);
        const double pap = dot(p, ap);
        if (pap <= 0.0) break; // operator is SPSD; numerical breakdown
        const double alpha = rr / pap;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if (project_mean && (it % 16 == 0)) {
            remove_mean(x);
            remove_mean(r);
        }
        const double rr_new = dot(r, r);
        stats.iterations = it;
        stats.rel_residual = std::sqrt(rr_new) / bnorm;
        if (stats.rel_residual <= tol) {
            stats.converged = true;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    }
    if (project_mean) remove_mean(x);
    return stats;
}

} // namespace detail

/// Solve -Delta_N P = b (cell-centered, homogeneous Neumann, mean-zero
/// gauge).  b is projected onto the compatible subspace; P keeps zero mean.
inline SolveStats poisson_neumann(const Grid& g, const std::vector<double>& b,
                                  std::vector<double>& p, double tol, int max_iter) {
    auto apply = [&g](const std::vector<double>& x, std::vector<double>& y) {
        detail::apply_helmholtz_neumann(g, 0.0, x, y);
    };
    return detail::cg(apply, b, p, tol, max_iter, /*project_mean=*/true);
}

/// Solve (I - gamma * Delta_N) x = b on cell data.
inline SolveStats helmholtz_neumann(const Grid& g, double gamma,
                                    const std::vector<double>& b, std::vector<double>& x,
                                    double tol, int max_iter) {
    auto apply = [&g, gamma](const std::vector<double>& v, std::vector<double>& y) {
        detail::apply_helmholtz_neumann(g, 1.0 / gamma, v, y);
        for (double& t : y) t *= gamma;
    };
    return detail::cg(apply, b, x, tol, max_iter, /*project_mean=*/false);
}

namespace detail {

/// Laplacian of the x-velocity face array: Dirichlet-0 at the boundary
/// faces i=0,nx (not unknowns), odd reflection across the walls j=0,ny.
/// x is indexed like VectorField::ux with boundary columns present but
/// fixed to zero.
inline void apply_helmholtz_ux(const Grid& g, double gamma,
                               const std::vector<double>& x, std::vector<double>& y) {
    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = 1.0 / (g.hy * g.hy);
    const int nx = g.nx, ny = g.ny, stride = g.nx + 1;
    for (int j = 0; j < ny; ++j) {
        y[j * stride + 0] = 0.0;
        y[j * stride + nx] = 0.0;
        for (int i = 1; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * stride + i;
            const double c = x[k];
            const double w = x[k - 1];
            const double e = x[k + 1];
            const double s = (j > 0) ? x[k - stride] : -c;
            const double n = (j < ny - 1) ? x[k + stride] : -c;
            y[k] = c - gamma * (ax * (w - 2.0 * c + e) + ay * (s - 2.0 * c + n));
        }
    }
}

inline void apply_helmholtz_uy(const Grid& g, double gamma,
                               const std::vector<double>& x, std::vector<double>& y) {
    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = 1.0 / (g.hy * g.hy);
    const int nx = g.nx, ny = g.ny;
    for (int i = 0; i < nx; ++i) {
        y[i] = 0.0;
        y[static_cast<std::size_t>(ny) * nx + i] = 0.0;
    }
    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            const double c = x[k];
            const double w = (i > 0) ? x[k - 1] : -c;
            const double e = (i < nx - 1) ? x[k + 1] : -c;
            const double s = x[k - nx];
            const double n = x[k + nx];
            y[k] = c - gamma * (ax * (w - 2.0 * c + e) + ay * (s - 2.0 * c + n));
        }
    }
}

} // namespace detail

/// (I - gamma * Delta) solves for the two staggered velocity components
/// with no-slip walls.  Right-hand sides must be zero on boundary faces.
inline SolveStats helmholtz_ux(const Grid& g, double gamma, const std::vector<double>& b,
                               std::vector<double>& x, double tol, int max_iter) {
    auto apply = [&g, gamma](const std::vector<double>& v, std::vector<double>& y) {
        detail::apply_helmholtz_ux(g, gamma, v, y);
    };
    return detail::cg(apply, b, x, tol, max_iter, false);
}

inline SolveStats helmholtz_uy(const Grid& g, double gamma, const std::vector<double>& b,
                               std::vector<double>& x, double tol, int max_iter) {
    auto apply = [&g, gamma](const std::vector<double>& v, std::vector<double>& y) {
        detail::apply_helmholtz_uy(g, gamma, v, y);
    };
    return detail::cg(apply, b, x, tol, max_iter, false);
}

} // namespace chns
