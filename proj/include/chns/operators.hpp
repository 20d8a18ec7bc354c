#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chns/grid.hpp"

namespace chns {

/// Midpoint quadrature over the unit square; exact for cellwise-affine data.
/// Fixed left-to-right summation order (long double accumulator) so that
/// conserved quantities are reproducible bit for bit.
inline double integrate(const ScalarField& f) {
    long double acc = 0.0L;
    for (double v : f.data()) acc += v;
    return static_cast<double>(acc) * f.grid().cell_area();
}

/// Mean value; |Omega| = 1 on the unit square.
inline double mean(const ScalarField& f) { return integrate(f); }

/// Centered face gradient with homogeneous Neumann boundary: the normal
/// component on boundary faces is exactly zero.
inline VectorField grad_neumann(const ScalarField& f) {
    const Grid& g = f.grid();
    VectorField d(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            d.ux(i, j) = (f(i, j) - f(i - 1, j)) / g.hx;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            d.uy(i, j) = (f(i, j) - f(i, j - 1)) / g.hy;
    return d;
}

/// Face-to-center divergence, the adjoint of the face gradient.
inline ScalarField divergence(const VectorField& v) {
    const Grid& g = v.grid();
    ScalarField d(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            d(i, j) = (v.ux(i + 1, j) - v.ux(i, j)) / g.hx +
                      (v.uy(i, j + 1) - v.uy(i, j)) / g.hy;
    return d;
}

enum class LapBC { Neumann, Dirichlet0 };

/// 5-point Laplacian with ghost-cell reflection (Neumann) or odd
/// reflection (Dirichlet0).  With Neumann ghosts the row sums telescope,
/// so integrate(laplacian(f)) vanishes to round-off.
inline ScalarField laplacian(const ScalarField& f, LapBC bc) {
    const Grid& g = f.grid();
    ScalarField out(g);
    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = 1.0 / (g.hy * g.hy);
    const double sgn = (bc == LapBC::Neumann) ? 1.0 : -1.0;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double c = f(i, j);
            const double w = (i > 0) ? f(i - 1, j) : sgn * c;
            const double e = (i < g.nx - 1) ? f(i + 1, j) : sgn * c;
            const double s = (j > 0) ? f(i, j - 1) : sgn * c;
            const double n = (j < g.ny - 1) ? f(i, j + 1) : sgn * c;
            out(i, j) = ax * (w - 2.0 * c + e) + ay * (s - 2.0 * c + n);
        }
    }
    return out;
}

enum class NormKind { L1, L2, Linf, H1Semi };

inline double norm(const ScalarField& f, NormKind kind) {
    const double area = f.grid().cell_area();
    switch (kind) {
    case NormKind::L1: {
        long double acc = 0.0L;
        for (double v : f.data()) acc += std::abs(v);
        return static_cast<double>(acc) * area;
    }
    case NormKind::L2: {
        long double acc = 0.0L;
        for (double v : f.data()) acc += static_cast<long double>(v) * v;
        return std::sqrt(static_cast<double>(acc) * area);
    }
    case NormKind::Linf: {
        double m = 0.0;
        for (double v : f.data()) m = std::max(m, std::abs(v));
        return m;
    }
    case NormKind::H1Semi: {
        VectorField d = grad_neumann(f);
        long double acc = 0.0L;
        for (double v : d.xdata()) acc += static_cast<long double>(v) * v;
        for (double v : d.ydata()) acc += static_cast<long double>(v) * v;
        return std::sqrt(static_cast<double>(acc) * area);
    }
    }
    throw std::logic_error("norm: bad kind");
}

/// integral of |grad f|^2 via face quadrature (square of the H1 seminorm).
inline double dirichlet_energy(const ScalarField& f) {
    const double s = norm(f, NormKind::H1Semi);
    return s * s;
}

/// integral of the squared face values of a vector field (MAC quadrature).
inline double l2sq(const VectorField& v) {
    long double acc = 0.0L;
    for (double x : v.xdata()) acc += static_cast<long double>(x) * x;
    for (double x : v.ydata()) acc += static_cast<long double>(x) * x;
    return static_cast<double>(acc) * v.grid().cell_area();
}

/// integral of |grad u|^2 for a face field with no-slip walls.  Diagonal
/// derivatives are sampled at cell centers, cross derivatives at nodes
/// with odd wall reflection; all samples carry full cell weight, which
/// overstates the wall rows slightly (conservative for energy budgets).
inline double grad_sq(const VectorField& u) {
    const Grid& g = u.grid();
    long double acc = 0.0L;
    // d(ux)/dx at centers, d(uy)/dy at centers
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double a = (u.ux(i + 1, j) - u.ux(i, j)) / g.hx;
            const double b = (u.uy(i, j + 1) - u.uy(i, j)) / g.hy;
            acc += static_cast<long double>(a) * a + static_cast<long double>(b) * b;
        }
    // d(ux)/dy at nodes (i=0..nx, j=0..ny); wall rows use ghost -ux
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const double lo = (j > 0) ? u.ux(i, j - 1) : -u.ux(i, 0);
            const double hi = (j < g.ny) ? u.ux(i, j) : -u.ux(i, g.ny - 1);
            const double a = (hi - lo) / g.hy;
            acc += static_cast<long double>(a) * a;
        }
    // d(uy)/dx at nodes
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const double lo = (i > 0) ? u.uy(i - 1, j) : -u.uy(0, j);
            const double hi = (i < g.nx) ? u.uy(i, j) : -u.uy(g.nx - 1, j);
            const double a = (hi - lo) / g.hx;
            acc += static_cast<long double>(a) * a;
        }
    return static_cast<double>(acc) * g.cell_area();
}

/// integral of |grad psi|^2 / psi_face^2 with psi_face the arithmetic face
/// average; realizes the weighted dissipation of a positive field.
inline double weighted_grad_sq(const ScalarField& psi) {
    const Grid& g = psi.grid();
    long double acc = 0.0L;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const double d = (psi(i, j) - psi(i - 1, j)) / g.hx;
            const double m = 0.5 * (psi(i, j) + psi(i - 1, j));
            acc += static_cast<long double>(d / m) * (d / m);
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double d = (psi(i, j) - psi(i, j - 1)) / g.hy;
            const double m = 0.5 * (psi(i, j) + psi(i, j - 1));
            acc += static_cast<long double>(d / m) * (d / m);
        }
    return static_cast<double>(acc) * g.cell_area();
}

/// integral of psi * ln(psi / mean(psi)) for strictly positive psi.
inline double relative_entropy(const ScalarField& psi) {
    const double pbar = mean(psi);
    long double acc = 0.0L;
    for (double v : psi.data()) {
        if (v <= 0.0)
            throw std::invalid_argument("relative_entropy: psi must be positive");
        acc += static_cast<long double>(v) * std::log(v / pbar);
    }
    return static_cast<double>(acc) * psi.grid().cell_area();
}

} // namespace chns
