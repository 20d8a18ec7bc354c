#pragma once

#include <cmath>

#include "chns/config.hpp"
#include "chns/grid.hpp"
#include "chns/model.hpp"
#include "chns/operators.hpp"

namespace chns {

/// Simulation state: cell density n, attractant c, velocity u (no-slip),
/// pressure multiplier P (mean zero), and the clock.
struct State {
    double t = 0.0;
    ScalarField n, c, P;
    VectorField u;
};

/// Velocity from a node-sampled stream function; discretely divergence
/// free by construction (the face differences telescope per cell).
template <class F>
VectorField velocity_from_stream(Grid g, F&& stream) {
    VectorField u(g, true);
    std::vector<double> node(static_cast<std::size_t>(g.nx + 1) * (g.ny + 1));
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
            node[static_cast<std::size_t>(j) * (g.nx + 1) + i] = stream(g.xf(i), g.yf(j));
    auto nd = [&](int i, int j) { return node[static_cast<std::size_t>(j) * (g.nx + 1) + i]; };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
            u.ux(i, j) = (nd(i, j + 1) - nd(i, j)) / g.hy;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            u.uy(i, j) = -(nd(i + 1, j) - nd(i, j)) / g.hx;
    u.zero_boundary_faces();
    return u;
}

inline State build_initial_state(const RunConfig& cfg, Grid g) {
    State s;
    s.t = 0.0;
    switch (cfg.n0_choice) {
    case N0Choice::Cosine:
        s.n = ScalarField::sample(g, [](double x, double y) {
            return 1.0 + 0.5 * std::cos(M_PI * x) * std::cos(M_PI * y);
        });
        break;
    case N0Choice::Uniform:
        s.n = ScalarField(g, 1.0);
        break;
    }
    switch (cfg.c0_choice) {
    case C0Choice::Ramp:
        s.c = ScalarField::sample(g, [](double, double y) { return 0.25 * (1.0 + y); });
        break;
    case C0Choice::Cosine:
        s.c = ScalarField::sample(g, [](double x, double) { return 1.0 + std::cos(M_PI * x); });
        break;
    case C0Choice::Zero:
        s.c = ScalarField(g, 0.0);
        break;
    }
    switch (cfg.u0_choice) {
    case U0Choice::Zero:
        s.u = VectorField(g, true);
        break;
    case U0Choice::Vortex: {
        const double amp = cfg.u0_amp;
        s.u = velocity_from_stream(g, [amp](double x, double y) {
            const double sx = std::sin(M_PI * x), sy = std::sin(M_PI * y);
            return amp * sx * sx * sy * sy;
        });
        break;
    }
    }
    s.P = ScalarField(g, 0.0);
    return s;
}

} // namespace chns
