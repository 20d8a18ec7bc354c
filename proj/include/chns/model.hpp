#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "chns/grid.hpp"
#include "chns/operators.hpp"

namespace chns {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;
    double frobenius() const {
        return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22);
    }
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 apply(const Mat2& m, const Vec2& v) {
    return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
}

/// C^inf step built from exp(-1/t): 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

/// Down ramp: 1 on (-inf,1], 0 on [2,inf), monotone C^inf in between.
inline double ramp_eta(double s) { return smooth_step(2.0 - s); }

/// Up ramp: 0 on (-inf,1], 1 on [2,inf).
inline double ramp_zeta(double s) { return smooth_step(s - 1.0); }

/// C^inf bump on [0,1), peak value 1 at 0.
inline double bump_w(double s) {
    if (s <= -1.0 || s >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

enum class FChoice { Linear, Zero };
enum class PhiChoice { Gravity, Tilted };

/// Gravitational potential with analytically cached gradient and Hessian
/// sup-norms.  Gravity: phi = -y.  Tilted: phi = -y + 0.1 sin(pi x).
struct Potential {
    PhiChoice choice = PhiChoice::Gravity;

    double value(double x, double y) const {
        switch (choice) {
        case PhiChoice::Gravity: return -y;
        case PhiChoice::Tilted: return -y + 0.1 * std::sin(M_PI * x);
        }
        return 0.0;
    }
    Vec2 grad(double x, double /*y*/) const {
        switch (choice) {
        case PhiChoice::Gravity: return {0.0, -1.0};
        case PhiChoice::Tilted: return {0.1 * M_PI * std::cos(M_PI * x), -1.0};
        }
        return {};
    }
    double grad_inf_norm() const {
        switch (choice) {
        case PhiChoice::Gravity: return 1.0;
        case PhiChoice::Tilted: {
            const double gx = 0.1 * M_PI;
            return std::sqrt(1.0 + gx * gx);
        }
        }
        return 0.0;
    }
    double hessian_inf_norm() const {
        switch (choice) {
        case PhiChoice::Gravity: return 0.0;
        case PhiChoice::Tilted: return 0.1 * M_PI * M_PI;
        }
        return 0.0;
    }

    ScalarField sample_field(Grid g) const {
        return ScalarField::sample(g, [this](double x, double y) { return value(x, y); });
    }
    /// Face samples of the analytic gradient (no no-slip tag).
    VectorField sample_grad(Grid g) const {
        VectorField d(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i)
                d.ux(i, j) = grad(g.xf(i), g.yc(j)).x;
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                d.uy(i, j) = grad(g.xc(i), g.yf(j)).y;
        return d;
    }
};

/// Parameter functions of the transport model: sensitivity tensor
/// S = a I + b J with the rotational part confined to a boundary layer,
/// its nondecreasing envelope S0, the consumption rate f, the potential,
/// and the regularization cutoffs rho_eps (spatial) and chi_eps (density).
struct Model {
    double a0 = 1.0;      // isotropic sensitivity
    double beta0 = 0.5;   // rotational amplitude at the wall
    double delta_b = 0.1; // depth of the rotational boundary layer
    FChoice f_choice = FChoice::Linear;
    Potential potential;

    double a_coef(Point /*p*/, double /*n*/, double /*c*/) const { return a0; }

    double b_coef(Point p, double /*n*/, double /*c*/) const {
        if (beta0 == 0.0) return 0.0;
        const double d = Grid::wall_distance(p.x, p.y);
        return beta0 * bump_w(d / delta_b);
    }

    /// Nondecreasing envelope of |S|; constant sqrt(2)(a0 + beta0).
    double S0(double c) const {
        if (c < 0.0) throw std::invalid_argument("S0: c must be nonnegative");
        return std::sqrt(2.0) * (a0 + beta0);
    }

    Mat2 eval_S(Point p, double n, double c) const {
        if (n < 0.0 || c < 0.0)
            throw std::invalid_argument("eval_S: n and c must be nonnegative");
        const double a = a_coef(p, n, c);
        const double b = b_coef(p, n, c);
        return {a, -b, b, a};
    }

    static double rho_eps(double eps, Point p) {
        return ramp_zeta(Grid::wall_distance(p.x, p.y) / eps);
    }

    static double chi_eps(double eps, double n) { return ramp_eta(eps * n); }

    Mat2 eval_S_eps(double eps, Point p, double n, double c) const {
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("eval_S_eps: eps must lie in (0,1)");
        const double w = rho_eps(eps, p) * chi_eps(eps, n);
        if (w == 0.0) return {};
        Mat2 s = eval_S(p, n, c);
        s.a11 *= w;
        s.a12 *= w;
        s.a21 *= w;
        s.a22 *= w;
        return s;
    }

    double eval_f(double c) const {
        if (c < 0.0) throw std::invalid_argument("eval_f: c must be nonnegative");
        switch (f_choice) {
        case FChoice::Linear: return c;
        case FChoice::Zero: return 0.0;
        }
        return 0.0;
    }

    /// f(c)/c extended continuously to c=0; used by the positivity-
    /// preserving sink discretization.
    double f_over_c(double c) const {
        switch (f_choice) {
        case FChoice::Linear: return 1.0;
        case FChoice::Zero: return 0.0;
        }
        return 0.0;
    }
};

inline Model default_model() { return Model{}; }

} // namespace chns
