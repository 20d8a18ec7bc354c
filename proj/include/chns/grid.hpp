#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace chns {

/// Uniform staggered (MAC) grid on the unit square (0,1)^2.
///
/// Scalars live at cell centers, the x-velocity component on vertical
/// faces and the y-velocity component on horizontal faces.  Cell (i,j)
/// has center (xc(i), yc(j)) with i running fastest in storage.
struct Grid {
    int nx = 0;
    int ny = 0;
    double hx = 0.0;
    double hy = 0.0;

    static Grid unit(int nx, int ny) {
        if (nx < 4 || ny < 4)
            throw std::invalid_argument("Grid::unit: nx, ny must be >= 4");
        Grid g;
        g.nx = nx;
        g.ny = ny;
        g.hx = 1.0 / nx;
        g.hy = 1.0 / ny;
        return g;
    }

    int cells() const { return nx * ny; }
    double cell_area() const { return hx * hy; }

    // cell centers
    double xc(int i) const { return (i + 0.5) * hx; }
    double yc(int j) const { return (j + 0.5) * hy; }
    // face coordinates: vertical face i at x=i*hx, horizontal face j at y=j*hy
    double xf(int i) const { return i * hx; }
    double yf(int j) const { return j * hy; }

    /// Distance to the boundary of the unit square.
    static double wall_distance(double x, double y) {
        return std::min(std::min(x, 1.0 - x), std::min(y, 1.0 - y));
    }

    bool operator==(const Grid& o) const {
        return nx == o.nx && ny == o.ny;
    }
};

/// Cell-centered scalar unknown (n, c, P, phi, test functions).
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(Grid g, double fill = 0.0)
        : g_(g), v_(static_cast<std::size_t>(g.cells()), fill) {}

    template <class F>
    static ScalarField sample(Grid g, F&& f) {
        ScalarField s(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                s(i, j) = f(g.xc(i), g.yc(j));
        return s;
    }

    const Grid& grid() const { return g_; }

    double& operator()(int i, int j) { return v_[idx(i, j)]; }
    double operator()(int i, int j) const { return v_[idx(i, j)]; }

    std::vector<double>& data() { return v_; }
    const std::vector<double>& data() const { return v_; }

    bool finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    std::size_t idx(int i, int j) const {
        assert(i >= 0 && i < g_.nx && j >= 0 && j < g_.ny);
        return static_cast<std::size_t>(j) * g_.nx + i;
    }

    Grid g_;
    std::vector<double> v_;
};

/// Face-centered vector unknown (u, grad phi, fluxes).
///
/// ux(i,j): vertical face i=0..nx, j=0..ny-1 at (i*hx, (j+0.5)*hy)
/// uy(i,j): horizontal face i=0..nx-1, j=0..ny at ((i+0.5)*hx, j*hy)
/// A field carrying the no-slip tag keeps its boundary faces at exactly 0.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(Grid g, bool noslip = false)
        : g_(g),
          ux_(static_cast<std::size_t>(g.nx + 1) * g.ny, 0.0),
          uy_(static_cast<std::size_t>(g.nx) * (g.ny + 1), 0.0),
          noslip_(noslip) {}

    const Grid& grid() const { return g_; }
    bool noslip() const { return noslip_; }

    double& ux(int i, int j) { return ux_[uxi(i, j)]; }
    double ux(int i, int j) const { return ux_[uxi(i, j)]; }
    double& uy(int i, int j) { return uy_[uyi(i, j)]; }
    double uy(int i, int j) const { return uy_[uyi(i, j)]; }

    std::vector<double>& xdata() { return ux_; }
    const std::vector<double>& xdata() const { return ux_; }
    std::vector<double>& ydata() { return uy_; }
    const std::vector<double>& ydata() const { return uy_; }

    void zero_boundary_faces() {
        for (int j = 0; j < g_.ny; ++j) {
            ux(0, j) = 0.0;
            ux(g_.nx, j) = 0.0;
        }
        for (int i = 0; i < g_.nx; ++i) {
            uy(i, 0) = 0.0;
            uy(i, g_.ny) = 0.0;
        }
    }

    bool boundary_faces_zero() const {
        for (int j = 0; j < g_.ny; ++j)
            if (ux(0, j) != 0.0 || ux(g_.nx, j) != 0.0) return false;
        for (int i = 0; i < g_.nx; ++i)
            if (uy(i, 0) != 0.0 || uy(i, g_.ny) != 0.0) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : ux_) m = std::max(m, std::abs(x));
        for (double x : uy_) m = std::max(m, std::abs(x));
        return m;
    }

    bool finite() const {
        for (double x : ux_)
            if (!std::isfinite(x)) return false;
        for (double x : uy_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    std::size_t uxi(int i, int j) const {
        assert(i >= 0 && i <= g_.nx && j >= 0 && j < g_.ny);
        return static_cast<std::size_t>(j) * (g_.nx + 1) + i;
    }
    std::size_t uyi(int i, int j) const {
        assert(i >= 0 && i < g_.nx && j >= 0 && j <= g_.ny);
        return static_cast<std::size_t>(j) * g_.nx + i;
    }

    Grid g_;
    std::vector<double> ux_, uy_;
    bool noslip_ = false;
};

} // namespace chns
