#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chns/fields_io.hpp"
#include "chns/grid.hpp"
#include "chns/model.hpp"
#include "chns/operators.hpp"
#include "chns/rng.hpp"

namespace chns {

/// Seeded families of test pairs (phi free sign, psi strictly positive)
/// driving the functional-inequality calibration.
struct TestFunctionFamily {
    Grid grid;
    std::uint64_t seed = 0;
    std::string kind; // neumann_trig | bump | random_smooth | mixed
    double psi_floor = 1e-3;
    std::vector<ScalarField> phis;
    std::vector<ScalarField> psis;

    int count() const { return static_cast<int>(phis.size()); }
};

namespace detail {

inline ScalarField trig_series(Grid g, Rng& rng, double amp) {
    // cached cosine tables keep the family generation cheap
    std::vector<std::vector<double>> cx(5, std::vector<double>(g.nx));
    std::vector<std::vector<double>> cy(5, std::vector<double>(g.ny));
    for (int k = 0; k <= 4; ++k) {
        for (int i = 0; i < g.nx; ++i) cx[k][i] = std::cos(k * M_PI * g.xc(i));
        for (int j = 0; j < g.ny; ++j) cy[k][j] = std::cos(k * M_PI * g.yc(j));
    }
    double a[5][5];
    for (int k = 0; k <= 4; ++k)
        for (int m = 0; m <= 4; ++m)
            a[k][m] = (k + m >= 1) ? rng.uniform(-1.0, 1.0) * amp / (1.0 + k * k + m * m) : 0.0;
    ScalarField f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double v = 0.0;
            for (int k = 0; k <= 4; ++k)
                for (int m = 0; m <= 4; ++m) v += a[k][m] * cx[k][i] * cy[m][j];
            f(i, j) = v;
        }
    return f;
}

inline ScalarField bump_series(Grid g, Rng& rng, int lobes, bool positive) {
    ScalarField f(g, 0.0);
    for (int l = 0; l < lobes; ++l) {
        const double cxp = rng.uniform(0.25, 0.75);
        const double cyp = rng.uniform(0.25, 0.75);
        const double w = rng.uniform(0.12, 0.3);
        const double amp = positive ? rng.uniform(0.2, 2.0) : rng.uniform(-2.0, 2.0);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                f(i, j) += amp * bump_w((g.xc(i) - cxp) / w) * bump_w((g.yc(j) - cyp) / w);
    }
    return f;
}

inline ScalarField smooth_noise(Grid g, Rng& rng, int sweeps, double amp) {
    ScalarField f(g);
    for (double& v : f.data()) v = rng.uniform(-1.0, 1.0);
    ScalarField tmp(g);
    for (int s = 0; s < sweeps; ++s) {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double c = f(i, j);
                const double w = (i > 0) ? f(i - 1, j) : c;
                const double e = (i < g.nx - 1) ? f(i + 1, j) : c;
                const double so = (j > 0) ? f(i, j - 1) : c;
                const double no = (j < g.ny - 1) ? f(i, j + 1) : c;
                tmp(i, j) = (4.0 * c + w + e + so + no) / 8.0;
            }
        std::swap(f, tmp);
    }
    double mx = 0.0;
    for (double v : f.data()) mx = std::max(mx, std::abs(v));
    if (mx > 0.0)
        for (double& v : f.data()) v *= amp / mx;
    return f;
}

} // namespace detail

inline TestFunctionFamily generate_family(Grid g, std::uint64_t seed, int count,
                                          const std::string& kind, double psi_floor = 1e-3) {
    if (g.nx > 4096 || g.ny > 4096)
        throw std::invalid_argument("generate_family: grid too large");
    TestFunctionFamily fam;
    fam.grid = g;
    fam.seed = seed;
    fam.kind = kind;
    fam.psi_floor = psi_floor;
    fam.phis.reserve(count);
    fam.psis.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
        std::string k = kind;
        if (kind == "mixed") {
            const char* kinds[3] = {"neumann_trig", "bump", "random_smooth"};
            k = kinds[i % 3];
        }
        ScalarField phi, psi;
        if (k == "neumann_trig") {
            phi = detail::trig_series(g, rng, 1.5);
            ScalarField e = detail::trig_series(g, rng, 1.2);
            psi = ScalarField(g);
            for (std::size_t q = 0; q < psi.data().size(); ++q)
                psi.data()[q] = std::exp(e.data()[q]);
        } else if (k == "bump") {
            phi = detail::bump_series(g, rng, 3, false);
            ScalarField b = detail::bump_series(g, rng, 2, true);
            psi = ScalarField(g, psi_floor);
            for (std::size_t q = 0; q < psi.data().size(); ++q) psi.data()[q] += b.data()[q];
        } else if (k == "random_smooth") {
            phi = detail::smooth_noise(g, rng, 8, 1.2);
            ScalarField e = detail::smooth_noise(g, rng, 8, 0.8);
            psi = ScalarField(g);
            for (std::size_t q = 0; q < psi.data().size(); ++q)
                psi.data()[q] = std::exp(e.data()[q]);
        } else {
            throw std::invalid_argument("generate_family: unknown kind '" + k + "'");
        }
        double mn = 1e300;
        for (double v : psi.data()) mn = std::min(mn, v);
        if (mn < psi_floor * (1.0 - 1e-12))
            throw std::logic_error("generate_family: psi fell below its floor");
        fam.phis.push_back(std::move(phi));
        fam.psis.push_back(std::move(psi));
    }
    return fam;
}

struct RawMtResult {
    double K1_est = 0.0;
    int skipped = 0; // members with vanishing Dirichlet energy
    int clamped = 0; // members whose exponent hit the overflow clamp
    int worst_member = -1;
};

/// Exponential-class bound: each member is normalized to zero mean and
/// unit Dirichlet energy, then int exp(2 pi xi^2) is maximized over the
/// family.  Exponents are clamped at 700 and flagged rather than silently
/// overflowing.
inline RawMtResult raw_mt_check(const TestFunctionFamily& fam) {
    RawMtResult res;
    const Grid& g = fam.grid;
    for (int m = 0; m < fam.count(); ++m) {
        ScalarField xi = fam.phis[m];
        const double xbar = mean(xi);
        for (double& v : xi.data()) v -= xbar;
        const double s = norm(xi, NormKind::H1Semi);
        if (s < 1e-12) {
            ++res.skipped;
            continue;
        }
        for (double& v : xi.data()) v /= s;
        long double acc = 0.0L;
        bool clamped = false;
        for (double v : xi.data()) {
            double arg = 2.0 * M_PI * v * v;
            if (arg > 700.0) {
                arg = 700.0;
                clamped = true;
            }
            acc += std::exp(arg);
        }
        if (clamped) ++res.clamped;
        const double val = static_cast<double>(acc) * g.cell_area();
        if (val > res.K1_est) {
            res.K1_est = val;
            res.worst_member = m;
        }
    }
    return res;
}

/// margin of int phi (psi - mean psi) <= (1/a)[entropy + C int psi]
///                                     + (a/8pi) {int psi} int |grad phi|^2
inline double check_ineq1(const ScalarField& phi, const ScalarField& psi, double a, double C) {
    if (a <= 0.0) throw std::invalid_argument("check_ineq1: a must be positive");
    for (double v : psi.data())
        if (v <= 0.0) throw std::invalid_argument("check_ineq1: psi must be positive");
    const double M = integrate(psi);
    const double pbar = M; // |Omega| = 1
    long double lhs = 0.0L;
    for (std::size_t k = 0; k < phi.data().size(); ++k)
        lhs += static_cast<long double>(phi.data()[k]) * (psi.data()[k] - pbar);
    const double L = static_cast<double>(lhs) * phi.grid().cell_area();
    const double E = relative_entropy(psi);
    const double D = dirichlet_energy(phi);
    return (E + C * M) / a + (a / (8.0 * M_PI)) * M * D - L;
}

/// margin of int psi ln(psi/mean psi) <= (1/2pi){int psi} int |grad psi|^2/psi^2
///                                      + C int psi
inline double check_ineq2(const ScalarField& psi, double C) {
    for (double v : psi.data())
        if (v <= 0.0) throw std::invalid_argument("check_ineq2: psi must be positive");
    const double M = integrate(psi);
    const double E = relative_entropy(psi);
    const double W = weighted_grad_sq(psi);
    return M * W / (2.0 * M_PI) + C * M - E;
}

/// int ln(psi / mean psi); nonpositive for every positive field.
inline double jensen_check(const ScalarField& psi) {
    double mn = 1e300;
    for (double v : psi.data()) mn = std::min(mn, v);
    if (mn <= 0.0) throw std::invalid_argument("jensen_check: psi must be positive");
    const double pbar = mean(psi);
    long double acc = 0.0L;
    for (double v : psi.data()) acc += std::log(v / pbar);
    return static_cast<double>(acc) * psi.grid().cell_area();
}

struct CalibrationResult {
    double K1_est = 0.0; // raw exponential-class constant
    double C_est = 0.0;  // smallest C with nonnegative margins
    std::uint64_t seed = 0;
    std::string kind;
    int count = 0;
    int worst_member = -1;
    int raw_skipped = 0;
    int raw_clamped = 0;
    std::vector<double> a_grid;
    Grid grid;
};

/// Bisection for the smallest C making every margin of both inequalities
/// nonnegative over family x a_grid.  Margins are affine and increasing
/// in C, so per-member scalars are cached once.
inline CalibrationResult calibrate_C(const TestFunctionFamily& fam,
                                     const std::vector<double>& a_grid) {
    if (fam.count() == 0) throw std::invalid_argument("calibrate_C: empty family");
    if (a_grid.empty()) throw std::invalid_argument("calibrate_C: empty a_grid");

    struct MemberData {
        double L = 0.0, E = 0.0, M = 0.0, D = 0.0, W = 0.0;
    };
    std::vector<MemberData> md(fam.count());
    for (int m = 0; m < fam.count(); ++m) {
        const ScalarField& phi = fam.phis[m];
        const ScalarField& psi = fam.psis[m];
        MemberData d;
        d.M = integrate(psi);
        long double lhs = 0.0L;
        for (std::size_t k = 0; k < phi.data().size(); ++k)
            lhs += static_cast<long double>(phi.data()[k]) * (psi.data()[k] - d.M);
        d.L = static_cast<double>(lhs) * phi.grid().cell_area();
        d.E = relative_entropy(psi);
        d.D = dirichlet_energy(phi);
        d.W = weighted_grad_sq(psi);
        md[m] = d;
    }

    auto min_margin = [&](double C) {
        double worst = 1e300;
        for (const MemberData& d : md) {
            for (double a : a_grid)
                worst = std::min(worst, (d.E + C * d.M) / a + (a / (8.0 * M_PI)) * d.M * d.D - d.L);
            worst = std::min(worst, d.M * d.W / (2.0 * M_PI) + C * d.M - d.E);
        }
        return worst;
    };

    CalibrationResult res;
    res.seed = fam.seed;
    res.kind = fam.kind;
    res.count = fam.count();
    res.a_grid = a_grid;
    res.grid = fam.grid;

    RawMtResult raw = raw_mt_check(fam);
    res.K1_est = raw.K1_est;
    res.raw_skipped = raw.skipped;
    res.raw_clamped = raw.clamped;

    double lo = 0.0;
    if (min_margin(0.0) >= 0.0) {
        res.C_est = 0.0;
    } else {
        double hi = 1.0;
        int guard = 0;
        while (min_margin(hi) < 0.0 && guard++ < 60) hi *= 2.0;
        while (hi - lo > 1e-6) {
            const double mid = 0.5 * (lo + hi);
            if (min_margin(mid) >= 0.0) hi = mid;
            else lo = mid;
        }
        res.C_est = hi;
    }

    // required C per member (exact since margins are affine in C)
    double worst_req = -1e300;
    for (int m = 0; m < fam.count(); ++m) {
        const MemberData& d = md[m];
        double req = 0.0;
        for (double a : a_grid)
            req = std::max(req, (a * (d.L - (a / (8.0 * M_PI)) * d.M * d.D) - d.E) / d.M);
        req = std::max(req, (d.E - d.M * d.W / (2.0 * M_PI)) / d.M);
        if (req > worst_req) {
            worst_req = req;
            res.worst_member = m;
        }
    }
    return res;
}

/// Default a grid of the estimates: the spread used by the proofs plus
/// the energy-step value K3 when the caller knows it.
inline std::vector<double> default_a_grid(double k3 = 0.0) {
    std::vector<double> a = {0.25, 0.5, 1.0, 2.0, 4.0};
    if (k3 > 0.0) a.push_back(k3);
    return a;
}

inline std::string calibration_to_text(const CalibrationResult& r) {
    std::ostringstream o;
    o << "K1_est = " << csv_real(r.K1_est) << "\n";
    o << "C_est = " << csv_real(r.C_est) << "\n";
    o << "family_seed = " << r.seed << "\n";
    o << "family_kind = " << r.kind << "\n";
    o << "family_count = " << r.count << "\n";
    o << "worst_member = " << r.worst_member << "\n";
    o << "raw_skipped = " << r.raw_skipped << "\n";
    o << "raw_clamped = " << r.raw_clamped << "\n";
    o << "nx = " << r.grid.nx << "\n";
    o << "ny = " << r.grid.ny << "\n";
    o << "a_grid = ";
    for (std::size_t k = 0; k < r.a_grid.size(); ++k) o << (k ? "," : "") << csv_real(r.a_grid[k]);
    o << "\n";
    return o.str();
}

inline CalibrationResult calibration_from_text(const std::string& text) {
    CalibrationResult r;
    std::istringstream in(text);
    std::string line;
    int nx = 0, ny = 0;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        val.erase(0, val.find_first_not_of(" \t"));
        if (key == "K1_est") r.K1_est = std::strtod(val.c_str(), nullptr);
        else if (key == "C_est") r.C_est = std::strtod(val.c_str(), nullptr);
        else if (key == "family_seed") r.seed = std::strtoull(val.c_str(), nullptr, 10);
        else if (key == "family_kind") r.kind = val;
        else if (key == "family_count") r.count = std::atoi(val.c_str());
        else if (key == "worst_member") r.worst_member = std::atoi(val.c_str());
        else if (key == "raw_skipped") r.raw_skipped = std::atoi(val.c_str());
        else if (key == "raw_clamped") r.raw_clamped = std::atoi(val.c_str());
        else if (key == "nx") nx = std::atoi(val.c_str());
        else if (key == "ny") ny = std::atoi(val.c_str());
        else if (key == "a_grid") {
            std::stringstream ss(val);
            std::string item;
            r.a_grid.clear();
            while (std::getline(ss, item, ','))
                r.a_grid.push_back(std::strtod(item.c_str(), nullptr));
        }
    }
    if (nx >= 4 && ny >= 4) r.grid = Grid::unit(nx, ny);
    if (r.count <= 0 || !(r.K1_est >= 1.0))
        throw std::runtime_error("calibration_from_text: malformed calibration data");
    return r;
}

} // namespace chns
