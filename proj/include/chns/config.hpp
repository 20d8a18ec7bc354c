#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chns/model.hpp"

namespace chns {

enum class N0Choice { Cosine, Uniform };
enum class C0Choice { Ramp, Cosine, Zero };
enum class U0Choice { Zero, Vortex };

/// Full run configuration: one flat key = value file drives every command.
struct RunConfig {
    int nx = 64, ny = 64;
    double T = 1.0;
    double eps = 0.1;

    double cfl = 0.45;
    double dt_cap = 0.01;
    double dt_fixed = 0.0; // 0 = adaptive step from cfl_dt
    double diffusion_theta = 0.5;
    double poisson_tol = 1e-11;
    int poisson_max_iter = 20000;

    double a0 = 1.0;
    double beta0 = 0.5;
    double delta_b = 0.1;
    FChoice f_choice = FChoice::Linear;
    PhiChoice phi_choice = PhiChoice::Gravity;

    N0Choice n0_choice = N0Choice::Cosine;
    C0Choice c0_choice = C0Choice::Ramp;
    U0Choice u0_choice = U0Choice::Zero;
    double u0_amp = 0.1;

    long seed = 7;
    int snapshot_every = 64;
    int diag_every = 16;
    bool report_slack = false; // widen verdicts by 1.1 on coarse grids

    long mt_seed = 7;
    int mt_count = 1000;
    std::string mt_kind = "mixed"; // mixed|neumann_trig|bump|random_smooth
    double mt_psi_floor = 1e-3;
    std::string mt_calibration; // path consumed by simulate

    int wf_levels = 3;
    int wf_base_nx = 16;
    double wf_tsupp = 0.25;
    int wf_snap_every = 8;

    std::vector<double> eps_list = {0.2, 0.1, 0.05, 0.025};
    double eps_T = 0.5;

    bool operator==(const RunConfig&) const = default;

    Model model() const {
        Model m;
        m.a0 = a0;
        m.beta0 = beta0;
        m.delta_b = delta_b;
        m.f_choice = f_choice;
        m.potential.choice = phi_choice;
        return m;
    }
};

struct ConfigResult {
    bool ok = false;
    RunConfig config;
    std::vector<std::string> errors;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct KeyParser {
    const std::string& value;
    int line;
    std::vector<std::string>& errors;

    bool real(double& out, double lo, double hi, bool lo_strict = false) const {
        char* end = nullptr;
        const double v = std::strtod(value.c_str(), &end);
        if (end == value.c_str() || *end != '\0') {
            err("expected a number, got '" + value + "'");
            return false;
        }
        if (v < lo || v > hi || (lo_strict && v == lo)) {
            err("value " + value + " out of range [" + fmt_real(lo) + ", " + fmt_real(hi) + "]");
            return false;
        }
        out = v;
        return true;
    }

    bool integer(long& out, long lo, long hi) const {
        char* end = nullptr;
        const long v = std::strtol(value.c_str(), &end, 10);
        if (end == value.c_str() || *end != '\0') {
            err("expected an integer, got '" + value + "'");
            return false;
        }
        if (v < lo || v > hi) {
            err("value " + value + " out of range [" + std::to_string(lo) + ", " +
                std::to_string(hi) + "]");
            return false;
        }
        out = v;
        return true;
    }

    bool integer(int& out, long lo, long hi) const {
        long v;
        if (!integer(v, lo, hi)) return false;
        out = static_cast<int>(v);
        return true;
    }

    bool boolean(bool& out) const {
        if (value == "on" || value == "true" || value == "1") { out = true; return true; }
        if (value == "off" || value == "false" || value == "0") { out = false; return true; }
        err("expected on/off, got '" + value + "'");
        return false;
    }

    bool keyword(const std::vector<std::pair<std::string, int>>& table, int& out) const {
        for (const auto& [name, v] : table)
            if (value == name) { out = v; return true; }
        std::string opts;
        for (const auto& [name, v] : table) opts += (opts.empty() ? "" : "|") + name;
        err("expected one of {" + opts + "}, got '" + value + "'");
        return false;
    }

    bool real_list(std::vector<double>& out) const {
        std::vector<double> vals;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            char* end = nullptr;
            const double v = std::strtod(item.c_str(), &end);
            if (item.empty() || end == item.c_str() || *end != '\0') {
                err("bad list element '" + item + "'");
                return false;
            }
            vals.push_back(v);
        }
        if (vals.empty()) {
            err("empty list");
            return false;
        }
        out = std::move(vals);
        return true;
    }

    void err(const std::string& what) const {
        errors.push_back("line " + std::to_string(line) + ": " + what);
    }
};

} // namespace detail

/// Parse a flat key = value configuration (# starts a comment).  Unknown
/// keys and out-of-range values are rejected with their line numbers; an
/// empty document yields the documented defaults.
inline ConfigResult parse_config(const std::string& text) {
    ConfigResult res;
    RunConfig& c = res.config;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            res.errors.push_back("line " + std::to_string(line) + ": expected 'key = value'");
            continue;
        }
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        detail::KeyParser p{value, line, res.errors};

        if (key == "nx") p.integer(c.nx, 4, 4096);
        else if (key == "ny") p.integer(c.ny, 4, 4096);
        else if (key == "T") p.real(c.T, 0.0, 1e6);
        else if (key == "eps") p.real(c.eps, 0.0, 1.0, true);
        else if (key == "cfl") p.real(c.cfl, 0.0, 0.5, true);
        else if (key == "dt_cap") p.real(c.dt_cap, 0.0, 1e3, true);
        else if (key == "dt_fixed") p.real(c.dt_fixed, 0.0, 1e3);
        else if (key == "diffusion_theta") p.real(c.diffusion_theta, 0.0, 1.0);
        else if (key == "poisson_tol") p.real(c.poisson_tol, 0.0, 1e-10, true);
        else if (key == "poisson_max_iter") p.integer(c.poisson_max_iter, 1, 1000000);
        else if (key == "a0") p.real(c.a0, 0.0, 100.0);
        else if (key == "beta0") p.real(c.beta0, 0.0, 100.0);
        else if (key == "delta_b") p.real(c.delta_b, 0.0, 0.5, true);
        else if (key == "f_choice") {
            int v;
            if (p.keyword({{"linear", 0}, {"zero", 1}}, v)) c.f_choice = static_cast<FChoice>(v);
        } else if (key == "phi_choice") {
            int v;
            if (p.keyword({{"gravity", 0}, {"tilted", 1}}, v)) c.phi_choice = static_cast<PhiChoice>(v);
        } else if (key == "n0_choice") {
            int v;
            if (p.keyword({{"cosine", 0}, {"uniform", 1}}, v)) c.n0_choice = static_cast<N0Choice>(v);
        } else if (key == "c0_choice") {
            int v;
            if (p.keyword({{"ramp", 0}, {"cosine", 1}, {"zero", 2}}, v)) c.c0_choice = static_cast<C0Choice>(v);
        } else if (key == "u0_choice") {
            int v;
            if (p.keyword({{"zero", 0}, {"vortex", 1}}, v)) c.u0_choice = static_cast<U0Choice>(v);
        } else if (key == "u0_amp") p.real(c.u0_amp, 0.0, 100.0);
        else if (key == "seed") p.integer(c.seed, 0, 1L << 60);
        else if (key == "snapshot_every") p.integer(c.snapshot_every, 1, 1 << 28);
        else if (key == "diag_every") p.integer(c.diag_every, 1, 1 << 28);
        else if (key == "report_slack") p.boolean(c.report_slack);
        else if (key == "mt_seed") p.integer(c.mt_seed, 0, 1L << 60);
        else if (key == "mt_count") p.integer(c.mt_count, 1, 1000000);
        else if (key == "mt_kind") {
            if (value == "mixed" || value == "neumann_trig" || value == "bump" ||
                value == "random_smooth")
                c.mt_kind = value;
            else
                p.err("expected one of {mixed|neumann_trig|bump|random_smooth}, got '" + value + "'");
        } else if (key == "mt_psi_floor") p.real(c.mt_psi_floor, 0.0, 1.0, true);
        else if (key == "mt_calibration") c.mt_calibration = value;
        else if (key == "wf_levels") p.integer(c.wf_levels, 1, 6);
        else if (key == "wf_base_nx") p.integer(c.wf_base_nx, 4, 1024);
        else if (key == "wf_tsupp") p.real(c.wf_tsupp, 0.0, 1e6, true);
        else if (key == "wf_snap_every") p.integer(c.wf_snap_every, 1, 1 << 20);
        else if (key == "eps_list") {
            std::vector<double> v;
            if (p.real_list(v)) {
                bool ok = true;
                for (std::size_t k = 0; k < v.size(); ++k) {
                    if (!(v[k] > 0.0 && v[k] < 1.0)) ok = false;
                    if (k > 0 && !(v[k] < v[k - 1])) ok = false;
                }
                if (ok) c.eps_list = v;
                else p.err("eps_list must be strictly decreasing within (0,1)");
            }
        } else if (key == "eps_T") p.real(c.eps_T, 0.0, 1e6);
        else
            res.errors.push_back("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
    res.ok = res.errors.empty();
    return res;
}

/// Serialize every key at full precision; parse(serialize(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
    using detail::fmt_real;
    std::ostringstream o;
    auto kw = [](auto e, std::initializer_list<const char*> names) {
        return *(names.begin() + static_cast<int>(e));
    };
    o << "nx = " << c.nx << "\n";
    o << "ny = " << c.ny << "\n";
    o << "T = " << fmt_real(c.T) << "\n";
    o << "eps = " << fmt_real(c.eps) << "\n";
    o << "cfl = " << fmt_real(c.cfl) << "\n";
    o << "dt_cap = " << fmt_real(c.dt_cap) << "\n";
    o << "dt_fixed = " << fmt_real(c.dt_fixed) << "\n";
    o << "diffusion_theta = " << fmt_real(c.diffusion_theta) << "\n";
    o << "poisson_tol = " << fmt_real(c.poisson_tol) << "\n";
    o << "poisson_max_iter = " << c.poisson_max_iter << "\n";
    o << "a0 = " << fmt_real(c.a0) << "\n";
    o << "beta0 = " << fmt_real(c.beta0) << "\n";
    o << "delta_b = " << fmt_real(c.delta_b) << "\n";
    o << "f_choice = " << kw(c.f_choice, {"linear", "zero"}) << "\n";
    o << "phi_choice = " << kw(c.phi_choice, {"gravity", "tilted"}) << "\n";
    o << "n0_choice = " << kw(c.n0_choice, {"cosine", "uniform"}) << "\n";
    o << "c0_choice = " << kw(c.c0_choice, {"ramp", "cosine", "zero"}) << "\n";
    o << "u0_choice = " << kw(c.u0_choice, {"zero", "vortex"}) << "\n";
    o << "u0_amp = " << fmt_real(c.u0_amp) << "\n";
    o << "seed = " << c.seed << "\n";
    o << "snapshot_every = " << c.snapshot_every << "\n";
    o << "diag_every = " << c.diag_every << "\n";
    o << "report_slack = " << (c.report_slack ? "on" : "off") << "\n";
    o << "mt_seed = " << c.mt_seed << "\n";
    o << "mt_count = " << c.mt_count << "\n";
    o << "mt_kind = " << c.mt_kind << "\n";
    o << "mt_psi_floor = " << fmt_real(c.mt_psi_floor) << "\n";
    if (!c.mt_calibration.empty()) o << "mt_calibration = " << c.mt_calibration << "\n";
    o << "wf_levels = " << c.wf_levels << "\n";
    o << "wf_base_nx = " << c.wf_base_nx << "\n";
    o << "wf_tsupp = " << fmt_real(c.wf_tsupp) << "\n";
    o << "wf_snap_every = " << c.wf_snap_every << "\n";
    o << "eps_list = ";
    for (std::size_t k = 0; k < c.eps_list.size(); ++k)
        o << (k ? "," : "") << fmt_real(c.eps_list[k]);
    o << "\n";
    o << "eps_T = " << fmt_real(c.eps_T) << "\n";
    return o.str();
}

} // namespace chns
