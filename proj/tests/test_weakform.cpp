#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chns/rng.hpp"
#include "chns/weakform.hpp"

using namespace chns;

namespace {

/// A synthetic stationary trajectory (n = const, c = 0, u = 0).
Trajectory stationary_trajectory(Grid g, double T, int frames) {
    Trajectory tr;
    tr.grid = g;
    tr.config = RunConfig{};
    tr.config.nx = g.nx;
    tr.config.ny = g.ny;
    for (int k = 0; k <= frames; ++k) {
        Frame f;
        f.t = T * k / frames;
        f.n = ScalarField(g, 1.0);
        f.c = ScalarField(g, 0.0);
        f.u = VectorField(g, true);
        f.P = ScalarField(g);
        tr.frames.push_back(std::move(f));
    }
    return tr;
}

} // namespace

TEST_CASE("make_neumann_test: constants, boundary normal derivative, nonneg variant") {
    TimeProfile chi{0.25};
    SpaceTimeTest t00 = make_neumann_test(0, 0, chi);
    CHECK(t00.phi_at(0.3, 0.9) == t00.phi_at(0.7, 0.1));
    CHECK(t00.dphix_at(0.5, 0.5) == 0.0);

    SpaceTimeTest t10 = make_neumann_test(1, 0, chi);
    for (double y : {0.1, 0.6}) {
        CHECK(std::abs(t10.dphix_at(0.0, y)) <= 1e-12);
        CHECK(std::abs(t10.dphix_at(1.0, y)) <= 1e-12);
    }

    SpaceTimeTest nn = make_neumann_test(1, 1, chi, true);
    Grid g = Grid::unit(16, 16);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) CHECK(nn.phi_at(g.xc(i), g.yc(j)) >= 0.5 - 1e-12);
}

TEST_CASE("time profile: compact support and analytic derivative") {
    TimeProfile chi{0.2};
    CHECK(chi.value(0.0) == 1.0);
    CHECK(chi.value(0.2) == 0.0);
    CHECK(chi.value(0.5) == 0.0);
    CHECK(chi.deriv(0.3) == 0.0);
    for (double t : {0.02, 0.1, 0.17}) {
        const double h = 1e-6;
        const double fd = (chi.value(t + h) - chi.value(t - h)) / (2.0 * h);
        CHECK(chi.deriv(t) == Catch::Approx(fd).margin(1e-8));
    }
}

TEST_CASE("make_solenoidal_test: zero stream, discrete divergence, collar check") {
    Grid g = Grid::unit(64, 64);
    TimeProfile chi{0.25};
    SpaceTimeTest z = make_solenoidal_test(ScalarField(g, 0.0), chi);
    CHECK(z.vphi.max_abs() == 0.0);

    ScalarField bump = ScalarField::sample(g, [](double x, double y) {
        return bump_w((x - 0.5) / 0.28) * bump_w((y - 0.5) / 0.28);
    });
    SpaceTimeTest t = make_solenoidal_test(bump, chi);
    CHECK(norm(divergence(t.vphi), NormKind::Linf) <= 1e-12);
    for (int j = 0; j < g.ny; ++j) {
        CHECK(t.vphi.ux(1, j) == 0.0);
        CHECK(t.vphi.ux(g.nx - 1, j) == 0.0);
    }

    ScalarField thin(g, 0.0);
    thin(1, g.ny / 2) = 1.0;
    CHECK_THROWS(make_solenoidal_test(thin, chi));
}

TEST_CASE("make_solenoidal_test: seeded stream divergence verified cellwise") {
    Grid g = Grid::unit(32, 32);
    Rng rng(5);
    ScalarField stream(g, 0.0);
    for (int j = 3; j < g.ny - 3; ++j)
        for (int i = 3; i < g.nx - 3; ++i) stream(i, j) = rng.uniform(-1.0, 1.0);
    SpaceTimeTest t = make_solenoidal_test(stream, TimeProfile{0.25});
    ScalarField dv = divergence(t.vphi);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) CHECK(std::abs(dv(i, j)) <= 1e-11);
}

TEST_CASE("residuals vanish identically on the stationary state") {
    Grid g = Grid::unit(16, 16);
    Trajectory tr = stationary_trajectory(g, 0.3, 12);
    TimeProfile chi{0.25};

    CHECK(std::abs(residual_c(tr, make_neumann_test(1, 0, chi))) <= 1e-14);
    ScalarField bump = ScalarField::sample(g, [](double x, double y) {
        return bump_w((x - 0.5) / 0.25) * bump_w((y - 0.5) / 0.25);
    });
    CHECK(std::abs(residual_u(tr, make_solenoidal_test(bump, chi))) <= 1e-14);
    CHECK(std::abs(gap_ln_n(tr, make_neumann_test(1, 1, chi, true))) <= 1e-12);
}

TEST_CASE("residual_c scales linearly with the test amplitude") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.T = 0.12;
    cfg.snapshot_every = 4;
    Trajectory tr = run(cfg, {true, ""});
    TimeProfile chi{0.1};

    SpaceTimeTest t1 = make_neumann_test(1, 0, chi);
    const double alpha = 2.5;
    SpaceTimeTest scaled = t1;
    scaled.amp = alpha;
    CHECK(residual_c(tr, scaled) == Catch::Approx(alpha * residual_c(tr, t1)).margin(1e-12));
}

TEST_CASE("residual_u is linear in the test function") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.T = 0.12;
    cfg.snapshot_every = 4;
    cfg.u0_choice = U0Choice::Vortex;
    cfg.u0_amp = 0.05;
    Trajectory tr = run(cfg, {true, ""});
    TimeProfile chi{0.1};

    Grid g = tr.grid;
    ScalarField s1 = ScalarField::sample(g, [](double x, double y) {
        return bump_w((x - 0.45) / 0.22) * bump_w((y - 0.5) / 0.22);
    });
    ScalarField s2 = ScalarField::sample(g, [](double x, double y) {
        return bump_w((x - 0.58) / 0.2) * bump_w((y - 0.45) / 0.2);
    });
    SpaceTimeTest t1 = make_solenoidal_test(s1, chi, "a");
    SpaceTimeTest t2 = make_solenoidal_test(s2, chi, "b");
    const double alpha = 1.75;
    ScalarField combo_stream = s1;
    for (std::size_t k = 0; k < combo_stream.data().size(); ++k)
        combo_stream.data()[k] = alpha * s1.data()[k] + s2.data()[k];
    SpaceTimeTest combo = make_solenoidal_test(combo_stream, chi, "combo");
    const double lhs = residual_u(tr, combo);
    const double rhs = alpha * residual_u(tr, t1) + residual_u(tr, t2);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
}

TEST_CASE("solenoidal tests annihilate discrete gradient forcings") {
    Grid g = Grid::unit(32, 32);
    Rng rng(21);
    ScalarField q = ScalarField::sample(g, [&](double, double) { return rng.uniform(-1.0, 1.0); });
    ScalarField bump = ScalarField::sample(g, [](double x, double y) {
        return bump_w((x - 0.5) / 0.28) * bump_w((y - 0.5) / 0.28);
    });
    SpaceTimeTest t = make_solenoidal_test(bump, TimeProfile{0.25});
    VectorField gq = grad_neumann(q);
    const double pair = detail::face_dot(gq, t.vphi);
    CHECK(std::abs(pair) <= 1e-10 * norm(q, NormKind::Linf));
}

TEST_CASE("gap_ln_n reduces to the entropy identity for space-constant tests") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.T = 0.12;
    cfg.snapshot_every = 2;
    cfg.a0 = 0.0;
    cfg.beta0 = 0.0;
    cfg.u0_choice = U0Choice::Zero;
    cfg.c0_choice = C0Choice::Zero;
    Trajectory tr = run(cfg, {true, ""});

    TimeProfile chi{0.1};
    SpaceTimeTest t = make_neumann_test(0, 0, chi, true); // spatially constant
    const double gap = gap_ln_n(tr, t);

    const std::size_t count = detail::support_frames(tr, chi.t_supp);
    std::vector<double> tv(count), S(count), R(count);
    for (std::size_t fi = 0; fi < count; ++fi) {
        const Frame& f = tr.frames[fi];
        ScalarField ln = detail::log1p_field(f.n);
        tv[fi] = f.t;
        S[fi] = integrate(ln);
        R[fi] = dirichlet_energy(ln);
    }
    const double lhs = -detail::stieltjes_dchi(S, tv, chi) - chi.value(tv[0]) * S[0];
    const double diss = detail::trapz_chi(R, tv, chi);
    // the test's constant spatial value is 1.5 (offset 1, amp 0.5 at k=m=0)
    CHECK(gap == Catch::Approx(1.5 * (lhs - diss)).margin(1e-10));
}

TEST_CASE("pure heat study: residual_c and gap shrink at observed order >= 1") {
    RunConfig cfg;
    cfg.a0 = 0.0;
    cfg.beta0 = 0.0;
    cfg.f_choice = FChoice::Zero;
    cfg.u0_choice = U0Choice::Zero;
    cfg.c0_choice = C0Choice::Cosine;
    cfg.n0_choice = N0Choice::Cosine;
    cfg.wf_levels = 3;
    cfg.wf_base_nx = 8;
    cfg.wf_tsupp = 0.1;
    cfg.wf_snap_every = 4;
    WeakformStudy study = run_weakform_study(cfg);
    CHECK(study.order_residual_c >= 1.0);
    CHECK(study.order_gap >= 1.0);
    CHECK(study.tol_gap > 0.0);
    std::string csv = study.to_csv();
    CHECK(csv.find("residual_c") != std::string::npos);
    CHECK(csv.find("gap_ln_n") != std::string::npos);
}
