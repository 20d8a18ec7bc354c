#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chns/epsilon_study.hpp"

using namespace chns;

namespace {

RunConfig small_family_config() {
    RunConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.eps_T = 0.05;
    cfg.eps_list = {0.4, 0.2};
    cfg.snapshot_every = 16;
    cfg.diag_every = 8;
    return cfg;
}

} // namespace

TEST_CASE("run_family: singleton list reproduces a plain run") {
    RunConfig cfg = small_family_config();
    cfg.eps_list = {0.2};
    std::vector<Trajectory> fam = run_family(cfg);
    REQUIRE(fam.size() == 1);
    CHECK_FALSE(fam[0].truncated);

    RunConfig solo = cfg;
    solo.T = cfg.eps_T;
    solo.eps = 0.2;
    solo.dt_fixed = fam[0].config.dt_fixed;
    Trajectory direct = run(solo, {true, ""});
    REQUIRE(direct.frames.size() == fam[0].frames.size());
    for (std::size_t k = 0; k < direct.frames.size(); ++k)
        for (std::size_t q = 0; q < direct.frames[k].n.data().size(); ++q)
            CHECK(direct.frames[k].n.data()[q] == fam[0].frames[k].n.data()[q]);
}

TEST_CASE("cauchy_table: duplicated epsilon members give zero differences") {
    RunConfig cfg = small_family_config();
    std::vector<Trajectory> fam = run_family(cfg);
    REQUIRE(fam.size() == 2);
    std::vector<Trajectory> dup = {fam[0], fam[0]};
    dup[1].config.eps = fam[0].config.eps * 0.999; // label only
    CauchyTable t = cauchy_table(dup, cfg.eps_T);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].l1_n == 0.0);
    CHECK(t.rows[0].l2_c == 0.0);
    CHECK(t.rows[0].l2_u == 0.0);
    CHECK(t.rows[0].l2_grad_c == 0.0);
}

TEST_CASE("cauchy_table: S == 0 makes the family independent of epsilon") {
    RunConfig cfg = small_family_config();
    cfg.a0 = 0.0;
    cfg.beta0 = 0.0;
    cfg.eps_list = {0.4, 0.2, 0.1};
    std::vector<Trajectory> fam = run_family(cfg);
    CauchyTable t = cauchy_table(fam, cfg.eps_T);
    for (const CauchyRow& r : t.rows) {
        CHECK(r.l1_n <= 1e-14);
        CHECK(r.l2_c <= 1e-14);
        CHECK(r.l2_u <= 1e-14);
        CHECK(r.l2_grad_c <= 1e-13);
    }
}

TEST_CASE("cauchy_table: pairwise norms are symmetric in their arguments") {
    RunConfig cfg = small_family_config();
    std::vector<Trajectory> fam = run_family(cfg);
    CauchyTable ab = cauchy_table({fam[0], fam[1]}, cfg.eps_T);
    CauchyTable ba = cauchy_table({fam[1], fam[0]}, cfg.eps_T);
    CHECK(ab.rows[0].l1_n == Catch::Approx(ba.rows[0].l1_n).margin(1e-15));
    CHECK(ab.rows[0].l2_c == Catch::Approx(ba.rows[0].l2_c).margin(1e-15));
    CHECK(ab.rows[0].l2_u == Catch::Approx(ba.rows[0].l2_u).margin(1e-15));
    CHECK(ab.rows[0].l2_grad_c == Catch::Approx(ba.rows[0].l2_grad_c).margin(1e-15));
}

TEST_CASE("cauchy_table: cadence mismatch is rejected") {
    RunConfig cfg = small_family_config();
    std::vector<Trajectory> fam = run_family(cfg);
    std::vector<Trajectory> bad = fam;
    bad[1].frames.pop_back();
    CHECK_THROWS(cauchy_table(bad, cfg.eps_T));
}

TEST_CASE("uniform_integrability: uniform-density runs give zero; rescaling breaks the bound") {
    RunConfig cfg = small_family_config();
    cfg.n0_choice = N0Choice::Uniform;
    cfg.c0_choice = C0Choice::Zero;
    std::vector<Trajectory> fam = run_family(cfg);
    CHECK(uniform_integrability(fam, cfg.eps_T) <= 1e-13);

    // synthetic violation: inflate the recorded entropy by hand
    std::vector<Trajectory> bad = fam;
    for (SeriesRow& r : bad[0].series.rows) r.cumE += 1e3;
    CauchyTable t = cauchy_table(bad, cfg.eps_T, /*K1=*/1.0);
    CHECK(t.ui_value > t.ui_bound);
}

TEST_CASE("eps-study csv has the pair rows plus the footer") {
    RunConfig cfg = small_family_config();
    std::vector<Trajectory> fam = run_family(cfg);
    CauchyTable t = cauchy_table(fam, cfg.eps_T, 1.0);
    std::string csv = t.to_csv();
    CHECK(csv.find("eps_hi,eps_lo,L1_n,L2_c,L2_u,L2_grad_c") == 0);
    CHECK(csv.find("uniform_integrability,") != std::string::npos);
    CHECK(t.ui_bound > 0.0);
}
