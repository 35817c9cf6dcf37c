#include "advfv/errors.hpp"
#include "advfv/model.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace advfv;
using advfv::testing::reference_params;
using advfv::testing::rel_err;
using advfv::testing::Rng;

namespace {

const Vec5 kRoundedEquilibrium{1.0686, 1.7739, 0.7310, 1.0, 0.5166};

Mat5 fd_jacobian(const ModelParams& p, const Vec5& u, double h) {
    Mat5 j;
    for (int c = 0; c < 5; ++c) {
        Vec5 up = u, um = u;
        up[static_cast<std::size_t>(c)] += h;
        um[static_cast<std::size_t>(c)] -= h;
        const Vec5 fp = reaction_f_unchecked(p, up, p.lambda_m);
        const Vec5 fm = reaction_f_unchecked(p, um, p.lambda_m);
        for (int r = 0; r < 5; ++r)
            j(r, c) = (fp[static_cast<std::size_t>(r)] - fm[static_cast<std::size_t>(r)]) / (2 * h);
    }
    return j;
}

}  // namespace

TEST_CASE("gamma_eval") {
    ModelParams p = reference_params();
    CHECK(gamma_eval(p, 0.7) == doctest::Approx(0.05));
    p.gamma = GammaMichaelisMenten{0.05, 1.0, 1.0};
    CHECK(gamma_eval(p, 0.0) == doctest::Approx(0.05));
    CHECK(gamma_eval(p, 1.0) == doctest::Approx(0.55));
    CHECK_THROWS_AS(gamma_eval(p, -0.1), InvalidArgument);

    const GammaRange g = gamma_range(p);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(0.0, 50.0), v = rng.uniform(0.0, 50.0);
        const double gu = gamma_eval(p, u), gv = gamma_eval(p, v);
        CHECK(gu >= g.min);
        CHECK(gu <= g.max);
        CHECK(std::abs(gu - gv) <= g.lipschitz * std::abs(u - v) + 1e-15);
    }
}

TEST_CASE("chi_eval") {
    ModelParams p = reference_params();
    CHECK(chi_eval(p, 0.5) == doctest::Approx(6.0));
    CHECK(chi_eval(p, 0.0) == 0.0);
    CHECK(chi_eval(p, 1.0) == 0.0);
    CHECK(chi_eval(p, 1.5) == 0.0);
    CHECK(chi_eval(p, -0.5) == 0.0);
    p.chi_kind = ChiKind::Linear;
    p.chi_alpha = 40.0;
    CHECK(chi_eval(p, 0.25) == doctest::Approx(10.0));
    CHECK(chi_eval(p, -0.25) == 0.0);
}

TEST_CASE("stress term") {
    const ModelParams p = reference_params();
    CHECK(stress_s(p, 0.0, 0.4) == doctest::Approx(0.4));
    CHECK(stress_s(p, 1.0686, 0.5166) == doctest::Approx(0.24118).epsilon(1e-5 / 0.24118));
    CHECK(stress_s(p, 3.0, 0.0) == 0.0);
    CHECK_THROWS_AS(stress_s(p, -1.0, 0.1), InvalidArgument);
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        const double u1 = rng.uniform(0.0, 10.0), u5 = rng.uniform(0.0, 1.0);
        CHECK(stress_s(p, u1 + rng.uniform(0.0, 1.0), u5) <= stress_s(p, u1, u5));
    }
}

TEST_CASE("reaction terms at reference states") {
    const ModelParams p = reference_params();
    const Vec5 f0 = reaction_f(p, disease_free_equilibrium(p), p.lambda_m);
    for (double v : f0) CHECK(v == 0.0);

    const Vec5 fs = reaction_f(p, kRoundedEquilibrium, p.lambda_m);
    for (double v : fs) CHECK(std::abs(v) < 1e-3);

    const RectangleBounds b = invariant_bounds(p);
    const Vec5 f = reaction_f(p, {0.0, 0.0, b.beta[2], 0.0, 0.0}, p.lambda_m);
    CHECK(f[0] == doctest::Approx(p.r1 * b.beta[2] * b.beta[2]));
    CHECK(f[1] == 0.0);
    CHECK(f[2] == doctest::Approx(-p.d * b.beta[2] - p.r1 * b.beta[2] * b.beta[2]));
    CHECK(f[3] == doctest::Approx(p.lambda_m));
    CHECK(f[4] == 0.0);

    CHECK_THROWS_AS(reaction_f(p, {1, 1, -1e-3, 1, 1}, p.lambda_m), InvalidArgument);
}

TEST_CASE("unchecked reaction terms guard vanishing denominators") {
    ModelParams p = reference_params();
    CHECK_NOTHROW(reaction_f_unchecked(p, {-0.5, 0, 0, 1, 0}, p.lambda_m));
    CHECK_THROWS_AS(reaction_f_unchecked(p, {-1.0, 0, 0, 1, 0}, p.lambda_m), PreconditionError);
}

TEST_CASE("invariant rectangle") {
    ModelParams p = reference_params();
    const RectangleBounds b = invariant_bounds(p);
    const Vec5 expected{800.0 / 9.0, 4000.0 / 27.0, 20.0 / 3.0, 1.0, 1.0};
    for (std::size_t i = 0; i < kSpecies; ++i) CHECK(rel_err(b.beta[i], expected[i]) < 1e-12);
    // algebraic relations
    const GammaRange g = gamma_range(p);
    CHECK(rel_err(b.beta[4], p.tau1 / (p.tau2 * p.tau3) * b.beta[3]) < 1e-12);
    CHECK(rel_err(b.beta[2], p.tau_s / p.d * b.beta[4]) < 1e-12);
    CHECK(rel_err(b.beta[0], p.r1 * b.beta[2] * b.beta[2] / (p.tau0 + g.min)) < 1e-12);
    CHECK(rel_err(b.beta[1], g.max / p.tau_p * b.beta[0]) < 1e-12);
    CHECK(b.beta[3] == p.m_hat);

    ModelParams q = p;
    q.tau_s *= 2.0;
    const RectangleBounds bq = invariant_bounds(q);
    CHECK(rel_err(bq.beta[2], 2.0 * b.beta[2]) < 1e-12);
    CHECK(rel_err(bq.beta[0], 4.0 * b.beta[0]) < 1e-12);

    ModelParams bad = p;
    bad.lambda_m = 0.01;
    try {
        invariant_bounds(bad);
        FAIL("expected a precondition error");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("m_hat >= lambda_M / sigma") != std::string::npos);
    }
}

TEST_CASE("quasi-positivity and outflow on the faces of the rectangle") {
    const ModelParams p = reference_params();
    const RectangleBounds b = invariant_bounds(p);
    Rng rng(5);
    for (int n = 0; n < 2000; ++n) {
        const Vec5 u = advfv::testing::random_in(b, rng);
        for (std::size_t i = 0; i < kSpecies; ++i) {
            Vec5 lo = u, hi = u;
            lo[i] = 0.0;
            hi[i] = b.beta[i];
            CHECK(reaction_f(p, lo, p.lambda_m)[i] >= 0.0);
            CHECK(reaction_f(p, hi, p.lambda_m)[i] <= 1e-12 * b.beta[i]);
        }
    }
}

TEST_CASE("continuous Jacobian") {
    ModelParams p = reference_params();
    const Mat5 j0 = continuous_jacobian(p, disease_free_equilibrium(p));
    CHECK(j0(0, 0) == doctest::Approx(-0.05));
    CHECK(j0(1, 0) == doctest::Approx(0.05));
    CHECK(j0(1, 1) == doctest::Approx(-0.03));
    CHECK(j0(2, 2) == doctest::Approx(-0.15));
    CHECK(j0(2, 4) == doctest::Approx(1.0));
    CHECK(j0(3, 0) == doctest::Approx(0.0));  // alpha1 (m_hat - 1) * 1
    CHECK(j0(3, 3) == doctest::Approx(-0.001));
    CHECK(j0(4, 0) == doctest::Approx(1.0));
    CHECK(j0(4, 4) == doctest::Approx(-1.0));

    const Mat5 ju = continuous_jacobian(p, {0.0, 0.1, 0.2, 0.3, 0.4});
    CHECK(ju(3, 0) == doctest::Approx(p.alpha1 * (p.m_hat - 0.3) * 0.3));

    const Mat5 fd = fd_jacobian(p, kRoundedEquilibrium, 1e-6);
    const Mat5 an = continuous_jacobian(p, kRoundedEquilibrium);
    CHECK((fd - an).cwiseAbs().maxCoeff() / an.cwiseAbs().maxCoeff() < 1e-6);

    const RectangleBounds b = invariant_bounds(p);
    Rng rng(6);
    for (int n = 0; n < 100; ++n) {
        Vec5 u = advfv::testing::random_in(b, rng);
        for (auto& v : u) v = std::max(v, 1e-3);
        const Mat5 a = continuous_jacobian(p, u);
        const Mat5 f = fd_jacobian(p, u, 1e-6 * std::max(1.0, advfv::sup_norm(u)));
        CHECK((f - a).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff() < 1e-6);
    }

    p.gamma = GammaMichaelisMenten{};
    CHECK_THROWS_AS(continuous_jacobian(p, kRoundedEquilibrium), UnsupportedVariant);
}

TEST_CASE("equilibria") {
    const ModelParams p = reference_params();

    SUBCASE("near the disease-free state") {
        const Vec5 e0 = disease_free_equilibrium(p);
        const Vec5 seed{0.01, 0.01, 0.01, 1.01, 0.01};
        const auto roots = find_equilibria(p, std::vector<Vec5>{seed});
        REQUIRE(roots.size() == 1);
        CHECK(sup_norm({roots[0][0] - e0[0], roots[0][1] - e0[1], roots[0][2] - e0[2],
                        roots[0][3] - e0[3], roots[0][4] - e0[4]}) < 1e-8);
    }
    SUBCASE("positive equilibrium") {
        const auto roots = find_equilibria(p, std::vector<Vec5>{{1.0, 2.0, 0.7, 1.0, 0.5}});
        REQUIRE(roots.size() == 1);
        const Vec5& e = roots[0];
        CHECK(sup_norm(reaction_f(p, e, p.lambda_m)) < 1e-10);
        CHECK(e[0] == doctest::Approx(1.0686).epsilon(1e-3));
        CHECK(e[2] == doctest::Approx(0.7310).epsilon(1e-3));
        CHECK(e[3] == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(e[4] == doctest::Approx(0.5166).epsilon(1e-3));
        // u2 = gamma0 u1 / tau_p follows from F2 = 0
        CHECK(e[1] == doctest::Approx(p.gamma0() * e[0] / p.tau_p).epsilon(1e-12));
    }
    SUBCASE("deduplication") {
        const std::vector<Vec5> seeds{{1.0, 2.0, 0.7, 1.0, 0.5}, {1.1, 1.7, 0.75, 1.0, 0.52}};
        CHECK(find_equilibria(p, seeds).size() == 1);
    }
    SUBCASE("large monomer degradation leaves only the disease-free state") {
        const ModelParams q = standard_params(100.0);
        const RectangleBounds b = invariant_bounds(q);
        std::vector<Vec5> seeds;
        for (double f : {0.05, 0.2, 0.5, 0.9})
            for (double g : {0.05, 0.5, 0.9})
                seeds.push_back({f * b.beta[0], f * b.beta[1], g * b.beta[2], 1.0, g * b.beta[4]});
        const auto roots = find_equilibria(q, seeds);
        REQUIRE(!roots.empty());
        for (const auto& r : roots) CHECK(sup_norm({r[0], r[1], r[2], r[3] - 1.0, r[4]}) < 1e-8);
    }
}

TEST_CASE("parameter validation") {
    ModelParams p;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);  // d unset
    p.d = 0.15;
    CHECK_NOTHROW(p.validate());
    p.sigma = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.sigma = 0.001;
    p.tau0 = -1.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
