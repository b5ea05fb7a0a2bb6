#include "doctest.h"

#include <cmath>
#include <random>

#include "semiflow/halfplane.hpp"
#include "semiflow/registry.hpp"

using namespace semiflow;

namespace {

Expr E(const char* s) { return Expr::parse(s); }

} // namespace

TEST_CASE("log grids stay in the right half-plane") {
    auto g = halfplane_log_grid(8, 7, 1e-2, 10.0);
    CHECK(g.size() == 56);
    for (cplx z : g) {
        CHECK(z.real() >= 1e-2 * (1 - 1e-12));
        CHECK(z.real() <= 10.0 * (1 + 1e-12));
    }
    CHECK(default_bp_grid().size() == 32 * 32);
    CHECK_THROWS_AS(halfplane_log_grid(4, 4, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("Berkson-Porta check") {
    auto grid = default_bp_grid();
    CHECK(berkson_porta_check(E("1 - z"), grid) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(std::abs(berkson_porta_check(E("2*z + 3i"), grid)) < 1e-9);
    double sq = berkson_porta_check(E("z^2"), grid);
    CHECK(sq > 0.0);
    // x^2 + y^2 at the grid corner (10, +-10).
    CHECK(sq == doctest::Approx(200.0).epsilon(1e-6));
}

TEST_CASE("property: the check ignores vertical translation for pz + iq") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    auto grid = halfplane_log_grid(16, 16, 1e-2, 10.0);
    for (int trial = 0; trial < 10; ++trial) {
        double p = u(rng), q = u(rng), shift = 10.0 * u(rng);
        Expr G(ExprNode::bin(BinaryOp::Add, ExprNode::bin(BinaryOp::Mul, ExprNode::constant(p), ExprNode::var(Variable::Z)),
                             ExprNode::constant(cplx(0.0, q))));
        std::vector<cplx> moved;
        for (cplx z : grid) moved.push_back(z + cplx(0.0, shift));
        CHECK(std::abs(berkson_porta_check(G, grid) - berkson_porta_check(G, moved)) < 1e-10);
    }
}

TEST_CASE("angular limits at infinity") {
    auto a = delta_limit(E("1 - z"));
    REQUIRE(a.has_value());
    CHECK(std::abs(*a + 1.0) < 1e-6);
    auto b = delta_limit(E("2*z + 3i"));
    REQUIRE(b.has_value());
    CHECK(std::abs(*b - 2.0) < 1e-6);
    auto c = delta_limit(E("-sqrt(z)"));
    REQUIRE(c.has_value());
    CHECK(std::abs(*c) < 1e-6);
    CHECK(comp_norm_from_delta(*c, 3.0) == doctest::Approx(1.0).epsilon(1e-6));
    // z^2 / z = z has no finite limit.
    CHECK_FALSE(delta_limit(E("z^2")).has_value());
    // Rays disagree for G = i z: the limit is i, not real.
    CHECK_FALSE(delta_limit(E("i*z")).has_value());
    CHECK(angular_limit_at_infinity([](cplx z) { return z * z; }, default_ray_points()).diverges);
}

TEST_CASE("norm formula") {
    CHECK(comp_norm_from_delta(-1.0, 1.0) == doctest::Approx(std::exp(0.5)).epsilon(1e-15));
    CHECK(comp_norm_from_delta(0.0, 7.0) == 1.0);
    CHECK(comp_norm_from_delta(2.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    auto aff = norm_from_phi([](cplx z) { return std::exp(-1.0) * z + 1.0 - std::exp(-1.0); });
    REQUIRE(aff.norm.has_value());
    CHECK(std::abs(*aff.norm - std::exp(0.5)) < 1e-8);
    CHECK(std::abs(*aff.phi_prime_inf - std::exp(-1.0)) < 1e-8);
    auto tr = norm_from_phi([](cplx z) { return z + cplx(0.0, 3.0); });
    REQUIRE(tr.norm.has_value());
    CHECK(std::abs(*tr.norm - 1.0) < 1e-8);
    CHECK_FALSE(norm_from_phi([](cplx z) { return z * z; }).norm.has_value());
}

TEST_CASE("property: both norm routes agree") {
    const auto& ex = lookup("halfplane-affine");
    auto delta = delta_limit(ex.G);
    REQUIRE(delta.has_value());
    for (double t : {0.5, 1.0}) {
        auto pn = norm_from_phi([&](cplx z) { return ex.closed_form_flow->eval(z, t); });
        REQUIRE(pn.norm.has_value());
        CHECK(std::abs(comp_norm_from_delta(*delta, t) - *pn.norm) < 1e-8);
        CHECK(std::abs(*pn.norm - std::exp(t / 2.0)) < 1e-8);
    }
}

TEST_CASE("kernel dissipativity") {
    auto a = kernel_dissipativity(E("z"));
    CHECK(a.inf == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.contractive);
    CHECK(a.bounded_below);

    auto b = kernel_dissipativity(E("1 - z"));
    CHECK(b.inf > -1.0);
    CHECK(b.inf < -1.0 + 1e-3);
    CHECK_FALSE(b.contractive);
    CHECK(b.bounded_below);

    auto c = kernel_dissipativity(E("-z^2"));
    CHECK_FALSE(c.contractive);
    CHECK_FALSE(c.bounded_below);
    CHECK(c.inf < c.inf_inner);
}

TEST_CASE("group classification") {
    auto g = group_classify(E("2*z + 3i"));
    REQUIRE(g.has_value());
    CHECK(std::abs(g->p - 2.0) < 1e-10);
    CHECK(std::abs(g->q - 3.0) < 1e-10);
    cplx z(0.7, -0.4);
    for (double t : {-1.0, 0.5, 1.0})
        CHECK(std::abs(g->flow(z, t) - (z * std::exp(2.0 * t) + cplx(0.0, 1.5) * (std::exp(2.0 * t) - 1.0))) < 1e-12);

    auto tr = group_classify(E("5i"));
    REQUIRE(tr.has_value());
    CHECK(std::abs(tr->p) < 1e-12);
    CHECK(std::abs(tr->q - 5.0) < 1e-10);
    CHECK(std::abs(tr->flow(z, 2.0) - (z + cplx(0.0, 10.0))) < 1e-12);

    CHECK_FALSE(group_classify(E("1 - z")).has_value());
    CHECK_FALSE(group_classify(E("z^2")).has_value());
    CHECK_FALSE(group_classify(E("(2 + i)*z")).has_value());
}

TEST_CASE("property: group flows are invertible") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto grid = halfplane_log_grid(5, 10, 0.1, 5.0);
    REQUIRE(grid.size() == 50);
    for (int trial = 0; trial < 8; ++trial) {
        GroupParams gp{u(rng), u(rng)};
        if (trial == 0) gp.p = 0.0;
        for (double t : {0.5, 1.0, 2.0})
            for (cplx z : grid) {
                CHECK(std::abs(gp.flow(gp.flow(z, -t), t) - z) < 1e-12 * std::max(1.0, std::abs(z)));
                CHECK(std::abs(gp.flow(z, 0.0) - z) == 0.0);
            }
    }
}

TEST_CASE("property: generated flows stay in the half-plane") {
    auto grid = halfplane_log_grid(6, 6, 0.05, 5.0);
    for (const char* g : {"1 - z", "2*z + 3i", "-sqrt(z)", "-z + 2i", "1/(z + 1)"}) {
        Expr G = E(g);
        INFO(g);
        if (berkson_porta_check(G, default_bp_grid()) > 1e-9 || !delta_limit(G)) continue;
        for (double t : {0.1, 0.5, 1.0})
            for (cplx z : grid) {
                cplx w = halfplane_flow(G, z, t);
                CHECK(w.real() > 0.0);
            }
    }
    // Closed forms agree with the integrator.
    const auto& ex = lookup("halfplane-affine");
    for (cplx z : grid) CHECK(std::abs(halfplane_flow(ex.G, z, 1.0) - ex.closed_form_flow->eval(z, 1.0)) < 1e-8);
}

TEST_CASE("half-plane report") {
    std::vector<double> times{0.5, 1.0};
    auto rep = analyze_halfplane(E("1 - z"), times);
    CHECK(rep.bp_violation <= 1e-9);
    REQUIRE(rep.delta.has_value());
    REQUIRE(rep.norm_at.size() == 2);
    CHECK(rep.norm_at.at(1.0) == doctest::Approx(std::exp(0.5)).epsilon(1e-6));
    CHECK_FALSE(rep.group.has_value());
    CHECK(rep.rotated_bp.size() == 6);
    for (double th : {-0.5, -0.3, -0.1, 0.1, 0.3, 0.5}) CHECK(rep.rotated_bp.count(th) == 1);

    // No delta: no norms.
    auto sq = analyze_halfplane(E("-z^2"), times);
    CHECK_FALSE(sq.delta.has_value());
    CHECK(sq.norm_at.empty());
}
