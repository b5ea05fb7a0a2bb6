#include "doctest.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "semiflow/operator_matrix.hpp"
#include "semiflow/registry.hpp"
#include "semiflow/semiflow.hpp"

using namespace semiflow;

namespace {

Expr E(const char* s) { return Expr::parse(s); }

WeightSequence hardy(std::size_t N) { return WeightSequence::make(WeightKind::Hardy, N); }

Evaluator closed_flow(const char* name, double t) {
    const Expr& f = *lookup(name).closed_form_flow;
    return [&f, t](cplx z) { return f.eval(z, t); };
}

double sigma_sum(const OperatorMatrix& T) {
    auto s = singular_values(T);
    return std::accumulate(s.begin(), s.end(), 0.0);
}

} // namespace

TEST_CASE("weights") {
    auto d = WeightSequence::make(WeightKind::Dirichlet, 4);
    CHECK(d.values == std::vector<double>{1.0, 1.0, std::sqrt(2.0), std::sqrt(3.0), 2.0});
    auto b = WeightSequence::make(WeightKind::Bergman, 3);
    CHECK(b.values[3] == doctest::Approx(0.5));
    CHECK(hardy(5).order() == 5);
    CHECK(parse_weight_kind("dirichlet") == WeightKind::Dirichlet);
    CHECK(to_string(WeightKind::Bergman) == "bergman");
    CHECK_THROWS_AS(parse_weight_kind("sobolev"), std::invalid_argument);
    CHECK_THROWS_AS(WeightSequence::custom({1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("composition matrices of simple maps") {
    const std::size_t N = 32;
    const double t = 0.7;
    auto D = composition_matrix([t](cplx z) { return std::exp(-t) * z; }, hardy(N), N);
    for (std::size_t m = 0; m <= N; ++m)
        for (std::size_t n = 0; n <= N; ++n)
            CHECK(std::abs(D.entries(m, n) - (m == n ? std::exp(-t * n) : 0.0)) < 1e-12);
    CHECK(D.entry_error >= 0.0);
    CHECK(std::isfinite(D.entry_error));

    const cplx c(0.3, 0.4);
    auto C = composition_matrix([c](cplx) { return c; }, hardy(N), N);
    for (std::size_t n = 0; n <= N; ++n) {
        CHECK(std::abs(C.entries(0, n) - std::pow(c, double(n))) < 1e-13);
        for (std::size_t m = 1; m <= N; ++m) CHECK(std::abs(C.entries(m, n)) < 1e-13);
    }

    // Weighted basis: entry (m, n) picks up beta_m / beta_n.
    auto dir = WeightSequence::make(WeightKind::Dirichlet, 8);
    auto S = composition_matrix([](cplx z) { return z * z; }, dir, 8);
    CHECK(std::abs(S.entries(4, 2) - dir.values[4] / dir.values[2]) < 1e-13);
}

TEST_CASE("characterization defects") {
    auto T = composition_matrix(closed_flow("mobius-group", 0.5), hardy(32), 32);
    CHECK(characterization_defect(T) < 1e-8);
    CHECK(characterization_defect(T) < 10.0 * std::max(T.entry_error, 1e-12));

    Eigen::MatrixXcd D = Eigen::MatrixXcd::Identity(9, 9);
    CHECK(characterization_defect(OperatorMatrix::from_entries(D, hardy(8))) == 0.0);
    D(2, 2) = 2.0;
    CHECK(characterization_defect(OperatorMatrix::from_entries(D, hardy(8))) >= 1.0);

    CHECK(weighted_characterization_defect(T) < 1e-8);
    Eigen::MatrixXcd Z = T.entries;
    Z.col(0).setZero();
    CHECK_THROWS_AS(weighted_characterization_defect(OperatorMatrix::from_entries(Z, hardy(32))), std::domain_error);

    // Every flow and static map in the registry, on two weights.
    for (auto kind : {WeightKind::Hardy, WeightKind::Dirichlet}) {
        auto beta = WeightSequence::make(kind, 24);
        for (const auto& ex : builtin_examples()) {
            if (ex.space != Space::Disc) continue;
            Evaluator phi = ex.is_static() ? Evaluator([&ex](cplx z) { return ex.static_map(z); })
                                           : Evaluator([&ex](cplx z) { return flow(ex.G, z, 0.5); });
            auto M = composition_matrix(phi, beta, 24);
            INFO(ex.name);
            CHECK(characterization_defect(M) < 1e-7);
        }
    }
}

TEST_CASE("generator matrices") {
    const std::size_t N = 16;
    auto A = generator_matrix(E("-z"), hardy(N), N);
    for (std::size_t m = 0; m <= N; ++m)
        for (std::size_t n = 0; n <= N; ++n) CHECK(std::abs(A.entries(m, n) - (m == n ? -double(n) : 0.0)) < 1e-12);

    auto B = generator_matrix(E("1"), hardy(N), N);
    for (std::size_t n = 1; n <= N; ++n) CHECK(std::abs(B.entries(n - 1, n) - double(n)) < 1e-12);
    CHECK(std::abs(B.entries.sum() - double(N * (N + 1) / 2)) < 1e-10);

    auto M = generator_matrix(E("1 - z^2"), hardy(N), N);
    for (std::size_t n = 1; n < N; ++n) {
        CHECK(std::abs(M.entries(n - 1, n) - double(n)) < 1e-12);
        CHECK(std::abs(M.entries(n + 1, n) + double(n)) < 1e-12);
        CHECK(std::abs(M.entries(n, n)) < 1e-12);
    }
}

TEST_CASE("matrix exponential against composition matrices") {
    auto beta = hardy(64);
    auto C = composition_matrix([](cplx z) { return std::exp(-1.0) * z; }, beta, 64);
    auto A = generator_matrix(E("-z"), beta, 64);
    CHECK(expm_compare(A, 1.0, C, 32) < 1e-10);
    auto I = OperatorMatrix::from_entries(Eigen::MatrixXcd::Identity(65, 65), beta);
    CHECK(expm_compare(A, 0.0, I, 32) == 0.0);
    auto Iphi = composition_matrix([](cplx z) { return z; }, beta, 64);
    CHECK(expm_compare(A, 0.0, Iphi, 32) < 1e-14);
    CHECK_THROWS_AS(expm_compare(A, 1.0, C, 40), std::invalid_argument);

    auto C96 = composition_matrix(closed_flow("mobius-group", 0.25), hardy(96), 96);
    auto A96 = generator_matrix(E("1 - z^2"), hardy(96), 96);
    CHECK(expm_compare(A96, 0.25, C96, 24) < 1e-4);
}

TEST_CASE("property: expm error decreases as N doubles") {
    struct Case {
        const char* name;
        const char* G;
    };
    for (Case c : {Case{"linear-contraction", "-z"}, Case{"mobius-group", "1 - z^2"}, Case{"cubic", "z*(z^2 - 2)"}}) {
        double prev = INFINITY;
        for (std::size_t N : {48u, 96u, 192u}) {
            auto beta = hardy(N);
            double d = expm_compare(generator_matrix(E(c.G), beta, N), 0.25,
                                    composition_matrix(closed_flow(c.name, 0.25), beta, N), 24);
            INFO(c.G << " N=" << N << " err=" << d);
            CHECK(d <= prev + 1e-13);
            prev = d;
        }
    }
}

TEST_CASE("singular values") {
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(6, 6);
    for (int n = 0; n < 6; ++n) D(n, n) = std::exp(-double(n));
    auto s = singular_values(OperatorMatrix::from_entries(D, hardy(5)));
    for (int k = 0; k < 6; ++k) CHECK(std::abs(s[k] - std::exp(-double(k))) < 1e-14);
    auto one = singular_values(OperatorMatrix::from_entries(Eigen::MatrixXcd::Identity(5, 5), hardy(4)));
    for (double v : one) CHECK(v == doctest::Approx(1.0));

    auto P = composition_matrix(closed_flow("parabolic-square", 1.0), hardy(64), 64);
    auto sp = singular_values(P);
    CHECK(sp.front() >= 1.0 - 1e-3);
    CHECK(std::is_sorted(sp.rbegin(), sp.rend()));
}

TEST_CASE("Hilbert-Schmidt norms") {
    auto H = composition_matrix([](cplx z) { return 0.5 * z; }, hardy(64), 64);
    CHECK(std::abs(hs_norm_matrix(H) - std::sqrt(4.0 / 3.0)) < 1e-10);
    const cplx c(0.3, -0.4);
    auto K = composition_matrix([c](cplx) { return c; }, hardy(64), 64);
    CHECK(std::abs(hs_norm_matrix(K) - 1.0 / std::sqrt(1.0 - std::norm(c))) < 1e-10);
    auto I = OperatorMatrix::from_entries(Eigen::MatrixXcd::Identity(65, 65), hardy(64));
    CHECK(hs_norm_matrix(I) == doctest::Approx(std::sqrt(65.0)));

    auto hi = hs_integral_hardy([](cplx z) { return 0.5 * z; });
    CHECK_FALSE(hi.diverges);
    CHECK(std::abs(hi.value - 4.0 / 3.0) < 1e-6);
    CHECK(std::abs(hs_norm_matrix(H) * hs_norm_matrix(H) - hi.value) < 1e-6);

    // Partial sums of sum_n ||phi^n||^2 from independently extracted powers.
    Evaluator phi = closed_flow("cubic", 0.5);
    auto T = composition_matrix(phi, hardy(32), 32);
    double partial = 0.0;
    for (unsigned n = 0; n <= 32; ++n) {
        auto p = taylor_from_samples([&](cplx z) { return std::pow(phi(z), double(n)); }, 32, 0.98, 4096);
        for (cplx a : p.coeffs) partial += std::norm(a);
    }
    CHECK(std::abs(hs_norm_matrix(T) * hs_norm_matrix(T) - partial) < 10.0 * std::max(T.entry_error, 1e-10));

    auto lotto = lookup("lotto").static_map;
    auto h1 = hs_integral_hardy([&](cplx z) { return lotto(z); });
    CHECK(h1.diverges);
    CHECK_FALSE(h1.reason.empty());
    auto h2 = hs_integral_hardy([&](cplx z) { return lotto(lotto(z)); });
    CHECK_FALSE(h2.diverges);
    for (const auto& r : h2.refinements) CHECK(std::abs(r.value - r.value_refined) < 1e-3 * r.value_refined);

    auto id = hs_integral_hardy([](cplx z) { return z; });
    CHECK(id.diverges);
}

TEST_CASE("trace-class flag") {
    CHECK(trace_class_flag([](cplx z) { return 0.5 * z; }).flag);
    Expr pole = E("2*z/(z - 1)");
    CHECK(trace_class_flag([&](cplx z) { return flow(pole, z, 0.5); }).flag);
    CHECK_FALSE(trace_class_flag(closed_flow("parabolic-square", 1.0)).flag);
    CHECK_FALSE(trace_class_flag(closed_flow("mobius-group", 0.5)).flag);
}

TEST_CASE("property: norm growth and singular value sums in N") {
    // sigma_max is non-decreasing in N.
    for (const char* name : {"cubic", "parabolic-square", "mobius-group"}) {
        double prev = 0.0;
        for (std::size_t N : {16u, 32u, 64u}) {
            double s = singular_values(composition_matrix(closed_flow(name, 0.5), hardy(N), N)).front();
            CHECK(s >= prev - 1e-9);
            prev = s;
        }
    }
    // Trace-class examples stabilize; the parabolic flow keeps growing.
    for (const char* name : {"linear-contraction", "cubic"}) {
        double a = sigma_sum(composition_matrix(closed_flow(name, 0.5), hardy(64), 64));
        double b = sigma_sum(composition_matrix(closed_flow(name, 0.5), hardy(128), 128));
        CHECK(std::abs(b - a) < 1e-3 * b);
    }
    double a = sigma_sum(composition_matrix(closed_flow("parabolic-square", 1.0), hardy(64), 64));
    double b = sigma_sum(composition_matrix(closed_flow("parabolic-square", 1.0), hardy(128), 128));
    CHECK(b > a * (1.0 + 1e-2));
}

TEST_CASE("csv output") {
    Eigen::MatrixXcd M(2, 2);
    M << cplx(1, 2), cplx(3, 4), cplx(5, 6), cplx(7, 8);
    std::ostringstream os;
    write_matrix_csv(os, OperatorMatrix::from_entries(M, hardy(1)));
    CHECK(os.str() == "c0_re,c0_im,c1_re,c1_im\n1,2,3,4\n5,6,7,8\n");
    std::ostringstream sp;
    write_spectrum_csv(sp, {1.0, 0.5});
    CHECK(sp.str() == "k,sigma\n0,1\n1,0.5\n");
}
