#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "semiflow/expr.hpp"
#include "semiflow/semiflow.hpp"

namespace semiflow {

inline constexpr double kSignTolerance = 1e-9;

/// Samples of conj(z) G(z) on |z| = radius. radius == 1 takes the values on
/// the unit circle itself; samples where G is singular, non-finite or too
/// large for a sign test (|conj(z) G(z)| > 1e6) are dropped and their angles
/// kept in `excluded`.
struct BoundaryProfile {
    double radius = 1.0;
    std::vector<double> thetas;
    std::vector<cplx> values;
    std::vector<double> excluded;
};

BoundaryProfile boundary_profile(const Expr& G, std::size_t samples = 4096, double radius = 1.0);

struct SemigroupVerdict {
    bool generates = false;
    double s0 = 0.0;   // sup Re conj(z) G(z) over the profile
};

SemigroupVerdict classify_semigroup(const BoundaryProfile& profile, double tol = kSignTolerance);

/// Largest half-angle theta (1e-3 bisection resolution) with
/// Re(e^{i alpha} conj(z) G(z)) <= tol for alpha in {-theta, 0, theta};
/// 0 when no positive angle qualifies or G does not generate.
double sector_angle(const BoundaryProfile& profile, double tol = kSignTolerance);
double sector_angle(const Expr& G, double tol = kSignTolerance);

/// Feasibility test used by the bisection in sector_angle.
bool sector_feasible(const BoundaryProfile& profile, double theta, double tol = kSignTolerance);

/// max |Re conj(z) G(z)| <= tol over the profile, which must have no excluded samples.
bool is_group(const BoundaryProfile& profile, double tol = kSignTolerance);

struct AnnulusCheck {
    bool holds = false;
    double delta = 0.0;
    double eps = 0.0;
    double max_re = 0.0;        // sup of Re conj(z) G(z) over the annulus grid
    std::size_t excluded = 0;
};

/// Re(conj(z) G(z)) <= -delta + tol on a radial x angular grid of 1-eps < |z| <= 1
/// (the boundary row uses the radial-limit convention of boundary_profile).
AnnulusCheck immediate_compactness_sufficient(const Expr& G, double delta, double eps,
                                              std::size_t radial = 32, std::size_t angular = 1024,
                                              double tol = kSignTolerance);

enum class Growth { Diverges, Bounded, Inconclusive };
std::string to_string(Growth g);

struct RayDiagnostic {
    double approach_angle = 0.0;   // 0 for the radius, +-pi/4 for the oblique rays
    std::vector<double> eps;
    std::vector<double> q;         // |G(z_k)/(z_k - xi)|, NaN where evaluation failed
    Growth verdict = Growth::Inconclusive;
};

struct CompactCriterion {
    cplx xi{};
    RayDiagnostic radial;
    RayDiagnostic oblique_plus;
    RayDiagnostic oblique_minus;
};

struct GrowthOptions {
    std::size_t levels = 40;       // eps_k = 2^{-k}, k = 1..levels
    double threshold = 1e4;
    std::size_t tail = 10;
};

Growth classify_growth(const std::vector<double>& q, const GrowthOptions& opts = {});

CompactCriterion compact_criterion(const Expr& G, cplx xi, const GrowthOptions& opts = {});

/// 64 equispaced roots of unity plus `extra`.
std::vector<CompactCriterion> compact_criterion_scan(const Expr& G, const std::vector<cplx>& extra = {},
                                                     std::size_t roots = 64,
                                                     const GrowthOptions& opts = {});

struct BPDecomposition {
    cplx alpha{};
    double min_re_F = 0.0;
    cplx argmin{};
    std::size_t excluded = 0;
};

/// F(z) = G(z) / ((alpha - z)(1 - conj(alpha) z)) on a polar disc grid.
BPDecomposition bp_decomposition(const Expr& G, cplx alpha, std::size_t radial = 64,
                                 std::size_t angular = 256);

struct ClassificationOptions {
    std::size_t samples = 4096;
    double radius = 1.0;
    double tol = kSignTolerance;
    std::vector<cplx> extra_xi;
    FlowConfig flow;
};

struct ClassificationReport {
    double s0 = 0.0;
    bool generates_semigroup = false;
    bool is_group = false;
    double theta_max = 0.0;
    bool imm_compact_sufficient = false;
    std::optional<AnnulusCheck> imm_witness;
    std::vector<CompactCriterion> compact_criterion;
    std::optional<double> bp_min_reF;
    std::optional<DenjoyWolff> dw;
    BoundaryProfile profile;
};

ClassificationReport classify(const Expr& G, const ClassificationOptions& opts = {});

} // namespace semiflow
