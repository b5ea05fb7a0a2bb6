#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "semiflow/expr.hpp"
#include "semiflow/semiflow.hpp"
#include "semiflow/series.hpp"

namespace semiflow {

// Operators on H^2 of the right half-plane. No compactness tests live here:
// no composition operator on that space is compact.

/// x log-spaced on [xmin, xmax]; y takes ny/2 log-spaced magnitudes on the same
/// range with both signs (plus 0 when ny is odd).
std::vector<cplx> halfplane_log_grid(std::size_t nx, std::size_t ny, double xmin, double xmax);

/// Default 32 x 32 grid used by berkson_porta_check (x, |y| in [1e-2, 10]).
std::vector<cplx> default_bp_grid();

/// max over grid of x * du/dx - u, u = Re G, by central differences with step
/// rel_step * max(1, x). <= tol means the generation condition holds on the grid.
double berkson_porta_check(const Expr& G, std::span<const cplx> grid, double rel_step = 1e-5);

/// Default rays for angular limits at infinity: 2^k, k = 3..20, along 0 and +-pi/4.
std::vector<double> default_ray_points();

struct AngularLimit {
    std::optional<cplx> value;      // present when rays agree and tails stabilize
    std::vector<cplx> per_ray;      // extrapolated limit on each ray
    bool diverges = false;          // tail differences growing
};

/// Aitken-extrapolated limit of f(x e^{i a}) / (x e^{i a}) along the three rays.
AngularLimit angular_limit_at_infinity(const Evaluator& f, std::span<const double> ray_points,
                                       double agree_tol = 1e-6);

/// Real angular limit of G(z)/z at infinity, or none.
std::optional<double> delta_limit(const Expr& G, std::span<const double> ray_points = {});

/// e^{-delta t / 2}.
double comp_norm_from_delta(double delta, double t);

struct PhiNorm {
    std::optional<double> norm;     // phi'(inf)^{-1/2}; none flags an unbounded operator
    std::optional<double> phi_prime_inf;
};

PhiNorm norm_from_phi(const Evaluator& phi, std::span<const double> ray_points = {});

/// Logarithmic grid for kernel dissipativity: x in [1e-3, 1e4], y in {0, +-10^k}.
std::vector<cplx> default_kernel_grid();

struct KernelDissipativity {
    double inf = 0.0;               // inf of Re G(w) / Re w over the grid
    double inf_inner = 0.0;         // same over the part with Re w <= xmax / 100
    bool contractive = false;       // inf >= -tol
    bool bounded_below = false;     // inf does not keep decreasing with Re w
};

KernelDissipativity kernel_dissipativity(const Expr& G, std::span<const cplx> grid = {}, double tol = 1e-9);

struct GroupParams {
    double p = 0.0;
    double q = 0.0;
    /// phi_t(z) for real t of either sign.
    cplx flow(cplx z, double t) const;
};

/// Recognizes G = p z + i q (p, q real) by a fit at three probes and validation
/// at 20 random points; none when G is not of this form.
std::optional<GroupParams> group_classify(const Expr& G, double tol = 1e-10);

/// phi_t on the half-plane by ODE integration with the guard Re w > 0.
cplx halfplane_flow(const Expr& G, cplx z0, double t, const FlowConfig& cfg = {});

struct HalfPlaneReport {
    double bp_violation = 0.0;
    std::optional<double> delta;
    std::map<double, double> norm_at;
    KernelDissipativity kernel;
    std::optional<GroupParams> group;
    std::map<double, double> rotated_bp;  // theta -> violation for G e^{-i theta}
};

HalfPlaneReport analyze_halfplane(const Expr& G, std::span<const double> times);

} // namespace semiflow
