#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "semiflow/expr.hpp"

namespace semiflow {

struct FlowConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = 0.1;
    double boundary_guard = 1.0;   // accepted states satisfy |w| < boundary_guard
    int max_halvings = 60;
    std::size_t max_steps = 2'000'000;

    void validate() const;
};

class FlowError : public std::runtime_error {
public:
    enum class Kind { StepUnderflow, GuardViolation, StepLimit };
    FlowError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Region an integrated trajectory must stay in.
using DomainGuard = std::function<bool(cplx)>;

/// Dormand-Prince 5(4) with local extrapolation for w' = rhs(w), w(0) = z0,
/// integrated to time t (either sign). Steps whose result leaves `inside`, or
/// whose stages hit a singularity of rhs, are halved; after cfg.max_halvings
/// consecutive halvings the call fails with GuardViolation.
cplx integrate(const std::function<cplx(cplx)>& rhs, cplx z0, double t, const FlowConfig& cfg,
               const DomainGuard& inside);

/// phi_t(z0) for the generator G on the disc. t == 0 returns z0 without
/// integrating; t < 0 runs the flow backwards (meaningful for groups).
cplx flow(const Expr& G, cplx z0, double t, const FlowConfig& cfg = {});

/// max over grid of |phi_{s+t}(z) - phi_s(phi_t(z))|.
double semiflow_defect(const Expr& G, std::span<const cplx> grid, double s, double t,
                       const FlowConfig& cfg = {});

struct DenjoyWolff {
    cplx point{};
    bool boundary = false;
    bool determined = false;
    std::string method;   // "newton", "newton-boundary", "iteration", or "indeterminate"
};

/// Attracting fixed point of the semiflow: an interior zero of G found by
/// Newton's method, otherwise the cluster point of z -> phi_1(z) from 0.
/// Boundary points are returned normalized to |point| = 1.
DenjoyWolff denjoy_wolff(const Expr& G, const FlowConfig& cfg = {});

inline constexpr double kBoundaryDetection = 1.0 - 1e-6;

struct SupNorm {
    double value = 0.0;
    std::size_t failures = 0;
};

/// max |phi_t(z)| over M points on |z| = 1 - 1e-6.
SupNorm sup_norm_flow(const Expr& G, double t, std::size_t samples, const FlowConfig& cfg = {});

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelCheck {
    cplx h_at_zero{};
    double roundtrip_defect = 0.0;
    bool in_class = false;   // h(0) = 0, Re c >= 0, and the round trip holds
};

/// phi_t = h^{-1}(e^{-ct} h(z)) with h conformal on the disc.
struct SemiflowModel {
    Expr h;
    Expr h_inv;
    cplx c{};

    /// Throws ModelError when Re c < 0 or h_inv(h(z)) != z on a probe grid.
    static SemiflowModel make(Expr h, Expr h_inv, cplx c);

    ModelCheck check() const;
};

/// Closed-form model flow; t may be complex. Throws ModelError if
/// h(result) does not reproduce e^{-ct} h(z), i.e. the point left the image of h.
cplx model_flow(const SemiflowModel& m, cplx z, cplx t);

/// max over grid of |phi_t(z) - model_flow(m, z, t)|.
double model_defect(const Expr& G, const SemiflowModel& m, std::span<const cplx> grid, double t,
                    const FlowConfig& cfg = {});

struct FlowAnalysis {
    DenjoyWolff dw;
    std::map<double, double> sup_norm_curve;
    double semiflow_defect = 0.0;
};

FlowAnalysis analyze_flow(const Expr& G, std::span<const double> times, std::size_t samples,
                          std::span<const cplx> grid, const FlowConfig& cfg = {});

/// Polar grid of radii (k/nr)*rmax, k = 1..nr, times na equispaced angles.
std::vector<cplx> disc_grid(std::size_t radii, std::size_t angles, double rmax);

} // namespace semiflow
