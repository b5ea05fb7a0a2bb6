#include "semiflow/semiflow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "semiflow/parallel.hpp"
#include "semiflow/series.hpp"

namespace semiflow {

void FlowConfig::validate() const {
    if (!(abs_tol > 0.0 && rel_tol > 0.0)) throw std::invalid_argument("flow tolerances must be positive");
    if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
    if (!(boundary_guard > 0.0 && boundary_guard <= 1.0))
        throw std::invalid_argument("boundary_guard must lie in (0,1]");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

} // namespace

cplx integrate(const std::function<cplx(cplx)>& rhs, cplx z0, double t, const FlowConfig& cfg,
               const DomainGuard& inside) {
    if (t == 0.0) return z0;
    cfg.validate();
    if (!inside(z0)) throw FlowError(FlowError::Kind::GuardViolation, "initial point outside the domain");

    const double dir = t > 0.0 ? 1.0 : -1.0;
    const double total = std::abs(t);
    cplx y = z0;
    cplx k1 = rhs(y);
    if (!finite(k1)) throw FlowError(FlowError::Kind::GuardViolation, "generator not finite at initial point");

    double h;
    {
        double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y);
        double d0 = std::abs(y) / sc, d1 = std::abs(k1) / sc;
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min({h, cfg.max_step, total});
    }

    double elapsed = 0.0;
    int halvings = 0;
    bool guard_hit = false;
    std::size_t steps = 0;
    while (elapsed < total) {
        if (++steps > cfg.max_steps) throw FlowError(FlowError::Kind::StepLimit, "step limit exceeded");
        bool last = false;
        // A remainder below rounding level of the horizon is absorbed into this step.
        if (elapsed + h >= total * (1.0 - 1e-14)) {
            h = total - elapsed;
            last = true;
        }
        const double hs = dir * h;

        cplx y_new, k7, err;
        bool ok = true;
        try {
            cplx k2 = rhs(y + hs * (a21 * k1));
            cplx k3 = rhs(y + hs * (a31 * k1 + a32 * k2));
            cplx k4 = rhs(y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
            cplx k5 = rhs(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            cplx k6 = rhs(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            y_new = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            if (!finite(y_new) || !inside(y_new)) {
                ok = false;
            } else {
                k7 = rhs(y_new);
                err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
                ok = finite(k7) && finite(err);
            }
        } catch (const EvalError&) {
            ok = false;
        }
        if (!ok) {
            guard_hit = true;
            if (++halvings > cfg.max_halvings)
                throw FlowError(FlowError::Kind::GuardViolation, "trajectory left the domain after repeated halving");
            h *= 0.5;
            continue;
        }

        double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y), std::abs(y_new));
        double e = std::abs(err) / sc;
        if (e <= 1.0) {
            elapsed = last ? total : elapsed + h;
            y = y_new;
            if (last) break;
            k1 = k7;
            guard_hit = halvings > 0;
            halvings = 0;
            double fac = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
            h = std::min(h * fac, cfg.max_step);
        } else {
            h *= std::clamp(0.9 * std::pow(e, -0.2), 0.2, 1.0);
        }
        if (h < 1e-15 * std::max(1.0, total)) {
            // Pressed against the guard the step collapses before the halving cap.
            if (guard_hit)
                throw FlowError(FlowError::Kind::GuardViolation, "trajectory pressed against the domain boundary");
            throw FlowError(FlowError::Kind::StepUnderflow, "step size underflow");
        }
    }
    return y;
}

cplx flow(const Expr& G, cplx z0, double t, const FlowConfig& cfg) {
    if (t == 0.0) return z0;
    const double guard = cfg.boundary_guard;
    return integrate([&G](cplx w) { return G(w); }, z0, t, cfg,
                     [guard](cplx w) { return std::abs(w) < guard; });
}

double semiflow_defect(const Expr& G, std::span<const cplx> grid, double s, double t, const FlowConfig& cfg) {
    std::vector<double> d(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t i) {
        cplx z = grid[i];
        cplx joint = flow(G, z, s + t, cfg);
        cplx composed = flow(G, flow(G, z, t, cfg), s, cfg);
        d[i] = std::abs(joint - composed);
    });
    return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

namespace {

cplx derivative(const Expr& G, cplx z) {
    const double h = 1e-7;
    return (G(z + h) - G(z - h)) / (2.0 * h);
}

struct NewtonResult {
    cplx z;
    bool converged = false;
};

NewtonResult newton(const Expr& G, cplx z) {
    for (int it = 0; it < 200; ++it) {
        cplx g, dg;
        try {
            g = G(z);
            if (std::abs(g) < 1e-15) return {z, true};
            dg = derivative(G, z);
        } catch (const EvalError&) {
            return {z, false};
        }
        if (std::abs(dg) < 1e-300 || !finite(dg)) return {z, false};
        cplx step = g / dg;
        z -= step;
        if (!finite(z) || std::abs(z) > 1.5) return {z, false};
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) {
            try {
                return {z, std::abs(G(z)) < 1e-10};
            } catch (const EvalError&) {
                return {z, false};
            }
        }
    }
    return {z, false};
}

} // namespace

DenjoyWolff denjoy_wolff(const Expr& G, const FlowConfig& cfg) {
    std::vector<cplx> seeds{0.0};
    for (int k = 0; k < 8; ++k) seeds.push_back(std::polar(0.5, 2.0 * std::numbers::pi * k / 8.0));

    std::vector<cplx> boundary;
    for (cplx s : seeds) {
        NewtonResult r = newton(G, s);
        if (!r.converged) continue;
        double m = std::abs(r.z);
        if (m < kBoundaryDetection) return {r.z, false, true, "newton"};
        if (m <= 1.0 + 1e-6) boundary.push_back(r.z / m);
    }

    if (!boundary.empty()) {
        // The attracting boundary fixed point has real angular derivative G'(tau) <= 0.
        double best = std::numeric_limits<double>::infinity();
        cplx pick{};
        for (cplx tau : boundary) {
            double d;
            try {
                d = derivative(G, tau * (1.0 - 1e-5)).real();
            } catch (const EvalError&) {
                continue;
            }
            if (d < best) {
                best = d;
                pick = tau;
            }
        }
        if (best <= 1e-3) return {pick, true, true, "newton-boundary"};
    }

    cplx z = 0.0;
    std::vector<double> moduli;
    try {
        for (int k = 0; k < 200; ++k) {
            cplx next = flow(G, z, 1.0, cfg);
            double delta = std::abs(next - z);
            z = next;
            moduli.push_back(std::abs(z));
            if (delta < 1e-12) {
                if (std::abs(z) < kBoundaryDetection) return {z, false, true, "iteration"};
                return {z / std::abs(z), true, true, "iteration"};
            }
        }
    } catch (const std::exception&) {
        return {z, false, false, "indeterminate"};
    }
    if (std::abs(z) >= kBoundaryDetection) return {z / std::abs(z), true, true, "iteration"};
    // Slow (parabolic) approach to the circle: moduli still increasing on the tail.
    bool increasing = moduli.size() >= 20 && moduli.back() > 0.9;
    for (std::size_t i = moduli.size() - std::min<std::size_t>(moduli.size(), 20) + 1; increasing && i < moduli.size(); ++i)
        increasing = moduli[i] > moduli[i - 1];
    if (increasing) return {z / std::abs(z), true, true, "iteration"};
    return {z, false, false, "indeterminate"};
}

SupNorm sup_norm_flow(const Expr& G, double t, std::size_t samples, const FlowConfig& cfg) {
    std::vector<double> mods(samples, -1.0);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(samples);
    parallel_for(samples, [&](std::size_t j) {
        try {
            mods[j] = std::abs(flow(G, std::polar(kNearBoundaryRadius, step * static_cast<double>(j)), t, cfg));
        } catch (const FlowError&) {
        } catch (const EvalError&) {
        }
    });
    SupNorm out;
    for (double m : mods) {
        if (m < 0.0) ++out.failures;
        else out.value = std::max(out.value, m);
    }
    return out;
}

SemiflowModel SemiflowModel::make(Expr h, Expr h_inv, cplx c) {
    if (c.real() < 0.0) throw ModelError("model parameter c must satisfy Re c >= 0");
    SemiflowModel m{std::move(h), std::move(h_inv), c};
    double defect = m.check().roundtrip_defect;
    if (!(defect <= 1e-8)) throw ModelError("h_inv(h(z)) != z on the probe grid");
    return m;
}

ModelCheck SemiflowModel::check() const {
    ModelCheck out;
    out.h_at_zero = h(0.0);
    for (cplx z : disc_grid(4, 8, 0.9)) {
        double d;
        try {
            d = std::abs(h_inv(h(z)) - z);
        } catch (const EvalError&) {
            d = std::numeric_limits<double>::infinity();
        }
        out.roundtrip_defect = std::max(out.roundtrip_defect, d);
    }
    out.in_class = std::abs(out.h_at_zero) <= 1e-12 && c.real() >= 0.0 && out.roundtrip_defect <= 1e-8;
    return out;
}

cplx model_flow(const SemiflowModel& m, cplx z, cplx t) {
    cplx w = std::exp(-m.c * t) * m.h(z);
    cplx result = m.h_inv(w);
    if (!(std::abs(m.h(result) - w) <= 1e-8 * std::max(1.0, std::abs(w))))
        throw ModelError("model trajectory left the image of h");
    return result;
}

double model_defect(const Expr& G, const SemiflowModel& m, std::span<const cplx> grid, double t,
                    const FlowConfig& cfg) {
    std::vector<double> d(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t i) {
        d[i] = std::abs(flow(G, grid[i], t, cfg) - model_flow(m, grid[i], t));
    });
    return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

FlowAnalysis analyze_flow(const Expr& G, std::span<const double> times, std::size_t samples,
                          std::span<const cplx> grid, const FlowConfig& cfg) {
    FlowAnalysis out;
    out.dw = denjoy_wolff(G, cfg);
    for (double t : times) out.sup_norm_curve[t] = sup_norm_flow(G, t, samples, cfg).value;
    out.semiflow_defect = semiflow_defect(G, grid, 0.5, 0.5, cfg);
    return out;
}

std::vector<cplx> disc_grid(std::size_t radii, std::size_t angles, double rmax) {
    std::vector<cplx> grid;
    grid.reserve(radii * angles);
    for (std::size_t k = 1; k <= radii; ++k) {
        double r = rmax * static_cast<double>(k) / static_cast<double>(radii);
        for (std::size_t j = 0; j < angles; ++j) {
            // Offset angles between rings so no ray is sampled twice.
            double a = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.5 * static_cast<double>(k % 2)) /
                       static_cast<double>(angles);
            grid.push_back(std::polar(r, a));
        }
    }
    return grid;
}

} // namespace semiflow
