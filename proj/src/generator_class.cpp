#include "semiflow/generator_class.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "semiflow/parallel.hpp"

namespace semiflow {

namespace {

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Past this magnitude the rounding error in Re conj(z) G(z) exceeds the sign
// tolerance, so such a sample says nothing about the sign and is excluded.
constexpr double kResolvableMagnitude = 1e6;

bool resolvable(cplx v) { return finite(v) && std::abs(v) <= kResolvableMagnitude; }

double sup_rotated_real(const BoundaryProfile& p, double alpha) {
    const cplx rot = std::polar(1.0, alpha);
    double s = -std::numeric_limits<double>::infinity();
    for (const cplx& v : p.values) s = std::max(s, (rot * v).real());
    return s;
}

} // namespace

BoundaryProfile boundary_profile(const Expr& G, std::size_t samples, double radius) {
    if (!(radius > 0.0 && radius <= 1.0)) throw std::invalid_argument("profile radius must lie in (0,1]");
    std::vector<cplx> raw(samples);
    std::vector<char> ok(samples, 0);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(samples);
    parallel_for(samples, [&](std::size_t j) {
        cplx z = std::polar(radius, step * static_cast<double>(j));
        try {
            cplx v = std::conj(z) * G(z);
            if (resolvable(v)) {
                raw[j] = v;
                ok[j] = 1;
            }
        } catch (const EvalError&) {
        }
    });
    BoundaryProfile p;
    p.radius = radius;
    for (std::size_t j = 0; j < samples; ++j) {
        double theta = step * static_cast<double>(j);
        if (ok[j]) {
            p.thetas.push_back(theta);
            p.values.push_back(raw[j]);
        } else {
            p.excluded.push_back(theta);
        }
    }
    return p;
}

SemigroupVerdict classify_semigroup(const BoundaryProfile& profile, double tol) {
    if (profile.values.empty()) throw std::invalid_argument("empty boundary profile");
    SemigroupVerdict v;
    v.s0 = sup_rotated_real(profile, 0.0);
    v.generates = v.s0 <= tol;
    return v;
}

bool sector_feasible(const BoundaryProfile& profile, double theta, double tol) {
    return std::max({sup_rotated_real(profile, 0.0), sup_rotated_real(profile, theta),
                     sup_rotated_real(profile, -theta)}) <= tol;
}

double sector_angle(const BoundaryProfile& profile, double tol) {
    if (!classify_semigroup(profile, tol).generates) return 0.0;
    double lo = 0.0, hi = std::numbers::pi / 2.0;
    while (hi - lo > 1e-3) {
        double mid = 0.5 * (lo + hi);
        if (sector_feasible(profile, mid, tol)) lo = mid;
        else hi = mid;
    }
    // An angle below the resolution is not distinguishable from 0.
    return lo < 1e-3 ? 0.0 : lo;
}

double sector_angle(const Expr& G, double tol) { return sector_angle(boundary_profile(G), tol); }

bool is_group(const BoundaryProfile& profile, double tol) {
    if (profile.values.empty()) throw std::invalid_argument("empty boundary profile");
    // Group generators are quadratic polynomials and bounded on the circle; an
    // excluded sample points at boundary mass that an a.e. test cannot see.
    if (!profile.excluded.empty()) return false;
    double m = 0.0;
    for (const cplx& v : profile.values) m = std::max(m, std::abs(v.real()));
    return m <= tol;
}

AnnulusCheck immediate_compactness_sufficient(const Expr& G, double delta, double eps, std::size_t radial,
                                              std::size_t angular, double tol) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
    AnnulusCheck out;
    out.delta = delta;
    out.eps = eps;
    out.max_re = -std::numeric_limits<double>::infinity();
    // Rows r_i = 1 - eps + eps*i/radial, i = 1..radial; the last row is the circle.
    std::vector<double> row_max(radial, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> row_excluded(radial, 0);
    parallel_for(radial, [&](std::size_t i) {
        double r = 1.0 - eps + eps * static_cast<double>(i + 1) / static_cast<double>(radial);
        if (i + 1 == radial) r = 1.0;
        for (std::size_t j = 0; j < angular; ++j) {
            cplx z = std::polar(r, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(angular));
            try {
                cplx v = std::conj(z) * G(z);
                if (!resolvable(v)) {
                    ++row_excluded[i];
                    continue;
                }
                row_max[i] = std::max(row_max[i], v.real());
            } catch (const EvalError&) {
                ++row_excluded[i];
            }
        }
    });
    for (std::size_t i = 0; i < radial; ++i) {
        out.max_re = std::max(out.max_re, row_max[i]);
        out.excluded += row_excluded[i];
    }
    out.holds = out.max_re <= -delta + tol;
    return out;
}

std::string to_string(Growth g) {
    switch (g) {
    case Growth::Diverges: return "diverges";
    case Growth::Bounded: return "bounded";
    case Growth::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

Growth classify_growth(const std::vector<double>& q, const GrowthOptions& opts) {
    std::vector<double> tail;
    for (std::size_t k = q.size() > opts.tail ? q.size() - opts.tail : 0; k < q.size(); ++k)
        if (std::isfinite(q[k])) tail.push_back(q[k]);
    if (tail.size() < 5) return Growth::Inconclusive;

    std::vector<double> d;
    for (std::size_t k = 1; k < tail.size(); ++k) d.push_back(tail[k] - tail[k - 1]);
    const double last = tail.back();

    bool increasing = std::all_of(d.begin(), d.end(), [](double x) { return x > 0.0; });
    // Beyond the threshold, or growing without slowing down (e.g. |log eps|).
    if (increasing && (last > opts.threshold || d.back() >= 0.5 * d.front())) return Growth::Diverges;

    double scale = std::max(1.0, std::abs(last));
    double dmax = 0.0;
    for (std::size_t k = d.size() >= 4 ? d.size() - 4 : 0; k < d.size(); ++k) dmax = std::max(dmax, std::abs(d[k]));
    if (dmax <= 1e-6 * scale) return Growth::Bounded;
    bool decaying = true;
    for (std::size_t k = 1; k < d.size(); ++k)
        if (!(std::abs(d[k]) <= 0.8 * std::abs(d[k - 1]))) decaying = false;
    if (decaying && std::abs(d.back()) <= 1e-3 * scale) return Growth::Bounded;
    return Growth::Inconclusive;
}

namespace {

RayDiagnostic probe_ray(const Expr& G, cplx xi, double angle, const GrowthOptions& opts) {
    RayDiagnostic ray;
    ray.approach_angle = angle;
    const cplx dir = std::polar(1.0, angle);
    for (std::size_t k = 1; k <= opts.levels; ++k) {
        double e = std::ldexp(1.0, -static_cast<int>(k));
        cplx z = xi * (1.0 - e * dir);
        double q = std::numeric_limits<double>::quiet_NaN();
        try {
            cplx g = G(z);
            if (finite(g)) q = std::abs(g) / std::abs(z - xi);
        } catch (const EvalError&) {
        }
        ray.eps.push_back(e);
        ray.q.push_back(q);
    }
    ray.verdict = classify_growth(ray.q, opts);
    return ray;
}

} // namespace

CompactCriterion compact_criterion(const Expr& G, cplx xi, const GrowthOptions& opts) {
    if (std::abs(std::abs(xi) - 1.0) > 1e-12) throw std::invalid_argument("xi must be unimodular");
    CompactCriterion c;
    c.xi = xi;
    c.radial = probe_ray(G, xi, 0.0, opts);
    c.oblique_plus = probe_ray(G, xi, std::numbers::pi / 4.0, opts);
    c.oblique_minus = probe_ray(G, xi, -std::numbers::pi / 4.0, opts);
    return c;
}

std::vector<CompactCriterion> compact_criterion_scan(const Expr& G, const std::vector<cplx>& extra,
                                                     std::size_t roots, const GrowthOptions& opts) {
    std::vector<cplx> points;
    for (std::size_t k = 0; k < roots; ++k)
        points.push_back(std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(roots)));
    points.insert(points.end(), extra.begin(), extra.end());
    std::vector<CompactCriterion> out(points.size());
    parallel_for(points.size(), [&](std::size_t i) { out[i] = compact_criterion(G, points[i], opts); });
    return out;
}

BPDecomposition bp_decomposition(const Expr& G, cplx alpha, std::size_t radial, std::size_t angular) {
    if (std::abs(alpha) > 1.0 + 1e-12) throw std::invalid_argument("alpha must lie in the closed disc");
    BPDecomposition out;
    out.alpha = alpha;
    out.min_re_F = std::numeric_limits<double>::infinity();
    std::vector<cplx> grid{0.0};
    for (std::size_t i = 1; i <= radial; ++i) {
        double r = (1.0 - 1e-6) * static_cast<double>(i) / static_cast<double>(radial);
        for (std::size_t j = 0; j < angular; ++j)
            grid.push_back(std::polar(r, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(angular)));
    }
    for (cplx z : grid) {
        cplx denom = (alpha - z) * (1.0 - std::conj(alpha) * z);
        if (std::abs(z - alpha) < 1e-8 || std::abs(denom) < 1e-300) {
            ++out.excluded;
            continue;
        }
        try {
            cplx F = G(z) / denom;
            if (!finite(F)) {
                ++out.excluded;
                continue;
            }
            if (F.real() < out.min_re_F) {
                out.min_re_F = F.real();
                out.argmin = z;
            }
        } catch (const EvalError&) {
            ++out.excluded;
        }
    }
    return out;
}

ClassificationReport classify(const Expr& G, const ClassificationOptions& opts) {
    ClassificationReport rep;
    rep.profile = boundary_profile(G, opts.samples, opts.radius);
    auto verdict = classify_semigroup(rep.profile, opts.tol);
    rep.s0 = verdict.s0;
    rep.generates_semigroup = verdict.generates;
    rep.is_group = rep.generates_semigroup && is_group(rep.profile, opts.tol);
    rep.theta_max = rep.is_group ? 0.0 : sector_angle(rep.profile, opts.tol);

    if (rep.generates_semigroup) {
        // Widest witness first; the first annulus with a negative sup proposes delta.
        // Half of it must survive a 2x radial, 4x angular refinement, which rejects
        // a sup that only looks negative because the grid misses where it tends to 0.
        for (double eps : {0.5, 0.3, 0.1, 0.05, 0.01}) {
            AnnulusCheck probe = immediate_compactness_sufficient(G, 1.0, eps, 32, 1024, 0.0);
            if (probe.max_re < -opts.tol) {
                double delta = -0.5 * probe.max_re;
                rep.imm_witness = immediate_compactness_sufficient(G, delta, eps, 64, 4096, opts.tol);
                rep.imm_compact_sufficient = rep.imm_witness->holds;
                break;
            }
        }
        rep.dw = denjoy_wolff(G, opts.flow);
        if (rep.dw->determined) rep.bp_min_reF = bp_decomposition(G, rep.dw->point).min_re_F;
    }
    rep.compact_criterion = compact_criterion_scan(G, opts.extra_xi);
    return rep;
}

} // namespace semiflow
