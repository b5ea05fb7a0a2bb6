#include "semiflow/halfplane.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace semiflow {

namespace {

std::vector<double> logspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) {
        double f = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
        v[k] = lo * std::pow(hi / lo, f);
    }
    return v;
}

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

struct RayLimit {
    std::optional<cplx> limit;
    bool diverges = false;
};

cplx aitken(cplx q0, cplx q1, cplx q2) {
    cplx d1 = q1 - q0, d2 = q2 - q1;
    cplx dd = d2 - d1;
    if (std::abs(dd) <= 1e-14 * std::max({std::abs(q2), std::abs(d2), 1e-300})) return q2;
    return q2 - d2 * d2 / dd;
}

RayLimit ray_limit(const Evaluator& f, std::span<const double> xs, double angle, double tol) {
    RayLimit out;
    const cplx dir = std::polar(1.0, angle);
    std::vector<cplx> q;
    try {
        for (double x : xs) {
            cplx z = x * dir;
            cplx v = f(z) / z;
            if (!finite(v)) {
                out.diverges = true;
                return out;
            }
            q.push_back(v);
        }
    } catch (const EvalError&) {
        out.diverges = true;
        return out;
    }
    const std::size_t n = q.size();
    if (n < 4) return out;
    double d_last = std::abs(q[n - 1] - q[n - 2]);
    double d_prev = std::abs(q[n - 2] - q[n - 3]);
    double scale = std::max(1.0, std::abs(q[n - 1]));
    if (d_last > d_prev * (1.0 + 1e-9) && d_last > tol * scale) {
        out.diverges = true;
        return out;
    }
    cplx a = aitken(q[n - 3], q[n - 2], q[n - 1]);
    cplx b = aitken(q[n - 4], q[n - 3], q[n - 2]);
    if (std::abs(a - b) <= tol * std::max(1.0, std::abs(a))) out.limit = a;
    return out;
}

} // namespace

std::vector<cplx> halfplane_log_grid(std::size_t nx, std::size_t ny, double xmin, double xmax) {
    if (!(xmin > 0.0) || !(xmax >= xmin)) throw std::invalid_argument("log grid needs 0 < xmin <= xmax");
    std::vector<double> xs = logspace(xmin, xmax, nx);
    std::vector<double> ys;
    for (double m : logspace(xmin, xmax, ny / 2)) {
        ys.push_back(m);
        ys.push_back(-m);
    }
    if (ny % 2) ys.push_back(0.0);
    std::vector<cplx> grid;
    grid.reserve(xs.size() * ys.size());
    for (double x : xs)
        for (double y : ys) grid.emplace_back(x, y);
    return grid;
}

std::vector<cplx> default_bp_grid() { return halfplane_log_grid(32, 32, 1e-2, 10.0); }

double berkson_porta_check(const Expr& G, std::span<const cplx> grid, double rel_step) {
    double worst = -std::numeric_limits<double>::infinity();
    for (cplx z : grid) {
        const double x = z.real();
        if (!(x > 0.0)) throw std::invalid_argument("grid point outside the right half-plane");
        const double h = rel_step * std::max(1.0, x);
        if (!(h < x)) throw std::invalid_argument("difference step exceeds Re z");
        double u = G(z).real();
        double du = (G(z + h).real() - G(z - h).real()) / (2.0 * h);
        worst = std::max(worst, x * du - u);
    }
    return worst;
}

std::vector<double> default_ray_points() {
    std::vector<double> xs;
    for (int k = 3; k <= 20; ++k) xs.push_back(std::ldexp(1.0, k));
    return xs;
}

AngularLimit angular_limit_at_infinity(const Evaluator& f, std::span<const double> ray_points, double agree_tol) {
    std::vector<double> defaults;
    if (ray_points.empty()) {
        defaults = default_ray_points();
        ray_points = defaults;
    }
    AngularLimit out;
    bool all = true;
    for (double a : {0.0, std::numbers::pi / 4.0, -std::numbers::pi / 4.0}) {
        RayLimit r = ray_limit(f, ray_points, a, agree_tol);
        out.diverges = out.diverges || r.diverges;
        if (r.limit) out.per_ray.push_back(*r.limit);
        else all = false;
    }
    if (!all || out.diverges) return out;
    cplx ref = out.per_ray.front();
    for (const cplx& v : out.per_ray)
        if (std::abs(v - ref) > agree_tol * std::max(1.0, std::abs(ref))) return out;
    out.value = ref;
    return out;
}

std::optional<double> delta_limit(const Expr& G, std::span<const double> ray_points) {
    AngularLimit lim = angular_limit_at_infinity([&G](cplx z) { return G(z); }, ray_points, 1e-6);
    if (!lim.value) return std::nullopt;
    if (std::abs(lim.value->imag()) > 1e-6 * std::max(1.0, std::abs(*lim.value))) return std::nullopt;
    return lim.value->real();
}

double comp_norm_from_delta(double delta, double t) { return std::exp(-delta * t / 2.0); }

PhiNorm norm_from_phi(const Evaluator& phi, std::span<const double> ray_points) {
    PhiNorm out;
    AngularLimit lim = angular_limit_at_infinity(phi, ray_points, 1e-6);
    if (!lim.value) return out;
    cplx v = *lim.value;
    if (std::abs(v.imag()) > 1e-6 * std::max(1.0, std::abs(v)) || !(v.real() > 1e-12)) return out;
    out.phi_prime_inf = v.real();
    out.norm = 1.0 / std::sqrt(v.real());
    return out;
}

std::vector<cplx> default_kernel_grid() {
    std::vector<double> xs = logspace(1e-3, 1e4, 36);
    std::vector<double> ys{0.0};
    for (double m : logspace(1e-3, 1e4, 15)) {
        ys.push_back(m);
        ys.push_back(-m);
    }
    std::vector<cplx> grid;
    for (double x : xs)
        for (double y : ys) grid.emplace_back(x, y);
    return grid;
}

KernelDissipativity kernel_dissipativity(const Expr& G, std::span<const cplx> grid, double tol) {
    std::vector<cplx> defaults;
    if (grid.empty()) {
        defaults = default_kernel_grid();
        grid = defaults;
    }
    double xmax = 0.0;
    for (cplx w : grid) xmax = std::max(xmax, w.real());
    KernelDissipativity out;
    out.inf = out.inf_inner = std::numeric_limits<double>::infinity();
    for (cplx w : grid) {
        double v;
        try {
            v = G(w).real() / w.real();
        } catch (const EvalError&) {
            continue;
        }
        out.inf = std::min(out.inf, v);
        if (w.real() <= xmax / 100.0) out.inf_inner = std::min(out.inf_inner, v);
    }
    out.contractive = out.inf >= -tol;
    out.bounded_below = out.inf >= out.inf_inner - 0.1 * std::max(1.0, std::abs(out.inf_inner));
    return out;
}

cplx GroupParams::flow(cplx z, double t) const {
    if (std::abs(p) > 1e-12) {
        double e = std::exp(p * t);
        return z * e + cplx(0.0, q / p) * (e - 1.0);
    }
    return z + cplx(0.0, q * t);
}

std::optional<GroupParams> group_classify(const Expr& G, double tol) {
    const cplx z1{1.0, 0.0}, z2{1.0, 1.0}, z3{2.0, -1.0};
    cplx g1, g2, g3;
    try {
        g1 = G(z1);
        g2 = G(z2);
        g3 = G(z3);
    } catch (const EvalError&) {
        return std::nullopt;
    }
    cplx a = (g2 - g1) / (z2 - z1);
    cplx b = g1 - a * z1;
    if (std::abs(g3 - (a * z3 + b)) > tol * std::max(1.0, std::abs(g3))) return std::nullopt;
    if (std::abs(a.imag()) > tol * std::max(1.0, std::abs(a))) return std::nullopt;
    if (std::abs(b.real()) > tol * std::max(1.0, std::abs(b))) return std::nullopt;
    GroupParams gp{a.real(), b.imag()};

    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> ux(0.1, 5.0), uy(-5.0, 5.0);
    for (int k = 0; k < 20; ++k) {
        cplx z{ux(rng), uy(rng)};
        cplx g;
        try {
            g = G(z);
        } catch (const EvalError&) {
            return std::nullopt;
        }
        cplx model = gp.p * z + cplx(0.0, gp.q);
        if (std::abs(g - model) > tol * std::max(1.0, std::abs(g))) return std::nullopt;
    }
    return gp;
}

cplx halfplane_flow(const Expr& G, cplx z0, double t, const FlowConfig& cfg) {
    if (t == 0.0) return z0;
    return integrate([&G](cplx w) { return G(w); }, z0, t, cfg, [](cplx w) { return w.real() > 0.0; });
}

HalfPlaneReport analyze_halfplane(const Expr& G, std::span<const double> times) {
    HalfPlaneReport rep;
    auto grid = default_bp_grid();
    rep.bp_violation = berkson_porta_check(G, grid);
    rep.delta = delta_limit(G);
    if (rep.delta)
        for (double t : times) rep.norm_at[t] = comp_norm_from_delta(*rep.delta, t);
    rep.kernel = kernel_dissipativity(G);
    rep.group = group_classify(G);
    for (double theta : {-0.5, -0.3, -0.1, 0.1, 0.3, 0.5}) {
        Expr rotated(ExprNode::bin(BinaryOp::Mul, G.root_ptr(), ExprNode::constant(std::polar(1.0, -theta))));
        rep.rotated_bp[theta] = berkson_porta_check(rotated, grid);
    }
    return rep;
}

} // namespace semiflow
