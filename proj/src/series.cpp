#include "semiflow/series.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "semiflow/parallel.hpp"

namespace semiflow {

cplx TaylorPoly::operator()(cplx z) const {
    cplx acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

double default_sample_radius(std::size_t order) {
    return order == 0 ? 0.5 : 1.0 - 1.0 / (2.0 * static_cast<double>(order));
}

std::size_t default_sample_count(std::size_t order) {
    return std::bit_ceil(std::max<std::size_t>(4 * (order + 1), 1024));
}

std::vector<cplx> sample_circle(const Evaluator& f, double radius, std::size_t samples) {
    std::vector<cplx> values(samples);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(samples);
    parallel_for(samples, [&](std::size_t j) {
        values[j] = f(std::polar(radius, step * static_cast<double>(j)));
    });
    return values;
}

TaylorPoly taylor_from_circle_values(std::span<const cplx> values, std::size_t order, double radius,
                                     double sup_modulus) {
    const std::size_t m = values.size();
    if (!(radius > 0.0 && radius <= 1.0)) throw std::invalid_argument("sample radius must lie in (0,1]");
    if (m < order + 1) throw std::invalid_argument("fewer samples than coefficients");

    std::vector<cplx> in(values.begin(), values.end());
    std::vector<cplx> spectrum;
    Eigen::FFT<double> fft;
    fft.fwd(spectrum, in);

    if (sup_modulus < 0.0) {
        sup_modulus = 0.0;
        for (const cplx& v : values) sup_modulus = std::max(sup_modulus, std::abs(v));
    }

    TaylorPoly p;
    p.sample_radius = radius;
    p.coeffs.resize(order + 1);
    const double inv_m = 1.0 / static_cast<double>(m);
    double scale = 1.0;
    for (std::size_t k = 0; k <= order; ++k) {
        p.coeffs[k] = spectrum[k] * inv_m * scale;
        scale /= radius;
    }
    const double r_n = std::pow(radius, -static_cast<double>(order));
    const double r_m = std::pow(radius, static_cast<double>(m));
    double alias = radius < 1.0 ? sup_modulus * std::pow(radius, static_cast<double>(m - order)) / (1.0 - r_m)
                                : sup_modulus;
    double rounding = 4.0 * std::numeric_limits<double>::epsilon() * std::log2(static_cast<double>(m)) *
                      sup_modulus * r_n;
    // The top quarter of the spectrum shows the actual coefficient tail; with
    // magnitudes non-increasing from there on it dominates what folds back
    // onto degrees <= N. This is what lets polynomials report rounding level.
    if (m >= 8) {
        double tail = 0.0;
        for (std::size_t k = m - m / 4; k < m; ++k) tail = std::max(tail, std::abs(spectrum[k]) * inv_m);
        alias = std::min(alias, 4.0 * tail * r_n);
    }
    p.alias_bound = alias + rounding;
    return p;
}

TaylorPoly taylor_from_samples(const Evaluator& f, std::size_t order, double radius, std::size_t samples) {
    if (!(radius > 0.0 && radius < 1.0)) throw std::invalid_argument("sample radius must lie in (0,1)");
    if (samples == 0) samples = default_sample_count(order);
    if (samples < 4 * (order + 1)) throw std::invalid_argument("need at least 4(N+1) samples");
    auto values = sample_circle(f, radius, samples);
    return taylor_from_circle_values(values, order, radius);
}

std::vector<cplx> truncated_product(std::span<const cplx> a, std::span<const cplx> b, std::size_t order) {
    std::vector<cplx> out(order + 1, cplx(0.0));
    for (std::size_t i = 0; i < a.size() && i <= order; ++i) {
        if (a[i] == cplx(0.0)) continue;
        for (std::size_t j = 0; j < b.size() && i + j <= order; ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

TaylorPoly power(const TaylorPoly& p, unsigned n) {
    const std::size_t order = p.order();
    TaylorPoly result;
    result.sample_radius = p.sample_radius;
    result.coeffs.assign(order + 1, cplx(0.0));
    result.coeffs[0] = 1.0;

    std::vector<cplx> base = p.coeffs;
    for (unsigned e = n; e > 0; e >>= 1) {
        if (e & 1) result.coeffs = truncated_product(result.coeffs, base, order);
        if (e > 1) base = truncated_product(base, base, order);
    }

    // d(p^n) = n p^{n-1} dp, with |p| bounded by the l1 norm of its coefficients.
    double l1 = 0.0;
    for (const cplx& c : p.coeffs) l1 += std::abs(c);
    double growth = n == 0 ? 0.0 : n * std::pow(std::max(1.0, l1), static_cast<double>(n - 1));
    result.alias_bound = growth * p.alias_bound;
    return result;
}

double sup_on_circle(const Evaluator& f, double radius, std::size_t samples) {
    if (samples == 0) throw std::invalid_argument("sup_on_circle needs samples");
    auto values = sample_circle(f, radius, samples);
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t j = 0; j < samples; ++j) {
        double a = std::abs(values[j]);
        if (a > best_val) {
            best_val = a;
            best = j;
        }
    }
    const double step = 2.0 * std::numbers::pi / static_cast<double>(samples);
    auto modulus = [&](double theta) { return std::abs(f(std::polar(radius, theta))); };

    double lo = step * (static_cast<double>(best) - 1.0);
    double hi = step * (static_cast<double>(best) + 1.0);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = modulus(x1), f2 = modulus(x2);
    for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = modulus(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = modulus(x2);
        }
        best_val = std::max({best_val, f1, f2});
    }
    return best_val;
}

} // namespace semiflow
