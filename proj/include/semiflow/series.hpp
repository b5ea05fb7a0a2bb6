#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "semiflow/expr.hpp"

namespace semiflow {

using Evaluator = std::function<cplx(cplx)>;

/// Truncated power series c_0 + c_1 z + ... + c_N z^N recovered from samples on
/// the circle |z| = sample_radius. alias_bound is an upper estimate of the
/// per-coefficient error from aliasing and rounding.
struct TaylorPoly {
    std::vector<cplx> coeffs;
    double sample_radius = 0.0;
    double alias_bound = 0.0;

    std::size_t order() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
    cplx operator()(cplx z) const;
};

/// r = 1 - 1/(2N).
double default_sample_radius(std::size_t order);
/// max(4(N+1), 1024), rounded up to a power of two.
std::size_t default_sample_count(std::size_t order);

/// Values f(r e^{2 pi i j / M}), j = 0..M-1.
std::vector<cplx> sample_circle(const Evaluator& f, double radius, std::size_t samples);

/// Coefficients from precomputed circle samples (as produced by sample_circle).
/// sup_modulus is the sup of |f| used in the aliasing estimate; pass a negative
/// value to take it from the samples.
TaylorPoly taylor_from_circle_values(std::span<const cplx> values, std::size_t order, double radius,
                                     double sup_modulus = -1.0);

/// Discretized Cauchy formula. samples == 0 selects default_sample_count(order).
/// Throws std::invalid_argument for r outside (0,1) or too few samples;
/// evaluator failures propagate.
TaylorPoly taylor_from_samples(const Evaluator& f, std::size_t order, double radius,
                               std::size_t samples = 0);

/// Coefficients of a*b up to degree `order`.
std::vector<cplx> truncated_product(std::span<const cplx> a, std::span<const cplx> b, std::size_t order);

/// p^n truncated at p.order(), by binary powering with truncated products.
TaylorPoly power(const TaylorPoly& p, unsigned n);

/// max |f(r e^{i theta})| over M equispaced samples, refined by a golden-section
/// search around the best sample.
double sup_on_circle(const Evaluator& f, double radius, std::size_t samples);

/// Radius used for sup-norms of symbols that may be singular on the unit circle.
inline constexpr double kNearBoundaryRadius = 1.0 - 1e-6;

} // namespace semiflow
