#include "semiflow/operator_matrix.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "semiflow/parallel.hpp"

namespace semiflow {

std::string to_string(WeightKind k) {
    switch (k) {
    case WeightKind::Hardy: return "hardy";
    case WeightKind::Dirichlet: return "dirichlet";
    case WeightKind::Bergman: return "bergman";
    case WeightKind::Custom: return "custom";
    }
    return "custom";
}

WeightKind parse_weight_kind(const std::string& s) {
    if (s == "hardy") return WeightKind::Hardy;
    if (s == "dirichlet") return WeightKind::Dirichlet;
    if (s == "bergman") return WeightKind::Bergman;
    throw std::invalid_argument("unknown weight kind '" + s + "'");
}

WeightSequence WeightSequence::make(WeightKind kind, std::size_t order) {
    WeightSequence w;
    w.kind = kind;
    w.values.resize(order + 1);
    for (std::size_t n = 0; n <= order; ++n) {
        double x = static_cast<double>(n);
        switch (kind) {
        case WeightKind::Hardy: w.values[n] = 1.0; break;
        case WeightKind::Dirichlet: w.values[n] = n == 0 ? 1.0 : std::sqrt(x); break;
        case WeightKind::Bergman: w.values[n] = 1.0 / std::sqrt(x + 1.0); break;
        case WeightKind::Custom: throw std::invalid_argument("custom weights need explicit values");
        }
    }
    return w;
}

WeightSequence WeightSequence::custom(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("empty weight sequence");
    for (double v : values)
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("weights must be positive and finite");
    return WeightSequence{WeightKind::Custom, std::move(values)};
}

OperatorMatrix OperatorMatrix::from_entries(Eigen::MatrixXcd entries, WeightSequence beta, double entry_error) {
    if (entries.rows() != entries.cols() || static_cast<std::size_t>(entries.rows()) != beta.values.size())
        throw std::invalid_argument("matrix size does not match the weight sequence");
    OperatorMatrix T;
    T.order = beta.order();
    T.entries = std::move(entries);
    T.beta = std::move(beta);
    T.entry_error = entry_error;
    return T;
}

namespace {

double alias_estimate(double sup, double r, std::size_t m, std::size_t order) {
    return sup * std::pow(r, static_cast<double>(m - order)) / (1.0 - std::pow(r, static_cast<double>(m)));
}

// Smallest power of two >= the default count whose aliasing estimate, for a
// function bounded by `sup`, is below tol.
std::size_t samples_for(double sup, double r, std::size_t order, double tol, std::size_t cap) {
    std::size_t m = default_sample_count(order);
    while (m < cap && alias_estimate(sup, r, m, order) > tol) m *= 2;
    return m;
}

// Natural coefficients a_m of T e_n, i.e. entries scaled back by beta_n / beta_m.
std::vector<cplx> natural_column(const OperatorMatrix& T, std::size_t n) {
    std::vector<cplx> a(T.order + 1);
    for (std::size_t m = 0; m <= T.order; ++m)
        a[m] = T.entries(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) * T.beta.values[n] /
               T.beta.values[m];
    return a;
}

double beta_norm_diff(const std::vector<cplx>& a, const std::vector<cplx>& b, const WeightSequence& beta) {
    double s = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) s += std::norm(a[m] - b[m]) * beta.values[m] * beta.values[m];
    return std::sqrt(s);
}

} // namespace

OperatorMatrix composition_matrix(const Evaluator& phi, const WeightSequence& beta, std::size_t order,
                                  const MatrixOptions& opts) {
    if (beta.values.size() != order + 1) throw std::invalid_argument("weight sequence must have N+1 entries");
    const double r = opts.radius > 0.0 ? opts.radius : default_sample_radius(order);
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("sample radius must lie in (0,1)");
    std::size_t m = opts.samples ? opts.samples : samples_for(1.0, r, order, opts.alias_tol, opts.max_samples);

    const Eigen::Index dim = static_cast<Eigen::Index>(order + 1);
    for (;;) {
        std::vector<cplx> values = sample_circle(phi, r, m);
        double sup = 0.0;
        for (const cplx& v : values) sup = std::max(sup, std::abs(v));

        OperatorMatrix T;
        T.order = order;
        T.beta = beta;
        T.entries = Eigen::MatrixXcd::Zero(dim, dim);
        double worst_alias = 0.0;
        double beta_max = *std::max_element(beta.values.begin(), beta.values.end());

        std::vector<cplx> pw(m, cplx(1.0));
        for (std::size_t n = 0; n <= order; ++n) {
            TaylorPoly p = taylor_from_circle_values(pw, order, r, std::pow(sup, static_cast<double>(n)));
            for (std::size_t row = 0; row <= order; ++row)
                T.entries(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(n)) =
                    beta.values[row] / beta.values[n] * p.coeffs[row];
            worst_alias = std::max(worst_alias, p.alias_bound * beta_max / beta.values[n]);
            for (std::size_t j = 0; j < m; ++j) pw[j] *= values[j];
        }
        T.entry_error = worst_alias;
        if (worst_alias <= opts.alias_tol || m >= opts.max_samples || opts.samples) return T;
        m *= 2;
    }
}

double characterization_defect(const OperatorMatrix& T) {
    const std::size_t N = T.order;
    std::vector<cplx> first = natural_column(T, 1 <= N ? 1 : 0);
    std::vector<cplx> power(N + 1, cplx(0.0));
    power[0] = 1.0;
    double defect = 0.0;
    for (std::size_t n = 0; n <= N / 2; ++n) {
        if (n > 0) power = truncated_product(power, first, N);
        defect = std::max(defect, beta_norm_diff(natural_column(T, n), power, T.beta) / T.beta.values[n]);
    }
    return defect;
}

double weighted_characterization_defect(const OperatorMatrix& T) {
    const std::size_t N = T.order;
    std::vector<cplx> w = natural_column(T, 0);
    if (std::all_of(w.begin(), w.end(), [](const cplx& c) { return std::abs(c) == 0.0; }))
        throw std::domain_error("T e_0 vanishes identically");
    std::vector<cplx> first = natural_column(T, 1);
    std::vector<cplx> w_power(N + 1, cplx(0.0));   // (T e_0)^{n-1}
    w_power[0] = 1.0;
    std::vector<cplx> rhs = first;                  // (T e_1)^n
    double defect = 0.0;
    for (std::size_t n = 1; n <= N; ++n) {
        if (n > 1) {
            w_power = truncated_product(w_power, w, N);
            rhs = truncated_product(rhs, first, N);
        }
        std::vector<cplx> lhs = truncated_product(w_power, natural_column(T, n), N);
        defect = std::max(defect, beta_norm_diff(lhs, rhs, T.beta) / T.beta.values[n]);
    }
    return defect;
}

OperatorMatrix generator_matrix(const Expr& G, const WeightSequence& beta, std::size_t order,
                                const MatrixOptions& opts) {
    if (beta.values.size() != order + 1) throw std::invalid_argument("weight sequence must have N+1 entries");
    const double r = opts.radius > 0.0 ? opts.radius : default_sample_radius(order);
    Evaluator g = [&G](cplx z) { return G(z); };

    std::size_t m = opts.samples ? opts.samples : default_sample_count(order);
    TaylorPoly coeffs = taylor_from_samples(g, order, r, m);
    while (!opts.samples && coeffs.alias_bound > opts.alias_tol && m < opts.max_samples) {
        m *= 2;
        coeffs = taylor_from_samples(g, order, r, m);
    }

    const Eigen::Index dim = static_cast<Eigen::Index>(order + 1);
    OperatorMatrix A;
    A.order = order;
    A.beta = beta;
    A.entries = Eigen::MatrixXcd::Zero(dim, dim);
    double beta_ratio = 0.0;
    for (std::size_t n = 1; n <= order; ++n) {
        for (std::size_t mrow = n - 1; mrow <= order; ++mrow) {
            double scale = static_cast<double>(n) * beta.values[mrow] / beta.values[n];
            A.entries(static_cast<Eigen::Index>(mrow), static_cast<Eigen::Index>(n)) =
                scale * coeffs.coeffs[mrow - n + 1];
            beta_ratio = std::max(beta_ratio, scale);
        }
    }
    A.entry_error = coeffs.alias_bound * beta_ratio;
    return A;
}

double expm_compare(const OperatorMatrix& A, double t, const OperatorMatrix& C, std::size_t block) {
    if (A.order != C.order || A.beta.values != C.beta.values)
        throw std::invalid_argument("operators must share weights and truncation order");
    if (block == 0 || block > A.order / 2) throw std::invalid_argument("block must lie in [1, N/2]");
    Eigen::MatrixXcd scaled = t * A.entries;
    Eigen::MatrixXcd E = scaled.exp();
    if (!E.allFinite()) throw std::overflow_error("matrix exponential overflowed");
    const Eigen::Index b = static_cast<Eigen::Index>(block);
    return (E.topLeftCorner(b, b) - C.entries.topLeftCorner(b, b)).cwiseAbs().maxCoeff();
}

std::vector<double> singular_values(const OperatorMatrix& T) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(T.entries);
    const auto& s = svd.singularValues();
    std::vector<double> out(s.data(), s.data() + s.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

double hs_norm_matrix(const OperatorMatrix& T) { return T.entries.norm(); }

namespace {

// Trapezoid base grid of `panels` panels on [0, 2pi], each panel integrated by
// adaptive Gauss-Kronrod so that boundary-contact spikes are resolved.
// Returns a negative value if |phi| >= 1 somewhere.
double hs_quadrature(const Evaluator& phi, double r, std::size_t panels) {
    using boost::math::quadrature::gauss_kronrod;
    const double h = 2.0 * std::numbers::pi / static_cast<double>(panels);
    std::vector<double> parts(panels, 0.0);
    std::vector<char> hit(panels, 0);
    parallel_for(panels, [&](std::size_t k) {
        bool local_touch = false;
        auto f = [&](double t) {
            double a = std::norm(phi(std::polar(r, t)));
            if (!(a < 1.0)) {
                local_touch = true;
                return 0.0;
            }
            return 1.0 / (1.0 - a);
        };
        double a = h * static_cast<double>(k);
        parts[k] = gauss_kronrod<double, 15>::integrate(f, a, a + h, 12, 1e-9);
        hit[k] = local_touch;
    });
    if (std::any_of(hit.begin(), hit.end(), [](char c) { return c != 0; })) return -1.0;
    double sum = 0.0;
    for (double p : parts) sum += p;
    return sum / (2.0 * std::numbers::pi);
}

} // namespace

HsIntegral hs_integral_hardy(const Evaluator& phi, std::size_t samples) {
    HsIntegral out;
    for (int k = 2; k <= 6; ++k) {
        HsRefinement ref;
        ref.radius = 1.0 - std::pow(10.0, -k);
        ref.value = hs_quadrature(phi, ref.radius, samples);
        ref.value_refined = hs_quadrature(phi, ref.radius, 2 * samples);
        out.refinements.push_back(ref);
        if (ref.value < 0.0 || ref.value_refined < 0.0) {
            out.diverges = true;
            out.reason = "|phi| >= 1 at a quadrature node";
            return out;
        }
        if (ref.value_refined > 1e6) {
            out.diverges = true;
            out.reason = "integral exceeds 1e6";
        } else if (ref.value_refined > 1.5 * ref.value || ref.value > 1.5 * ref.value_refined) {
            out.diverges = true;
            out.reason = "M and 2M quadratures disagree by more than a factor 1.5";
        }
    }
    out.value = out.refinements.back().value_refined;
    if (out.diverges) return out;

    // Radial growth: increments per decade of (1 - r) must decay for a finite limit.
    const auto& R = out.refinements;
    double d_prev = R[R.size() - 2].value_refined - R[R.size() - 3].value_refined;
    double d_last = R.back().value_refined - R[R.size() - 2].value_refined;
    if (d_last > 1e-3 * std::abs(R.back().value_refined) && d_last >= 0.5 * d_prev) {
        out.diverges = true;
        out.reason = "integral keeps growing as the radius tends to 1";
    }
    return out;
}

TraceClass trace_class_flag(const Evaluator& phi, std::size_t samples) {
    TraceClass tc;
    tc.sup = sup_on_circle(phi, kNearBoundaryRadius, samples);
    tc.sup_outer = sup_on_circle(phi, 1.0 - 1e-7, samples);
    double deficit = 1.0 - tc.sup, deficit_outer = 1.0 - tc.sup_outer;
    tc.flag = tc.sup < 1.0 - 1e-9 && deficit_outer > 1e-9 && deficit_outer >= 0.5 * deficit;
    return tc;
}

void write_matrix_csv(std::ostream& os, const OperatorMatrix& T) {
    os.precision(17);
    const Eigen::Index n = T.entries.cols();
    for (Eigen::Index j = 0; j < n; ++j) os << (j ? "," : "") << "c" << j << "_re,c" << j << "_im";
    os << '\n';
    for (Eigen::Index i = 0; i < T.entries.rows(); ++i) {
        for (Eigen::Index j = 0; j < n; ++j)
            os << (j ? "," : "") << T.entries(i, j).real() << ',' << T.entries(i, j).imag();
        os << '\n';
    }
}

void write_spectrum_csv(std::ostream& os, const std::vector<double>& sigma) {
    os.precision(17);
    os << "k,sigma\n";
    for (std::size_t k = 0; k < sigma.size(); ++k) os << k << ',' << sigma[k] << '\n';
}

} // namespace semiflow
