#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semiflow/expr.hpp"
#include "semiflow/series.hpp"

namespace semiflow {

enum class WeightKind { Hardy, Dirichlet, Bergman, Custom };

std::string to_string(WeightKind k);
WeightKind parse_weight_kind(const std::string& s);

/// beta_0..beta_N of H^2(beta): ||f||^2 = sum |c_n|^2 beta_n^2.
struct WeightSequence {
    WeightKind kind = WeightKind::Hardy;
    std::vector<double> values;

    static WeightSequence make(WeightKind kind, std::size_t order);
    static WeightSequence custom(std::vector<double> values);
    std::size_t order() const { return values.size() - 1; }
};

/// Matrix of an operator in the orthonormal basis z^n / beta_n, truncated at
/// order N. entries(m, n) is the m-th coordinate of the image of the n-th basis
/// vector.
struct OperatorMatrix {
    Eigen::MatrixXcd entries;
    WeightSequence beta;
    std::size_t order = 0;
    double entry_error = 0.0;

    static OperatorMatrix from_entries(Eigen::MatrixXcd entries, WeightSequence beta, double entry_error = 0.0);
};

struct MatrixOptions {
    double radius = 0.0;          // 0 selects 1 - 1/(2N)
    std::size_t samples = 0;      // 0 selects the smallest power of two meeting alias_tol
    double alias_tol = 1e-6;
    std::size_t max_samples = std::size_t{1} << 18;
};

/// Column n holds (beta_m / beta_n) * [z^m] phi^n, each power sampled directly
/// on the circle. The sample count doubles while the aliasing bound exceeds
/// alias_tol.
OperatorMatrix composition_matrix(const Evaluator& phi, const WeightSequence& beta, std::size_t order,
                                  const MatrixOptions& opts = {});

/// max over n <= N/2 of || T e_n - (T e_1)^n ||_beta / beta_n.
double characterization_defect(const OperatorMatrix& T);

/// max over 1 <= n <= N of || (T e_0)^{n-1} T e_n - (T e_1)^n ||_beta / beta_n.
/// Throws std::domain_error when T e_0 vanishes.
double weighted_characterization_defect(const OperatorMatrix& T);

/// Truncated matrix of A f = G f'.
OperatorMatrix generator_matrix(const Expr& G, const WeightSequence& beta, std::size_t order,
                                const MatrixOptions& opts = {});

/// max |exp(tA) - C| over the leading block x block corner.
double expm_compare(const OperatorMatrix& A, double t, const OperatorMatrix& C, std::size_t block);

std::vector<double> singular_values(const OperatorMatrix& T);

/// Frobenius norm of the truncation (partial Hilbert-Schmidt norm).
double hs_norm_matrix(const OperatorMatrix& T);

struct HsRefinement {
    double radius = 0.0;
    double value = 0.0;         // base grid of M panels
    double value_refined = 0.0; // base grid of 2M panels
};

struct HsIntegral {
    double value = 0.0;         // (1/2pi) * integral at the outermost radius, 2M panels
    bool diverges = false;
    std::string reason;
    std::vector<HsRefinement> refinements;
};

/// (1/2pi) int_0^{2pi} dt / (1 - |phi(r e^{it})|^2) on radii 1 - 10^{-k}, k = 2..6.
/// Divergence is flagged when the M and 2M values differ by more than a factor
/// 1.5, exceed 1e6, hit |phi| >= 1, or keep growing as r -> 1.
HsIntegral hs_integral_hardy(const Evaluator& phi, std::size_t samples = 1024);

struct TraceClass {
    bool flag = false;
    double sup = 0.0;        // at 1 - 1e-6
    double sup_outer = 0.0;  // at 1 - 1e-7
};

/// ||phi||_inf < 1 - 1e-9, with the deficit required to persist from radius
/// 1 - 1e-6 to 1 - 1e-7 (a map touching the circle loses it proportionally).
TraceClass trace_class_flag(const Evaluator& phi, std::size_t samples = 2048);

void write_matrix_csv(std::ostream& os, const OperatorMatrix& T);
void write_spectrum_csv(std::ostream& os, const std::vector<double>& sigma);

} // namespace semiflow
