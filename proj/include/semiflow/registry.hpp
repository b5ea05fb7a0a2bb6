#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semiflow/expr.hpp"
#include "semiflow/semiflow.hpp"

namespace semiflow {

enum class Space { Disc, HalfPlane };
enum class ThetaClass { Zero, Positive };

std::string to_string(Space s);

/// Verdicts the classifiers are expected to reproduce; unset fields are not asserted.
struct ExpectedVerdicts {
    std::optional<bool> generates;
    std::optional<bool> is_group;
    std::optional<ThetaClass> theta;
    std::optional<bool> imm_compact;            // sufficient annulus condition
    std::optional<std::pair<double, bool>> trace_class_at;
    std::optional<bool> hilbert_schmidt;        // static maps: C_phi
    std::optional<bool> hilbert_schmidt_square; // static maps: C_{phi o phi}
    std::optional<cplx> dw_point;
    std::optional<bool> dw_boundary;
    std::optional<std::pair<double, double>> group_params;  // half-plane (p, q)
    std::optional<double> delta;                             // half-plane
};

struct ExampleCase {
    std::string name;
    std::string description;
    Space space = Space::Disc;
    Expr G;                          // empty for static maps
    Expr static_map;                 // set for static maps only
    std::optional<Expr> closed_form_flow;   // in z and t
    std::optional<SemiflowModel> model;
    ExpectedVerdicts expected;

    bool is_static() const { return G.empty(); }
};

const std::vector<ExampleCase>& builtin_examples();

/// Throws std::out_of_range for unknown names.
const ExampleCase& lookup(std::string_view name);

} // namespace semiflow
