#include "semiflow/registry.hpp"

#include <numbers>
#include <stdexcept>

namespace semiflow {

std::string to_string(Space s) { return s == Space::Disc ? "disc" : "halfplane"; }

namespace {

std::vector<ExampleCase> build() {
    std::vector<ExampleCase> v;
    auto add = [&](std::string name, std::string description, Space space, const char* G) -> ExampleCase& {
        ExampleCase c;
        c.name = std::move(name);
        c.description = std::move(description);
        c.space = space;
        if (G) c.G = Expr::parse(G);
        v.push_back(std::move(c));
        return v.back();
    };

    {
        auto& c = add("mobius-group", "hyperbolic automorphism group", Space::Disc, "1 - z^2");
        c.closed_form_flow = Expr::parse("(z + tanh(t))/(1 + z*tanh(t))");
        c.expected.generates = true;
        c.expected.is_group = true;
        c.expected.theta = ThetaClass::Zero;
        c.expected.imm_compact = false;
        c.expected.trace_class_at = {0.5, false};
        c.expected.dw_point = cplx(1.0);
        c.expected.dw_boundary = true;
    }
    {
        auto& c = add("linear-contraction", "phi_t(z) = e^{-t} z", Space::Disc, "-z");
        c.closed_form_flow = Expr::parse("exp(-t)*z");
        c.model = SemiflowModel::make(Expr::parse("z"), Expr::parse("z"), 1.0);
        c.expected.generates = true;
        c.expected.is_group = false;
        c.expected.theta = ThetaClass::Positive;
        c.expected.imm_compact = true;
        c.expected.trace_class_at = {0.5, true};
        c.expected.dw_point = cplx(0.0);
        c.expected.dw_boundary = false;
    }
    {
        auto& c = add("cubic", "immediately trace-class, G = z(z^2-2)", Space::Disc, "z*(z^2 - 2)");
        // Bernoulli equation for w^{-2}.
        c.closed_form_flow = Expr::parse("z*sqrt(2)/sqrt(z^2 + (2 - z^2)*exp(4*t))");
        c.expected.generates = true;
        c.expected.is_group = false;
        c.expected.theta = ThetaClass::Positive;
        c.expected.imm_compact = true;
        c.expected.trace_class_at = {0.5, true};
        c.expected.dw_point = cplx(0.0);
        c.expected.dw_boundary = false;
    }
    {
        auto& c = add("parabolic-square", "analytic, not immediately compact", Space::Disc, "(1 - z)^2");
        c.closed_form_flow = Expr::parse("((1 - t)*z + t)/(-t*z + 1 + t)");
        c.expected.generates = true;
        c.expected.is_group = false;
        c.expected.theta = ThetaClass::Positive;
        c.expected.imm_compact = false;
        c.expected.trace_class_at = {1.0, false};
        c.expected.dw_point = cplx(1.0);
        c.expected.dw_boundary = true;
    }
    {
        auto& c = add("nonanalytic-pole", "non-analytic, immediately trace-class", Space::Disc, "2*z/(z - 1)");
        c.expected.generates = true;
        c.expected.is_group = false;
        c.expected.theta = ThetaClass::Zero;
        c.expected.imm_compact = true;
        c.expected.trace_class_at = {0.5, true};
        c.expected.dw_point = cplx(0.0);
        c.expected.dw_boundary = false;
    }
    {
        auto& c = add("logistic", "neither analytic nor a group", Space::Disc, "z*(z - 1)");
        c.closed_form_flow = Expr::parse("z/(z + (1 - z)*exp(t))");
        c.expected.generates = true;
        c.expected.is_group = false;
        c.expected.theta = ThetaClass::Zero;
        c.expected.imm_compact = false;
        c.expected.trace_class_at = {0.5, false};
        c.expected.dw_point = cplx(0.0);
        c.expected.dw_boundary = false;
    }
    {
        auto& c = add("siskakis-log", "immediately compact with boundary sup 0", Space::Disc, "(1 - z)*log(1 - z)");
        c.expected.generates = true;
        c.expected.is_group = false;
        c.expected.imm_compact = false;
        c.expected.dw_point = cplx(0.0);
        c.expected.dw_boundary = false;
    }
    {
        auto& c = add("koenigs-koebe", "model flow h^{-1}(e^{-t} h) with the Koebe map", Space::Disc,
                      "-z*(1 - z)/(1 + z)");
        c.model = SemiflowModel::make(Expr::parse("z/(1 - z)^2"), Expr::parse("2*z/((2*z + 1) + sqrt(4*z + 1))"), 1.0);
        c.closed_form_flow = Expr::parse(
            "2*(exp(-t)*z/(1 - z)^2)/((2*(exp(-t)*z/(1 - z)^2) + 1) + sqrt(4*(exp(-t)*z/(1 - z)^2) + 1))");
        c.expected.generates = true;
        c.expected.is_group = false;
        c.expected.dw_point = cplx(0.0);
        c.expected.dw_boundary = false;
    }
    {
        auto& c = add("lotto", "Riemann map onto a semi-disc: compact, not Hilbert-Schmidt", Space::Disc, nullptr);
        c.static_map = Expr::parse("1/(1 - i*sqrt(i*(1 - z)/(1 + z)))");
        c.expected.hilbert_schmidt = false;
        c.expected.hilbert_schmidt_square = true;
    }
    {
        auto& c = add("halfplane-affine", "quasicontractive, neither a group nor analytic", Space::HalfPlane, "1 - z");
        c.closed_form_flow = Expr::parse("exp(-t)*z + 1 - exp(-t)");
        c.expected.is_group = false;
        c.expected.delta = -1.0;
    }
    {
        auto& c = add("halfplane-group", "group G = pz + iq with p = 2, q = 3", Space::HalfPlane, "2*z + 3i");
        c.closed_form_flow = Expr::parse("z*exp(2*t) + (3i/2)*(exp(2*t) - 1)");
        c.expected.is_group = true;
        c.expected.group_params = {2.0, 3.0};
        c.expected.delta = 2.0;
    }
    {
        auto& c = add("halfplane-translation", "vertical translation group G = 5i", Space::HalfPlane, "5i");
        c.closed_form_flow = Expr::parse("z + 5i*t");
        c.expected.is_group = true;
        c.expected.group_params = {0.0, 5.0};
        c.expected.delta = 0.0;
    }
    return v;
}

} // namespace

const std::vector<ExampleCase>& builtin_examples() {
    static const std::vector<ExampleCase> examples = build();
    return examples;
}

const ExampleCase& lookup(std::string_view name) {
    for (const auto& c : builtin_examples())
        if (c.name == name) return c;
    throw std::out_of_range("unknown example '" + std::string(name) + "'");
}

} // namespace semiflow
