#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace semiflow {

using cplx = std::complex<double>;

/// Raised by the parser; `position` is the byte offset of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position);
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Raised by evaluation. Singularities (pole, log of zero, 0^w with Re w <= 0)
/// are kept apart from floating-point overflow of otherwise regular values.
class EvalError : public std::runtime_error {
public:
    enum class Kind { Singularity, Overflow };
    EvalError(Kind kind, const std::string& what);
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

enum class NodeKind { Constant, Variable, Unary, Binary, Function };
enum class Variable { Z, T };
enum class UnaryOp { Neg };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Function { Exp, Log, Sqrt, Sin, Cos, Tanh };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    NodeKind kind;
    cplx value{};                // Constant
    Variable variable{};         // Variable
    UnaryOp unary{};             // Unary
    BinaryOp binary{};           // Binary
    Function function{};         // Function
    std::vector<NodePtr> children;

    static NodePtr constant(cplx v);
    static NodePtr var(Variable v);
    static NodePtr neg(NodePtr a);
    static NodePtr bin(BinaryOp op, NodePtr a, NodePtr b);
    static NodePtr call(Function f, NodePtr a);
};

bool structurally_equal(const ExprNode& a, const ExprNode& b);

/// An immutable parsed symbol in the variable z, optionally depending on a
/// parameter t (used for closed-form flows). Evaluation runs a flattened
/// postfix program and is safe to call concurrently.
class Expr {
public:
    Expr() = default;
    explicit Expr(NodePtr root);

    static Expr parse(std::string_view src);

    cplx eval(cplx z, cplx t = 0.0) const;
    cplx operator()(cplx z) const { return eval(z); }

    std::string to_string() const;
    const ExprNode& root() const { return *root_; }
    const NodePtr& root_ptr() const { return root_; }
    bool empty() const { return root_ == nullptr; }
    bool depends_on_t() const { return uses_t_; }

private:
    struct Instr {
        enum class Op : unsigned char { Push, LoadZ, LoadT, Neg, Add, Sub, Mul, Div, PowInt, Pow,
                                        Exp, Log, Sqrt, Sin, Cos, Tanh };
        Op op;
        cplx value{};
        long long exponent = 0;
    };

    void compile();
    void emit(const ExprNode& n);

    NodePtr root_;
    std::shared_ptr<const std::vector<Instr>> program_;
    std::size_t max_depth_ = 0;
    bool uses_t_ = false;
};

std::string to_string(const ExprNode& n);

} // namespace semiflow
