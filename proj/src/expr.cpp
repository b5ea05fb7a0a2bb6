#include "semiflow/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <optional>

namespace semiflow {

ParseError::ParseError(const std::string& what, std::size_t position)
    : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}

EvalError::EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

NodePtr ExprNode::constant(cplx v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

NodePtr ExprNode::var(Variable v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Variable;
    n->variable = v;
    return n;
}

NodePtr ExprNode::neg(NodePtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Unary;
    n->unary = UnaryOp::Neg;
    n->children = {std::move(a)};
    return n;
}

NodePtr ExprNode::bin(BinaryOp op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Binary;
    n->binary = op;
    n->children = {std::move(a), std::move(b)};
    return n;
}

NodePtr ExprNode::call(Function f, NodePtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Function;
    n->function = f;
    n->children = {std::move(a)};
    return n;
}

bool structurally_equal(const ExprNode& a, const ExprNode& b) {
    if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
    switch (a.kind) {
    case NodeKind::Constant:
        if (a.value != b.value) return false;
        break;
    case NodeKind::Variable:
        if (a.variable != b.variable) return false;
        break;
    case NodeKind::Unary:
        if (a.unary != b.unary) return false;
        break;
    case NodeKind::Binary:
        if (a.binary != b.binary) return false;
        break;
    case NodeKind::Function:
        if (a.function != b.function) return false;
        break;
    }
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!structurally_equal(*a.children[i], *b.children[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Parser: precedence climbing. Levels: + - (1), * / (2), unary minus (3),
// ^ (4, right-associative).

namespace {

struct Token {
    enum class Kind { Number, Imag, Ident, Op, LParen, RParen, End };
    Token(Kind k, std::size_t p) : kind(k), pos(p) {}
    Kind kind;
    std::size_t pos;
    double number = 0.0;
    std::string text;
    char op = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        Token tok{Token::Kind::End, pos_};
        if (pos_ >= src_.size()) return tok;
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            tok.kind = Token::Kind::Ident;
            tok.text = std::string(src_.substr(start, pos_ - start));
            return tok;
        }
        ++pos_;
        switch (c) {
        case '+': case '-': case '*': case '/': case '^':
            tok.kind = Token::Kind::Op;
            tok.op = c;
            return tok;
        case '(':
            tok.kind = Token::Kind::LParen;
            return tok;
        case ')':
            tok.kind = Token::Kind::RParen;
            return tok;
        default:
            throw ParseError(std::string("unexpected character '") + c + "'", tok.pos);
        }
    }

private:
    Token number() {
        Token tok{Token::Kind::Number, pos_};
        std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                digits();
            else
                pos_ = save;
        }
        std::string_view lit = src_.substr(start, pos_ - start);
        auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), tok.number);
        if (ec != std::errc() || ptr != lit.data() + lit.size())
            throw ParseError("malformed number '" + std::string(lit) + "'", start);
        // A literal directly followed by 'i' (and not by a longer identifier) is imaginary.
        if (pos_ < src_.size() && src_[pos_] == 'i' &&
            (pos_ + 1 >= src_.size() ||
             !(std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '_'))) {
            ++pos_;
            tok.kind = Token::Kind::Imag;
        }
        return tok;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) { advance(); }

    NodePtr parse() {
        NodePtr e = expression(1);
        if (cur_.kind != Token::Kind::End) throw ParseError("unexpected trailing input", cur_.pos);
        return e;
    }

private:
    static int precedence(char op) {
        switch (op) {
        case '+': case '-': return 1;
        case '*': case '/': return 2;
        case '^': return 4;
        default: return 0;
        }
    }

    void advance() { cur_ = lex_.next(); }

    NodePtr expression(int min_prec) {
        NodePtr lhs = unary();
        while (cur_.kind == Token::Kind::Op && precedence(cur_.op) >= min_prec) {
            char op = cur_.op;
            int prec = precedence(op);
            advance();
            NodePtr rhs = expression(op == '^' ? prec : prec + 1);
            BinaryOp bop = op == '+'   ? BinaryOp::Add
                           : op == '-' ? BinaryOp::Sub
                           : op == '*' ? BinaryOp::Mul
                           : op == '/' ? BinaryOp::Div
                                       : BinaryOp::Pow;
            lhs = ExprNode::bin(bop, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    NodePtr unary() {
        if (cur_.kind == Token::Kind::Op && cur_.op == '-') {
            advance();
            return ExprNode::neg(expression(3));
        }
        return primary();
    }

    NodePtr primary() {
        Token tok = cur_;
        switch (tok.kind) {
        case Token::Kind::Number:
            advance();
            return ExprNode::constant(tok.number);
        case Token::Kind::Imag:
            advance();
            return ExprNode::constant(cplx(0.0, tok.number));
        case Token::Kind::LParen: {
            advance();
            NodePtr e = expression(1);
            expect_rparen();
            return e;
        }
        case Token::Kind::Ident:
            return identifier();
        case Token::Kind::End:
            throw ParseError("unexpected end of input", tok.pos);
        default:
            throw ParseError("expected an operand", tok.pos);
        }
    }

    NodePtr identifier() {
        Token tok = cur_;
        advance();
        if (tok.text == "z") return ExprNode::var(Variable::Z);
        if (tok.text == "t") return ExprNode::var(Variable::T);
        if (tok.text == "i") return ExprNode::constant(cplx(0.0, 1.0));
        if (tok.text == "pi") return ExprNode::constant(std::acos(-1.0));
        std::optional<Function> f;
        if (tok.text == "exp") f = Function::Exp;
        else if (tok.text == "log") f = Function::Log;
        else if (tok.text == "sqrt") f = Function::Sqrt;
        else if (tok.text == "sin") f = Function::Sin;
        else if (tok.text == "cos") f = Function::Cos;
        else if (tok.text == "tanh") f = Function::Tanh;
        if (!f) throw ParseError("unknown identifier '" + tok.text + "'", tok.pos);
        if (cur_.kind != Token::Kind::LParen)
            throw ParseError("expected '(' after function name '" + tok.text + "'", cur_.pos);
        advance();
        NodePtr arg = expression(1);
        expect_rparen();
        return ExprNode::call(*f, std::move(arg));
    }

    void expect_rparen() {
        if (cur_.kind != Token::Kind::RParen) throw ParseError("expected ')'", cur_.pos);
        advance();
    }

    Lexer lex_;
    Token cur_{Token::Kind::End, 0};
};

// ---------------------------------------------------------------------------
// Printer

int node_precedence(const ExprNode& n) {
    switch (n.kind) {
    case NodeKind::Binary:
        switch (n.binary) {
        case BinaryOp::Add: case BinaryOp::Sub: return 1;
        case BinaryOp::Mul: case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
        }
        return 0;
    case NodeKind::Unary:
        return 3;
    case NodeKind::Constant: {
        // Only literals the parser can produce print bare.
        const cplx v = n.value;
        bool bare = (v.imag() == 0.0 && !std::signbit(v.real())) ||
                    (v.real() == 0.0 && !std::signbit(v.real()) && !std::signbit(v.imag()));
        return bare ? 5 : 0;
    }
    default:
        return 5;
    }
}

std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    (void)ec;
    return std::string(buf.data(), ptr);
}

std::string format_constant(cplx v) {
    if (v.imag() == 0.0 && !std::signbit(v.real())) return format_double(v.real());
    if (v.real() == 0.0 && !std::signbit(v.real()) && !std::signbit(v.imag()))
        return v.imag() == 1.0 ? "i" : format_double(v.imag()) + "i";
    // Synthesized constant: printed so that it evaluates identically.
    std::string s = "(" + format_double(v.real());
    s += v.imag() < 0 || std::signbit(v.imag()) ? "-" : "+";
    s += format_double(std::abs(v.imag())) + "i)";
    return s;
}

const char* function_name(Function f) {
    switch (f) {
    case Function::Exp: return "exp";
    case Function::Log: return "log";
    case Function::Sqrt: return "sqrt";
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Tanh: return "tanh";
    }
    return "?";
}

void print(const ExprNode& n, std::string& out) {
    auto child = [&](const ExprNode& c, bool parens) {
        if (parens) out += '(';
        print(c, out);
        if (parens) out += ')';
    };
    switch (n.kind) {
    case NodeKind::Constant:
        out += format_constant(n.value);
        break;
    case NodeKind::Variable:
        out += n.variable == Variable::Z ? "z" : "t";
        break;
    case NodeKind::Unary:
        out += '-';
        child(*n.children[0], node_precedence(*n.children[0]) < 3);
        break;
    case NodeKind::Function:
        out += function_name(n.function);
        out += '(';
        print(*n.children[0], out);
        out += ')';
        break;
    case NodeKind::Binary: {
        int p = node_precedence(n);
        bool right_assoc = n.binary == BinaryOp::Pow;
        int lp = node_precedence(*n.children[0]);
        int rp = node_precedence(*n.children[1]);
        // The base of ^ must bind tighter than unary minus.
        bool lparen = right_assoc ? lp <= p : lp < p;
        bool rparen = right_assoc ? rp < p : rp <= p;
        child(*n.children[0], lparen);
        static constexpr const char* ops[] = {" + ", " - ", "*", "/", "^"};
        out += ops[static_cast<int>(n.binary)];
        child(*n.children[1], rparen);
        break;
    }
    }
}

std::optional<cplx> fold_constant(const ExprNode& n) {
    if (n.kind == NodeKind::Constant) return n.value;
    if (n.kind == NodeKind::Unary) {
        if (auto v = fold_constant(*n.children[0])) return -*v;
    }
    return std::nullopt;
}

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Principal branches take the value from the upper side of the cut (-inf, 0].
cplx on_principal_sheet(cplx v) {
    if (v.imag() == 0.0) v = cplx(v.real(), 0.0);
    return v;
}

cplx pow_int(cplx base, long long n) {
    if (n < 0) {
        if (base == cplx(0.0)) throw EvalError(EvalError::Kind::Singularity, "zero raised to a negative power");
        return 1.0 / pow_int(base, -n);
    }
    cplx result = 1.0;
    while (n > 0) {
        if (n & 1) result *= base;
        base *= base;
        n >>= 1;
    }
    return result;
}

} // namespace

std::string to_string(const ExprNode& n) {
    std::string out;
    print(n, out);
    return out;
}

// ---------------------------------------------------------------------------

Expr::Expr(NodePtr root) : root_(std::move(root)) { compile(); }

Expr Expr::parse(std::string_view src) { return Expr(Parser(src).parse()); }

std::string Expr::to_string() const { return root_ ? semiflow::to_string(*root_) : std::string(); }

void Expr::compile() {
    auto prog = std::make_shared<std::vector<Instr>>();
    program_ = prog;
    uses_t_ = false;
    if (!root_) return;
    emit(*root_);
    std::size_t depth = 0;
    max_depth_ = 0;
    for (const Instr& ins : *program_) {
        switch (ins.op) {
        case Instr::Op::Push: case Instr::Op::LoadZ: case Instr::Op::LoadT:
            ++depth;
            break;
        case Instr::Op::Add: case Instr::Op::Sub: case Instr::Op::Mul: case Instr::Op::Div:
        case Instr::Op::Pow:
            --depth;
            break;
        default:
            break;
        }
        max_depth_ = std::max(max_depth_, depth);
    }
}

void Expr::emit(const ExprNode& n) {
    auto& prog = const_cast<std::vector<Instr>&>(*program_);
    switch (n.kind) {
    case NodeKind::Constant:
        prog.push_back({Instr::Op::Push, n.value});
        return;
    case NodeKind::Variable:
        if (n.variable == Variable::T) uses_t_ = true;
        prog.push_back({n.variable == Variable::Z ? Instr::Op::LoadZ : Instr::Op::LoadT});
        return;
    case NodeKind::Unary:
        emit(*n.children[0]);
        prog.push_back({Instr::Op::Neg});
        return;
    case NodeKind::Function: {
        emit(*n.children[0]);
        static constexpr Instr::Op ops[] = {Instr::Op::Exp, Instr::Op::Log, Instr::Op::Sqrt,
                                            Instr::Op::Sin, Instr::Op::Cos, Instr::Op::Tanh};
        prog.push_back({ops[static_cast<int>(n.function)]});
        return;
    }
    case NodeKind::Binary:
        if (n.binary == BinaryOp::Pow) {
            auto e = fold_constant(*n.children[1]);
            if (e && e->imag() == 0.0 && std::abs(e->real()) <= 1e6 &&
                e->real() == std::round(e->real())) {
                emit(*n.children[0]);
                Instr ins{Instr::Op::PowInt};
                ins.exponent = static_cast<long long>(e->real());
                prog.push_back(ins);
                return;
            }
        }
        emit(*n.children[0]);
        emit(*n.children[1]);
        static constexpr Instr::Op ops[] = {Instr::Op::Add, Instr::Op::Sub, Instr::Op::Mul,
                                            Instr::Op::Div, Instr::Op::Pow};
        prog.push_back({ops[static_cast<int>(n.binary)]});
        return;
    }
}

cplx Expr::eval(cplx z, cplx t) const {
    if (!root_) throw EvalError(EvalError::Kind::Singularity, "empty expression");
    std::array<cplx, 48> small;
    std::vector<cplx> large;
    cplx* stack = small.data();
    if (max_depth_ > small.size()) {
        large.resize(max_depth_);
        stack = large.data();
    }
    std::size_t sp = 0;
    for (const Instr& ins : *program_) {
        using Op = Instr::Op;
        switch (ins.op) {
        case Op::Push: stack[sp++] = ins.value; continue;
        case Op::LoadZ: stack[sp++] = z; continue;
        case Op::LoadT: stack[sp++] = t; continue;
        default: break;
        }
        cplx& a = stack[sp - 1];
        bool inputs_finite = finite(a);
        switch (ins.op) {
        case Op::Neg: a = -a; break;
        case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: {
            cplx& l = stack[sp - 2];
            inputs_finite = inputs_finite && finite(l);
            if (ins.op == Op::Add) l += a;
            else if (ins.op == Op::Sub) l -= a;
            else if (ins.op == Op::Mul) l *= a;
            else if (ins.op == Op::Div) {
                if (a == cplx(0.0)) throw EvalError(EvalError::Kind::Singularity, "division by zero");
                l /= a;
            } else {
                if (l == cplx(0.0)) {
                    if (a.real() > 0.0) l = 0.0;
                    else throw EvalError(EvalError::Kind::Singularity, "zero raised to a power with Re <= 0");
                } else {
                    l = std::exp(a * std::log(on_principal_sheet(l)));
                }
            }
            --sp;
            break;
        }
        case Op::PowInt: a = pow_int(a, ins.exponent); break;
        case Op::Exp: a = std::exp(a); break;
        case Op::Log:
            if (a == cplx(0.0)) throw EvalError(EvalError::Kind::Singularity, "log of zero");
            a = std::log(on_principal_sheet(a));
            break;
        case Op::Sqrt: a = std::sqrt(on_principal_sheet(a)); break;
        case Op::Sin: a = std::sin(a); break;
        case Op::Cos: a = std::cos(a); break;
        case Op::Tanh: a = std::tanh(a); break;
        default: break;
        }
        if (!finite(stack[sp - 1])) {
            if (inputs_finite) throw EvalError(EvalError::Kind::Overflow, "evaluation overflow");
            throw EvalError(EvalError::Kind::Singularity, "non-finite intermediate value");
        }
    }
    return stack[0];
}

} // namespace semiflow
