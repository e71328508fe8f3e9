#include "oblique/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oblique/errors.hpp"

namespace oblique {
namespace detail {

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Func };
enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh, Sinh, Cosh, Sign };

struct Node {
    Op op = Op::Const;
    double value = 0.0;
    Var var = Var::X1;
    Fn fn = Fn::Sin;
    std::shared_ptr<const Node> lhs, rhs;
};

using NodePtr = std::shared_ptr<const Node>;

namespace {

NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

NodePtr make_var(Var v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->var = v;
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

double apply_fn(Fn f, double x) {
    switch (f) {
        case Fn::Sin: return std::sin(x);
        case Fn::Cos: return std::cos(x);
        case Fn::Tan: return std::tan(x);
        case Fn::Exp: return std::exp(x);
        case Fn::Log: return std::log(x);
        case Fn::Sqrt: return std::sqrt(x);
        case Fn::Abs: return std::fabs(x);
        case Fn::Tanh: return std::tanh(x);
        case Fn::Sinh: return std::sinh(x);
        case Fn::Cosh: return std::cosh(x);
        case Fn::Sign: return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    }
    return 0.0;
}

double eval(const Node& n, const Point3& p) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var:
            return n.var == Var::X1 ? p.x1 : (n.var == Var::X2 ? p.x2 : p.xi);
        case Op::Neg: return -eval(*n.lhs, p);
        case Op::Add: return eval(*n.lhs, p) + eval(*n.rhs, p);
        case Op::Sub: return eval(*n.lhs, p) - eval(*n.rhs, p);
        case Op::Mul: return eval(*n.lhs, p) * eval(*n.rhs, p);
        case Op::Div: return eval(*n.lhs, p) / eval(*n.rhs, p);
        case Op::Pow: return std::pow(eval(*n.lhs, p), eval(*n.rhs, p));
        case Op::Func: return apply_fn(n.fn, eval(*n.lhs, p));
    }
    return 0.0;
}

// Builders with light constant folding so derivatives stay readable.
NodePtr neg(NodePtr a) {
    if (a->op == Op::Const) return make_const(-a->value);
    if (a->op == Op::Neg) return a->lhs;
    auto n = std::make_shared<Node>();
    n->op = Op::Neg;
    n->lhs = std::move(a);
    return n;
}

NodePtr binary(Op op, NodePtr a, NodePtr b) {
    if (a->op == Op::Const && b->op == Op::Const) {
        Node tmp;
        tmp.op = op;
        tmp.lhs = a;
        tmp.rhs = b;
        return make_const(eval(tmp, {}));
    }
    switch (op) {
        case Op::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case Op::Sub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return neg(b);
            break;
        case Op::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case Op::Div:
            if (is_const(a, 0.0)) return make_const(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case Op::Pow:
            if (is_const(b, 0.0)) return make_const(1.0);
            if (is_const(b, 1.0)) return a;
            break;
        default: break;
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

NodePtr func(Fn f, NodePtr a) {
    if (a->op == Op::Const) return make_const(apply_fn(f, a->value));
    auto n = std::make_shared<Node>();
    n->op = Op::Func;
    n->fn = f;
    n->lhs = std::move(a);
    return n;
}

NodePtr add(NodePtr a, NodePtr b) { return binary(Op::Add, std::move(a), std::move(b)); }
NodePtr sub(NodePtr a, NodePtr b) { return binary(Op::Sub, std::move(a), std::move(b)); }
NodePtr mul(NodePtr a, NodePtr b) { return binary(Op::Mul, std::move(a), std::move(b)); }
NodePtr divide(NodePtr a, NodePtr b) { return binary(Op::Div, std::move(a), std::move(b)); }
NodePtr power(NodePtr a, NodePtr b) { return binary(Op::Pow, std::move(a), std::move(b)); }

bool depends(const Node& n, Var v) {
    switch (n.op) {
        case Op::Const: return false;
        case Op::Var: return n.var == v;
        case Op::Neg:
        case Op::Func: return depends(*n.lhs, v);
        default: return depends(*n.lhs, v) || depends(*n.rhs, v);
    }
}

NodePtr diff(const NodePtr& n, Var v) {
    if (!depends(*n, v)) return make_const(0.0);
    switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::Var: return make_const(n->var == v ? 1.0 : 0.0);
        case Op::Neg: return neg(diff(n->lhs, v));
        case Op::Add: return add(diff(n->lhs, v), diff(n->rhs, v));
        case Op::Sub: return sub(diff(n->lhs, v), diff(n->rhs, v));
        case Op::Mul:
            return add(mul(diff(n->lhs, v), n->rhs), mul(n->lhs, diff(n->rhs, v)));
        case Op::Div: {
            auto num = sub(mul(diff(n->lhs, v), n->rhs), mul(n->lhs, diff(n->rhs, v)));
            return divide(num, power(n->rhs, make_const(2.0)));
        }
        case Op::Pow: {
            const auto& u = n->lhs;
            const auto& w = n->rhs;
            if (!depends(*w, v)) {
                // w * u^(w-1) * u'
                return mul(mul(w, power(u, sub(w, make_const(1.0)))), diff(u, v));
            }
            // u^w * (w' ln u + w u'/u)
            auto t1 = mul(diff(w, v), func(Fn::Log, u));
            auto t2 = divide(mul(w, diff(u, v)), u);
            return mul(n, add(t1, t2));
        }
        case Op::Func: {
            const auto& u = n->lhs;
            auto du = diff(u, v);
            NodePtr outer;
            switch (n->fn) {
                case Fn::Sin: outer = func(Fn::Cos, u); break;
                case Fn::Cos: outer = neg(func(Fn::Sin, u)); break;
                case Fn::Tan:
                    outer = divide(make_const(1.0), power(func(Fn::Cos, u), make_const(2.0)));
                    break;
                case Fn::Exp: outer = n; break;
                case Fn::Log: outer = divide(make_const(1.0), u); break;
                case Fn::Sqrt: outer = divide(make_const(0.5), n); break;
                case Fn::Abs: outer = func(Fn::Sign, u); break;
                case Fn::Tanh:
                    outer = sub(make_const(1.0), power(n, make_const(2.0)));
                    break;
                case Fn::Sinh: outer = func(Fn::Cosh, u); break;
                case Fn::Cosh: outer = func(Fn::Sinh, u); break;
                case Fn::Sign: outer = make_const(0.0); break;
            }
            return mul(outer, du);
        }
    }
    return make_const(0.0);
}

const char* fn_name(Fn f) {
    switch (f) {
        case Fn::Sin: return "sin";
        case Fn::Cos: return "cos";
        case Fn::Tan: return "tan";
        case Fn::Exp: return "exp";
        case Fn::Log: return "log";
        case Fn::Sqrt: return "sqrt";
        case Fn::Abs: return "abs";
        case Fn::Tanh: return "tanh";
        case Fn::Sinh: return "sinh";
        case Fn::Cosh: return "cosh";
        case Fn::Sign: return "sign";
    }
    return "?";
}

void print(const Node& n, std::ostringstream& os) {
    switch (n.op) {
        case Op::Const: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n.value;
            if (n.value < 0) os << '(' << tmp.str() << ')';
            else os << tmp.str();
            break;
        }
        case Op::Var:
            os << (n.var == Var::X1 ? "x1" : (n.var == Var::X2 ? "x2" : "xi"));
            break;
        case Op::Neg:
            os << "(-";
            print(*n.lhs, os);
            os << ')';
            break;
        case Op::Func:
            os << fn_name(n.fn) << '(';
            print(*n.lhs, os);
            os << ')';
            break;
        default: {
            const char sym = n.op == Op::Add   ? '+'
                             : n.op == Op::Sub ? '-'
                             : n.op == Op::Mul ? '*'
                             : n.op == Op::Div ? '/'
                                               : '^';
            os << '(';
            print(*n.lhs, os);
            os << sym;
            print(*n.rhs, os);
            os << ')';
        }
    }
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr parse() {
        auto n = expression();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return n;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError("expression '" + std::string(s_) + "': " + why + " at offset " +
                         std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expression() {
        auto lhs = term();
        for (;;) {
            if (accept('+')) lhs = add(lhs, term());
            else if (accept('-')) lhs = sub(lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*')) lhs = mul(lhs, unary());
            else if (accept('/')) lhs = divide(lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return neg(unary());
        if (accept('+')) return unary();
        return pow_expr();
    }

    NodePtr pow_expr() {
        auto base = primary();
        if (accept('^')) return power(base, unary());
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto n = expression();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        const char* begin = s_.data() + pos_;
        char* end = nullptr;
        const std::string tmp(begin, s_.size() - pos_);
        const double v = std::strtod(tmp.c_str(), &end);
        const auto used = static_cast<std::size_t>(end - tmp.c_str());
        if (used == 0) fail("malformed number");
        pos_ += used;
        return make_const(v);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string id(s_.substr(start, pos_ - start));
        if (id == "x1") return make_var(Var::X1);
        if (id == "x2") return make_var(Var::X2);
        if (id == "xi") return make_var(Var::Xi);
        if (id == "pi") return make_const(std::numbers::pi);
        if (id == "e") return make_const(std::numbers::e);

        static const std::pair<const char*, Fn> fns[] = {
            {"sin", Fn::Sin},   {"cos", Fn::Cos},   {"tan", Fn::Tan},   {"exp", Fn::Exp},
            {"log", Fn::Log},   {"sqrt", Fn::Sqrt}, {"abs", Fn::Abs},   {"tanh", Fn::Tanh},
            {"sinh", Fn::Sinh}, {"cosh", Fn::Cosh}, {"sign", Fn::Sign},
        };
        for (const auto& [name, fn] : fns) {
            if (id == name) {
                if (!accept('(')) fail("expected '(' after " + id);
                auto arg = expression();
                if (!accept(')')) fail("expected ')' closing " + id);
                return func(fn, arg);
            }
        }
        fail("unknown identifier '" + id + "'");
    }
};

}  // namespace
}  // namespace detail

Expr::Expr() : node_(detail::make_const(0.0)), source_("0") {}

Expr::Expr(std::shared_ptr<const detail::Node> n, std::string source)
    : node_(std::move(n)), source_(std::move(source)) {
    if (source_.empty()) source_ = str();
}

Expr Expr::parse(std::string_view text) {
    detail::Parser p(text);
    return Expr(p.parse(), std::string(text));
}

Expr Expr::constant(double v) { return Expr(detail::make_const(v)); }

double Expr::operator()(const Point3& p) const { return detail::eval(*node_, p); }

Expr Expr::derivative(Var v) const { return Expr(detail::diff(node_, v)); }

bool Expr::is_constant() const { return node_->op == detail::Op::Const; }

bool Expr::depends_on(Var v) const { return detail::depends(*node_, v); }

std::string Expr::str() const {
    std::ostringstream os;
    detail::print(*node_, os);
    return os.str();
}

}  // namespace oblique
