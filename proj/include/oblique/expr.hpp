#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace oblique {

/// Variables an expression may reference. `xi` is the fast periodic variable
/// (x1/epsilon on oscillating boundaries, the cell coordinate in cell problems).
enum class Var { X1 = 0, X2 = 1, Xi = 2 };

struct Point3 {
    double x1 = 0.0;
    double x2 = 0.0;
    double xi = 0.0;
};

namespace detail {
struct Node;
}

/// Immutable closed-form expression: numbers, x1/x2/xi, pi, e, + - * / ^,
/// and sin cos tan exp log sqrt abs tanh sinh cosh. Cheap to copy.
class Expr {
public:
    Expr();  // the constant 0
    static Expr parse(std::string_view text);
    static Expr constant(double v);

    double operator()(const Point3& p) const;
    double operator()(double x1, double x2, double xi = 0.0) const {
        return (*this)(Point3{x1, x2, xi});
    }

    /// Symbolic partial derivative, constant-folded.
    Expr derivative(Var v) const;

    bool is_constant() const;
    bool depends_on(Var v) const;
    std::string str() const;
    const std::string& source() const { return source_; }

private:
    explicit Expr(std::shared_ptr<const detail::Node> n, std::string source = {});
    std::shared_ptr<const detail::Node> node_;
    std::string source_;
};

}  // namespace oblique
