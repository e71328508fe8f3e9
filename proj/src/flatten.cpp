#include "oblique/flatten.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace oblique {

FlattenedOperator flatten(const Geometry& geom, std::size_t controls, const CoefficientFn& coeff,
                          FlattenOptions opt) {
    FlattenedOperator op;
    op.geom = geom;
    op.controls = controls;
    const std::size_t n = geom.size();
    op.a_t.resize(controls * n);
    op.b_t.resize(controls * n);
    op.jacobian.resize(geom.n1);
    op.lambda_min = std::numeric_limits<double>::infinity();
    op.lambda_max = -std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < geom.n1; ++i) {
        op.jacobian[i] = {geom.bottom_d1[i], geom.bottom_d2[i], 0.0};
        const double D = geom.depth(i);
        const double Dp = -geom.bottom_d1[i];
        const double Dpp = -geom.bottom_d2[i];
        const double Bp = geom.bottom_d1[i];
        const double Bpp = geom.bottom_d2[i];
        for (std::size_t j = 0; j < geom.n2; ++j) {
            const double eta = geom.eta(j);
            const double e1 = -(Bp + eta * Dp) / D;
            const double e2 = 1.0 / D;
            const double e12 = -Dp / (D * D);
            const double e11 = -(Bpp + eta * Dpp) / D - 2.0 * e1 * Dp / D;
            const double x1 = geom.x1(i), x2 = geom.x2(i, j);
            const std::size_t k = geom.index(i, j);
            for (std::size_t al = 0; al < controls; ++al) {
                Sym2 A;
                Vec2 b;
                coeff(al, x1, x2, A, b);
                A.a11 += opt.viscosity;
                A.a22 += opt.viscosity;
                op.lambda_min = std::min(op.lambda_min, A.min_eigenvalue());
                op.lambda_max = std::max(op.lambda_max, A.max_eigenvalue());
                Sym2 T;
                T.a11 = A.a11;
                T.a12 = A.a11 * e1 + A.a12 * e2;
                T.a22 = A.a11 * e1 * e1 + 2.0 * A.a12 * e1 * e2 + A.a22 * e2 * e2;
                Vec2 bt{b.x, A.a11 * e11 + 2.0 * A.a12 * e12 + b.x * e1 + b.y * e2};
                if (!std::isfinite(T.a11) || !std::isfinite(T.a12) || !std::isfinite(T.a22) ||
                    !std::isfinite(bt.x) || !std::isfinite(bt.y)) {
                    std::ostringstream os;
                    os << "non-finite transformed coefficients at node " << k << " (x1=" << x1
                       << ", x2=" << x2 << ")";
                    throw EllipticityLost(k, os.str());
                }
                if (opt.require_ellipticity && T.min_eigenvalue() <= 0.0) {
                    std::ostringstream os;
                    os << "transformed matrix of control " << al << " is not positive definite at node "
                       << k << " (x1=" << x1 << ", x2=" << x2 << ")";
                    throw EllipticityLost(k, os.str());
                }
                op.a_t[al * n + k] = T;
                op.b_t[al * n + k] = bt;
            }
        }
    }
    return op;
}

FlattenedOperator flatten_bulk(const Problem& p, const Geometry& geom, FlattenOptions opt) {
    const auto& cf = p.coeffs;
    auto fn = [&cf](std::size_t al, double x1, double x2, Sym2& A, Vec2& b) {
        A = cf.matrix(al, x1, x2);
        b = cf.drift(al, x1, x2);
    };
    auto op = flatten(geom, cf.size(), fn, opt);
    if (p.domain.kind == DomainKind::OscillatingEpsilon) {
        for (std::size_t i = 0; i < geom.n1; ++i) {
            const double x = geom.x1(i);
            const double eps = p.domain.epsilon.value_or(0.0);
            op.jacobian[i].f1_xi = eps > 0.0 ? p.domain.f1_dxi(x, x / eps) : 0.0;
        }
    }
    return op;
}

std::vector<Violation> validate_homogenization_assumptions(const Problem& p, ProbeGrid probe) {
    std::vector<Violation> out;
    const auto& cf = p.coeffs;
    const auto pts = interior_probe_points(p.domain, probe);
    auto where = [](Vec2 x) {
        std::ostringstream os;
        os.precision(6);
        os << "(x1=" << x.x << ", x2=" << x.y << ")";
        return os.str();
    };
    std::size_t n1 = 0, n2 = 0, n3 = 0;
    for (const auto& x : pts) {
        const double s = p.domain.f0_d1(x.x);
        const double s2 = p.domain.f0_d2(x.x);
        for (std::size_t al = 0; al < cf.size(); ++al) {
            const Sym2 A = cf.matrix(al, x.x, x.y);
            const Vec2 b = cf.drift(al, x.x, x.y);
            const double tol = 1e-10 * std::max(1.0, std::fabs(A.a11 * s2));
            if (std::fabs(b.x) > 1e-10 && n1++ < 8)
                out.push_back({"ass1_b1", where(x), "b1 = " + std::to_string(b.x) + " for control " +
                                                        cf.controls[al]});
            if (std::fabs(b.y - A.a11 * s2) > tol && n2++ < 8)
                out.push_back({"ass1_b2", where(x), "b2 - a11 f0'' = " +
                                                        std::to_string(b.y - A.a11 * s2) +
                                                        " for control " + cf.controls[al]});
            const double lhs = A.a11 * (1.0 + s * s) - 2.0 * A.a12 * s + A.a22;
            if (lhs * lhs < 4.0 * A.det() - 1e-12 && n3++ < 8)
                out.push_back({"ass2", where(x), "discriminant inequality fails for control " +
                                                     cf.controls[al]});
        }
    }
    return out;
}

Vec2 CellOperator::gamma(double xi) const {
    const double q = slope + bottom_d1(xi);
    const double s = std::sqrt(1.0 + slope * slope);
    return {q / s, -(slope * q + 1.0) / s};
}

double CellOperator::H(double r, Vec2 p, double xi) const {
    const double f1x = bottom_d1(xi);
    const double q = slope + f1x;
    const double cv = c(x1, x2, xi), gv = g(x1, x2, xi);
    return (-std::sqrt(1.0 + q * q) * (cv * r - gv) - p.x * f1x) / std::sqrt(1.0 + slope * slope);
}

CellOperator cell_operator(const Problem& p, double x1) {
    if (p.domain.kind != DomainKind::OscillatingEpsilon)
        throw InvalidArgument("cell problems need an OscillatingEpsilon problem");
    if (!(x1 >= p.domain.x1_min && x1 <= p.domain.x1_max))
        throw InvalidArgument("cell abscissa lies outside x1_range");
    CellOperator op;
    op.x1 = x1;
    op.x2 = p.domain.f0(x1, 0.0);
    op.slope = p.domain.f0_d1(x1);
    op.domain = p.domain;
    op.c = p.bc.c;
    op.g = p.bc.g;
    const double s = op.slope;
    op.lambda_min = std::numeric_limits<double>::infinity();
    op.lambda_max = -std::numeric_limits<double>::infinity();
    std::vector<Violation> bad;
    for (std::size_t al = 0; al < p.coeffs.size(); ++al) {
        const Sym2 A = p.coeffs.matrix(al, x1, op.x2);
        Sym2 M{A.a11, A.a12 - A.a11 * s, A.a11 * s * s - 2.0 * A.a12 * s + A.a22};
        const double lo = M.min_eigenvalue();
        op.lambda_min = std::min(op.lambda_min, lo);
        op.lambda_max = std::max(op.lambda_max, M.max_eigenvalue());
        if (!(lo > 0.0))
            bad.push_back({"cell_ellipticity", "x1=" + std::to_string(x1),
                           "cell matrix of control " + p.coeffs.controls[al] +
                               " is not positive definite"});
        op.matrices.push_back(M);
    }
    for (int k = 0; k < 256; ++k) {
        const double xi = k / 256.0;
        const double v[] = {op.bottom(xi), op.bottom_d1(xi), op.bottom_d2(xi),
                            op.c(x1, op.x2, xi), op.g(x1, op.x2, xi)};
        if (!std::all_of(std::begin(v), std::end(v), [](double t) { return std::isfinite(t); })) {
            bad.push_back({"cell_smoothness", "x1=" + std::to_string(x1) + ", xi=" + std::to_string(xi),
                           "f1, its xi-derivatives, c or g are not finite"});
            break;
        }
    }
    if (!bad.empty()) throw AssumptionViolated(std::move(bad));
    return op;
}

}  // namespace oblique
