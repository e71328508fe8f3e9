#include "oblique/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace oblique {

using json = nlohmann::json;

double Sym2::min_eigenvalue() const {
    const double m = 0.5 * (a11 + a22);
    const double r = std::hypot(0.5 * (a11 - a22), a12);
    return m - r;
}

double Sym2::max_eigenvalue() const {
    const double m = 0.5 * (a11 + a22);
    const double r = std::hypot(0.5 * (a11 - a22), a12);
    return m + r;
}

const char* to_string(DomainKind k) {
    switch (k) {
        case DomainKind::BoundedFlattenable: return "BoundedFlattenable";
        case DomainKind::PeriodicHalfStrip: return "PeriodicHalfStrip";
        case DomainKind::OscillatingEpsilon: return "OscillatingEpsilon";
    }
    return "?";
}

const char* to_string(Admissibility a) {
    switch (a) {
        case Admissibility::UniformlyElliptic: return "UniformlyElliptic";
        case Admissibility::EllipticIsland: return "EllipticIsland";
        case Admissibility::Controllable: return "Controllable";
        case Admissibility::Unsupported: return "Unsupported";
    }
    return "?";
}

void DomainSpec::set_profiles(Expr bottom_f0, Expr oscillation_f1) {
    f0 = std::move(bottom_f0);
    f1 = std::move(oscillation_f1);
    df0_ = f0.derivative(Var::X1);
    d2f0_ = df0_.derivative(Var::X1);
    f1_x1_ = f1.derivative(Var::X1);
    f1_xi_ = f1.derivative(Var::Xi);
    f1_x1x1_ = f1_x1_.derivative(Var::X1);
    f1_x1xi_ = f1_x1_.derivative(Var::Xi);
    f1_xixi_ = f1_xi_.derivative(Var::Xi);
}

double DomainSpec::bottom(double x1, double eps) const {
    switch (kind) {
        case DomainKind::BoundedFlattenable: return f0(x1, 0.0);
        case DomainKind::PeriodicHalfStrip: return f0(x1, 0.0) + f1(x1, 0.0, x1);
        case DomainKind::OscillatingEpsilon:
            if (eps <= 0.0) return f0(x1, 0.0);
            return f0(x1, 0.0) + eps * f1(x1, 0.0, x1 / eps);
    }
    return 0.0;
}

double DomainSpec::bottom_d1(double x1, double eps) const {
    switch (kind) {
        case DomainKind::BoundedFlattenable: return df0_(x1, 0.0);
        case DomainKind::PeriodicHalfStrip:
            return df0_(x1, 0.0) + f1_x1_(x1, 0.0, x1) + f1_xi_(x1, 0.0, x1);
        case DomainKind::OscillatingEpsilon: {
            if (eps <= 0.0) return df0_(x1, 0.0);
            const Point3 p{x1, 0.0, x1 / eps};
            return df0_(p) + eps * f1_x1_(p) + f1_xi_(p);
        }
    }
    return 0.0;
}

double DomainSpec::bottom_d2(double x1, double eps) const {
    switch (kind) {
        case DomainKind::BoundedFlattenable: return d2f0_(x1, 0.0);
        case DomainKind::PeriodicHalfStrip: {
            const Point3 p{x1, 0.0, x1};
            return d2f0_(p) + f1_x1x1_(p) + 2.0 * f1_x1xi_(p) + f1_xixi_(p);
        }
        case DomainKind::OscillatingEpsilon: {
            if (eps <= 0.0) return d2f0_(x1, 0.0);
            const Point3 p{x1, 0.0, x1 / eps};
            return d2f0_(p) + eps * f1_x1x1_(p) + 2.0 * f1_x1xi_(p) + f1_xixi_(p) / eps;
        }
    }
    return 0.0;
}

Sym2 ControlledCoefficients::matrix(std::size_t alpha, double x1, double x2) const {
    const Point3 p{x1, x2, 0.0};
    const auto& m = a[alpha];
    return Sym2{m[0](p), 0.5 * (m[1](p) + m[2](p)), m[3](p)};
}

Vec2 ControlledCoefficients::drift(std::size_t alpha, double x1, double x2) const {
    const Point3 p{x1, x2, 0.0};
    return Vec2{b[alpha][0](p), b[alpha][1](p)};
}

Vec2 ObliqueBoundaryData::gamma(double x1, double x2, Vec2 normal) const {
    if (gamma_is_normal) return normal;
    const Point3 p{x1, x2, x1};
    return Vec2{gamma1(p), gamma2(p)};
}

AssumptionViolated::AssumptionViolated(std::vector<Violation> v)
    : Error("AssumptionViolated",
            [&v] {
                std::ostringstream os;
                os << v.size() << " assumption(s) violated:";
                for (const auto& x : v) {
                    os << "\n  " << x.name << " at " << x.location;
                    if (!x.detail.empty()) os << " (" << x.detail << ")";
                }
                return os.str();
            }()),
      violations_(std::move(v)) {}

namespace {

Expr expr_field(const json& j, const std::string& what) {
    if (j.is_number()) return Expr::constant(j.get<double>());
    if (j.is_string()) return Expr::parse(j.get<std::string>());
    throw ParseError(what + ": expected an expression string or a number");
}

Expr expr_or(const json& obj, const char* key, const char* fallback) {
    if (obj.contains(key)) return expr_field(obj.at(key), key);
    return Expr::parse(fallback);
}

DomainKind parse_kind(const std::string& s) {
    if (s == "BoundedFlattenable") return DomainKind::BoundedFlattenable;
    if (s == "PeriodicHalfStrip") return DomainKind::PeriodicHalfStrip;
    if (s == "OscillatingEpsilon") return DomainKind::OscillatingEpsilon;
    throw ParseError("domain.kind: unknown kind '" + s + "'");
}

TopKind parse_top(const std::string& s) {
    if (s == "oblique") return TopKind::Oblique;
    if (s == "neumann") return TopKind::Neumann;
    if (s == "truncation") return TopKind::Truncation;
    if (s == "dirichlet") return TopKind::Dirichlet;
    throw ParseError("domain.top.kind: unknown kind '" + s + "'");
}

std::string loc(double x1, double x2) {
    std::ostringstream os;
    os.precision(6);
    os << "(x1=" << x1 << ", x2=" << x2 << ")";
    return os.str();
}

std::string loc_xi(double x1, double xi) {
    std::ostringstream os;
    os.precision(6);
    os << "(x1=" << x1 << ", xi=" << xi << ")";
    return os.str();
}

std::vector<double> x1_samples(const DomainSpec& d, std::size_t n1) {
    const std::size_t m = std::max<std::size_t>(3, 2 * n1 - 1);
    std::vector<double> xs(m);
    if (d.periodic()) {
        for (std::size_t i = 0; i < m; ++i) xs[i] = d.x1_min + d.period() * double(i) / double(m);
    } else {
        for (std::size_t i = 0; i < m; ++i)
            xs[i] = d.x1_min + (d.x1_max - d.x1_min) * double(i) / double(m - 1);
    }
    return xs;
}

std::vector<double> xi_samples(std::size_t n1) {
    const std::size_t m = std::max<std::size_t>(64, 2 * n1);
    std::vector<double> xs(m);
    for (std::size_t i = 0; i < m; ++i) xs[i] = double(i) / double(m);
    return xs;
}

double top_height_for_probe(const DomainSpec& d) { return d.top_height; }

// Outward normal of the bottom graph x2 = B(x1).
Vec2 bottom_normal(double slope) {
    const double s = std::sqrt(1.0 + slope * slope);
    return {slope / s, -1.0 / s};
}

}  // namespace

std::vector<Vec2> interior_probe_points(const DomainSpec& domain, ProbeGrid probe) {
    const auto xs = x1_samples(domain, probe.n1);
    const std::size_t m2 = std::max<std::size_t>(3, 2 * probe.n2 - 1);
    std::vector<Vec2> pts;
    pts.reserve(xs.size() * m2);
    const double top = top_height_for_probe(domain);
    for (std::size_t j = 0; j < m2; ++j) {
        const double eta = double(j) / double(m2 - 1);
        for (double x1 : xs) {
            const double b = domain.bottom(x1, 0.0);
            pts.push_back({x1, b + eta * (top - b)});
        }
    }
    return pts;
}

std::vector<Violation> validate_problem(const Problem& p, ProbeGrid probe, ValidationStats* stats) {
    std::vector<Violation> out;
    ValidationStats st;
    const auto& d = p.domain;
    const auto& cf = p.coeffs;
    const auto xs = x1_samples(d, probe.n1);
    const auto xis = xi_samples(probe.n1);
    constexpr double kTol = 1e-8;

    auto add = [&out](std::string name, std::string where, std::string detail = {}) {
        // Keep the report readable: at most 8 locations per assumption.
        const auto count = std::count_if(out.begin(), out.end(),
                                         [&](const Violation& v) { return v.name == name; });
        if (count < 8) out.push_back({std::move(name), std::move(where), std::move(detail)});
    };

    if (cf.size() == 0) add("controls", "coefficients", "at least one control is required");
    if (cf.a.size() != cf.size() || cf.b.size() != cf.size())
        add("controls", "coefficients", "a[] and b[] must have one entry per control");
    if (!(d.x1_max > d.x1_min)) add("x1_range", "domain", "x1_range must be increasing");

    if (d.kind == DomainKind::PeriodicHalfStrip &&
        !(d.top == TopKind::Truncation || d.top == TopKind::Neumann))
        add("top_condition", "domain.top", "a half strip needs a truncation/Neumann top");

    // Profiles: non-negativity, periodicity, lateral derivative conditions.
    double f1max = 0.0;
    if (d.kind != DomainKind::BoundedFlattenable) {
        for (double x1 : xs) {
            for (double xi : xis) {
                const double v = d.kind == DomainKind::PeriodicHalfStrip ? d.f1(x1, 0.0, x1)
                                                                         : d.f1(x1, 0.0, xi);
                if (!std::isfinite(v)) add("finite", loc_xi(x1, xi), "f1 is not finite");
                f1max = std::max(f1max, v);
                if (v < -kTol) add("f1_nonnegative", loc_xi(x1, xi), "f1 = " + std::to_string(v));
                if (d.kind == DomainKind::OscillatingEpsilon) {
                    const double w = d.f1(x1, 0.0, xi + 1.0);
                    if (std::fabs(w - v) > 1e-9 * std::max(1.0, std::fabs(v)))
                        add("periodicity", loc_xi(x1, xi), "f1 is not 1-periodic in xi");
                }
                if (d.kind == DomainKind::PeriodicHalfStrip) break;
            }
        }
    }
    if (d.kind == DomainKind::PeriodicHalfStrip) {
        for (double x1 : xs) {
            const double b0 = d.bottom(x1), b1 = d.bottom(x1 + d.period());
            if (std::fabs(b0 - b1) > 1e-9 * std::max(1.0, std::fabs(b0)))
                add("periodicity", loc(x1, b0), "bottom profile is not periodic in x1");
            for (std::size_t al = 0; al < cf.size(); ++al) {
                const double x2 = b0 + 0.5;
                const Sym2 A0 = cf.matrix(al, x1, x2), A1 = cf.matrix(al, x1 + d.period(), x2);
                const Vec2 B0 = cf.drift(al, x1, x2), B1 = cf.drift(al, x1 + d.period(), x2);
                const double diff = std::fabs(A0.a11 - A1.a11) + std::fabs(A0.a12 - A1.a12) +
                                    std::fabs(A0.a22 - A1.a22) + std::fabs(B0.x - B1.x) +
                                    std::fabs(B0.y - B1.y);
                if (diff > 1e-9) add("periodicity", loc(x1, x2), "coefficients not periodic in x1");
            }
        }
    }
    if (d.kind == DomainKind::BoundedFlattenable || d.kind == DomainKind::OscillatingEpsilon) {
        for (double x1 : {d.x1_min, d.x1_max}) {
            const double s = d.f0_d1(x1);
            if (std::fabs(s) > 1e-8) add("lateral_derivative", loc(x1, d.f0(x1, 0.0)), "f0' != 0");
            if (d.kind == DomainKind::OscillatingEpsilon) {
                for (double xi : xis) {
                    const double t = d.f1_dxi(x1, xi);
                    if (std::fabs(t) > 1e-8)
                        add("lateral_derivative", loc_xi(x1, xi), "df1/dxi != 0");
                }
            }
        }
    }
    double bottom_max = -std::numeric_limits<double>::infinity();
    for (double x1 : xs) bottom_max = std::max(bottom_max, d.bottom(x1));
    if (d.kind == DomainKind::OscillatingEpsilon) bottom_max += f1max * d.epsilon.value_or(1.0);
    if (!(d.top_height > bottom_max))
        add("top_above_bottom", "domain.top", "top height must exceed the bottom profile");

    // Coefficients on interior probe points.
    const auto pts = interior_probe_points(d, probe);
    st.min_eigenvalue = std::numeric_limits<double>::infinity();
    st.max_eigenvalue = -std::numeric_limits<double>::infinity();
    const std::size_t m1 = xs.size();
    for (std::size_t al = 0; al < cf.size() && al < cf.a.size() && al < cf.b.size(); ++al) {
        std::vector<Sym2> As(pts.size());
        std::vector<Vec2> Bs(pts.size());
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const auto& x = pts[k];
            const Point3 q{x.x, x.y, 0.0};
            const double a12 = cf.a[al][1](q), a21 = cf.a[al][2](q);
            As[k] = cf.matrix(al, x.x, x.y);
            Bs[k] = cf.drift(al, x.x, x.y);
            const bool finite = std::isfinite(As[k].a11) && std::isfinite(As[k].a12) &&
                                std::isfinite(As[k].a22) && std::isfinite(Bs[k].x) &&
                                std::isfinite(Bs[k].y);
            if (!finite) {
                add("finite", loc(x.x, x.y), "coefficients of control " + cf.controls[al]);
                continue;
            }
            if (std::fabs(a12 - a21) > 1e-12 * std::max(1.0, std::fabs(a12)))
                add("symmetry", loc(x.x, x.y), "a12 != a21 for control " + cf.controls[al]);
            const double lo = As[k].min_eigenvalue(), hi = As[k].max_eigenvalue();
            st.min_eigenvalue = std::min(st.min_eigenvalue, lo);
            st.max_eigenvalue = std::max(st.max_eigenvalue, hi);
            if (As[k].a11 < -kTol || As[k].a22 < -kTol || lo < -kTol)
                add("nonnegative_diffusion", loc(x.x, x.y), "A has a negative eigenvalue");
            if (cf.uniformly_elliptic) {
                const double l1 = cf.lambda1.value_or(0.0);
                const double L1 = cf.Lambda1.value_or(std::numeric_limits<double>::infinity());
                if (lo <= 0.0 || lo < l1 - kTol || hi > L1 + kTol)
                    add("uniform_ellipticity", loc(x.x, x.y),
                        "eigenvalues [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            }
        }
        // Sampled Lipschitz modulus between horizontally/vertically adjacent probes.
        for (std::size_t k = 0; k < pts.size(); ++k) {
            for (std::size_t nb : {k + 1, k + m1}) {
                if (nb >= pts.size() || (nb == k + 1 && (k + 1) % m1 == 0)) continue;
                const double dist = std::hypot(pts[nb].x - pts[k].x, pts[nb].y - pts[k].y);
                if (dist <= 0.0) continue;
                const double da = std::max({std::fabs(As[nb].a11 - As[k].a11),
                                            std::fabs(As[nb].a12 - As[k].a12),
                                            std::fabs(As[nb].a22 - As[k].a22),
                                            std::fabs(Bs[nb].x - Bs[k].x),
                                            std::fabs(Bs[nb].y - Bs[k].y)});
                st.lipschitz = std::max(st.lipschitz, da / dist);
            }
        }
    }
    if (!std::isfinite(st.lipschitz)) add("lipschitz", "coefficients", "modulus is not finite");
    st.samples = pts.size();

    // Boundary data: transversality of gamma and the Robin coefficient.
    st.gamma0 = std::numeric_limits<double>::infinity();
    st.min_c = std::numeric_limits<double>::infinity();
    auto check_gamma = [&](double x1, double x2, Vec2 n) {
        const Vec2 g = p.bc.gamma(x1, x2, n);
        const double dot = g.x * n.x + g.y * n.y;
        if (!std::isfinite(dot)) {
            add("finite", loc(x1, x2), "gamma is not finite");
            return;
        }
        st.gamma0 = std::min(st.gamma0, dot);
        if (dot <= 1e-12) add("transversality", loc(x1, x2), "<gamma, n> = " + std::to_string(dot));
    };
    const bool robin = p.bc.mode == BcMode::Robin || d.kind == DomainKind::OscillatingEpsilon;
    if (d.kind != DomainKind::OscillatingEpsilon) {
        for (double x1 : xs) {
            const double b = d.bottom(x1);
            check_gamma(x1, b, bottom_normal(d.bottom_d1(x1)));
            if (d.top == TopKind::Oblique) check_gamma(x1, d.top_height, {0.0, 1.0});
        }
        if (d.kind == DomainKind::BoundedFlattenable && d.sides == SideKind::Oblique) {
            const std::size_t m2 = std::max<std::size_t>(3, 2 * probe.n2 - 1);
            for (std::size_t j = 0; j < m2; ++j) {
                const double eta = double(j) / double(m2 - 1);
                for (auto [x1, nx] : {std::pair{d.x1_min, -1.0}, std::pair{d.x1_max, 1.0}}) {
                    const double b = d.bottom(x1);
                    check_gamma(x1, b + eta * (d.top_height - b), {nx, 0.0});
                }
            }
        }
    }
    if (robin) {
        const bool osc = d.kind == DomainKind::OscillatingEpsilon;
        for (double x1 : xs) {
            for (double xi : osc ? xis : std::vector<double>{x1}) {
                const double c = p.bc.c(x1, d.bottom(x1), xi);
                const double g = p.bc.g(x1, d.bottom(x1), xi);
                if (!std::isfinite(c) || !std::isfinite(g)) {
                    add("finite", loc_xi(x1, xi), "c or g is not finite");
                    continue;
                }
                st.min_c = std::min(st.min_c, c);
                if (c <= 0.0) add("robin_coefficient", loc_xi(x1, xi), "c = " + std::to_string(c));
                if (osc) {
                    const double c1 = p.bc.c(x1, d.bottom(x1), xi + 1.0);
                    const double g1 = p.bc.g(x1, d.bottom(x1), xi + 1.0);
                    if (std::fabs(c1 - c) > 1e-9 * std::max(1.0, std::fabs(c)) ||
                        std::fabs(g1 - g) > 1e-9 * std::max(1.0, std::fabs(g)))
                        add("periodicity", loc_xi(x1, xi), "c, g not 1-periodic in xi");
                }
            }
        }
    }
    if (!std::isfinite(st.gamma0)) st.gamma0 = 0.0;
    if (!std::isfinite(st.min_c)) st.min_c = 0.0;
    if (stats) *stats = st;
    return out;
}

Problem parse_problem(const std::string& json_text, ProbeGrid probe) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("problem file is not valid JSON: ") + e.what());
    }
    Problem p;
    try {
        p.name = root.value("name", std::string("problem"));
        const json& dom = root.at("domain");
        p.domain.kind = parse_kind(dom.at("kind").get<std::string>());
        const auto range = dom.at("x1_range");
        if (!range.is_array() || range.size() != 2) throw ParseError("domain.x1_range: expected [lo, hi]");
        p.domain.x1_min = range[0].get<double>();
        p.domain.x1_max = range[1].get<double>();
        p.domain.set_profiles(expr_or(dom, "f0", "0"), expr_or(dom, "f1", "0"));
        switch (p.domain.kind) {
            case DomainKind::BoundedFlattenable:
                p.domain.top = TopKind::Oblique;
                p.domain.sides = SideKind::Oblique;
                break;
            case DomainKind::PeriodicHalfStrip:
                p.domain.top = TopKind::Truncation;
                p.domain.sides = SideKind::Periodic;
                break;
            case DomainKind::OscillatingEpsilon:
                p.domain.top = TopKind::Dirichlet;
                p.domain.sides = SideKind::Dirichlet;
                break;
        }
        if (dom.contains("top")) {
            const json& top = dom.at("top");
            if (top.contains("kind")) p.domain.top = parse_top(top.at("kind").get<std::string>());
            p.domain.top_height = top.at("height").get<double>();
            p.domain.top_value = top.value("value", 0.0);
        } else if (p.domain.kind == DomainKind::PeriodicHalfStrip) {
            p.domain.top_height = 4.0;
        }
        if (dom.contains("sides") && p.domain.kind == DomainKind::BoundedFlattenable) {
            const auto s = dom.at("sides").get<std::string>();
            if (s == "oblique") p.domain.sides = SideKind::Oblique;
            else if (s == "dirichlet") p.domain.sides = SideKind::Dirichlet;
            else throw ParseError("domain.sides: unknown kind '" + s + "'");
        }
        if (dom.contains("epsilon")) p.domain.epsilon = dom.at("epsilon").get<double>();

        const json& ctr = root.at("controls");
        const json& a = root.at("a");
        const json& b = root.at("b");
        if (!ctr.is_array() || !a.is_array() || !b.is_array())
            throw ParseError("controls, a and b must be arrays");
        if (a.size() != ctr.size() || b.size() != ctr.size())
            throw ParseError("a[] and b[] must have one entry per control");
        for (std::size_t i = 0; i < ctr.size(); ++i) {
            p.coeffs.controls.push_back(ctr[i].is_string() ? ctr[i].get<std::string>()
                                                           : ctr[i].dump());
            const json& m = a[i];
            if (!m.is_array() || m.size() != 2 || m[0].size() != 2 || m[1].size() != 2)
                throw ParseError("a[" + std::to_string(i) + "] must be a 2x2 array");
            p.coeffs.a.push_back({expr_field(m[0][0], "a11"), expr_field(m[0][1], "a12"),
                                  expr_field(m[1][0], "a21"), expr_field(m[1][1], "a22")});
            const json& v = b[i];
            if (!v.is_array() || v.size() != 2)
                throw ParseError("b[" + std::to_string(i) + "] must have two entries");
            p.coeffs.b.push_back({expr_field(v[0], "b1"), expr_field(v[1], "b2")});
        }
        p.coeffs.uniformly_elliptic = root.value("uniformly_elliptic", false);
        if (root.contains("lambda1")) p.coeffs.lambda1 = root.at("lambda1").get<double>();
        if (root.contains("Lambda1")) p.coeffs.Lambda1 = root.at("Lambda1").get<double>();

        if (root.contains("gamma")) {
            const json& g = root.at("gamma");
            if (g.is_string() && g.get<std::string>() == "normal") {
                p.bc.gamma_is_normal = true;
            } else if (g.is_array() && g.size() == 2) {
                p.bc.gamma_is_normal = false;
                p.bc.gamma1 = expr_field(g[0], "gamma[0]");
                p.bc.gamma2 = expr_field(g[1], "gamma[1]");
            } else {
                throw ParseError("gamma: expected \"normal\" or a pair of expressions");
            }
        }
        p.bc.g = expr_field(root.at("g"), "g");
        p.bc.c = expr_or(root, "c", "0");
        if (root.contains("mode")) {
            const json& m = root.at("mode");
            const auto kind = m.at("kind").get<std::string>();
            if (kind == "discounted") {
                p.bc.mode = BcMode::Discounted;
                p.bc.mode_value = m.value("lambda", 1.0);
                if (!(p.bc.mode_value > 0.0)) throw ParseError("mode.lambda must be positive");
            } else if (kind == "fixed_d") {
                p.bc.mode = BcMode::FixedD;
                p.bc.mode_value = m.value("d", 0.0);
            } else if (kind == "robin") {
                p.bc.mode = BcMode::Robin;
            } else {
                throw ParseError("mode.kind: unknown kind '" + kind + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("problem file: ") + e.what());
    }

    auto violations = validate_problem(p, probe, &p.stats);
    if (!violations.empty()) throw AssumptionViolated(std::move(violations));
    return p;
}

Problem load_problem(const std::string& path, ProbeGrid probe) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open problem file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str(), probe);
}

Admissibility check_degenerate_admissibility(const ControlledCoefficients& coeffs,
                                             const DomainSpec& domain, ProbeGrid probe) {
    const auto pts = interior_probe_points(domain, probe);
    const std::size_t m1 = std::max<std::size_t>(3, domain.periodic() ? 2 * probe.n1 : 2 * probe.n1 - 1);
    const std::size_t m2 = pts.size() / m1;

    double scale = 0.0;
    std::vector<double> min_eig(pts.size(), std::numeric_limits<double>::infinity());
    std::vector<char> sees_all(pts.size(), 1);

    constexpr int kDirections = 64;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        for (std::size_t al = 0; al < coeffs.size(); ++al) {
            const Sym2 A = coeffs.matrix(al, pts[k].x, pts[k].y);
            const Vec2 b = coeffs.drift(al, pts[k].x, pts[k].y);
            min_eig[k] = std::min(min_eig[k], A.min_eigenvalue());
            scale = std::max({scale, A.max_eigenvalue(), std::hypot(b.x, b.y)});
        }
    }
    const double thr = 1e-10 * std::max(1.0, scale);

    // Each direction p must be seen either by diffusion (p^T A p > 0) or by a
    // drift pushing against it (-b.p > 0) for some control.
    for (std::size_t k = 0; k < pts.size(); ++k) {
        for (int q = 0; q < kDirections; ++q) {
            const double th = 2.0 * std::numbers::pi * q / kDirections;
            const Vec2 pdir{std::cos(th), std::sin(th)};
            bool seen = false;
            for (std::size_t al = 0; al < coeffs.size() && !seen; ++al) {
                const Sym2 A = coeffs.matrix(al, pts[k].x, pts[k].y);
                const Vec2 b = coeffs.drift(al, pts[k].x, pts[k].y);
                const double diff = A.a11 * pdir.x * pdir.x + 2 * A.a12 * pdir.x * pdir.y +
                                    A.a22 * pdir.y * pdir.y;
                const double push = -(b.x * pdir.x + b.y * pdir.y);
                seen = diff > thr || push > thr;
            }
            if (!seen) {
                sees_all[k] = 0;
                break;
            }
        }
    }

    bool all_elliptic = true;
    for (double e : min_eig) all_elliptic = all_elliptic && e > thr;
    if (all_elliptic) return Admissibility::UniformlyElliptic;

    // A property holds "on a neighbourhood" when it holds at an interior probe
    // point and at its eight probe neighbours.
    auto on_neighbourhood = [&](auto&& pred) {
        for (std::size_t j = 1; j + 1 < m2; ++j) {
            for (std::size_t i = 0; i < m1; ++i) {
                if (!domain.periodic() && (i == 0 || i + 1 == m1)) continue;
                bool ok = true;
                for (int dj = -1; dj <= 1 && ok; ++dj) {
                    for (int di = -1; di <= 1 && ok; ++di) {
                        const std::size_t ii = (i + m1 + di) % m1;
                        ok = pred(ii + m1 * (j + dj));
                    }
                }
                if (ok) return true;
            }
        }
        return false;
    };
    if (on_neighbourhood([&](std::size_t k) { return min_eig[k] > thr; }))
        return Admissibility::EllipticIsland;
    if (on_neighbourhood([&](std::size_t k) { return sees_all[k] != 0; }))
        return Admissibility::Controllable;
    return Admissibility::Unsupported;
}

}  // namespace oblique
