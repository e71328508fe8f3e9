#include "oblique/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oblique/parallel.hpp"
#include "oblique/report.hpp"

namespace oblique {

namespace {

constexpr int kQuad = 256;  // periodic trapezoid nodes in xi

void require_oscillating(const Problem& p, const char* what) {
    if (p.domain.kind != DomainKind::OscillatingEpsilon)
        throw InvalidArgument(std::string(what) + " needs an OscillatingEpsilon problem, got " +
                              to_string(p.domain.kind));
}

GridField to_field(const DiscreteBellman& sys, Eigen::VectorXd v) {
    GridField f;
    f.geom = sys.geometry();
    f.tags = sys.tags();
    f.values = std::move(v);
    return f;
}

// Arc-length weighted averages of c and g over one period at the limit
// bottom point above x1.
std::pair<double, double> averaged_robin(const Problem& p, double x1) {
    const auto& d = p.domain;
    const double s = d.f0_d1(x1), x2 = d.f0(x1, 0.0);
    double cbar = 0.0, gbar = 0.0;
    for (int q = 0; q < kQuad; ++q) {
        const double xi = (q + 0.5) / kQuad;
        const double t = s + d.f1_dxi(x1, xi);
        const double w = std::sqrt(1.0 + t * t) / std::sqrt(1.0 + s * s) / kQuad;
        cbar += w * p.bc.c(x1, x2, xi);
        gbar += w * p.bc.g(x1, x2, xi);
    }
    return {cbar, gbar};
}

}  // namespace

EpsilonSolve solve_epsilon(const Problem& p, double eps, GridShape grid, const HowardOptions& opt) {
    require_oscillating(p, "solve_epsilon");
    if (!(eps > 0.0)) throw InvalidArgument("epsilon must be positive");
    const Geometry g = make_geometry(p.domain, grid, eps);
    if (g.h1 > eps / 8.0 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "grid does not resolve the oscillation: h1 = " << g.h1 << " > eps/8 = " << eps / 8.0
           << "; use at least " << std::size_t(std::ceil(8.0 * p.domain.period() / eps)) + 1 << " columns";
        throw ResolutionError(os.str());
    }
    auto flat = flatten_bulk(p, g, {0.0, false});
    const DiscreteBellman sys = assemble(flat, make_boundary(p, g, eps));
    FactorCache cache(1);
    const auto r = solve_howard(sys, Eigen::VectorXd::Zero(Eigen::Index(sys.size())), opt, nullptr, &cache);
    EpsilonSolve out;
    out.eps = eps;
    out.iterations = r.iterations;
    out.residual = r.residual;
    out.max_abs = r.u.lpNorm<Eigen::Infinity>();
    out.u = to_field(sys, r.u);
    return out;
}

GridField solve_flat_law(const Problem& p, GridShape grid, const HowardOptions& opt) {
    require_oscillating(p, "solve_flat_law");
    const Geometry g = make_geometry(p.domain, grid, 0.0);
    auto flat = flatten_bulk(p, g, {0.0, false});
    BoundarySpec bc = make_boundary(p, g, 0.0);
    for (std::size_t i = 0; i < g.n1; ++i) {
        const std::size_t k = g.index(i, 0);
        if (bc.tags[k] != NodeTag::ObliqueBoundary) continue;
        const auto [cbar, gbar] = averaged_robin(p, g.x1(i));
        bc.rows[k] = BoundaryRow{bottom_normal(g, i), cbar, false, gbar};
    }
    const DiscreteBellman sys = assemble(flat, bc);
    const auto r = solve_howard(sys, Eigen::VectorXd::Zero(Eigen::Index(sys.size())), opt);
    return to_field(sys, r.u);
}

BoundaryTrace boundary_trace(const GridField& u) {
    const Geometry& g = u.geom;
    BoundaryTrace t;
    for (std::size_t i = 0; i < g.n1; ++i) {
        const std::size_t k = g.index(i, 0);
        if (k < u.tags.size() && u.tags[k] != NodeTag::ObliqueBoundary) continue;
        double us;
        if (g.periodic) {
            us = (u.at((i + 1) % g.n1, 0) - u.at((i + g.n1 - 1) % g.n1, 0)) / (2.0 * g.h1);
        } else if (i == 0) {
            us = (u.at(1, 0) - u.at(0, 0)) / g.h1;
        } else if (i + 1 == g.n1) {
            us = (u.at(i, 0) - u.at(i - 1, 0)) / g.h1;
        } else {
            us = (u.at(i + 1, 0) - u.at(i - 1, 0)) / (2.0 * g.h1);
        }
        const double ueta = (u.at(i, 1) - u.at(i, 0)) / g.h2;
        const double e1 = -g.bottom_d1[i] / g.depth(i);
        t.x1.push_back(g.x1(i));
        t.r.push_back(u.values[Eigen::Index(k)]);
        t.p1.push_back(us + e1 * ueta);
    }
    return t;
}

KnotGrids knots_from_trace(const Problem& p, const BoundaryTrace& t, const HomogenizeOptions& opt) {
    if (t.r.empty()) throw InvalidArgument("boundary trace is empty");
    auto padded = [&](const std::vector<double>& v, std::size_t n) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const double span = *hi - *lo;
        if (n == 1) return std::vector<double>{0.5 * (*lo + *hi)};
        const double pad = opt.margin * span + 0.05 * std::max({1.0, std::fabs(*lo), std::fabs(*hi)});
        return linspace(*lo - pad, *hi + pad, n);
    };
    KnotGrids k;
    k.x1 = linspace(p.domain.x1_min, p.domain.x1_max, opt.knots_x1);
    k.r = padded(t.r, opt.knots_r);
    k.p1 = padded(t.p1, opt.knots_p1);
    return k;
}

HomogenizedSolve solve_homogenized(const Problem& p, const EffectiveLawTable& law, GridShape grid,
                                   const HomogenizeOptions& opt, const GridField* init) {
    require_oscillating(p, "solve_homogenized");
    if (!(opt.theta > 0.0 && opt.theta <= 1.0)) throw InvalidArgument("outer damping must lie in (0, 1]");
    const Geometry g = make_geometry(p.domain, grid, 0.0);
    auto flat = flatten_bulk(p, g, {0.0, false});
    BoundarySpec bc = make_boundary(p, g, 0.0);

    GridField u;
    u.geom = g;
    u.tags = bc.tags;
    u.values = Eigen::VectorXd::Zero(Eigen::Index(g.size()));
    if (init && init->values.size()) {
        if (init->geom.n1 != g.n1 || init->geom.n2 != g.n2)
            throw InvalidArgument("initial field does not match the homogenized grid");
        u.values = init->values;
    }

    HomogenizedSolve out;
    FactorCache cache(2);
    std::vector<std::uint16_t> pol;
    for (std::size_t m = 0; m < opt.outer_max; ++m) {
        const BoundaryTrace t = boundary_trace(u);
        std::size_t q = 0;
        for (std::size_t i = 0; i < g.n1; ++i) {
            const std::size_t k = g.index(i, 0);
            if (bc.tags[k] != NodeTag::ObliqueBoundary) continue;
            const double L = law(t.x1[q], t.r[q], t.p1[q]);
            const double s = std::max(0.0, law.r_slope(t.x1[q], t.r[q], t.p1[q]));
            bc.rows[k] = BoundaryRow{bottom_normal(g, i), s, false, s * t.r[q] - L};
            ++q;
        }
        const DiscreteBellman sys = assemble(flat, bc);
        auto r = solve_howard(sys, u.values, opt.howard, pol.empty() ? nullptr : &pol, &cache);
        pol = std::move(r.policy);
        out.howard_iterations += r.iterations;
        Eigen::VectorXd next = opt.theta * r.u + (1.0 - opt.theta) * u.values;
        const double inc = (next - u.values).lpNorm<Eigen::Infinity>();
        out.increments.push_back(inc);
        u.values = std::move(next);
        if (inc < opt.outer_tol) {
            const BoundaryTrace fin = boundary_trace(u);
            for (std::size_t j = 0; j < fin.r.size(); ++j) {
                if (law.contains(fin.x1[j], fin.r[j], fin.p1[j])) continue;
                std::ostringstream os;
                os << "homogenized boundary data leave the law table at x1 = " << fin.x1[j]
                   << " (r = " << fin.r[j] << ", p1 = " << fin.p1[j] << "); widen the knot ranges";
                throw TableRangeExceeded(fin.x1[j], fin.r[j], fin.p1[j], os.str());
            }
            out.u = std::move(u);
            return out;
        }
    }
    std::ostringstream os;
    os << "outer iteration did not reach increment < " << opt.outer_tol << " in " << opt.outer_max
       << " steps (last increment " << out.increments.back() << ")";
    throw OuterNonConvergence(os.str());
}

ConvergenceReport convergence_study(const Problem& p, const std::vector<double>& eps_list,
                                    const HomogenizeOptions& opt) {
    require_oscillating(p, "convergence_study");
    if (eps_list.empty()) throw InvalidArgument("epsilon list is empty");
    for (std::size_t q = 0; q < eps_list.size(); ++q) {
        if (!(eps_list[q] > 0.0)) throw InvalidArgument("epsilons must be positive");
        if (q && !(eps_list[q] < eps_list[q - 1])) throw InvalidArgument("epsilons must be strictly decreasing");
    }
    ConvergenceReport rep;
    rep.epsilons = eps_list;
    rep.solves.resize(eps_list.size());
    parallel_for(eps_list.size(),
                 [&](std::size_t q) { rep.solves[q] = solve_epsilon(p, eps_list[q], opt.grid, opt.howard); });

    // Corner gradients sharpen with resolution, so the ranges also see the
    // flat law on the target grid.
    const GridField pilot = solve_flat_law(p, opt.pilot_grid, opt.howard);
    const GridField start = solve_flat_law(p, opt.grid, opt.howard);
    BoundaryTrace span = boundary_trace(pilot);
    const BoundaryTrace fine = boundary_trace(start);
    span.x1.insert(span.x1.end(), fine.x1.begin(), fine.x1.end());
    span.r.insert(span.r.end(), fine.r.begin(), fine.r.end());
    span.p1.insert(span.p1.end(), fine.p1.begin(), fine.p1.end());
    rep.law = build_law_table(p, knots_from_trace(p, span, opt), opt.cell);
    auto hom = solve_homogenized(p, rep.law, opt.grid, opt, &start);
    rep.outer_increments = hom.increments;
    rep.homog_solution = std::move(hom.u);
    if (opt.restart_check) {
        const auto again = solve_homogenized(p, rep.law, opt.grid, opt, nullptr);
        rep.restart_gap = (again.u.values - rep.homog_solution.values).lpNorm<Eigen::Infinity>();
    }

    const auto& d = p.domain;
    const Geometry& g = rep.homog_solution.geom;
    double f1max = 0.0;
    rep.barrier = std::fabs(d.top_value);
    for (std::size_t i = 0; i < g.n1; ++i) {
        const double x1 = g.x1(i), x2 = d.f0(x1, 0.0);
        for (int q = 0; q < kQuad; ++q) {
            const double xi = double(q) / kQuad;
            f1max = std::max(f1max, d.f1(x1, 0.0, xi));
            const double c = p.bc.c(x1, x2, xi);
            if (c > 0.0) rep.barrier = std::max(rep.barrier, std::fabs(p.bc.g(x1, x2, xi)) / c);
        }
    }
    rep.layer_depth = eps_list.front() * f1max;

    const auto& u = rep.homog_solution;
    for (const auto& s : rep.solves) {
        rep.max_abs_u = std::max(rep.max_abs_u, s.max_abs);
        double err = 0.0;
        std::size_t count = 0;
        for (std::size_t j = 0; j < g.n2; ++j)
            for (std::size_t i = 0; i < g.n1; ++i) {
                const std::size_t k = g.index(i, j);
                if (u.tags[k] == NodeTag::Dirichlet) continue;
                const double x2 = g.x2(i, j);
                if (x2 - g.bottom[i] < rep.layer_depth) continue;
                err = std::max(err, std::fabs(u.values[Eigen::Index(k)] - s.u.sample_column(i, x2)));
                ++count;
            }
        rep.sup_errors.push_back(err);
        rep.compared_nodes = count;
    }
    if (rep.max_abs_u > rep.barrier * (1.0 + 1e-6) + 1e-9) {
        std::ostringstream os;
        os << "max |u_eps| = " << rep.max_abs_u << " exceeds the barrier M = " << rep.barrier;
        rep.diagnostics.push_back(os.str());
    }
    for (std::size_t q = 1; q < rep.sup_errors.size(); ++q)
        if (rep.sup_errors[q] > rep.sup_errors[q - 1])
            rep.diagnostics.push_back("sup error increased from eps = " + format_double(eps_list[q - 1]) +
                                      " to eps = " + format_double(eps_list[q]));
    if (rep.restart_gap > 1e3 * opt.outer_tol)
        rep.diagnostics.push_back("outer iteration from u = 0 ends " + format_double(rep.restart_gap) +
                                  " away from the pilot start");
    return rep;
}

std::string ConvergenceReport::to_csv() const {
    std::string out = "eps,sup_error,iterations\n";
    for (std::size_t q = 0; q < epsilons.size(); ++q)
        out += format_double(epsilons[q]) + ',' + format_double(sup_errors[q]) + ',' +
               std::to_string(solves[q].iterations) + '\n';
    return out;
}

std::string ConvergenceReport::to_json() const {
    nlohmann::json j;
    j["epsilons"] = nlohmann::json::array();
    j["sup_errors"] = nlohmann::json::array();
    for (double e : epsilons) j["epsilons"].push_back(json_number(e));
    for (double e : sup_errors) j["sup_errors"].push_back(json_number(e));
    auto& per = j["solves"] = nlohmann::json::array();
    for (const auto& s : solves)
        per.push_back({{"eps", json_number(s.eps)},
                       {"iterations", s.iterations},
                       {"residual", json_number(s.residual)},
                       {"max_abs", json_number(s.max_abs)},
                       {"grid", field_summary(s.u)}});
    j["homogenized"] = field_summary(homog_solution);
    auto& inc = j["outer_increments"] = nlohmann::json::array();
    for (double v : outer_increments) inc.push_back(json_number(v));
    j["barrier"] = json_number(barrier);
    j["max_abs_u"] = json_number(max_abs_u);
    j["layer_depth"] = json_number(layer_depth);
    j["compared_nodes"] = compared_nodes;
    j["restart_gap"] = restart_gap < 0.0 ? nlohmann::json(nullptr) : json_number(restart_gap);
    const auto& k = law.knots();
    j["law_knots"] = {{"x1", k.x1.size()}, {"r", k.r.size()}, {"p1", k.p1.size()}};
    if (!k.r.empty()) {
        j["law_range"] = {{"r", {k.r.front(), k.r.back()}}, {"p1", {k.p1.front(), k.p1.back()}}};
        j["law_worst_r_increment"] = json_number(law.worst_r_increment());
    }
    j["diagnostics"] = diagnostics;
    return j.dump(2);
}

}  // namespace oblique
