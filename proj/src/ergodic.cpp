#include "oblique/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oblique/flatten.hpp"

namespace oblique {

const char* to_string(Method m) {
    switch (m) {
        case Method::Auto: return "Auto";
        case Method::VanishingDiscount: return "VanishingDiscount";
        case Method::Truncation: return "Truncation";
        case Method::VanishingViscosity: return "VanishingViscosity";
    }
    return "?";
}

namespace {

const char* kNonUniqueNote =
    "truncated selection: without boundedness of u the constant d is not unique in general; "
    "the value reported is the one selected by the Neumann-truncated system";

GridField make_field(const DiscreteBellman& sys, Eigen::VectorXd v) {
    GridField f;
    f.geom = sys.geometry();
    f.tags = sys.tags();
    f.values = std::move(v);
    return f;
}

// Largest change between two profiles, sampled on the nodes of `prev`.
double profile_change(const GridField& prev, const GridField& next) {
    if (prev.values.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    if (prev.geom.n2 == next.geom.n2 && prev.geom.n1 == next.geom.n1 && prev.geom.top == next.geom.top)
        return (prev.values - next.values).lpNorm<Eigen::Infinity>();
    double worst = 0.0;
    for (std::size_t j = 0; j < prev.geom.n2; ++j)
        for (std::size_t i = 0; i < prev.geom.n1; ++i)
            worst = std::max(worst, std::fabs(next.sample_column(i, prev.geom.x2(i, j)) - prev.at(i, j)));
    return worst;
}

Problem discounted_copy(const Problem& p) {
    Problem q = p;
    q.bc.mode = BcMode::Discounted;
    return q;
}

ErgodicEstimate run_discount(const Problem& p, const ErgodicOptions& opt, double viscosity) {
    if (p.domain.kind == DomainKind::OscillatingEpsilon)
        throw InvalidArgument("the vanishing-discount method needs a bounded or truncated strip domain");
    const Problem q = discounted_copy(p);
    const Geometry geom = make_geometry(q.domain, opt.grid);
    const auto op = flatten_bulk(q, geom, {viscosity, q.coeffs.uniformly_elliptic || viscosity > 0.0});
    auto sys = assemble(op, make_boundary(q, geom));
    const std::size_t x0 = opt.x0 ? nearest_node(geom, *opt.x0) : centroid_node(geom);
    FactorCache cache(opt.cache_capacity);
    return discount_schedule(sys, x0, opt, &cache);
}

ErgodicEstimate run_halfspace(const Problem& p, const ErgodicOptions& opt, double viscosity) {
    if (p.domain.kind != DomainKind::PeriodicHalfStrip)
        throw InvalidArgument("the truncation method needs a PeriodicHalfStrip domain");
    const Problem q = discounted_copy(p);
    const double R0 = q.domain.top_height;
    const Geometry g0 = make_geometry(q.domain, opt.grid, 0.0, R0);
    const std::size_t c0 = centroid_node(g0);
    const Vec2 x0 = opt.x0 ? *opt.x0 : Vec2{g0.x1(c0 % g0.n1), g0.x2(c0 % g0.n1, c0 / g0.n1)};
    auto build = [&](double R) {
        const auto n2 = std::size_t(std::llround(double(opt.grid.n2 - 1) * R / R0)) + 1;
        const Geometry geom = make_geometry(q.domain, {opt.grid.n1, n2}, 0.0, R);
        const auto op = flatten_bulk(q, geom, {viscosity, q.coeffs.uniformly_elliptic || viscosity > 0.0});
        return assemble(op, make_boundary(q, geom));
    };
    FactorCache cache(opt.cache_capacity);
    auto est = truncation_schedule(build, R0, x0, opt, &cache);

    bool drift_ok = true;
    for (const auto& x : interior_probe_points(q.domain, {std::min<std::size_t>(opt.grid.n1, 64),
                                                          std::min<std::size_t>(opt.grid.n2, 64)})) {
        for (std::size_t al = 0; al < q.coeffs.size() && drift_ok; ++al)
            drift_ok = q.coeffs.drift(al, x.x, x.y).y <= 0.0;
        if (!drift_ok) break;
    }
    if (!drift_ok)
        est.diagnostics.push_back(
            "DriftConditionWarning: b2 > 0 somewhere, so uniqueness of d is not guaranteed");
    return est;
}

}  // namespace

ErgodicEstimate discount_schedule(DiscreteBellman& sys, std::size_t x0, const ErgodicOptions& opt,
                                  FactorCache* cache) {
    if (opt.k_max < opt.k_min + 1) throw InvalidArgument("discount schedule needs at least two steps");
    ErgodicEstimate est;
    est.method = Method::VanishingDiscount;
    est.x0_node = x0;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(sys.size()));
    Eigen::VectorXd w, w_prev;
    std::vector<std::uint16_t> pol;
    double d_prev = std::numeric_limits<double>::quiet_NaN();
    double e_prev = std::numeric_limits<double>::quiet_NaN();
    for (int k = opt.k_min; k <= opt.k_max; ++k) {
        const double lambda = std::ldexp(1.0, -k);
        sys.set_discount(lambda);
        auto r = solve_howard(sys, u, opt.howard, pol.empty() ? nullptr : &pol, cache);
        pol = std::move(r.policy);
        u = std::move(r.u);
        ScheduleEntry e;
        e.parameter = lambda;
        e.d_estimate = lambda * u[Eigen::Index(x0)];
        e.iterations = r.iterations;
        w = u.array() - u[Eigen::Index(x0)];
        if (w_prev.size()) e.profile_delta = (w - w_prev).lpNorm<Eigen::Infinity>();
        if (!std::isnan(d_prev)) e.extrapolate = 2.0 * e.d_estimate - d_prev;
        est.schedule.push_back(e);
        const bool ok = !std::isnan(e_prev) && std::fabs(e.extrapolate - e_prev) < opt.tol_d;
        est.converged = ok;
        d_prev = e.d_estimate;
        e_prev = e.extrapolate;
        w_prev = w;
        if (ok && opt.early_stop) break;
    }
    est.d = est.schedule.back().extrapolate;
    est.profile = make_field(sys, std::move(w));
    if (!est.converged) {
        std::ostringstream os;
        os << "vanishing-discount schedule did not reach |E_k - E_{k-1}| < " << opt.tol_d
           << " by lambda = 2^-" << opt.k_max;
        throw ScheduleNonConvergence(os.str(), std::move(est));
    }
    return est;
}

ErgodicEstimate truncation_schedule(const TruncatedBuilder& build, double R0, Vec2 x0,
                                    const ErgodicOptions& opt, FactorCache* cache) {
    ErgodicEstimate est;
    est.method = Method::Truncation;
    double d_prev = std::numeric_limits<double>::quiet_NaN();
    double e_prev = std::numeric_limits<double>::quiet_NaN();
    for (int j = 0; j <= opt.max_doublings; ++j) {
        const double R = R0 * std::ldexp(1.0, j);
        DiscreteBellman sys = build(R);
        const std::size_t x0n = nearest_node(sys.geometry(), x0);
        ErgodicEstimate in;
        try {
            in = discount_schedule(sys, x0n, opt, cache);
        } catch (const ScheduleNonConvergence& e) {
            est.inner.push_back(e.estimate().schedule);
            est.d = e.estimate().d;
            est.profile = e.estimate().profile;
            std::ostringstream os;
            os << "truncation at R = " << R << ": " << e.what();
            throw ScheduleNonConvergence(os.str(), std::move(est));
        }
        ScheduleEntry e;
        e.parameter = R;
        e.d_estimate = in.d;
        e.extrapolate = in.d;
        if (opt.extrapolate_height) e.extrapolate = std::isnan(d_prev) ? in.d : 2.0 * in.d - d_prev;
        e.profile_delta = profile_change(est.profile, in.profile);
        for (const auto& s : in.schedule) e.iterations += s.iterations;
        est.schedule.push_back(e);
        est.inner.push_back(in.schedule);
        est.profile = std::move(in.profile);
        est.x0_node = x0n;
        if (opt.extrapolate_height) {
            est.d = e.extrapolate;
            est.converged = j >= 2 && std::fabs(e.extrapolate - e_prev) < opt.tol_d;
        } else {
            est.d = in.d;
            est.converged = !std::isnan(d_prev) && std::fabs(in.d - d_prev) < opt.tol_d;
        }
        d_prev = in.d;
        e_prev = e.extrapolate;
        if (est.converged && opt.early_stop) break;
    }
    est.diagnostics.push_back(kNonUniqueNote);
    if (!est.converged) {
        std::ostringstream os;
        os << "truncation did not stabilize within " << opt.tol_d << " by R = "
           << est.schedule.back().parameter;
        throw ScheduleNonConvergence(os.str(), std::move(est));
    }
    return est;
}

ErgodicEstimate extract_d_discount(const Problem& p, const ErgodicOptions& opt) {
    auto est = run_discount(p, opt, 0.0);
    if (!p.coeffs.uniformly_elliptic)
        est.diagnostics.push_back("coefficients are not flagged uniformly elliptic");
    return est;
}

ErgodicEstimate extract_d_halfspace(const Problem& p, const ErgodicOptions& opt) {
    return run_halfspace(p, opt, 0.0);
}

ErgodicEstimate extract_d_degenerate(const Problem& p, const ErgodicOptions& opt) {
    const ProbeGrid probe{std::min<std::size_t>(opt.grid.n1, 32), std::min<std::size_t>(opt.grid.n2, 32)};
    const Admissibility adm = check_degenerate_admissibility(p.coeffs, p.domain, probe);
    if (adm == Admissibility::Unsupported)
        throw UnsupportedDegenerate(
            "neither an elliptic island nor controllability holds on the probe grid");
    const bool strip = p.domain.kind == DomainKind::PeriodicHalfStrip;
    ErgodicEstimate est;
    est.method = Method::VanishingViscosity;
    est.diagnostics.push_back(std::string("admissibility: ") + to_string(adm));
    est.diagnostics.push_back(
        "vanishing viscosity: d is reported with the band of d_eps; uniqueness is not claimed");
    double d_prev = std::numeric_limits<double>::quiet_NaN();
    for (int k = opt.eps_k_min; k <= opt.eps_k_max; ++k) {
        const double eps = std::ldexp(1.0, -k);
        ErgodicEstimate in;
        bool inner_ok = true;
        try {
            in = strip ? run_halfspace(p, opt, eps) : run_discount(p, opt, eps);
        } catch (const ScheduleNonConvergence& e) {
            in = e.estimate();
            inner_ok = false;
        }
        ScheduleEntry e;
        e.parameter = eps;
        e.d_estimate = in.d;
        e.profile_delta = profile_change(est.profile, in.profile);
        for (const auto& s : in.schedule) e.iterations += s.iterations;
        est.schedule.push_back(e);
        est.inner.push_back(in.schedule);
        est.profile = std::move(in.profile);
        est.x0_node = in.x0_node;
        est.d = in.d;
        if (!inner_ok)
            est.diagnostics.push_back("inner schedule at eps = " + std::to_string(eps) +
                                      " did not converge");
        est.converged = inner_ok && !std::isnan(d_prev) && std::fabs(in.d - d_prev) < opt.tol_d;
        d_prev = in.d;
        if (est.converged && opt.early_stop) break;
    }
    est.band_lo = est.band_hi = est.d;
    for (const auto& s : est.schedule) {
        est.band_lo = std::min(est.band_lo, s.d_estimate);
        est.band_hi = std::max(est.band_hi, s.d_estimate);
    }
    if (!est.converged) {
        std::ostringstream os;
        os << "d_eps is not Cauchy within " << opt.tol_d << "; band [" << est.band_lo << ", "
           << est.band_hi << "], width " << est.band_hi - est.band_lo;
        est.diagnostics.push_back(os.str());
    }
    return est;
}

Method select_method(const Problem& p, GridShape grid) {
    switch (p.domain.kind) {
        case DomainKind::PeriodicHalfStrip: return Method::Truncation;
        case DomainKind::OscillatingEpsilon:
            throw InvalidArgument("oscillating domains are handled by the homogenization pipeline");
        case DomainKind::BoundedFlattenable: break;
    }
    const ProbeGrid probe{std::min<std::size_t>(grid.n1, 32), std::min<std::size_t>(grid.n2, 32)};
    return check_degenerate_admissibility(p.coeffs, p.domain, probe) == Admissibility::UniformlyElliptic
               ? Method::VanishingDiscount
               : Method::VanishingViscosity;
}

ErgodicEstimate extract_d(const Problem& p, Method m, const ErgodicOptions& opt) {
    if (m == Method::Auto) m = select_method(p, opt.grid);
    switch (m) {
        case Method::VanishingDiscount: return extract_d_discount(p, opt);
        case Method::Truncation: return extract_d_halfspace(p, opt);
        case Method::VanishingViscosity: return extract_d_degenerate(p, opt);
        case Method::Auto: break;
    }
    throw InvalidArgument("unknown method");
}

}  // namespace oblique
