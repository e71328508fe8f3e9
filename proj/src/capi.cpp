#include "oblique/oblique.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "oblique/cell.hpp"
#include "oblique/ergodic.hpp"
#include "oblique/flatten.hpp"
#include "oblique/homogenize.hpp"
#include "oblique/problem.hpp"
#include "oblique/report.hpp"

using namespace oblique;
using nlohmann::json;

struct obq_problem {
    Problem p;
};

struct obq_result {
    double d = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    bool band = false;
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    std::string json;
    std::vector<std::pair<std::string, std::string>> artifacts;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_code;

const std::map<std::string, obq_status>& status_by_code() {
    static const std::map<std::string, obq_status> m{
        {"ParseError", OBQ_ERR_PARSE},
        {"AssumptionViolated", OBQ_ERR_ASSUMPTION},
        {"EllipticityLost", OBQ_ERR_ELLIPTICITY},
        {"MonotonicityViolated", OBQ_ERR_MONOTONICITY},
        {"SingularPolicySystem", OBQ_ERR_SINGULAR},
        {"NonConvergence", OBQ_ERR_NONCONVERGENCE},
        {"UnsupportedDegenerate", OBQ_ERR_UNSUPPORTED_DEGENERATE},
        {"ResolutionError", OBQ_ERR_RESOLUTION},
        {"TableRangeExceeded", OBQ_ERR_TABLE_RANGE},
        {"OuterNonConvergence", OBQ_ERR_OUTER_NONCONVERGENCE},
        {"MonotonicityViolation", OBQ_ERR_MONOTONICITY_VIOLATION},
        {"InvalidArgument", OBQ_ERR_INVALID_ARGUMENT},
        {"IoError", OBQ_ERR_IO},
    };
    return m;
}

obq_status fail(obq_status s, const std::string& code, const std::string& what) {
    g_error = what;
    g_code = code;
    return s;
}

// Runs body and maps library exceptions to status codes.
template <class F>
obq_status guarded(F&& body) {
    try {
        g_error.clear();
        g_code.clear();
        return body();
    } catch (const Error& e) {
        const auto it = status_by_code().find(e.code());
        return fail(it == status_by_code().end() ? OBQ_ERR_INTERNAL : it->second, e.code(), e.what());
    } catch (const std::exception& e) {
        return fail(OBQ_ERR_INTERNAL, "Internal", e.what());
    } catch (...) {
        return fail(OBQ_ERR_INTERNAL, "Internal", "unknown exception");
    }
}

obq_options defaults() {
    obq_options o{};
    obq_options_default(&o);
    return o;
}

void check_options(const obq_options& o) {
    if (o.n1 < 3 || o.n2 < 3) throw InvalidArgument("grid needs at least 3 x 3 nodes");
    if (!(o.tol_d > 0.0) || !(o.tol_solver > 0.0)) throw InvalidArgument("tolerances must be positive");
    if (o.k_min < 0 || o.k_max <= o.k_min) throw InvalidArgument("need 0 <= k_min < k_max");
    if (o.max_doublings < 0) throw InvalidArgument("max_doublings must be nonnegative");
    if (o.cell_n1 < 4) throw InvalidArgument("cell needs at least 4 columns");
    if (!(o.cell_r0 > 0.0)) throw InvalidArgument("cell truncation height must be positive");
    if (o.cell_max_doublings < 0) throw InvalidArgument("cell_max_doublings must be nonnegative");
}

HowardOptions howard_options(const obq_options& o) {
    HowardOptions h;
    h.residual_tol = o.tol_solver;
    return h;
}

ErgodicOptions ergodic_options(const obq_options& o) {
    ErgodicOptions e;
    e.grid = {o.n1, o.n2};
    e.tol_d = o.tol_d;
    e.k_min = o.k_min;
    e.k_max = o.k_max;
    e.early_stop = o.early_stop != 0;
    e.max_doublings = o.max_doublings;
    e.howard = howard_options(o);
    if (o.has_x0) e.x0 = Vec2{o.x0[0], o.x0[1]};
    return e;
}

CellOptions cell_options(const obq_options& o) {
    CellOptions c;
    c.n1 = o.cell_n1;
    c.tol_d = o.tol_d;
    c.R0 = o.cell_r0;
    c.max_doublings = o.cell_max_doublings;
    c.k_min = o.k_min;
    c.k_max = o.k_max;
    c.early_stop = o.early_stop != 0;
    c.howard = howard_options(o);
    return c;
}

json options_json(const obq_options& o) {
    return {{"grid", {o.n1, o.n2}},
            {"tol_d", o.tol_d},
            {"tol_solver", o.tol_solver},
            {"k_range", {o.k_min, o.k_max}},
            {"max_doublings", o.max_doublings},
            {"early_stop", o.early_stop != 0},
            {"cell_n1", o.cell_n1},
            {"cell_r0", o.cell_r0},
            {"cell_max_doublings", o.cell_max_doublings}};
}

json verdict(bool pass, json value) { return {{"pass", pass}, {"value", std::move(value)}}; }

Method to_method(int m) {
    switch (m) {
        case OBQ_METHOD_AUTO: return Method::Auto;
        case OBQ_METHOD_DISCOUNT: return Method::VanishingDiscount;
        case OBQ_METHOD_TRUNCATION: return Method::Truncation;
        case OBQ_METHOD_VISCOSITY: return Method::VanishingViscosity;
    }
    throw InvalidArgument("unknown method " + std::to_string(m));
}

// Range of g over the discounted boundary rows of the solve grid. With no
// zeroth-order interior term, constants compare with u and min g <= d <= max g.
std::pair<double, double> discounted_g_range(const Problem& p, GridShape grid) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    if (p.bc.mode != BcMode::Discounted || p.domain.kind == DomainKind::OscillatingEpsilon) return {lo, hi};
    const Geometry g = make_geometry(p.domain, grid);
    const BoundarySpec bc = make_boundary(p, g);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (bc.tags[k] == NodeTag::ObliqueBoundary && bc.rows[k].discounted) {
            lo = std::min(lo, bc.rows[k].rhs);
            hi = std::max(hi, bc.rows[k].rhs);
        }
    return {lo, hi};
}

void fill_estimate(obq_result& r, const ErgodicEstimate& est) {
    r.d = est.d;
    r.converged = est.converged;
    r.band = est.method == Method::VanishingViscosity && !est.converged;
    r.lo = est.band_lo;
    r.hi = est.band_hi;
    r.artifacts.emplace_back("schedule.csv", schedule_csv(est));
}

void require(const void* p, const char* what) {
    if (!p) throw InvalidArgument(std::string(what) + " is null");
}

}  // namespace

extern "C" {

void obq_options_default(obq_options* opt) {
    if (!opt) return;
    *opt = obq_options{};
    opt->n1 = 64;
    opt->n2 = 64;
    opt->tol_d = 1e-6;
    opt->tol_solver = 1e-9;
    opt->method = OBQ_METHOD_AUTO;
    opt->k_min = 3;
    opt->k_max = 12;
    opt->max_doublings = 4;
    opt->early_stop = 1;
    opt->cell_n1 = 32;
    opt->cell_r0 = 4.0;
    opt->cell_max_doublings = 5;
    opt->knots[0] = 5;
    opt->knots[1] = 7;
    opt->knots[2] = 5;
    opt->r_range[0] = -1.0;
    opt->r_range[1] = 1.0;
    opt->p1_range[0] = -1.0;
    opt->p1_range[1] = 1.0;
}

const char* obq_version(void) { return "1.0.0"; }

const char* obq_status_name(obq_status s) {
    switch (s) {
        case OBQ_OK: return "OK";
        case OBQ_ERR_PARSE: return "ParseError";
        case OBQ_ERR_ASSUMPTION: return "AssumptionViolated";
        case OBQ_ERR_ELLIPTICITY: return "EllipticityLost";
        case OBQ_ERR_MONOTONICITY: return "MonotonicityViolated";
        case OBQ_ERR_SINGULAR: return "SingularPolicySystem";
        case OBQ_ERR_NONCONVERGENCE: return "NonConvergence";
        case OBQ_ERR_UNSUPPORTED_DEGENERATE: return "UnsupportedDegenerate";
        case OBQ_ERR_RESOLUTION: return "ResolutionError";
        case OBQ_ERR_TABLE_RANGE: return "TableRangeExceeded";
        case OBQ_ERR_OUTER_NONCONVERGENCE: return "OuterNonConvergence";
        case OBQ_ERR_MONOTONICITY_VIOLATION: return "MonotonicityViolation";
        case OBQ_ERR_INVALID_ARGUMENT: return "InvalidArgument";
        case OBQ_ERR_IO: return "IoError";
        case OBQ_ERR_INTERNAL: return "Internal";
    }
    return "Unknown";
}

const char* obq_last_error(void) { return g_error.c_str(); }
const char* obq_last_error_code(void) { return g_code.c_str(); }

obq_status obq_problem_parse(const char* text, size_t n1, size_t n2, obq_problem** out) {
    return guarded([&] {
        require(text, "json");
        require(out, "out");
        *out = new obq_problem{parse_problem(text, {n1, n2})};
        return OBQ_OK;
    });
}

obq_status obq_problem_load(const char* path, size_t n1, size_t n2, obq_problem** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new obq_problem{load_problem(path, {n1, n2})};
        return OBQ_OK;
    });
}

void obq_problem_free(obq_problem* p) { delete p; }

const char* obq_problem_name(const obq_problem* p) { return p ? p->p.name.c_str() : ""; }

obq_status obq_validate(const char* path, size_t n1, size_t n2, obq_result** out, int* ok) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        json j;
        j["command"] = "validate";
        j["path"] = path;
        auto& list = j["violations"] = json::array();
        auto push = [&list](const Violation& v) {
            list.push_back({{"name", v.name}, {"location", v.location}, {"detail", v.detail}});
        };
        try {
            const Problem p = load_problem(path, {n1, n2});
            j["problem"] = p.name;
            j["domain"] = to_string(p.domain.kind);
            j["stats"] = {{"gamma0", p.stats.gamma0},
                          {"lipschitz", p.stats.lipschitz},
                          {"min_eigenvalue", p.stats.min_eigenvalue},
                          {"max_eigenvalue", p.stats.max_eigenvalue},
                          {"min_c", p.stats.min_c},
                          {"samples", p.stats.samples}};
            if (p.domain.kind == DomainKind::OscillatingEpsilon) {
                for (const auto& v : validate_homogenization_assumptions(p, {n1, n2})) push(v);
            } else {
                j["admissibility"] = to_string(check_degenerate_admissibility(
                    p.coeffs, p.domain, {std::min<std::size_t>(n1, 32), std::min<std::size_t>(n2, 32)}));
                j["method"] = to_string(select_method(p, {n1, n2}));
            }
        } catch (const AssumptionViolated& e) {
            for (const auto& v : e.violations()) push(v);
        }
        const bool good = list.empty();
        j["valid"] = good;
        auto* r = new obq_result;
        r->converged = good;
        r->json = j.dump(2) + "\n";
        *out = r;
        if (ok) *ok = good ? 1 : 0;
        return OBQ_OK;
    });
}

obq_status obq_ergodic(const obq_problem* p, const obq_options* opt, obq_result** out) {
    return guarded([&] {
        require(p, "problem");
        require(out, "out");
        const obq_options o = opt ? *opt : defaults();
        check_options(o);
        const ErgodicOptions eo = ergodic_options(o);
        const Method m = to_method(o.method);
        auto r = std::make_unique<obq_result>();
        json j;
        j["command"] = "ergodic";
        j["problem"] = p->p.name;
        j["options"] = options_json(o);
        obq_status status = OBQ_OK;
        ErgodicEstimate est;
        try {
            est = extract_d(p->p, m, eo);
        } catch (const ScheduleNonConvergence& e) {
            est = e.estimate();
            status = fail(OBQ_ERR_NONCONVERGENCE, e.code(), e.what());
            j["error"] = {{"code", e.code()}, {"message", e.what()}};
        }
        fill_estimate(*r, est);
        j["d"] = json_number(est.d);
        j["converged"] = est.converged;
        j["estimate"] = estimate_json(est);
        json v;
        v["schedule_converged"] = verdict(est.converged, est.converged);
        const auto [glo, ghi] = discounted_g_range(p->p, eo.grid);
        if (std::isfinite(glo)) {
            const double slack = 10.0 * o.tol_d;
            v["d_within_g_range"] =
                verdict(est.d >= glo - slack && est.d <= ghi + slack, {json_number(glo), json_number(ghi)});
        }
        if (r->band) v["band_width"] = verdict(true, json_number(est.band_hi - est.band_lo));
        j["verdicts"] = v;
        r->json = j.dump(2) + "\n";
        *out = r.release();
        return status;
    });
}

obq_status obq_cell(const obq_problem* p, double x1, double rv, double p1, double p2, const obq_options* opt,
                    obq_result** out) {
    return guarded([&] {
        require(p, "problem");
        require(out, "out");
        const obq_options o = opt ? *opt : defaults();
        check_options(o);
        const CellOptions co = cell_options(o);
        auto r = std::make_unique<obq_result>();
        json j;
        j["command"] = "cell";
        j["problem"] = p->p.name;
        j["options"] = options_json(o);
        j["point"] = {{"x1", x1}, {"r", rv}, {"p", {p1, p2}}};
        obq_status status = OBQ_OK;
        ErgodicEstimate est;
        try {
            est = solve_cell(p->p, x1, rv, {p1, p2}, co).estimate;
        } catch (const ScheduleNonConvergence& e) {
            est = e.estimate();
            status = fail(OBQ_ERR_NONCONVERGENCE, e.code(), e.what());
            j["error"] = {{"code", e.code()}, {"message", e.what()}};
        }
        fill_estimate(*r, est);
        j["d"] = json_number(est.d);
        j["Lbar"] = json_number(-est.d);
        j["converged"] = est.converged;
        j["estimate"] = estimate_json(est);
        json v;
        v["schedule_converged"] = verdict(est.converged, est.converged);
        if (status == OBQ_OK && p->p.coeffs.size() > 1) {
            std::vector<double> frozen;
            for (std::size_t a = 0; a < p->p.coeffs.size(); ++a)
                frozen.push_back(frozen_control_d(p->p, x1, rv, {p1, p2}, a, co));
            const double best = *std::min_element(frozen.begin(), frozen.end());
            v["below_frozen_controls"] = verdict(est.d <= best + 10.0 * o.tol_d, frozen);
        }
        j["verdicts"] = v;
        r->json = j.dump(2) + "\n";
        *out = r.release();
        return status;
    });
}

obq_status obq_table(const obq_problem* p, const obq_options* opt, obq_result** out) {
    return guarded([&] {
        require(p, "problem");
        require(out, "out");
        const obq_options o = opt ? *opt : defaults();
        check_options(o);
        if (o.knots[0] == 0 || o.knots[1] == 0 || o.knots[2] == 0)
            throw InvalidArgument("knot counts must be positive");
        const auto& d = p->p.domain;
        KnotGrids k{linspace(d.x1_min, d.x1_max, o.knots[0]), linspace(o.r_range[0], o.r_range[1], o.knots[1]),
                    linspace(o.p1_range[0], o.p1_range[1], o.knots[2])};
        const EffectiveLawTable t = build_law_table(p->p, k, cell_options(o));
        const std::string csv = t.to_csv();
        bool exact = true;
        for (std::size_t a = 0; a < k.x1.size(); ++a)
            for (std::size_t b = 0; b < k.r.size(); ++b)
                for (std::size_t c = 0; c < k.p1.size(); ++c)
                    exact = exact && t(k.x1[a], k.r[b], k.p1[c]) == t.at(a, b, c);
        const EffectiveLawTable back = EffectiveLawTable::from_csv(csv);
        const bool round = back.values() == t.values() && back.knots().x1 == k.x1 && back.knots().r == k.r &&
                           back.knots().p1 == k.p1;
        const double worst = t.worst_r_increment();

        auto r = std::make_unique<obq_result>();
        r->converged = true;
        json j;
        j["command"] = "table";
        j["problem"] = p->p.name;
        j["options"] = options_json(o);
        j["knots"] = {{"x1", k.x1}, {"r", k.r}, {"p1", k.p1}};
        j["converged"] = true;
        json v;
        v["r_monotone"] = verdict(k.r.size() < 2 || worst >= -10.0 * o.tol_d, json_number(worst));
        v["knot_exact"] = verdict(exact, exact);
        v["csv_roundtrip"] = verdict(round, round);
        j["verdicts"] = v;
        r->json = j.dump(2) + "\n";
        r->artifacts.emplace_back("table.csv", csv);
        *out = r.release();
        return OBQ_OK;
    });
}

obq_status obq_homogenize(const obq_problem* p, const double* eps, size_t n_eps, const obq_options* opt,
                          obq_result** out) {
    return guarded([&] {
        require(p, "problem");
        require(out, "out");
        if (n_eps) require(eps, "eps");
        const obq_options o = opt ? *opt : defaults();
        check_options(o);
        HomogenizeOptions ho;
        ho.grid = {o.n1, o.n2};
        ho.howard = howard_options(o);
        ho.cell = cell_options(o);
        ho.knots_x1 = o.knots[0];
        ho.knots_r = o.knots[1];
        ho.knots_p1 = o.knots[2];
        const ConvergenceReport rep = convergence_study(p->p, std::vector<double>(eps, eps + n_eps), ho);

        bool nonincreasing = true;
        for (std::size_t q = 1; q < rep.sup_errors.size(); ++q)
            nonincreasing = nonincreasing && rep.sup_errors[q] <= rep.sup_errors[q - 1];
        auto r = std::make_unique<obq_result>();
        r->converged = true;
        json j;
        j["command"] = "homogenize";
        j["problem"] = p->p.name;
        j["options"] = options_json(o);
        j["converged"] = true;
        j["report"] = json::parse(rep.to_json());
        json v;
        v["sup_errors_nonincreasing"] = verdict(nonincreasing, rep.sup_errors);
        v["barrier_bound"] = verdict(rep.max_abs_u <= rep.barrier * (1.0 + 1e-6) + 1e-9,
                                     {json_number(rep.max_abs_u), json_number(rep.barrier)});
        v["law_r_monotone"] = verdict(rep.law.worst_r_increment() >= -10.0 * o.tol_d,
                                      json_number(rep.law.worst_r_increment()));
        j["verdicts"] = v;
        r->json = j.dump(2) + "\n";
        r->artifacts.emplace_back("convergence.csv", rep.to_csv());
        std::string inc = "step,increment\n";
        for (std::size_t q = 0; q < rep.outer_increments.size(); ++q)
            inc += std::to_string(q) + ',' + format_double(rep.outer_increments[q]) + '\n';
        r->artifacts.emplace_back("schedule.csv", inc);
        r->artifacts.emplace_back("table.csv", rep.law.to_csv());
        r->artifacts.emplace_back("homogenized.csv", field_csv(rep.homog_solution));
        *out = r.release();
        return OBQ_OK;
    });
}

double obq_result_d(const obq_result* r) { return r ? r->d : std::numeric_limits<double>::quiet_NaN(); }

int obq_result_converged(const obq_result* r) { return r && r->converged ? 1 : 0; }

int obq_result_band(const obq_result* r, double* lo, double* hi) {
    if (!r) return 0;
    if (lo) *lo = r->lo;
    if (hi) *hi = r->hi;
    return r->band ? 1 : 0;
}

const char* obq_result_json(const obq_result* r) { return r ? r->json.c_str() : ""; }

size_t obq_result_artifact_count(const obq_result* r) { return r ? r->artifacts.size() : 0; }

const char* obq_result_artifact_name(const obq_result* r, size_t i) {
    return r && i < r->artifacts.size() ? r->artifacts[i].first.c_str() : nullptr;
}

const char* obq_result_artifact(const obq_result* r, const char* name) {
    if (!r || !name) return nullptr;
    for (const auto& [n, text] : r->artifacts)
        if (n == name) return text.c_str();
    return nullptr;
}

void obq_result_free(obq_result* r) { delete r; }

}  // extern "C"
