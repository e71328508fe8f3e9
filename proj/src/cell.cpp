#include "oblique/cell.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "oblique/parallel.hpp"

namespace oblique {

std::size_t cell_rows(const CellOperator& op, const std::vector<std::size_t>& controls,
                      std::size_t n1, double R) {
    const double h1 = 1.0 / double(n1);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), dmean = 0.0;
    constexpr int kEta = 33;
    for (std::size_t i = 0; i < n1; ++i) {
        const double xi = h1 * double(i);
        const double B = op.bottom(xi), Bp = op.bottom_d1(xi);
        const double D = R - B;
        dmean += D / double(n1);
        for (int q = 0; q < kEta; ++q) {
            const double eta = double(q) / (kEta - 1);
            const double e1 = -Bp * (1.0 - eta) / D, e2 = 1.0 / D;
            for (std::size_t al : controls) {
                const Sym2& M = op.matrices[al];
                const double a11 = M.a11, a12 = M.a11 * e1 + M.a12 * e2;
                const double a22 = M.a11 * e1 * e1 + 2.0 * M.a12 * e1 * e2 + M.a22 * e2 * e2;
                if (a12 == 0.0) continue;
                lo = std::max(lo, h1 * std::fabs(a12) / a11);
                hi = std::min(hi, h1 * a22 / std::fabs(a12));
            }
        }
    }
    if (!(lo * 1.02 < hi / 1.02)) {
        std::ostringstream os;
        os << "no monotone cell grid with " << n1 << " columns at x1 = " << op.x1
           << ": computational h2 must lie in [" << lo << ", " << hi << "]; increase the cell resolution";
        throw MonotonicityViolated({}, os.str());
    }
    const double h2 = std::clamp(h1 / dmean, lo * 1.02, hi / 1.02);
    std::size_t n2 = std::max<std::size_t>(3, std::size_t(std::llround(1.0 / h2)) + 1);
    while (n2 > 3 && 1.0 / double(n2 - 1) < lo * 1.001) --n2;
    while (1.0 / double(n2 - 1) > hi / 1.001) ++n2;
    return n2;
}

namespace {

struct CellSystem {
    const CellOperator& op;
    const std::vector<std::size_t>& controls;
    const std::vector<std::size_t>& grid_controls;  // sets the row count
    std::size_t n1;
    double r;
    Vec2 grad;

    Geometry geometry(double R) const {
        const std::size_t n2 = cell_rows(op, grid_controls, n1, R);
        return make_periodic_geometry(n1, n2, 0.0, 1.0, R, [this](double xi) {
            return std::array<double, 3>{op.bottom(xi), op.bottom_d1(xi), op.bottom_d2(xi)};
        });
    }

    DiscreteBellman operator()(double R) const {
        const Geometry g = geometry(R);
        auto fn = [this](std::size_t al, double, double, Sym2& A, Vec2& b) {
            A = op.matrices[controls[al]];
            b = {0.0, 0.0};
        };
        const auto flat = flatten(g, controls.size(), fn, {0.0, true});
        BoundarySpec bc;
        bc.tags.assign(g.size(), NodeTag::Interior);
        bc.rows.assign(g.size(), BoundaryRow{});
        for (std::size_t j = 1; j + 1 < g.n2; ++j) bc.tags[g.index(0, j)] = NodeTag::PeriodicSeam;
        for (std::size_t i = 0; i < g.n1; ++i) {
            const double xi = g.x1(i);
            const std::size_t kb = g.index(i, 0), kt = g.index(i, g.n2 - 1);
            bc.tags[kb] = NodeTag::ObliqueBoundary;
            bc.rows[kb] = BoundaryRow{op.gamma(xi), 0.0, true, op.H(r, grad, xi)};
            bc.tags[kt] = NodeTag::NeumannTop;
            bc.rows[kt] = BoundaryRow{{0.0, 1.0}, 0.0, false, 0.0};
        }
        return assemble(flat, bc);
    }
};

// The grid always comes from the full control set, so that a frozen-control
// solve runs on the same nodes as the full one.
CellResult run_cell(const CellOperator& op, const std::vector<std::size_t>& controls, double r, Vec2 grad,
                    const CellOptions& opt, FactorCache* cache) {
    std::vector<std::size_t> all(op.matrices.size());
    for (std::size_t q = 0; q < all.size(); ++q) all[q] = q;
    CellSystem sys{op, controls, all, opt.n1, r, grad};
    const Geometry g0 = sys.geometry(opt.R0);
    const std::size_t c0 = centroid_node(g0);
    const Vec2 x0{g0.x1(c0 % g0.n1), g0.x2(c0 % g0.n1, c0 / g0.n1)};
    ErgodicOptions eo;
    eo.tol_d = opt.tol_d;
    eo.k_min = opt.k_min;
    eo.k_max = opt.k_max;
    eo.early_stop = opt.early_stop;
    eo.howard = opt.howard;
    eo.max_doublings = opt.max_doublings;
    eo.extrapolate_height = true;
    FactorCache local(std::max<std::size_t>(1, opt.cache_capacity));
    CellResult res;
    res.estimate = truncation_schedule(sys, opt.R0, x0, eo, cache ? cache : &local);
    res.d = res.estimate.d;
    res.corrector = res.estimate.profile;
    return res;
}

}  // namespace

CellResult solve_cell(const Problem& p, double x1, double r, Vec2 grad, const CellOptions& opt,
                      FactorCache* cache) {
    const CellOperator op = cell_operator(p, x1);
    std::vector<std::size_t> all(p.coeffs.size());
    for (std::size_t q = 0; q < all.size(); ++q) all[q] = q;
    return run_cell(op, all, r, grad, opt, cache);
}

double frozen_control_d(const Problem& p, double x1, double r, Vec2 grad, std::size_t alpha,
                        const CellOptions& opt, FactorCache* cache) {
    if (alpha >= p.coeffs.size()) throw InvalidArgument("control index out of range");
    const CellOperator op = cell_operator(p, x1);
    const std::vector<std::size_t> one{alpha};
    return run_cell(op, one, r, grad, opt, cache).d;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t q = 0; q < n; ++q) v[q] = lo + (hi - lo) * double(q) / double(n - 1);
    v[n - 1] = hi;
    return v;
}

namespace {

// Cell index and weight of x on a sorted axis, clamped. Weight 0 at a knot
// (weight 1 at the last knot), which makes knot queries exact.
std::pair<std::size_t, double> locate(const std::vector<double>& k, double x) {
    if (k.size() == 1 || x <= k.front()) return {0, 0.0};
    if (x >= k.back()) return {k.size() - 2, 1.0};
    const auto it = std::upper_bound(k.begin(), k.end(), x);
    const std::size_t j = std::size_t(it - k.begin()) - 1;
    return {j, (x - k[j]) / (k[j + 1] - k[j])};
}

void check_axis(const std::vector<double>& k, const char* name) {
    if (k.empty()) throw InvalidArgument(std::string("knot grid '") + name + "' is empty");
    for (std::size_t q = 1; q < k.size(); ++q)
        if (!(k[q] > k[q - 1]))
            throw InvalidArgument(std::string("knot grid '") + name + "' is not strictly increasing");
}

}  // namespace

EffectiveLawTable::EffectiveLawTable(KnotGrids knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    check_axis(knots_.x1, "x1");
    check_axis(knots_.r, "r");
    check_axis(knots_.p1, "p1");
    if (values_.size() != knots_.x1.size() * knots_.r.size() * knots_.p1.size())
        throw InvalidArgument("law table has the wrong number of values");
}

double EffectiveLawTable::operator()(double x1, double r, double p1) const {
    const auto [i, wi] = locate(knots_.x1, x1);
    const auto [j, wj] = locate(knots_.r, r);
    const auto [k, wk] = locate(knots_.p1, p1);
    const std::size_t ni = knots_.x1.size() > 1 ? 1 : 0;
    const std::size_t nj = knots_.r.size() > 1 ? 1 : 0;
    const std::size_t nk = knots_.p1.size() > 1 ? 1 : 0;
    double acc = 0.0;
    for (std::size_t a = 0; a <= ni; ++a) {
        const double wa = a ? wi : 1.0 - wi;
        for (std::size_t b = 0; b <= nj; ++b) {
            const double wb = b ? wj : 1.0 - wj;
            for (std::size_t c = 0; c <= nk; ++c) {
                const double wc = c ? wk : 1.0 - wk;
                const double w = wa * wb * wc;
                if (w != 0.0) acc += w * at(i + a, j + b, k + c);
            }
        }
    }
    return acc;
}

double EffectiveLawTable::r_slope(double x1, double r, double p1) const {
    if (knots_.r.size() < 2) return 0.0;
    const auto [j, wj] = locate(knots_.r, r);
    (void)wj;
    const double r0 = knots_.r[j], r1 = knots_.r[j + 1];
    return ((*this)(x1, r1, p1) - (*this)(x1, r0, p1)) / (r1 - r0);
}

bool EffectiveLawTable::contains(double x1, double r, double p1) const {
    auto in = [](const std::vector<double>& k, double x) {
        if (k.size() == 1) return true;  // constant along this axis
        const double pad = 1e-12 * std::max(1.0, std::fabs(k.back() - k.front()));
        return x >= k.front() - pad && x <= k.back() + pad;
    };
    return in(knots_.x1, x1) && in(knots_.r, r) && in(knots_.p1, p1);
}

double EffectiveLawTable::worst_r_increment() const {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < knots_.x1.size(); ++i)
        for (std::size_t k = 0; k < knots_.p1.size(); ++k)
            for (std::size_t j = 0; j + 1 < knots_.r.size(); ++j)
                worst = std::min(worst, at(i, j + 1, k) - at(i, j, k));
    return worst;
}

std::string EffectiveLawTable::to_csv() const {
    std::string out = "x1,r,p1,Lbar\n";
    char buf[128];
    for (std::size_t i = 0; i < knots_.x1.size(); ++i)
        for (std::size_t j = 0; j < knots_.r.size(); ++j)
            for (std::size_t k = 0; k < knots_.p1.size(); ++k) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", knots_.x1[i], knots_.r[j],
                              knots_.p1[k], at(i, j, k));
                out += buf;
            }
    return out;
}

EffectiveLawTable EffectiveLawTable::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("x1,r,p1,Lbar", 0) != 0)
        throw ParseError("law table CSV must start with the header 'x1,r,p1,Lbar'");
    std::set<double> xs, rs, ps;
    std::map<std::array<double, 3>, double> vals;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::array<double, 4> v{};
        std::istringstream ls(line);
        std::string cell;
        for (int q = 0; q < 4; ++q) {
            if (!std::getline(ls, cell, ',')) throw ParseError("law table line " + std::to_string(lineno) +
                                                               ": expected 4 fields");
            char* end = nullptr;
            v[q] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) throw ParseError("law table line " + std::to_string(lineno) +
                                                      ": not a number");
        }
        xs.insert(v[0]);
        rs.insert(v[1]);
        ps.insert(v[2]);
        vals[{v[0], v[1], v[2]}] = v[3];
    }
    KnotGrids k{{xs.begin(), xs.end()}, {rs.begin(), rs.end()}, {ps.begin(), ps.end()}};
    std::vector<double> values;
    values.reserve(vals.size());
    for (double x : k.x1)
        for (double r : k.r)
            for (double p : k.p1) {
                const auto it = vals.find({x, r, p});
                if (it == vals.end()) throw ParseError("law table is missing a knot tuple");
                values.push_back(it->second);
            }
    return EffectiveLawTable(std::move(k), std::move(values));
}

EffectiveLawTable build_law_table(const Problem& p, const KnotGrids& knots, const CellOptions& opt) {
    check_axis(knots.x1, "x1");
    check_axis(knots.r, "r");
    check_axis(knots.p1, "p1");
    const std::size_t nr = knots.r.size(), np = knots.p1.size();
    std::vector<double> values(knots.x1.size() * nr * np);
    parallel_for(knots.x1.size(), [&](std::size_t i) {
        FactorCache cache(std::max<std::size_t>(1, opt.cache_capacity));
        for (std::size_t j = 0; j < nr; ++j)
            for (std::size_t k = 0; k < np; ++k)
                values[(i * nr + j) * np + k] =
                    -solve_cell(p, knots.x1[i], knots.r[j], {knots.p1[k], 0.0}, opt, &cache).d;
    });
    EffectiveLawTable table(knots, std::move(values));
    const double worst = table.worst_r_increment();
    if (nr > 1 && worst < -10.0 * opt.tol_d) {
        std::ostringstream os;
        os << "effective law decreases in r by " << -worst << " (> 10 tol_d = " << 10.0 * opt.tol_d << ")";
        throw MonotonicityViolation(worst, os.str());
    }
    return table;
}

}  // namespace oblique
