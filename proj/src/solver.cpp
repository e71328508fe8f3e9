#include "oblique/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace oblique {

using SpMat = Eigen::SparseMatrix<double>;
using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

namespace detail {
struct Pattern {
    std::vector<int> row_ptr, cols;
    SpMat csc;                    // structure with the same nonzeros, compressed
    std::vector<int> csr_to_csc;  // CSR entry -> position in csc.valuePtr()

    bool same_as(const Pattern& o) const {
        return this == &o || (row_ptr == o.row_ptr && cols == o.cols);
    }
};
}  // namespace detail

const std::vector<int>& DiscreteBellman::row_ptr() const { return pattern_->row_ptr; }
const std::vector<int>& DiscreteBellman::cols() const { return pattern_->cols; }

Vec2 bottom_normal(const Geometry& g, std::size_t i) {
    const double s = g.bottom_d1[i];
    const double r = std::sqrt(1.0 + s * s);
    return {s / r, -1.0 / r};
}

namespace {

Vec2 normalized(Vec2 v) {
    const double r = std::hypot(v.x, v.y);
    return {v.x / r, v.y / r};
}

}  // namespace

BoundarySpec make_boundary(const Problem& p, const Geometry& g, double eps) {
    const auto& d = p.domain;
    const auto& bc = p.bc;
    BoundarySpec out;
    out.tags.assign(g.size(), NodeTag::Interior);
    out.rows.assign(g.size(), BoundaryRow{});
    const bool osc = d.kind == DomainKind::OscillatingEpsilon;

    // Oblique row from the problem's boundary data with outward normal n.
    auto oblique = [&](double x1, double x2, Vec2 n) {
        BoundaryRow r;
        const double xi = osc && eps > 0.0 ? x1 / eps : x1;
        r.gamma = osc ? n : bc.gamma(x1, x2, n);
        const double gv = bc.g(x1, x2, xi);
        if (osc || bc.mode == BcMode::Robin) {
            r.zeroth = bc.c(x1, x2, xi);
            r.rhs = gv;
        } else if (bc.mode == BcMode::FixedD) {
            r.rhs = gv - bc.mode_value;
        } else {
            r.discounted = true;
            r.rhs = gv;
        }
        return r;
    };
    auto dirichlet = [&](std::size_t k) {
        out.tags[k] = NodeTag::Dirichlet;
        out.rows[k] = BoundaryRow{};
        out.rows[k].rhs = d.top_value;
    };

    const bool side_dirichlet = !g.periodic && (osc || d.sides == SideKind::Dirichlet);
    const bool top_dirichlet = osc || d.top == TopKind::Dirichlet;

    if (g.periodic) {
        for (std::size_t j = 1; j + 1 < g.n2; ++j) out.tags[g.index(0, j)] = NodeTag::PeriodicSeam;
    }
    // Bottom.
    for (std::size_t i = 0; i < g.n1; ++i) {
        const std::size_t k = g.index(i, 0);
        Vec2 n = bottom_normal(g, i);
        const bool corner = !g.periodic && (i == 0 || i + 1 == g.n1);
        if (corner && side_dirichlet) {
            dirichlet(k);
            continue;
        }
        if (corner) n = normalized({n.x + (i == 0 ? -1.0 : 1.0), n.y});
        out.tags[k] = NodeTag::ObliqueBoundary;
        out.rows[k] = oblique(g.x1(i), g.bottom[i], n);
    }
    // Top.
    for (std::size_t i = 0; i < g.n1; ++i) {
        const std::size_t k = g.index(i, g.n2 - 1);
        const bool corner = !g.periodic && (i == 0 || i + 1 == g.n1);
        if (top_dirichlet || (corner && side_dirichlet)) {
            dirichlet(k);
            continue;
        }
        Vec2 n{0.0, 1.0};
        if (corner) n = normalized({i == 0 ? -1.0 : 1.0, 1.0});
        if (d.top == TopKind::Oblique || corner) {
            out.tags[k] = NodeTag::ObliqueBoundary;
            out.rows[k] = oblique(g.x1(i), g.top, n);
            if (d.top != TopKind::Oblique) out.rows[k].gamma = n;
        } else {
            out.tags[k] = NodeTag::NeumannTop;
            out.rows[k] = BoundaryRow{n, 0.0, false, 0.0};
        }
    }
    // Sides.
    if (!g.periodic) {
        for (std::size_t j = 1; j + 1 < g.n2; ++j) {
            for (std::size_t i : {std::size_t(0), g.n1 - 1}) {
                const std::size_t k = g.index(i, j);
                if (side_dirichlet) {
                    dirichlet(k);
                } else {
                    out.tags[k] = NodeTag::ObliqueBoundary;
                    out.rows[k] = oblique(g.x1(i), g.x2(i, j), {i == 0 ? -1.0 : 1.0, 0.0});
                }
            }
        }
    }
    return out;
}

namespace {

std::string node_location(const Geometry& g, std::size_t k) {
    const std::size_t i = k % g.n1, j = k / g.n1;
    std::ostringstream os;
    os.precision(6);
    os << "node " << k << " (x1=" << g.x1(i) << ", x2=" << g.x2(i, j) << ")";
    return os.str();
}

}  // namespace

DiscreteBellman assemble(const FlattenedOperator& op, const BoundarySpec& bc) {
    const Geometry& g = op.geom;
    const std::size_t n = g.size();
    if (bc.tags.size() != n || bc.rows.size() != n)
        throw InvalidArgument("boundary spec does not match the grid");

    DiscreteBellman D;
    D.n_ = n;
    D.controls_ = op.controls;
    D.geom_ = g;
    D.tags_ = bc.tags;

    // Fixed 3x3 neighbourhood pattern; slot[k][di+1][dj+1] is the CSR position.
    auto pat = std::make_shared<detail::Pattern>();
    pat->row_ptr.resize(n + 1, 0);
    std::vector<std::array<int, 9>> slot(n);
    for (std::size_t j = 0; j < g.n2; ++j) {
        for (std::size_t i = 0; i < g.n1; ++i) {
            const std::size_t k = g.index(i, j);
            std::array<std::pair<int, int>, 9> nb;  // (column, local id)
            int cnt = 0;
            for (int dj = -1; dj <= 1; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    const long jj = long(j) + dj;
                    long ii = long(i) + di;
                    if (jj < 0 || jj >= long(g.n2)) continue;
                    if (g.periodic) ii = (ii + long(g.n1)) % long(g.n1);
                    else if (ii < 0 || ii >= long(g.n1)) continue;
                    nb[cnt++] = {int(g.index(std::size_t(ii), std::size_t(jj))), (di + 1) * 3 + (dj + 1)};
                }
            }
            std::sort(nb.begin(), nb.begin() + cnt);
            slot[k].fill(-1);
            pat->row_ptr[k + 1] = pat->row_ptr[k] + cnt;
            for (int e = 0; e < cnt; ++e) {
                slot[k][nb[e].second] = pat->row_ptr[k] + e;
                pat->cols.push_back(nb[e].first);
            }
        }
    }
    const std::size_t nnz = pat->cols.size();
    {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(nnz);
        for (std::size_t r = 0; r < n; ++r)
            for (int e = pat->row_ptr[r]; e < pat->row_ptr[r + 1]; ++e)
                trip.emplace_back(int(r), pat->cols[e], 1.0);
        pat->csc.resize(int(n), int(n));
        pat->csc.setFromTriplets(trip.begin(), trip.end());
        pat->csc.makeCompressed();
        pat->csr_to_csc.resize(nnz);
        const int* outer = pat->csc.outerIndexPtr();
        const int* inner = pat->csc.innerIndexPtr();
        for (std::size_t r = 0; r < n; ++r) {
            for (int e = pat->row_ptr[r]; e < pat->row_ptr[r + 1]; ++e) {
                const int c = pat->cols[e];
                const int* pos = std::lower_bound(inner + outer[c], inner + outer[c + 1], int(r));
                pat->csr_to_csc[e] = int(pos - inner);
            }
        }
    }
    D.nnz_ = nnz;
    D.values_.assign(op.controls * nnz, 0.0);
    D.rhs_.assign(op.controls * n, 0.0);
    D.discount_w_.assign(n, 0.0);
    D.diag_.resize(n);
    for (std::size_t k = 0; k < n; ++k) D.diag_[k] = slot[k][4];

    const double h1 = g.h1, h2 = g.h2;
    std::vector<std::size_t> bad_rows;
    std::size_t bad_count = 0;
    double ratio_lo = 0.0, ratio_hi = std::numeric_limits<double>::infinity();
    std::vector<std::string> transversality;

    for (std::size_t j = 0; j < g.n2; ++j) {
        for (std::size_t i = 0; i < g.n1; ++i) {
            const std::size_t k = g.index(i, j);
            const auto& sl = slot[k];
            auto at = [&](int di, int dj) { return sl[(di + 1) * 3 + (dj + 1)]; };
            const NodeTag tag = bc.tags[k];

            if (tag == NodeTag::Interior || tag == NodeTag::PeriodicSeam) {
                double max_diag = 0.0;
                bool row_bad = false;
                std::vector<std::array<double, 9>> local(op.controls);
                for (std::size_t al = 0; al < op.controls; ++al) {
                    const Sym2& A = op.a(al, k);
                    const Vec2& b = op.b(al, k);
                    const double c11 = A.a11 / (h1 * h1), c22 = A.a22 / (h2 * h2);
                    const double cx = std::fabs(A.a12) / (h1 * h2);
                    const double tol = 1e-12 * (c11 + c22 + cx);
                    if (c11 < cx - tol || c22 < cx - tol) {
                        if (!row_bad && bad_rows.size() < 64) bad_rows.push_back(k);
                        row_bad = true;
                        if (A.a11 > 0.0) ratio_lo = std::max(ratio_lo, std::fabs(A.a12) / A.a11);
                        if (A.a12 != 0.0) ratio_hi = std::min(ratio_hi, A.a22 / std::fabs(A.a12));
                        continue;
                    }
                    auto& w = local[al];
                    w.fill(0.0);
                    const double ew = std::min(0.0, -(c11 - cx));
                    const double ns = std::min(0.0, -(c22 - cx));
                    w[(1 + 1) * 3 + 1] += ew;   // (i+1, j)
                    w[(-1 + 1) * 3 + 1] += ew;  // (i-1, j)
                    w[1 * 3 + 2] += ns;         // (i, j+1)
                    w[1 * 3 + 0] += ns;         // (i, j-1)
                    if (A.a12 >= 0.0) {
                        w[2 * 3 + 2] -= cx;  // (i+1, j+1)
                        w[0 * 3 + 0] -= cx;  // (i-1, j-1)
                    } else {
                        w[2 * 3 + 0] -= cx;  // (i+1, j-1)
                        w[0 * 3 + 2] -= cx;  // (i-1, j+1)
                    }
                    // Central drift while the axis weight keeps the row an
                    // M-matrix, upwind otherwise.
                    if (std::fabs(b.x) * 0.5 / h1 <= c11 - cx) {
                        w[2 * 3 + 1] -= 0.5 * b.x / h1;
                        w[0 * 3 + 1] += 0.5 * b.x / h1;
                    } else if (b.x > 0.0) {
                        w[2 * 3 + 1] -= b.x / h1;
                    } else {
                        w[0 * 3 + 1] += b.x / h1;
                    }
                    if (std::fabs(b.y) * 0.5 / h2 <= c22 - cx) {
                        w[1 * 3 + 2] -= 0.5 * b.y / h2;
                        w[1 * 3 + 0] += 0.5 * b.y / h2;
                    } else if (b.y > 0.0) {
                        w[1 * 3 + 2] -= b.y / h2;
                    } else {
                        w[1 * 3 + 0] += b.y / h2;
                    }
                    double diag = 0.0;
                    for (int q = 0; q < 9; ++q)
                        if (q != 4) diag -= w[q];
                    w[4] = diag;
                    max_diag = std::max(max_diag, diag);
                }
                if (row_bad) {
                    ++bad_count;
                    continue;
                }
                const double scale = max_diag > 0.0 ? 1.0 / max_diag : 1.0;
                for (std::size_t al = 0; al < op.controls; ++al) {
                    double* v = D.values_.data() + al * nnz;
                    for (int q = 0; q < 9; ++q) {
                        if (local[al][q] == 0.0) continue;
                        const int s = sl[q];
                        if (s < 0) throw InvalidArgument("interior stencil leaves the grid at " +
                                                         node_location(g, k));
                        v[s] += local[al][q] * scale;
                    }
                }
                continue;
            }

            const BoundaryRow& row = bc.rows[k];
            if (tag == NodeTag::Dirichlet) {
                for (std::size_t al = 0; al < op.controls; ++al) {
                    D.values_[al * nnz + at(0, 0)] = 1.0;
                    D.rhs_[al * n + k] = row.rhs;
                }
                continue;
            }
            // Oblique (including Neumann top): gamma in computational coordinates.
            const double Dp = g.depth(i);
            const double eta = g.eta(j);
            const double e1 = -(g.bottom_d1[i] - eta * g.bottom_d1[i]) / Dp;
            const double e2 = 1.0 / Dp;
            const double gs = row.gamma.x;
            const double gt = row.gamma.x * e1 + row.gamma.y * e2;
            const double tiny = 1e-14 * (std::fabs(gs) + std::fabs(gt));
            std::array<double, 9> w{};
            int ds = 0, dt = 0;
            if (gs > tiny) ds = -1;
            else if (gs < -tiny) ds = 1;
            if (gt > tiny) dt = -1;
            else if (gt < -tiny) dt = 1;
            if ((ds != 0 && at(ds, 0) < 0) || (dt != 0 && at(0, dt) < 0)) {
                transversality.push_back(node_location(g, k));
                continue;
            }
            double diag = row.zeroth;
            if (ds != 0) {
                w[(ds + 1) * 3 + 1] = -std::fabs(gs) / h1;
                diag += std::fabs(gs) / h1;
            }
            if (dt != 0) {
                w[1 * 3 + (dt + 1)] = -std::fabs(gt) / h2;
                diag += std::fabs(gt) / h2;
            }
            w[4] = diag;
            if (!(diag > 0.0)) {
                transversality.push_back(node_location(g, k));
                continue;
            }
            const double scale = 1.0 / diag;
            for (std::size_t al = 0; al < op.controls; ++al) {
                double* v = D.values_.data() + al * nnz;
                for (int q = 0; q < 9; ++q)
                    if (w[q] != 0.0) v[sl[q]] += w[q] * scale;
                D.rhs_[al * n + k] = row.rhs * scale;
            }
            if (row.discounted) D.discount_w_[k] = scale;
        }
    }
    if (!transversality.empty()) {
        std::vector<Violation> v;
        for (std::size_t q = 0; q < std::min<std::size_t>(8, transversality.size()); ++q)
            v.push_back({"transversality", transversality[q],
                         "the one-sided difference along gamma needs a missing neighbour"});
        throw AssumptionViolated(std::move(v));
    }
    if (!bad_rows.empty()) {
        std::ostringstream os;
        os << bad_count           << " rows violate monotonicity: |a12|/(h1 h2) > min(a11/h1^2, a22/h2^2), first at "
           << node_location(g, bad_rows.front()) << ". Choose a grid with computational aspect ratio h2/h1 in ["
           << ratio_lo << ", " << ratio_hi << "] (currently " << h2 / h1 << ")";
        throw MonotonicityViolated(bad_rows, os.str());
    }
    D.pattern_ = std::move(pat);
    return D;
}

void DiscreteBellman::write_matrix(std::ostream& os, std::size_t alpha) const {
    const auto& rp = pattern_->row_ptr;
    const auto& cl = pattern_->cols;
    const double* v = values(alpha);
    os << "%%MatrixMarket matrix coordinate real general\n";
    std::vector<std::string> lines;
    char buf[96];
    for (std::size_t r = 0; r < n_; ++r) {
        for (int e = rp[r]; e < rp[r + 1]; ++e) {
            double x = v[e];
            if (e == diag_[r]) x += lambda_ * discount_w_[r];
            if (x == 0.0) continue;
            std::snprintf(buf, sizeof buf, "%zu %d %.17g", r + 1, cl[e] + 1, x);
            lines.emplace_back(buf);
        }
    }
    os << n_ << ' ' << n_ << ' ' << lines.size() << '\n';
    for (const auto& l : lines) os << l << '\n';
}

struct FactorCache::Impl {
    struct Entry {
        std::shared_ptr<const detail::Pattern> pattern;
        std::vector<double> values;
        std::uint64_t hash = 0;
        std::uint64_t stamp = 0;
        std::unique_ptr<LU> lu;
    };
    std::size_t capacity = 1;
    std::vector<Entry> entries;
    std::uint64_t clock = 0;
};

FactorCache::FactorCache(std::size_t capacity) : impl_(std::make_unique<Impl>()) {
    impl_->capacity = std::max<std::size_t>(1, capacity);
}
FactorCache::~FactorCache() = default;

struct HowardAccess {
    static const detail::Pattern& pattern(const DiscreteBellman& d) { return *d.pattern_; }
    static std::shared_ptr<const detail::Pattern> pattern_ptr(const DiscreteBellman& d) {
        return d.pattern_;
    }

    static std::uint64_t fnv(const std::vector<double>& v) {
        std::uint64_t h = 1469598103934665603ull;
        const auto* p = reinterpret_cast<const unsigned char*>(v.data());
        for (std::size_t q = 0; q < v.size() * sizeof(double); ++q) h = (h ^ p[q]) * 1099511628211ull;
        return h;
    }

    // Factorization of the matrix whose CSC values are `vals`.
    static LU& factor(FactorCache& cache, const std::shared_ptr<const detail::Pattern>& pat,
                      std::vector<double>&& vals) {
        auto& im = *cache.impl_;
        const std::uint64_t h = fnv(vals);
        ++im.clock;
        for (auto& e : im.entries) {
            if (e.hash == h && e.pattern->same_as(*pat) && e.values == vals) {
                e.stamp = im.clock;
                ++cache.hits_;
                return *e.lu;
            }
        }
        ++cache.misses_;
        SpMat m = pat->csc;
        std::copy(vals.begin(), vals.end(), m.valuePtr());
        FactorCache::Impl::Entry* slot = nullptr;
        bool analyzed = false;
        if (im.entries.size() < im.capacity) {
            im.entries.emplace_back();
            slot = &im.entries.back();
            slot->lu = std::make_unique<LU>();
        } else {
            slot = &*std::min_element(im.entries.begin(), im.entries.end(),
                                      [](const auto& a, const auto& b) { return a.stamp < b.stamp; });
            analyzed = slot->pattern && slot->pattern->same_as(*pat);
        }
        if (!analyzed) slot->lu->analyzePattern(m);
        slot->lu->factorize(m);
        if (slot->lu->info() != Eigen::Success) {
            slot->pattern.reset();
            slot->values.clear();
            slot->hash = 0;
            throw SingularPolicySystem("sparse LU failed on the policy matrix: " +
                                       slot->lu->lastErrorMessage());
        }
        slot->pattern = pat;
        slot->values = std::move(vals);
        slot->hash = h;
        slot->stamp = im.clock;
        return *slot->lu;
    }
};

namespace {

// Value of row r of control alpha applied to u, minus its right-hand side.
inline double row_value(const DiscreteBellman& d, const std::vector<int>& rp,
                        const std::vector<int>& cl, std::size_t r, std::size_t al,
                        const Eigen::VectorXd& u) {
    const double* v = d.values(al);
    double s = 0.0;
    for (int e = rp[r]; e < rp[r + 1]; ++e) s += v[e] * u[cl[e]];
    s += d.discount() * d.discount_weight(r) * u[r];
    return s - d.rhs(al)[r];
}

inline double row_diag(const DiscreteBellman& d, std::size_t r, std::size_t al) {
    return d.values(al)[d.diag_slot(r)] + d.discount() * d.discount_weight(r);
}

}  // namespace

double bellman_residual(const DiscreteBellman& d, const Eigen::VectorXd& u) {
    const auto& rp = d.row_ptr();
    const auto& cl = d.cols();
    double res = 0.0;
    for (std::size_t r = 0; r < d.size(); ++r) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t al = 0; al < d.controls(); ++al) {
            const double v = row_value(d, rp, cl, r, al, u);
            if (v > best) {
                best = v;
                arg = al;
            }
        }
        const double dg = row_diag(d, r, arg);
        res = std::max(res, std::fabs(best) / (dg > 0.0 ? dg : 1.0));
    }
    return res;
}

HowardResult solve_howard(const DiscreteBellman& d, const Eigen::VectorXd& init, const HowardOptions& opt,
                          const std::vector<std::uint16_t>* init_policy, FactorCache* cache) {
    const std::size_t n = d.size(), m = d.controls();
    if (std::size_t(init.size()) != n) throw InvalidArgument("initial field has the wrong size");
    if (m == 0) throw InvalidArgument("no controls");
    FactorCache local_cache(1);
    FactorCache& fc = cache ? *cache : local_cache;
    const auto& pat = HowardAccess::pattern(d);
    const auto pat_ptr = HowardAccess::pattern_ptr(d);
    const auto& rp = pat.row_ptr;
    const auto& cl = pat.cols;

    HowardResult res;
    res.u = init;
    std::vector<std::uint16_t> pol(n, 0);
    std::vector<double> vals_row(m);

    // Per-row argmax; keeps the current control when it is within `tie` of
    // the max, otherwise takes the lowest maximizing index.
    auto improve = [&](const Eigen::VectorXd& u, bool have_current) {
        const double tie = 1e-11 * std::max(1.0, u.lpNorm<Eigen::Infinity>());
        bool changed = false;
        double resid = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t al = 0; al < m; ++al) {
                vals_row[al] = m == 1 ? 0.0 : row_value(d, rp, cl, r, al, u);
                best = std::max(best, vals_row[al]);
            }
            std::uint16_t choice = pol[r];
            if (!have_current || vals_row[choice] < best - tie) {
                for (std::size_t al = 0; al < m; ++al) {
                    if (vals_row[al] >= best - tie) {
                        choice = std::uint16_t(al);
                        break;
                    }
                }
            }
            if (choice != pol[r]) changed = true;
            pol[r] = choice;
            if (m > 1) {
                const double dg = row_diag(d, r, choice);
                resid = std::max(resid, std::fabs(best) / (dg > 0.0 ? dg : 1.0));
            }
        }
        return std::pair{changed, resid};
    };

    if (init_policy) {
        if (init_policy->size() != n) throw InvalidArgument("initial policy has the wrong size");
        pol = *init_policy;
        for (auto& a : pol)
            if (a >= m) a = 0;
    } else {
        improve(res.u, false);
    }

    Eigen::VectorXd f(n), r(n), du(n);
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        // Policy matrix in CSC order.
        std::vector<double> csc(pat.cols.size());
        double anorm = 0.0;
        for (std::size_t row = 0; row < n; ++row) {
            const double* v = d.values(pol[row]);
            double rs = 0.0;
            for (int e = rp[row]; e < rp[row + 1]; ++e) {
                double x = v[e];
                if (e == d.diag_slot(row)) x += d.discount() * d.discount_weight(row);
                csc[pat.csr_to_csc[e]] = x;
                rs += std::fabs(x);
            }
            anorm = std::max(anorm, rs);
            f[row] = d.rhs(pol[row])[row];
        }
        LU& lu = HowardAccess::factor(fc, pat_ptr, std::move(csc));
        res.u = lu.solve(f);
        ++res.linear_solves;
        const double fnorm = f.lpNorm<Eigen::Infinity>();
        for (int refine = 0; refine < 3; ++refine) {
            for (std::size_t row = 0; row < n; ++row) {
                const double* v = d.values(pol[row]);
                double s = d.discount() * d.discount_weight(row) * res.u[row];
                for (int e = rp[row]; e < rp[row + 1]; ++e) s += v[e] * res.u[cl[e]];
                r[row] = f[row] - s;
            }
            const double bound = opt.linear_tol * (anorm * res.u.lpNorm<Eigen::Infinity>() + fnorm);
            if (!(r.lpNorm<Eigen::Infinity>() > bound)) break;
            du = lu.solve(r);
            res.u += du;
        }
        if (!res.u.allFinite())
            throw SingularPolicySystem("policy evaluation produced non-finite values");
        res.iterations = it + 1;

        if (m == 1) {
            res.residual = bellman_residual(d, res.u);
            res.policy = pol;
            return res;
        }
        const auto [changed, resid] = improve(res.u, true);
        res.residual = resid;
        if (!changed && resid < opt.residual_tol * std::max(1.0, res.u.lpNorm<Eigen::Infinity>())) {
            res.policy = pol;
            return res;
        }
    }
    throw NonConvergence("policy iteration did not converge in " + std::to_string(opt.max_iters) +
                         " iterations (residual " + std::to_string(res.residual) + ")");
}

GridField solve_howard(const DiscreteBellman& d, const GridField& init, const HowardOptions& opt) {
    auto r = solve_howard(d, init.values, opt);
    GridField out;
    out.geom = d.geometry();
    out.tags = d.tags();
    out.values = std::move(r.u);
    return out;
}

double pucci_residual(const GridField& field, double lambda1, double Lambda1) {
    const Geometry& g = field.geom;
    double worst = -std::numeric_limits<double>::infinity();
    const double h1 = g.h1, h2 = g.h2;
    for (std::size_t j = 1; j + 1 < g.n2; ++j) {
        for (std::size_t i = 0; i < g.n1; ++i) {
            if (!g.periodic && (i == 0 || i + 1 == g.n1)) continue;
            const std::size_t ip = g.periodic ? (i + 1) % g.n1 : i + 1;
            const std::size_t im = g.periodic ? (i + g.n1 - 1) % g.n1 : i - 1;
            auto v = [&](std::size_t a, std::size_t b) { return field.at(a, b); };
            const double vss = (v(ip, j) - 2 * v(i, j) + v(im, j)) / (h1 * h1);
            const double vtt = (v(i, j + 1) - 2 * v(i, j) + v(i, j - 1)) / (h2 * h2);
            const double vst = (v(ip, j + 1) - v(ip, j - 1) - v(im, j + 1) + v(im, j - 1)) / (4 * h1 * h2);
            const double vt = (v(i, j + 1) - v(i, j - 1)) / (2 * h2);
            // Chain rule back to physical coordinates.
            const double D = g.depth(i), Bp = g.bottom_d1[i], Bpp = g.bottom_d2[i];
            const double eta = g.eta(j);
            const double e1 = -(Bp - eta * Bp) / D, e2 = 1.0 / D, e12 = Bp / (D * D);
            const double e11 = -(Bpp - eta * Bpp) / D + 2.0 * e1 * Bp / D;
            Sym2 X;
            X.a11 = vss + 2 * vst * e1 + vtt * e1 * e1 + vt * e11;
            X.a12 = vst * e2 + vtt * e1 * e2 + vt * e12;
            X.a22 = vtt * e2 * e2;
            const double lo = X.min_eigenvalue(), hi = X.max_eigenvalue();
            auto part = [&](double e) { return e > 0 ? Lambda1 * e : lambda1 * e; };
            worst = std::max(worst, part(lo) + part(hi));
        }
    }
    return worst;
}

}  // namespace oblique
