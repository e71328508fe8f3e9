#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "oblique/flatten.hpp"
#include "oblique/grid.hpp"
#include "oblique/problem.hpp"

namespace oblique {

/// Data of one boundary row. Oblique rows read
///   (zeroth + lambda [discounted]) u + <grad u, gamma> = rhs,
/// Dirichlet rows read u = rhs.
struct BoundaryRow {
    Vec2 gamma;
    double zeroth = 0.0;
    bool discounted = false;
    double rhs = 0.0;
};

struct BoundarySpec {
    std::vector<NodeTag> tags;
    std::vector<BoundaryRow> rows;  // indexed by node; ignored on interior nodes
};

/// Outward unit normals of the flattened domain.
Vec2 bottom_normal(const Geometry& g, std::size_t i);

/// Boundary rows of a problem on the given grid. Oscillating domains get
/// Robin rows on the bottom (c, g at xi = x1/eps) and Dirichlet rows elsewhere.
BoundarySpec make_boundary(const Problem& p, const Geometry& g, double eps = 0.0);

namespace detail {
struct Pattern;
}

/// Per-control monotone sparse rows on a fixed 9-point pattern.
class DiscreteBellman {
public:
    std::size_t size() const { return n_; }
    std::size_t controls() const { return controls_; }
    const Geometry& geometry() const { return geom_; }
    const std::vector<NodeTag>& tags() const { return tags_; }

    /// Discount lambda added on every discounted boundary row.
    void set_discount(double lambda) { lambda_ = lambda; }
    double discount() const { return lambda_; }

    /// Row-wise data in CSR form (shared column pattern).
    const std::vector<int>& row_ptr() const;
    const std::vector<int>& cols() const;
    const double* values(std::size_t alpha) const { return values_.data() + alpha * nnz_; }
    const double* rhs(std::size_t alpha) const { return rhs_.data() + alpha * n_; }
    double discount_weight(std::size_t row) const { return discount_w_[row]; }
    int diag_slot(std::size_t row) const { return diag_[row]; }

    /// Matrix Market coordinate dump of control alpha's rows (current discount).
    void write_matrix(std::ostream& os, std::size_t alpha) const;

private:
    friend DiscreteBellman assemble(const FlattenedOperator&, const BoundarySpec&);
    friend class FactorCache;
    friend struct HowardAccess;
    std::size_t n_ = 0, controls_ = 0, nnz_ = 0;
    Geometry geom_;
    std::vector<NodeTag> tags_;
    std::shared_ptr<const detail::Pattern> pattern_;
    std::vector<double> values_;  // controls x nnz
    std::vector<double> rhs_;     // controls x n
    std::vector<double> discount_w_;
    std::vector<int> diag_;
    double lambda_ = 0.0;
};

/// Interior rows: central second differences with the 7-point cross-term
/// splitting; drift is central where the row stays monotone and upwinded
/// elsewhere. Boundary rows: first-order one-sided
/// differences along gamma. Throws MonotonicityViolated or AssumptionViolated
/// (transversality) when an M-matrix row cannot be formed.
DiscreteBellman assemble(const FlattenedOperator& op, const BoundarySpec& bc);

struct HowardOptions {
    double linear_tol = 1e-10;    // relative residual of each policy solve
    double residual_tol = 1e-9;   // nonlinear residual, relative to max(1, |u|)
    std::size_t max_iters = 200;
};

struct HowardResult {
    Eigen::VectorXd u;
    std::vector<std::uint16_t> policy;
    std::size_t iterations = 0;
    std::size_t linear_solves = 0;
    double residual = 0.0;
};

/// Keeps sparse LU factorizations for reuse across solves on the same
/// pattern. Capacity 1 reuses only the symbolic analysis in practice.
class FactorCache {
public:
    explicit FactorCache(std::size_t capacity = 1);
    ~FactorCache();
    FactorCache(const FactorCache&) = delete;
    FactorCache& operator=(const FactorCache&) = delete;

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

    struct Impl;

private:
    friend struct HowardAccess;
    std::unique_ptr<Impl> impl_;
    std::size_t hits_ = 0, misses_ = 0;
};

/// Policy iteration. Starts from `init_policy` if given, otherwise from the
/// argmax at `init`. Throws SingularPolicySystem or NonConvergence.
HowardResult solve_howard(const DiscreteBellman& d, const Eigen::VectorXd& init,
                          const HowardOptions& opt = {},
                          const std::vector<std::uint16_t>* init_policy = nullptr,
                          FactorCache* cache = nullptr);

GridField solve_howard(const DiscreteBellman& d, const GridField& init, const HowardOptions& opt = {});

/// Max over nonlinear rows of max_alpha (A u - f) divided by the row diagonal.
double bellman_residual(const DiscreteBellman& d, const Eigen::VectorXd& u);

/// Max over interior nodes of the Pucci maximal operator of the discrete
/// physical Hessian: Lambda1 * sum(positive eigenvalues) + lambda1 * sum(negative).
double pucci_residual(const GridField& field, double lambda1, double Lambda1);

}  // namespace oblique
