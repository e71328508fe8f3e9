#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "oblique/grid.hpp"
#include "oblique/problem.hpp"
#include "oblique/solver.hpp"

namespace oblique {

enum class Method { Auto, VanishingDiscount, Truncation, VanishingViscosity };
const char* to_string(Method m);

struct ErgodicOptions {
    GridShape grid{64, 64};
    double tol_d = 1e-6;
    int k_min = 3;   // lambda_k = 2^-k
    int k_max = 12;
    bool early_stop = true;        // false runs every schedule step
    std::optional<Vec2> x0;        // pinning point; default is the centroid node
    HowardOptions howard;
    int max_doublings = 4;         // truncation heights R0 * 2^j, j <= max_doublings
    bool extrapolate_height = false;  // treat d_R = d + c/R and extrapolate in R
    int eps_k_min = 2;             // viscosity eps_k = 2^-k
    int eps_k_max = 8;
    std::size_t cache_capacity = 1;
};

struct ScheduleEntry {
    double parameter = 0.0;  // lambda, R or eps
    double d_estimate = 0.0;
    double extrapolate = std::numeric_limits<double>::quiet_NaN();
    double profile_delta = std::numeric_limits<double>::quiet_NaN();
    std::size_t iterations = 0;
};

struct ErgodicEstimate {
    double d = std::numeric_limits<double>::quiet_NaN();
    GridField profile;  // u - u(x0) at the last step
    std::vector<ScheduleEntry> schedule;
    std::vector<std::vector<ScheduleEntry>> inner;  // discount schedules per R or eps step
    bool converged = false;
    Method method = Method::VanishingDiscount;
    double band_lo = std::numeric_limits<double>::quiet_NaN();
    double band_hi = std::numeric_limits<double>::quiet_NaN();
    std::size_t x0_node = 0;
    std::vector<std::string> diagnostics;
};

/// Raised when a schedule ends without meeting tol_d; carries the estimate
/// built so far (converged = false).
class ScheduleNonConvergence : public NonConvergence {
public:
    ScheduleNonConvergence(const std::string& what, ErgodicEstimate est)
        : NonConvergence(what), estimate_(std::move(est)) {}
    const ErgodicEstimate& estimate() const noexcept { return estimate_; }

private:
    ErgodicEstimate estimate_;
};

/// Vanishing-discount schedule on an assembled system: d_k = lambda_k u(x0),
/// Richardson extrapolate E_k = 2 d_k - d_{k-1}.
ErgodicEstimate discount_schedule(DiscreteBellman& sys, std::size_t x0, const ErgodicOptions& opt,
                                  FactorCache* cache = nullptr);

/// Builds the system on the domain truncated at height R.
using TruncatedBuilder = std::function<DiscreteBellman(double R)>;

/// Runs discount_schedule for R = R0 2^j until |d_{R_{j+1}} - d_{R_j}| < tol_d.
/// With extrapolate_height the test is on 2 d_{R_j} - d_{R_{j-1}} instead.
ErgodicEstimate truncation_schedule(const TruncatedBuilder& build, double R0, Vec2 x0,
                                    const ErgodicOptions& opt, FactorCache* cache = nullptr);

ErgodicEstimate extract_d_discount(const Problem& p, const ErgodicOptions& opt = {});
ErgodicEstimate extract_d_halfspace(const Problem& p, const ErgodicOptions& opt = {});
/// Adds eps_k * Laplacian; reports the band of d_eps when the sequence is not Cauchy.
ErgodicEstimate extract_d_degenerate(const Problem& p, const ErgodicOptions& opt = {});

/// Dispatches on the domain kind and the admissibility class.
ErgodicEstimate extract_d(const Problem& p, Method m, const ErgodicOptions& opt = {});

/// Method that extract_d would use for this problem.
Method select_method(const Problem& p, GridShape grid);

}  // namespace oblique
