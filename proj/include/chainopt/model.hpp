#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "chainopt/errors.hpp"

namespace chainopt {

/// Physical and protocol constants of the verification pipeline.
/// Field names follow the instance JSON schema; all rates and sizes are
/// kilobits (1 Mb = 1000 kb, converted on ingestion).
struct SystemParams {
    double v_d = 1200.0;  ///< downlink rate, kb/s
    double v_u = 1300.0;  ///< uplink rate, kb/s
    double R = 2.0;       ///< transaction size, kb
    double P = 500.0;     ///< feedback size, kb
    double K = 1000.0;    ///< verification workload, resource-units
    double phi = 0.5;     ///< broadcast/validation coefficient, s/(kb*verifier)
    double alpha = 5.0;   ///< security scale coefficient
    double kappa = 1.0;   ///< security scale exponent
};

/// Candidate verifiers: per-verifier capacity and unit cost, same length.
struct VerifierPool {
    std::vector<double> capacities;  ///< x_i, resource-units
    std::vector<double> unit_costs;  ///< rho_i, dollars per resource-unit

    int size() const { return static_cast<int>(capacities.size()); }
};

/// Integer bounds on the two scalar decision variables.
struct SearchSpace {
    int m_min = 1;
    int m_max = 1;
    int theta_min = 1;
    int theta_max = 1;
};

/// Relative importance of latency, security and cost. Must sum to 1.
struct Weights {
    double beta1 = 0.4;  ///< latency
    double beta2 = 0.2;  ///< security
    double beta3 = 0.4;  ///< cost
};

/// Absolute tolerance on beta1 + beta2 + beta3 == 1.
inline constexpr double kWeightSumTolerance = 1e-12;

/// One decision point: how many verifiers (m), how many transactions per
/// block (theta), and which verifiers (z, one flag per pool entry).
/// Feasible iff m and theta are in bounds and sum(z) == m.
struct Configuration {
    int m = 0;
    int theta = 0;
    std::vector<std::uint8_t> z;

    friend bool operator==(const Configuration&, const Configuration&) = default;
};

/// Maxima of the three metrics over the feasible space, used to normalize
/// them onto a common scale.
struct NormConstants {
    double L_m = 0;  ///< max latency, s
    double S_m = 0;  ///< max security rating
    double C_m = 0;  ///< max cost, dollars
};

struct Metrics {
    double latency = 0;
    double security = 0;
    double cost = 0;
};

// ---------------------------------------------------------------------------
// Invariant checks. Instance loading and solver entry points call these;
// the hot evaluation path assumes they already passed.

inline void check(const SystemParams& p) {
    auto pos = [](double v, const char* name) {
        if (!(v > 0.0))
            throw ParseError(std::string("params.") + name + " must be strictly positive");
    };
    pos(p.v_d, "v_d");
    pos(p.v_u, "v_u");
    pos(p.R, "R");
    pos(p.P, "P");
    pos(p.K, "K");
    pos(p.phi, "phi");
    pos(p.alpha, "alpha");
    pos(p.kappa, "kappa");
}

inline void check(const VerifierPool& pool) {
    if (pool.capacities.empty())
        throw ParseError("pool.capacities must contain at least one verifier");
    if (pool.capacities.size() != pool.unit_costs.size())
        throw ParseError("pool.capacities and pool.unit_costs differ in length");
    for (double x : pool.capacities)
        if (!(x > 0.0)) throw ParseError("pool.capacities entries must be strictly positive");
    for (double r : pool.unit_costs)
        if (!(r > 0.0)) throw ParseError("pool.unit_costs entries must be strictly positive");
}

inline void check(const SearchSpace& s, int pool_size) {
    if (!(1 <= s.m_min && s.m_min <= s.m_max && s.m_max <= pool_size))
        throw ParseError("space: need 1 <= m_min <= m_max <= pool size");
    if (!(1 <= s.theta_min && s.theta_min <= s.theta_max))
        throw ParseError("space: need 1 <= theta_min <= theta_max");
}

inline void check(const Weights& w) {
    if (w.beta1 < 0 || w.beta2 < 0 || w.beta3 < 0)
        throw ParseError("weights: beta1, beta2, beta3 must be nonnegative");
    const double sum = w.beta1 + w.beta2 + w.beta3;
    if (std::abs(sum - 1.0) > kWeightSumTolerance)
        throw ParseError("weights: beta1+beta2+beta3 must equal 1 within 1e-12");
}

// ---------------------------------------------------------------------------
// Feasibility verdict (exact integer arithmetic, no floating point).

enum class Violation {
    m_out_of_bounds,
    theta_out_of_bounds,
    selection_length_mismatch,
    selection_sum_mismatch,
};

inline std::string to_string(Violation v) {
    switch (v) {
        case Violation::m_out_of_bounds: return "m out of bounds";
        case Violation::theta_out_of_bounds: return "theta out of bounds";
        case Violation::selection_length_mismatch: return "len(z) != pool size";
        case Violation::selection_sum_mismatch: return "sum(z) != m";
    }
    return "unknown violation";
}

struct Verdict {
    std::vector<Violation> violations;

    bool feasible() const { return violations.empty(); }
    bool has(Violation v) const {
        return std::find(violations.begin(), violations.end(), v) != violations.end();
    }
};

/// Checks a configuration against every constraint and reports all
/// violations rather than stopping at the first.
inline Verdict validate(const Configuration& c, const SearchSpace& space,
                        const VerifierPool& pool) {
    Verdict verdict;
    if (c.m < space.m_min || c.m > space.m_max)
        verdict.violations.push_back(Violation::m_out_of_bounds);
    if (c.theta < space.theta_min || c.theta > space.theta_max)
        verdict.violations.push_back(Violation::theta_out_of_bounds);
    if (static_cast<int>(c.z.size()) != pool.size()) {
        verdict.violations.push_back(Violation::selection_length_mismatch);
    } else {
        std::int64_t ones = 0;
        for (std::uint8_t bit : c.z) ones += bit;
        if (ones != c.m)
            verdict.violations.push_back(Violation::selection_sum_mismatch);
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// Metric formulas. The term helpers below are the single source of the
// floating-point expressions; every caller (public functions, Evaluator,
// exhaustive enumeration) goes through them so results match bit for bit
// and the normalization maxima dominate exactly, term by term.

namespace detail {

/// Latency: downlink + verification + broadcast/validation + uplink,
/// summed left to right. `min_capacity` is the slowest relevant verifier.
inline double latency_value(double theta, double m, double min_capacity,
                            const SystemParams& p) {
    const double downlink = theta * p.R / p.v_d;
    const double verification = p.K / min_capacity;
    const double broadcast = p.phi * theta * p.R * m;
    const double uplink = p.P / p.v_u;
    return ((downlink + verification) + broadcast) + uplink;
}

inline double security_value(double m, const SystemParams& p) {
    return p.alpha * std::pow(m, p.kappa);
}

inline double cost_value(double selected_cost_sum, double theta) {
    return selected_cost_sum / theta;
}

inline double utility_value(const Metrics& v, const Weights& w, const NormConstants& n) {
    return w.beta1 * ((n.L_m - v.latency) / n.L_m) + w.beta2 * (v.security / n.S_m) +
           w.beta3 * ((n.C_m - v.cost) / n.C_m);
}

/// Scans the selection once: count, slowest selected capacity, and the
/// selected cost sum (rho_i * x_i in ascending index order).
struct SelectionScan {
    std::int64_t count = 0;
    double min_capacity = std::numeric_limits<double>::infinity();
    double cost_sum = 0.0;
};

inline SelectionScan scan_selection(const Configuration& c, const VerifierPool& pool) {
    SelectionScan s;
    const std::size_t M = pool.capacities.size();
    for (std::size_t i = 0; i < M; ++i) {
        if (c.z[i]) {
            ++s.count;
            s.min_capacity = std::min(s.min_capacity, pool.capacities[i]);
            s.cost_sum += pool.unit_costs[i] * pool.capacities[i];
        }
    }
    return s;
}

inline void require_selection_shape(const Configuration& c, const VerifierPool& pool) {
    if (static_cast<int>(c.z.size()) != pool.size())
        throw InfeasibleConfiguration("len(z) != pool size");
    if (c.theta < 1)
        throw InfeasibleConfiguration("theta must be a positive integer");
}

} // namespace detail

/// Total confirmation latency in seconds. The verification term is the
/// maximum of K / x_i over selected verifiers only, i.e. the slowest
/// selected verifier dictates it.
inline double latency(const Configuration& c, const SystemParams& p,
                      const VerifierPool& pool) {
    detail::require_selection_shape(c, pool);
    const auto scan = detail::scan_selection(c, pool);
    if (scan.count == 0) throw NoVerifierSelected("selection vector is all-zero");
    if (scan.count != c.m) throw InfeasibleConfiguration("sum(z) != m");
    return detail::latency_value(static_cast<double>(c.theta), static_cast<double>(c.m),
                                 scan.min_capacity, p);
}

/// Security rating alpha * m^kappa (dimensionless).
inline double security(const Configuration& c, const SystemParams& p) {
    if (c.m < 1) throw InfeasibleConfiguration("m must be a positive integer");
    return detail::security_value(static_cast<double>(c.m), p);
}

/// Total incentive cost in dollars, amortized over the block.
inline double cost(const Configuration& c, const VerifierPool& pool) {
    detail::require_selection_shape(c, pool);
    const auto scan = detail::scan_selection(c, pool);
    if (scan.count != c.m) throw InfeasibleConfiguration("sum(z) != m");
    return detail::cost_value(scan.cost_sum, static_cast<double>(c.theta));
}

/// Per-metric maxima over the feasible space, by term-wise maximization:
/// slowest pool verifier, largest theta and m for latency; m_max for
/// security; full selection at the smallest theta for cost.
inline NormConstants norm_constants(const SystemParams& p, const VerifierPool& pool,
                                    const SearchSpace& space) {
    double min_capacity = std::numeric_limits<double>::infinity();
    double full_cost_sum = 0.0;
    for (std::size_t i = 0; i < pool.capacities.size(); ++i) {
        min_capacity = std::min(min_capacity, pool.capacities[i]);
        full_cost_sum += pool.unit_costs[i] * pool.capacities[i];
    }
    NormConstants n;
    n.L_m = detail::latency_value(static_cast<double>(space.theta_max),
                                  static_cast<double>(space.m_max), min_capacity, p);
    n.S_m = detail::security_value(static_cast<double>(space.m_max), p);
    n.C_m = detail::cost_value(full_cost_sum, static_cast<double>(space.theta_min));
    return n;
}

/// Normalized weighted utility in [0, 1]; higher is better.
inline double utility(const Configuration& c, const SystemParams& p,
                      const VerifierPool& pool, const Weights& w,
                      const NormConstants& norms) {
    const Metrics v{latency(c, p, pool), security(c, p), cost(c, pool)};
    return detail::utility_value(v, w, norms);
}

// ---------------------------------------------------------------------------

/// Bundles one problem instance's read-only data with precomputed products
/// and normalization constants for fast repeated evaluation. Produces
/// bit-identical values to the free functions above. Safe to share across
/// threads once constructed.
class Evaluator {
 public:
    Evaluator(const SystemParams& params, const VerifierPool& pool,
              const SearchSpace& space, const Weights& weights)
        : params_(params),
          pool_(pool),
          space_(space),
          weights_(weights),
          norms_(norm_constants(params, pool, space)) {
        cost_products_.reserve(pool_.capacities.size());
        for (std::size_t i = 0; i < pool_.capacities.size(); ++i)
            cost_products_.push_back(pool_.unit_costs[i] * pool_.capacities[i]);
    }

    Metrics metrics(const Configuration& c) const {
        double min_capacity = std::numeric_limits<double>::infinity();
        double cost_sum = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < cost_products_.size(); ++i) {
            if (c.z[i]) {
                any = true;
                min_capacity = std::min(min_capacity, pool_.capacities[i]);
                cost_sum += cost_products_[i];
            }
        }
        if (!any) throw NoVerifierSelected("selection vector is all-zero");
        Metrics v;
        v.latency = detail::latency_value(static_cast<double>(c.theta),
                                          static_cast<double>(c.m), min_capacity, params_);
        v.security = detail::security_value(static_cast<double>(c.m), params_);
        v.cost = detail::cost_value(cost_sum, static_cast<double>(c.theta));
        return v;
    }

    double utility(const Configuration& c) const {
        return detail::utility_value(metrics(c), weights_, norms_);
    }

    const SystemParams& params() const { return params_; }
    const VerifierPool& pool() const { return pool_; }
    const SearchSpace& space() const { return space_; }
    const Weights& weights() const { return weights_; }
    const NormConstants& norms() const { return norms_; }
    int pool_size() const { return pool_.size(); }

 private:
    SystemParams params_;
    VerifierPool pool_;
    SearchSpace space_;
    Weights weights_;
    NormConstants norms_;
    std::vector<double> cost_products_;
};

} // namespace chainopt
