#pragma once

#include <ddiff/core/error.hpp>

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

/// Early-terminated conjugate gradient settings.
///
/// Iteration stops once ||r|| <= residual_tol * ||b|| or after max_iters
/// steps. The default mirrors the online baseline budget (20 iterations);
/// offline() is the precomputation budget.
struct CgConfig {
    std::size_t max_iters = 20;
    double residual_tol = 1e-6;

    static constexpr CgConfig offline() { return {200, 1e-6}; }

    void validate() const {
        if (max_iters < 1) throw InvalidArgument("CG max_iters must be at least 1");
        if (!(residual_tol >= 0.0)) throw InvalidArgument("CG residual tolerance must be non-negative");
    }
};

struct CgResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    double residual_norm = 0.0;  // recurrence residual ||r||
    bool converged = false;
};

/// Anything with size() and multiply(x, y) computing y = M x.
template <typename Op>
concept LinearOperator = requires(const Op& op, std::span<const double> x, std::span<double> y) {
    { op.size() } -> std::convertible_to<std::size_t>;
    op.multiply(x, y);
};

/// Solves M x = b for symmetric positive-definite M.
///
/// Deterministic for fixed inputs. Throws SolverError on a non-finite value or
/// non-positive curvature p^T M p, both of which mean M is not SPD (or the
/// slice it came from is corrupt).
template <LinearOperator Op>
CgResult solve_cg(const Op& m, std::span<const double> b, const CgConfig& cfg) {
    cfg.validate();
    const std::size_t n = m.size();
    if (b.size() != n)
        throw InvalidArgument("CG: rhs has " + std::to_string(b.size()) + " entries for a " + std::to_string(n) +
                              "-dimensional system");
    CgResult out;
    out.x.assign(n, 0.0);
    std::vector<double> r(b.begin(), b.end());
    std::vector<double> p = r;
    std::vector<double> mp(n);

    auto dot = [](std::span<const double> u, std::span<const double> v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
        return acc;
    };

    double rr = dot(r, r);
    if (!std::isfinite(rr)) throw SolverError("CG: non-finite right-hand side");
    const double b_norm = std::sqrt(rr);
    out.residual_norm = b_norm;
    if (b_norm == 0.0) {
        out.converged = true;
        return out;
    }
    const double target = cfg.residual_tol * b_norm;

    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        m.multiply(p, mp);
        const double curvature = dot(p, mp);
        if (!std::isfinite(curvature) || curvature <= 0.0)
            throw SolverError("CG: non-positive or non-finite curvature at iteration " + std::to_string(it + 1));
        const double step = rr / curvature;
        for (std::size_t i = 0; i < n; ++i) {
            out.x[i] += step * p[i];
            r[i] -= step * mp[i];
        }
        const double rr_next = dot(r, r);
        if (!std::isfinite(rr_next)) throw SolverError("CG: non-finite residual at iteration " + std::to_string(it + 1));
        out.iterations = it + 1;
        out.residual_norm = std::sqrt(rr_next);
        if (out.residual_norm <= target) {
            out.converged = true;
            break;
        }
        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_next;
    }
    return out;
}

}  // namespace ddiff
