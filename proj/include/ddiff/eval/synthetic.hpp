#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/eval/metrics.hpp>
#include <ddiff/graph/feature_set.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ddiff {

/// Seeded generator of elongated, curved clusters ("manifolds").
///
/// Cluster c is the curve p(s) = u + s v + curvature s^2 w for
/// s in [-length/2, length/2], with (u, v, w) orthonormal, plus isotropic
/// Gaussian noise, then L2-normalized. Base directions are
/// u = normalize(hub_weight * g + r_c) for a shared random g and per-cluster
/// random r_c; hub_weight = 0 gives independent clusters, larger values pull
/// clusters towards each other so their neighborhoods overlap. Queries are
/// drawn near the s = -length/2 end of each curve; the positives of a query
/// are all database points of its cluster.
struct SynthConfig {
    std::size_t n_clusters = 10;
    std::size_t points_per_cluster = 500;
    std::size_t d = 16;
    double curvature = 0.3;
    double noise_sigma = 0.05;
    std::uint64_t seed = 2019;
    double length = 3.0;
    double hub_weight = 1.0;
    std::size_t queries_per_cluster = 2;

    /// Curved clusters where similarity ranking misses the far end of each curve.
    static SynthConfig manifold_benchmark() { return {}; }

    /// 5,000 points in 50 noisy clusters crowded around a common hub; the
    /// query's top-L set mixes in fragments of neighboring clusters.
    static SynthConfig truncation_benchmark() {
        SynthConfig c;
        c.n_clusters = 50;
        c.points_per_cluster = 100;
        c.noise_sigma = 0.2;
        c.hub_weight = 2.5;
        return c;
    }

    void validate() const {
        if (d < 3) throw InvalidArgument("synthetic data needs d >= 3");
        if (n_clusters == 0 || points_per_cluster == 0 || queries_per_cluster == 0)
            throw InvalidArgument("synthetic data needs at least one cluster, point and query");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidArgument("noise_sigma must be >= 0");
        if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("curve length must be positive");
        if (!std::isfinite(curvature)) throw InvalidArgument("curvature must be finite");
        if (!(hub_weight >= 0.0) || !std::isfinite(hub_weight)) throw InvalidArgument("hub_weight must be >= 0");
    }
};

struct SyntheticDataset {
    FeatureSet database;
    FeatureSet queries;
    std::vector<Index> labels;        // cluster of each database point
    std::vector<Index> query_labels;  // cluster of each query
    std::vector<GroundTruth> truth;   // one per query
};

namespace detail {

inline void normalize(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

inline void remove_component(std::vector<double>& v, const std::vector<double>& unit) {
    double p = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) p += v[i] * unit[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * unit[i];
}

}  // namespace detail

inline SyntheticDataset synth_manifolds(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::size_t d = cfg.d;

    auto gaussian = [&] {
        std::vector<double> v(d);
        for (double& x : v) x = normal(rng);
        return v;
    };

    std::vector<double> hub = gaussian();
    detail::normalize(hub);

    std::vector<float> db_values;
    std::vector<float> q_values;
    SyntheticDataset out;
    db_values.reserve(cfg.n_clusters * cfg.points_per_cluster * d);

    auto emit = [&](std::vector<float>& dst, const std::vector<double>& u, const std::vector<double>& v,
                    const std::vector<double>& w, double s) {
        for (std::size_t j = 0; j < d; ++j) {
            const double x = u[j] + s * v[j] + cfg.curvature * s * s * w[j] + cfg.noise_sigma * normal(rng);
            dst.push_back(static_cast<float>(x));
        }
    };

    for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
        std::vector<double> u = gaussian();
        detail::normalize(u);
        for (std::size_t j = 0; j < d; ++j) u[j] += cfg.hub_weight * hub[j];
        detail::normalize(u);
        std::vector<double> v = gaussian();
        detail::remove_component(v, u);
        detail::normalize(v);
        std::vector<double> w = gaussian();
        detail::remove_component(w, u);
        detail::remove_component(w, v);
        detail::normalize(w);

        for (std::size_t p = 0; p < cfg.points_per_cluster; ++p) {
            emit(db_values, u, v, w, (uniform(rng) - 0.5) * cfg.length);
            out.labels.push_back(static_cast<Index>(c));
        }
        for (std::size_t q = 0; q < cfg.queries_per_cluster; ++q) {
            emit(q_values, u, v, w, (-0.5 + 0.02 * uniform(rng)) * cfg.length);
            out.query_labels.push_back(static_cast<Index>(c));
        }
    }

    const std::size_t n = out.labels.size();
    out.database = FeatureSet(n, d, std::move(db_values));
    out.queries = FeatureSet(out.query_labels.size(), d, std::move(q_values));

    std::vector<std::vector<Index>> members(cfg.n_clusters);
    for (std::size_t i = 0; i < n; ++i) members[out.labels[i]].push_back(static_cast<Index>(i));
    for (Index c : out.query_labels) out.truth.push_back(GroundTruth{members[c], {}, std::nullopt});
    return out;
}

}  // namespace ddiff
