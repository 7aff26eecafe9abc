#pragma once

#include <ddiff/baselines/baselines.hpp>
#include <ddiff/core/error.hpp>
#include <ddiff/eval/metrics.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/graph/knn.hpp>
#include <ddiff/offline/sparsified_inverse.hpp>
#include <ddiff/online/search.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

enum class Method { knn, aqe, proposed, online_early, online_late };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::knn: return "knn";
        case Method::aqe: return "aqe";
        case Method::proposed: return "proposed";
        case Method::online_early: return "online-early";
        case Method::online_late: return "online-late";
    }
    return "unknown";
}

inline Method parse_method(const std::string& s) {
    for (Method m : {Method::knn, Method::aqe, Method::proposed, Method::online_early, Method::online_late})
        if (to_string(m) == s) return m;
    throw InvalidArgument("unknown method '" + s + "' (knn, aqe, proposed, online-early, online-late)");
}

struct MethodParams {
    std::size_t k = 50;      // graph neighbors
    std::size_t L = 1000;    // truncation size (online modes)
    std::size_t h = 10;      // query neighbors in y
    std::size_t k_exp = 10;  // AQE expansion size
    std::size_t topk = 100;  // results returned by the timed path
    double alpha = 0.99;
    SimilarityConfig sim{};
    CgConfig online_cg{};

    nlohmann::json to_json() const {
        return {{"k", k},         {"L", L},         {"h", h},           {"k_exp", k_exp},
                {"topk", topk},   {"alpha", alpha}, {"gamma", sim.gamma}, {"cg_max_iters", online_cg.max_iters},
                {"cg_tol", online_cg.residual_tol}};
    }
};

/// Wall-clock split of one query. `combine` covers column accumulation,
/// aggregation and top-k selection; `graph` and `solve` are online diffusion steps.
struct QueryTiming {
    double knn_ms = 0.0;
    double graph_ms = 0.0;
    double solve_ms = 0.0;
    double combine_ms = 0.0;
};

/// One retrieval method bound to its database and prebuilt structures.
///
/// proposed needs `index`; online-late needs `laplacian` (built over db).
class Retriever {
public:
    Retriever(Method method, const FeatureSet& db, MethodParams params, const SparsifiedInverse* index = nullptr,
              const SparseMatrix* laplacian = nullptr)
        : method_(method), db_(&db), params_(params), index_(index), searcher_(db) {
        if (method == Method::proposed) {
            if (!index) throw InvalidArgument("proposed method needs a precomputed index");
            proposed_.emplace(*index, db, searcher_, SearchParams{params.h, params.sim, Aggregation::sum});
        }
        if (method == Method::online_early || method == Method::online_late) {
            if (method == Method::online_late && !laplacian)
                throw InvalidArgument("online-late needs the full-graph laplacian");
            online_.emplace(db, OnlineParams{params.L, params.k, params.h, params.alpha, params.sim, params.online_cg},
                            laplacian);
        }
    }

    Retriever(const Retriever&) = delete;
    Retriever& operator=(const Retriever&) = delete;

    Method method() const { return method_; }
    const MethodParams& params() const { return params_; }

    /// Complete ranking over images, used for mAP.
    RankedResult rank(const FeatureSet& query) const {
        switch (method_) {
            case Method::knn: return knn_rank(*db_, query, params_.sim);
            case Method::aqe: return aqe(*db_, query, params_.k_exp, params_.sim);
            case Method::proposed: return proposed_->search(query);
            case Method::online_early: return online_->rank(query, TruncationMode::early);
            case Method::online_late: return online_->rank(query, TruncationMode::late);
        }
        throw InvalidArgument("unknown method");
    }

    /// Latency path: returns the top `params.topk` images of a query.
    std::vector<std::pair<Index, double>> top(const FeatureSet& query, QueryTiming* timing = nullptr) const {
        using clock = std::chrono::steady_clock;
        QueryTiming local;
        QueryTiming& t = timing ? *timing : local;
        auto t0 = clock::now();
        std::vector<double> scores;
        switch (method_) {
            case Method::knn: {
                const KnnResult nn = searcher_.search(query, std::min(params_.topk, db_->n()));
                t.knn_ms += detail::elapsed_ms(t0);
                if (query.n() == 1 && !db_->has_image_map()) {
                    std::vector<std::pair<Index, double>> out;
                    for (std::size_t r = 0; r < nn.k; ++r)
                        out.emplace_back(nn.ids[r], params_.sim(double(nn.sims[r])));
                    return out;
                }
                t0 = clock::now();
                scores.assign(db_->n(), 0.0);
                for (std::size_t q = 0; q < nn.m; ++q)
                    for (std::size_t r = 0; r < nn.k; ++r)
                        scores[nn.row_ids(q)[r]] += params_.sim(double(nn.row_sims(q)[r]));
                break;
            }
            case Method::aqe: {
                const KnnResult nn = searcher_.search(query, params_.k_exp);
                std::vector<float> expanded;
                expanded.reserve(query.n() * query.d());
                for (std::size_t q = 0; q < query.n(); ++q) {
                    const auto e = expand_query(*db_, query.row(q), nn, q);
                    expanded.insert(expanded.end(), e.begin(), e.end());
                }
                const FeatureSet eq(query.n(), query.d(), std::move(expanded));
                const KnnResult second = searcher_.search(eq, std::min(params_.topk, db_->n()));
                t.knn_ms += detail::elapsed_ms(t0);
                t0 = clock::now();
                scores.assign(db_->n(), 0.0);
                for (std::size_t q = 0; q < second.m; ++q)
                    for (std::size_t r = 0; r < second.k; ++r)
                        scores[second.row_ids(q)[r]] += params_.sim(double(second.row_sims(q)[r]));
                break;
            }
            case Method::proposed: {
                const auto states = build_initial_state(query, *db_, searcher_, params_.h, params_.sim);
                t.knn_ms += detail::elapsed_ms(t0);
                t0 = clock::now();
                scores.assign(db_->n(), 0.0);
                for (const auto& y : states) accumulate_columns(*index_, y, scores);
                break;
            }
            case Method::online_early:
            case Method::online_late: {
                const TruncationMode mode =
                    method_ == Method::online_early ? TruncationMode::early : TruncationMode::late;
                OnlineTiming ot;
                scores.assign(db_->n(), 0.0);
                std::vector<Index> members;
                for (std::size_t q = 0; q < query.n(); ++q) {
                    const auto tr = online_->diffuse(query.row(q), mode, &ot);
                    for (std::size_t r = 0; r < tr.ids.size(); ++r) scores[tr.ids[r]] += tr.scores[r];
                    members.insert(members.end(), tr.ids.begin(), tr.ids.end());
                }
                t.knn_ms += ot.knn_ms;
                t.graph_ms += ot.graph_ms;
                t.solve_ms += ot.solve_ms;
                t0 = clock::now();
                // Only subset members are candidates.
                std::sort(members.begin(), members.end());
                members.erase(std::unique(members.begin(), members.end()), members.end());
                std::vector<double> member_scores(members.size());
                for (std::size_t r = 0; r < members.size(); ++r) member_scores[r] = scores[members[r]];
                auto best = top_k(member_scores, params_.topk);
                for (auto& [pos, s] : best) pos = members[pos];
                t.combine_ms += detail::elapsed_ms(t0);
                return best;
            }
        }
        if (db_->has_image_map()) scores = aggregate_regional(scores, db_->image_of(), db_->n_images());
        auto best = top_k(scores, params_.topk);
        t.combine_ms += detail::elapsed_ms(t0);
        return best;
    }

    /// Bare top-k search, the reference cost every method is compared with.
    double knn_only_ms(const FeatureSet& query) const {
        const auto t0 = std::chrono::steady_clock::now();
        const KnnResult nn = searcher_.search(query, std::min(params_.topk, db_->n()));
        const double ms = detail::elapsed_ms(t0);
        sink_ = sink_ + nn.ids[0];
        return ms;
    }

private:
    Method method_;
    const FeatureSet* db_;
    MethodParams params_;
    const SparsifiedInverse* index_;
    BruteForceSearcher searcher_;
    std::optional<DiffusionSearch<float>> proposed_;
    std::optional<OnlineDiffusion> online_;
    mutable Index sink_ = 0;
};

struct LatencyStats {
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p99_ms = 0.0;

    static LatencyStats from(std::vector<double> samples) {
        LatencyStats s;
        if (samples.empty()) return s;
        std::sort(samples.begin(), samples.end());
        double sum = 0.0;
        for (double v : samples) sum += v;
        s.mean_ms = sum / double(samples.size());
        const std::size_t mid = samples.size() / 2;
        s.median_ms = samples.size() % 2 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
        // Nearest-rank percentile.
        const auto rank = static_cast<std::size_t>(std::ceil(0.99 * double(samples.size())));
        s.p99_ms = samples[std::max<std::size_t>(rank, 1) - 1];
        return s;
    }

    nlohmann::json to_json() const { return {{"mean", mean_ms}, {"median", median_ms}, {"p99", p99_ms}}; }
};

struct BenchReport {
    std::string method;
    MethodParams params{};
    std::size_t n_repeats = 0;
    std::size_t n_queries = 0;
    double map = 0.0;                // NaN when no ground truth was supplied
    std::vector<double> ap;          // per query
    LatencyStats latency{};          // per-query means over n_repeats runs
    LatencyStats knn_latency{};      // bare top-k search, same protocol
    QueryTiming breakdown{};         // mean per query per run

    /// (method - knn) / knn on mean latency.
    double overhead_ratio() const {
        return knn_latency.mean_ms > 0.0 ? (latency.mean_ms - knn_latency.mean_ms) / knn_latency.mean_ms : 0.0;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"method", method},
                         {"params", params.to_json()},
                         {"n_repeats", n_repeats},
                         {"n_queries", n_queries},
                         {"map", std::isnan(map) ? nlohmann::json(nullptr) : nlohmann::json(map)},
                         {"ap", ap},
                         {"latency_ms", latency.to_json()},
                         {"knn_latency_ms", knn_latency.to_json()},
                         {"overhead_ratio", overhead_ratio()},
                         {"breakdown_ms",
                          {{"knn", breakdown.knn_ms},
                           {"graph", breakdown.graph_ms},
                           {"solve", breakdown.solve_ms},
                           {"combine", breakdown.combine_ms}}}};
        return j;
    }
};

/// Evaluates mAP (when `truth` is non-empty) and measures per-query latency.
///
/// Each query runs `n_repeats` times through the latency path; its latency is
/// the mean of those runs. Only the per-query path is inside the timer.
inline BenchReport bench_latency(const Retriever& retriever, std::span<const FeatureSet> queries,
                                 std::span<const GroundTruth> truth, std::size_t n_repeats = 10) {
    if (n_repeats == 0) throw InvalidArgument("n_repeats must be positive");
    if (!truth.empty() && truth.size() != queries.size())
        throw InvalidArgument("ground truth count does not match query count");
    BenchReport report;
    report.method = to_string(retriever.method());
    report.params = retriever.params();
    report.n_repeats = n_repeats;
    report.n_queries = queries.size();
    report.map = NAN;

    if (!truth.empty()) {
        for (std::size_t q = 0; q < queries.size(); ++q)
            report.ap.push_back(average_precision(retriever.rank(queries[q]).order, truth[q]));
        report.map = mean_ap(report.ap);
    }

    if (!queries.empty()) {
        (void)retriever.top(queries[0]);  // warm-up
        (void)retriever.knn_only_ms(queries[0]);
    }
    std::vector<double> per_query;
    std::vector<double> per_query_knn;
    QueryTiming total;
    for (const FeatureSet& q : queries) {
        double sum = 0.0;
        double knn_sum = 0.0;
        for (std::size_t r = 0; r < n_repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto top = retriever.top(q, &total);
            sum += detail::elapsed_ms(t0);
            if (top.empty()) throw Error("empty result");
            knn_sum += retriever.knn_only_ms(q);
        }
        per_query.push_back(sum / double(n_repeats));
        per_query_knn.push_back(knn_sum / double(n_repeats));
    }
    report.latency = LatencyStats::from(per_query);
    report.knn_latency = LatencyStats::from(per_query_knn);
    const double runs = double(std::max<std::size_t>(1, queries.size() * n_repeats));
    report.breakdown = {total.knn_ms / runs, total.graph_ms / runs, total.solve_ms / runs, total.combine_ms / runs};
    return report;
}

/// Splits a query feature file into per-query feature sets; `query_of` groups
/// rows (empty = one row per query).
inline std::vector<FeatureSet> split_queries(const FeatureSet& features, std::span<const Index> query_of = {}) {
    std::vector<FeatureSet> out;
    if (query_of.empty()) {
        for (std::size_t i = 0; i < features.n(); ++i) {
            const Index id = static_cast<Index>(i);
            out.push_back(features.subset({&id, 1}));
        }
        return out;
    }
    if (query_of.size() != features.n()) throw InvalidArgument("query map length mismatch");
    std::map<Index, std::vector<Index>> groups;
    for (std::size_t i = 0; i < features.n(); ++i) groups[query_of[i]].push_back(static_cast<Index>(i));
    for (const auto& [qid, rows] : groups) {
        if (qid != out.size()) throw InvalidArgument("query ids must be contiguous from 0");
        out.push_back(features.subset(rows));
    }
    return out;
}

struct SweepRow {
    std::size_t L = 0;
    TruncationMode mode = TruncationMode::early;
    double map = 0.0;
    double latency_ms = 0.0;
};

/// mAP and mean latency of online diffusion for every (L, mode) pair.
inline std::vector<SweepRow> sweep_truncation(const FeatureSet& db, std::span<const FeatureSet> queries,
                                              std::span<const GroundTruth> truth, std::span<const std::size_t> Ls,
                                              std::span<const TruncationMode> modes, const MethodParams& base,
                                              const SparseMatrix& full_laplacian, std::size_t n_repeats = 1) {
    std::vector<SweepRow> rows;
    for (std::size_t L : Ls) {
        if (L == 0 || L > db.n()) throw InvalidArgument("sweep L=" + std::to_string(L) + " outside [1, n]");
        for (TruncationMode mode : modes) {
            MethodParams p = base;
            p.L = L;
            const Retriever r(mode == TruncationMode::early ? Method::online_early : Method::online_late, db, p,
                              nullptr, &full_laplacian);
            const BenchReport rep = bench_latency(r, queries, truth, n_repeats);
            rows.push_back({L, mode, rep.map, rep.latency.mean_ms});
        }
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "L,mode,mAP,latency_ms\n";
    for (const SweepRow& r : rows) {
        out << r.L << ',' << (r.mode == TruncationMode::early ? "early" : "late") << ',' << r.map << ','
            << r.latency_ms << '\n';
    }
}

}  // namespace ddiff
