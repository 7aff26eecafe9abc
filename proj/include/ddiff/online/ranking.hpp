#pragma once

#include <ddiff/core/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace ddiff {

/// Scores over database images plus the induced ranking.
///
/// `order` is a permutation of [0, scores.size()): descending score, ties by
/// ascending index. Results that only score a candidate subset rank the
/// remaining entries after every candidate, again by index.
struct RankedResult {
    std::vector<double> scores;
    std::vector<Index> order;
    bool fallback = false;  // a query feature had no positive similarity
};

inline RankedResult rank_scores(std::vector<double> scores) {
    RankedResult out;
    out.order.resize(scores.size());
    std::iota(out.order.begin(), out.order.end(), Index{0});
    std::sort(out.order.begin(), out.order.end(), [&](Index a, Index b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    });
    out.scores = std::move(scores);
    return out;
}

/// Ranks members by score, then non-members by index.
inline RankedResult rank_scores(std::vector<double> scores, const std::vector<bool>& member) {
    if (member.size() != scores.size()) throw InvalidArgument("membership mask length mismatch");
    RankedResult out;
    out.order.resize(scores.size());
    std::iota(out.order.begin(), out.order.end(), Index{0});
    std::sort(out.order.begin(), out.order.end(), [&](Index a, Index b) {
        if (member[a] != member[b]) return bool(member[a]);
        if (!member[a]) return a < b;
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    });
    out.scores = std::move(scores);
    return out;
}

/// Best `k` (index, score) pairs in ranking order without sorting everything.
inline std::vector<std::pair<Index, double>> top_k(std::span<const double> scores, std::size_t k) {
    k = std::min(k, scores.size());
    auto before = [](const std::pair<Index, double>& a, const std::pair<Index, double>& b) {
        return a.second > b.second || (a.second == b.second && a.first < b.first);
    };
    std::vector<std::pair<Index, double>> heap;
    heap.reserve(k);
    if (k == 0) return heap;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const std::pair<Index, double> c{static_cast<Index>(i), scores[i]};
        if (heap.size() < k) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end(), before);
        } else if (before(c, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), before);
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end(), before);
        }
    }
    std::sort(heap.begin(), heap.end(), before);
    return heap;
}

}  // namespace ddiff
