#pragma once

#include <ddiff/core/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace ddiff {

/// Relevance judgments for one query, Oxford/Paris style.
///
/// Junk images are removed from the ranking before scoring, neither helping
/// nor hurting. `query_image`, when set, is removed the same way.
struct GroundTruth {
    std::vector<Index> positives;
    std::vector<Index> junk;
    std::optional<Index> query_image;

    void validate() const {
        const std::unordered_set<Index> pos(positives.begin(), positives.end());
        for (Index j : junk)
            if (pos.contains(j)) throw InvalidArgument("image " + std::to_string(j) + " is both positive and junk");
    }
};

/// Non-interpolated average precision: mean of precision@rank over the ranks of positives.
inline double average_precision(std::span<const Index> order, const GroundTruth& gt) {
    if (gt.positives.empty()) throw InvalidArgument("average precision needs at least one positive");
    const std::unordered_set<Index> pos(gt.positives.begin(), gt.positives.end());
    const std::unordered_set<Index> junk(gt.junk.begin(), gt.junk.end());
    std::size_t rank = 0;
    std::size_t hits = 0;
    double sum = 0.0;
    for (Index id : order) {
        if (junk.contains(id) || (gt.query_image && *gt.query_image == id)) continue;
        ++rank;
        if (pos.contains(id)) {
            ++hits;
            sum += double(hits) / double(rank);
        }
    }
    return sum / double(pos.size());
}

inline double mean_ap(std::span<const double> aps) {
    if (aps.empty()) throw InvalidArgument("mean AP over zero queries");
    return std::accumulate(aps.begin(), aps.end(), 0.0) / double(aps.size());
}

/// Ground truth file: {"<query_id>": {"positives": [...], "junk": [...], "query_image": id?}, ...}.
/// Query ids are non-negative integers; the result is ordered by id.
inline std::map<Index, GroundTruth> parse_ground_truth(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("ground truth must be a JSON object keyed by query id");
    std::map<Index, GroundTruth> out;
    for (const auto& [key, value] : j.items()) {
        Index qid = 0;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(key, &used);
            if (used != key.size() || v < 0) throw std::invalid_argument(key);
            qid = static_cast<Index>(v);
        } catch (const std::exception&) {
            throw FormatError("ground truth key '" + key + "' is not a query index");
        }
        GroundTruth gt;
        try {
            gt.positives = value.at("positives").get<std::vector<Index>>();
            if (value.contains("junk")) gt.junk = value.at("junk").get<std::vector<Index>>();
            if (value.contains("query_image") && !value.at("query_image").is_null())
                gt.query_image = value.at("query_image").get<Index>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("ground truth entry '" + key + "': " + e.what());
        }
        gt.validate();
        out.emplace(qid, std::move(gt));
    }
    return out;
}

inline std::map<Index, GroundTruth> load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return parse_ground_truth(j);
}

inline nlohmann::json ground_truth_to_json(std::span<const GroundTruth> truth) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t q = 0; q < truth.size(); ++q) {
        nlohmann::json e{{"positives", truth[q].positives}, {"junk", truth[q].junk}};
        if (truth[q].query_image) e["query_image"] = *truth[q].query_image;
        j[std::to_string(q)] = std::move(e);
    }
    return j;
}

}  // namespace ddiff
