#pragma once

#include <ddiff/core/error.hpp>

#include <algorithm>
#include <cmath>
#include <span>

namespace ddiff {

/// s(x, y) = max(<x, y>, 0)^gamma on L2-normalized features.
struct SimilarityConfig {
    double gamma = 3.0;
    bool clamp_negative = true;

    void validate() const {
        if (!(gamma > 0.0)) throw InvalidArgument("similarity exponent gamma must be positive");
    }

    /// Maps a raw inner product to an edge weight.
    double operator()(double inner) const {
        if (clamp_negative) inner = std::max(inner, 0.0);
        if (gamma == 1.0) return inner;
        if (gamma == 3.0) return inner * inner * inner;
        // Without clamping a negative base keeps its sign.
        return inner < 0.0 ? -std::pow(-inner, gamma) : std::pow(inner, gamma);
    }
};

/// Inner product accumulated in double.
inline double dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * double(b[i]);
    return acc;
}

}  // namespace ddiff
