#pragma once

#include <ddiff/core/error.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are not supported");

/// n x d matrix of L2-normalized float features, optionally grouped into images.
///
/// Rows are normalized on construction; a zero row is rejected. When an image
/// map is attached, image_of(i) gives the image owning feature i and image ids
/// cover [0, n_images()) without gaps.
class FeatureSet {
public:
    FeatureSet() = default;

    FeatureSet(std::size_t n, std::size_t d, std::vector<float> values)
        : n_(n), d_(d), values_(std::move(values)) {
        if (values_.size() != n_ * d_)
            throw InvalidArgument("FeatureSet: expected " + std::to_string(n_ * d_) +
                                  " values, got " + std::to_string(values_.size()));
        if (n_ > 0 && d_ == 0) throw InvalidArgument("FeatureSet: dimension must be positive");
        normalize_rows();
    }

    FeatureSet(std::size_t n, std::size_t d, std::vector<float> values, std::vector<Index> image_of)
        : FeatureSet(n, d, std::move(values)) {
        set_image_map(std::move(image_of));
    }

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }
    bool empty() const { return n_ == 0; }

    std::span<const float> row(std::size_t i) const { return {values_.data() + i * d_, d_}; }
    std::span<const float> values() const { return values_; }

    bool has_image_map() const { return image_of_.has_value(); }
    std::span<const Index> image_of() const {
        return image_of_ ? std::span<const Index>(*image_of_) : std::span<const Index>{};
    }
    /// Number of images; equals n() when no map is attached.
    std::size_t n_images() const { return image_of_ ? n_images_ : n_; }

    void set_image_map(std::vector<Index> image_of) {
        if (image_of.size() != n_)
            throw InvalidArgument("image map has " + std::to_string(image_of.size()) +
                                  " entries for " + std::to_string(n_) + " features");
        std::size_t n_images = 0;
        if (!image_of.empty()) n_images = std::size_t{*std::max_element(image_of.begin(), image_of.end())} + 1;
        if (n_images > n_) throw InvalidArgument("image map is not contiguous: more images than features");
        std::vector<bool> seen(n_images, false);
        for (Index img : image_of) seen[img] = true;
        for (std::size_t i = 0; i < n_images; ++i)
            if (!seen[i]) throw InvalidArgument("image map is not contiguous: image " +
                                                std::to_string(i) + " has no feature");
        image_of_ = std::move(image_of);
        n_images_ = n_images;
    }

    /// Rows `ids` in order. The image map is not carried over.
    FeatureSet subset(std::span<const Index> ids) const {
        FeatureSet out;
        out.n_ = ids.size();
        out.d_ = d_;
        out.values_.resize(ids.size() * d_);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            if (ids[r] >= n_) throw InvalidArgument("subset id out of range");
            std::memcpy(out.values_.data() + r * d_, values_.data() + ids[r] * d_, d_ * sizeof(float));
        }
        return out;
    }

private:
    void normalize_rows() {
        for (std::size_t i = 0; i < n_; ++i) {
            float* r = values_.data() + i * d_;
            double sq = 0.0;
            for (std::size_t j = 0; j < d_; ++j) sq += double(r[j]) * double(r[j]);
            if (!std::isfinite(sq))
                throw InvalidArgument("non-finite feature vector at index " + std::to_string(i));
            if (sq == 0.0)
                throw InvalidArgument("zero-norm feature vector at index " + std::to_string(i));
            const double inv = 1.0 / std::sqrt(sq);
            for (std::size_t j = 0; j < d_; ++j) r[j] = static_cast<float>(r[j] * inv);
        }
    }

    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<float> values_;
    std::optional<std::vector<Index>> image_of_;
    std::size_t n_images_ = 0;
};

/// On-disk feature layouts.
///  - fvecs: records of [int32 d][d x float32], little-endian.
///  - raw_f32: [uint32 n][uint32 d] header followed by n*d float32, little-endian.
enum class FeatureFormat { fvecs, raw_f32 };

namespace detail {

inline std::vector<char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path);
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<char> bytes(size);
    in.seekg(0);
    if (size > 0 && !in.read(bytes.data(), static_cast<std::streamsize>(size)))
        throw IoError("cannot read " + path);
    return bytes;
}

template <typename T>
T read_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

}  // namespace detail

inline FeatureSet load_features(const std::string& path, FeatureFormat format = FeatureFormat::fvecs) {
    const std::vector<char> bytes = detail::read_file(path);
    std::vector<float> values;
    std::size_t n = 0;
    std::size_t d = 0;
    if (format == FeatureFormat::fvecs) {
        std::size_t pos = 0;
        while (pos < bytes.size()) {
            if (bytes.size() - pos < 4) throw FormatError(path + ": truncated fvecs record header");
            const auto rd = detail::read_le<std::int32_t>(bytes.data() + pos);
            if (rd <= 0) throw FormatError(path + ": non-positive dimension in record " + std::to_string(n));
            if (n == 0) d = static_cast<std::size_t>(rd);
            if (static_cast<std::size_t>(rd) != d)
                throw FormatError(path + ": dimension mismatch at record " + std::to_string(n) + " (" +
                                  std::to_string(rd) + " vs " + std::to_string(d) + ")");
            pos += 4;
            if (bytes.size() - pos < d * sizeof(float))
                throw FormatError(path + ": truncated fvecs record " + std::to_string(n));
            const std::size_t off = values.size();
            values.resize(off + d);
            std::memcpy(values.data() + off, bytes.data() + pos, d * sizeof(float));
            pos += d * sizeof(float);
            ++n;
        }
    } else {
        if (bytes.size() < 8) throw FormatError(path + ": truncated raw header");
        n = detail::read_le<std::uint32_t>(bytes.data());
        d = detail::read_le<std::uint32_t>(bytes.data() + 4);
        if (bytes.size() != 8 + n * d * sizeof(float))
            throw FormatError(path + ": size does not match header n=" + std::to_string(n) +
                              " d=" + std::to_string(d));
        values.resize(n * d);
        std::memcpy(values.data(), bytes.data() + 8, n * d * sizeof(float));
    }
    return FeatureSet(n, d, std::move(values));
}

/// Sidecar mapping: one integer image id per line, one line per feature.
inline std::vector<Index> load_image_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Index> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(line, &used);
        } catch (const std::exception&) {
            throw FormatError(path + ": bad image id on line " + std::to_string(ids.size() + 1));
        }
        if (v < 0) throw FormatError(path + ": negative image id on line " + std::to_string(ids.size() + 1));
        ids.push_back(static_cast<Index>(v));
    }
    return ids;
}

inline FeatureSet load_features(const std::string& path, FeatureFormat format, const std::string& image_map_path) {
    FeatureSet fs = load_features(path, format);
    if (!image_map_path.empty()) fs.set_image_map(load_image_map(image_map_path));
    return fs;
}

inline void save_fvecs(const std::string& path, const FeatureSet& fs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    const auto d = static_cast<std::int32_t>(fs.d());
    for (std::size_t i = 0; i < fs.n(); ++i) {
        out.write(reinterpret_cast<const char*>(&d), sizeof(d));
        out.write(reinterpret_cast<const char*>(fs.row(i).data()),
                  static_cast<std::streamsize>(fs.d() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
}

inline void save_image_map(const std::string& path, std::span<const Index> image_of) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (Index img : image_of) out << img << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace ddiff
