#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/offline/sparsified_inverse.hpp>

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

namespace ddiff {

// Index file layout, little-endian:
//
//   offset size
//        0    8  magic "DDIFFIDX"
//        8    4  u32 format version (1)
//       12    4  u32 value type (1 = float32, 2 = float64)
//       16    8  u64 n
//       24    8  u64 L
//       32    8  f64 alpha
//       40    8  u64 graph k
//       48    8  f64 gamma
//       56    4  u32 CG max iterations
//       60    4  u32 reserved (0)
//       64    8  f64 CG residual tolerance
//       72    8  i64 build timestamp (unix seconds)
//       80       n column blocks: L x int32 row ids, then L x value
//      end    4  u32 CRC-32 of every preceding byte

inline constexpr std::array<char, 8> kIndexMagic{'D', 'D', 'I', 'F', 'F', 'I', 'D', 'X'};
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::size_t kIndexHeaderBytes = 80;
inline constexpr std::size_t kIndexTrailerBytes = 4;

struct IndexHeader {
    std::uint32_t version = kIndexVersion;
    std::uint32_t value_type = 1;
    std::uint64_t n = 0;
    std::uint64_t L = 0;
    double alpha = 0.0;
    BuildMetadata meta{};

    std::size_t value_bytes() const { return value_type == 2 ? 8 : 4; }
    /// Exact file size implied by the header.
    std::size_t file_size() const {
        return kIndexHeaderBytes + n * L * (sizeof(std::int32_t) + value_bytes()) + kIndexTrailerBytes;
    }
};

template <std::floating_point Real>
constexpr std::uint32_t index_value_type() {
    static_assert(std::is_same_v<Real, float> || std::is_same_v<Real, double>, "float32 or float64 only");
    return std::is_same_v<Real, float> ? 1u : 2u;
}

namespace detail {

class ByteWriter {
public:
    template <typename T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void put_bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        bytes_.insert(bytes_.end(), c, c + n);
    }
    std::vector<char>& bytes() { return bytes_; }

private:
    std::vector<char> bytes_;
};

inline std::uint32_t crc32_of(const char* data, std::size_t size) {
    uLong crc = crc32(0L, Z_NULL, 0);
    while (size > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
        data += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

inline IndexHeader parse_index_header(const std::vector<char>& bytes, const std::string& path) {
    if (bytes.size() < kIndexHeaderBytes + kIndexTrailerBytes)
        throw FormatError(path + ": truncated index (shorter than header)");
    if (std::memcmp(bytes.data(), kIndexMagic.data(), kIndexMagic.size()) != 0)
        throw FormatError(path + ": not an index file (bad magic)");
    IndexHeader h;
    const char* p = bytes.data() + 8;
    h.version = read_le<std::uint32_t>(p + 0);
    if (h.version != kIndexVersion)
        throw FormatError(path + ": unsupported index format version " + std::to_string(h.version) + " (expected " +
                          std::to_string(kIndexVersion) + ")");
    h.value_type = read_le<std::uint32_t>(p + 4);
    if (h.value_type != 1 && h.value_type != 2)
        throw FormatError(path + ": unknown value type " + std::to_string(h.value_type));
    h.n = read_le<std::uint64_t>(p + 8);
    h.L = read_le<std::uint64_t>(p + 16);
    h.alpha = read_le<double>(p + 24);
    h.meta.k = read_le<std::uint64_t>(p + 32);
    h.meta.gamma = read_le<double>(p + 40);
    h.meta.cg_max_iters = read_le<std::uint32_t>(p + 48);
    h.meta.cg_tol = read_le<double>(p + 56);
    h.meta.build_timestamp = read_le<std::int64_t>(p + 64);
    if (h.L > h.n) throw FormatError(path + ": L exceeds n in header");
    if (h.n > INT32_MAX) throw FormatError(path + ": n exceeds the int32 id range");
    return h;
}

}  // namespace detail

template <std::floating_point Real>
void save_index(const BasicSparsifiedInverse<Real>& idx, const std::string& path) {
    if (idx.ids.size() != idx.n * idx.L || idx.values.size() != idx.n * idx.L)
        throw InvalidArgument("index arrays do not match n * L");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);

    uLong crc = crc32(0L, Z_NULL, 0);
    detail::ByteWriter w;
    auto flush = [&] {
        auto& b = w.bytes();
        crc = crc32(crc, reinterpret_cast<const Bytef*>(b.data()), static_cast<uInt>(b.size()));
        out.write(b.data(), static_cast<std::streamsize>(b.size()));
        b.clear();
    };

    w.put_bytes(kIndexMagic.data(), kIndexMagic.size());
    w.put(kIndexVersion);
    w.put(index_value_type<Real>());
    w.put(static_cast<std::uint64_t>(idx.n));
    w.put(static_cast<std::uint64_t>(idx.L));
    w.put(idx.alpha);
    w.put(idx.meta.k);
    w.put(idx.meta.gamma);
    w.put(idx.meta.cg_max_iters);
    w.put(std::uint32_t{0});
    w.put(idx.meta.cg_tol);
    w.put(idx.meta.build_timestamp);
    flush();
    for (std::size_t i = 0; i < idx.n; ++i) {
        for (Index id : idx.row_ids(i)) w.put(static_cast<std::int32_t>(id));
        w.put_bytes(idx.column(i).data(), idx.L * sizeof(Real));
        flush();
    }
    const auto crc32_value = static_cast<std::uint32_t>(crc);
    out.write(reinterpret_cast<const char*>(&crc32_value), sizeof crc32_value);
    if (!out) throw IoError("write failed: " + path);
}

/// Reads only the header (validates magic and version, not the payload).
inline IndexHeader read_index_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<char> bytes(kIndexHeaderBytes + kIndexTrailerBytes);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    bytes.resize(static_cast<std::size_t>(in.gcount()));
    return detail::parse_index_header(bytes, path);
}

template <std::floating_point Real = float>
BasicSparsifiedInverse<Real> load_index(const std::string& path) {
    const std::vector<char> bytes = detail::read_file(path);
    const IndexHeader h = detail::parse_index_header(bytes, path);
    if (h.value_type != index_value_type<Real>())
        throw FormatError(path + ": index stores " + (h.value_type == 1 ? "float32" : "float64") +
                          " values, caller requested the other precision");
    if (bytes.size() != h.file_size())
        throw FormatError(path + ": truncated or oversized index (" + std::to_string(bytes.size()) +
                          " bytes, header implies " + std::to_string(h.file_size()) + ")");
    const std::size_t payload = bytes.size() - kIndexTrailerBytes;
    const auto stored_crc = detail::read_le<std::uint32_t>(bytes.data() + payload);
    if (detail::crc32_of(bytes.data(), payload) != stored_crc) throw FormatError(path + ": checksum mismatch");

    BasicSparsifiedInverse<Real> idx;
    idx.n = h.n;
    idx.L = h.L;
    idx.alpha = h.alpha;
    idx.meta = h.meta;
    idx.ids.resize(h.n * h.L);
    idx.values.resize(h.n * h.L);
    const char* p = bytes.data() + kIndexHeaderBytes;
    for (std::size_t i = 0; i < idx.n; ++i) {
        for (std::size_t r = 0; r < idx.L; ++r) {
            const auto id = detail::read_le<std::int32_t>(p);
            p += 4;
            if (id < 0 || static_cast<std::uint64_t>(id) >= h.n)
                throw FormatError(path + ": row id out of range in column " + std::to_string(i));
            idx.ids[i * idx.L + r] = static_cast<Index>(id);
        }
        std::memcpy(idx.values.data() + i * idx.L, p, idx.L * sizeof(Real));
        p += idx.L * sizeof(Real);
    }
    return idx;
}

}  // namespace ddiff
