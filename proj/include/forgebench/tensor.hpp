// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgebench/common.hpp"

namespace forgebench {

/// Dense row-major shape, rank 1-4, all dims >= 1.
struct TensorShape {
    std::vector<std::int64_t> dims;

    TensorShape() = default;
    TensorShape(std::initializer_list<std::int64_t> d) : dims(d) { check(); }
    explicit TensorShape(std::vector<std::int64_t> d) : dims(std::move(d)) { check(); }

    void check() const {
        if (dims.empty() || dims.size() > 4)
            raise(ErrorKind::Shape, "rank must be 1..4, got " + std::to_string(dims.size()));
        for (auto d : dims)
            if (d < 1) raise(ErrorKind::Shape, "dims must be >= 1");
    }

    int rank() const { return static_cast<int>(dims.size()); }

    std::int64_t element_count() const {
        std::int64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }

    bool operator==(const TensorShape& o) const { return dims == o.dims; }
    bool operator!=(const TensorShape& o) const { return !(*this == o); }

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(dims[i]);
        }
        return s + ")";
    }
};

/// Row-major dense value holder of the golden model. Always float64; the target
/// DataType only affects generated source and comparison tolerances.
struct Tensor {
    TensorShape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(TensorShape s) : shape(std::move(s)), data(shape.element_count(), 0.0) {}
    Tensor(TensorShape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != shape.element_count())
            raise(ErrorKind::Shape, "data length " + std::to_string(data.size()) +
                                        " != element count for shape " + shape.str());
    }

    static Tensor zeros(TensorShape s) { return Tensor(std::move(s)); }

    static Tensor full(TensorShape s, double v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    std::int64_t size() const { return shape.element_count(); }

    std::int64_t flat_index(const std::vector<std::int64_t>& idx) const {
        std::int64_t f = 0;
        for (int a = 0; a < shape.rank(); ++a) f = f * shape.dims[a] + idx[a];
        return f;
    }

    double at(const std::vector<std::int64_t>& idx) const { return data[flat_index(idx)]; }
    double& at(const std::vector<std::int64_t>& idx) { return data[flat_index(idx)]; }

    bool operator==(const Tensor& o) const { return shape == o.shape && data == o.data; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Axis-aligned region of a tensor, used by load/store data movers.
struct Region {
    std::vector<std::int64_t> offset;
    std::vector<std::int64_t> shape;
};

inline void check_region(const TensorShape& bounds, const Region& r, const char* who) {
    if (r.offset.size() != bounds.dims.size() || r.shape.size() != bounds.dims.size())
        raise(ErrorKind::Bounds, std::string(who) + ": region rank != tensor rank");
    for (std::size_t a = 0; a < bounds.dims.size(); ++a) {
        if (r.offset[a] < 0 || r.shape[a] < 1 || r.offset[a] + r.shape[a] > bounds.dims[a])
            raise(ErrorKind::Bounds, std::string(who) + ": region " + std::to_string(r.offset[a]) +
                                         "+" + std::to_string(r.shape[a]) +
                                         " exceeds dim " + std::to_string(bounds.dims[a]) +
                                         " (axis " + std::to_string(a) + ")");
    }
}

/// Copies a box from src (at src_off) into dst (at dst_off). Both boxes must be
/// in bounds; ranks must agree with their tensors.
inline void copy_region(const Tensor& src, const std::vector<std::int64_t>& src_off,
                        Tensor& dst, const std::vector<std::int64_t>& dst_off,
                        const std::vector<std::int64_t>& box) {
    check_region(src.shape, Region{src_off, box}, "copy_region src");
    check_region(dst.shape, Region{dst_off, box}, "copy_region dst");
    const int rank = static_cast<int>(box.size());
    std::vector<std::int64_t> idx(rank, 0);
    std::vector<std::int64_t> si(rank), di(rank);
    for (;;) {
        for (int a = 0; a < rank; ++a) {
            si[a] = src_off[a] + idx[a];
            di[a] = dst_off[a] + idx[a];
        }
        dst.at(di) = src.at(si);
        int a = rank - 1;
        while (a >= 0 && ++idx[a] == box[a]) idx[a--] = 0;
        if (a < 0) break;
    }
}

// ---------------------------------------------------------------------------
// Serialization: JSON with shape header, and the FBT1 binary blob.

inline nlohmann::json tensor_to_json(const Tensor& t) {
    return nlohmann::json{{"shape", t.shape.dims}, {"data", t.data}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("shape") || !j.contains("data"))
        raise(ErrorKind::Schema, "tensor document needs \"shape\" and \"data\"");
    TensorShape s(j.at("shape").get<std::vector<std::int64_t>>());
    return Tensor(s, j.at("data").get<std::vector<double>>());
}

/// Binary format: magic "FBT1", u32 rank, u32 dims[rank], float64 payload,
/// everything little-endian.
inline std::string tensor_to_blob(const Tensor& t) {
    std::string out = "FBT1";
    auto put_u32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    put_u32(static_cast<std::uint32_t>(t.shape.rank()));
    for (auto d : t.shape.dims) put_u32(static_cast<std::uint32_t>(d));
    for (double v : t.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
    return out;
}

inline Tensor tensor_from_blob(const std::string& blob) {
    auto need = [&blob](std::size_t at, std::size_t n) {
        if (at + n > blob.size()) raise(ErrorKind::Format, "truncated FBT1 blob");
    };
    need(0, 4);
    if (blob.compare(0, 4, "FBT1") != 0) raise(ErrorKind::Format, "bad FBT1 magic");
    std::size_t pos = 4;
    auto get_u32 = [&]() {
        need(pos, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(blob[pos++])) << (8 * i);
        return v;
    };
    std::uint32_t rank = get_u32();
    if (rank < 1 || rank > 4) raise(ErrorKind::Format, "FBT1 rank out of range");
    std::vector<std::int64_t> dims;
    for (std::uint32_t a = 0; a < rank; ++a) dims.push_back(get_u32());
    TensorShape shape(dims);
    std::vector<double> data;
    data.reserve(shape.element_count());
    for (std::int64_t i = 0; i < shape.element_count(); ++i) {
        need(pos, 8);
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= std::uint64_t(static_cast<unsigned char>(blob[pos++])) << (8 * b);
        double v;
        std::memcpy(&v, &bits, 8);
        data.push_back(v);
    }
    return Tensor(shape, std::move(data));
}

}  // namespace forgebench
