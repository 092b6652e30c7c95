// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forgebench/common.hpp"
#include "forgebench/tensor.hpp"

namespace forgebench {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Strict-schema JSON object reader. Unknown keys are schema errors; every
// diagnostic names the offending document path.

class ObjReader {
public:
    ObjReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) raise(ErrorKind::Schema, "expected an object", path_);
    }

    const std::string& path() const { return path_; }

    /// Document-path join: "" + "name" -> "name", "calls[0]" + "inputs" -> "calls[0].inputs".
    static std::string join(const std::string& base, const std::string& key) {
        return base.empty() ? key : base + "." + key;
    }

    std::string sub(const std::string& key) const { return join(path_, key); }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) raise(ErrorKind::Schema, "missing required field", sub(key));
        return j_.at(key);
    }

    const json* raw_opt(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string id(const std::string& key) {
        std::string v = get<std::string>(key);
        if (!is_identifier(v))
            raise(ErrorKind::Schema, "\"" + v + "\" is not a valid identifier", sub(key));
        return v;
    }

    template <typename T>
    T get(const std::string& key) {
        return convert<T>(raw(key), sub(key));
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        const json* p = raw_opt(key);
        return p ? convert<T>(*p, sub(key)) : fallback;
    }

    std::int64_t positive(const std::string& key) {
        auto v = get<std::int64_t>(key);
        if (v < 1) raise(ErrorKind::Schema, "must be >= 1", sub(key));
        return v;
    }

    std::int64_t positive_or(const std::string& key, std::int64_t fallback) {
        auto v = get_or<std::int64_t>(key, fallback);
        if (v < 1) raise(ErrorKind::Schema, "must be >= 1", sub(key));
        return v;
    }

    /// Call after all fields were read; rejects anything unrecognized.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key()))
                raise(ErrorKind::Schema, "unknown field", sub(it.key()));
        }
    }

    template <typename T>
    static T convert(const json& v, const std::string& path) {
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            raise(ErrorKind::Schema, "wrong value type", path);
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Data types of generated designs

struct DataType {
    enum class Kind { Float32, Fixed, Opaque };

    Kind kind = Kind::Float32;
    int total_bits = 0;  // fixed only
    int int_bits = 0;    // fixed only
    std::string type_string;  // opaque only, passed through verbatim

    static DataType float32() { return DataType{}; }

    static DataType fixed(int total, int integer) {
        if (!(1 <= integer && integer <= total && total <= 64))
            raise(ErrorKind::Schema, "fixed type requires 1 <= int_bits <= total_bits <= 64");
        DataType d;
        d.kind = Kind::Fixed;
        d.total_bits = total;
        d.int_bits = integer;
        return d;
    }

    static DataType opaque(std::string s) {
        DataType d;
        d.kind = Kind::Opaque;
        d.type_string = std::move(s);
        return d;
    }

    bool oracle_checkable() const { return kind != Kind::Opaque; }

    int frac_bits() const { return total_bits - int_bits; }

    /// Quantization step of the fixed format; 0 for float32.
    double quant_step() const {
        return kind == Kind::Fixed ? std::ldexp(1.0, -frac_bits()) : 0.0;
    }

    /// Type spelling in emitted source.
    std::string cpp_name() const {
        switch (kind) {
            case Kind::Float32: return "float";
            case Kind::Fixed:
                return "ap_fixed<" + std::to_string(total_bits) + ", " + std::to_string(int_bits) + ">";
            case Kind::Opaque: return type_string;
        }
        return "float";
    }

    bool operator==(const DataType& o) const {
        return kind == o.kind && total_bits == o.total_bits && int_bits == o.int_bits &&
               type_string == o.type_string;
    }

    json to_json() const {
        switch (kind) {
            case Kind::Float32: return "float32";
            case Kind::Fixed:
                return "fixed(" + std::to_string(total_bits) + "," + std::to_string(int_bits) + ")";
            case Kind::Opaque: return json{{"kind", "opaque"}, {"type", type_string}};
        }
        return "float32";
    }

    static DataType from_json(const json& j, const std::string& path) {
        if (j.is_string()) {
            std::string s = j.get<std::string>();
            if (s == "float32") return float32();
            int t = 0, i = 0;
            if (std::sscanf(s.c_str(), "fixed(%d,%d)", &t, &i) == 2) {
                try {
                    return fixed(t, i);
                } catch (const Error& e) {
                    raise(ErrorKind::Schema, e.what(), path);
                }
            }
            raise(ErrorKind::Schema, "unknown data type \"" + s + "\"", path);
        }
        if (j.is_object()) {
            ObjReader r(j, path);
            std::string kind = r.get<std::string>("kind");
            if (kind == "opaque") {
                auto d = opaque(r.get<std::string>("type"));
                r.finish();
                return d;
            }
            raise(ErrorKind::Schema, "unknown data type kind \"" + kind + "\"", path);
        }
        raise(ErrorKind::Schema, "data type must be a string or object", path);
    }
};

// ---------------------------------------------------------------------------
// Kernel parameter records

enum class KernelKind {
    Dot, Matvec, Gemm, Chain,
    Conv,
    Attention,
    Norm,
    Activation,
    Pool,
    Dropout,
    Add, Mul,
    Load, Store,
};

inline const std::vector<std::pair<KernelKind, const char*>>& kernel_kind_tags() {
    static const std::vector<std::pair<KernelKind, const char*>> tags = {
        {KernelKind::Dot, "dot"},           {KernelKind::Matvec, "matvec"},
        {KernelKind::Gemm, "gemm"},         {KernelKind::Chain, "chain"},
        {KernelKind::Conv, "conv"},         {KernelKind::Attention, "attention"},
        {KernelKind::Norm, "norm"},         {KernelKind::Activation, "activation"},
        {KernelKind::Pool, "pool"},         {KernelKind::Dropout, "dropout"},
        {KernelKind::Add, "add"},           {KernelKind::Mul, "mul"},
        {KernelKind::Load, "load"},         {KernelKind::Store, "store"},
    };
    return tags;
}

inline std::string kernel_kind_tag(KernelKind k) {
    for (auto& [kind, tag] : kernel_kind_tags())
        if (kind == k) return tag;
    return "?";
}

inline KernelKind kernel_kind_from_tag(const std::string& tag, const std::string& path) {
    for (auto& [kind, t] : kernel_kind_tags())
        if (tag == t) return kind;
    raise(ErrorKind::Schema, "unknown kernel \"" + tag + "\"", path);
}

/// The four supported parenthesizations of x*A*B*y.
enum class AssocOrder { LeftChain = 0, PairSplit = 1, MatrixFirst = 2, RightChain = 3 };

inline const char* assoc_order_tag(AssocOrder a) {
    switch (a) {
        case AssocOrder::LeftChain: return "((xA)B)y";
        case AssocOrder::PairSplit: return "(xA)(By)";
        case AssocOrder::MatrixFirst: return "x((AB)y)";
        case AssocOrder::RightChain: return "x(A(By))";
    }
    return "?";
}

inline AssocOrder assoc_order_from_tag(const std::string& s, const std::string& path) {
    for (int i = 0; i < 4; ++i)
        if (s == assoc_order_tag(static_cast<AssocOrder>(i))) return static_cast<AssocOrder>(i);
    raise(ErrorKind::Schema, "unknown computation order \"" + s + "\"", path);
}

inline void check_loop_order(const std::string& s, const std::string& path) {
    std::string t = s;
    std::sort(t.begin(), t.end());
    if (t != "ijk")
        raise(ErrorKind::Schema, "loop_order must be a permutation of \"ijk\"", path);
}

/// dot / matvec / gemm / chain. m, k, n follow A(m x k) * B(k x n); dot and
/// matvec fix m = 1 (dot additionally n = 1 with k the vector length).
/// loop_order, unroll, inline_mul and assoc_order only steer code emission;
/// the golden model ignores them.
struct LinearSpec {
    enum class Variant { Dot, Matvec, Gemm, Chain };

    Variant variant = Variant::Gemm;
    std::int64_t m = 1, k = 1, n = 1;
    bool bias = false;
    std::string loop_order = "ijk";
    std::array<std::int64_t, 3> unroll = {1, 1, 1};
    bool inline_mul = false;
    AssocOrder assoc_order = AssocOrder::LeftChain;  // chain only

    bool operator==(const LinearSpec&) const = default;
};

struct ConvSpec {
    std::int64_t in_ch = 1, out_ch = 1, h = 1, w = 1;
    std::int64_t kernel = 1, stride = 1, padding = 0, groups = 1;
    bool bias = false;
    std::int64_t unroll_in = 1, unroll_out = 1;

    std::int64_t out_h() const { return (h + 2 * padding - kernel) / stride + 1; }
    std::int64_t out_w() const { return (w + 2 * padding - kernel) / stride + 1; }

    bool operator==(const ConvSpec&) const = default;
};

struct AttnSpec {
    std::int64_t seq_len = 1, hidden = 1;
    std::int64_t heads = 1;
    std::int64_t kv_groups = 1;  // number of shared key/value head sets
    std::optional<std::int64_t> window;  // causal sliding window length
    bool with_rope = false;

    std::int64_t head_dim() const { return hidden / heads; }
    std::int64_t kv_width() const { return kv_groups * head_dim(); }

    bool operator==(const AttnSpec&) const = default;
};

enum class NormKind { BatchNorm, LayerNorm, RmsNorm };

inline const char* norm_kind_tag(NormKind k) {
    switch (k) {
        case NormKind::BatchNorm: return "batchnorm";
        case NormKind::LayerNorm: return "layernorm";
        case NormKind::RmsNorm: return "rmsnorm";
    }
    return "?";
}

struct NormSpec {
    NormKind kind = NormKind::LayerNorm;
    double epsilon = 1e-5;
    bool affine = true;

    bool operator==(const NormSpec&) const = default;
};

enum class ActKind {
    Relu, Relu6, Sigmoid, Tanh, Elu, Silu, Gelu, HardSigmoid, HardSwish, Softmax, Exp,
};

inline const std::vector<std::pair<ActKind, const char*>>& act_kind_tags() {
    static const std::vector<std::pair<ActKind, const char*>> tags = {
        {ActKind::Relu, "relu"}, {ActKind::Relu6, "relu6"},
        {ActKind::Sigmoid, "sigmoid"}, {ActKind::Tanh, "tanh"},
        {ActKind::Elu, "elu"}, {ActKind::Silu, "silu"},
        {ActKind::Gelu, "gelu"}, {ActKind::HardSigmoid, "hard_sigmoid"},
        {ActKind::HardSwish, "hard_swish"}, {ActKind::Softmax, "softmax"},
        {ActKind::Exp, "exp"},
    };
    return tags;
}

inline std::string act_kind_tag(ActKind k) {
    for (auto& [kind, tag] : act_kind_tags())
        if (kind == k) return tag;
    return "?";
}

inline ActKind act_kind_from_tag(const std::string& tag, const std::string& path) {
    for (auto& [kind, t] : act_kind_tags())
        if (tag == t) return kind;
    raise(ErrorKind::Schema, "unknown activation \"" + tag + "\"", path);
}

struct ActSpec {
    ActKind kind = ActKind::Relu;
    bool operator==(const ActSpec&) const = default;
};

enum class PoolKind { Max, Avg };

struct PoolSpec {
    PoolKind kind = PoolKind::Max;
    std::int64_t kernel = 1, stride = 1;
    bool operator==(const PoolSpec&) const = default;
};

struct DropoutSpec {
    double p = 0.5;
    std::uint64_t seed = 0;
    bool operator==(const DropoutSpec&) const = default;
};

enum class ElemwiseKind { Add, Mul };

struct ElemwiseSpec {
    ElemwiseKind kind = ElemwiseKind::Add;
    bool operator==(const ElemwiseSpec&) const = default;
};

enum class MoveDir { Load, Store };

/// Copies a `shape` box from the source buffer (at src_offset) into the
/// destination buffer (at dst_offset); the rest of the destination is kept.
struct MoveSpec {
    MoveDir direction = MoveDir::Load;
    std::vector<std::int64_t> shape;
    std::vector<std::int64_t> src_offset;  // defaults to zeros
    std::vector<std::int64_t> dst_offset;

    bool operator==(const MoveSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Tagged operator record: the unit both the oracle and the emitter consume.

struct OperatorSpec {
    using Payload = std::variant<LinearSpec, ConvSpec, AttnSpec, NormSpec, ActSpec, PoolSpec,
                                 DropoutSpec, ElemwiseSpec, MoveSpec>;

    KernelKind kind = KernelKind::Gemm;
    Payload payload = LinearSpec{};

    template <typename T>
    const T& as() const {
        return std::get<T>(payload);
    }

    bool operator==(const OperatorSpec&) const = default;
};

inline json operator_spec_params_json(const OperatorSpec& spec);

/// Canonical serialized form; drives dedup and generated symbol hashes.
inline std::string operator_spec_canonical(const OperatorSpec& spec) {
    json j{{"kernel", kernel_kind_tag(spec.kind)}, {"params", operator_spec_params_json(spec)}};
    return j.dump();
}

inline std::string operator_spec_hash8(const OperatorSpec& spec) {
    return hash8(operator_spec_canonical(spec));
}

// --- params serialization ---------------------------------------------------

inline json operator_spec_params_json(const OperatorSpec& spec) {
    json p = json::object();
    switch (spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
        case KernelKind::Chain: {
            const auto& s = spec.as<LinearSpec>();
            if (spec.kind == KernelKind::Gemm || spec.kind == KernelKind::Chain) p["m"] = s.m;
            p["k"] = s.k;
            if (spec.kind != KernelKind::Dot) p["n"] = s.n;
            p["bias"] = s.bias;
            p["loop_order"] = s.loop_order;
            p["unroll"] = s.unroll;
            p["inline_mul"] = s.inline_mul;
            if (spec.kind == KernelKind::Chain) p["assoc_order"] = assoc_order_tag(s.assoc_order);
            break;
        }
        case KernelKind::Conv: {
            const auto& s = spec.as<ConvSpec>();
            p = json{{"in_ch", s.in_ch}, {"out_ch", s.out_ch}, {"h", s.h}, {"w", s.w},
                     {"kernel", s.kernel}, {"stride", s.stride}, {"padding", s.padding},
                     {"groups", s.groups}, {"bias", s.bias},
                     {"unroll", json::array({s.unroll_in, s.unroll_out})}};
            break;
        }
        case KernelKind::Attention: {
            const auto& s = spec.as<AttnSpec>();
            p = json{{"seq_len", s.seq_len}, {"hidden", s.hidden}, {"heads", s.heads},
                     {"kv_groups", s.kv_groups}, {"rope", s.with_rope}};
            if (s.window) p["window"] = *s.window;
            break;
        }
        case KernelKind::Norm: {
            const auto& s = spec.as<NormSpec>();
            p = json{{"kind", norm_kind_tag(s.kind)}, {"epsilon", s.epsilon}, {"affine", s.affine}};
            break;
        }
        case KernelKind::Activation:
            p = json{{"kind", act_kind_tag(spec.as<ActSpec>().kind)}};
            break;
        case KernelKind::Pool: {
            const auto& s = spec.as<PoolSpec>();
            p = json{{"kind", s.kind == PoolKind::Max ? "max" : "avg"},
                     {"kernel", s.kernel}, {"stride", s.stride}};
            break;
        }
        case KernelKind::Dropout: {
            const auto& s = spec.as<DropoutSpec>();
            p = json{{"p", s.p}, {"seed", s.seed}};
            break;
        }
        case KernelKind::Add:
        case KernelKind::Mul:
            p = json::object();
            break;
        case KernelKind::Load:
        case KernelKind::Store: {
            const auto& s = spec.as<MoveSpec>();
            p = json{{"shape", s.shape}, {"src_offset", s.src_offset}, {"dst_offset", s.dst_offset}};
            break;
        }
    }
    return p;
}

// --- params parsing ---------------------------------------------------------

inline OperatorSpec parse_operator_spec(KernelKind kind, const json& params,
                                        const std::string& path) {
    ObjReader r(params, path);
    OperatorSpec spec;
    spec.kind = kind;
    switch (kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
        case KernelKind::Chain: {
            LinearSpec s;
            s.variant = kind == KernelKind::Dot      ? LinearSpec::Variant::Dot
                        : kind == KernelKind::Matvec ? LinearSpec::Variant::Matvec
                        : kind == KernelKind::Gemm   ? LinearSpec::Variant::Gemm
                                                     : LinearSpec::Variant::Chain;
            s.m = (kind == KernelKind::Gemm || kind == KernelKind::Chain) ? r.positive("m") : 1;
            s.k = r.positive("k");
            s.n = kind == KernelKind::Dot ? 1 : r.positive("n");
            s.bias = r.get_or<bool>("bias", false);
            s.loop_order = r.get_or<std::string>("loop_order", "ijk");
            check_loop_order(s.loop_order, path + ".loop_order");
            if (const json* u = r.raw_opt("unroll")) {
                auto v = ObjReader::convert<std::vector<std::int64_t>>(*u, path + ".unroll");
                if (v.size() != 3) raise(ErrorKind::Schema, "unroll needs 3 factors", path + ".unroll");
                for (auto f : v)
                    if (f < 1) raise(ErrorKind::Schema, "unroll factors must be >= 1", path + ".unroll");
                std::copy(v.begin(), v.end(), s.unroll.begin());
            }
            s.inline_mul = r.get_or<bool>("inline_mul", false);
            if (kind == KernelKind::Chain) {
                s.assoc_order = assoc_order_from_tag(
                    r.get_or<std::string>("assoc_order", assoc_order_tag(AssocOrder::LeftChain)),
                    path + ".assoc_order");
            }
            spec.payload = s;
            break;
        }
        case KernelKind::Conv: {
            ConvSpec s;
            s.in_ch = r.positive("in_ch");
            s.out_ch = r.positive("out_ch");
            s.h = r.positive("h");
            s.w = r.positive("w");
            s.kernel = r.positive("kernel");
            s.stride = r.positive_or("stride", 1);
            s.padding = r.get_or<std::int64_t>("padding", 0);
            if (s.padding < 0) raise(ErrorKind::Schema, "padding must be >= 0", path + ".padding");
            s.groups = r.positive_or("groups", 1);
            s.bias = r.get_or<bool>("bias", false);
            if (const json* u = r.raw_opt("unroll")) {
                auto v = ObjReader::convert<std::vector<std::int64_t>>(*u, path + ".unroll");
                if (v.size() != 2) raise(ErrorKind::Schema, "unroll needs 2 factors", path + ".unroll");
                if (v[0] < 1 || v[1] < 1)
                    raise(ErrorKind::Schema, "unroll factors must be >= 1", path + ".unroll");
                s.unroll_in = v[0];
                s.unroll_out = v[1];
            }
            if (s.out_h() < 1 || s.out_w() < 1)
                raise(ErrorKind::Schema, "output spatial dims must be >= 1", path);
            spec.payload = s;
            break;
        }
        case KernelKind::Attention: {
            AttnSpec s;
            s.seq_len = r.positive("seq_len");
            s.hidden = r.positive("hidden");
            s.heads = r.positive("heads");
            s.kv_groups = r.positive_or("kv_groups", s.heads);
            if (const json* w = r.raw_opt("window")) {
                auto v = ObjReader::convert<std::int64_t>(*w, path + ".window");
                if (v < 1) raise(ErrorKind::Schema, "window must be >= 1", path + ".window");
                s.window = v;
            }
            s.with_rope = r.get_or<bool>("rope", false);
            spec.payload = s;
            break;
        }
        case KernelKind::Norm: {
            NormSpec s;
            std::string k = r.get<std::string>("kind");
            if (k == "batchnorm") s.kind = NormKind::BatchNorm;
            else if (k == "layernorm") s.kind = NormKind::LayerNorm;
            else if (k == "rmsnorm") s.kind = NormKind::RmsNorm;
            else raise(ErrorKind::Schema, "unknown norm kind \"" + k + "\"", path + ".kind");
            s.epsilon = r.get_or<double>("epsilon", 1e-5);
            if (!(s.epsilon > 0)) raise(ErrorKind::Schema, "epsilon must be > 0", path + ".epsilon");
            s.affine = r.get_or<bool>("affine", true);
            spec.payload = s;
            break;
        }
        case KernelKind::Activation: {
            ActSpec s;
            s.kind = act_kind_from_tag(r.get<std::string>("kind"), path + ".kind");
            spec.payload = s;
            break;
        }
        case KernelKind::Pool: {
            PoolSpec s;
            std::string k = r.get<std::string>("kind");
            if (k == "max") s.kind = PoolKind::Max;
            else if (k == "avg") s.kind = PoolKind::Avg;
            else raise(ErrorKind::Schema, "unknown pool kind \"" + k + "\"", path + ".kind");
            s.kernel = r.positive("kernel");
            s.stride = r.positive_or("stride", s.kernel);
            spec.payload = s;
            break;
        }
        case KernelKind::Dropout: {
            DropoutSpec s;
            s.p = r.get_or<double>("p", 0.5);
            if (!(s.p >= 0.0 && s.p < 1.0))
                raise(ErrorKind::Schema, "p must be in [0, 1)", path + ".p");
            s.seed = r.get_or<std::uint64_t>("seed", 0);
            spec.payload = s;
            break;
        }
        case KernelKind::Add:
        case KernelKind::Mul: {
            ElemwiseSpec s;
            s.kind = kind == KernelKind::Add ? ElemwiseKind::Add : ElemwiseKind::Mul;
            spec.payload = s;
            break;
        }
        case KernelKind::Load:
        case KernelKind::Store: {
            MoveSpec s;
            s.direction = kind == KernelKind::Load ? MoveDir::Load : MoveDir::Store;
            s.shape = ObjReader::convert<std::vector<std::int64_t>>(r.raw("shape"), path + ".shape");
            if (s.shape.empty() || s.shape.size() > 4)
                raise(ErrorKind::Schema, "shape rank must be 1..4", path + ".shape");
            for (auto d : s.shape)
                if (d < 1) raise(ErrorKind::Schema, "shape dims must be >= 1", path + ".shape");
            s.src_offset = r.get_or<std::vector<std::int64_t>>(
                "src_offset", std::vector<std::int64_t>(s.shape.size(), 0));
            s.dst_offset = r.get_or<std::vector<std::int64_t>>(
                "dst_offset", std::vector<std::int64_t>(s.shape.size(), 0));
            if (s.src_offset.size() != s.shape.size() || s.dst_offset.size() != s.shape.size())
                raise(ErrorKind::Schema, "offset rank must match shape rank", path);
            for (auto v : s.src_offset)
                if (v < 0) raise(ErrorKind::Schema, "offsets must be >= 0", path + ".src_offset");
            for (auto v : s.dst_offset)
                if (v < 0) raise(ErrorKind::Schema, "offsets must be >= 0", path + ".dst_offset");
            spec.payload = s;
            break;
        }
    }
    r.finish();
    return spec;
}

// ---------------------------------------------------------------------------
// Kernel catalog: call signatures validate_design checks against.

struct KernelSignature {
    KernelKind kind;
    std::string tag;
    int base_inputs;   // without optional operands
    int outputs;
};

using KernelCatalog = std::vector<KernelSignature>;

inline const KernelCatalog& kernel_catalog() {
    static const KernelCatalog cat = [] {
        KernelCatalog c;
        for (auto& [kind, tag] : kernel_kind_tags()) {
            int base = 2;
            switch (kind) {
                case KernelKind::Dot:
                case KernelKind::Matvec:
                case KernelKind::Gemm: base = 2; break;
                case KernelKind::Chain: base = 4; break;
                case KernelKind::Conv: base = 2; break;
                case KernelKind::Attention: base = 7; break;
                case KernelKind::Norm: base = 1; break;
                case KernelKind::Activation:
                case KernelKind::Dropout:
                case KernelKind::Pool: base = 1; break;
                case KernelKind::Add:
                case KernelKind::Mul: base = 2; break;
                case KernelKind::Load:
                case KernelKind::Store: base = 1; break;
            }
            c.push_back({kind, tag, base, 1});
        }
        return c;
    }();
    return cat;
}

/// Exact input arity for a concrete spec (optional operands resolved).
inline int expected_input_count(const OperatorSpec& spec) {
    switch (spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
            return 2 + (spec.as<LinearSpec>().bias ? 1 : 0);
        case KernelKind::Chain:
            return 4 + (spec.as<LinearSpec>().bias ? 1 : 0);
        case KernelKind::Conv:
            return 2 + (spec.as<ConvSpec>().bias ? 1 : 0);
        case KernelKind::Attention:
            return 7;
        case KernelKind::Norm: {
            const auto& s = spec.as<NormSpec>();
            switch (s.kind) {
                case NormKind::BatchNorm: return s.affine ? 5 : 3;  // x,[gamma,beta],mean,var
                case NormKind::LayerNorm: return s.affine ? 3 : 1;  // x,[gamma,beta]
                case NormKind::RmsNorm: return s.affine ? 2 : 1;    // x,[gamma]
            }
            return 1;
        }
        case KernelKind::Activation:
        case KernelKind::Dropout:
        case KernelKind::Pool:
            return 1;
        case KernelKind::Add:
        case KernelKind::Mul:
            return 2;
        case KernelKind::Load:
        case KernelKind::Store:
            return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Operand shape rules. One source of truth shared by validate_design (which
// turns throws into diagnostics) and the oracle executor (which propagates).

inline void check_call_shapes(const OperatorSpec& spec, const std::vector<TensorShape>& in,
                              const std::vector<TensorShape>& out) {
    auto want = [&](bool cond, const std::string& msg) {
        if (!cond) raise(ErrorKind::Shape, msg);
    };
    int nin = expected_input_count(spec);
    if (static_cast<int>(in.size()) != nin)
        raise(ErrorKind::Arity, kernel_kind_tag(spec.kind) + " expects " + std::to_string(nin) +
                                    " inputs, got " + std::to_string(in.size()));
    if (out.size() != 1)
        raise(ErrorKind::Arity, kernel_kind_tag(spec.kind) + " expects 1 output, got " +
                                    std::to_string(out.size()));

    switch (spec.kind) {
        case KernelKind::Dot: {
            const auto& s = spec.as<LinearSpec>();
            want(in[0] == TensorShape{s.k}, "dot x must be length " + std::to_string(s.k) +
                                                ", got " + in[0].str());
            want(in[1] == TensorShape{s.k}, "dot y must be length " + std::to_string(s.k) +
                                                ", got " + in[1].str());
            if (s.bias) want(in[2] == TensorShape{1}, "dot bias must be a scalar");
            want(out[0] == TensorShape{1}, "dot output must be a scalar, got " + out[0].str());
            break;
        }
        case KernelKind::Matvec: {
            const auto& s = spec.as<LinearSpec>();
            want(in[0] == TensorShape{s.k}, "matvec x must be length " + std::to_string(s.k));
            want(in[1] == (TensorShape{s.k, s.n}), "matvec A must be " + std::to_string(s.k) + "x" +
                                                       std::to_string(s.n) + ", got " + in[1].str());
            if (s.bias) want(in[2] == TensorShape{s.n}, "matvec bias must be length " + std::to_string(s.n));
            want(out[0] == TensorShape{s.n}, "matvec output must be length " + std::to_string(s.n));
            break;
        }
        case KernelKind::Gemm: {
            const auto& s = spec.as<LinearSpec>();
            want(in[0] == (TensorShape{s.m, s.k}), "gemm A must be " + std::to_string(s.m) + "x" +
                                                       std::to_string(s.k) + ", got " + in[0].str());
            if (in[1].rank() == 2 && in[1].dims[0] != s.k)
                raise(ErrorKind::Shape, "gemm inner dimensions " + std::to_string(s.k) + "!=" +
                                            std::to_string(in[1].dims[0]));
            want(in[1] == (TensorShape{s.k, s.n}), "gemm B must be " + std::to_string(s.k) + "x" +
                                                       std::to_string(s.n) + ", got " + in[1].str());
            if (s.bias) want(in[2] == TensorShape{s.n}, "gemm bias must be length " + std::to_string(s.n));
            want(out[0] == (TensorShape{s.m, s.n}), "gemm output must be " + std::to_string(s.m) +
                                                        "x" + std::to_string(s.n));
            break;
        }
        case KernelKind::Chain: {
            const auto& s = spec.as<LinearSpec>();
            want(in[0] == TensorShape{s.m}, "chain x must be length " + std::to_string(s.m));
            want(in[1] == (TensorShape{s.m, s.k}), "chain A must be " + std::to_string(s.m) + "x" +
                                                       std::to_string(s.k));
            want(in[2] == (TensorShape{s.k, s.n}), "chain B must be " + std::to_string(s.k) + "x" +
                                                       std::to_string(s.n));
            want(in[3] == TensorShape{s.n}, "chain y must be length " + std::to_string(s.n));
            if (s.bias) want(in[4] == TensorShape{1}, "chain bias must be a scalar");
            want(out[0] == TensorShape{1}, "chain output must be a scalar");
            break;
        }
        case KernelKind::Conv: {
            const auto& s = spec.as<ConvSpec>();
            if (s.in_ch % s.groups != 0 || s.out_ch % s.groups != 0)
                raise(ErrorKind::Group, "channels not divisible by groups (" +
                                            std::to_string(s.in_ch) + "," + std::to_string(s.out_ch) +
                                            " vs " + std::to_string(s.groups) + ")");
            want(in[0] == (TensorShape{s.in_ch, s.h, s.w}),
                 "conv input must be " + TensorShape{s.in_ch, s.h, s.w}.str() + ", got " + in[0].str());
            TensorShape wshape{s.out_ch, s.in_ch / s.groups, s.kernel, s.kernel};
            want(in[1] == wshape, "conv weights must be " + wshape.str() + ", got " + in[1].str());
            if (s.bias) want(in[2] == TensorShape{s.out_ch}, "conv bias must be length " +
                                                                 std::to_string(s.out_ch));
            TensorShape oshape{s.out_ch, s.out_h(), s.out_w()};
            want(out[0] == oshape, "conv output must be " + oshape.str() + ", got " + out[0].str());
            break;
        }
        case KernelKind::Attention: {
            const auto& s = spec.as<AttnSpec>();
            if (s.hidden % s.heads != 0)
                raise(ErrorKind::Group, "hidden " + std::to_string(s.hidden) +
                                            " not divisible by heads " + std::to_string(s.heads));
            if (s.heads % s.kv_groups != 0)
                raise(ErrorKind::Group, "heads " + std::to_string(s.heads) +
                                            " not divisible by kv_groups " + std::to_string(s.kv_groups));
            if (s.with_rope && s.head_dim() % 2 != 0)
                raise(ErrorKind::Group, "head_dim must be even with rope, got " +
                                            std::to_string(s.head_dim()));
            TensorShape tok{s.seq_len, s.hidden};
            for (int i = 0; i < 3; ++i)
                want(in[i] == tok, "attention q/k/v must be " + tok.str() + ", got " + in[i].str());
            want(in[3] == (TensorShape{s.hidden, s.hidden}), "attention wq must be " +
                                                                 TensorShape{s.hidden, s.hidden}.str());
            TensorShape kv{s.hidden, s.kv_width()};
            want(in[4] == kv, "attention wk must be " + kv.str() + ", got " + in[4].str());
            want(in[5] == kv, "attention wv must be " + kv.str() + ", got " + in[5].str());
            want(in[6] == (TensorShape{s.hidden, s.hidden}), "attention wo must be " +
                                                                 TensorShape{s.hidden, s.hidden}.str());
            want(out[0] == tok, "attention output must be " + tok.str());
            break;
        }
        case KernelKind::Norm: {
            const auto& s = spec.as<NormSpec>();
            const TensorShape& x = in[0];
            std::int64_t feat = s.kind == NormKind::BatchNorm ? x.dims[0] : x.dims.back();
            TensorShape fshape{feat};
            std::size_t at = 1;
            if (s.affine) {
                want(in[at] == fshape, "norm gamma must be length " + std::to_string(feat));
                ++at;
                if (s.kind != NormKind::RmsNorm) {
                    want(in[at] == fshape, "norm beta must be length " + std::to_string(feat));
                    ++at;
                }
            }
            if (s.kind == NormKind::BatchNorm) {
                want(in[at] == fshape, "batchnorm mean must be length " + std::to_string(feat));
                want(in[at + 1] == fshape, "batchnorm var must be length " + std::to_string(feat));
            }
            want(out[0] == x, "norm output must match input shape " + x.str());
            break;
        }
        case KernelKind::Activation:
        case KernelKind::Dropout:
            want(out[0] == in[0], "output must match input shape " + in[0].str());
            break;
        case KernelKind::Pool: {
            const auto& s = spec.as<PoolSpec>();
            want(in[0].rank() == 3, "pool input must be rank 3 (channels, h, w)");
            std::int64_t oh = (in[0].dims[1] - s.kernel) / s.stride + 1;
            std::int64_t ow = (in[0].dims[2] - s.kernel) / s.stride + 1;
            if (oh < 1 || ow < 1)
                raise(ErrorKind::Shape, "pool window does not fit input " + in[0].str());
            TensorShape oshape{in[0].dims[0], oh, ow};
            want(out[0] == oshape, "pool output must be " + oshape.str() + ", got " + out[0].str());
            break;
        }
        case KernelKind::Add:
        case KernelKind::Mul:
            want(in[0] == in[1], "elementwise operands must have equal shapes, got " +
                                     in[0].str() + " vs " + in[1].str());
            want(out[0] == in[0], "elementwise output must match operand shape");
            break;
        case KernelKind::Load:
        case KernelKind::Store: {
            const auto& s = spec.as<MoveSpec>();
            check_region(in[0], Region{s.src_offset, s.shape}, "move src");
            check_region(out[0], Region{s.dst_offset, s.shape}, "move dst");
            break;
        }
    }
}

}  // namespace forgebench
