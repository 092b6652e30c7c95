// SPDX-License-Identifier: Apache-2.0
//
// Cartesian sweep enumeration: expand an axis grid over one of three design
// families (x*A*B*y chains, conv/batchnorm/activation blocks, attention
// blocks) into concrete, validated design configs with stable names, and
// write suites to disk with a hashed manifest.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forgebench/config.hpp"
#include "forgebench/opspec.hpp"

namespace forgebench {

// ---------------------------------------------------------------------------
// Sweep specs

struct SweepAxis {
    std::string name;
    std::vector<json> values;

    bool operator==(const SweepAxis&) const = default;
};

struct SweepSpec {
    std::string family;  // gemm_chain | dnn_block | llm_block
    std::vector<SweepAxis> axes;

    std::int64_t total() const {
        std::int64_t n = 1;
        for (auto& a : axes) n *= static_cast<std::int64_t>(a.values.size());
        return n;
    }

    bool operator==(const SweepSpec&) const = default;
};

namespace swdetail {

[[noreturn]] inline void bad_axis(const std::string& axis, const json& value,
                                  const std::string& why) {
    raise(ErrorKind::InvalidAxisValue,
          "axis \"" + axis + "\" value " + value.dump() + ": " + why);
}

/// One grid point: axis name -> value, with family defaults for axes the
/// spec leaves out.
class Assignment {
public:
    Assignment(const SweepSpec& spec, const std::vector<std::size_t>& idx) {
        for (std::size_t a = 0; a < spec.axes.size(); ++a)
            values_[spec.axes[a].name] = &spec.axes[a].values[idx[a]];
    }

    const json* find(const std::string& axis) const {
        auto it = values_.find(axis);
        return it == values_.end() ? nullptr : it->second;
    }

    json get(const std::string& axis, json fallback) const {
        const json* v = find(axis);
        return v ? *v : std::move(fallback);
    }

    std::int64_t dim(const std::string& axis, std::int64_t fallback) const {
        const json* v = find(axis);
        if (!v) return fallback;
        if (!v->is_number_integer() || v->get<std::int64_t>() < 1)
            bad_axis(axis, *v, "must be a positive integer");
        return v->get<std::int64_t>();
    }

    std::vector<std::int64_t> dims(const std::string& axis, std::vector<std::int64_t> fallback,
                                   std::size_t arity) const {
        const json* v = find(axis);
        if (!v) return fallback;
        if (!v->is_array() || v->size() != arity)
            bad_axis(axis, *v, "must be an array of " + std::to_string(arity) + " dims");
        std::vector<std::int64_t> out;
        for (auto& e : *v) {
            if (!e.is_number_integer() || e.get<std::int64_t>() < 1)
                bad_axis(axis, *v, "dims must be positive integers");
            out.push_back(e.get<std::int64_t>());
        }
        return out;
    }

    bool flag(const std::string& axis, bool fallback) const {
        const json* v = find(axis);
        if (!v) return fallback;
        if (!v->is_boolean()) bad_axis(axis, *v, "must be a boolean");
        return v->get<bool>();
    }

    std::string tag(const std::string& axis, std::string fallback) const {
        const json* v = find(axis);
        if (!v) return std::move(fallback);
        if (!v->is_string()) bad_axis(axis, *v, "must be a string");
        return v->get<std::string>();
    }

    double number(const std::string& axis, double fallback) const {
        const json* v = find(axis);
        if (!v) return fallback;
        if (!v->is_number()) bad_axis(axis, *v, "must be a number");
        return v->get<double>();
    }

    const std::map<std::string, const json*>& all() const { return values_; }

private:
    std::map<std::string, const json*> values_;
};

inline void check_known_axes(const Assignment& as, const std::string& family,
                             std::initializer_list<const char*> known) {
    for (auto& [name, value] : as.all()) {
        bool ok = false;
        for (auto* k : known) ok = ok || name == k;
        if (!ok)
            raise(ErrorKind::InvalidAxisValue,
                  "axis \"" + name + "\" is not an axis of family \"" + family + "\"");
    }
}

inline InterfaceDecl iface(std::string name, Direction dir, TensorShape shape) {
    InterfaceDecl d;
    d.name = std::move(name);
    d.direction = dir;
    d.shape = std::move(shape);
    return d;
}

inline MemoryDecl scratch(std::string name, TensorShape shape) {
    MemoryDecl m;
    m.name = std::move(name);
    m.space = MemSpace::OnChip;
    m.shape = std::move(shape);
    return m;
}

// --- family builders -------------------------------------------------------

/// x*A*B*y chain: the vector/matrix multiply ladder with every scheduling
/// knob on an axis.
inline DesignConfig build_gemm_chain(const std::string& name, const Assignment& as) {
    check_known_axes(as, "gemm_chain", {"dims", "loop_order", "unroll", "assoc_order"});
    const auto d = as.dims("dims", {8, 8, 8}, 3);
    const auto u = as.dims("unroll", {1, 1, 1}, 3);

    LinearSpec s;
    s.variant = LinearSpec::Variant::Chain;
    s.m = d[0];
    s.k = d[1];
    s.n = d[2];
    s.loop_order = as.tag("loop_order", "ijk");
    try {
        check_loop_order(s.loop_order, "");
    } catch (const Error&) {
        bad_axis("loop_order", json(s.loop_order), "must be a permutation of i, j, k");
    }
    std::copy(u.begin(), u.end(), s.unroll.begin());
    const std::string assoc = as.tag("assoc_order", assoc_order_tag(AssocOrder::LeftChain));
    try {
        s.assoc_order = assoc_order_from_tag(assoc, "");
    } catch (const Error&) {
        bad_axis("assoc_order", json(assoc), "must be one of the four parenthesizations");
    }

    DesignConfig cfg;
    cfg.name = name;
    cfg.synth.top_name = name;
    cfg.interfaces = {
        iface("x", Direction::In, TensorShape{{s.m}}),
        iface("A", Direction::In, TensorShape{{s.m, s.k}}),
        iface("B", Direction::In, TensorShape{{s.k, s.n}}),
        iface("y", Direction::In, TensorShape{{s.n}}),
        iface("r", Direction::Out, TensorShape{{1}}),
    };
    cfg.calls = {ModuleCall{OperatorSpec{KernelKind::Chain, s}, {"x", "A", "B", "y"}, {"r"}}};
    return cfg;
}

/// Convolution followed by batchnorm and a configurable activation.
inline DesignConfig build_dnn_block(const std::string& name, const Assignment& as) {
    check_known_axes(as, "dnn_block",
                     {"kernel", "fmap", "grouped", "bias", "activation", "unroll"});
    const auto fmap = as.dims("fmap", {8, 8, 8, 8}, 4);
    const auto u = as.dims("unroll", {1, 1}, 2);

    ConvSpec conv;
    conv.in_ch = fmap[0];
    conv.out_ch = fmap[1];
    conv.h = fmap[2];
    conv.w = fmap[3];
    conv.kernel = as.dim("kernel", 3);
    conv.padding = conv.kernel / 2;
    conv.groups = as.flag("grouped", false) ? 2 : 1;
    conv.bias = as.flag("bias", false);
    conv.unroll_in = u[0];
    conv.unroll_out = u[1];
    if (conv.in_ch % conv.groups != 0 || conv.out_ch % conv.groups != 0)
        bad_axis("grouped", json(true),
                 "fmap channels (" + std::to_string(conv.in_ch) + ", " +
                     std::to_string(conv.out_ch) + ") are not divisible into 2 groups");
    if (conv.out_h() < 1 || conv.out_w() < 1)
        bad_axis("kernel", json(conv.kernel), "window does not fit the feature map");

    const std::string act = as.tag("activation", "relu");
    ActSpec activation;
    try {
        activation.kind = act_kind_from_tag(act, "");
    } catch (const Error&) {
        bad_axis("activation", json(act), "unknown activation function");
    }

    NormSpec bn;
    bn.kind = NormKind::BatchNorm;

    const std::int64_t oh = conv.out_h(), ow = conv.out_w(), oc = conv.out_ch;
    DesignConfig cfg;
    cfg.name = name;
    cfg.synth.top_name = name;
    cfg.interfaces = {
        iface("x", Direction::In, TensorShape{{conv.in_ch, conv.h, conv.w}}),
        iface("w", Direction::In,
              TensorShape{{oc, conv.in_ch / conv.groups, conv.kernel, conv.kernel}}),
        iface("gamma", Direction::In, TensorShape{{oc}}),
        iface("beta", Direction::In, TensorShape{{oc}}),
        iface("mean", Direction::In, TensorShape{{oc}}),
        iface("var", Direction::In, TensorShape{{oc}}),
        iface("y", Direction::Out, TensorShape{{oc, oh, ow}}),
    };
    cfg.memories = {
        scratch("t_conv", TensorShape{{oc, oh, ow}}),
        scratch("t_bn", TensorShape{{oc, oh, ow}}),
    };
    std::vector<std::string> conv_inputs = {"x", "w"};
    if (conv.bias) {
        cfg.interfaces.insert(cfg.interfaces.begin() + 2,
                              iface("b", Direction::In, TensorShape{{oc}}));
        conv_inputs.push_back("b");
    }
    cfg.calls = {
        ModuleCall{OperatorSpec{KernelKind::Conv, conv}, conv_inputs, {"t_conv"}},
        ModuleCall{OperatorSpec{KernelKind::Norm, bn},
                   {"t_conv", "gamma", "beta", "mean", "var"},
                   {"t_bn"}},
        ModuleCall{OperatorSpec{KernelKind::Activation, activation}, {"t_bn"}, {"y"}},
    };
    return cfg;
}

/// Attention followed by an optional dropout and a normalization layer. The
/// dropout-probability axis stays in the grid even when with-dropout is
/// false (the value is simply unused), keeping the product a pure Cartesian
/// count.
inline DesignConfig build_llm_block(const std::string& name, const Assignment& as) {
    check_known_axes(as, "llm_block", {"seq_len", "hidden", "heads", "kv_groups", "dropout_p",
                                       "rope", "dropout", "norm"});
    AttnSpec attn;
    attn.seq_len = as.dim("seq_len", 8);
    attn.hidden = as.dim("hidden", 32);
    attn.heads = as.dim("heads", 4);
    attn.kv_groups = as.dim("kv_groups", 1);
    attn.with_rope = as.flag("rope", false);
    if (attn.hidden % attn.heads != 0)
        bad_axis("heads", json(attn.heads),
                 "does not divide hidden=" + std::to_string(attn.hidden));
    if (attn.heads % attn.kv_groups != 0)
        bad_axis("kv_groups", json(attn.kv_groups),
                 "does not divide heads=" + std::to_string(attn.heads));
    const std::int64_t head_dim = attn.hidden / attn.heads;
    if (attn.with_rope && head_dim % 2 != 0)
        bad_axis("rope", json(true),
                 "rotary pairs need an even head dim, got " + std::to_string(head_dim));

    const bool with_dropout = as.flag("dropout", false);
    DropoutSpec drop;
    drop.p = as.number("dropout_p", 0.1);
    drop.seed = 1234;  // fixed per suite; determinism is the point
    if (with_dropout && !(drop.p >= 0.0 && drop.p < 1.0))
        bad_axis("dropout_p", json(drop.p), "must lie in [0, 1)");

    const std::string norm_tag = as.tag("norm", "layernorm");
    NormSpec norm;
    if (norm_tag == "layernorm") norm.kind = NormKind::LayerNorm;
    else if (norm_tag == "rmsnorm") norm.kind = NormKind::RmsNorm;
    else bad_axis("norm", json(norm_tag), "must be layernorm or rmsnorm");

    const std::int64_t L = attn.seq_len, H = attn.hidden;
    const std::int64_t kv = attn.kv_groups * head_dim;
    DesignConfig cfg;
    cfg.name = name;
    cfg.synth.top_name = name;
    cfg.interfaces = {
        iface("x", Direction::In, TensorShape{{L, H}}),
        iface("wq", Direction::In, TensorShape{{H, H}}),
        iface("wk", Direction::In, TensorShape{{H, kv}}),
        iface("wv", Direction::In, TensorShape{{H, kv}}),
        iface("wo", Direction::In, TensorShape{{H, H}}),
        iface("gamma", Direction::In, TensorShape{{H}}),
        iface("y", Direction::Out, TensorShape{{L, H}}),
    };
    cfg.memories = {scratch("t_attn", TensorShape{{L, H}})};

    cfg.calls = {ModuleCall{OperatorSpec{KernelKind::Attention, attn},
                            {"x", "x", "x", "wq", "wk", "wv", "wo"},
                            {"t_attn"}}};
    std::string norm_input = "t_attn";
    if (with_dropout) {
        cfg.memories.push_back(scratch("t_drop", TensorShape{{L, H}}));
        cfg.calls.push_back(ModuleCall{OperatorSpec{KernelKind::Dropout, drop},
                                       {"t_attn"},
                                       {"t_drop"}});
        norm_input = "t_drop";
    }
    std::vector<std::string> norm_inputs = {norm_input, "gamma"};
    if (norm.kind == NormKind::LayerNorm) {
        cfg.interfaces.insert(cfg.interfaces.begin() + 6,
                              iface("beta", Direction::In, TensorShape{{H}}));
        norm_inputs.push_back("beta");
    }
    cfg.calls.push_back(ModuleCall{OperatorSpec{KernelKind::Norm, norm}, norm_inputs, {"y"}});
    return cfg;
}

}  // namespace swdetail

// ---------------------------------------------------------------------------
// Expansion

/// Expands the grid in lexicographic axis order (first axis slowest, last
/// axis fastest) into named, validated configs `<family>_<index05d>`.
inline std::vector<DesignConfig> expand_grid(const SweepSpec& spec) {
    DesignConfig (*build)(const std::string&, const swdetail::Assignment&) = nullptr;
    if (spec.family == "gemm_chain") build = swdetail::build_gemm_chain;
    else if (spec.family == "dnn_block") build = swdetail::build_dnn_block;
    else if (spec.family == "llm_block") build = swdetail::build_llm_block;
    else
        raise(ErrorKind::Schema, "unknown sweep family \"" + spec.family +
                                     "\" (want gemm_chain, dnn_block, or llm_block)");

    std::set<std::string> axis_names;
    for (auto& a : spec.axes) {
        if (a.values.empty())
            raise(ErrorKind::Schema, "axis \"" + a.name + "\" has no values");
        if (!axis_names.insert(a.name).second)
            raise(ErrorKind::Schema, "axis \"" + a.name + "\" appears twice");
    }

    std::vector<DesignConfig> configs;
    configs.reserve(static_cast<std::size_t>(spec.total()));
    std::vector<std::size_t> idx(spec.axes.size(), 0);
    for (std::int64_t i = 0; i < spec.total(); ++i) {
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "_%05lld", static_cast<long long>(i));
        DesignConfig cfg = build(spec.family + suffix, swdetail::Assignment(spec, idx));
        ValidationReport report = validate_design(cfg);
        if (!report.ok())
            raise(ErrorKind::Validation, cfg.name + " failed validation: " +
                                             report.diagnostics.front().message);
        configs.push_back(std::move(cfg));

        for (std::size_t a = idx.size(); a-- > 0;) {
            if (++idx[a] < spec.axes[a].values.size()) break;
            idx[a] = 0;
        }
    }
    return configs;
}

// ---------------------------------------------------------------------------
// Built-in suites

/// The three ready-to-use suites. Axis value sets are fixed constants of
/// this library (the suite totals 1920 / 2304 / 1944 are the contract);
/// dimensions stay desk-scale so the oracle can check any member directly.
inline std::vector<SweepSpec> builtin_suites() {
    auto J = [](std::initializer_list<json> vs) { return std::vector<json>(vs); };

    SweepSpec gemm;
    gemm.family = "gemm_chain";
    gemm.axes = {
        {"dims", J({{4, 6, 2},       {2, 3, 4},    {8, 8, 8},    {16, 16, 16}, {32, 32, 32},
                    {64, 64, 64},    {8, 16, 32},  {32, 16, 8},  {16, 32, 64}, {64, 32, 16},
                    {12, 24, 48},    {48, 24, 12}, {16, 64, 16}, {64, 16, 64}, {24, 24, 24},
                    {48, 48, 48},    {96, 96, 96}, {128, 128, 128}, {32, 128, 64},
                    {128, 64, 96}})},
        {"loop_order", J({"ijk", "ikj", "jik", "jki", "kij", "kji"})},
        {"unroll", J({{1, 1, 1}, {2, 2, 1}, {2, 2, 2}, {4, 4, 4}})},
        {"assoc_order", J({"((xA)B)y", "(xA)(By)", "x((AB)y)", "x(A(By))"})},
    };

    SweepSpec dnn;
    dnn.family = "dnn_block";
    dnn.axes = {
        {"kernel", J({1, 3, 5, 7})},
        {"fmap", J({{4, 8, 16, 16},
                    {8, 8, 8, 8},
                    {8, 16, 14, 14},
                    {16, 16, 7, 7},
                    {16, 32, 8, 8},
                    {32, 32, 14, 14}})},
        {"grouped", J({false, true})},
        {"bias", J({false, true})},
        {"activation", J({"relu", "relu6", "sigmoid", "hard_sigmoid", "hard_swish", "silu"})},
        {"unroll", J({{1, 1}, {2, 1}, {2, 2}, {4, 4}})},
    };

    SweepSpec llm;
    llm.family = "llm_block";
    llm.axes = {
        {"seq_len", J({8, 16, 32})},
        {"hidden", J({32, 64, 128})},
        {"heads", J({4, 8, 16})},
        {"kv_groups", J({1, 2, 4})},
        {"dropout_p", J({0.1, 0.25, 0.5})},
        {"rope", J({false, true})},
        {"dropout", J({false, true})},
        {"norm", J({"layernorm", "rmsnorm"})},
    };

    return {gemm, dnn, llm};
}

inline SweepSpec builtin_suite(const std::string& family) {
    for (auto& s : builtin_suites())
        if (s.family == family) return s;
    raise(ErrorKind::Schema, "no builtin suite named \"" + family + "\"");
}

// ---------------------------------------------------------------------------
// Suite writing

struct SuiteManifest {
    std::string suite;
    std::int64_t count = 0;
    std::vector<std::pair<std::string, std::string>> files;  // name.json -> sha256

    json to_json() const {
        json j;
        j["suite"] = suite;
        j["count"] = count;
        j["files"] = json::array();
        for (auto& [name, sha] : files) j["files"].push_back({{"name", name}, {"sha256", sha}});
        return j;
    }
};

/// Writes one config document per design plus manifest.json. Output bytes
/// are a pure function of the configs, so re-running writes identical files.
inline SuiteManifest write_suite(const std::vector<DesignConfig>& configs,
                                 const std::filesystem::path& dir, std::string suite_id = "") {
    namespace fs = std::filesystem;
    if (suite_id.empty() && !configs.empty()) {
        const std::string& first = configs.front().name;
        auto cut = first.find_last_of('_');
        suite_id = cut == std::string::npos ? first : first.substr(0, cut);
    }

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

    SuiteManifest manifest;
    manifest.suite = suite_id;
    manifest.count = static_cast<std::int64_t>(configs.size());
    auto emit = [&](const fs::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    };
    for (auto& cfg : configs) {
        const std::string text = design_config_text(cfg);
        emit(dir / (cfg.name + ".json"), text);
        manifest.files.emplace_back(cfg.name + ".json", sha256_hex(text));
    }
    emit(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

}  // namespace forgebench
