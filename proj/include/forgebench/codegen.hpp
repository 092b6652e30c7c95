// SPDX-License-Identifier: Apache-2.0
//
// Deterministic emission of synthesizable HLS C++ bundles from validated
// design configs: per-operator kernel functions, a top-level wrapper, a
// self-checking testbench with embedded golden values, and tool scripts.
// Emission is a pure function of the config bytes (plus the test-vector
// seed): the same input always produces byte-identical sources.

#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "forgebench/kernels.hpp"

namespace forgebench {

// ---------------------------------------------------------------------------
// Bundle model

struct SourceUnit {
    std::string path;  // relative to the bundle root, e.g. "src/kernels.h"
    std::string role;  // kernel_header | kernel_body | top | testbench | ...
    std::string text;  // ASCII, newline-terminated
};

struct SourceBundle {
    std::string design;
    std::vector<SourceUnit> units;

    const SourceUnit* find_role(const std::string& role) const {
        for (const auto& u : units)
            if (u.role == role) return &u;
        return nullptr;
    }

    const SourceUnit* find_path(const std::string& path) const {
        for (const auto& u : units)
            if (u.path == path) return &u;
        return nullptr;
    }
};

/// Input/golden tensors embedded into an emitted testbench.
struct TestVectors {
    std::map<std::string, Tensor> inputs;   // one per in/inout interface
    std::map<std::string, Tensor> outputs;  // one per out/inout interface
};

// ---------------------------------------------------------------------------
// Value quantization.  Testbench inputs are snapped to the design's element
// grid before the oracle runs, so the embedded values are exactly
// representable on the hardware side.

inline double quantize_value(const DataType& dt, double v) {
    switch (dt.kind) {
        case DataType::Kind::Float32: return static_cast<double>(static_cast<float>(v));
        case DataType::Kind::Fixed: {
            const double step = dt.quant_step();
            return std::floor(v / step) * step;  // truncation, as the shim does
        }
        case DataType::Kind::Opaque: return v;
    }
    return v;
}

inline Tensor quantize_tensor(const DataType& dt, Tensor t) {
    for (auto& v : t.data) v = quantize_value(dt, v);
    return t;
}

// ---------------------------------------------------------------------------
// Accuracy budget for emitted testbenches.

/// Worst-case count of value-rounding steps feeding one output element.
inline std::int64_t reduction_depth(const OperatorSpec& spec,
                                    const std::vector<TensorShape>& in_shapes) {
    switch (spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm: {
            const auto& s = spec.as<LinearSpec>();
            return s.k + (s.bias ? 1 : 0);
        }
        case KernelKind::Chain: {
            const auto& s = spec.as<LinearSpec>();
            return s.m + s.k + s.n + (s.bias ? 1 : 0);
        }
        case KernelKind::Conv: {
            const auto& s = spec.as<ConvSpec>();
            return (s.in_ch / s.groups) * s.kernel * s.kernel + (s.bias ? 1 : 0);
        }
        case KernelKind::Attention: {
            const auto& s = spec.as<AttnSpec>();
            return 2 * s.hidden + s.seq_len;
        }
        case KernelKind::Norm: {
            const auto& s = spec.as<NormSpec>();
            if (s.kind == NormKind::BatchNorm) return 2;
            return in_shapes.empty() ? 2 : in_shapes[0].dims.back() + 2;
        }
        case KernelKind::Activation:
            if (spec.as<ActSpec>().kind == ActKind::Softmax)
                return in_shapes.empty() ? 1 : in_shapes[0].dims.back();
            return 1;
        case KernelKind::Pool: {
            const auto& s = spec.as<PoolSpec>();
            return s.kernel * s.kernel;
        }
        default: return 1;
    }
}

/// Max abs error allowed when comparing hardware outputs against goldens.
inline double testbench_tolerance(const DesignConfig& cfg) {
    const DataType& dt = cfg.synth.data_type;
    if (dt.kind == DataType::Kind::Float32) return 1e-4;
    if (dt.kind == DataType::Kind::Fixed) {
        std::int64_t ops = 1;
        for (const auto& call : cfg.calls) {
            std::vector<TensorShape> in;
            for (const auto& n : call.inputs) in.push_back(cfg.find_buffer(n)->shape);
            ops = std::max(ops, reduction_depth(call.spec, in));
        }
        return static_cast<double>(ops) * dt.quant_step();
    }
    raise(ErrorKind::UnsupportedSpec, "no numeric tolerance for opaque data types");
}

// ---------------------------------------------------------------------------
// Emission internals

namespace cgdetail {

struct Writer {
    std::string text;
    int depth = 0;

    void line(const std::string& s) {
        if (!s.empty()) text.append(static_cast<std::size_t>(depth) * 4, ' ');
        text += s;
        text += '\n';
    }
    void open(const std::string& s) {
        line(s + " {");
        ++depth;
    }
    void open_bare() {
        line("{");
        ++depth;
    }
    void close(const std::string& tail = "}") {
        --depth;
        line(tail);
    }
    void blank() { text += '\n'; }
};

inline std::string i64(std::int64_t v) { return std::to_string(v); }

inline std::string array_decl(const std::string& type, const std::string& name,
                              const TensorShape& shape, bool is_const) {
    std::string s = is_const ? "const " + type : type;
    s += " " + name;
    for (auto d : shape.dims) s += "[" + i64(d) + "]";
    return s;
}

/// Address of the first element, e.g. "&x[0][0]" for rank 2.
inline std::string flat_addr(const std::string& name, int rank) {
    std::string s = "&" + name;
    for (int i = 0; i < rank; ++i) s += "[0]";
    return s;
}

struct UnrollChoice {
    bool emit = false;
    bool full = false;
    std::int64_t factor = 1;
};

/// Directive legality: emit only a full unroll (factor >= bound) or an even
/// partial unroll (factor divides bound); anything else is elided.
inline UnrollChoice unroll_choice(std::int64_t factor, std::int64_t bound) {
    if (factor <= 1 || bound <= 1) return {};
    if (factor >= bound) return {true, true, bound};
    if (bound % factor == 0) return {true, false, factor};
    return {};
}

inline void maybe_unroll(Writer& w, std::int64_t factor, std::int64_t bound) {
    UnrollChoice u = unroll_choice(factor, bound);
    if (!u.emit) return;
    w.line(u.full ? "#pragma HLS unroll" : "#pragma HLS unroll factor=" + i64(u.factor));
}

inline void maybe_partition(Writer& w, const std::string& var, int dim, std::int64_t factor,
                            std::int64_t bound) {
    UnrollChoice u = unroll_choice(factor, bound);
    if (!u.emit) return;
    if (u.full)
        w.line("#pragma HLS array_partition variable=" + var + " complete dim=" + i64(dim));
    else
        w.line("#pragma HLS array_partition variable=" + var + " cyclic factor=" + i64(u.factor) +
               " dim=" + i64(dim));
}

/// One kernel function to be emitted: operator plus concrete operand shapes.
struct KernelInstance {
    OperatorSpec spec;
    std::vector<TensorShape> in_shapes;
    TensorShape out_shape;
    std::string name;
};

/// Kernels whose params fully determine every operand shape.
inline bool self_shaped(KernelKind k) {
    switch (k) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
        case KernelKind::Chain:
        case KernelKind::Conv:
        case KernelKind::Attention: return true;
        default: return false;
    }
}

inline std::string instance_hash8(const OperatorSpec& spec,
                                  const std::vector<TensorShape>& in_shapes,
                                  const TensorShape& out_shape) {
    std::string src = operator_spec_canonical(spec);
    if (!self_shaped(spec.kind)) {
        src += "#";
        for (const auto& s : in_shapes) src += s.str();
        src += "->" + out_shape.str();
    }
    return hash8(src);
}

inline std::string instance_name(const std::string& design, const OperatorSpec& spec,
                                 const std::vector<TensorShape>& in_shapes,
                                 const TensorShape& out_shape) {
    return design + "_" + kernel_kind_tag(spec.kind) + "_" +
           instance_hash8(spec, in_shapes, out_shape);
}

inline std::vector<std::string> param_names(const OperatorSpec& spec) {
    switch (spec.kind) {
        case KernelKind::Dot: {
            std::vector<std::string> n = {"x", "y"};
            if (spec.as<LinearSpec>().bias) n.push_back("bias");
            n.push_back("r");
            return n;
        }
        case KernelKind::Matvec: {
            std::vector<std::string> n = {"x", "a"};
            if (spec.as<LinearSpec>().bias) n.push_back("bias");
            n.push_back("y");
            return n;
        }
        case KernelKind::Gemm: {
            std::vector<std::string> n = {"a", "b"};
            if (spec.as<LinearSpec>().bias) n.push_back("bias");
            n.push_back("c");
            return n;
        }
        case KernelKind::Chain: {
            std::vector<std::string> n = {"x", "a", "b", "y"};
            if (spec.as<LinearSpec>().bias) n.push_back("bias");
            n.push_back("r");
            return n;
        }
        case KernelKind::Conv: {
            std::vector<std::string> n = {"x", "w"};
            if (spec.as<ConvSpec>().bias) n.push_back("bias");
            n.push_back("y");
            return n;
        }
        case KernelKind::Attention:
            return {"q", "k", "v", "wq", "wk", "wv", "wo", "y"};
        case KernelKind::Norm: {
            const auto& s = spec.as<NormSpec>();
            std::vector<std::string> n = {"x"};
            if (s.affine) {
                n.push_back("gamma");
                if (s.kind != NormKind::RmsNorm) n.push_back("beta");
            }
            if (s.kind == NormKind::BatchNorm) {
                n.push_back("mean");
                n.push_back("var");
            }
            n.push_back("y");
            return n;
        }
        case KernelKind::Activation:
        case KernelKind::Dropout:
        case KernelKind::Pool: return {"x", "y"};
        case KernelKind::Add:
        case KernelKind::Mul: return {"a", "b", "y"};
        case KernelKind::Load:
        case KernelKind::Store: return {"src", "dst"};
    }
    raise(ErrorKind::UnsupportedSpec, "unreachable kernel kind");
}

inline std::string signature(const KernelInstance& inst) {
    std::vector<std::string> names = param_names(inst.spec);
    std::string s = "void " + inst.name + "(";
    for (std::size_t i = 0; i < inst.in_shapes.size(); ++i) {
        if (i) s += ", ";
        s += array_decl("data_t", names[i], inst.in_shapes[i], true);
    }
    if (!inst.in_shapes.empty()) s += ", ";
    s += array_decl("data_t", names.back(), inst.out_shape, false);
    s += ")";
    return s;
}

inline std::string mul_expr(const LinearSpec& s, const std::string& a, const std::string& b) {
    if (s.inline_mul) return a + " * " + b;
    return "fb_mul(" + a + ", " + b + ")";
}

// --- per-kind bodies -------------------------------------------------------

inline void emit_linear_body(Writer& w, const KernelInstance& inst) {
    const auto& s = inst.spec.as<LinearSpec>();
    const std::int64_t ui = s.unroll[0], uj = s.unroll[1], uk = s.unroll[2];
    const std::string bias = s.bias ? "bias" : "";

    switch (s.variant) {
        case LinearSpec::Variant::Dot: {
            maybe_partition(w, "x", 1, uk, s.k);
            maybe_partition(w, "y", 1, uk, s.k);
            w.line("data_t acc = (data_t)0;");
            w.open("l_k: for (int k = 0; k < " + i64(s.k) + "; ++k)");
            maybe_unroll(w, uk, s.k);
            w.line("acc += " + mul_expr(s, "x[k]", "y[k]") + ";");
            w.close();
            w.line(s.bias ? "r[0] = acc + bias[0];" : "r[0] = acc;");
            return;
        }
        case LinearSpec::Variant::Matvec: {
            maybe_partition(w, "x", 1, uk, s.k);
            maybe_partition(w, "a", 1, uk, s.k);
            maybe_partition(w, "a", 2, uj, s.n);
            maybe_partition(w, "y", 1, uj, s.n);
            w.open("l_j: for (int j = 0; j < " + i64(s.n) + "; ++j)");
            maybe_unroll(w, uj, s.n);
            w.line("data_t acc = (data_t)0;");
            w.open("l_k: for (int k = 0; k < " + i64(s.k) + "; ++k)");
            maybe_unroll(w, uk, s.k);
            w.line("acc += " + mul_expr(s, "x[k]", "a[k][j]") + ";");
            w.close();
            w.line(s.bias ? "y[j] = acc + bias[j];" : "y[j] = acc;");
            w.close();
            return;
        }
        case LinearSpec::Variant::Gemm: {
            maybe_partition(w, "a", 1, ui, s.m);
            maybe_partition(w, "a", 2, uk, s.k);
            maybe_partition(w, "b", 1, uk, s.k);
            maybe_partition(w, "b", 2, uj, s.n);
            maybe_partition(w, "c", 1, ui, s.m);
            maybe_partition(w, "c", 2, uj, s.n);
            w.open("l_init_i: for (int i = 0; i < " + i64(s.m) + "; ++i)");
            w.open("l_init_j: for (int j = 0; j < " + i64(s.n) + "; ++j)");
            w.line("c[i][j] = (data_t)0;");
            w.close();
            w.close();
            const std::map<char, std::int64_t> bound = {
                {'i', s.m}, {'j', s.n}, {'k', s.k}};
            const std::map<char, std::int64_t> factor = {{'i', ui}, {'j', uj}, {'k', uk}};
            for (char axis : s.loop_order) {
                std::string v(1, axis);
                w.open("l_" + v + ": for (int " + v + " = 0; " + v + " < " +
                       i64(bound.at(axis)) + "; ++" + v + ")");
                maybe_unroll(w, factor.at(axis), bound.at(axis));
            }
            w.line("c[i][j] += " + mul_expr(s, "a[i][k]", "b[k][j]") + ";");
            for (int n = 0; n < 3; ++n) w.close();
            if (s.bias) {
                w.open("l_bias_i: for (int i = 0; i < " + i64(s.m) + "; ++i)");
                w.open("l_bias_j: for (int j = 0; j < " + i64(s.n) + "; ++j)");
                w.line("c[i][j] += bias[j];");
                w.close();
                w.close();
            }
            return;
        }
        case LinearSpec::Variant::Chain: {
            // Stage arrays carry the association declared by the spec; each is
            // fully rewritten before use, so static storage is safe.
            auto reduce = [&](const std::string& label, const std::string& var,
                              std::int64_t n_out, std::int64_t n_in, std::int64_t uf,
                              const std::string& body_lhs, const std::string& expr) {
                w.open("l_" + label + ": for (int o = 0; o < " + i64(n_out) + "; ++o)");
                w.line("data_t acc = (data_t)0;");
                w.open("l_" + label + "_r: for (int t = 0; t < " + i64(n_in) + "; ++t)");
                maybe_unroll(w, uf, n_in);
                w.line("acc += " + expr + ";");
                w.close();
                w.line(body_lhs + " = acc;");
                w.close();
                (void)var;
            };
            switch (s.assoc_order) {
                case AssocOrder::LeftChain:  // ((xA)B)y
                    w.line("static data_t xa[" + i64(s.k) + "];");
                    w.line("static data_t xab[" + i64(s.n) + "];");
                    reduce("xa", "xa", s.k, s.m, ui, "xa[o]", mul_expr(s, "x[t]", "a[t][o]"));
                    reduce("xab", "xab", s.n, s.k, uk, "xab[o]",
                           mul_expr(s, "xa[t]", "b[t][o]"));
                    break;
                case AssocOrder::PairSplit:  // (xA)(By)
                    w.line("static data_t xa[" + i64(s.k) + "];");
                    w.line("static data_t by[" + i64(s.k) + "];");
                    reduce("xa", "xa", s.k, s.m, ui, "xa[o]", mul_expr(s, "x[t]", "a[t][o]"));
                    reduce("by", "by", s.k, s.n, uj, "by[o]", mul_expr(s, "b[o][t]", "y[t]"));
                    break;
                case AssocOrder::MatrixFirst:  // x((AB)y)
                    w.line("static data_t ab[" + i64(s.m) + "][" + i64(s.n) + "];");
                    w.line("static data_t aby[" + i64(s.m) + "];");
                    w.open("l_ab_i: for (int i = 0; i < " + i64(s.m) + "; ++i)");
                    w.open("l_ab_j: for (int j = 0; j < " + i64(s.n) + "; ++j)");
                    w.line("data_t acc = (data_t)0;");
                    w.open("l_ab_k: for (int t = 0; t < " + i64(s.k) + "; ++t)");
                    maybe_unroll(w, uk, s.k);
                    w.line("acc += " + mul_expr(s, "a[i][t]", "b[t][j]") + ";");
                    w.close();
                    w.line("ab[i][j] = acc;");
                    w.close();
                    w.close();
                    reduce("aby", "aby", s.m, s.n, uj, "aby[o]",
                           mul_expr(s, "ab[o][t]", "y[t]"));
                    break;
                case AssocOrder::RightChain:  // x(A(By))
                    w.line("static data_t by[" + i64(s.k) + "];");
                    w.line("static data_t aby[" + i64(s.m) + "];");
                    reduce("by", "by", s.k, s.n, uj, "by[o]", mul_expr(s, "b[o][t]", "y[t]"));
                    reduce("aby", "aby", s.m, s.k, uk, "aby[o]",
                           mul_expr(s, "a[o][t]", "by[t]"));
                    break;
            }
            w.line("data_t acc = (data_t)0;");
            const bool via_k = s.assoc_order == AssocOrder::PairSplit;
            const std::int64_t fin_n = via_k ? s.k
                                      : (s.assoc_order == AssocOrder::LeftChain ? s.n : s.m);
            const std::string lhs = via_k ? "xa[t]"
                                   : (s.assoc_order == AssocOrder::LeftChain ? "xab[t]"
                                                                                : "x[t]");
            const std::string rhs = via_k ? "by[t]"
                                   : (s.assoc_order == AssocOrder::LeftChain ? "y[t]"
                                                                                : "aby[t]");
            w.open("l_fin: for (int t = 0; t < " + i64(fin_n) + "; ++t)");
            w.line("acc += " + mul_expr(s, lhs, rhs) + ";");
            w.close();
            w.line(s.bias ? "r[0] = acc + bias[0];" : "r[0] = acc;");
            return;
        }
    }
}

inline void emit_conv_body(Writer& w, const KernelInstance& inst) {
    const auto& s = inst.spec.as<ConvSpec>();
    const std::int64_t icg = s.in_ch / s.groups, ocg = s.out_ch / s.groups;
    if (s.groups == 1) maybe_partition(w, "x", 1, s.unroll_in, icg);
    maybe_partition(w, "w", 1, s.unroll_out, s.out_ch);
    maybe_partition(w, "w", 2, s.unroll_in, icg);
    maybe_partition(w, "y", 1, s.unroll_out, s.out_ch);
    w.open("l_oc: for (int oc = 0; oc < " + i64(s.out_ch) + "; ++oc)");
    maybe_unroll(w, s.unroll_out, s.out_ch);
    w.open("l_oy: for (int oy = 0; oy < " + i64(s.out_h()) + "; ++oy)");
    w.open("l_ox: for (int ox = 0; ox < " + i64(s.out_w()) + "; ++ox)");
    w.line(std::string("data_t acc = ") + (s.bias ? "bias[oc];" : "(data_t)0;"));
    w.open("l_ic: for (int ic = 0; ic < " + i64(icg) + "; ++ic)");
    maybe_unroll(w, s.unroll_in, icg);
    w.open("l_ky: for (int ky = 0; ky < " + i64(s.kernel) + "; ++ky)");
    w.open("l_kx: for (int kx = 0; kx < " + i64(s.kernel) + "; ++kx)");
    w.line("int iy = oy * " + i64(s.stride) + " + ky - " + i64(s.padding) + ";");
    w.line("int ix = ox * " + i64(s.stride) + " + kx - " + i64(s.padding) + ";");
    w.open("if (iy >= 0 && iy < " + i64(s.h) + " && ix >= 0 && ix < " + i64(s.w) + ")");
    const std::string ich =
        s.groups == 1 ? "ic" : "(oc / " + i64(ocg) + ") * " + i64(icg) + " + ic";
    w.line("acc += x[" + ich + "][iy][ix] * w[oc][ic][ky][kx];");
    w.close();
    w.close();
    w.close();
    w.close();
    w.line("y[oc][oy][ox] = acc;");
    w.close();
    w.close();
    w.close();
}

inline void emit_attention_body(Writer& w, const KernelInstance& inst) {
    const auto& s = inst.spec.as<AttnSpec>();
    const std::int64_t L = s.seq_len, d = s.hidden, h = s.heads, g = s.kv_groups;
    const std::int64_t hd = s.head_dim(), kv = s.kv_width();
    const std::int64_t share = h / g;

    w.line("static data_t qh[" + i64(L) + "][" + i64(d) + "];");
    w.line("static data_t kh[" + i64(L) + "][" + i64(kv) + "];");
    w.line("static data_t vh[" + i64(L) + "][" + i64(kv) + "];");
    w.line("static data_t ctx[" + i64(L) + "][" + i64(d) + "];");
    w.line("static double sc[" + i64(L) + "];");
    w.blank();
    auto project = [&](const std::string& label, const std::string& src,
                       const std::string& wgt, const std::string& dst, std::int64_t width) {
        w.open("l_" + label + "_i: for (int i = 0; i < " + i64(L) + "; ++i)");
        w.open("l_" + label + "_j: for (int j = 0; j < " + i64(width) + "; ++j)");
        w.line("data_t acc = (data_t)0;");
        w.open("l_" + label + "_t: for (int t = 0; t < " + i64(d) + "; ++t)");
        w.line("acc += " + src + "[i][t] * " + wgt + "[t][j];");
        w.close();
        w.line(dst + "[i][j] = acc;");
        w.close();
        w.close();
    };
    project("q", "q", "wq", "qh", d);
    project("k", "k", "wk", "kh", kv);
    project("v", "v", "wv", "vh", kv);

    if (s.with_rope) {
        auto rotate = [&](const std::string& label, const std::string& arr,
                          std::int64_t blocks) {
            w.open("l_" + label + "_p: for (int p = 0; p < " + i64(L) + "; ++p)");
            w.open("l_" + label + "_b: for (int blk = 0; blk < " + i64(blocks) + "; ++blk)");
            w.open("l_" + label + "_r: for (int t = 0; t < " + i64(hd / 2) + "; ++t)");
            w.line("double ang = (double)p * pow(10000.0, -2.0 * (double)t / " +
                   format_double(static_cast<double>(hd)) + ");");
            w.line("double cs = cos(ang);");
            w.line("double sn = sin(ang);");
            w.line("double x0 = (double)" + arr + "[p][blk * " + i64(hd) + " + 2 * t];");
            w.line("double x1 = (double)" + arr + "[p][blk * " + i64(hd) + " + 2 * t + 1];");
            w.line(arr + "[p][blk * " + i64(hd) + " + 2 * t] = (data_t)(x0 * cs - x1 * sn);");
            w.line(arr + "[p][blk * " + i64(hd) + " + 2 * t + 1] = (data_t)(x0 * sn + x1 * cs);");
            w.close();
            w.close();
            w.close();
        };
        rotate("rq", "qh", h);
        rotate("rk", "kh", g);
    }

    w.open("l_head: for (int hh = 0; hh < " + i64(h) + "; ++hh)");
    w.line("int kvh = hh / " + i64(share) + ";");
    w.open("l_row: for (int aa = 0; aa < " + i64(L) + "; ++aa)");
    if (s.window)
        w.line("int lo = aa - " + i64(*s.window) + " + 1 > 0 ? aa - " + i64(*s.window) +
               " + 1 : 0;");
    else
        w.line("int lo = 0;");
    w.line("double mx = -1e300;");
    w.open("l_score: for (int bb = lo; bb <= aa; ++bb)");
    w.line("data_t dot = (data_t)0;");
    w.open("l_sdot: for (int t = 0; t < " + i64(hd) + "; ++t)");
    w.line("dot += qh[aa][hh * " + i64(hd) + " + t] * kh[bb][kvh * " + i64(hd) + " + t];");
    w.close();
    w.line("sc[bb] = (double)dot / " + format_double(std::sqrt(static_cast<double>(hd))) + ";");
    w.line("if (sc[bb] > mx) mx = sc[bb];");
    w.close();
    w.line("double sum = 0.0;");
    w.open("l_soft: for (int bb = lo; bb <= aa; ++bb)");
    w.line("sc[bb] = exp(sc[bb] - mx);");
    w.line("sum += sc[bb];");
    w.close();
    w.open("l_ctx: for (int t = 0; t < " + i64(hd) + "; ++t)");
    w.line("double acc = 0.0;");
    w.open("l_cdot: for (int bb = lo; bb <= aa; ++bb)");
    w.line("acc += (sc[bb] / sum) * (double)vh[bb][kvh * " + i64(hd) + " + t];");
    w.close();
    w.line("ctx[aa][hh * " + i64(hd) + " + t] = (data_t)acc;");
    w.close();
    w.close();
    w.close();

    w.open("l_out_i: for (int i = 0; i < " + i64(L) + "; ++i)");
    w.open("l_out_j: for (int j = 0; j < " + i64(d) + "; ++j)");
    w.line("data_t acc = (data_t)0;");
    w.open("l_out_t: for (int t = 0; t < " + i64(d) + "; ++t)");
    w.line("acc += ctx[i][t] * wo[t][j];");
    w.close();
    w.line("y[i][j] = acc;");
    w.close();
    w.close();
}

inline void emit_norm_body(Writer& w, const KernelInstance& inst) {
    const auto& s = inst.spec.as<NormSpec>();
    const TensorShape& x = inst.in_shapes[0];
    const int rank = x.rank();
    const std::int64_t total = x.element_count();
    const std::string eps = format_double(s.epsilon);
    w.line("const data_t* xf = " + flat_addr("x", rank) + ";");
    w.line("data_t* yf = " + flat_addr("y", rank) + ";");
    if (s.kind == NormKind::BatchNorm) {
        const std::int64_t ch = x.dims[0], per = total / ch;
        w.open("l_c: for (int c = 0; c < " + i64(ch) + "; ++c)");
        w.line("double inv = 1.0 / sqrt((double)var[c] + " + eps + ");");
        w.line(s.affine ? "double g = (double)gamma[c];" : "double g = 1.0;");
        w.line(s.affine ? "double b = (double)beta[c];" : "double b = 0.0;");
        w.open("l_n: for (int i = 0; i < " + i64(per) + "; ++i)");
        w.line("yf[c * " + i64(per) + " + i] = (data_t)(g * ((double)xf[c * " + i64(per) +
               " + i] - (double)mean[c]) * inv + b);");
        w.close();
        w.close();
        return;
    }
    const std::int64_t width = x.dims.back(), rows = total / width;
    w.open("l_r: for (int r = 0; r < " + i64(rows) + "; ++r)");
    if (s.kind == NormKind::LayerNorm) {
        w.line("double m = 0.0;");
        w.open("l_m: for (int j = 0; j < " + i64(width) + "; ++j)");
        w.line("m += (double)xf[r * " + i64(width) + " + j];");
        w.close();
        w.line("m /= " + format_double(static_cast<double>(width)) + ";");
        w.line("double v = 0.0;");
        w.open("l_v: for (int j = 0; j < " + i64(width) + "; ++j)");
        w.line("double dvn = (double)xf[r * " + i64(width) + " + j] - m;");
        w.line("v += dvn * dvn;");
        w.close();
        w.line("v /= " + format_double(static_cast<double>(width)) + ";");
        w.line("double inv = 1.0 / sqrt(v + " + eps + ");");
        w.open("l_y: for (int j = 0; j < " + i64(width) + "; ++j)");
        std::string expr = "((double)xf[r * " + i64(width) + " + j] - m) * inv";
        if (s.affine) expr = "(" + expr + ") * (double)gamma[j] + (double)beta[j]";
        w.line("yf[r * " + i64(width) + " + j] = (data_t)(" + expr + ");");
        w.close();
    } else {  // rmsnorm
        w.line("double ms = 0.0;");
        w.open("l_ms: for (int j = 0; j < " + i64(width) + "; ++j)");
        w.line("double xv = (double)xf[r * " + i64(width) + " + j];");
        w.line("ms += xv * xv;");
        w.close();
        w.line("ms /= " + format_double(static_cast<double>(width)) + ";");
        w.line("double inv = 1.0 / sqrt(ms + " + eps + ");");
        w.open("l_y: for (int j = 0; j < " + i64(width) + "; ++j)");
        std::string expr = "(double)xf[r * " + i64(width) + " + j] * inv";
        if (s.affine) expr = "(" + expr + ") * (double)gamma[j]";
        w.line("yf[r * " + i64(width) + " + j] = (data_t)(" + expr + ");");
        w.close();
    }
    w.close();
}

inline std::string activation_expr(ActKind kind, const std::string& v) {
    const std::string dv = "(double)" + v;
    switch (kind) {
        case ActKind::Relu: return "(" + v + " > (data_t)0) ? " + v + " : (data_t)0";
        case ActKind::Relu6:
            return "(data_t)(" + dv + " < 0.0 ? 0.0 : (" + dv + " > 6.0 ? 6.0 : " + dv + "))";
        case ActKind::Sigmoid: return "(data_t)(1.0 / (1.0 + exp(-" + dv + ")))";
        case ActKind::Tanh: return "(data_t)tanh(" + dv + ")";
        case ActKind::Gelu:
            return "(data_t)(0.5 * " + dv + " * (1.0 + tanh(0.7978845608028654 * (" + dv +
                   " + 0.044715 * " + dv + " * " + dv + " * " + dv + "))))";
        case ActKind::Elu:
            return "(data_t)(" + dv + " > 0.0 ? " + dv + " : expm1(" + dv + "))";
        case ActKind::Silu: return "(data_t)(" + dv + " / (1.0 + exp(-" + dv + ")))";
        case ActKind::HardSigmoid:
            return "(data_t)(fmin(fmax(" + dv + " / 6.0 + 0.5, 0.0), 1.0))";
        case ActKind::HardSwish:
            return "(data_t)(" + dv + " * fmin(fmax(" + dv + " / 6.0 + 0.5, 0.0), 1.0))";
        case ActKind::Exp: return "(data_t)exp(" + dv + ")";
        case ActKind::Softmax: break;
    }
    raise(ErrorKind::UnsupportedSpec, "softmax has no scalar form");
}

inline void emit_activation_body(Writer& w, const KernelInstance& inst) {
    const auto& s = inst.spec.as<ActSpec>();
    const TensorShape& x = inst.in_shapes[0];
    const int rank = x.rank();
    const std::int64_t total = x.element_count();
    w.line("const data_t* xf = " + flat_addr("x", rank) + ";");
    w.line("data_t* yf = " + flat_addr("y", rank) + ";");
    if (s.kind == ActKind::Softmax) {
        const std::int64_t width = x.dims.back(), rows = total / width;
        w.open("l_r: for (int r = 0; r < " + i64(rows) + "; ++r)");
        w.line("double mx = (double)xf[r * " + i64(width) + "];");
        w.open("l_mx: for (int j = 1; j < " + i64(width) + "; ++j)");
        w.line("if ((double)xf[r * " + i64(width) + " + j] > mx) mx = (double)xf[r * " +
               i64(width) + " + j];");
        w.close();
        w.line("double sum = 0.0;");
        w.open("l_e: for (int j = 0; j < " + i64(width) + "; ++j)");
        w.line("double e = exp((double)xf[r * " + i64(width) + " + j] - mx);");
        w.line("sum += e;");
        w.line("yf[r * " + i64(width) + " + j] = (data_t)e;");
        w.close();
        w.open("l_d: for (int j = 0; j < " + i64(width) + "; ++j)");
        w.line("yf[r * " + i64(width) + " + j] = (data_t)((double)yf[r * " + i64(width) +
               " + j] / sum);");
        w.close();
        w.close();
        return;
    }
    w.open("l_n: for (int i = 0; i < " + i64(total) + "; ++i)");
    w.line("data_t v = xf[i];");
    w.line("yf[i] = " + activation_expr(s.kind, "v") + ";");
    w.close();
}

inline void emit_dropout_body(Writer& w, const KernelInstance& inst) {
    const auto& s = inst.spec.as<DropoutSpec>();
    const TensorShape& x = inst.in_shapes[0];
    const std::int64_t total = x.element_count();
    w.line("const data_t* xf = " + flat_addr("x", x.rank()) + ";");
    w.line("data_t* yf = " + flat_addr("y", x.rank()) + ";");
    if (s.p == 0.0) {
        w.open("l_n: for (int i = 0; i < " + i64(total) + "; ++i)");
        w.line("yf[i] = xf[i];");
        w.close();
        return;
    }
    w.line("double scale = 1.0 / (1.0 - " + format_double(s.p) + ");");
    w.open("l_n: for (int i = 0; i < " + i64(total) + "; ++i)");
    w.line("double u = fb_unit(" + std::to_string(s.seed) + "ULL, (unsigned long long)i);");
    w.line("yf[i] = u >= " + format_double(s.p) +
           " ? (data_t)((double)xf[i] * scale) : (data_t)0;");
    w.close();
}

inline void emit_pool_body(Writer& w, const KernelInstance& inst) {
    const auto& s = inst.spec.as<PoolSpec>();
    const TensorShape& x = inst.in_shapes[0];
    const std::int64_t ch = x.dims[0];
    const std::int64_t oh = inst.out_shape.dims[1], ow = inst.out_shape.dims[2];
    w.open("l_c: for (int c = 0; c < " + i64(ch) + "; ++c)");
    w.open("l_oy: for (int oy = 0; oy < " + i64(oh) + "; ++oy)");
    w.open("l_ox: for (int ox = 0; ox < " + i64(ow) + "; ++ox)");
    if (s.kind == PoolKind::Max)
        w.line("data_t acc = x[c][oy * " + i64(s.stride) + "][ox * " + i64(s.stride) + "];");
    else
        w.line("double acc = 0.0;");
    w.open("l_ky: for (int ky = 0; ky < " + i64(s.kernel) + "; ++ky)");
    w.open("l_kx: for (int kx = 0; kx < " + i64(s.kernel) + "; ++kx)");
    w.line("data_t v = x[c][oy * " + i64(s.stride) + " + ky][ox * " + i64(s.stride) +
           " + kx];");
    if (s.kind == PoolKind::Max)
        w.line("if (v > acc) acc = v;");
    else
        w.line("acc += (double)v;");
    w.close();
    w.close();
    if (s.kind == PoolKind::Max)
        w.line("y[c][oy][ox] = acc;");
    else
        w.line("y[c][oy][ox] = (data_t)(acc / " +
               format_double(static_cast<double>(s.kernel * s.kernel)) + ");");
    w.close();
    w.close();
    w.close();
}

inline void emit_elementwise_body(Writer& w, const KernelInstance& inst) {
    const TensorShape& x = inst.in_shapes[0];
    const std::int64_t total = x.element_count();
    const std::string op = inst.spec.kind == KernelKind::Add ? " + " : " * ";
    w.line("const data_t* af = " + flat_addr("a", x.rank()) + ";");
    w.line("const data_t* bf = " + flat_addr("b", x.rank()) + ";");
    w.line("data_t* yf = " + flat_addr("y", x.rank()) + ";");
    w.open("l_n: for (int i = 0; i < " + i64(total) + "; ++i)");
    w.line("yf[i] = af[i]" + op + "bf[i];");
    w.close();
}

inline void emit_move_body(Writer& w, const KernelInstance& inst) {
    const auto& s = inst.spec.as<MoveSpec>();
    std::vector<std::string> idx;
    for (std::size_t d = 0; d < s.shape.size(); ++d) {
        std::string v = "i" + std::to_string(d);
        w.open("l_" + v + ": for (int " + v + " = 0; " + v + " < " + i64(s.shape[d]) + "; ++" +
               v + ")");
        idx.push_back(v);
    }
    std::string src = "src", dst = "dst";
    for (std::size_t d = 0; d < idx.size(); ++d) {
        src += "[" + (s.src_offset[d] ? idx[d] + " + " + i64(s.src_offset[d]) : idx[d]) + "]";
        dst += "[" + (s.dst_offset[d] ? idx[d] + " + " + i64(s.dst_offset[d]) : idx[d]) + "]";
    }
    w.line(dst + " = " + src + ";");
    for (std::size_t d = 0; d < idx.size(); ++d) w.close();
}

inline void emit_body(Writer& w, const KernelInstance& inst) {
    switch (inst.spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
        case KernelKind::Chain: emit_linear_body(w, inst); return;
        case KernelKind::Conv: emit_conv_body(w, inst); return;
        case KernelKind::Attention: emit_attention_body(w, inst); return;
        case KernelKind::Norm: emit_norm_body(w, inst); return;
        case KernelKind::Activation: emit_activation_body(w, inst); return;
        case KernelKind::Dropout: emit_dropout_body(w, inst); return;
        case KernelKind::Pool: emit_pool_body(w, inst); return;
        case KernelKind::Add:
        case KernelKind::Mul: emit_elementwise_body(w, inst); return;
        case KernelKind::Load:
        case KernelKind::Store: emit_move_body(w, inst); return;
    }
}

inline void emit_definition(Writer& w, const KernelInstance& inst) {
    w.open(signature(inst));
    emit_body(w, inst);
    w.close();
}

inline bool uses_mul_helper(const OperatorSpec& spec) {
    switch (spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
        case KernelKind::Chain: return !spec.as<LinearSpec>().inline_mul;
        default: return false;
    }
}

inline void emit_helpers(Writer& w, bool need_mul, bool need_rng) {
    if (need_mul) {
        w.open("static inline data_t fb_mul(data_t a, data_t b)");
        w.line("return a * b;");
        w.close();
        w.blank();
    }
    if (need_rng) {
        w.line("/* Counter-based uniform draw; must stay bit-identical with the");
        w.line("   generator that produced the golden outputs. */");
        w.open("static inline unsigned long long fb_draw(unsigned long long seed, unsigned "
               "long long i)");
        w.line("unsigned long long z = seed + (i + 1ULL) * 0x9e3779b97f4a7c15ULL;");
        w.line("z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;");
        w.line("z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;");
        w.line("z = z ^ (z >> 31);");
        w.line("return z;");
        w.close();
        w.blank();
        w.open("static inline double fb_unit(unsigned long long seed, unsigned long long i)");
        w.line("return (double)(fb_draw(seed, i) >> 11) * (1.0 / 9007199254740992.0);");
        w.close();
        w.blank();
    }
}

/// Resolve the concrete kernel instances of a design, in first-use order,
/// deduplicated by generated name (identical operator + shapes collapse).
inline std::vector<KernelInstance> design_instances(const DesignConfig& cfg) {
    std::vector<KernelInstance> out;
    std::set<std::string> seen;
    for (const auto& call : cfg.calls) {
        KernelInstance inst;
        inst.spec = call.spec;
        for (const auto& n : call.inputs) inst.in_shapes.push_back(cfg.find_buffer(n)->shape);
        inst.out_shape = cfg.find_buffer(call.outputs[0])->shape;
        inst.name = instance_name(cfg.name, inst.spec, inst.in_shapes, inst.out_shape);
        if (seen.insert(inst.name).second) out.push_back(std::move(inst));
    }
    return out;
}

inline std::string call_name(const DesignConfig& cfg, const ModuleCall& call) {
    std::vector<TensorShape> in;
    for (const auto& n : call.inputs) in.push_back(cfg.find_buffer(n)->shape);
    return instance_name(cfg.name, call.spec, in, cfg.find_buffer(call.outputs[0])->shape);
}

/// Off-chip memories become top-level parameters, appended after interfaces.
inline std::vector<const MemoryDecl*> off_chip_memories(const DesignConfig& cfg) {
    std::vector<const MemoryDecl*> out;
    for (const auto& m : cfg.memories)
        if (m.space == MemSpace::OffChip) out.push_back(&m);
    return out;
}

inline std::string top_signature(const DesignConfig& cfg) {
    std::string s = "void " + cfg.synth.top_name + "(";
    bool first = true;
    for (const auto& itf : cfg.interfaces) {
        if (!first) s += ", ";
        first = false;
        s += array_decl("data_t", itf.name, itf.shape, itf.direction == Direction::In);
    }
    for (const MemoryDecl* m : off_chip_memories(cfg)) {
        if (!first) s += ", ";
        first = false;
        s += array_decl("data_t", m->name, m->shape, false);
    }
    s += ")";
    return s;
}

inline std::string upper_ascii(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

/// Embed a tensor as a flat C initializer list, eight values per line.
inline void emit_data_array(Writer& w, const std::string& name, const Tensor& t) {
    w.line("static const double " + name + "[" + i64(t.size()) + "] = {");
    std::string row = "    ";
    for (std::int64_t i = 0; i < t.size(); ++i) {
        row += format_double(t.data[i]);
        if (i + 1 < t.size()) row += ",";
        if ((i + 1) % 8 == 0 || i + 1 == t.size()) {
            w.text += row + "\n";
            row = "    ";
        } else {
            row += " ";
        }
    }
    w.line("};");
}

}  // namespace cgdetail

// ---------------------------------------------------------------------------
// HLS compatibility shim (fixed text).

inline std::string hls_compat_text() {
    return R"(#ifndef FB_HLS_COMPAT_H
#define FB_HLS_COMPAT_H

/* Compatibility shim so generated sources build under a plain C++ compiler.
 * Vendor toolchains ship <ap_fixed.h>; anywhere else this header provides a
 * behavioral stand-in: value stored as double, truncated to the fixed-point
 * grid on every assignment (matching the vendor default truncation mode).
 * HLS pragmas are plain `#pragma HLS ...` lines, which unknown compilers
 * ignore.  Off-chip ports use memory-mapped master interfaces (m_axi).
 */

#include <math.h>

#if defined(__has_include)
#if __has_include(<ap_fixed.h>)
#include <ap_fixed.h>
#define FB_HAVE_VENDOR_AP_FIXED 1
#endif
#endif

#ifndef FB_HAVE_VENDOR_AP_FIXED
template <int W, int I>
class ap_fixed {
  public:
    ap_fixed() : v_(0.0) {}
    ap_fixed(double x) : v_(quant(x)) {}
    operator double() const { return v_; }
    ap_fixed& operator+=(double x) {
        v_ = quant(v_ + x);
        return *this;
    }
    ap_fixed& operator-=(double x) {
        v_ = quant(v_ - x);
        return *this;
    }
    ap_fixed& operator*=(double x) {
        v_ = quant(v_ * x);
        return *this;
    }

  private:
    static double quant(double x) {
        const double s = ldexp(1.0, -(W - I));
        return floor(x / s) * s;
    }
    double v_;
};
#endif

#endif /* FB_HLS_COMPAT_H */
)";
}

// ---------------------------------------------------------------------------
// Public emission operations

/// Emit one kernel as a standalone source unit.  Shapes are taken from the
/// operator itself; shape-generic kernels need explicit operand shapes.
inline SourceUnit emit_kernel(const OperatorSpec& spec, const DataType& dt,
                              const std::string& design, std::vector<TensorShape> in_shapes,
                              TensorShape out_shape) {
    using namespace cgdetail;
    check_call_shapes(spec, in_shapes, {out_shape});
    KernelInstance inst{spec, std::move(in_shapes), std::move(out_shape), ""};
    inst.name = instance_name(design, inst.spec, inst.in_shapes, inst.out_shape);

    Writer w;
    w.line("/* " + inst.name + ": " + kernel_kind_tag(spec.kind) + " kernel (generated) */");
    w.line("#include \"hls_compat.h\"");
    w.blank();
    w.line("typedef " + dt.cpp_name() + " data_t;");
    w.blank();
    emit_helpers(w, uses_mul_helper(spec), spec.kind == KernelKind::Dropout &&
                                               spec.as<DropoutSpec>().p != 0.0);
    emit_definition(w, inst);
    return SourceUnit{"src/" + inst.name + ".h", "kernel", w.text};
}

namespace cgdetail {

/// Operand shapes implied by a fully-shaped operator, bias included.
inline std::vector<TensorShape> self_input_shapes(const OperatorSpec& spec) {
    switch (spec.kind) {
        case KernelKind::Dot: {
            const auto& s = spec.as<LinearSpec>();
            std::vector<TensorShape> v = {TensorShape{s.k}, TensorShape{s.k}};
            if (s.bias) v.push_back(TensorShape{1});
            return v;
        }
        case KernelKind::Matvec: {
            const auto& s = spec.as<LinearSpec>();
            std::vector<TensorShape> v = {TensorShape{s.k}, TensorShape{s.k, s.n}};
            if (s.bias) v.push_back(TensorShape{s.n});
            return v;
        }
        case KernelKind::Gemm: {
            const auto& s = spec.as<LinearSpec>();
            std::vector<TensorShape> v = {TensorShape{s.m, s.k}, TensorShape{s.k, s.n}};
            if (s.bias) v.push_back(TensorShape{s.n});
            return v;
        }
        case KernelKind::Chain: {
            const auto& s = spec.as<LinearSpec>();
            std::vector<TensorShape> v = {TensorShape{s.m}, TensorShape{s.m, s.k},
                                          TensorShape{s.k, s.n}, TensorShape{s.n}};
            if (s.bias) v.push_back(TensorShape{1});
            return v;
        }
        case KernelKind::Conv: {
            const auto& s = spec.as<ConvSpec>();
            std::vector<TensorShape> v = {
                TensorShape{s.in_ch, s.h, s.w},
                TensorShape{s.out_ch, s.in_ch / s.groups, s.kernel, s.kernel}};
            if (s.bias) v.push_back(TensorShape{s.out_ch});
            return v;
        }
        case KernelKind::Attention: {
            const auto& s = spec.as<AttnSpec>();
            TensorShape tok{s.seq_len, s.hidden}, sq{s.hidden, s.hidden},
                kvw{s.hidden, s.kv_width()};
            return {tok, tok, tok, sq, kvw, kvw, sq};
        }
        default:
            raise(ErrorKind::UnsupportedSpec,
                  "operand shapes for " + kernel_kind_tag(spec.kind) +
                      " come from design buffers; pass them explicitly");
    }
}

}  // namespace cgdetail

inline SourceUnit emit_kernel(const OperatorSpec& spec, const DataType& dt,
                              const std::string& design = "design") {
    std::vector<TensorShape> in = cgdetail::self_input_shapes(spec);
    TensorShape out = infer_output_shape(spec, in);
    return emit_kernel(spec, dt, design, std::move(in), std::move(out));
}

/// Emit the self-checking testbench: loads embedded inputs, calls the top
/// function, and compares every output against embedded goldens.
inline SourceUnit emit_testbench(const DesignConfig& cfg, const TestVectors& tv) {
    using namespace cgdetail;
    const DataType& dt = cfg.synth.data_type;
    if (!dt.oracle_checkable())
        raise(ErrorKind::UnsupportedSpec,
              "cannot emit a checking testbench for opaque data types");
    for (const auto& itf : cfg.interfaces) {
        const bool need_in =
            itf.direction == Direction::In || itf.direction == Direction::Inout;
        const bool need_out =
            itf.direction == Direction::Out || itf.direction == Direction::Inout;
        if (need_in && !tv.inputs.count(itf.name))
            raise(ErrorKind::UnsupportedSpec, "missing input vector for \"" + itf.name + "\"");
        if (need_out && !tv.outputs.count(itf.name))
            raise(ErrorKind::UnsupportedSpec, "missing golden vector for \"" + itf.name + "\"");
    }
    if (tv.inputs.size() + tv.outputs.size() !=
        [&] {
            std::size_t n = 0;
            for (const auto& itf : cfg.interfaces)
                n += itf.direction == Direction::Inout ? 2 : 1;
            return n;
        }())
        raise(ErrorKind::UnsupportedSpec, "testbench vector count does not match interfaces");

    const double tol = testbench_tolerance(cfg);
    Writer w;
    w.line("/* Self-checking testbench for " + cfg.name + " (generated). */");
    w.line("#include <stdio.h>");
    w.line("#include <math.h>");
    w.blank();
    w.line("#include \"../src/kernels.h\"");
    w.blank();
    for (const auto& itf : cfg.interfaces) {
        if (itf.direction == Direction::In || itf.direction == Direction::Inout)
            emit_data_array(w, "tb_in_" + itf.name, tv.inputs.at(itf.name));
        if (itf.direction == Direction::Out || itf.direction == Direction::Inout)
            emit_data_array(w, "tb_gold_" + itf.name, tv.outputs.at(itf.name));
    }
    w.blank();
    w.open("int main(void)");
    for (const auto& itf : cfg.interfaces)
        w.line("static " + array_decl("data_t", itf.name, itf.shape, false) + ";");
    for (const MemoryDecl* m : off_chip_memories(cfg))
        w.line("static " + array_decl("data_t", m->name, m->shape, false) + ";");
    w.blank();
    for (const auto& itf : cfg.interfaces) {
        if (itf.direction == Direction::Out) continue;
        w.open_bare();
        w.line("data_t* p = " + flat_addr(itf.name, itf.shape.rank()) + ";");
        w.open("for (int i = 0; i < " + i64(itf.shape.element_count()) + "; ++i)");
        w.line("p[i] = (data_t)tb_in_" + itf.name + "[i];");
        w.close();
        w.close();
    }
    w.blank();
    std::string call = cfg.synth.top_name + "(";
    bool first = true;
    for (const auto& itf : cfg.interfaces) {
        if (!first) call += ", ";
        first = false;
        call += itf.name;
    }
    for (const MemoryDecl* m : off_chip_memories(cfg)) {
        if (!first) call += ", ";
        first = false;
        call += m->name;
    }
    call += ");";
    w.line(call);
    w.blank();
    w.line("int fail = 0;");
    w.line("double tol = " + format_double(tol) + ";");
    for (const auto& itf : cfg.interfaces) {
        if (itf.direction == Direction::In) continue;
        w.open_bare();
        w.line("const data_t* p = " + flat_addr(itf.name, itf.shape.rank()) + ";");
        w.line("double err = 0.0;");
        w.open("for (int i = 0; i < " + i64(itf.shape.element_count()) + "; ++i)");
        w.line("double e = fabs((double)p[i] - tb_gold_" + itf.name + "[i]);");
        w.line("if (e > err) err = e;");
        w.close();
        w.line("printf(\"output " + itf.name + " max abs error %.9g (tol %.9g)\\n\", err, tol);");
        w.line("if (err > tol) fail = 1;");
        w.close();
    }
    w.blank();
    w.line("printf(\"testbench %s\\n\", fail ? \"FAIL\" : \"PASS\");");
    w.line("return fail;");
    w.close();
    return SourceUnit{"tb/testbench.cpp", "testbench", w.text};
}

/// Emit the tool-control script for the given stages.  `reset` recreates the
/// project (used by the full-flow script and the first stage of a split run).
inline SourceUnit emit_build_script(const DesignConfig& cfg, const RunConfig& run,
                                   const std::vector<Stage>& stages, bool reset,
                                   const std::string& path, const std::string& role,
                                   bool has_testbench) {
    (void)run;
    cgdetail::Writer w;
    w.line("# Tool script for " + cfg.name + " (generated)");
    w.line(std::string("open_project") + (reset ? " -reset" : "") + " proj_" + cfg.name);
    w.line("set_top " + cfg.synth.top_name);
    w.line("add_files src/kernels.cpp -cflags \"-Isrc\"");
    w.line("add_files src/top.cpp -cflags \"-Isrc\"");
    if (has_testbench) w.line("add_files -tb tb/testbench.cpp -cflags \"-Isrc\"");
    w.line(std::string("open_solution") + (reset ? " -reset" : "") + " solution1");
    w.line("set_part {" + cfg.synth.part + "}");
    w.line("create_clock -period " + format_double(cfg.synth.clock_period_ns) +
           " -name default");
    for (Stage s : stages) {
        switch (s) {
            case Stage::Csim: w.line("csim_design"); break;
            case Stage::Synth: w.line("csynth_design"); break;
            case Stage::Cosim: w.line("cosim_design"); break;
            case Stage::Impl: w.line("export_design -flow impl"); break;
        }
    }
    w.line("exit");
    return SourceUnit{path, role, w.text};
}

inline SourceUnit emit_build_script(const DesignConfig& cfg, const RunConfig& run) {
    return emit_build_script(cfg, run, cfg.synth.flow, true, "scripts/run_hls.tcl",
                             "build_script", cfg.synth.data_type.oracle_checkable());
}

/// Emit the complete source bundle for a validated design.  When the element
/// type is numerically checkable, a testbench with oracle goldens (derived
/// from `seed`) is included.
inline SourceBundle emit_design(const DesignConfig& cfg, std::uint64_t seed = 0) {
    using namespace cgdetail;
    ValidationReport rep = validate_design(cfg);
    if (!rep.ok())
        raise(ErrorKind::Validation, "design fails validation: " + rep.diagnostics[0].message,
              rep.diagnostics[0].path);
    const DataType& dt = cfg.synth.data_type;
    for (const auto& m : cfg.memories)
        if (!(m.element == dt))
            raise(ErrorKind::UnsupportedSpec, "memory \"" + m.name +
                                                  "\" element type differs from the design "
                                                  "data type; mixed-type emission is "
                                                  "unsupported");
    for (const auto& itf : cfg.interfaces)
        if (!(itf.element == dt))
            raise(ErrorKind::UnsupportedSpec, "interface \"" + itf.name +
                                                  "\" element type differs from the design "
                                                  "data type; mixed-type emission is "
                                                  "unsupported");

    std::vector<KernelInstance> instances = design_instances(cfg);
    const bool need_mul = [&] {
        for (const auto& inst : instances)
            if (uses_mul_helper(inst.spec)) return true;
        return false;
    }();
    const bool need_rng = [&] {
        for (const auto& inst : instances)
            if (inst.spec.kind == KernelKind::Dropout && inst.spec.as<DropoutSpec>().p != 0.0)
                return true;
        return false;
    }();

    SourceBundle bundle;
    bundle.design = cfg.name;
    bundle.units.push_back(SourceUnit{"src/hls_compat.h", "shim", hls_compat_text()});

    // kernels.h: type alias, helpers, prototypes.
    {
        Writer w;
        const std::string guard = "FB_" + upper_ascii(cfg.name) + "_KERNELS_H";
        w.line("/* Kernel declarations for " + cfg.name + " (generated). */");
        w.line("#ifndef " + guard);
        w.line("#define " + guard);
        w.blank();
        w.line("#include \"hls_compat.h\"");
        w.blank();
        w.line("typedef " + dt.cpp_name() + " data_t;");
        w.blank();
        emit_helpers(w, need_mul, need_rng);
        for (const auto& inst : instances) w.line(signature(inst) + ";");
        w.blank();
        w.line(top_signature(cfg) + ";");
        w.blank();
        w.line("#endif /* " + guard + " */");
        bundle.units.push_back(SourceUnit{"src/kernels.h", "kernel_header", w.text});
    }

    // kernels.cpp: definitions in first-use order.
    {
        Writer w;
        w.line("/* Kernel definitions for " + cfg.name + " (generated). */");
        w.line("#include \"kernels.h\"");
        for (const auto& inst : instances) {
            w.blank();
            emit_definition(w, inst);
        }
        bundle.units.push_back(SourceUnit{"src/kernels.cpp", "kernel_body", w.text});
    }

    // top.cpp: interface pragmas, on-chip buffers, ordered calls.
    {
        Writer w;
        w.line("/* Top-level function for " + cfg.name + " (generated). */");
        w.line("#include \"kernels.h\"");
        w.blank();
        w.open(top_signature(cfg));
        int gmem = 0;
        for (const MemoryDecl* m : off_chip_memories(cfg))
            w.line("#pragma HLS interface m_axi port=" + m->name + " offset=slave bundle=gmem" +
                   std::to_string(gmem++));
        for (const auto& m : cfg.memories)
            if (m.space == MemSpace::OnChip)
                w.line("static " + array_decl("data_t", m.name, m.shape, false) +
                       ";  /* on-chip buffer */");
        for (const auto& call : cfg.calls) {
            std::string line = call_name(cfg, call) + "(";
            bool first = true;
            for (const auto& n : call.inputs) {
                if (!first) line += ", ";
                first = false;
                line += n;
            }
            for (const auto& n : call.outputs) {
                if (!first) line += ", ";
                first = false;
                line += n;
            }
            line += ");";
            w.line(line);
        }
        w.close();
        bundle.units.push_back(SourceUnit{"src/top.cpp", "top", w.text});
    }

    // Testbench with oracle goldens.
    if (dt.oracle_checkable()) {
        TestVectors tv;
        for (auto& [name, t] : make_test_vectors(cfg, seed))
            tv.inputs[name] = quantize_tensor(dt, t);
        for (auto& [name, t] : run_design(cfg, tv.inputs)) tv.outputs[name] = t;
        bundle.units.push_back(emit_testbench(cfg, tv));
    }

    // Tool scripts: full flow plus one script per stage.
    RunConfig default_run;
    bundle.units.push_back(emit_build_script(cfg, default_run));
    for (std::size_t i = 0; i < cfg.synth.flow.size(); ++i) {
        Stage s = cfg.synth.flow[i];
        bundle.units.push_back(emit_build_script(cfg, default_run, {s}, i == 0,
                                                 "scripts/" + stage_tag(s) + ".tcl",
                                                 "script_" + stage_tag(s),
                                                 dt.oracle_checkable()));
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Bundle output

inline json bundle_manifest(const SourceBundle& bundle) {
    json units = json::array();
    for (const auto& u : bundle.units)
        units.push_back(json{{"path", u.path}, {"role", u.role}, {"sha256", sha256_hex(u.text)}});
    return json{{"design", bundle.design}, {"units", units}};
}

/// Write all units plus `bundle.json` under `<out_root>/<design>/`; returns
/// the bundle directory.
inline std::filesystem::path write_bundle(const SourceBundle& bundle,
                                          const std::filesystem::path& out_root) {
    namespace fs = std::filesystem;
    const fs::path dir = out_root / bundle.design;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    auto write = [&](const fs::path& p, const std::string& text) {
        fs::create_directories(p.parent_path(), ec);
        std::ofstream f(p, std::ios::binary);
        if (!f) raise(ErrorKind::Io, "cannot write " + p.string());
        f << text;
    };
    for (const auto& u : bundle.units) write(dir / u.path, u.text);
    write(dir / "bundle.json", bundle_manifest(bundle).dump(2) + "\n");
    return dir;
}

}  // namespace forgebench
