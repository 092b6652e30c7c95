// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "forgebench/common.hpp"
#include "forgebench/config.hpp"
#include "forgebench/opspec.hpp"
#include "forgebench/tensor.hpp"

// Numeric golden model. Every operator is evaluated in float64 regardless of
// the design's target data type; generated designs are later compared against
// these values under a type-derived tolerance.

namespace forgebench {

namespace detail {

inline void require_shapes(const OperatorSpec& spec, const std::vector<const Tensor*>& ins,
                           const TensorShape& out_shape) {
    std::vector<TensorShape> in_shapes;
    in_shapes.reserve(ins.size());
    for (auto* t : ins) in_shapes.push_back(t->shape);
    check_call_shapes(spec, in_shapes, {out_shape});
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::int64_t m = a.shape.dims[0], k = a.shape.dims[1], n = b.shape.dims[1];
    Tensor c(TensorShape{m, n});
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t t = 0; t < k; ++t) acc += a.data[i * k + t] * b.data[t * n + j];
            c.data[i * n + j] = acc;
        }
    return c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Output shape inference (move excluded: its destination shape is declared,
// not derivable).

inline TensorShape infer_output_shape(const OperatorSpec& spec,
                                      const std::vector<TensorShape>& in) {
    switch (spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Chain:
            return TensorShape{1};
        case KernelKind::Matvec:
            return TensorShape{spec.as<LinearSpec>().n};
        case KernelKind::Gemm: {
            const auto& s = spec.as<LinearSpec>();
            return TensorShape{s.m, s.n};
        }
        case KernelKind::Conv: {
            const auto& s = spec.as<ConvSpec>();
            return TensorShape{s.out_ch, s.out_h(), s.out_w()};
        }
        case KernelKind::Attention: {
            const auto& s = spec.as<AttnSpec>();
            return TensorShape{s.seq_len, s.hidden};
        }
        case KernelKind::Norm:
        case KernelKind::Activation:
        case KernelKind::Dropout:
        case KernelKind::Add:
        case KernelKind::Mul:
            if (in.empty()) raise(ErrorKind::Arity, "missing input");
            return in[0];
        case KernelKind::Pool: {
            const auto& s = spec.as<PoolSpec>();
            if (in.empty() || in[0].rank() != 3)
                raise(ErrorKind::Shape, "pool input must be rank 3");
            return TensorShape{in[0].dims[0], (in[0].dims[1] - s.kernel) / s.stride + 1,
                               (in[0].dims[2] - s.kernel) / s.stride + 1};
        }
        case KernelKind::Load:
        case KernelKind::Store:
            raise(ErrorKind::Shape, "move output shape is declared, not inferred");
    }
    raise(ErrorKind::Shape, "unreachable");
}

// ---------------------------------------------------------------------------
// Linear family: dot / matvec / gemm / chain. Scheduling knobs (loop_order,
// unroll, inline_mul, assoc_order) never affect the result: one accumulation
// order, float64 throughout.

inline Tensor eval_linear(const LinearSpec& spec, const std::vector<Tensor>& operands) {
    OperatorSpec op;
    op.kind = spec.variant == LinearSpec::Variant::Dot      ? KernelKind::Dot
              : spec.variant == LinearSpec::Variant::Matvec ? KernelKind::Matvec
              : spec.variant == LinearSpec::Variant::Gemm   ? KernelKind::Gemm
                                                            : KernelKind::Chain;
    op.payload = spec;
    std::vector<const Tensor*> ptrs;
    for (auto& t : operands) ptrs.push_back(&t);
    TensorShape out_shape = infer_output_shape(op, {});
    detail::require_shapes(op, ptrs, out_shape);

    Tensor out(out_shape);
    switch (spec.variant) {
        case LinearSpec::Variant::Dot: {
            double acc = 0.0;
            for (std::int64_t t = 0; t < spec.k; ++t) acc += operands[0].data[t] * operands[1].data[t];
            if (spec.bias) acc += operands[2].data[0];
            out.data[0] = acc;
            break;
        }
        case LinearSpec::Variant::Matvec: {
            for (std::int64_t j = 0; j < spec.n; ++j) {
                double acc = 0.0;
                for (std::int64_t t = 0; t < spec.k; ++t)
                    acc += operands[0].data[t] * operands[1].data[t * spec.n + j];
                if (spec.bias) acc += operands[2].data[j];
                out.data[j] = acc;
            }
            break;
        }
        case LinearSpec::Variant::Gemm: {
            for (std::int64_t i = 0; i < spec.m; ++i)
                for (std::int64_t j = 0; j < spec.n; ++j) {
                    double acc = 0.0;
                    for (std::int64_t t = 0; t < spec.k; ++t)
                        acc += operands[0].data[i * spec.k + t] * operands[1].data[t * spec.n + j];
                    if (spec.bias) acc += operands[2].data[j];
                    out.data[i * spec.n + j] = acc;
                }
            break;
        }
        case LinearSpec::Variant::Chain: {
            // x(m) . A(m,k) . B(k,n) . y(n); fixed left-to-right accumulation.
            std::vector<double> xa(spec.k, 0.0);
            for (std::int64_t t = 0; t < spec.k; ++t)
                for (std::int64_t i = 0; i < spec.m; ++i)
                    xa[t] += operands[0].data[i] * operands[1].data[i * spec.k + t];
            std::vector<double> xab(spec.n, 0.0);
            for (std::int64_t j = 0; j < spec.n; ++j)
                for (std::int64_t t = 0; t < spec.k; ++t)
                    xab[j] += xa[t] * operands[2].data[t * spec.n + j];
            double acc = 0.0;
            for (std::int64_t j = 0; j < spec.n; ++j) acc += xab[j] * operands[3].data[j];
            if (spec.bias) acc += operands[4].data[0];
            out.data[0] = acc;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grouped 2-D convolution (cross-correlation), zero padding.

inline Tensor eval_conv(const ConvSpec& spec, const Tensor& input, const Tensor& weights,
                        const Tensor* bias = nullptr) {
    OperatorSpec op{KernelKind::Conv, spec};
    std::vector<const Tensor*> ptrs = {&input, &weights};
    if (spec.bias) {
        if (!bias) raise(ErrorKind::Arity, "conv bias enabled but not supplied");
        ptrs.push_back(bias);
    }
    TensorShape out_shape{spec.out_ch, spec.out_h(), spec.out_w()};
    detail::require_shapes(op, ptrs, out_shape);

    const std::int64_t icg = spec.in_ch / spec.groups;
    const std::int64_t ocg = spec.out_ch / spec.groups;
    Tensor out(out_shape);
    for (std::int64_t oc = 0; oc < spec.out_ch; ++oc) {
        const std::int64_t g = oc / ocg;
        for (std::int64_t oy = 0; oy < spec.out_h(); ++oy)
            for (std::int64_t ox = 0; ox < spec.out_w(); ++ox) {
                double acc = 0.0;
                for (std::int64_t ic = 0; ic < icg; ++ic)
                    for (std::int64_t ky = 0; ky < spec.kernel; ++ky)
                        for (std::int64_t kx = 0; kx < spec.kernel; ++kx) {
                            const std::int64_t iy = oy * spec.stride - spec.padding + ky;
                            const std::int64_t ix = ox * spec.stride - spec.padding + kx;
                            if (iy < 0 || iy >= spec.h || ix < 0 || ix >= spec.w) continue;
                            acc += input.at({g * icg + ic, iy, ix}) *
                                   weights.at({oc, ic, ky, kx});
                        }
                if (spec.bias) acc += bias->data[oc];
                out.at({oc, oy, ox}) = acc;
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization. BatchNorm is inference-form (stats supplied), channel axis 0;
// LayerNorm/RMSNorm act over the last axis with population (biased) variance.

inline Tensor eval_norm(const NormSpec& spec, const Tensor& x, const Tensor* gamma = nullptr,
                        const Tensor* beta = nullptr, const Tensor* mean = nullptr,
                        const Tensor* var = nullptr) {
    OperatorSpec op{KernelKind::Norm, spec};
    std::vector<const Tensor*> ptrs = {&x};
    if (spec.affine) {
        if (!gamma) raise(ErrorKind::Arity, "affine norm requires gamma");
        ptrs.push_back(gamma);
        if (spec.kind != NormKind::RmsNorm) {
            if (!beta) raise(ErrorKind::Arity, "affine norm requires beta");
            ptrs.push_back(beta);
        }
    }
    if (spec.kind == NormKind::BatchNorm) {
        if (!mean || !var) raise(ErrorKind::Arity, "batchnorm requires mean and var");
        ptrs.push_back(mean);
        ptrs.push_back(var);
    }
    detail::require_shapes(op, ptrs, x.shape);

    Tensor out(x.shape);
    if (spec.kind == NormKind::BatchNorm) {
        const std::int64_t ch = x.shape.dims[0];
        const std::int64_t per = x.size() / ch;
        for (std::int64_t c = 0; c < ch; ++c) {
            const double inv = 1.0 / std::sqrt(var->data[c] + spec.epsilon);
            const double g = spec.affine ? gamma->data[c] : 1.0;
            const double b = spec.affine ? beta->data[c] : 0.0;
            for (std::int64_t i = 0; i < per; ++i) {
                const std::int64_t a = c * per + i;
                out.data[a] = g * (x.data[a] - mean->data[c]) * inv + b;
            }
        }
        return out;
    }

    const std::int64_t width = x.shape.dims.back();
    const std::int64_t rows = x.size() / width;
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* row = x.data.data() + r * width;
        double* dst = out.data.data() + r * width;
        if (spec.kind == NormKind::LayerNorm) {
            double m = 0.0;
            for (std::int64_t j = 0; j < width; ++j) m += row[j];
            m /= width;
            double v = 0.0;
            for (std::int64_t j = 0; j < width; ++j) v += (row[j] - m) * (row[j] - m);
            v /= width;
            const double inv = 1.0 / std::sqrt(v + spec.epsilon);
            for (std::int64_t j = 0; j < width; ++j) {
                double y = (row[j] - m) * inv;
                if (spec.affine) y = y * gamma->data[j] + beta->data[j];
                dst[j] = y;
            }
        } else {  // RmsNorm
            double ms = 0.0;
            for (std::int64_t j = 0; j < width; ++j) ms += row[j] * row[j];
            ms /= width;
            const double inv = 1.0 / std::sqrt(ms + spec.epsilon);
            for (std::int64_t j = 0; j < width; ++j) {
                double y = row[j] * inv;
                if (spec.affine) y *= gamma->data[j];
                dst[j] = y;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Activations

inline double activation_scalar(ActKind kind, double x) {
    switch (kind) {
        case ActKind::Relu: return x > 0.0 ? x : 0.0;
        case ActKind::Relu6: return std::min(std::max(x, 0.0), 6.0);
        case ActKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case ActKind::Tanh: return std::tanh(x);
        case ActKind::Elu: return x > 0.0 ? x : std::expm1(x);
        case ActKind::Silu: return x / (1.0 + std::exp(-x));
        case ActKind::Gelu:
            return 0.5 * x * (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
        case ActKind::HardSigmoid: return std::min(std::max(x / 6.0 + 0.5, 0.0), 1.0);
        case ActKind::HardSwish: return x * std::min(std::max(x / 6.0 + 0.5, 0.0), 1.0);
        case ActKind::Exp: return std::exp(x);
        case ActKind::Softmax: raise(ErrorKind::Shape, "softmax is not a scalar function");
    }
    return x;
}

inline Tensor eval_activation(ActKind kind, const Tensor& x) {
    Tensor out(x.shape);
    if (kind == ActKind::Softmax) {
        const std::int64_t width = x.shape.dims.back();
        const std::int64_t rows = x.size() / width;
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* row = x.data.data() + r * width;
            double* dst = out.data.data() + r * width;
            double mx = row[0];
            for (std::int64_t j = 1; j < width; ++j) mx = std::max(mx, row[j]);
            double sum = 0.0;
            for (std::int64_t j = 0; j < width; ++j) {
                dst[j] = std::exp(row[j] - mx);
                sum += dst[j];
            }
            for (std::int64_t j = 0; j < width; ++j) dst[j] /= sum;
        }
        return out;
    }
    for (std::int64_t i = 0; i < x.size(); ++i) out.data[i] = activation_scalar(kind, x.data[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Rotary position embedding. Pairs (2i, 2i+1) of each head_dim block rotate by
// angle pos * theta_i with theta_i = base^(-2i/head_dim).

inline Tensor eval_rope(const Tensor& x, const std::vector<std::int64_t>& positions,
                        std::int64_t head_dim, double base = 10000.0) {
    if (x.shape.rank() != 2)
        raise(ErrorKind::Shape, "rope input must be rank 2 (rows of head vectors)");
    const std::int64_t rows = x.shape.dims[0], width = x.shape.dims[1];
    if (head_dim < 2 || head_dim % 2 != 0)
        raise(ErrorKind::Shape, "head_dim must be even and >= 2, got " + std::to_string(head_dim));
    if (width % head_dim != 0)
        raise(ErrorKind::Shape, "row width " + std::to_string(width) +
                                    " not a multiple of head_dim " + std::to_string(head_dim));
    if (static_cast<std::int64_t>(positions.size()) != rows)
        raise(ErrorKind::Shape, "positions length must equal row count");

    Tensor out(x.shape);
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t blk = 0; blk < width / head_dim; ++blk) {
            for (std::int64_t i = 0; i < head_dim / 2; ++i) {
                const double theta = std::pow(base, -2.0 * double(i) / double(head_dim));
                const double angle = double(positions[r]) * theta;
                const double c = std::cos(angle), s = std::sin(angle);
                const std::int64_t a = r * width + blk * head_dim + 2 * i;
                const double x0 = x.data[a], x1 = x.data[a + 1];
                out.data[a] = x0 * c - x1 * s;
                out.data[a + 1] = x0 * s + x1 * c;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Attention with grouped kv heads, causal masking, optional sliding window and
// rotary embeddings. q/k/v are L x d token matrices (self-attention passes the
// same tensor three times).

inline Tensor eval_attention(const AttnSpec& spec, const Tensor& q, const Tensor& k,
                             const Tensor& v, const Tensor& wq, const Tensor& wk,
                             const Tensor& wv, const Tensor& wo, double rope_base = 10000.0) {
    OperatorSpec op{KernelKind::Attention, spec};
    detail::require_shapes(op, {&q, &k, &v, &wq, &wk, &wv, &wo},
                           TensorShape{spec.seq_len, spec.hidden});

    const std::int64_t L = spec.seq_len, d = spec.hidden, h = spec.heads, g = spec.kv_groups;
    const std::int64_t hd = spec.head_dim();
    const std::int64_t share = h / g;

    Tensor Q = detail::matmul(q, wq);   // L x d
    Tensor K = detail::matmul(k, wk);   // L x g*hd
    Tensor V = detail::matmul(v, wv);   // L x g*hd

    if (spec.with_rope) {
        std::vector<std::int64_t> pos(L);
        for (std::int64_t i = 0; i < L; ++i) pos[i] = i;
        Q = eval_rope(Q, pos, hd, rope_base);
        K = eval_rope(K, pos, hd, rope_base);
    }

    const double scale = 1.0 / std::sqrt(double(hd));
    Tensor ctx(TensorShape{L, d});
    std::vector<double> scores(L);
    for (std::int64_t head = 0; head < h; ++head) {
        const std::int64_t kv = head / share;
        const std::int64_t qoff = head * hd, koff = kv * hd;
        for (std::int64_t a = 0; a < L; ++a) {
            const std::int64_t lo =
                spec.window ? std::max<std::int64_t>(0, a - *spec.window + 1) : 0;
            double mx = -1e300;
            for (std::int64_t b = lo; b <= a; ++b) {
                double dot = 0.0;
                for (std::int64_t t = 0; t < hd; ++t)
                    dot += Q.data[a * d + qoff + t] * K.data[b * (g * hd) + koff + t];
                scores[b] = dot * scale;
                mx = std::max(mx, scores[b]);
            }
            double sum = 0.0;
            for (std::int64_t b = lo; b <= a; ++b) {
                scores[b] = std::exp(scores[b] - mx);
                sum += scores[b];
            }
            for (std::int64_t t = 0; t < hd; ++t) {
                double acc = 0.0;
                for (std::int64_t b = lo; b <= a; ++b)
                    acc += (scores[b] / sum) * V.data[b * (g * hd) + koff + t];
                ctx.data[a * d + qoff + t] = acc;
            }
        }
    }
    return detail::matmul(ctx, wo);  // L x d
}

// ---------------------------------------------------------------------------
// Dropout: counter-based generator keyed by (seed, flat index); kept entries
// scaled by 1/(1-p). Bit-reproducible in emitted testbenches.

inline Tensor eval_dropout(const Tensor& x, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p < 1.0)) raise(ErrorKind::Validation, "dropout p must be in [0, 1)");
    Tensor out(x.shape);
    const double scale = 1.0 / (1.0 - p);
    for (std::int64_t i = 0; i < x.size(); ++i) {
        const double u = draw_unit(keyed_draw(seed, static_cast<std::uint64_t>(i)));
        out.data[i] = u >= p ? x.data[i] * scale : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pooling: per-channel windows, no padding.

inline Tensor eval_pool(const PoolSpec& spec, const Tensor& input) {
    OperatorSpec op{KernelKind::Pool, spec};
    TensorShape out_shape = infer_output_shape(op, {input.shape});
    detail::require_shapes(op, {&input}, out_shape);

    Tensor out(out_shape);
    const std::int64_t oh = out_shape.dims[1], ow = out_shape.dims[2];
    for (std::int64_t c = 0; c < out_shape.dims[0]; ++c)
        for (std::int64_t oy = 0; oy < oh; ++oy)
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                double best = -1e300, sum = 0.0;
                for (std::int64_t ky = 0; ky < spec.kernel; ++ky)
                    for (std::int64_t kx = 0; kx < spec.kernel; ++kx) {
                        const double v =
                            input.at({c, oy * spec.stride + ky, ox * spec.stride + kx});
                        best = std::max(best, v);
                        sum += v;
                    }
                out.at({c, oy, ox}) = spec.kind == PoolKind::Max
                                          ? best
                                          : sum / double(spec.kernel * spec.kernel);
            }
    return out;
}

// ---------------------------------------------------------------------------
// Elementwise and data movement

inline Tensor eval_elementwise(ElemwiseKind kind, const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape)
        raise(ErrorKind::Shape, "elementwise operands must have equal shapes, got " +
                                    a.shape.str() + " vs " + b.shape.str());
    Tensor out(a.shape);
    for (std::int64_t i = 0; i < a.size(); ++i)
        out.data[i] = kind == ElemwiseKind::Add ? a.data[i] + b.data[i] : a.data[i] * b.data[i];
    return out;
}

/// Pure subtensor extraction (the standalone view of load/store).
inline Tensor eval_move(MoveDir, const Tensor& src, const Region& region) {
    check_region(src.shape, region, "move");
    Tensor out(TensorShape{region.shape});
    copy_region(src, region.offset, out, std::vector<std::int64_t>(region.shape.size(), 0),
                region.shape);
    return out;
}

// ---------------------------------------------------------------------------
// Single-call dispatch. `current_out` supplies the declared output buffer;
// move kernels update it in place (partial write), everything else replaces it.

inline Tensor eval_call(const OperatorSpec& spec, const std::vector<Tensor>& ins,
                        const Tensor* current_out = nullptr) {
    auto at = [&](std::size_t i) -> const Tensor& { return ins.at(i); };
    Tensor out;
    switch (spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
        case KernelKind::Chain:
            out = eval_linear(spec.as<LinearSpec>(), ins);
            break;
        case KernelKind::Conv: {
            const auto& s = spec.as<ConvSpec>();
            out = eval_conv(s, at(0), at(1), s.bias ? &at(2) : nullptr);
            break;
        }
        case KernelKind::Attention:
            out = eval_attention(spec.as<AttnSpec>(), at(0), at(1), at(2), at(3), at(4), at(5),
                                 at(6));
            break;
        case KernelKind::Norm: {
            const auto& s = spec.as<NormSpec>();
            std::size_t i = 1;
            const Tensor* gamma = s.affine ? &at(i++) : nullptr;
            const Tensor* beta =
                (s.affine && s.kind != NormKind::RmsNorm) ? &at(i++) : nullptr;
            const Tensor* mean = s.kind == NormKind::BatchNorm ? &at(i++) : nullptr;
            const Tensor* var = s.kind == NormKind::BatchNorm ? &at(i++) : nullptr;
            out = eval_norm(s, at(0), gamma, beta, mean, var);
            break;
        }
        case KernelKind::Activation:
            out = eval_activation(spec.as<ActSpec>().kind, at(0));
            break;
        case KernelKind::Pool:
            out = eval_pool(spec.as<PoolSpec>(), at(0));
            break;
        case KernelKind::Dropout: {
            const auto& s = spec.as<DropoutSpec>();
            out = eval_dropout(at(0), s.p, s.seed);
            break;
        }
        case KernelKind::Add:
        case KernelKind::Mul:
            out = eval_elementwise(spec.as<ElemwiseSpec>().kind, at(0), at(1));
            break;
        case KernelKind::Load:
        case KernelKind::Store: {
            const auto& s = spec.as<MoveSpec>();
            if (!current_out)
                raise(ErrorKind::Shape, "move requires the declared destination buffer");
            std::vector<TensorShape> in_shapes = {at(0).shape};
            check_call_shapes(spec, in_shapes, {current_out->shape});
            out = *current_out;
            copy_region(at(0), s.src_offset, out, s.dst_offset, s.shape);
            break;
        }
    }
    if (!out.all_finite())
        raise(ErrorKind::Oracle, kernel_kind_tag(spec.kind) + " produced non-finite values");
    return out;
}

// ---------------------------------------------------------------------------
// Whole-design execution over a buffer environment. Memories and out
// interfaces materialize as zeros; in/inout interfaces come from bindings.
// Returns every out/inout interface after the final call.

inline std::map<std::string, Tensor> run_design(const DesignConfig& cfg,
                                                const std::map<std::string, Tensor>& bindings) {
    std::map<std::string, Tensor> env;
    for (auto& m : cfg.memories) env.emplace(m.name, Tensor::zeros(m.shape));
    for (auto& d : cfg.interfaces) {
        if (d.direction == Direction::Out) {
            env.emplace(d.name, Tensor::zeros(d.shape));
            continue;
        }
        auto it = bindings.find(d.name);
        if (it == bindings.end())
            raise(ErrorKind::Validation, "missing binding for interface \"" + d.name + "\"");
        if (it->second.shape != d.shape)
            raise(ErrorKind::Validation, "binding for \"" + d.name + "\" has shape " +
                                             it->second.shape.str() + ", declared " + d.shape.str());
        env.emplace(d.name, it->second);
    }
    for (auto& [name, t] : bindings) {
        auto* decl = cfg.find_interface(name);
        if (!decl || decl->direction == Direction::Out)
            raise(ErrorKind::Validation, "binding \"" + name + "\" is not an in/inout interface");
    }

    for (std::size_t i = 0; i < cfg.calls.size(); ++i) {
        const ModuleCall& call = cfg.calls[i];
        try {
            std::vector<Tensor> ins;
            ins.reserve(call.inputs.size());
            for (auto& n : call.inputs) ins.push_back(env.at(n));
            Tensor& dst = env.at(call.outputs.at(0));
            dst = eval_call(call.spec, ins, &dst);
        } catch (const Error& e) {
            throw Error(e.kind(), e.message(), "calls[" + std::to_string(i) + "]");
        }
    }

    std::map<std::string, Tensor> out;
    for (auto& d : cfg.interfaces)
        if (d.direction != Direction::In) out.emplace(d.name, env.at(d.name));
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic test-vector synthesis for a design's bound interfaces.
// Distributions are role-aware so float32 re-execution stays within the
// testbench tolerance: variance-like inputs stay away from zero, projection
// and chain matrices are scaled down to keep accumulations O(1).

inline std::map<std::string, Tensor> make_test_vectors(const DesignConfig& cfg,
                                                       std::uint64_t seed = 0) {
    struct Range {
        double lo = -0.5, hi = 0.5;
    };
    std::map<std::string, Range> roles;

    auto assign = [&](const std::string& buffer, double lo, double hi) {
        roles.emplace(buffer, Range{lo, hi});  // first role wins
    };

    for (auto& call : cfg.calls) {
        const auto& in = call.inputs;
        switch (call.spec.kind) {
            case KernelKind::Norm: {
                const auto& s = call.spec.as<NormSpec>();
                std::size_t i = 1;
                if (s.affine) {
                    assign(in[i++], 0.75, 1.25);  // gamma
                    if (s.kind != NormKind::RmsNorm) assign(in[i++], -0.25, 0.25);  // beta
                }
                if (s.kind == NormKind::BatchNorm) {
                    assign(in[i++], -0.5, 0.5);  // mean
                    assign(in[i++], 0.25, 1.25);  // var
                }
                break;
            }
            case KernelKind::Chain: {
                const auto& s = call.spec.as<LinearSpec>();
                assign(in[1], -0.5 / double(s.m), 0.5 / double(s.m));  // A
                assign(in[2], -0.5 / double(s.k), 0.5 / double(s.k));  // B
                assign(in[3], -0.5 / double(s.n), 0.5 / double(s.n));  // y
                break;
            }
            case KernelKind::Attention: {
                const double w = 1.0 / double(call.spec.as<AttnSpec>().hidden);
                for (int i4 = 3; i4 <= 6; ++i4) assign(in[i4], -w, w);  // wq..wo
                break;
            }
            default:
                break;
        }
    }

    std::map<std::string, Tensor> vectors;
    for (auto& d : cfg.interfaces) {
        if (d.direction == Direction::Out) continue;
        Range r;
        if (auto it = roles.find(d.name); it != roles.end()) r = it->second;
        const std::uint64_t key = fnv1a64(cfg.name + "/" + d.name) ^ seed;
        Tensor t(d.shape);
        for (std::int64_t i = 0; i < t.size(); ++i)
            t.data[i] = r.lo + (r.hi - r.lo) * draw_unit(keyed_draw(key, i));
        vectors.emplace(d.name, std::move(t));
    }
    return vectors;
}

/// Small-integer vectors: every value is an integer in [-range, range], so all
/// float64 sums and products along any evaluation order are exact. Used for
/// bit-exactness checks (tiling equivalence, modularized fidelity).
inline std::map<std::string, Tensor> make_integer_test_vectors(const DesignConfig& cfg,
                                                               std::uint64_t seed = 0,
                                                               int range = 3) {
    std::map<std::string, Tensor> vectors;
    for (auto& d : cfg.interfaces) {
        if (d.direction == Direction::Out) continue;
        const std::uint64_t key = fnv1a64(cfg.name + "/" + d.name) ^ seed;
        Tensor t(d.shape);
        const int span = 2 * range + 1;
        for (std::int64_t i = 0; i < t.size(); ++i)
            t.data[i] = double(static_cast<int>(keyed_draw(key, i) % span) - range);
        vectors.emplace(d.name, std::move(t));
    }
    return vectors;
}

}  // namespace forgebench
