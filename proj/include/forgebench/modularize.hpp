// SPDX-License-Identifier: Apache-2.0
//
// Shared-tile planning across program families and emission of modularized
// designs: pick one tile kernel several programs can share (componentwise-gcd
// minimum or componentwise-max single-shot tiles), schedule each program as a
// grid of tile iterations, and rewrite the programs as one DesignConfig whose
// calls stream tile operands through that single shared kernel.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forgebench/codegen.hpp"
#include "forgebench/config.hpp"
#include "forgebench/opspec.hpp"

namespace forgebench {

// ---------------------------------------------------------------------------
// Planning types

/// Per-family dimension tuple: gemm (m,k,n); conv (in_ch,out_ch,h,w);
/// attention (heads). All entries >= 1; arity is fixed within a comparison.
using DimTuple = std::vector<std::int64_t>;

enum class TilePolicy {
    MinGcd,  // tile dim = gcd over programs; smallest shared tile, most iterations
    MaxFit,  // tile dim = max over programs; every program fits in one iteration
};

inline const char* tile_policy_tag(TilePolicy p) {
    return p == TilePolicy::MinGcd ? "min_gcd" : "max_fit";
}

inline TilePolicy tile_policy_from_tag(const std::string& tag, const std::string& path = "") {
    if (tag == "min_gcd") return TilePolicy::MinGcd;
    if (tag == "max_fit") return TilePolicy::MaxFit;
    raise(ErrorKind::Schema, "unknown tile policy \"" + tag + "\" (want min_gcd or max_fit)", path);
}

struct TileSpec {
    DimTuple tile;
    TilePolicy policy = TilePolicy::MinGcd;

    bool operator==(const TileSpec&) const = default;
};

/// One program's schedule under a shared tile: how many tile iterations per
/// dimension and how much zero padding the tiled extent adds beyond the
/// program's own extent (grid[i] * tile[i] - dims[i]).
struct ProgramSchedule {
    std::string id;
    DimTuple dims;
    DimTuple grid;
    DimTuple padding;
    std::int64_t iterations = 1;       // product of grid
    std::int64_t modeled_latency = 1;  // iterations * work units per tile

    bool operator==(const ProgramSchedule&) const = default;
};

struct ModularPlan {
    TileSpec shared;
    std::vector<ProgramSchedule> per_program;

    /// Work units per tile invocation: the product of the tile dims, the
    /// grid-level latency model used for iteration-latency accounting.
    std::int64_t work_units() const {
        std::int64_t w = 1;
        for (auto d : shared.tile) w *= d;
        return w;
    }

    bool operator==(const ModularPlan&) const = default;
};

// ---------------------------------------------------------------------------
// Tile selection

namespace mzdetail {

inline void check_programs(const std::vector<DimTuple>& programs, std::size_t min_count) {
    if (programs.size() < min_count)
        raise(ErrorKind::Arity, "tile selection needs at least " + std::to_string(min_count) +
                                    " programs, got " + std::to_string(programs.size()));
    const std::size_t arity = programs.front().size();
    if (arity == 0) raise(ErrorKind::Arity, "program dimension tuples must be non-empty");
    for (std::size_t i = 0; i < programs.size(); ++i) {
        if (programs[i].size() != arity)
            raise(ErrorKind::Arity, "programs[" + std::to_string(i) + "] has arity " +
                                        std::to_string(programs[i].size()) + ", expected " +
                                        std::to_string(arity));
        for (std::size_t d = 0; d < arity; ++d)
            if (programs[i][d] < 1)
                raise(ErrorKind::Arity, "programs[" + std::to_string(i) + "][" +
                                            std::to_string(d) + "] must be >= 1");
    }
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace mzdetail

/// Componentwise gcd over two or more equal-arity programs: the largest tile
/// that divides every program exactly, so min_gcd grids never need padding.
inline TileSpec min_tile(const std::vector<DimTuple>& programs) {
    mzdetail::check_programs(programs, 2);
    DimTuple tile = programs.front();
    for (std::size_t i = 1; i < programs.size(); ++i)
        for (std::size_t d = 0; d < tile.size(); ++d)
            tile[d] = std::gcd(tile[d], programs[i][d]);
    return TileSpec{std::move(tile), TilePolicy::MinGcd};
}

/// Componentwise maximum: the smallest tile in which every program computes in
/// a single iteration, padding each smaller program's operands with zeros.
inline TileSpec max_tile(const std::vector<DimTuple>& programs) {
    mzdetail::check_programs(programs, 2);
    DimTuple tile = programs.front();
    for (std::size_t i = 1; i < programs.size(); ++i)
        for (std::size_t d = 0; d < tile.size(); ++d)
            tile[d] = std::max(tile[d], programs[i][d]);
    return TileSpec{std::move(tile), TilePolicy::MaxFit};
}

/// Number of tile invocations needed to cover one program: the product over
/// dims of ceil(program / tile). Non-dividing tiles cover the remainder with
/// zero-padded boundary tiles, so ceil is exact coverage. A max_fit tile must
/// contain the program outright (one iteration); anything smaller violates
/// that policy.
inline std::int64_t iteration_count(const DimTuple& program, const TileSpec& ts) {
    if (program.size() != ts.tile.size())
        raise(ErrorKind::Arity, "program arity " + std::to_string(program.size()) +
                                    " does not match tile arity " + std::to_string(ts.tile.size()));
    for (std::size_t d = 0; d < program.size(); ++d) {
        if (ts.tile[d] < 1)
            raise(ErrorKind::Policy, "tile[" + std::to_string(d) + "] must be >= 1");
        if (program[d] < 1)
            raise(ErrorKind::Policy, "program[" + std::to_string(d) + "] must be >= 1");
        if (ts.policy == TilePolicy::MaxFit && ts.tile[d] < program[d])
            raise(ErrorKind::Policy, "max_fit tile[" + std::to_string(d) + "]=" +
                                         std::to_string(ts.tile[d]) + " smaller than program dim " +
                                         std::to_string(program[d]));
    }
    if (ts.policy == TilePolicy::MaxFit) return 1;
    std::int64_t count = 1;
    for (std::size_t d = 0; d < program.size(); ++d)
        count *= mzdetail::ceil_div(program[d], ts.tile[d]);
    return count;
}

/// Plans a shared tile for the given programs and schedules each program's
/// iteration grid against it. A single program degenerates to its own dims as
/// the tile (one iteration, no padding) under either policy.
inline ModularPlan plan_shared(const std::vector<std::pair<std::string, DimTuple>>& programs,
                               TilePolicy policy) {
    std::vector<DimTuple> dims;
    dims.reserve(programs.size());
    for (auto& [id, d] : programs) dims.push_back(d);

    ModularPlan plan;
    if (programs.size() == 1) {
        mzdetail::check_programs(dims, 1);
        plan.shared = TileSpec{dims.front(), policy};
    } else {
        plan.shared = policy == TilePolicy::MinGcd ? min_tile(dims) : max_tile(dims);
    }

    const std::int64_t work = [&] {
        std::int64_t w = 1;
        for (auto d : plan.shared.tile) w *= d;
        return w;
    }();

    for (auto& [id, d] : programs) {
        ProgramSchedule s;
        s.id = id;
        s.dims = d;
        s.iterations = 1;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const std::int64_t g = plan.shared.policy == TilePolicy::MaxFit
                                       ? 1
                                       : mzdetail::ceil_div(d[i], plan.shared.tile[i]);
            s.grid.push_back(g);
            s.padding.push_back(g * plan.shared.tile[i] - d[i]);
            s.iterations *= g;
        }
        s.modeled_latency = s.iterations * work;
        plan.per_program.push_back(std::move(s));
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Plan serialization (plan.json)

inline json plan_to_json(const ModularPlan& plan) {
    json j;
    j["policy"] = tile_policy_tag(plan.shared.policy);
    j["tile"] = plan.shared.tile;
    j["work_units_per_iteration"] = plan.work_units();
    j["programs"] = json::array();
    for (auto& p : plan.per_program) {
        j["programs"].push_back({{"id", p.id},
                                 {"dims", p.dims},
                                 {"grid", p.grid},
                                 {"padding", p.padding},
                                 {"iterations", p.iterations},
                                 {"modeled_latency", p.modeled_latency}});
    }
    return j;
}

inline json plan_to_json(const ModularPlan& plan, const OperatorSpec& tile_kernel) {
    json j = plan_to_json(plan);
    j["shared_kernel"] = {{"kernel", kernel_kind_tag(tile_kernel.kind)},
                          {"params", operator_spec_params_json(tile_kernel)}};
    j["shared_kernel_hash"] = operator_spec_hash8(tile_kernel);
    return j;
}

inline ModularPlan plan_from_json(const json& j, const std::string& path = "") {
    ObjReader r(j, path);
    ModularPlan plan;
    plan.shared.policy =
        tile_policy_from_tag(r.get<std::string>("policy"), ObjReader::join(path, "policy"));
    plan.shared.tile = r.get<std::vector<std::int64_t>>("tile");
    const json* progs = r.raw_opt("programs");
    if (!progs || !progs->is_array())
        raise(ErrorKind::Schema, "programs must be an array", ObjReader::join(path, "programs"));
    for (std::size_t i = 0; i < progs->size(); ++i) {
        std::string ppath = ObjReader::join(path, "programs[" + std::to_string(i) + "]");
        ObjReader pr((*progs)[i], ppath);
        ProgramSchedule s;
        s.id = pr.get<std::string>("id");
        s.dims = pr.get<std::vector<std::int64_t>>("dims");
        s.grid = pr.get<std::vector<std::int64_t>>("grid");
        s.padding = pr.get<std::vector<std::int64_t>>("padding");
        s.iterations = pr.get<std::int64_t>("iterations");
        s.modeled_latency = pr.get<std::int64_t>("modeled_latency");
        plan.per_program.push_back(std::move(s));
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Program dims from operator specs

/// The dimension tuple tiling operates over, per kernel family.
inline DimTuple program_dims(const OperatorSpec& spec) {
    switch (spec.kind) {
        case KernelKind::Gemm: {
            const auto& s = spec.as<LinearSpec>();
            return {s.m, s.k, s.n};
        }
        case KernelKind::Conv: {
            const auto& s = spec.as<ConvSpec>();
            return {s.in_ch, s.out_ch, s.h, s.w};
        }
        case KernelKind::Attention:
            return {spec.as<AttnSpec>().heads};
        default:
            raise(ErrorKind::UnsupportedSpec,
                  std::string("kernel \"") + kernel_kind_tag(spec.kind) +
                      "\" has no tiling dimension tuple");
    }
}

// ---------------------------------------------------------------------------
// Modular design emission

namespace mzdetail {

/// All base programs must be the same kernel family; returns that family.
/// Only gemm and conv have tile-kernel emission; attention planning stops at
/// the schedule (its shared tile is a head-count kernel, emitted elsewhere).
inline KernelKind check_family(const std::vector<OperatorSpec>& base) {
    if (base.empty()) raise(ErrorKind::Arity, "modular emission needs at least one program");
    KernelKind family = base.front().kind;
    for (std::size_t i = 1; i < base.size(); ++i)
        if (base[i].kind != family)
            raise(ErrorKind::FamilyMismatch,
                  std::string("programs[") + std::to_string(i) + "] is kernel \"" +
                      kernel_kind_tag(base[i].kind) + "\" but programs[0] is \"" +
                      kernel_kind_tag(family) + "\"");
    if (family == KernelKind::Attention)
        raise(ErrorKind::UnsupportedSpec,
              "attention modularization is plan-only; emit the head-tiled kernel directly");
    if (family != KernelKind::Gemm && family != KernelKind::Conv)
        raise(ErrorKind::UnsupportedSpec,
              std::string("modular emission supports gemm and conv families, not \"") +
                  kernel_kind_tag(family) + "\"");
    return family;
}

/// Incrementally assembled design: buffers registered on first use, calls in
/// program order. Buffer name collisions are config bugs and raise.
struct DesignBuilder {
    DesignConfig cfg;
    std::set<std::string> names;

    explicit DesignBuilder(std::string name) { cfg.name = std::move(name); }

    void reserve(const std::string& n) {
        if (!names.insert(n).second)
            raise(ErrorKind::Schema, "buffer name \"" + n + "\" collides; rename the program");
    }

    void interface(const std::string& n, Direction dir, TensorShape shape) {
        reserve(n);
        InterfaceDecl d;
        d.name = n;
        d.direction = dir;
        d.shape = std::move(shape);
        cfg.interfaces.push_back(std::move(d));
    }

    void memory(const std::string& n, TensorShape shape) {
        if (names.count(n)) return;  // tile scratch shared across programs
        names.insert(n);
        MemoryDecl m;
        m.name = n;
        m.space = MemSpace::OnChip;
        m.shape = std::move(shape);
        cfg.memories.push_back(std::move(m));
    }

    void call(OperatorSpec spec, std::vector<std::string> ins, std::vector<std::string> outs) {
        cfg.calls.push_back(ModuleCall{std::move(spec), std::move(ins), std::move(outs)});
    }

    void load(const std::string& src, std::vector<std::int64_t> src_offset,
              std::vector<std::int64_t> shape, const std::string& dst) {
        MoveSpec m;
        m.direction = MoveDir::Load;
        m.shape = std::move(shape);
        m.src_offset = std::move(src_offset);
        m.dst_offset.assign(m.shape.size(), 0);
        call(OperatorSpec{KernelKind::Load, m}, {src}, {dst});
    }

    void store(const std::string& src, std::vector<std::int64_t> shape, const std::string& dst,
               std::vector<std::int64_t> dst_offset) {
        MoveSpec m;
        m.direction = MoveDir::Store;
        m.shape = std::move(shape);
        m.src_offset.assign(m.shape.size(), 0);
        m.dst_offset = std::move(dst_offset);
        call(OperatorSpec{KernelKind::Store, m}, {src}, {dst});
    }

    void add(const std::string& a, const std::string& b, const std::string& out) {
        call(OperatorSpec{KernelKind::Add, ElemwiseSpec{ElemwiseKind::Add}}, {a, b}, {out});
    }
};

/// Verifies a schedule matches what plan_shared would produce for its dims;
/// hand-built plans must still satisfy the policy invariants.
inline void check_schedule(const ProgramSchedule& s, const TileSpec& shared, std::size_t index) {
    const std::string where = "per_program[" + std::to_string(index) + "]";
    if (s.dims.size() != shared.tile.size() || s.grid.size() != shared.tile.size() ||
        s.padding.size() != shared.tile.size())
        raise(ErrorKind::Arity, where + " arity does not match the shared tile");
    std::int64_t iters = 1;
    for (std::size_t d = 0; d < s.dims.size(); ++d) {
        if (s.dims[d] < 1 || shared.tile[d] < 1)
            raise(ErrorKind::Policy, where + " has non-positive dims");
        const std::int64_t g = shared.policy == TilePolicy::MaxFit
                                   ? 1
                                   : ceil_div(s.dims[d], shared.tile[d]);
        if (shared.policy == TilePolicy::MaxFit && shared.tile[d] < s.dims[d])
            raise(ErrorKind::Policy, where + ": max_fit tile smaller than program dim " +
                                         std::to_string(d));
        if (s.grid[d] != g)
            raise(ErrorKind::Policy, where + ".grid[" + std::to_string(d) + "] is " +
                                         std::to_string(s.grid[d]) + ", schedule requires " +
                                         std::to_string(g));
        if (s.padding[d] != g * shared.tile[d] - s.dims[d])
            raise(ErrorKind::Policy, where + ".padding[" + std::to_string(d) + "] is " +
                                         std::to_string(s.padding[d]) + ", schedule requires " +
                                         std::to_string(g * shared.tile[d] - s.dims[d]));
        iters *= g;
    }
    if (s.iterations != iters)
        raise(ErrorKind::Policy, where + ".iterations is " + std::to_string(s.iterations) +
                                     ", schedule requires " + std::to_string(iters));
}

/// The one kernel every program's iterations invoke. Scheduling knobs are
/// carried over from the first program so the shared kernel keeps its style.
inline OperatorSpec tile_kernel_spec(KernelKind family, const TileSpec& shared,
                                     const std::vector<OperatorSpec>& base) {
    if (family == KernelKind::Gemm) {
        LinearSpec t = base.front().as<LinearSpec>();
        t.variant = LinearSpec::Variant::Gemm;
        t.bias = false;
        t.m = shared.tile[0];
        t.k = shared.tile[1];
        t.n = shared.tile[2];
        return OperatorSpec{KernelKind::Gemm, t};
    }
    ConvSpec t = base.front().as<ConvSpec>();
    t.in_ch = shared.tile[0];
    t.out_ch = shared.tile[1];
    t.h = shared.tile[2] + t.kernel - 1;  // halo rows for valid convolution
    t.w = shared.tile[3] + t.kernel - 1;
    t.stride = 1;
    t.padding = 0;
    t.groups = 1;
    t.bias = false;
    return OperatorSpec{KernelKind::Conv, t};
}

inline void emit_gemm_program(DesignBuilder& b, const ProgramSchedule& s,
                              const OperatorSpec& tile_kernel) {
    const std::int64_t tm = program_dims(tile_kernel)[0], tk = program_dims(tile_kernel)[1],
                       tn = program_dims(tile_kernel)[2];
    const std::int64_t m = s.dims[0], k = s.dims[1], n = s.dims[2];
    const std::int64_t gm = s.grid[0], gk = s.grid[1], gn = s.grid[2];
    const bool pad_m = s.padding[0] > 0, pad_k = s.padding[1] > 0, pad_n = s.padding[2] > 0;

    b.interface(s.id + "_a", Direction::In, TensorShape{{m, k}});
    b.interface(s.id + "_b", Direction::In, TensorShape{{k, n}});
    b.interface(s.id + "_c", Direction::Out, TensorShape{{m, n}});
    b.memory("mt_in_a", TensorShape{{tm, tk}});
    b.memory("mt_in_b", TensorShape{{tk, tn}});
    b.memory("mt_out", TensorShape{{tm, tn}});

    // Operands whose tiled extent overhangs the program get zero-padded slabs;
    // exactly covered operands are tiled straight out of their interfaces.
    std::string a_src = s.id + "_a", b_src = s.id + "_b", c_dst = s.id + "_c";
    if (pad_m || pad_k) {
        a_src = s.id + "_a_pad";
        b.memory(a_src, TensorShape{{gm * tm, gk * tk}});
        b.store(s.id + "_a", {m, k}, a_src, {0, 0});
    }
    if (pad_k || pad_n) {
        b_src = s.id + "_b_pad";
        b.memory(b_src, TensorShape{{gk * tk, gn * tn}});
        b.store(s.id + "_b", {k, n}, b_src, {0, 0});
    }
    if (pad_m || pad_n) {
        c_dst = s.id + "_c_pad";
        b.memory(c_dst, TensorShape{{gm * tm, gn * tn}});
    }

    for (std::int64_t im = 0; im < gm; ++im) {
        for (std::int64_t in = 0; in < gn; ++in) {
            for (std::int64_t ik = 0; ik < gk; ++ik) {
                b.load(a_src, {im * tm, ik * tk}, {tm, tk}, "mt_in_a");
                b.load(b_src, {ik * tk, in * tn}, {tk, tn}, "mt_in_b");
                b.call(tile_kernel, {"mt_in_a", "mt_in_b"}, {"mt_out"});
                if (ik == 0) {
                    // First k-tile defines the output block outright ...
                    b.store("mt_out", {tm, tn}, c_dst, {im * tm, in * tn});
                } else {
                    // ... later k-tiles accumulate into it.
                    b.memory("mt_acc", TensorShape{{tm, tn}});
                    b.memory("mt_sum", TensorShape{{tm, tn}});
                    b.load(c_dst, {im * tm, in * tn}, {tm, tn}, "mt_acc");
                    b.add("mt_acc", "mt_out", "mt_sum");
                    b.store("mt_sum", {tm, tn}, c_dst, {im * tm, in * tn});
                }
            }
        }
    }
    if (c_dst != s.id + "_c") b.load(c_dst, {0, 0}, {m, n}, s.id + "_c");
}

inline void emit_conv_program(DesignBuilder& b, const ProgramSchedule& s,
                              const OperatorSpec& tile_kernel, const ConvSpec& base) {
    const auto& t = tile_kernel.as<ConvSpec>();
    const std::int64_t tic = t.in_ch, toc = t.out_ch, kk = t.kernel;
    const std::int64_t th = t.h - kk + 1, tw = t.w - kk + 1;  // output tile extent
    const std::int64_t ic = s.dims[0], oc = s.dims[1], h = s.dims[2], w = s.dims[3];
    const std::int64_t gic = s.grid[0], goc = s.grid[1], gh = s.grid[2], gw = s.grid[3];
    const std::int64_t p = base.padding;
    const std::int64_t oh = h + 2 * p - kk + 1, ow = w + 2 * p - kk + 1;

    b.interface(s.id + "_x", Direction::In, TensorShape{{ic, h, w}});
    b.interface(s.id + "_w", Direction::In, TensorShape{{oc, ic, kk, kk}});
    b.interface(s.id + "_y", Direction::Out, TensorShape{{oc, oh, ow}});
    b.memory("mt_in_x", TensorShape{{tic, t.h, t.w}});
    b.memory("mt_in_w", TensorShape{{toc, tic, kk, kk}});
    b.memory("mt_out", TensorShape{{toc, th, tw}});

    // The input always goes through a halo slab: row r of the slab holds image
    // row r - p, so a (t.h, t.w) window at output offset (y0, x0) is exactly
    // that output tile's receptive field, with borders and overhang reading
    // zeros (the same values convolution padding supplies).
    const std::string x_pad = s.id + "_x_pad";
    b.memory(x_pad, TensorShape{{gic * tic, gh * th + kk - 1, gw * tw + kk - 1}});
    b.store(s.id + "_x", {ic, h, w}, x_pad, {0, p, p});

    std::string w_src = s.id + "_w";
    if (s.padding[0] > 0 || s.padding[1] > 0) {
        w_src = s.id + "_w_pad";
        b.memory(w_src, TensorShape{{goc * toc, gic * tic, kk, kk}});
        b.store(s.id + "_w", {oc, ic, kk, kk}, w_src, {0, 0, 0, 0});
    }

    std::string y_dst = s.id + "_y";
    const bool y_exact = s.padding[1] == 0 && gh * th == oh && gw * tw == ow;
    if (!y_exact) {
        y_dst = s.id + "_y_pad";
        b.memory(y_dst, TensorShape{{goc * toc, gh * th, gw * tw}});
    }

    for (std::int64_t io = 0; io < goc; ++io) {
        for (std::int64_t iy = 0; iy < gh; ++iy) {
            for (std::int64_t ix = 0; ix < gw; ++ix) {
                for (std::int64_t ii = 0; ii < gic; ++ii) {
                    b.load(x_pad, {ii * tic, iy * th, ix * tw}, {tic, t.h, t.w}, "mt_in_x");
                    b.load(w_src, {io * toc, ii * tic, 0, 0}, {toc, tic, kk, kk}, "mt_in_w");
                    b.call(tile_kernel, {"mt_in_x", "mt_in_w"}, {"mt_out"});
                    if (ii == 0) {
                        b.store("mt_out", {toc, th, tw}, y_dst, {io * toc, iy * th, ix * tw});
                    } else {
                        b.memory("mt_acc", TensorShape{{toc, th, tw}});
                        b.memory("mt_sum", TensorShape{{toc, th, tw}});
                        b.load(y_dst, {io * toc, iy * th, ix * tw}, {toc, th, tw}, "mt_acc");
                        b.add("mt_acc", "mt_out", "mt_sum");
                        b.store("mt_sum", {toc, th, tw}, y_dst, {io * toc, iy * th, ix * tw});
                    }
                }
            }
        }
    }
    if (!y_exact) b.load(y_dst, {0, 0, 0}, {oc, oh, ow}, s.id + "_y");
}

}  // namespace mzdetail

/// The kernel spec every planned iteration invokes: the family kernel sized
/// to the shared tile (conv tiles grow halo rows for valid convolution).
inline OperatorSpec modular_tile_kernel(const ModularPlan& plan,
                                        const std::vector<OperatorSpec>& base_specs) {
    const KernelKind family = mzdetail::check_family(base_specs);
    if (plan.shared.tile.size() != (family == KernelKind::Gemm ? 3u : 4u))
        raise(ErrorKind::Arity, "plan tile arity does not match the kernel family");
    return mzdetail::tile_kernel_spec(family, plan.shared, base_specs);
}

/// Rewrites the planned programs as one design whose calls invoke a single
/// shared tile kernel inside static iteration schedules, moving tile operands
/// with load/store calls. Running the result reproduces each program's direct
/// oracle output exactly: padded regions hold zeros and contribute zero.
///
/// base_specs[i] is per_program[i]'s original kernel. All programs must be
/// one emission-capable family: gemm (bias-free) or conv (stride 1, groups 1,
/// bias-free, padding <= (kernel-1)/2, one kernel size across programs).
inline DesignConfig emit_modular_design(const ModularPlan& plan,
                                        const std::vector<OperatorSpec>& base_specs,
                                        const std::string& name = "") {
    if (plan.per_program.empty())
        raise(ErrorKind::Arity, "plan contains no programs");
    if (base_specs.size() != plan.per_program.size())
        raise(ErrorKind::Arity, "got " + std::to_string(base_specs.size()) + " kernel specs for " +
                                    std::to_string(plan.per_program.size()) + " planned programs");
    const KernelKind family = mzdetail::check_family(base_specs);

    for (std::size_t i = 0; i < plan.per_program.size(); ++i) {
        const ProgramSchedule& s = plan.per_program[i];
        mzdetail::check_schedule(s, plan.shared, i);
        if (!is_identifier(s.id))
            raise(ErrorKind::Schema, "program id \"" + s.id + "\" is not a C identifier");
        if (program_dims(base_specs[i]) != s.dims)
            raise(ErrorKind::Shape, "per_program[" + std::to_string(i) +
                                        "] dims do not match its kernel spec");
        if (family == KernelKind::Gemm) {
            if (base_specs[i].as<LinearSpec>().bias)
                raise(ErrorKind::UnsupportedSpec,
                      "modular gemm emission requires bias-free programs");
        } else {
            const auto& c = base_specs[i].as<ConvSpec>();
            if (c.stride != 1 || c.groups != 1 || c.bias)
                raise(ErrorKind::UnsupportedSpec,
                      "modular conv emission requires stride 1, groups 1, and no bias");
            if (2 * c.padding > c.kernel - 1)
                raise(ErrorKind::UnsupportedSpec,
                      "modular conv emission requires padding <= (kernel-1)/2");
            if (c.kernel != base_specs.front().as<ConvSpec>().kernel)
                raise(ErrorKind::FamilyMismatch,
                      "conv programs must share one kernel size to share a tile kernel");
        }
    }

    const OperatorSpec tile = mzdetail::tile_kernel_spec(family, plan.shared, base_specs);
    mzdetail::DesignBuilder b(
        name.empty() ? std::string("modular_") + kernel_kind_tag(family) : name);
    for (std::size_t i = 0; i < plan.per_program.size(); ++i) {
        if (family == KernelKind::Gemm)
            mzdetail::emit_gemm_program(b, plan.per_program[i], tile);
        else
            mzdetail::emit_conv_program(b, plan.per_program[i], tile,
                                        base_specs[i].as<ConvSpec>());
    }
    b.cfg.synth.top_name = b.cfg.name;

    ValidationReport report = validate_design(b.cfg);
    if (!report.ok())
        raise(ErrorKind::Validation,
              "emitted modular design fails validation: " + report.diagnostics.front().message);
    return b.cfg;
}

// ---------------------------------------------------------------------------
// Declared sharing (functional reuse)

/// A user-declared mapping "these programs all share kernel K". Programs keep
/// their own entry points; every entry forwards to the one shared definition.
struct SharedKernelDecl {
    OperatorSpec kernel;
    std::vector<std::string> programs;
};

/// Emits the shared kernel once plus one forwarding wrapper per program.
/// Sharing candidates are declared, not discovered: the declaration is the
/// user's assertion that the programs' call sites are interchangeable.
inline SourceUnit emit_shared_wrapper(const SharedKernelDecl& decl, DataType dt) {
    if (decl.programs.empty())
        raise(ErrorKind::Arity, "shared-kernel declaration lists no programs");
    for (auto& p : decl.programs)
        if (!is_identifier(p))
            raise(ErrorKind::Schema, "program id \"" + p + "\" is not a C identifier");

    SourceUnit unit = emit_kernel(decl.kernel, dt, "shared");

    cgdetail::KernelInstance inst;
    inst.spec = decl.kernel;
    inst.in_shapes = cgdetail::self_input_shapes(decl.kernel);
    inst.out_shape = infer_output_shape(decl.kernel, inst.in_shapes);
    inst.name = cgdetail::instance_name("shared", decl.kernel, inst.in_shapes, inst.out_shape);

    cgdetail::Writer w;
    w.blank();
    for (auto& prog : decl.programs) {
        cgdetail::KernelInstance fwd = inst;
        fwd.name = prog + "_" + kernel_kind_tag(decl.kernel.kind);
        w.line("/* " + prog + ": forwards to the shared kernel. */");
        w.open(cgdetail::signature(fwd));
        std::string args;
        for (auto& a : cgdetail::param_names(inst.spec)) {
            if (!args.empty()) args += ", ";
            args += a;
        }
        w.line(inst.name + "(" + args + ");");
        w.close();
        w.blank();
    }
    unit.text += w.text;
    return unit;
}

}  // namespace forgebench
