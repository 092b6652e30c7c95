// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgebench/common.hpp"
#include "forgebench/opspec.hpp"
#include "forgebench/tensor.hpp"

namespace forgebench {

// ---------------------------------------------------------------------------
// Flow stages, fixed execution order csim -> synth -> cosim -> impl.

enum class Stage { Csim, Synth, Cosim, Impl };

inline const std::vector<std::pair<Stage, const char*>>& stage_tags() {
    static const std::vector<std::pair<Stage, const char*>> tags = {
        {Stage::Csim, "csim"}, {Stage::Synth, "synth"}, {Stage::Cosim, "cosim"}, {Stage::Impl, "impl"}};
    return tags;
}

inline std::string stage_tag(Stage s) {
    for (auto& [st, tag] : stage_tags())
        if (st == s) return tag;
    return "?";
}

inline Stage stage_from_tag(const std::string& tag, const std::string& path) {
    for (auto& [st, t] : stage_tags())
        if (tag == t) return st;
    raise(ErrorKind::Schema, "unknown flow stage \"" + tag + "\"", path);
}

inline int stage_rank(Stage s) {
    switch (s) {
        case Stage::Csim: return 0;
        case Stage::Synth: return 1;
        case Stage::Cosim: return 2;
        case Stage::Impl: return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Design configuration

enum class MemSpace { OnChip, OffChip };
enum class Direction { In, Out, Inout };

struct MemoryDecl {
    std::string name;
    MemSpace space = MemSpace::OnChip;
    TensorShape shape;
    DataType element;

    bool operator==(const MemoryDecl&) const = default;
};

struct InterfaceDecl {
    std::string name;
    Direction direction = Direction::In;
    TensorShape shape;
    DataType element;

    bool operator==(const InterfaceDecl&) const = default;
};

struct ModuleCall {
    OperatorSpec spec;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    bool operator==(const ModuleCall&) const = default;
};

struct SynthSettings {
    double clock_period_ns = 10.0;
    std::string top_name;  // defaults to design name
    DataType data_type;    // default float32
    std::vector<Stage> flow = {Stage::Csim, Stage::Synth};
    std::string part = "xczu9eg-ffvb1156-2-e";

    bool operator==(const SynthSettings&) const = default;
};

struct BufferInfo {
    TensorShape shape;
    DataType element;
    bool is_interface = false;
    Direction direction = Direction::In;  // interfaces only
    MemSpace space = MemSpace::OnChip;    // memories only
};

struct DesignConfig {
    std::string name;
    std::vector<MemoryDecl> memories;
    std::vector<InterfaceDecl> interfaces;
    std::vector<ModuleCall> calls;
    SynthSettings synth;

    bool operator==(const DesignConfig&) const = default;

    const MemoryDecl* find_memory(const std::string& n) const {
        for (auto& m : memories)
            if (m.name == n) return &m;
        return nullptr;
    }

    const InterfaceDecl* find_interface(const std::string& n) const {
        for (auto& i : interfaces)
            if (i.name == n) return &i;
        return nullptr;
    }

    std::optional<BufferInfo> find_buffer(const std::string& n) const {
        if (const MemoryDecl* m = find_memory(n))
            return BufferInfo{m->shape, m->element, false, Direction::In, m->space};
        if (const InterfaceDecl* i = find_interface(n))
            return BufferInfo{i->shape, i->element, true, i->direction, MemSpace::OnChip};
        return std::nullopt;
    }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline TensorShape parse_shape(const json& j, const std::string& path) {
    auto dims = ObjReader::convert<std::vector<std::int64_t>>(j, path);
    TensorShape s{dims};
    try {
        s.check();
    } catch (const Error& e) {
        raise(ErrorKind::Schema, e.what(), path);
    }
    return s;
}

inline SynthSettings parse_synth(const json& j, const std::string& path,
                                 const std::string& design_name) {
    SynthSettings s;
    s.top_name = design_name;
    ObjReader r(j, path);
    s.clock_period_ns = r.get_or<double>("clock_period_ns", 10.0);
    if (!(s.clock_period_ns > 0))
        raise(ErrorKind::Schema, "clock_period_ns must be > 0", ObjReader::join(path, "clock_period_ns"));
    if (r.has("top_name")) s.top_name = r.id("top_name");
    if (const json* dt = r.raw_opt("data_type"))
        s.data_type = DataType::from_json(*dt, ObjReader::join(path, "data_type"));
    if (const json* f = r.raw_opt("flow")) {
        std::string fpath = ObjReader::join(path, "flow");
        auto tags = ObjReader::convert<std::vector<std::string>>(*f, fpath);
        if (tags.empty()) raise(ErrorKind::Schema, "flow must be non-empty", fpath);
        std::set<int> ranks;
        for (auto& t : tags) ranks.insert(stage_rank(stage_from_tag(t, fpath)));
        s.flow.clear();
        for (auto& [st, tag] : stage_tags())
            if (ranks.count(stage_rank(st))) s.flow.push_back(st);
        std::sort(s.flow.begin(), s.flow.end(),
                  [](Stage a, Stage b) { return stage_rank(a) < stage_rank(b); });
    }
    s.part = r.get_or<std::string>("part", s.part);
    if (s.part.empty()) raise(ErrorKind::Schema, "part must be non-empty", ObjReader::join(path, "part"));
    r.finish();
    return s;
}

}  // namespace detail

inline DesignConfig parse_design_config_json(const json& doc) {
    ObjReader root(doc, "");
    DesignConfig cfg;
    cfg.name = root.id("name");

    if (const json* sj = root.raw_opt("synth"))
        cfg.synth = detail::parse_synth(*sj, "synth", cfg.name);
    else
        cfg.synth.top_name = cfg.name;

    std::set<std::string> names;
    auto claim_name = [&](const std::string& n, const std::string& path) {
        if (!names.insert(n).second)
            raise(ErrorKind::Schema, "duplicate buffer name \"" + n + "\"", path);
    };

    if (const json* mj = root.raw_opt("memories")) {
        if (!mj->is_array()) raise(ErrorKind::Schema, "memories must be an array", "memories");
        for (std::size_t i = 0; i < mj->size(); ++i) {
            std::string mpath = "memories[" + std::to_string(i) + "]";
            ObjReader r((*mj)[i], mpath);
            MemoryDecl m;
            m.name = r.id("name");
            claim_name(m.name, ObjReader::join(mpath, "name"));
            std::string space = r.get<std::string>("space");
            if (space == "on_chip") m.space = MemSpace::OnChip;
            else if (space == "off_chip") m.space = MemSpace::OffChip;
            else raise(ErrorKind::Schema, "space must be on_chip or off_chip", ObjReader::join(mpath, "space"));
            m.shape = detail::parse_shape(r.raw("shape"), ObjReader::join(mpath, "shape"));
            m.element = cfg.synth.data_type;
            if (const json* e = r.raw_opt("element"))
                m.element = DataType::from_json(*e, ObjReader::join(mpath, "element"));
            r.finish();
            cfg.memories.push_back(std::move(m));
        }
    }

    if (const json* ij = root.raw_opt("interfaces")) {
        if (!ij->is_array()) raise(ErrorKind::Schema, "interfaces must be an array", "interfaces");
        for (std::size_t i = 0; i < ij->size(); ++i) {
            std::string ipath = "interfaces[" + std::to_string(i) + "]";
            ObjReader r((*ij)[i], ipath);
            InterfaceDecl d;
            d.name = r.id("name");
            claim_name(d.name, ObjReader::join(ipath, "name"));
            std::string dir = r.get<std::string>("direction");
            if (dir == "in") d.direction = Direction::In;
            else if (dir == "out") d.direction = Direction::Out;
            else if (dir == "inout") d.direction = Direction::Inout;
            else raise(ErrorKind::Schema, "direction must be in, out or inout",
                       ObjReader::join(ipath, "direction"));
            d.shape = detail::parse_shape(r.raw("shape"), ObjReader::join(ipath, "shape"));
            d.element = cfg.synth.data_type;
            if (const json* e = r.raw_opt("element"))
                d.element = DataType::from_json(*e, ObjReader::join(ipath, "element"));
            r.finish();
            cfg.interfaces.push_back(std::move(d));
        }
    }

    if (const json* cj = root.raw_opt("calls")) {
        if (!cj->is_array()) raise(ErrorKind::Schema, "calls must be an array", "calls");
        for (std::size_t i = 0; i < cj->size(); ++i) {
            std::string cpath = "calls[" + std::to_string(i) + "]";
            ObjReader r((*cj)[i], cpath);
            ModuleCall call;
            KernelKind kind =
                kernel_kind_from_tag(r.get<std::string>("kernel"), ObjReader::join(cpath, "kernel"));
            const json* params = r.raw_opt("params");
            json empty = json::object();
            call.spec = parse_operator_spec(kind, params ? *params : empty,
                                            ObjReader::join(cpath, "params"));
            auto read_names = [&](const char* key, std::vector<std::string>& dst) {
                std::string lpath = ObjReader::join(cpath, key);
                auto v = ObjReader::convert<std::vector<std::string>>(r.raw(key), lpath);
                for (std::size_t n = 0; n < v.size(); ++n) {
                    if (!names.count(v[n]))
                        raise(ErrorKind::Schema, "reference to undeclared buffer \"" + v[n] + "\"",
                              lpath + "[" + std::to_string(n) + "]");
                }
                dst = std::move(v);
            };
            read_names("inputs", call.inputs);
            read_names("outputs", call.outputs);
            r.finish();
            cfg.calls.push_back(std::move(call));
        }
    }

    root.finish();
    return cfg;
}

inline DesignConfig parse_design_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_column(text, e.byte);
        raise(ErrorKind::Syntax, std::string("malformed JSON: ") + e.what(),
              "line " + std::to_string(line) + ", column " + std::to_string(col));
    }
    return parse_design_config_json(doc);
}

// ---------------------------------------------------------------------------
// Serialization (all defaults resolved; reparsing yields an equal config)

inline json serialize_design_config(const DesignConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["memories"] = json::array();
    for (auto& m : cfg.memories) {
        j["memories"].push_back({{"name", m.name},
                                 {"space", m.space == MemSpace::OnChip ? "on_chip" : "off_chip"},
                                 {"shape", m.shape.dims},
                                 {"element", m.element.to_json()}});
    }
    j["interfaces"] = json::array();
    for (auto& d : cfg.interfaces) {
        const char* dir = d.direction == Direction::In    ? "in"
                          : d.direction == Direction::Out ? "out"
                                                          : "inout";
        j["interfaces"].push_back({{"name", d.name},
                                   {"direction", dir},
                                   {"shape", d.shape.dims},
                                   {"element", d.element.to_json()}});
    }
    j["calls"] = json::array();
    for (auto& c : cfg.calls) {
        j["calls"].push_back({{"kernel", kernel_kind_tag(c.spec.kind)},
                              {"params", operator_spec_params_json(c.spec)},
                              {"inputs", c.inputs},
                              {"outputs", c.outputs}});
    }
    json flow = json::array();
    for (auto s : cfg.synth.flow) flow.push_back(stage_tag(s));
    j["synth"] = json{{"clock_period_ns", cfg.synth.clock_period_ns},
                      {"top_name", cfg.synth.top_name},
                      {"data_type", cfg.synth.data_type.to_json()},
                      {"flow", flow},
                      {"part", cfg.synth.part}};
    return j;
}

inline std::string design_config_text(const DesignConfig& cfg) {
    return serialize_design_config(cfg).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Validation: cross-cutting shape/dataflow checks, reported as data.

struct Diagnostic {
    std::string path;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

struct ValidationReport {
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return diagnostics.empty(); }

    json to_json() const {
        json out = json::array();
        for (auto& d : diagnostics) out.push_back({{"path", d.path}, {"message", d.message}});
        return out;
    }
};

/// Checks every call's operand shapes against its kernel signature and the
/// design's dataflow. Diagnostics are data; nothing throws for bad designs.
inline ValidationReport validate_design(const DesignConfig& cfg,
                                        const KernelCatalog& catalog = kernel_catalog()) {
    ValidationReport report;
    auto flag = [&](const std::string& path, const std::string& msg) {
        report.diagnostics.push_back({path, msg});
    };

    // Buffers holding a defined value: in/inout interfaces up front, plus
    // anything a prior call wrote. On-chip/off-chip memories start undefined
    // (the oracle zero-fills them, but reading one before any write is almost
    // always a config bug).
    std::set<std::string> defined;
    for (auto& d : cfg.interfaces)
        if (d.direction != Direction::Out) defined.insert(d.name);

    for (std::size_t i = 0; i < cfg.calls.size(); ++i) {
        const ModuleCall& call = cfg.calls[i];
        std::string cpath = "calls[" + std::to_string(i) + "]";

        bool known = false;
        for (auto& sig : catalog)
            if (sig.kind == call.spec.kind) known = true;
        if (!known) {
            flag(cpath + ".kernel", "kernel \"" + kernel_kind_tag(call.spec.kind) +
                                        "\" not present in catalog");
            continue;
        }

        std::vector<TensorShape> in_shapes, out_shapes;
        bool resolved = true;
        auto resolve = [&](const std::vector<std::string>& names, const char* key,
                           std::vector<TensorShape>& dst) {
            for (std::size_t n = 0; n < names.size(); ++n) {
                auto info = cfg.find_buffer(names[n]);
                if (!info) {
                    flag(cpath + "." + key + "[" + std::to_string(n) + "]",
                         "reference to undeclared buffer \"" + names[n] + "\"");
                    resolved = false;
                    continue;
                }
                dst.push_back(info->shape);
            }
        };
        resolve(call.inputs, "inputs", in_shapes);
        resolve(call.outputs, "outputs", out_shapes);

        if (resolved) {
            try {
                check_call_shapes(call.spec, in_shapes, out_shapes);
            } catch (const Error& e) {
                flag(cpath, e.what());
            }
        }

        for (std::size_t n = 0; n < call.inputs.size(); ++n) {
            if (!defined.count(call.inputs[n]))
                flag(cpath + ".inputs[" + std::to_string(n) + "]",
                     "buffer \"" + call.inputs[n] + "\" is read before any call or interface defines it");
        }
        for (std::size_t n = 0; n < call.outputs.size(); ++n) {
            const std::string& name = call.outputs[n];
            auto info = cfg.find_buffer(name);
            if (info && info->is_interface && info->direction == Direction::In)
                flag(cpath + ".outputs[" + std::to_string(n) + "]",
                     "write to read-only interface \"" + name + "\"");
            defined.insert(name);
        }
    }

    for (auto& d : cfg.interfaces) {
        if (d.direction == Direction::Out && !defined.count(d.name))
            flag("interfaces", "out interface \"" + d.name + "\" is never written");
    }

    return report;
}

// ---------------------------------------------------------------------------
// Run configuration

struct MockSettings {
    int stage_ms = 0;                 // synthetic per-stage duration
    std::vector<std::string> fail;    // design names whose fail_stage fails
    Stage fail_stage = Stage::Synth;

    bool operator==(const MockSettings&) const = default;
};

struct RunConfig {
    std::string backend = "mock";  // mock | vendor
    int workers = 1;
    int timeout_s = 3600;
    std::string out_dir = "out";
    std::string device_file;
    std::string vendor_command = "vitis_hls -f {script}";
    MockSettings mock;

    bool operator==(const RunConfig&) const = default;
};

inline RunConfig parse_run_config_json(const json& doc) {
    ObjReader r(doc, "");
    RunConfig rc;
    rc.backend = r.get_or<std::string>("backend", "mock");
    if (rc.backend != "mock" && rc.backend != "vendor")
        raise(ErrorKind::Schema, "backend must be mock or vendor", "backend");
    rc.workers = static_cast<int>(r.get_or<std::int64_t>("workers", 1));
    if (rc.workers < 1) raise(ErrorKind::Schema, "workers must be >= 1", "workers");
    rc.timeout_s = static_cast<int>(r.get_or<std::int64_t>("timeout_s", 3600));
    if (rc.timeout_s < 1) raise(ErrorKind::Schema, "timeout_s must be >= 1", "timeout_s");
    rc.out_dir = r.get_or<std::string>("out_dir", "out");
    rc.device_file = r.get_or<std::string>("device_file", "");
    if (const json* vj = r.raw_opt("vendor")) {
        ObjReader vr(*vj, "vendor");
        rc.vendor_command = vr.get_or<std::string>("command", rc.vendor_command);
        vr.finish();
    }
    if (const json* mj = r.raw_opt("mock")) {
        ObjReader mr(*mj, "mock");
        rc.mock.stage_ms = static_cast<int>(mr.get_or<std::int64_t>("stage_ms", 0));
        if (rc.mock.stage_ms < 0) raise(ErrorKind::Schema, "stage_ms must be >= 0", "mock.stage_ms");
        rc.mock.fail = mr.get_or<std::vector<std::string>>("fail", {});
        if (mr.has("fail_stage"))
            rc.mock.fail_stage = stage_from_tag(mr.get<std::string>("fail_stage"), "mock.fail_stage");
        mr.finish();
    }
    r.finish();
    return rc;
}

inline RunConfig parse_run_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_column(text, e.byte);
        raise(ErrorKind::Syntax, std::string("malformed JSON: ") + e.what(),
              "line " + std::to_string(line) + ", column " + std::to_string(col));
    }
    return parse_run_config_json(doc);
}

inline json serialize_run_config(const RunConfig& rc) {
    return json{{"backend", rc.backend},
                {"workers", rc.workers},
                {"timeout_s", rc.timeout_s},
                {"out_dir", rc.out_dir},
                {"device_file", rc.device_file},
                {"vendor", {{"command", rc.vendor_command}}},
                {"mock",
                 {{"stage_ms", rc.mock.stage_ms},
                  {"fail", rc.mock.fail},
                  {"fail_stage", stage_tag(rc.mock.fail_stage)}}}};
}

}  // namespace forgebench
