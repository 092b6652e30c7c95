// SPDX-License-Identifier: Apache-2.0

// forgebench: command-line front end over the header-only library.
//
//   validate    check one design config, print diagnostics
//   generate    emit an HLS source bundle for one design config
//   sweep       expand a parameter grid into a validated design suite
//   modularize  plan a shared tile over several programs and emit the
//               modularized design
//   run         execute a suite through a backend (mock or vendor)
//   report      aggregate per-job reports into utilization summaries
//
// Exit codes, uniform across subcommands:
//   0  success
//   1  domain failure: the input parsed but the design/plan/run is invalid
//      or a job failed
//   2  environment failure: unreadable or malformed files, missing tools,
//      bad command lines

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "forgebench/forgebench.hpp"

namespace fb = forgebench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- plumbing ---------------------------------------------------------------

int exit_code(fb::ErrorKind k) {
    switch (k) {
        case fb::ErrorKind::Syntax:
        case fb::ErrorKind::Format:
        case fb::ErrorKind::Io:
        case fb::ErrorKind::ToolNotFound:
        case fb::ErrorKind::BackendUnavailable:
            return 2;
        default:
            return 1;
    }
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fb::raise(fb::ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) fb::raise(fb::ErrorKind::Io, "cannot write " + path.string());
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fb::raise(fb::ErrorKind::Syntax, what + ": malformed JSON: " + e.what());
    }
}

std::string tuple_str(const fb::DimTuple& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(t[i]);
    }
    return s + ")";
}

// --- validate ---------------------------------------------------------------

int cmd_validate(const std::string& config_path, bool json_out) {
    const fb::DesignConfig cfg = fb::parse_design_config(slurp(config_path));
    const fb::ValidationReport rep = fb::validate_design(cfg);
    if (json_out) {
        std::cout << json{{"design", cfg.name}, {"ok", rep.ok()}, {"diagnostics", rep.to_json()}}
                         .dump(2)
                  << "\n";
    } else if (rep.ok()) {
        std::cout << cfg.name << ": ok\n";
    } else {
        for (const auto& d : rep.diagnostics) std::cout << d.path << ": " << d.message << "\n";
    }
    return rep.ok() ? 0 : 1;
}

// --- generate ---------------------------------------------------------------

int cmd_generate(const std::string& config_path, const std::string& out_dir, bool with_testbench,
                 std::uint64_t seed, bool json_out) {
    const fb::DesignConfig cfg = fb::parse_design_config(slurp(config_path));
    const fb::SourceBundle bundle = fb::emit_design(cfg, seed);
    if (with_testbench && !bundle.find_role("testbench"))
        fb::raise(fb::ErrorKind::UnsupportedSpec,
                  "oracle unavailable: the design data type is not numerically checkable, "
                  "so no testbench can be generated");
    const fs::path dir = fb::write_bundle(bundle, out_dir);
    if (json_out)
        std::cout << fb::bundle_manifest(bundle).dump(2) << "\n";
    else
        std::cout << "wrote " << bundle.units.size() + 1 << " files under " << dir.string()
                  << "\n";
    return 0;
}

// --- sweep ------------------------------------------------------------------

fb::SweepSpec sweep_spec_from_file(const std::string& path) {
    const json doc = parse_json(slurp(path), path);
    fb::ObjReader r(doc, "");
    fb::SweepSpec spec;
    spec.family = r.get<std::string>("family");
    const json& axes = r.raw("axes");
    if (!axes.is_array()) fb::raise(fb::ErrorKind::Schema, "axes must be an array", "axes");
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const std::string at = "axes[" + std::to_string(i) + "]";
        fb::ObjReader ar(axes[i], at);
        fb::SweepAxis axis;
        axis.name = ar.get<std::string>("name");
        const json& values = ar.raw("values");
        if (!values.is_array())
            fb::raise(fb::ErrorKind::Schema, "values must be an array", at + ".values");
        for (const auto& v : values) axis.values.push_back(v);
        ar.finish();
        spec.axes.push_back(std::move(axis));
    }
    r.finish();
    return spec;
}

int cmd_sweep(const std::string& what, const std::string& out_dir, bool json_out) {
    fb::SweepSpec spec;
    if (what == "gemm") spec = fb::builtin_suite("gemm_chain");
    else if (what == "dnn") spec = fb::builtin_suite("dnn_block");
    else if (what == "llm") spec = fb::builtin_suite("llm_block");
    else spec = sweep_spec_from_file(what);

    const std::vector<fb::DesignConfig> configs = fb::expand_grid(spec);
    const fb::SuiteManifest manifest = fb::write_suite(configs, out_dir);
    if (json_out) {
        std::cout << json{{"family", spec.family},
                          {"suite", manifest.suite},
                          {"count", manifest.count},
                          {"dir", out_dir}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << spec.family << ": " << configs.size() << " configs\n";
        std::cout << "wrote suite \"" << manifest.suite << "\" under " << out_dir << "\n";
    }
    return 0;
}

// --- modularize -------------------------------------------------------------

struct ProgramsSpec {
    std::string name;
    std::vector<std::string> ids;
    std::vector<fb::OperatorSpec> specs;
};

ProgramsSpec parse_programs_spec(const std::string& path) {
    const json doc = parse_json(slurp(path), path);
    fb::ObjReader r(doc, "");
    ProgramsSpec ps;
    ps.name = r.get_or<std::string>("name", "");
    const json& programs = r.raw("programs");
    if (!programs.is_array() || programs.empty())
        fb::raise(fb::ErrorKind::Schema, "programs must be a non-empty array", "programs");
    for (std::size_t i = 0; i < programs.size(); ++i) {
        const std::string at = "programs[" + std::to_string(i) + "]";
        fb::ObjReader pr(programs[i], at);
        ps.ids.push_back(pr.get_or<std::string>("id", "p" + std::to_string(i)));
        const fb::KernelKind kind =
            fb::kernel_kind_from_tag(pr.get<std::string>("kernel"), at + ".kernel");
        const json* params = pr.raw_opt("params");
        ps.specs.push_back(
            fb::parse_operator_spec(kind, params ? *params : json::object(), at + ".params"));
        pr.finish();
    }
    r.finish();
    return ps;
}

int cmd_modularize(const std::string& programs_path, const std::string& policy_flag,
                   const std::string& out_dir, bool json_out) {
    const ProgramsSpec ps = parse_programs_spec(programs_path);
    const fb::TilePolicy policy = policy_flag == "min"   ? fb::TilePolicy::MinGcd
                                  : policy_flag == "max" ? fb::TilePolicy::MaxFit
                                                         : fb::tile_policy_from_tag(policy_flag);

    std::vector<std::pair<std::string, fb::DimTuple>> programs;
    for (std::size_t i = 0; i < ps.specs.size(); ++i)
        programs.emplace_back(ps.ids[i], fb::program_dims(ps.specs[i]));
    const fb::ModularPlan plan = fb::plan_shared(programs, policy);

    // Families without tile-kernel emission (e.g. head-tiled attention) still
    // get a plan; the design file is only written when emission is supported.
    std::optional<fb::DesignConfig> design;
    json plan_doc;
    std::string note;
    try {
        const fb::OperatorSpec tile = fb::modular_tile_kernel(plan, ps.specs);
        plan_doc = fb::plan_to_json(plan, tile);
        design = fb::emit_modular_design(plan, ps.specs, ps.name);
    } catch (const fb::Error& e) {
        if (e.kind() != fb::ErrorKind::UnsupportedSpec &&
            e.kind() != fb::ErrorKind::FamilyMismatch)
            throw;
        plan_doc = fb::plan_to_json(plan);
        note = e.message();
    }

    spill(fs::path(out_dir) / "plan.json", plan_doc.dump(2) + "\n");
    if (design)
        spill(fs::path(out_dir) / (design->name + ".json"), fb::design_config_text(*design));

    if (json_out) {
        json doc{{"plan", plan_doc}};
        doc["design"] = design ? json(design->name) : json();
        if (!note.empty()) doc["note"] = note;
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "policy " << fb::tile_policy_tag(plan.shared.policy) << " tile "
                  << tuple_str(plan.shared.tile) << "\n";
        for (const auto& p : plan.per_program)
            std::cout << p.id << ": dims " << tuple_str(p.dims) << " grid " << tuple_str(p.grid)
                      << " iterations " << p.iterations << "\n";
        if (!note.empty()) std::cout << "plan only: " << note << "\n";
        std::cout << "wrote plan.json" << (design ? " and " + design->name + ".json" : "")
                  << " under " << out_dir << "\n";
    }
    return 0;
}

// --- run --------------------------------------------------------------------

std::vector<fs::path> collect_config_files(const std::string& input_path) {
    const fs::path in(input_path);
    std::vector<fs::path> files;
    if (fs::is_directory(in)) {
        for (const auto& e : fs::directory_iterator(in)) {
            if (!e.is_regular_file() || e.path().extension() != ".json") continue;
            const std::string base = e.path().filename().string();
            if (base == "manifest.json" || base == "run_results.json") continue;
            files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            fb::raise(fb::ErrorKind::Io, "no design configs (*.json) under " + input_path);
    } else if (fs::is_regular_file(in)) {
        files.push_back(in);
    } else {
        fb::raise(fb::ErrorKind::Io, "no such file or directory: " + input_path);
    }
    return files;
}

int cmd_run(const std::string& input_path, const std::optional<std::string>& out_flag,
            const std::optional<std::string>& backend_flag, const std::optional<int>& workers_flag,
            const std::optional<int>& timeout_flag, const std::string& run_config_path,
            bool keep_going, bool json_out) {
    fb::RunConfig run;
    if (!run_config_path.empty()) run = fb::parse_run_config(slurp(run_config_path));
    if (backend_flag) {
        if (*backend_flag != "mock" && *backend_flag != "vendor")
            fb::raise(fb::ErrorKind::Schema, "--backend must be mock or vendor");
        run.backend = *backend_flag;
    }
    if (workers_flag) {
        if (*workers_flag < 1) fb::raise(fb::ErrorKind::Schema, "--workers must be >= 1");
        run.workers = *workers_flag;
    }
    if (timeout_flag) {
        if (*timeout_flag < 1) fb::raise(fb::ErrorKind::Schema, "--timeout must be >= 1");
        run.timeout_s = *timeout_flag;
    }
    if (out_flag) run.out_dir = *out_flag;
    if (const char* tool = std::getenv("FORGEBENCH_VENDOR_TOOL")) {
        const auto space = run.vendor_command.find(' ');
        run.vendor_command =
            std::string(tool) +
            (space == std::string::npos ? "" : run.vendor_command.substr(space));
    }

    std::vector<fb::DesignConfig> configs;
    std::vector<std::string> invalid;
    for (const auto& file : collect_config_files(input_path)) {
        fb::DesignConfig cfg = fb::parse_design_config(slurp(file));
        const fb::ValidationReport rep = fb::validate_design(cfg);
        if (!rep.ok()) {
            const std::string msg = cfg.name + ": " + rep.diagnostics.front().path + ": " +
                                    rep.diagnostics.front().message;
            if (!keep_going) {
                std::cout << msg << "\n";
                return 1;
            }
            invalid.push_back(msg);
            continue;
        }
        configs.push_back(std::move(cfg));
    }

    const fs::path jobs_root = fs::path(run.out_dir) / "jobs";
    for (const auto& cfg : configs) fb::write_bundle(fb::emit_design(cfg), jobs_root);

    const std::vector<fb::Job> jobs = fb::plan_jobs(configs, run);
    const std::unique_ptr<fb::Backend> backend = fb::make_backend(run);
    const std::vector<fb::JobResult> results = fb::execute(jobs, *backend, run.workers);
    fb::write_run_results(results, fs::path(run.out_dir) / "run_results.json");

    std::size_t passed = 0;
    for (const auto& r : results) passed += r.ok() ? 1 : 0;
    if (json_out) {
        json doc = fb::run_results_json(results);
        doc["invalid"] = invalid;
        std::cout << doc.dump(2) << "\n";
    } else {
        for (const auto& r : results) {
            std::cout << r.job << ": " << (r.ok() ? "pass" : "fail");
            if (!r.ok())
                for (const auto& s : r.stages)
                    if (s.status != fb::StageStatus::Pass)
                        std::cout << " [" << fb::stage_tag(s.stage) << " "
                                  << fb::stage_status_tag(s.status) << "]";
            std::cout << "\n";
        }
        for (const auto& msg : invalid) std::cout << "invalid: " << msg << "\n";
        std::cout << passed << "/" << results.size() << " jobs passed\n";
    }
    return passed == results.size() && invalid.empty() ? 0 : 1;
}

// --- report -----------------------------------------------------------------

fb::PPAReport module_report(const json& modules_doc, const std::string& kernel_tag,
                            const std::string& design) {
    for (const auto& m : modules_doc.value("modules", json::array())) {
        if (m.value("kernel", "") != kernel_tag) continue;
        fb::PPAReport rep;
        rep.design = design;
        rep.stage = fb::ReportStage::Synth;
        rep.lut = m.value("lut", std::int64_t{0});
        rep.ff = m.value("ff", std::int64_t{0});
        rep.dsp = m.value("dsp", std::int64_t{0});
        rep.bram = 0;
        return rep;
    }
    fb::raise(fb::ErrorKind::Format,
              "no module with kernel \"" + kernel_tag + "\" in " + design + " modules.json");
}

int cmd_report(const std::string& results_dir, const std::string& device_path,
               const std::optional<std::string>& out_flag, const std::string& modular_path,
               bool json_out) {
    const fb::DeviceCapacity cap = device_path.empty()
                                       ? fb::DeviceCapacity::zcu102()
                                       : fb::parse_device_capacity(slurp(device_path));
    const fs::path root(results_dir);
    const fs::path out_dir = out_flag ? fs::path(*out_flag) : root;

    std::map<std::string, bool> ok_map;
    if (fs::is_regular_file(root / "run_results.json")) {
        const json rr = parse_json(slurp(root / "run_results.json"), "run_results.json");
        for (const auto& j : rr.value("jobs", json::array()))
            ok_map[j.value("job", "")] = j.value("ok", false);
    }

    const fs::path jobs = root / "jobs";
    if (!fs::is_directory(jobs))
        fb::raise(fb::ErrorKind::Io, "no jobs directory under " + results_dir);
    std::vector<fs::path> job_dirs;
    for (const auto& e : fs::directory_iterator(jobs))
        if (e.is_directory()) job_dirs.push_back(e.path());
    std::sort(job_dirs.begin(), job_dirs.end());

    std::vector<fb::SuiteEntry> entries;
    for (const auto& dir : job_dirs) {
        const std::string name = dir.filename().string();
        const fs::path impl = dir / "reports" / "impl_util.rpt";
        const fs::path synth = dir / "reports" / "csynth.xml";
        fb::SuiteEntry entry;
        entry.design = name;
        if (fs::is_regular_file(impl))
            entry.report = fb::parse_report(slurp(impl), fb::ReportFormat::ImplUtil);
        else if (fs::is_regular_file(synth))
            entry.report = fb::parse_report(slurp(synth), fb::ReportFormat::CsynthXml);
        else
            continue;  // job died before producing reports; run_results.json has the story
        entry.report.design = name;
        const auto it = ok_map.find(name);
        entry.ok = it == ok_map.end() ? true : it->second;
        entries.push_back(std::move(entry));
    }
    if (entries.empty()) fb::raise(fb::ErrorKind::Io, "no reports found under " + jobs.string());

    const fb::SuiteTable table = fb::aggregate_suite(entries, cap);
    spill(out_dir / "summary.csv", fb::suite_csv(table));
    spill(out_dir / "summary.json", fb::suite_json(table).dump(2) + "\n");

    json out_doc = fb::suite_json(table);
    std::optional<std::string> modular_md;
    if (!modular_path.empty()) {
        const json spec = parse_json(slurp(modular_path), modular_path);
        fb::ObjReader r(spec, "");
        const std::string name = r.get<std::string>("name");
        const auto befores = r.get<std::vector<std::string>>("before");
        const std::string after = r.get<std::string>("after");
        const std::string shared_kernel = r.get<std::string>("shared_kernel");
        r.finish();

        auto find_entry = [&](const std::string& design) -> const fb::SuiteEntry& {
            for (const auto& e : entries)
                if (e.design == design) return e;
            fb::raise(fb::ErrorKind::Validation,
                      "design \"" + design + "\" has no report under " + jobs.string());
        };
        std::vector<fb::PPAReport> before_reports;
        for (const auto& b : befores) before_reports.push_back(find_entry(b).report);
        const fb::PPAReport& after_report = find_entry(after).report;
        const json modules =
            parse_json(slurp(jobs / after / "reports" / "modules.json"), "modules.json");
        const fb::PPAReport shared = module_report(modules, shared_kernel, after);

        fb::ModularRow row = fb::modularization_summary(before_reports, shared, after_report, cap);
        row.name = name;
        modular_md = fb::modular_markdown({row});
        spill(out_dir / "modular_summary.md", *modular_md);
        out_doc["modular"] =
            json{{"name", name},
                 {"total_before", {row.total_before.lut_pct, row.total_before.dsp_pct}},
                 {"shared", {row.shared.lut_pct, row.shared.dsp_pct}},
                 {"total_after", {row.total_after.lut_pct, row.total_after.dsp_pct}},
                 {"change",
                  {row.change.lut_pct ? json(*row.change.lut_pct) : json(),
                   row.change.dsp_pct ? json(*row.change.dsp_pct) : json()}}};
    }

    if (json_out) {
        std::cout << out_doc.dump(2) << "\n";
    } else {
        for (const auto& r : table.rows)
            std::cout << r.design << ": " << fb::report_stage_tag(r.report.stage) << " lut "
                      << r.report.lut << " (" << fb::format_pct(r.util.lut_pct) << "%) dsp "
                      << r.report.dsp << " (" << fb::format_pct(r.util.dsp_pct) << "%) "
                      << (r.ok ? "pass" : "fail") << "\n";
        std::cout << "wrote summary.csv and summary.json under " << out_dir.string() << "\n";
        if (modular_md) {
            std::cout << "wrote modular_summary.md under " << out_dir.string() << "\n";
            std::cout << *modular_md;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"design-config toolkit: validate, generate, sweep, modularize, run, report"};
    app.require_subcommand(1);
    app.fallthrough();
    bool json_out = false;
    app.add_flag("--json", json_out, "machine-readable stdout");

    auto* validate = app.add_subcommand("validate", "check one design config");
    std::string validate_config;
    validate->add_option("config", validate_config, "design config JSON")->required();

    auto* generate = app.add_subcommand("generate", "emit an HLS source bundle");
    std::string generate_config, generate_out = "out";
    bool with_testbench = false;
    std::uint64_t generate_seed = 0;
    generate->add_option("config", generate_config, "design config JSON")->required();
    generate->add_option("--out", generate_out, "output directory (default: out)");
    generate->add_flag("--with-testbench", with_testbench,
                       "require an oracle-checked testbench in the bundle");
    generate->add_option("--seed", generate_seed, "test-vector seed (default: 0)");

    auto* sweep = app.add_subcommand("sweep", "expand a parameter grid into a suite");
    std::string sweep_what, sweep_out = "out";
    sweep->add_option("suite", sweep_what, "gemm | dnn | llm | grid spec JSON path")->required();
    sweep->add_option("--out", sweep_out, "suite output directory (default: out)");

    auto* modularize = app.add_subcommand("modularize", "plan a shared tile over programs");
    std::string modularize_programs, modularize_policy = "min", modularize_out = "out";
    modularize->add_option("programs", modularize_programs, "programs spec JSON")->required();
    modularize->add_option("--policy", modularize_policy, "min | max (default: min)");
    modularize->add_option("--out", modularize_out, "output directory (default: out)");

    auto* run = app.add_subcommand("run", "execute a suite through a backend");
    std::string run_input, run_config_path;
    std::optional<std::string> run_out, run_backend;
    std::optional<int> run_workers, run_timeout;
    bool keep_going = false;
    run->add_option("suite", run_input, "suite directory or one design config JSON")->required();
    run->add_option("--out", run_out, "work/output directory (default: out)");
    run->add_option("--backend", run_backend, "mock | vendor");
    run->add_option("--workers", run_workers, "parallel jobs");
    run->add_option("--timeout", run_timeout, "per-job budget, seconds");
    run->add_option("--run-config", run_config_path, "run config JSON (flags override it)");
    run->add_flag("--keep-going", keep_going,
                  "skip invalid configs instead of aborting (still exits 1)");

    auto* report = app.add_subcommand("report", "aggregate per-job reports");
    std::string report_results, report_device, report_modular;
    std::optional<std::string> report_out;
    report->add_option("results", report_results, "run output directory")->required();
    report->add_option("--device", report_device,
                       "device capacity JSON (default: built-in zcu102)");
    report->add_option("--out", report_out, "summary output directory (default: results dir)");
    report->add_option("--modular", report_modular,
                       "before/after comparison spec JSON; writes modular_summary.md");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(validate_config, json_out);
        if (generate->parsed())
            return cmd_generate(generate_config, generate_out, with_testbench, generate_seed,
                                json_out);
        if (sweep->parsed()) return cmd_sweep(sweep_what, sweep_out, json_out);
        if (modularize->parsed())
            return cmd_modularize(modularize_programs, modularize_policy, modularize_out,
                                  json_out);
        if (run->parsed())
            return cmd_run(run_input, run_out, run_backend, run_workers, run_timeout,
                           run_config_path, keep_going, json_out);
        if (report->parsed())
            return cmd_report(report_results, report_device, report_out, report_modular,
                              json_out);
    } catch (const fb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;  // unreachable: require_subcommand(1) guarantees a dispatch
}
