// SPDX-License-Identifier: Apache-2.0
//
// Parallel flow execution: turn validated designs into per-design jobs, run
// each job's stage list (csim -> synth -> cosim -> impl) through a pluggable
// backend on a bounded worker pool, and collect per-stage outcomes in input
// order.  Ships a deterministic mock backend (analytic cost model, writes
// the same report files a vendor run would) and a vendor backend that runs
// tool scripts through a configurable command template.

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include "forgebench/config.hpp"

namespace forgebench {

// ---------------------------------------------------------------------------
// Jobs and results

struct Job {
    DesignConfig design;
    std::filesystem::path work_dir;    // per-job directory: <out>/jobs/<name>/
    std::vector<Stage> stages;         // ordered flow subset
    double timeout_s = 3600.0;         // per-stage budget, fractional seconds
};

enum class StageStatus { Pass, Fail, Timeout, Skipped };

inline const char* stage_status_tag(StageStatus s) {
    switch (s) {
        case StageStatus::Pass: return "pass";
        case StageStatus::Fail: return "fail";
        case StageStatus::Timeout: return "timeout";
        case StageStatus::Skipped: return "skipped";
    }
    return "?";
}

struct StageResult {
    Stage stage = Stage::Csim;
    StageStatus status = StageStatus::Skipped;
    double wall_s = 0.0;
    std::string log_excerpt;
};

struct JobResult {
    std::string job;  // design name
    std::vector<StageResult> stages;
    double wall_s = 0.0;
    std::vector<std::string> report_paths;

    bool ok() const {
        for (auto& s : stages)
            if (s.status != StageStatus::Pass) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Backend interface

/// What one backend invocation of one stage produced.  `pass=false` with
/// `timed_out=false` means the stage ran and failed (e.g. nonzero exit);
/// exceptions out of run_stage mean the backend itself broke and are
/// recorded as a failure of that job only.
struct StageOutcome {
    bool pass = false;
    bool timed_out = false;
    std::string log_excerpt;
    std::vector<std::string> report_paths;
};

/// Backends must be safe for concurrent run_stage calls on distinct jobs;
/// the runner never runs two stages of one job concurrently.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    /// Throw BackendUnavailable to veto a run before any job starts.
    virtual void check_available() const {}
    virtual StageOutcome run_stage(const Job& job, Stage stage) = 0;
};

// ---------------------------------------------------------------------------
// Planning

/// One job per config; stages come from the config's own flow, budget and
/// work directory from the run config.
inline std::vector<Job> plan_jobs(const std::vector<DesignConfig>& configs,
                                  const RunConfig& run) {
    std::vector<Job> jobs;
    jobs.reserve(configs.size());
    for (const auto& cfg : configs) {
        Job j;
        j.design = cfg;
        j.work_dir = std::filesystem::path(run.out_dir) / "jobs" / cfg.name;
        j.stages = cfg.synth.flow;
        j.timeout_s = static_cast<double>(run.timeout_s);
        jobs.push_back(std::move(j));
    }
    return jobs;
}

// ---------------------------------------------------------------------------
// Execution

namespace rundetail {

inline void check_stage_order(const Job& job) {
    for (std::size_t i = 1; i < job.stages.size(); ++i)
        if (stage_rank(job.stages[i - 1]) >= stage_rank(job.stages[i]))
            raise(ErrorKind::Schema, "job \"" + job.design.name +
                                         "\" stages must be unique and ordered "
                                         "csim, synth, cosim, impl");
}

inline JobResult run_job(const Job& job, Backend& backend) {
    using clock = std::chrono::steady_clock;
    JobResult result;
    result.job = job.design.name;
    const auto job_start = clock::now();
    bool blocked = false;
    for (Stage stage : job.stages) {
        StageResult sr;
        sr.stage = stage;
        if (blocked) {
            sr.status = StageStatus::Skipped;
            result.stages.push_back(std::move(sr));
            continue;
        }
        const auto t0 = clock::now();
        try {
            StageOutcome out = backend.run_stage(job, stage);
            sr.status = out.timed_out ? StageStatus::Timeout
                        : out.pass    ? StageStatus::Pass
                                      : StageStatus::Fail;
            sr.log_excerpt = std::move(out.log_excerpt);
            for (auto& p : out.report_paths) result.report_paths.push_back(p);
        } catch (const std::exception& e) {
            sr.status = StageStatus::Fail;
            sr.log_excerpt = std::string("backend error: ") + e.what();
        }
        sr.wall_s = std::chrono::duration<double>(clock::now() - t0).count();
        blocked = sr.status != StageStatus::Pass;
        result.stages.push_back(std::move(sr));
    }
    result.wall_s = std::chrono::duration<double>(clock::now() - job_start).count();
    return result;
}

}  // namespace rundetail

/// Runs every job through the backend with at most `workers` jobs in flight.
/// Claim order is FIFO; the result list always matches the input order.  A
/// failing or crashing job never aborts the rest.
inline std::vector<JobResult> execute(const std::vector<Job>& jobs, Backend& backend,
                                      int workers) {
    if (workers < 1) raise(ErrorKind::Arity, "workers must be >= 1");
    for (const auto& j : jobs) rundetail::check_stage_order(j);
    backend.check_available();  // fail fast before any job starts

    std::vector<JobResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            results[i] = rundetail::run_job(jobs[i], backend);
        }
    };
    const std::size_t pool =
        std::min<std::size_t>(static_cast<std::size_t>(workers), jobs.size());
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return results;
}

// ---------------------------------------------------------------------------
// Run summaries

inline json run_results_json(const std::vector<JobResult>& results) {
    json jobs = json::array();
    int passed = 0;
    for (const auto& r : results) {
        json stages = json::array();
        for (const auto& s : r.stages)
            stages.push_back({{"stage", stage_tag(s.stage)},
                              {"status", stage_status_tag(s.status)},
                              {"wall_s", s.wall_s},
                              {"log", s.log_excerpt}});
        passed += r.ok() ? 1 : 0;
        jobs.push_back({{"job", r.job},
                        {"ok", r.ok()},
                        {"wall_s", r.wall_s},
                        {"stages", std::move(stages)},
                        {"reports", r.report_paths}});
    }
    return json{{"total", results.size()},
                {"passed", passed},
                {"failed", results.size() - static_cast<std::size_t>(passed)},
                {"jobs", std::move(jobs)}};
}

inline void write_run_results(const std::vector<JobResult>& results,
                              const std::filesystem::path& path) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << run_results_json(results).dump(2) << "\n";
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Mock backend: analytic cost model
//
// Every number is a pure function of the design, so repeated runs (and runs
// at any worker count) produce byte-identical reports.  Model, per call:
//   multipliers  linear ops: product of unroll factors; conv: unroll_in *
//                unroll_out; attention: head count; data movement: 0;
//                everything else: 1
//   loop bounds  the trip counts of the op's loop nest (self-shaped ops use
//                their output buffer's shape)
// and per design:
//   DSP     = 3 * sum(multipliers)
//   LUT     = 150 + 12 * sum(all loop bounds) + 40 * sum(multipliers)
//   FF      = 2 * LUT / 3
//   BRAM18K = sum over on-chip memories of ceil(elems * bits / 18432)
//   latency = sum over calls of max(1, product(bounds) / multipliers)
//   estimated clock = 0.87 * target clock
// Implementation-stage numbers derate synthesis estimates: LUT x0.85,
// FF x0.90, DSP unchanged, BRAM tiles = ceil(BRAM18K / 2).

struct MockModuleCost {
    std::string name;
    std::string kernel;
    std::int64_t lut = 0, ff = 0, dsp = 0;
    std::int64_t latency = 0;
};

struct MockReport {
    std::int64_t lut = 0, ff = 0, dsp = 0, bram18k = 0;
    std::int64_t latency = 0;
    double estimated_clock_ns = 0.0;
    std::vector<MockModuleCost> modules;
};

namespace rundetail {

inline std::vector<std::int64_t> call_bounds(const DesignConfig& cfg, const ModuleCall& call) {
    auto output_dims = [&]() -> std::vector<std::int64_t> {
        if (call.outputs.empty()) return {};
        if (auto b = cfg.find_buffer(call.outputs.front())) return b->shape.dims;
        return {};
    };
    switch (call.spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
        case KernelKind::Chain: {
            const auto& s = call.spec.as<LinearSpec>();
            return {s.m, s.k, s.n};
        }
        case KernelKind::Conv: {
            const auto& s = call.spec.as<ConvSpec>();
            return {s.out_ch, s.in_ch / s.groups, s.out_h(), s.out_w(), s.kernel, s.kernel};
        }
        case KernelKind::Attention: {
            const auto& s = call.spec.as<AttnSpec>();
            return {s.seq_len, s.seq_len, s.hidden};
        }
        case KernelKind::Pool: {
            const auto& s = call.spec.as<PoolSpec>();
            auto dims = output_dims();
            dims.push_back(s.kernel);
            dims.push_back(s.kernel);
            return dims;
        }
        case KernelKind::Load:
        case KernelKind::Store:
            return call.spec.as<MoveSpec>().shape;
        default:
            return output_dims();
    }
}

inline std::int64_t call_multipliers(const ModuleCall& call) {
    switch (call.spec.kind) {
        case KernelKind::Dot:
        case KernelKind::Matvec:
        case KernelKind::Gemm:
        case KernelKind::Chain: {
            const auto& u = call.spec.as<LinearSpec>().unroll;
            return u[0] * u[1] * u[2];
        }
        case KernelKind::Conv: {
            const auto& s = call.spec.as<ConvSpec>();
            return s.unroll_in * s.unroll_out;
        }
        case KernelKind::Attention:
            return call.spec.as<AttnSpec>().heads;
        case KernelKind::Load:
        case KernelKind::Store:
            return 0;
        default:
            return 1;
    }
}

inline std::int64_t element_bits(const DataType& dt) {
    return dt.kind == DataType::Kind::Fixed ? dt.total_bits : 32;
}

}  // namespace rundetail

inline MockReport mock_cost_model(const DesignConfig& cfg) {
    MockReport r;
    std::int64_t mult_total = 0, bound_total = 0;
    std::size_t index = 0;
    for (const auto& call : cfg.calls) {
        const auto bounds = rundetail::call_bounds(cfg, call);
        const std::int64_t mult = rundetail::call_multipliers(call);
        std::int64_t bound_sum = 0, loop_size = 1;
        for (auto b : bounds) {
            bound_sum += b;
            loop_size *= b;
        }
        if (bounds.empty()) loop_size = 0;

        MockModuleCost m;
        m.kernel = kernel_kind_tag(call.spec.kind);
        m.name = m.kernel + "_" + std::to_string(index++);
        m.dsp = 3 * mult;
        m.lut = 12 * bound_sum + 40 * mult;
        m.ff = 2 * m.lut / 3;
        m.latency = std::max<std::int64_t>(
            loop_size == 0 ? 0 : 1, loop_size / std::max<std::int64_t>(1, mult));
        r.latency += m.latency;
        mult_total += mult;
        bound_total += bound_sum;
        r.modules.push_back(std::move(m));
    }
    r.dsp = 3 * mult_total;
    r.lut = 150 + 12 * bound_total + 40 * mult_total;
    r.ff = 2 * r.lut / 3;
    const std::int64_t bits = rundetail::element_bits(cfg.synth.data_type);
    for (const auto& mem : cfg.memories) {
        if (mem.space != MemSpace::OnChip) continue;
        const std::int64_t mem_bits = mem.shape.element_count() * bits;
        r.bram18k += (mem_bits + 18432 - 1) / 18432;
    }
    r.estimated_clock_ns = 0.87 * cfg.synth.clock_period_ns;
    return r;
}

namespace rundetail {

inline std::string xml_int(const char* tag, std::int64_t v) {
    std::ostringstream os;
    os << "    <" << tag << ">" << v << "</" << tag << ">\n";
    return os.str();
}

/// Same element structure a Vitis csynth.xml carries, reduced to the fields
/// the report pipeline reads.
inline std::string mock_csynth_xml(const DesignConfig& cfg, const MockReport& r) {
    char clk[32], est[32];
    std::snprintf(clk, sizeof clk, "%.3f", cfg.synth.clock_period_ns);
    std::snprintf(est, sizeof est, "%.3f", r.estimated_clock_ns);
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<profile>\n"
       << "  <UserAssignments>\n"
       << "    <TargetClockPeriod>" << clk << "</TargetClockPeriod>\n"
       << "    <Part>" << cfg.synth.part << "</Part>\n"
       << "    <TopModelName>" << cfg.synth.top_name << "</TopModelName>\n"
       << "  </UserAssignments>\n"
       << "  <PerformanceEstimates>\n"
       << "    <SummaryOfTimingAnalysis>\n"
       << "      <EstimatedClockPeriod>" << est << "</EstimatedClockPeriod>\n"
       << "    </SummaryOfTimingAnalysis>\n"
       << "    <SummaryOfOverallLatency>\n"
       << "      <Best-caseLatency>" << r.latency << "</Best-caseLatency>\n"
       << "      <Worst-caseLatency>" << r.latency << "</Worst-caseLatency>\n"
       << "    </SummaryOfOverallLatency>\n"
       << "  </PerformanceEstimates>\n"
       << "  <AreaEstimates>\n"
       << "    <Resources>\n"
       << xml_int("LUT", r.lut) << xml_int("FF", r.ff) << xml_int("DSP", r.dsp)
       << xml_int("BRAM_18K", r.bram18k)
       << "    </Resources>\n"
       << "  </AreaEstimates>\n"
       << "</profile>\n";
    return os.str();
}

/// Vivado-style utilization table for the implementation stage.
inline std::string mock_impl_rpt(const MockReport& r) {
    const std::int64_t lut = r.lut * 85 / 100;
    const std::int64_t ff = r.ff * 90 / 100;
    const std::int64_t bram = (r.bram18k + 1) / 2;
    std::ostringstream os;
    os << "+-------------------+--------+\n"
       << "| Site Type         |   Used |\n"
       << "+-------------------+--------+\n";
    auto row = [&](const char* name, std::int64_t v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "| %-17s | %6lld |\n", name,
                      static_cast<long long>(v));
        os << buf;
    };
    row("CLB LUTs", lut);
    row("CLB Registers", ff);
    row("DSPs", r.dsp);
    row("Block RAM Tile", bram);
    os << "+-------------------+--------+\n";
    return os.str();
}

inline json mock_modules_json(const DesignConfig& cfg, const MockReport& r) {
    json mods = json::array();
    for (const auto& m : r.modules)
        mods.push_back({{"name", m.name},
                        {"kernel", m.kernel},
                        {"lut", m.lut},
                        {"ff", m.ff},
                        {"dsp", m.dsp},
                        {"latency", m.latency}});
    return json{{"design", cfg.name},
                {"top", cfg.synth.top_name},
                {"totals",
                 {{"lut", r.lut},
                  {"ff", r.ff},
                  {"dsp", r.dsp},
                  {"bram18k", r.bram18k},
                  {"latency", r.latency}}},
                {"modules", std::move(mods)}};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) raise(ErrorKind::Io, "cannot write " + p.string());
}

}  // namespace rundetail

class MockBackend final : public Backend {
public:
    explicit MockBackend(MockSettings settings) : settings_(std::move(settings)) {}

    std::string name() const override { return "mock"; }

    StageOutcome run_stage(const Job& job, Stage stage) override {
        using namespace std::chrono;
        StageOutcome out;
        const double budget_ms = job.timeout_s * 1000.0;
        if (settings_.stage_ms > 0) {
            if (static_cast<double>(settings_.stage_ms) > budget_ms) {
                std::this_thread::sleep_for(duration<double, std::milli>(budget_ms));
                out.timed_out = true;
                out.log_excerpt = "mock " + stage_tag(stage) + " exceeded " +
                                  std::to_string(job.timeout_s) + "s budget";
                return out;
            }
            std::this_thread::sleep_for(milliseconds(settings_.stage_ms));
        }
        for (const auto& bad : settings_.fail) {
            if (bad == job.design.name && stage == settings_.fail_stage) {
                out.log_excerpt = "mock " + stage_tag(stage) + " failed by request";
                rundetail::write_text(job.work_dir / "logs" / (stage_tag(stage) + ".log"),
                                      out.log_excerpt + "\n");
                return out;
            }
        }

        const MockReport report = mock_cost_model(job.design);
        out.pass = true;
        std::ostringstream log;
        log << "mock " << stage_tag(stage) << " ok: lut=" << report.lut
            << " ff=" << report.ff << " dsp=" << report.dsp
            << " bram18k=" << report.bram18k << " latency=" << report.latency;
        out.log_excerpt = log.str();
        rundetail::write_text(job.work_dir / "logs" / (stage_tag(stage) + ".log"),
                              out.log_excerpt + "\n");
        if (stage == Stage::Synth) {
            const auto xml = job.work_dir / "reports" / "csynth.xml";
            const auto mods = job.work_dir / "reports" / "modules.json";
            rundetail::write_text(xml, rundetail::mock_csynth_xml(job.design, report));
            rundetail::write_text(mods,
                                  rundetail::mock_modules_json(job.design, report).dump(2) + "\n");
            out.report_paths = {xml.string(), mods.string()};
        } else if (stage == Stage::Impl) {
            const auto rpt = job.work_dir / "reports" / "impl_util.rpt";
            rundetail::write_text(rpt, rundetail::mock_impl_rpt(report));
            out.report_paths = {rpt.string()};
        }
        return out;
    }

private:
    MockSettings settings_;
};

inline std::unique_ptr<Backend> mock_backend(const RunConfig& run) {
    return std::make_unique<MockBackend>(run.mock);
}

// ---------------------------------------------------------------------------
// Vendor backend: external tool through a command template

/// Replaces {script}, {workdir} and {log} in a command template; any other
/// {placeholder} is an error.
inline std::string substitute_command(const std::string& tmpl, const std::string& script,
                                      const std::string& workdir, const std::string& log) {
    std::string out;
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        const auto close = tmpl.find('}', i);
        if (close == std::string::npos)
            raise(ErrorKind::Format, "unterminated placeholder in command template");
        const std::string key = tmpl.substr(i + 1, close - i - 1);
        if (key == "script") out += script;
        else if (key == "workdir") out += workdir;
        else if (key == "log") out += log;
        else raise(ErrorKind::Format, "unknown placeholder {" + key + "} in command template");
        i = close + 1;
    }
    return out;
}

namespace rundetail {

/// Whitespace tokenization; the command never goes through a shell.
inline std::vector<std::string> split_command(const std::string& cmd) {
    std::vector<std::string> argv;
    std::istringstream in(cmd);
    std::string tok;
    while (in >> tok) argv.push_back(tok);
    return argv;
}

inline bool executable_exists(const std::string& tool) {
    if (tool.find('/') != std::string::npos) return ::access(tool.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::istringstream dirs(path);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) continue;
        if (::access((dir + "/" + tool).c_str(), X_OK) == 0) return true;
    }
    return false;
}

inline std::string tail_of_file(const std::filesystem::path& p, std::size_t max_bytes = 2000) {
    std::ifstream in(p, std::ios::binary | std::ios::ate);
    if (!in) return {};
    const auto size = static_cast<std::size_t>(in.tellg());
    const auto want = std::min(size, max_bytes);
    in.seekg(static_cast<std::streamoff>(size - want));
    std::string text(want, '\0');
    in.read(text.data(), static_cast<std::streamsize>(want));
    return text;
}

}  // namespace rundetail

/// Runs each stage's generated tool script (`scripts/<stage>.tcl` inside the
/// job work dir) via the run config's command template.  The child gets its
/// own process group so a timeout can kill the whole tool tree.
class VendorBackend final : public Backend {
public:
    explicit VendorBackend(RunConfig run) : run_(std::move(run)) {
        const auto argv = rundetail::split_command(run_.vendor_command);
        if (argv.empty())
            raise(ErrorKind::Format, "vendor command template is empty");
        tool_ = argv.front();
        if (!rundetail::executable_exists(tool_))
            raise(ErrorKind::ToolNotFound, "vendor tool \"" + tool_ + "\" not found");
    }

    std::string name() const override { return "vendor"; }

    void check_available() const override {
        if (!rundetail::executable_exists(tool_))
            raise(ErrorKind::BackendUnavailable, "vendor tool \"" + tool_ + "\" not found");
    }

    StageOutcome run_stage(const Job& job, Stage stage) override {
        namespace fs = std::filesystem;
        // The child chdirs into the work dir before exec, so every path handed
        // to it (and to the template) must survive that: absolutize up front.
        const fs::path work = fs::absolute(job.work_dir);
        const fs::path script = work / "scripts" / (stage_tag(stage) + ".tcl");
        const fs::path log = work / "logs" / (stage_tag(stage) + ".log");
        std::error_code ec;
        fs::create_directories(log.parent_path(), ec);
        if (!fs::exists(script))
            raise(ErrorKind::Io, "missing stage script " + script.string());

        const std::string cmd = substitute_command(run_.vendor_command, script.string(),
                                                   work.string(), log.string());
        const int code = run_process(rundetail::split_command(cmd), work, log,
                                     job.timeout_s);
        StageOutcome out;
        out.timed_out = code == kTimedOut;
        out.pass = code == 0;
        out.log_excerpt = out.timed_out
                              ? "killed after " + std::to_string(job.timeout_s) + "s"
                              : rundetail::tail_of_file(log);
        if (!out.pass && !out.timed_out)
            out.log_excerpt = "exit " + std::to_string(code) + "\n" + out.log_excerpt;
        if (out.pass) {
            for (const char* rel : {"reports/csynth.xml", "reports/modules.json",
                                    "reports/impl_util.rpt"}) {
                const fs::path p = job.work_dir / rel;
                if (fs::exists(p)) out.report_paths.push_back(p.string());
            }
        }
        return out;
    }

private:
    static constexpr int kTimedOut = -1000;

    static int run_process(const std::vector<std::string>& argv,
                           const std::filesystem::path& workdir,
                           const std::filesystem::path& log, double timeout_s) {
        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);

        const pid_t pid = ::fork();
        if (pid < 0) raise(ErrorKind::Io, "fork failed");
        if (pid == 0) {
            ::setpgid(0, 0);
            if (::chdir(workdir.c_str()) != 0) ::_exit(127);
            const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
            if (fd >= 0) {
                ::dup2(fd, STDOUT_FILENO);
                ::dup2(fd, STDERR_FILENO);
                ::close(fd);
            }
            ::execvp(cargv[0], cargv.data());
            ::_exit(127);
        }
        ::setpgid(pid, pid);  // also from the parent: closes the race

        using clock = std::chrono::steady_clock;
        const auto deadline = clock::now() + std::chrono::duration<double>(timeout_s);
        int status = 0;
        for (;;) {
            const pid_t done = ::waitpid(pid, &status, WNOHANG);
            if (done == pid) break;
            if (done < 0) raise(ErrorKind::Io, "waitpid failed");
            if (clock::now() >= deadline) {
                ::kill(-pid, SIGKILL);
                ::waitpid(pid, &status, 0);
                return kTimedOut;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        if (WIFEXITED(status)) return WEXITSTATUS(status);
        return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    }

    RunConfig run_;
    std::string tool_;
};

inline std::unique_ptr<Backend> vendor_backend(const RunConfig& run) {
    return std::make_unique<VendorBackend>(run);
}

inline std::unique_ptr<Backend> make_backend(const RunConfig& run) {
    if (run.backend == "mock") return mock_backend(run);
    if (run.backend == "vendor") return vendor_backend(run);
    raise(ErrorKind::Schema, "unknown backend \"" + run.backend + "\" (want mock or vendor)");
}

}  // namespace forgebench
