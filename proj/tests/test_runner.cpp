// Parallel flow runner: job planning, bounded-pool execution semantics
// (cap, ordering, timeout, crash isolation, fail-fast), the deterministic
// mock backend and its documented cost model, and the vendor backend's
// process control.

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <thread>

#include "forgebench/runner.hpp"

namespace fb = forgebench;
namespace fs = std::filesystem;
using fb::json;

namespace {

fb::ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const fb::Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return fb::ErrorKind::Syntax;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Minimal valid design: one gemm behind three interfaces.
fb::DesignConfig tiny_design(const std::string& name, std::int64_t unroll_i = 1) {
    fb::DesignConfig cfg;
    cfg.name = name;
    cfg.synth.top_name = name;
    auto iface = [](std::string n, fb::Direction d, fb::TensorShape s) {
        fb::InterfaceDecl decl;
        decl.name = std::move(n);
        decl.direction = d;
        decl.shape = std::move(s);
        return decl;
    };
    cfg.interfaces = {iface("a", fb::Direction::In, {2, 3}),
                      iface("b", fb::Direction::In, {3, 2}),
                      iface("c", fb::Direction::Out, {2, 2})};
    fb::LinearSpec s;
    s.variant = fb::LinearSpec::Variant::Gemm;
    s.m = 2;
    s.k = 3;
    s.n = 2;
    s.unroll = {unroll_i, 1, 1};
    cfg.calls = {fb::ModuleCall{fb::OperatorSpec{fb::KernelKind::Gemm, s}, {"a", "b"}, {"c"}}};
    return cfg;
}

fs::path fresh_dir(const std::string& leaf) {
    fs::path dir = fs::temp_directory_path() / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Instrumented backend: tracks peak concurrency, sleeps on request, can
/// crash on a given job or refuse to start.
class ProbeBackend final : public fb::Backend {
public:
    std::string name() const override { return "probe"; }

    void check_available() const override {
        if (unavailable)
            fb::raise(fb::ErrorKind::BackendUnavailable, "probe backend switched off");
    }

    fb::StageOutcome run_stage(const fb::Job& job, fb::Stage) override {
        calls.fetch_add(1);
        const int now = in_flight.fetch_add(1) + 1;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        int ms = default_sleep_ms;
        if (auto it = sleep_ms.find(job.design.name); it != sleep_ms.end()) ms = it->second;
        if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        in_flight.fetch_sub(1);
        if (job.design.name == crash_on) throw std::runtime_error("probe exploded");
        fb::StageOutcome out;
        out.pass = true;
        return out;
    }

    std::atomic<int> calls{0}, in_flight{0}, peak{0};
    std::map<std::string, int> sleep_ms;
    int default_sleep_ms = 0;
    std::string crash_on;
    bool unavailable = false;
};

json stripped_results(const std::vector<fb::JobResult>& results) {
    json j = fb::run_results_json(results);
    for (auto& job : j.at("jobs")) {
        job.erase("wall_s");
        for (auto& st : job.at("stages")) st.erase("wall_s");
    }
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Planning

TEST(PlanJobs, OneJobPerConfigWithFlowBudgetAndDirs) {
    fb::RunConfig run;
    run.out_dir = "scratch";
    run.timeout_s = 42;
    auto a = tiny_design("alpha");
    auto b = tiny_design("beta");
    b.synth.flow = {fb::Stage::Csim};
    auto c = tiny_design("gamma");
    c.synth.flow = {fb::Stage::Csim, fb::Stage::Synth, fb::Stage::Cosim, fb::Stage::Impl};

    auto jobs = fb::plan_jobs({a, b, c}, run);
    ASSERT_EQ(jobs.size(), 3u);
    EXPECT_EQ(jobs[0].design.name, "alpha");
    EXPECT_EQ(jobs[0].work_dir, fs::path("scratch") / "jobs" / "alpha");
    EXPECT_EQ(jobs[0].stages, (std::vector<fb::Stage>{fb::Stage::Csim, fb::Stage::Synth}));
    EXPECT_EQ(jobs[1].stages, (std::vector<fb::Stage>{fb::Stage::Csim}));
    EXPECT_EQ(jobs[2].stages.size(), 4u);
    EXPECT_EQ(jobs[2].timeout_s, 42.0);
    EXPECT_TRUE(fb::plan_jobs({}, run).empty());
}

// ---------------------------------------------------------------------------
// Execution semantics

TEST(Execute, MockRunPassesAndWritesReports) {
    fb::RunConfig run;
    run.out_dir = fresh_dir("fb_runner_mock").string();
    auto jobs = fb::plan_jobs({tiny_design("solo")}, run);
    auto backend = fb::mock_backend(run);
    auto results = fb::execute(jobs, *backend, 2);

    ASSERT_EQ(results.size(), 1u);
    EXPECT_TRUE(results[0].ok());
    ASSERT_EQ(results[0].stages.size(), 2u);
    EXPECT_EQ(results[0].stages[0].status, fb::StageStatus::Pass);
    EXPECT_NE(results[0].stages[1].log_excerpt.find("lut="), std::string::npos);
    const fs::path job_dir = jobs[0].work_dir;
    EXPECT_TRUE(fs::exists(job_dir / "reports" / "csynth.xml"));
    EXPECT_TRUE(fs::exists(job_dir / "reports" / "modules.json"));
    EXPECT_TRUE(fs::exists(job_dir / "logs" / "synth.log"));
    ASSERT_EQ(results[0].report_paths.size(), 2u);
    EXPECT_TRUE(fs::exists(results[0].report_paths[0]));
    fs::remove_all(run.out_dir);
}

TEST(Execute, ConcurrencyIsCappedAtWorkerCount) {
    fb::RunConfig run;
    std::vector<fb::DesignConfig> configs;
    for (int i = 0; i < 8; ++i) configs.push_back(tiny_design("job" + std::to_string(i)));
    auto jobs = fb::plan_jobs(configs, run);
    for (auto& j : jobs) j.stages = {fb::Stage::Synth};

    ProbeBackend probe;
    probe.default_sleep_ms = 25;
    auto results = fb::execute(jobs, probe, 2);
    EXPECT_EQ(probe.peak.load(), 2);  // capped, and the cap is reached
    EXPECT_EQ(probe.calls.load(), 8);
    for (auto& r : results) EXPECT_TRUE(r.ok());
}

TEST(Execute, ResultOrderMatchesInputOrderUnderShuffledDurations) {
    fb::RunConfig run;
    std::vector<fb::DesignConfig> configs;
    ProbeBackend probe;
    for (int i = 0; i < 10; ++i) {
        std::string name = "mix" + std::to_string(i);
        configs.push_back(tiny_design(name));
        probe.sleep_ms[name] = (9 - i) * 7;  // earliest jobs take longest
    }
    auto jobs = fb::plan_jobs(configs, run);
    for (auto& j : jobs) j.stages = {fb::Stage::Synth};
    auto results = fb::execute(jobs, probe, 4);
    ASSERT_EQ(results.size(), 10u);
    for (std::size_t i = 0; i < results.size(); ++i)
        EXPECT_EQ(results[i].job, configs[i].name) << i;
}

TEST(Execute, StageTimeoutIsMarkedAndLaterStagesSkip) {
    fb::RunConfig run;
    run.out_dir = fresh_dir("fb_runner_timeout").string();
    run.mock.stage_ms = 100;
    auto jobs = fb::plan_jobs({tiny_design("slow")}, run);
    jobs[0].timeout_s = 0.001;  // 1 ms budget against a 100 ms stage
    auto backend = fb::mock_backend(run);

    const auto t0 = std::chrono::steady_clock::now();
    auto results = fb::execute(jobs, *backend, 1);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(results[0].stages.size(), 2u);
    EXPECT_EQ(results[0].stages[0].status, fb::StageStatus::Timeout);
    EXPECT_EQ(results[0].stages[1].status, fb::StageStatus::Skipped);
    EXPECT_FALSE(results[0].ok());
    EXPECT_LT(wall, 5.0);  // the 100 ms stage was not waited out per retry
    fs::remove_all(run.out_dir);
}

TEST(Execute, InjectedFailureSkipsTheRestOfThatJobOnly) {
    fb::RunConfig run;
    run.out_dir = fresh_dir("fb_runner_fail").string();
    run.mock.fail = {"broken"};
    run.mock.fail_stage = fb::Stage::Synth;
    auto good = tiny_design("fine");
    auto bad = tiny_design("broken");
    for (auto* cfg : {&good, &bad})
        cfg->synth.flow = {fb::Stage::Csim, fb::Stage::Synth, fb::Stage::Cosim, fb::Stage::Impl};
    auto jobs = fb::plan_jobs({good, bad}, run);
    auto backend = fb::mock_backend(run);
    auto results = fb::execute(jobs, *backend, 2);

    EXPECT_TRUE(results[0].ok());
    const auto& stages = results[1].stages;
    ASSERT_EQ(stages.size(), 4u);
    EXPECT_EQ(stages[0].status, fb::StageStatus::Pass);
    EXPECT_EQ(stages[1].status, fb::StageStatus::Fail);
    EXPECT_EQ(stages[2].status, fb::StageStatus::Skipped);
    EXPECT_EQ(stages[3].status, fb::StageStatus::Skipped);
    fs::remove_all(run.out_dir);
}

TEST(Execute, BackendCrashIsIsolatedToItsJob) {
    fb::RunConfig run;
    auto jobs = fb::plan_jobs({tiny_design("ok1"), tiny_design("boom"), tiny_design("ok2")}, run);
    for (auto& j : jobs) j.stages = {fb::Stage::Csim, fb::Stage::Synth};
    ProbeBackend probe;
    probe.crash_on = "boom";
    auto results = fb::execute(jobs, probe, 3);

    EXPECT_TRUE(results[0].ok());
    EXPECT_TRUE(results[2].ok());
    EXPECT_FALSE(results[1].ok());
    EXPECT_EQ(results[1].stages[0].status, fb::StageStatus::Fail);
    EXPECT_NE(results[1].stages[0].log_excerpt.find("probe exploded"), std::string::npos);
    EXPECT_EQ(results[1].stages[1].status, fb::StageStatus::Skipped);
}

TEST(Execute, UnavailableBackendFailsFastBeforeAnyJob) {
    fb::RunConfig run;
    auto jobs = fb::plan_jobs({tiny_design("never")}, run);
    ProbeBackend probe;
    probe.unavailable = true;
    EXPECT_EQ(kind_of([&] { fb::execute(jobs, probe, 2); }),
              fb::ErrorKind::BackendUnavailable);
    EXPECT_EQ(probe.calls.load(), 0);
}

TEST(Execute, RejectsBadArguments) {
    ProbeBackend probe;
    auto jobs = fb::plan_jobs({tiny_design("x")}, fb::RunConfig{});
    EXPECT_EQ(kind_of([&] { fb::execute(jobs, probe, 0); }), fb::ErrorKind::Arity);
    jobs[0].stages = {fb::Stage::Synth, fb::Stage::Csim};
    EXPECT_EQ(kind_of([&] { fb::execute(jobs, probe, 1); }), fb::ErrorKind::Schema);
    jobs[0].stages = {fb::Stage::Csim, fb::Stage::Csim};
    EXPECT_EQ(kind_of([&] { fb::execute(jobs, probe, 1); }), fb::ErrorKind::Schema);
}

TEST(Execute, ResultsAreIdenticalAcrossRunsAndWorkerCounts) {
    fb::RunConfig run;
    run.out_dir = fresh_dir("fb_runner_det").string();
    std::vector<fb::DesignConfig> configs;
    for (int i = 0; i < 6; ++i) configs.push_back(tiny_design("det" + std::to_string(i), 1 + i % 2));
    auto jobs = fb::plan_jobs(configs, run);
    auto backend = fb::mock_backend(run);

    auto first = fb::execute(jobs, *backend, 1);
    const json base = stripped_results(first);
    const std::string xml = slurp(jobs[2].work_dir / "reports" / "csynth.xml");
    for (int workers : {1, 4, 16}) {
        auto again = fb::execute(jobs, *backend, workers);
        EXPECT_EQ(stripped_results(again), base) << workers;
        EXPECT_EQ(slurp(jobs[2].work_dir / "reports" / "csynth.xml"), xml) << workers;
    }
    fs::remove_all(run.out_dir);
}

// ---------------------------------------------------------------------------
// Mock cost model

TEST(CostModel, EmptyDesignHasOnlyBaseOverhead) {
    fb::DesignConfig cfg;
    cfg.name = "empty";
    auto r = fb::mock_cost_model(cfg);
    EXPECT_EQ(r.dsp, 0);
    EXPECT_EQ(r.lut, 150);
    EXPECT_EQ(r.ff, 100);
    EXPECT_EQ(r.bram18k, 0);
    EXPECT_EQ(r.latency, 0);
    EXPECT_TRUE(r.modules.empty());
}

TEST(CostModel, GemmArithmeticIsTheDocumentedFormula) {
    auto cfg = tiny_design("g");
    auto& s = std::get<fb::LinearSpec>(cfg.calls[0].spec.payload);
    s.m = 4;
    s.k = 6;
    s.n = 2;
    s.unroll = {2, 2, 1};
    auto r = fb::mock_cost_model(cfg);
    // mult = 4, bounds sum = 12, loop size = 48.
    EXPECT_EQ(r.dsp, 3 * 4);
    EXPECT_EQ(r.lut, 150 + 12 * 12 + 40 * 4);
    EXPECT_EQ(r.ff, 2 * r.lut / 3);
    EXPECT_EQ(r.latency, 48 / 4);
    ASSERT_EQ(r.modules.size(), 1u);
    EXPECT_EQ(r.modules[0].kernel, "gemm");
    EXPECT_EQ(r.modules[0].dsp, 12);

    // Doubling the unroll product doubles the modeled DSP count.
    s.unroll = {2, 2, 2};
    auto r2 = fb::mock_cost_model(cfg);
    EXPECT_EQ(r2.dsp, 2 * r.dsp);
    EXPECT_EQ(r2.latency, 48 / 8);

    // Pure function: same design, same numbers.
    auto r3 = fb::mock_cost_model(cfg);
    EXPECT_EQ(r3.lut, r2.lut);
    EXPECT_EQ(r3.dsp, r2.dsp);
    EXPECT_EQ(r3.latency, r2.latency);
}

TEST(CostModel, BramCountsOnChipMemoriesOnly) {
    fb::DesignConfig cfg;
    cfg.name = "mem";
    fb::MemoryDecl on;
    on.name = "buf";
    on.space = fb::MemSpace::OnChip;
    on.shape = fb::TensorShape{{600}};  // 600 * 32 bits = 19200 -> 2 blocks
    fb::MemoryDecl off;
    off.name = "dram";
    off.space = fb::MemSpace::OffChip;
    off.shape = fb::TensorShape{{4096}};
    cfg.memories = {on, off};
    auto r = fb::mock_cost_model(cfg);
    EXPECT_EQ(r.bram18k, 2);

    cfg.synth.data_type = fb::DataType::fixed(16, 6);  // 16-bit elements halve the bits
    EXPECT_EQ(fb::mock_cost_model(cfg).bram18k, 1);
}

TEST(CostModel, PerKindBoundsAndMultipliers) {
    fb::DesignConfig cfg;
    cfg.name = "kinds";
    auto iface = [](std::string n, fb::Direction d, fb::TensorShape s) {
        fb::InterfaceDecl decl;
        decl.name = std::move(n);
        decl.direction = d;
        decl.shape = std::move(s);
        return decl;
    };
    cfg.interfaces = {iface("x", fb::Direction::In, {2, 6, 6}),
                      iface("w", fb::Direction::In, {4, 2, 3, 3}),
                      iface("y", fb::Direction::Out, {4, 4, 4})};
    fb::ConvSpec conv;
    conv.in_ch = 2;
    conv.out_ch = 4;
    conv.h = 6;
    conv.w = 6;
    conv.kernel = 3;
    conv.unroll_in = 1;
    conv.unroll_out = 2;
    cfg.calls = {fb::ModuleCall{fb::OperatorSpec{fb::KernelKind::Conv, conv}, {"x", "w"}, {"y"}}};
    auto r = fb::mock_cost_model(cfg);
    // bounds {4,2,4,4,3,3} sum 20, loop 1152; mult 2.
    EXPECT_EQ(r.dsp, 6);
    EXPECT_EQ(r.lut, 150 + 12 * 20 + 40 * 2);
    EXPECT_EQ(r.latency, 1152 / 2);
    EXPECT_EQ(r.estimated_clock_ns, 0.87 * 10.0);

    fb::AttnSpec attn;
    attn.seq_len = 4;
    attn.hidden = 8;
    attn.heads = 4;
    cfg.calls = {fb::ModuleCall{fb::OperatorSpec{fb::KernelKind::Attention, attn},
                                {"x", "x", "x", "w", "w", "w", "w"},
                                {"y"}}};
    EXPECT_EQ(fb::mock_cost_model(cfg).dsp, 12);  // one lane per head

    fb::MoveSpec mv;
    mv.direction = fb::MoveDir::Load;
    mv.shape = {2, 3};
    cfg.calls = {fb::ModuleCall{fb::OperatorSpec{fb::KernelKind::Load, mv}, {"x"}, {"y"}}};
    auto rm = fb::mock_cost_model(cfg);
    EXPECT_EQ(rm.dsp, 0);  // data movement owns no multipliers
    EXPECT_EQ(rm.latency, 6);
}

TEST(CostModel, SynthesizedReportFilesEmbedTheModel) {
    fb::RunConfig run;
    run.out_dir = fresh_dir("fb_runner_reportfiles").string();
    auto cfg = tiny_design("probe_report");
    cfg.synth.flow = {fb::Stage::Csim, fb::Stage::Synth, fb::Stage::Cosim, fb::Stage::Impl};
    auto jobs = fb::plan_jobs({cfg}, run);
    auto backend = fb::mock_backend(run);
    auto results = fb::execute(jobs, *backend, 1);
    ASSERT_TRUE(results[0].ok());

    const auto model = fb::mock_cost_model(cfg);
    const std::string xml = slurp(jobs[0].work_dir / "reports" / "csynth.xml");
    EXPECT_NE(xml.find("<LUT>" + std::to_string(model.lut) + "</LUT>"), std::string::npos);
    EXPECT_NE(xml.find("<DSP>" + std::to_string(model.dsp) + "</DSP>"), std::string::npos);
    EXPECT_NE(xml.find("<Worst-caseLatency>" + std::to_string(model.latency)), std::string::npos);
    EXPECT_NE(xml.find("<TopModelName>probe_report</TopModelName>"), std::string::npos);
    EXPECT_NE(xml.find("<EstimatedClockPeriod>8.700</EstimatedClockPeriod>"), std::string::npos);

    const json mods = json::parse(slurp(jobs[0].work_dir / "reports" / "modules.json"));
    EXPECT_EQ(mods.at("totals").at("lut"), model.lut);
    EXPECT_EQ(mods.at("modules").size(), 1u);
    EXPECT_EQ(mods.at("modules")[0].at("kernel"), "gemm");

    // Implementation derates LUT/FF and packs BRAM into 36K tiles.
    const std::string rpt = slurp(jobs[0].work_dir / "reports" / "impl_util.rpt");
    EXPECT_NE(rpt.find("CLB LUTs"), std::string::npos);
    EXPECT_NE(rpt.find(std::to_string(model.lut * 85 / 100)), std::string::npos);
    EXPECT_NE(rpt.find(std::to_string(model.ff * 90 / 100)), std::string::npos);
    fs::remove_all(run.out_dir);
}

// ---------------------------------------------------------------------------
// Vendor backend

TEST(VendorBackend, TemplateSubstitutionIsExact) {
    EXPECT_EQ(fb::substitute_command("tool -f {script} -cwd {workdir} > {log}", "a.tcl", "wd",
                                     "x.log"),
              "tool -f a.tcl -cwd wd > x.log");
    EXPECT_EQ(kind_of([] { fb::substitute_command("tool {nope}", "a", "b", "c"); }),
              fb::ErrorKind::Format);
    EXPECT_EQ(kind_of([] { fb::substitute_command("tool {script", "a", "b", "c"); }),
              fb::ErrorKind::Format);
}

TEST(VendorBackend, MissingToolIsReportedAtConstruction) {
    fb::RunConfig run;
    run.backend = "vendor";
    run.vendor_command = "fb_no_such_tool_zz9 -f {script}";
    EXPECT_EQ(kind_of([&] { fb::vendor_backend(run); }), fb::ErrorKind::ToolNotFound);
}

namespace {

fs::path write_fake_tool(const fs::path& dir, const std::string& name,
                         const std::string& body) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << "#!/bin/sh\n" << body << "\n";
    out.close();
    fs::permissions(p, fs::perms::owner_all | fs::perms::group_all);
    return p;
}

fb::Job vendor_job(const fs::path& root, const std::string& name,
                   std::vector<fb::Stage> stages) {
    fb::Job job;
    job.design = tiny_design(name);
    job.work_dir = root / "jobs" / name;
    job.stages = std::move(stages);
    job.timeout_s = 30.0;
    for (auto st : job.stages) {
        fs::create_directories(job.work_dir / "scripts");
        std::ofstream(job.work_dir / "scripts" / (fb::stage_tag(st) + ".tcl"))
            << "# stage script\n";
    }
    return job;
}

}  // namespace

TEST(VendorBackend, RunsProcessCapturesLogAndExitCode) {
    const fs::path root = fresh_dir("fb_runner_vendor");
    write_fake_tool(root, "ok_tool", "echo running $2; exit 0");
    write_fake_tool(root, "sad_tool", "echo broken; exit 3");

    fb::RunConfig run;
    run.vendor_command = (root / "ok_tool").string() + " -f {script}";
    auto ok = fb::vendor_backend(run);
    auto job = vendor_job(root, "vjob", {fb::Stage::Csim, fb::Stage::Synth});
    auto results = fb::execute({job}, *ok, 1);
    ASSERT_TRUE(results[0].ok());
    EXPECT_NE(results[0].stages[1].log_excerpt.find("running"), std::string::npos);
    EXPECT_NE(slurp(job.work_dir / "logs" / "csim.log").find("csim.tcl"), std::string::npos);

    run.vendor_command = (root / "sad_tool").string() + " -f {script}";
    auto sad = fb::vendor_backend(run);
    auto failed = fb::execute({job}, *sad, 1);
    EXPECT_EQ(failed[0].stages[0].status, fb::StageStatus::Fail);
    EXPECT_NE(failed[0].stages[0].log_excerpt.find("exit 3"), std::string::npos);
    EXPECT_EQ(failed[0].stages[1].status, fb::StageStatus::Skipped);
    fs::remove_all(root);
}

TEST(VendorBackend, TimeoutKillsTheProcessGroup) {
    const fs::path root = fresh_dir("fb_runner_vendor_to");
    write_fake_tool(root, "slow_tool", "sleep 30");
    fb::RunConfig run;
    run.vendor_command = (root / "slow_tool").string() + " -f {script}";
    auto backend = fb::vendor_backend(run);
    auto job = vendor_job(root, "slow", {fb::Stage::Csim});
    job.timeout_s = 0.2;

    const auto t0 = std::chrono::steady_clock::now();
    auto results = fb::execute({job}, *backend, 1);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_EQ(results[0].stages[0].status, fb::StageStatus::Timeout);
    EXPECT_LT(wall, 10.0);  // nowhere near the tool's 30 s sleep
    fs::remove_all(root);
}

TEST(VendorBackend, MissingStageScriptFailsThatJob) {
    const fs::path root = fresh_dir("fb_runner_vendor_noscript");
    write_fake_tool(root, "ok_tool", "exit 0");
    fb::RunConfig run;
    run.vendor_command = (root / "ok_tool").string() + " -f {script}";
    auto backend = fb::vendor_backend(run);
    fb::Job job;
    job.design = tiny_design("bare");
    job.work_dir = root / "jobs" / "bare";
    job.stages = {fb::Stage::Csim};
    auto results = fb::execute({job}, *backend, 1);
    EXPECT_EQ(results[0].stages[0].status, fb::StageStatus::Fail);
    EXPECT_NE(results[0].stages[0].log_excerpt.find("missing stage script"), std::string::npos);
    fs::remove_all(root);
}

// ---------------------------------------------------------------------------
// Dispatch and summaries

TEST(MakeBackend, DispatchesOnRunConfig) {
    fb::RunConfig run;
    EXPECT_EQ(fb::make_backend(run)->name(), "mock");
    run.backend = "vendor";
    run.vendor_command = "/bin/sh {script}";
    EXPECT_EQ(fb::make_backend(run)->name(), "vendor");
    run.backend = "quantum";
    EXPECT_EQ(kind_of([&] { fb::make_backend(run); }), fb::ErrorKind::Schema);
}

TEST(RunResults, JsonSummaryAndFileRoundTrip) {
    fb::RunConfig run;
    run.out_dir = fresh_dir("fb_runner_results").string();
    run.mock.fail = {"lemon"};
    auto jobs = fb::plan_jobs({tiny_design("peach"), tiny_design("lemon")}, run);
    auto backend = fb::mock_backend(run);
    auto results = fb::execute(jobs, *backend, 2);

    json j = fb::run_results_json(results);
    EXPECT_EQ(j.at("total"), 2);
    EXPECT_EQ(j.at("passed"), 1);
    EXPECT_EQ(j.at("failed"), 1);
    EXPECT_EQ(j.at("jobs")[0].at("job"), "peach");
    EXPECT_EQ(j.at("jobs")[1].at("ok"), false);
    EXPECT_EQ(j.at("jobs")[1].at("stages")[1].at("status"), "fail");

    const fs::path path = fs::path(run.out_dir) / "run_results.json";
    fb::write_run_results(results, path);
    EXPECT_EQ(json::parse(slurp(path)).at("passed"), 1);
    fs::remove_all(run.out_dir);
}
