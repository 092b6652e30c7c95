// Sweep expansion: grid arithmetic, deterministic naming/order, the three
// built-in suites and their frozen totals, per-family structure, axis
// validation, and suite writing with a content-hashed manifest.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "forgebench/codegen.hpp"
#include "forgebench/kernels.hpp"
#include "forgebench/sweep.hpp"

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

const fb::ModuleCall& call_of_kind(const fb::DesignConfig& cfg, fb::KernelKind kind) {
    for (auto& c : cfg.calls)
        if (c.spec.kind == kind) return c;
    throw std::runtime_error("no such call");
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid arithmetic and ordering

TEST(ExpandGrid, ProductLaw) {
    fb::SweepSpec spec;
    spec.family = "gemm_chain";
    spec.axes = {
        {"dims", {json({2, 3, 4}), json({4, 4, 4}), json({8, 2, 8})}},
        {"loop_order", {json("ijk"), json("ikj"), json("jki"), json("kji")}},
    };
    EXPECT_EQ(spec.total(), 12);
    auto configs = fb::expand_grid(spec);
    EXPECT_EQ(configs.size(), 12u);
}

TEST(ExpandGrid, NamesAreSequentialAndZeroPadded) {
    fb::SweepSpec spec;
    spec.family = "gemm_chain";
    spec.axes = {{"loop_order", {json("ijk"), json("kji")}}};
    auto configs = fb::expand_grid(spec);
    ASSERT_EQ(configs.size(), 2u);
    EXPECT_EQ(configs[0].name, "gemm_chain_00000");
    EXPECT_EQ(configs[1].name, "gemm_chain_00001");
    EXPECT_EQ(configs[0].synth.top_name, "gemm_chain_00000");
}

TEST(ExpandGrid, LastAxisVariesFastest) {
    fb::SweepSpec spec;
    spec.family = "gemm_chain";
    spec.axes = {
        {"dims", {json({2, 3, 4}), json({4, 4, 4})}},
        {"loop_order", {json("ijk"), json("kji"), json("jik")}},
    };
    auto configs = fb::expand_grid(spec);
    ASSERT_EQ(configs.size(), 6u);
    auto chain = [](const fb::DesignConfig& c) {
        return c.calls.at(0).spec.as<fb::LinearSpec>();
    };
    // First three share dims {2,3,4} and walk the loop orders.
    EXPECT_EQ(chain(configs[0]).loop_order, "ijk");
    EXPECT_EQ(chain(configs[1]).loop_order, "kji");
    EXPECT_EQ(chain(configs[2]).loop_order, "jik");
    EXPECT_EQ(chain(configs[2]).m, 2);
    // Fourth rolls dims over and resets the fast axis.
    EXPECT_EQ(chain(configs[3]).loop_order, "ijk");
    EXPECT_EQ(chain(configs[3]).m, 4);
}

TEST(ExpandGrid, RerunIsByteIdentical) {
    fb::SweepSpec spec = fb::builtin_suite("llm_block");
    spec.axes[0].values = {json(8)};   // seq_len
    spec.axes[1].values = {json(32)};  // hidden
    auto a = fb::expand_grid(spec);
    auto b = fb::expand_grid(spec);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(fb::design_config_text(a[i]), fb::design_config_text(b[i]));
}

// ---------------------------------------------------------------------------
// Axis and family validation

TEST(ExpandGrid, RejectsBadSpecs) {
    fb::SweepSpec spec;
    spec.family = "mystery";
    EXPECT_EQ(kind_of([&] { fb::expand_grid(spec); }), fb::ErrorKind::Schema);

    spec.family = "gemm_chain";
    spec.axes = {{"dims", {}}};
    EXPECT_EQ(kind_of([&] { fb::expand_grid(spec); }), fb::ErrorKind::Schema);

    spec.axes = {{"dims", {json({2, 2, 2})}}, {"dims", {json({4, 4, 4})}}};
    EXPECT_EQ(kind_of([&] { fb::expand_grid(spec); }), fb::ErrorKind::Schema);
}

TEST(ExpandGrid, RejectsUnknownAxisName) {
    fb::SweepSpec spec;
    spec.family = "gemm_chain";
    spec.axes = {{"stride", {json(1)}}};
    EXPECT_EQ(kind_of([&] { fb::expand_grid(spec); }), fb::ErrorKind::InvalidAxisValue);
}

TEST(ExpandGrid, RejectsBadAxisValues) {
    auto expand_one = [](const std::string& family, std::vector<fb::SweepAxis> axes) {
        fb::SweepSpec spec;
        spec.family = family;
        spec.axes = std::move(axes);
        return kind_of([&] { fb::expand_grid(spec); });
    };
    // Divisibility between attention head axes.
    EXPECT_EQ(expand_one("llm_block", {{"hidden", {json(32)}}, {"heads", {json(5)}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("llm_block", {{"heads", {json(4)}}, {"kv_groups", {json(3)}}}),
              fb::ErrorKind::InvalidAxisValue);
    // Rotary embedding needs an even head dim (here 32/4 rolled to hidden=4 -> dim 1).
    EXPECT_EQ(expand_one("llm_block",
                         {{"hidden", {json(4)}}, {"heads", {json(4)}}, {"rope", {json(true)}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("llm_block", {{"dropout", {json(true)}}, {"dropout_p", {json(1.5)}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("llm_block", {{"norm", {json("l2")}}}),
              fb::ErrorKind::InvalidAxisValue);
    // Grouped conv needs even channel counts on both sides.
    EXPECT_EQ(expand_one("dnn_block",
                         {{"fmap", {json({3, 8, 8, 8})}}, {"grouped", {json(true)}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("dnn_block", {{"kernel", {json(0)}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("dnn_block", {{"activation", {json("step")}}}),
              fb::ErrorKind::InvalidAxisValue);
    // Malformed values: wrong arity, wrong type, nonpositive dims.
    EXPECT_EQ(expand_one("gemm_chain", {{"dims", {json({4, 4})}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("gemm_chain", {{"dims", {json({4, 0, 4})}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("gemm_chain", {{"loop_order", {json("iji")}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("gemm_chain", {{"assoc_order", {json("xABy")}}}),
              fb::ErrorKind::InvalidAxisValue);
    EXPECT_EQ(expand_one("llm_block", {{"rope", {json("yes")}}}),
              fb::ErrorKind::InvalidAxisValue);
}

// ---------------------------------------------------------------------------
// Built-in suites

TEST(BuiltinSuites, FrozenTotals) {
    auto suites = fb::builtin_suites();
    ASSERT_EQ(suites.size(), 3u);
    EXPECT_EQ(suites[0].family, "gemm_chain");
    EXPECT_EQ(suites[0].total(), 1920);
    EXPECT_EQ(suites[1].family, "dnn_block");
    EXPECT_EQ(suites[1].total(), 2304);
    EXPECT_EQ(suites[2].family, "llm_block");
    EXPECT_EQ(suites[2].total(), 1944);
    EXPECT_EQ(fb::builtin_suite("dnn_block"), suites[1]);
    EXPECT_EQ(kind_of([] { fb::builtin_suite("fft"); }), fb::ErrorKind::Schema);
}

TEST(BuiltinSuites, EveryConfigExpandsAndValidates) {
    // expand_grid validates each member internally, so a clean expansion of
    // all three suites is the proof.
    for (auto& suite : fb::builtin_suites()) {
        auto configs = fb::expand_grid(suite);
        EXPECT_EQ(static_cast<std::int64_t>(configs.size()), suite.total());
    }
}

TEST(BuiltinSuites, GemmChainFrozenSpotCheck) {
    // Axis strides: assoc_order fastest (4), then unroll (4), loop_order (6),
    // dims slowest. Index 5 = dims[0], loop ijk, unroll {2,2,1}, assoc [1].
    auto configs = fb::expand_grid(fb::builtin_suite("gemm_chain"));
    const auto& s = configs[5].calls.at(0).spec.as<fb::LinearSpec>();
    EXPECT_EQ(s.m, 4);
    EXPECT_EQ(s.k, 6);
    EXPECT_EQ(s.n, 2);
    EXPECT_EQ(s.loop_order, "ijk");
    EXPECT_EQ(s.unroll, (std::array<std::int64_t, 3>{2, 2, 1}));
    EXPECT_EQ(fb::assoc_order_tag(s.assoc_order), std::string("(xA)(By)"));
    // Interface contract of the family: x(m), A(m,k), B(k,n), y(n) -> r(1).
    ASSERT_EQ(configs[5].interfaces.size(), 5u);
    EXPECT_EQ(configs[5].interfaces[1].shape, (fb::TensorShape{{4, 6}}));
    EXPECT_EQ(configs[5].interfaces[4].shape, (fb::TensorShape{{1}}));
    // Last member takes the last value on every axis.
    const auto& last = configs.back().calls.at(0).spec.as<fb::LinearSpec>();
    EXPECT_EQ(last.m, 128);
    EXPECT_EQ(last.k, 64);
    EXPECT_EQ(last.n, 96);
    EXPECT_EQ(last.loop_order, "kji");
    EXPECT_EQ(last.unroll, (std::array<std::int64_t, 3>{4, 4, 4}));
    EXPECT_EQ(fb::assoc_order_tag(last.assoc_order), std::string("x(A(By))"));
}

TEST(BuiltinSuites, DnnBlockStructure) {
    fb::SweepSpec spec = fb::builtin_suite("dnn_block");
    // Pin all axes except grouped x bias to isolate the structural switches.
    spec.axes[0].values = {json(3)};                  // kernel
    spec.axes[1].values = {json({4, 8, 16, 16})};     // fmap
    spec.axes[4].values = {json("relu6")};            // activation
    spec.axes[5].values = {json({2, 2})};             // unroll
    auto configs = fb::expand_grid(spec);
    ASSERT_EQ(configs.size(), 4u);  // grouped x bias

    auto conv_of = [](const fb::DesignConfig& c) { return c.calls.at(0).spec.as<fb::ConvSpec>(); };
    // Enumeration order: (grouped, bias) = (f,f), (f,t), (t,f), (t,t).
    EXPECT_EQ(conv_of(configs[0]).groups, 1);
    EXPECT_FALSE(conv_of(configs[0]).bias);
    EXPECT_TRUE(conv_of(configs[1]).bias);
    EXPECT_EQ(conv_of(configs[2]).groups, 2);
    EXPECT_TRUE(conv_of(configs[3]).bias);

    // Grouped halves the per-filter input depth: (8, 4/2, 3, 3).
    EXPECT_EQ(configs[2].find_interface("w")->shape, (fb::TensorShape{{8, 2, 3, 3}}));
    EXPECT_EQ(configs[0].find_interface("w")->shape, (fb::TensorShape{{8, 4, 3, 3}}));
    // Bias adds a (out_ch) operand to the conv call.
    EXPECT_EQ(call_of_kind(configs[1], fb::KernelKind::Conv).inputs,
              (std::vector<std::string>{"x", "w", "b"}));
    EXPECT_EQ(configs[1].find_interface("b")->shape, (fb::TensorShape{{8}}));
    EXPECT_EQ(call_of_kind(configs[0], fb::KernelKind::Conv).inputs,
              (std::vector<std::string>{"x", "w"}));

    // Same-padding keeps the feature map size; pipeline is conv -> bn -> act.
    EXPECT_EQ(configs[0].find_interface("y")->shape, (fb::TensorShape{{8, 16, 16}}));
    ASSERT_EQ(configs[0].calls.size(), 3u);
    EXPECT_EQ(configs[0].calls[1].spec.kind, fb::KernelKind::Norm);
    EXPECT_EQ(configs[0].calls[1].spec.as<fb::NormSpec>().kind, fb::NormKind::BatchNorm);
    EXPECT_EQ(configs[0].calls[1].inputs,
              (std::vector<std::string>{"t_conv", "gamma", "beta", "mean", "var"}));
    EXPECT_EQ(configs[0].calls[2].spec.as<fb::ActSpec>().kind, fb::ActKind::Relu6);
    EXPECT_EQ(conv_of(configs[0]).padding, 1);
    EXPECT_EQ(conv_of(configs[0]).unroll_out, 2);
}

TEST(BuiltinSuites, LlmBlockStructure) {
    fb::SweepSpec spec = fb::builtin_suite("llm_block");
    spec.axes[0].values = {json(8)};    // seq_len
    spec.axes[1].values = {json(64)};   // hidden
    spec.axes[2].values = {json(8)};    // heads
    spec.axes[3].values = {json(2)};    // kv_groups
    spec.axes[4].values = {json(0.25), json(0.5)};  // dropout_p
    spec.axes[5].values = {json(true)};             // rope
    spec.axes[7].values = {json("rmsnorm")};        // norm
    auto configs = fb::expand_grid(spec);
    ASSERT_EQ(configs.size(), 4u);  // dropout_p x dropout

    // Enumeration order: (p, dropout) = (.25,f), (.25,t), (.5,f), (.5,t).
    // Without dropout the probability axis is inert: the two "off" members
    // are the same design apart from their names.
    fb::DesignConfig renamed = configs[2];
    renamed.name = configs[0].name;
    renamed.synth.top_name = configs[0].synth.top_name;
    EXPECT_EQ(renamed, configs[0]);
    ASSERT_EQ(configs[0].calls.size(), 2u);
    EXPECT_EQ(configs[0].calls[1].spec.kind, fb::KernelKind::Norm);

    // With dropout the sampled probability lands in the middle call.
    ASSERT_EQ(configs[3].calls.size(), 3u);
    const auto& drop = configs[3].calls[1].spec.as<fb::DropoutSpec>();
    EXPECT_EQ(drop.p, 0.5);
    EXPECT_EQ(drop.seed, 1234u);
    EXPECT_EQ(configs[1].calls[1].spec.as<fb::DropoutSpec>().p, 0.25);

    // Grouped-query projection shapes: wk/wv are (hidden, kv_groups * head_dim).
    const auto& attn = configs[0].calls[0].spec.as<fb::AttnSpec>();
    EXPECT_EQ(attn.kv_groups, 2);
    EXPECT_TRUE(attn.with_rope);
    EXPECT_EQ(configs[0].find_interface("wk")->shape, (fb::TensorShape{{64, 16}}));
    EXPECT_EQ(configs[0].find_interface("wq")->shape, (fb::TensorShape{{64, 64}}));
    EXPECT_EQ(configs[0].calls[0].inputs,
              (std::vector<std::string>{"x", "x", "x", "wq", "wk", "wv", "wo"}));
    // rmsnorm is gamma-only; layernorm members also carry beta.
    EXPECT_EQ(configs[0].calls[1].inputs, (std::vector<std::string>{"t_attn", "gamma"}));
    EXPECT_EQ(configs[0].find_interface("beta"), nullptr);

    spec.axes[7].values = {json("layernorm")};
    auto ln = fb::expand_grid(spec);
    EXPECT_EQ(ln[0].calls[1].inputs, (std::vector<std::string>{"t_attn", "gamma", "beta"}));
    ASSERT_NE(ln[0].find_interface("beta"), nullptr);
}

TEST(BuiltinSuites, BoundarySmokeRunsAreFinite) {
    // First and last member of each suite: generate vectors, run the oracle,
    // demand finite outputs end to end.
    for (auto& suite : fb::builtin_suites()) {
        auto configs = fb::expand_grid(suite);
        for (const fb::DesignConfig* cfg : {&configs.front(), &configs.back()}) {
            auto inputs = fb::make_test_vectors(*cfg, 7);
            auto outputs = fb::run_design(*cfg, inputs);
            ASSERT_FALSE(outputs.empty()) << cfg->name;
            for (auto& [name, tensor] : outputs)
                for (double v : tensor.data)
                    ASSERT_TRUE(std::isfinite(v)) << cfg->name << "." << name;
        }
    }
}

// ---------------------------------------------------------------------------
// Suite writing

TEST(WriteSuite, ManifestMatchesFilesAndIsIdempotent) {
    fb::SweepSpec spec = fb::builtin_suite("gemm_chain");
    spec.axes[0].values = {json({2, 3, 4})};
    spec.axes[1].values = {json("ijk"), json("kji")};
    spec.axes[2].values = {json({1, 1, 1})};
    auto configs = fb::expand_grid(spec);
    ASSERT_EQ(configs.size(), 8u);

    fs::path dir = fs::temp_directory_path() / "fb_sweep_suite_test";
    fs::remove_all(dir);
    auto manifest = fb::write_suite(configs, dir);
    EXPECT_EQ(manifest.suite, "gemm_chain");
    EXPECT_EQ(manifest.count, 8);
    ASSERT_EQ(manifest.files.size(), 8u);
    EXPECT_EQ(manifest.files.front().first, "gemm_chain_00000.json");

    // Each hash is the digest of the bytes on disk; the document reparses to
    // the in-memory config.
    for (std::size_t i = 0; i < manifest.files.size(); ++i) {
        const std::string text = slurp(dir / manifest.files[i].first);
        EXPECT_EQ(fb::sha256_hex(text), manifest.files[i].second);
        EXPECT_EQ(fb::parse_design_config(text), configs[i]);
    }
    const std::string manifest_bytes = slurp(dir / "manifest.json");
    json parsed = json::parse(manifest_bytes);
    EXPECT_EQ(parsed.at("suite"), "gemm_chain");
    EXPECT_EQ(parsed.at("count"), 8);
    EXPECT_EQ(parsed.at("files").size(), 8u);
    EXPECT_EQ(parsed.at("files")[0].at("sha256"), manifest.files[0].second);

    // Writing again reproduces every byte.
    auto again = fb::write_suite(configs, dir);
    EXPECT_EQ(again.files, manifest.files);
    EXPECT_EQ(slurp(dir / "manifest.json"), manifest_bytes);
    EXPECT_EQ(slurp(dir / manifest.files[3].first),
              fb::design_config_text(configs[3]));
    fs::remove_all(dir);
}

TEST(WriteSuite, ExplicitSuiteIdWins) {
    auto configs = fb::expand_grid(fb::SweepSpec{
        "gemm_chain", {{"loop_order", {json("ijk")}}}});
    fs::path dir = fs::temp_directory_path() / "fb_sweep_suite_id";
    fs::remove_all(dir);
    auto manifest = fb::write_suite(configs, dir, "smoke");
    EXPECT_EQ(manifest.suite, "smoke");
    EXPECT_EQ(json::parse(slurp(dir / "manifest.json")).at("suite"), "smoke");
    fs::remove_all(dir);
}

TEST(WriteSuite, RefusesUnwritableDirectory) {
    auto configs = fb::expand_grid(fb::SweepSpec{
        "gemm_chain", {{"loop_order", {json("ijk")}}}});
    EXPECT_EQ(kind_of([&] { fb::write_suite(configs, "/proc/fb_nope"); }),
              fb::ErrorKind::Io);
}
