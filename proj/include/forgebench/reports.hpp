// SPDX-License-Identifier: Apache-2.0
//
// Report analysis: parse synthesis XML and implementation utilization
// documents into a normalized PPA (performance/power/area) model, convert
// counts to device-relative percentages, aggregate whole suites into
// CSV/JSON tables, and compute before/after deltas for modularized designs.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "forgebench/config.hpp"

namespace forgebench {

// ---------------------------------------------------------------------------
// Normalized report model

enum class ReportStage { Synth, Impl };

inline const char* report_stage_tag(ReportStage s) {
    return s == ReportStage::Synth ? "synth" : "impl";
}

struct PPAReport {
    std::string design;
    ReportStage stage = ReportStage::Synth;
    std::int64_t lut = 0, ff = 0, dsp = 0, bram = 0;
    std::optional<std::int64_t> latency_cycles;
    std::optional<double> clock_achieved_ns;
    std::optional<double> clock_target_ns;
    std::optional<double> power_w;  // accepted when present, never synthesized
    std::string part;

    bool operator==(const PPAReport&) const = default;
};

struct DeviceCapacity {
    std::string part;
    std::int64_t lut = 0, ff = 0, dsp = 0, bram = 0;

    /// ZCU102 evaluation board (XCZU9EG): 274080 LUTs, 548160 FFs,
    /// 2520 DSP slices, 912 36K BRAMs = 1824 18K blocks.
    static DeviceCapacity zcu102() {
        return {"xczu9eg-ffvb1156-2-e", 274080, 548160, 2520, 1824};
    }

    bool operator==(const DeviceCapacity&) const = default;
};

inline DeviceCapacity parse_device_capacity_json(const json& doc) {
    ObjReader r(doc, "");
    DeviceCapacity cap;
    cap.part = r.get<std::string>("part");
    cap.lut = r.positive("lut");
    cap.ff = r.positive("ff");
    cap.dsp = r.positive("dsp");
    cap.bram = r.positive("bram18k");
    r.finish();
    return cap;
}

inline DeviceCapacity parse_device_capacity(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        raise(ErrorKind::Syntax, std::string("malformed JSON: ") + e.what());
    }
    return parse_device_capacity_json(doc);
}

// ---------------------------------------------------------------------------
// Parsing: synthesis XML

namespace repdetail {

inline std::string_view xml_block(std::string_view text, const std::string& tag,
                                  const std::string& path, bool required) {
    const std::string open = "<" + tag + ">", close = "</" + tag + ">";
    const auto b = text.find(open);
    if (b == std::string_view::npos) {
        if (required) raise(ErrorKind::Format, "missing element " + path);
        return {};
    }
    const auto start = b + open.size();
    const auto e = text.find(close, start);
    if (e == std::string_view::npos)
        raise(ErrorKind::Format, "unterminated element " + path);
    return text.substr(start, e - start);
}

inline std::string trimmed(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::int64_t to_int(const std::string& s, const std::string& path) {
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(s, &used);
        if (used != s.size() || v < 0) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        raise(ErrorKind::Format, "element " + path + " is not a nonnegative integer: \"" + s +
                                     "\"");
    }
}

inline double to_real(const std::string& s, const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        raise(ErrorKind::Format, "element " + path + " is not a number: \"" + s + "\"");
    }
}

inline PPAReport parse_csynth_xml(std::string_view text) {
    PPAReport r;
    r.stage = ReportStage::Synth;

    const auto area = xml_block(text, "AreaEstimates", "AreaEstimates", true);
    const auto res = xml_block(area, "Resources", "AreaEstimates.Resources", true);
    auto res_int = [&](std::initializer_list<const char*> tags,
                       const std::string& path) -> std::int64_t {
        for (const char* t : tags) {
            const auto v = xml_block(res, t, path, false);
            if (!v.empty() || res.find("<" + std::string(t) + ">") != std::string_view::npos)
                return to_int(trimmed(v), path);
        }
        raise(ErrorKind::Format, "missing element " + path);
    };
    r.lut = res_int({"LUT"}, "AreaEstimates.Resources.LUT");
    r.ff = res_int({"FF"}, "AreaEstimates.Resources.FF");
    r.dsp = res_int({"DSP", "DSP48E"}, "AreaEstimates.Resources.DSP");
    r.bram = res_int({"BRAM_18K"}, "AreaEstimates.Resources.BRAM_18K");

    const auto user = xml_block(text, "UserAssignments", "UserAssignments", false);
    if (!user.empty()) {
        r.design = trimmed(xml_block(user, "TopModelName", "UserAssignments.TopModelName", false));
        r.part = trimmed(xml_block(user, "Part", "UserAssignments.Part", false));
        const auto clk = trimmed(
            xml_block(user, "TargetClockPeriod", "UserAssignments.TargetClockPeriod", false));
        if (!clk.empty()) r.clock_target_ns = to_real(clk, "UserAssignments.TargetClockPeriod");
    }
    const auto perf = xml_block(text, "PerformanceEstimates", "PerformanceEstimates", false);
    if (!perf.empty()) {
        const auto timing =
            xml_block(perf, "SummaryOfTimingAnalysis", "PerformanceEstimates", false);
        const auto est = trimmed(xml_block(timing, "EstimatedClockPeriod",
                                           "SummaryOfTimingAnalysis.EstimatedClockPeriod", false));
        if (!est.empty())
            r.clock_achieved_ns = to_real(est, "SummaryOfTimingAnalysis.EstimatedClockPeriod");
        const auto lat =
            xml_block(perf, "SummaryOfOverallLatency", "PerformanceEstimates", false);
        for (const char* t : {"Worst-caseLatency", "Average-caseLatency"}) {
            const auto v = trimmed(xml_block(lat, t, std::string("SummaryOfOverallLatency.") + t,
                                             false));
            if (!v.empty()) {
                r.latency_cycles = to_int(v, std::string("SummaryOfOverallLatency.") + t);
                break;
            }
        }
    }
    const auto power = trimmed(xml_block(text, "TotalPower", "TotalPower", false));
    if (!power.empty()) r.power_w = to_real(power, "TotalPower");
    return r;
}

// ---------------------------------------------------------------------------
// Parsing: implementation utilization tables

/// Splits one `| a | b | c |` table line into trimmed cells.
inline std::vector<std::string> table_cells(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    std::vector<std::size_t> bars;
    for (std::size_t i = 0; i < line.size(); ++i)
        if (line[i] == '|') bars.push_back(i);
    for (std::size_t b = 0; b + 1 < bars.size(); ++b)
        cells.push_back(trimmed(line.substr(bars[b] + 1, bars[b + 1] - bars[b] - 1)));
    (void)start;
    return cells;
}

inline std::optional<std::int64_t> first_integer_cell(const std::vector<std::string>& cells) {
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const std::string& c = cells[i];
        if (c.empty()) continue;
        std::size_t used = 0;
        try {
            const std::int64_t v = std::stoll(c, &used);
            if (used == c.size() && v >= 0) return v;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

inline std::optional<double> first_real_cell(const std::vector<std::string>& cells) {
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const std::string& c = cells[i];
        if (c.empty()) continue;
        std::size_t used = 0;
        try {
            const double v = std::stod(c, &used);
            if (used == c.size()) return v;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

inline bool label_is(const std::string& cell, std::initializer_list<const char*> names) {
    for (const char* n : names)
        if (cell == n) return true;
    return false;
}

inline PPAReport parse_impl_util(std::string_view text) {
    PPAReport r;
    r.stage = ReportStage::Impl;
    bool got_lut = false, got_ff = false, got_dsp = false, got_bram = false;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.find('|') == std::string::npos) continue;
        const auto cells = table_cells(line);
        if (cells.size() < 2) continue;
        const std::string& label = cells[0];
        if (label_is(label, {"CLB LUTs", "Slice LUTs", "CLB LUTs*"})) {
            if (auto v = first_integer_cell(cells)) r.lut = *v, got_lut = true;
        } else if (label_is(label, {"CLB Registers", "Slice Registers"})) {
            if (auto v = first_integer_cell(cells)) r.ff = *v, got_ff = true;
        } else if (label_is(label, {"DSPs", "DSP Slices", "DSP48E1 only", "DSP48E2 only"})) {
            if (auto v = first_integer_cell(cells)) r.dsp = *v, got_dsp = true;
        } else if (label_is(label, {"Block RAM Tile", "RAMB36/FIFO*", "Block RAM Tile*"})) {
            if (auto v = first_integer_cell(cells)) r.bram = *v, got_bram = true;
        } else if (label_is(label, {"Total On-Chip Power (W)"})) {
            if (auto v = first_real_cell(cells)) r.power_w = *v;
        }
    }
    if (!got_lut) raise(ErrorKind::Format, "no LUT utilization row found");
    if (!got_ff) raise(ErrorKind::Format, "no register utilization row found");
    if (!got_dsp) raise(ErrorKind::Format, "no DSP utilization row found");
    if (!got_bram) raise(ErrorKind::Format, "no block RAM utilization row found");
    return r;
}

}  // namespace repdetail

enum class ReportFormat { CsynthXml, ImplUtil };

inline PPAReport parse_report(const std::string& text, ReportFormat format) {
    return format == ReportFormat::CsynthXml ? repdetail::parse_csynth_xml(text)
                                             : repdetail::parse_impl_util(text);
}

// ---------------------------------------------------------------------------
// Device-relative percentages

struct UtilPercent {
    double lut_pct = 0.0;
    double dsp_pct = 0.0;

    bool operator==(const UtilPercent&) const = default;
};

inline UtilPercent to_percent(const PPAReport& r, const DeviceCapacity& cap) {
    return {100.0 * static_cast<double>(r.lut) / static_cast<double>(cap.lut),
            100.0 * static_cast<double>(r.dsp) / static_cast<double>(cap.dsp)};
}

/// Relative change per component; a zero "before" component has no defined
/// change and is carried as an explicit undefined marker, never a number.
struct ChangePercent {
    std::optional<double> lut_pct;
    std::optional<double> dsp_pct;
};

inline ChangePercent change_percent(const UtilPercent& before, const UtilPercent& after) {
    ChangePercent c;
    if (before.lut_pct != 0.0)
        c.lut_pct = 100.0 * (after.lut_pct - before.lut_pct) / before.lut_pct;
    if (before.dsp_pct != 0.0)
        c.dsp_pct = 100.0 * (after.dsp_pct - before.dsp_pct) / before.dsp_pct;
    return c;
}

inline UtilPercent sum_totals(const std::vector<UtilPercent>& parts) {
    UtilPercent total;
    for (const auto& p : parts) {
        total.lut_pct += p.lut_pct;
        total.dsp_pct += p.dsp_pct;
    }
    return total;
}

/// Display rounding: internal math stays unrounded, tables print 2 decimals.
inline std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string format_pct(const std::optional<double>& v) {
    return v ? format_pct(*v) : "--";
}

// ---------------------------------------------------------------------------
// Suite aggregation

struct SuiteEntry {
    std::string design;
    PPAReport report;
    bool ok = true;
};

struct SuiteRow {
    std::string design;
    PPAReport report;
    UtilPercent util;
    bool ok = true;
};

struct SuiteTable {
    std::string part;
    std::vector<SuiteRow> rows;
};

inline SuiteTable aggregate_suite(std::vector<SuiteEntry> entries, const DeviceCapacity& cap) {
    std::sort(entries.begin(), entries.end(),
              [](const SuiteEntry& a, const SuiteEntry& b) { return a.design < b.design; });
    SuiteTable table;
    table.part = cap.part;
    for (auto& e : entries)
        table.rows.push_back(SuiteRow{e.design, e.report, to_percent(e.report, cap), e.ok});
    return table;
}

namespace repdetail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace repdetail

/// RFC-4180: CRLF line endings, quoting only where needed, one header row.
inline std::string suite_csv(const SuiteTable& table) {
    std::ostringstream os;
    os << "design,stage,lut,ff,dsp,bram,lut_pct,dsp_pct,latency_cycles,clock_ns,status\r\n";
    for (const auto& r : table.rows) {
        os << repdetail::csv_field(r.design) << ',' << report_stage_tag(r.report.stage) << ','
           << r.report.lut << ',' << r.report.ff << ',' << r.report.dsp << ',' << r.report.bram
           << ',' << format_pct(r.util.lut_pct) << ',' << format_pct(r.util.dsp_pct) << ',';
        if (r.report.latency_cycles) os << *r.report.latency_cycles;
        os << ',';
        if (r.report.clock_achieved_ns) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", *r.report.clock_achieved_ns);
            os << buf;
        }
        os << ',' << (r.ok ? "pass" : "fail") << "\r\n";
    }
    return os.str();
}

inline json suite_json(const SuiteTable& table) {
    json rows = json::array();
    for (const auto& r : table.rows) {
        json row{{"design", r.design},
                 {"stage", report_stage_tag(r.report.stage)},
                 {"lut", r.report.lut},
                 {"ff", r.report.ff},
                 {"dsp", r.report.dsp},
                 {"bram", r.report.bram},
                 {"lut_pct", r.util.lut_pct},
                 {"dsp_pct", r.util.dsp_pct},
                 {"status", r.ok ? "pass" : "fail"}};
        if (r.report.latency_cycles) row["latency_cycles"] = *r.report.latency_cycles;
        if (r.report.clock_achieved_ns) row["clock_ns"] = *r.report.clock_achieved_ns;
        if (r.report.power_w) row["power_w"] = *r.report.power_w;
        rows.push_back(std::move(row));
    }
    return json{{"part", table.part}, {"rows", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// Modularization deltas

/// One before/after comparison row: per-program utilization, their sum, the
/// shared kernel's own cost, the full modular design's cost, and the
/// relative change of the totals.
struct ModularRow {
    std::string name;
    std::vector<UtilPercent> programs;
    UtilPercent total_before;
    UtilPercent shared;
    UtilPercent total_after;
    ChangePercent change;
};

inline ModularRow modularization_summary(const std::vector<PPAReport>& before,
                                         const PPAReport& after_shared,
                                         const PPAReport& after_total,
                                         const DeviceCapacity& cap) {
    if (before.empty())
        raise(ErrorKind::Arity, "modularization summary needs at least one before-report");
    ModularRow row;
    for (const auto& r : before) row.programs.push_back(to_percent(r, cap));
    row.total_before = sum_totals(row.programs);
    row.shared = to_percent(after_shared, cap);
    row.total_after = to_percent(after_total, cap);
    row.change = change_percent(row.total_before, row.total_after);
    return row;
}

/// Markdown rendering of modularization rows: one table, one row per
/// comparison, every cell "(LUT%, DSP%)" at 2 decimals.
inline std::string modular_markdown(const std::vector<ModularRow>& rows) {
    std::size_t max_programs = 0;
    for (const auto& r : rows) max_programs = std::max(max_programs, r.programs.size());
    std::ostringstream os;
    os << "| Test Case |";
    for (std::size_t p = 0; p < max_programs; ++p) os << " P" << (p + 1) << " |";
    os << " Total (Before) | Shared | Total (After) | Change |\n";
    os << "| --- |";
    for (std::size_t p = 0; p < max_programs + 4; ++p) os << " --- |";
    os << "\n";
    auto pair_cell = [](const UtilPercent& u) {
        return "(" + format_pct(u.lut_pct) + ", " + format_pct(u.dsp_pct) + ")";
    };
    for (const auto& r : rows) {
        os << "| " << r.name << " |";
        for (std::size_t p = 0; p < max_programs; ++p)
            os << ' ' << (p < r.programs.size() ? pair_cell(r.programs[p]) : "--") << " |";
        os << ' ' << pair_cell(r.total_before) << " | " << pair_cell(r.shared) << " | "
           << pair_cell(r.total_after) << " | (" << format_pct(r.change.lut_pct) << ", "
           << format_pct(r.change.dsp_pct) << ") |\n";
    }
    return os.str();
}

}  // namespace forgebench
