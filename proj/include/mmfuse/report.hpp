#pragma once

// CSV / markdown / SVG renderers for experiment results.
//
// Files written by emit_report:
//   table2.csv  gesture,error_pct,correct_pct
//   table3.csv  command,error_pct,correct_pct,recovered_pct
//   table4.csv  operation,block_1..block_k,error_pct,variance
//   summary.md  all three tables plus aggregates
//   fusion_chart.svg
// Percentages carry one decimal, variances two.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mmfuse/errors.hpp"
#include "mmfuse/experiment.hpp"
#include "mmfuse/reference.hpp"
#include "mmfuse/stats.hpp"

namespace mmfuse {

inline std::string format_pct(double v) { return fmt::format("{:.1f}", v); }
inline std::string format_variance(double v) { return fmt::format("{:.2f}", v); }

struct FusedRow {
    std::string label;
    BlockStats stats;
};

struct ReportData {
    std::vector<ItemResult> gesture_items; ///< may be empty
    std::vector<ItemResult> speech_items;  ///< may be empty
    std::vector<FusedRow> fused;           ///< may be empty
    std::optional<std::array<OperationCalibration, 5>> calibration;
    std::uint64_t seed = 0;
};

inline std::string modality_csv(const std::vector<ItemResult>& items, Modality m) {
    std::string out = m == Modality::Emg ? "gesture,error_pct,correct_pct\n" : "command,error_pct,correct_pct,recovered_pct\n";
    for (const auto& r : items) {
        out += r.label + "," + format_pct(r.error_pct) + "," + format_pct(r.correct_pct);
        if (m == Modality::Speech) out += "," + format_pct(r.recovered_pct);
        out += "\n";
    }
    return out;
}

inline std::string fused_csv(const std::vector<FusedRow>& rows) {
    std::size_t blocks = 0;
    for (const auto& r : rows) blocks = std::max(blocks, r.stats.block_errors.size());
    std::string out = "operation";
    for (std::size_t b = 1; b <= blocks; ++b) out += ",block_" + std::to_string(b);
    out += ",error_pct,variance\n";
    for (const auto& r : rows) {
        out += r.label;
        for (std::size_t b = 0; b < blocks; ++b) {
            out += ",";
            if (b < r.stats.block_errors.size()) out += std::to_string(r.stats.block_errors[b]);
        }
        out += "," + format_pct(r.stats.error_pct) + "," + format_variance(r.stats.variance) + "\n";
    }
    return out;
}

inline std::string summary_markdown(const ReportData& d) {
    std::string md = fmt::format("# Fusion simulation report\n\nSeed: {}\n\n", d.seed);
    auto modality_table = [&](const std::vector<ItemResult>& items, const char* title, const char* col,
                              const auto& published) {
        if (items.empty()) return;
        md += fmt::format("## {}\n\n| {} | Error % | Correct % | Published error % |\n|---|---|---|---|\n", title, col);
        std::vector<double> correct;
        for (std::size_t i = 0; i < items.size(); ++i) {
            md += fmt::format("| {} | {} | {} | {} |\n", items[i].label, format_pct(items[i].error_pct),
                              format_pct(items[i].correct_pct), format_pct(published[i]));
            correct.push_back(items[i].correct_pct);
        }
        md += fmt::format("\nMean accuracy: {:.2f}%\n\n", mean_accuracy(correct));
    };
    modality_table(d.gesture_items, "Gesture channel", "Gesture", reference::kGestureErrorPct);
    modality_table(d.speech_items, "Speech channel", "Command", reference::kSpeechErrorPct);

    if (!d.fused.empty()) {
        md += "## Fused operations\n\n| Operation | Blocks | Error % | Variance | Published error % |\n|---|---|---|---|---|\n";
        std::vector<BlockStats> stats;
        for (const auto& r : d.fused) {
            std::string blocks;
            for (int e : r.stats.block_errors) blocks += (blocks.empty() ? "" : " ") + std::to_string(e);
            std::string published = "-";
            try {
                published = format_pct(reference::fused_error_rate(parse_operation(r.label)) * 100.0);
            } catch (const Error&) {
            }
            md += fmt::format("| {} | {} | {} | {} | {} |\n", r.label, blocks, format_pct(r.stats.error_pct),
                              format_variance(r.stats.variance), published);
            stats.push_back(r.stats);
        }
        const double avg = fused_error_summary(stats);
        md += fmt::format("\nAverage fused error: {:.2f}% (accuracy {:.2f}%)\n\n", avg, 100.0 - avg);
    }
    if (d.calibration) {
        md += "## Detection calibration\n\n| Operation | g | s | target | d |\n|---|---|---|---|---|\n";
        for (const auto& c : *d.calibration) {
            md += fmt::format("| {} | {:.3f} | {:.3f} | {:.3f} | {:.4f} |\n", c.op.label(), c.g, c.s, c.target,
                              c.detection.d);
        }
        md += "\n";
    }
    md += fmt::format(
        "## Note on the published aggregate\n\n"
        "The published fused error rates average {:.1f}%, i.e. {:.1f}% accuracy. The separately quoted "
        "post-fusion accuracy of more than {:.2f}% does not follow from those rates and is not reproduced here.\n",
        reference::kFusedMeanErrorPct, 100.0 - reference::kFusedMeanErrorPct, reference::kClaimedFusedAccuracyPct);
    return md;
}

/// Grouped bar chart: error % and variance for each operation.
inline std::string render_chart_svg(const std::vector<FusedRow>& rows) {
    if (rows.empty()) throw InvalidInput("chart needs at least one operation");
    for (const auto& r : rows) {
        if (r.label.empty()) throw InvalidInput("chart labels must not be empty");
    }
    double top = 1.0;
    for (const auto& r : rows) top = std::max({top, r.stats.error_pct, r.stats.variance});
    top = std::ceil(top);

    constexpr double kLeft = 60, kTop = 40, kPlotH = 240, kGroupW = 140, kBarW = 40;
    const double width = kLeft + kGroupW * static_cast<double>(rows.size()) + 40;
    const double height = kTop + kPlotH + 80;
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '&') o += "&amp;";
            else if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '"') o += "&quot;";
            else o += c;
        }
        return o;
    };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
        width, height, width, height);
    svg += fmt::format("<text x=\"{:.0f}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">"
                       "Error % and variance of fused inputs</text>\n",
                       width / 2);
    svg += fmt::format("<line x1=\"{0:.0f}\" y1=\"{1:.0f}\" x2=\"{0:.0f}\" y2=\"{2:.0f}\" stroke=\"black\"/>\n", kLeft,
                       kTop, kTop + kPlotH);
    svg += fmt::format("<line x1=\"{0:.0f}\" y1=\"{1:.0f}\" x2=\"{2:.0f}\" y2=\"{1:.0f}\" stroke=\"black\"/>\n", kLeft,
                       kTop + kPlotH, width - 20);
    for (int t = 0; t <= 4; ++t) {
        const double v = top * t / 4.0;
        const double y = kTop + kPlotH - kPlotH * t / 4.0;
        svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                           "text-anchor=\"end\">{:.2f}</text>\n",
                           kLeft - 6, y + 4, v);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double x0 = kLeft + kGroupW * static_cast<double>(i) + 20;
        const double he = kPlotH * r.stats.error_pct / top;
        const double hv = kPlotH * r.stats.variance / top;
        svg += fmt::format("<g class=\"bar-group\" data-operation=\"{}\">\n", esc(r.label));
        svg += fmt::format("  <rect class=\"error-pct\" x=\"{:.1f}\" y=\"{:.2f}\" width=\"{:.0f}\" height=\"{:.2f}\" "
                           "fill=\"#1f77b4\"><title>error % {}</title></rect>\n",
                           x0, kTop + kPlotH - he, kBarW, he, format_pct(r.stats.error_pct));
        svg += fmt::format("  <rect class=\"variance\" x=\"{:.1f}\" y=\"{:.2f}\" width=\"{:.0f}\" height=\"{:.2f}\" "
                           "fill=\"#ff7f0e\"><title>variance {}</title></rect>\n",
                           x0 + kBarW + 4, kTop + kPlotH - hv, kBarW, hv, format_variance(r.stats.variance));
        svg += fmt::format("  <text x=\"{:.1f}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"10\" "
                           "text-anchor=\"middle\">{}</text>\n",
                           x0 + kBarW + 2, kTop + kPlotH + 16, esc(r.label));
        svg += "</g>\n";
    }
    const double ly = height - 24;
    svg += fmt::format("<rect x=\"{:.0f}\" y=\"{:.0f}\" width=\"12\" height=\"12\" fill=\"#1f77b4\"/>"
                       "<text x=\"{:.0f}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"12\">Error %</text>\n",
                       kLeft, ly, kLeft + 16, ly + 10);
    svg += fmt::format("<rect x=\"{:.0f}\" y=\"{:.0f}\" width=\"12\" height=\"12\" fill=\"#ff7f0e\"/>"
                       "<text x=\"{:.0f}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"12\">Variance</text>\n",
                       kLeft + 90, ly, kLeft + 106, ly + 10);
    svg += "</svg>\n";
    return svg;
}

namespace detail {
inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + p.string());
    os << content;
    if (!os) throw IoError("failed writing " + p.string());
}
} // namespace detail

inline void emit_chart(const std::filesystem::path& file, const std::vector<FusedRow>& rows) {
    detail::write_file(file, render_chart_svg(rows));
}

/// Writes the CSV tables present in d, the markdown summary and the chart
/// (when fused rows exist) into dir, creating it if needed. Returns the paths.
inline std::vector<std::filesystem::path> emit_report(const std::filesystem::path& dir, const ReportData& d) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create report directory " + dir.string());
    std::vector<std::filesystem::path> written;
    auto put = [&](const char* name, const std::string& content) {
        detail::write_file(dir / name, content);
        written.push_back(dir / name);
    };
    if (!d.gesture_items.empty()) put("table2.csv", modality_csv(d.gesture_items, Modality::Emg));
    if (!d.speech_items.empty()) put("table3.csv", modality_csv(d.speech_items, Modality::Speech));
    if (!d.fused.empty()) put("table4.csv", fused_csv(d.fused));
    put("summary.md", summary_markdown(d));
    if (!d.fused.empty()) put("fusion_chart.svg", render_chart_svg(d.fused));
    return written;
}

} // namespace mmfuse
