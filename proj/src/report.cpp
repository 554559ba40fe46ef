#include <cmath>
#include <cstdio>

#include "secreflect/errors.hpp"
#include "secreflect/harness.hpp"
#include "secreflect/util.hpp"

namespace secreflect {

ReportFormat parse_report_format(std::string_view text) {
    if (text == "csv")
        return ReportFormat::csv;
    if (text == "markdown" || text == "md")
        return ReportFormat::markdown;
    if (text == "structured" || text == "json")
        return ReportFormat::structured;
    throw UsageError("unknown report format '" + std::string(text) + "'");
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", value);
    std::string out = buf;
    if (out == "-0.0")
        out = "0.0";
    return out;
}

std::string format_delta(double from, double to) {
    const double diff = to - from;
    const std::string magnitude = format_number(std::fabs(diff));
    if (magnitude == "0.0")
        return "±0.0";
    return (diff > 0 ? "↑" : "↓") + magnitude;
}

namespace {

struct MetricField {
    const char* label;
    double MetricsRow::*field;
};

constexpr MetricField kFields[] = {
    {"Sec.Rate (macro)", &MetricsRow::sec_rate_macro},
    {"Sec.Rate (micro)", &MetricsRow::sec_rate_micro},
    {"Pass.Rate", &MetricsRow::pass_rate},
    {"Eff.Total", &MetricsRow::eff_total},
    {"Sec.Count", &MetricsRow::sec_count},
    {"Unres.Count", &MetricsRow::unres_count},
};

std::string column_label(Mode mode) { return mode == Mode::base ? "Base" : "+Reflex"; }

} // namespace

std::string render_markdown_report(const std::map<Mode, MetricsRow>& rows,
                                   const std::vector<CweDelta>& deltas) {
    if (rows.empty())
        throw MetricsError("no metrics rows to report");
    const auto base = rows.find(Mode::base);
    const auto reflex = rows.find(Mode::reflex);
    const bool both = base != rows.end() && reflex != rows.end();

    std::string out = "# Benchmark report\n\n";
    const int n = rows.begin()->second.gens;
    out += "N = " + std::to_string(n) + " generations per scenario and repeat; counts are means over (scenario, repeat) cells.\n\n";

    out += "| Metric |";
    std::string rule = "|---|";
    for (const auto& [mode, row] : rows) {
        out += " " + column_label(mode) + " |";
        rule += "---|";
    }
    out += "\n" + rule + "\n";
    for (const auto& f : kFields) {
        out += std::string("| ") + f.label + " |";
        for (const auto& [mode, row] : rows) {
            out += " " + format_number(row.*(f.field));
            if (both && mode == Mode::reflex)
                out += " (" + format_delta(base->second.*(f.field), row.*(f.field)) + ")";
            out += " |";
        }
        out += "\n";
    }
    out += "\nCells excluded from the macro Sec.Rate (nothing compiled):";
    for (const auto& [mode, row] : rows)
        out += " " + std::string(to_string(mode)) + " " + std::to_string(row.excluded_cells) + "/" +
               std::to_string(row.cells) + ";";
    out.back() = '\n';

    out += "\n## Per-CWE Sec.Rate difference\n\n";
    if (deltas.empty()) {
        out += "Per-CWE comparison omitted: no CWE has results for both base and reflex modes.\n";
        return out;
    }
    out += "| CWE | Base | +Reflex | Difference |\n|---|---|---|---|\n";
    for (const auto& d : deltas)
        out += "| " + d.cwe + " | " + format_number(d.base) + " | " + format_number(d.reflex) +
               " | " + format_delta(d.base, d.reflex) + " |\n";
    return out;
}

std::string render_metrics_csv(const std::map<Mode, MetricsRow>& rows) {
    std::string out =
        "mode,sec_rate_macro,sec_rate_micro,pass_rate,eff_total,sec_count,unres_count,excluded_cells\n";
    for (const auto& [mode, row] : rows)
        out += std::string(to_string(mode)) + "," + format_number(row.sec_rate_macro) + "," +
               format_number(row.sec_rate_micro) + "," + format_number(row.pass_rate) + "," +
               format_number(row.eff_total) + "," + format_number(row.sec_count) + "," +
               format_number(row.unres_count) + "," + std::to_string(row.excluded_cells) + "\n";
    return out;
}

std::string render_cwe_csv(const std::vector<CweDelta>& deltas) {
    std::string out = "cwe,base_sec_rate_macro,reflex_sec_rate_macro,difference\n";
    for (const auto& d : deltas)
        out += d.cwe + "," + format_number(d.base) + "," + format_number(d.reflex) + "," +
               format_number(d.difference()) + "\n";
    return out;
}

nlohmann::json render_structured_report(const std::map<Mode, MetricsRow>& rows,
                                        const std::vector<CweDelta>& deltas) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [mode, row] : rows)
        metrics[std::string(to_string(mode))] = {{"sec_rate_macro", row.sec_rate_macro},
                                                 {"sec_rate_micro", row.sec_rate_micro},
                                                 {"pass_rate", row.pass_rate},
                                                 {"eff_total", row.eff_total},
                                                 {"sec_count", row.sec_count},
                                                 {"unres_count", row.unres_count},
                                                 {"cells", row.cells},
                                                 {"excluded_cells", row.excluded_cells},
                                                 {"gens", row.gens}};
    nlohmann::json per_cwe = nlohmann::json::array();
    for (const auto& d : deltas)
        per_cwe.push_back({{"cwe", d.cwe},
                           {"base_sec_rate_macro", d.base},
                           {"reflex_sec_rate_macro", d.reflex},
                           {"difference", d.difference()}});
    return {{"metrics", metrics}, {"per_cwe", per_cwe}};
}

std::vector<std::filesystem::path> emit_report(const std::map<Mode, MetricsRow>& rows,
                                               const std::vector<CweDelta>& deltas,
                                               ReportFormat format,
                                               const std::filesystem::path& out_dir) {
    if (rows.empty())
        throw MetricsError("no metrics rows to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw UsageError("cannot create report directory " + out_dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    switch (format) {
    case ReportFormat::markdown:
        written.push_back(out_dir / "report.md");
        write_file_atomic(written.back(), render_markdown_report(rows, deltas));
        break;
    case ReportFormat::csv:
        written.push_back(out_dir / "metrics.csv");
        write_file_atomic(written.back(), render_metrics_csv(rows));
        written.push_back(out_dir / "per_cwe.csv");
        write_file_atomic(written.back(), render_cwe_csv(deltas));
        break;
    case ReportFormat::structured:
        written.push_back(out_dir / "metrics.json");
        write_file_atomic(written.back(), render_structured_report(rows, deltas).dump(2) + "\n");
        break;
    }
    return written;
}

} // namespace secreflect
