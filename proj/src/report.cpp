#include "trialpower/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <vector>

#include "trialpower/error.hpp"

namespace trialpower {

namespace {

using Row = std::vector<std::string>;

std::string day_text(const std::optional<int>& day) { return day ? std::to_string(*day) : ""; }

// "prop_odds@14" -> "prop_odds"; the day has its own column.
std::string strip_day(std::string_view label) {
    const auto at = label.find('@');
    if (at == std::string_view::npos) return std::string(label);
    std::string out(label.substr(0, at));
    const auto colon = label.find(':', at);
    if (colon != std::string_view::npos) out += label.substr(colon);
    return out;
}

Row power_row(const PowerRow& r) {
    MethodSpec undated = r.method;
    undated.day.reset();
    return {undated.label(), day_text(r.method.day), "", "", "", "", "",
            format_real(r.rejection_rate), format_real(r.mc_se), std::to_string(r.n_sims),
            std::to_string(r.n_degenerate)};
}

Row result_row(const TestResult& r) {
    return {strip_day(r.method), day_text(r.day), format_real(r.estimate), format_real(r.ci_low),
            format_real(r.ci_high), format_real(r.statistic), format_real(r.p_value), "", "", "", ""};
}

void write_csv(const std::vector<Row>& rows, std::ostream& out) {
    out << kReportColumns << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

void write_aligned(const Row& header, const std::vector<Row>& rows, std::ostream& out) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    auto emit = [&](const Row& row) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line += "  ";
            const std::string& cell = row[i];
            // first column left-aligned, numbers right-aligned
            if (i == 0) {
                line += cell + std::string(width[i] - cell.size(), ' ');
            } else {
                line += std::string(width[i] - cell.size(), ' ') + cell;
            }
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
}

template <typename Fn>
void to_file(const std::string& path, Fn&& write) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    write(out);
    out.flush();
    if (!out) throw DataError("write failed for " + path);
}

}  // namespace

std::string format_real(double value) {
    if (std::isnan(value)) return "NA";
    if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "text") return ReportFormat::text;
    throw ConfigError("report format must be csv or text");
}

void write_report(const PowerTable& table, std::ostream& out, ReportFormat format) {
    if (format == ReportFormat::csv) {
        std::vector<Row> rows;
        for (const auto& r : table.rows) rows.push_back(power_row(r));
        write_csv(rows, out);
        return;
    }
    std::vector<Row> rows;
    for (const auto& r : table.rows) {
        MethodSpec undated = r.method;
        undated.day.reset();
        rows.push_back({undated.label(), day_text(r.method.day), format_real(r.rejection_rate),
                        format_real(r.mc_se), std::to_string(r.n_sims), std::to_string(r.n_degenerate)});
    }
    write_aligned({"method", "day", "power", "mc_se", "n_sims", "degenerate"}, rows, out);
}

void write_report(std::span<const TestResult> results, std::ostream& out, ReportFormat format) {
    if (format == ReportFormat::csv) {
        std::vector<Row> rows;
        for (const auto& r : results) rows.push_back(result_row(r));
        write_csv(rows, out);
        return;
    }
    std::vector<Row> rows;
    for (const auto& r : results) {
        rows.push_back({strip_day(r.method), day_text(r.day), format_real(r.estimate),
                        format_real(r.ci_low), format_real(r.ci_high), format_real(r.p_value),
                        r.converged ? r.diagnostic : "not estimable: " + r.diagnostic});
    }
    write_aligned({"method", "day", "estimate", "ci_low", "ci_high", "p_value", "note"}, rows, out);
}

void write_report(const PowerTable& table, const std::string& path, ReportFormat format) {
    to_file(path, [&](std::ostream& out) { write_report(table, out, format); });
}

void write_report(std::span<const TestResult> results, const std::string& path, ReportFormat format) {
    to_file(path, [&](std::ostream& out) { write_report(results, out, format); });
}

}  // namespace trialpower
