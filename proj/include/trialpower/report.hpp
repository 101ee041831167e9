#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "trialpower/inference.hpp"
#include "trialpower/power.hpp"

namespace trialpower {

enum class ReportFormat { csv, text };

ReportFormat parse_report_format(std::string_view name);

/// CSV columns, in order:
/// method,day,estimate,ci_low,ci_high,statistic,p_value,rejection_rate,mc_se,n_sims,n_degenerate
/// Reals use 6 significant digits; fields that do not apply are empty and
/// undefined values print as NA.
inline constexpr std::string_view kReportColumns =
    "method,day,estimate,ci_low,ci_high,statistic,p_value,rejection_rate,mc_se,n_sims,n_degenerate";

void write_report(const PowerTable& table, std::ostream& out, ReportFormat format);
void write_report(std::span<const TestResult> results, std::ostream& out, ReportFormat format);

/// File variants; throw DataError when the path cannot be written.
void write_report(const PowerTable& table, const std::string& path, ReportFormat format);
void write_report(std::span<const TestResult> results, const std::string& path, ReportFormat format);

/// "%.6g", with NA for NaN and Inf / -Inf for infinities.
std::string format_real(double value);

}  // namespace trialpower
