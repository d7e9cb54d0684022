#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermo/expr.hpp"
#include "thermo/process.hpp"

namespace thermo {

struct ReportKnown {
    std::string name;
    double value = 0.0;
    std::string unit;
    std::string source;  // given | material | constant

    bool operator==(const ReportKnown&) const = default;
};

struct ReportGuard {
    std::string rule;
    std::string condition;  // e.g. "adiabatic=true"

    bool operator==(const ReportGuard&) const = default;
};

struct ReportStep {
    int index = 0;  // 1-based
    std::string equation;
    std::string template_name;
    std::string rendered;  // instance text with bound names
    std::string lhs;       // template text
    std::string rhs;
    Binding binding;
    std::vector<ReportGuard> guards;
    std::string solved;
    double value = 0.0;
    std::string unit;
    double residual = 0.0;
    std::string method;

    bool operator==(const ReportStep&) const = default;
};

struct ReportResult {
    std::string name;
    double value = 0.0;
    std::string unit;

    bool operator==(const ReportResult&) const = default;
};

struct AuditEntry {
    std::string equation;
    double residual = 0.0;
    bool on_path = false;
    bool ok = true;

    bool operator==(const AuditEntry&) const = default;
};

enum class SolveStatus { Solved, NotSolvable, InconsistentInput };
std::string_view to_string(SolveStatus status);

struct SolutionReport {
    std::string process_class;
    std::string material;
    AttributeSettings attributes;  // user-set and derived, per instance
    std::vector<ReportKnown> knowns;
    std::vector<std::string> targets;
    std::vector<ReportStep> steps;
    std::vector<ReportResult> results;
    std::vector<std::string> undetermined;
    std::vector<AuditEntry> audit;
    std::vector<std::string> warnings;
    SolveStatus status = SolveStatus::Solved;

    bool operator==(const SolutionReport&) const = default;
};

std::string to_markdown(const SolutionReport& report);
nlohmann::json to_json(const SolutionReport& report);
/// Inverse of to_json. Throws ParseError on a malformed document.
SolutionReport report_from_json(const nlohmann::json& doc);

/// Significant-digit formatting used by the markdown rendering.
std::string format_significant(double value, int digits = 6);

}  // namespace thermo
