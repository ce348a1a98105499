#pragma once

#include <string>
#include <vector>

namespace nnlab {

// Outcome of one named audit. `skipped` audits are out of model for the
// run (precondition not met) and never count as failures; failures set
// pass = false and always carry at least one witness.
struct AuditReport {
    std::string audit;
    bool pass = true;
    bool skipped = false;
    std::string reason;  // skip reason, or a short failure summary
    double observed = 0.0;
    double bound = 0.0;
    double slack = 0.0;
    std::vector<std::string> witnesses;
};

// Canonical JSON array for a report list (stable key order and number
// formatting: identical inputs give identical bytes).
std::string audit_reports_to_json(const std::vector<AuditReport>& reports);
// CSV twin: audit,pass,skipped,observed,bound,slack,reason,witnesses
// (witnesses ';'-joined; commas stripped from free text).
std::string audit_reports_to_csv(const std::vector<AuditReport>& reports);

// Validates a JSON document against the shipped report schema
// (schemas/audit_report.schema.json semantics: array of objects with the
// required typed fields). Returns true on success; otherwise fills
// `error`.
bool validate_audit_report_json(const std::string& json_text, std::string* error);

}  // namespace nnlab
