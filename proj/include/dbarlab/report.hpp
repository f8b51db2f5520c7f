#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace dbarlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// One verified inequality or identity: lhs <= rhs up to tolerance, or a
/// residual against a bound. `anchor` names the mathematical fact being
/// checked ("plumbing" for infrastructure checks).
struct CheckRecord {
    std::string label;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    std::string status;  // "pass" | "fail" | "hypothesis-not-met"
    std::string anchor;

    bool passed() const { return status != "fail"; }
};

inline CheckRecord check_leq(std::string label, double lhs, double rhs, double tol,
                             std::string anchor) {
    CheckRecord r;
    r.label = std::move(label);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.tolerance = tol;
    r.status = lhs <= rhs + tol ? "pass" : "fail";
    r.anchor = std::move(anchor);
    return r;
}

inline CheckRecord check_hypothesis_not_met(std::string label, double lhs, double rhs,
                                            std::string anchor) {
    CheckRecord r;
    r.label = std::move(label);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.tolerance = 0.0;
    r.status = "hypothesis-not-met";
    r.anchor = std::move(anchor);
    return r;
}

struct Report {
    std::string suite;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<CheckRecord> checks;
    double wall_ms = 0.0;

    void add(CheckRecord c) { checks.push_back(std::move(c)); }

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed()) return false;
        return true;
    }

    std::size_t count(const std::string& status) const {
        std::size_t n = 0;
        for (const auto& c : checks)
            if (c.status == status) ++n;
        return n;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["suite"] = suite;
        j["version"] = kArtifactVersion;
        j["config"] = config;
        j["checks"] = nlohmann::ordered_json::array();
        for (const auto& c : checks) {
            nlohmann::ordered_json cj;
            cj["label"] = c.label;
            cj["lhs"] = c.lhs;
            cj["rhs"] = c.rhs;
            cj["slack"] = c.slack;
            cj["tolerance"] = c.tolerance;
            cj["status"] = c.status;
            cj["anchor"] = c.anchor.empty() ? "plumbing" : c.anchor;
            j["checks"].push_back(std::move(cj));
        }
        j["passed"] = count("pass");
        j["failed"] = count("fail");
        j["hypothesis_not_met"] = count("hypothesis-not-met");
        j["wall_ms"] = wall_ms;
        return j;
    }
};

}  // namespace dbarlab
