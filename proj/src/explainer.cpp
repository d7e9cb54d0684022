#include "thermo/explainer.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "thermo/error.hpp"
#include "thermo/reasoner.hpp"

namespace thermo {

using nlohmann::json;

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Solved: return "solved";
        case SolveStatus::NotSolvable: return "not_solvable";
        case SolveStatus::InconsistentInput: return "inconsistent_input";
    }
    return "solved";
}

std::string format_significant(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return buf;
}

// ---------------------------------------------------------------------------

namespace {

std::string unit_of(const ProblemInstance& problem, const OntologySchema& schema, const std::string& name) {
    const auto found = problem.find_variable(name);
    return found ? schema.variables.at(found->second).si_unit : "";
}

}  // namespace

SolutionReport render_report(const SolutionPath& path, const Execution& execution,
                             const std::vector<EquationInstance>& instances, const ProblemInstance& problem,
                             const KnowledgeBase& kb) {
    const auto& schema = kb.schema();
    SolutionReport r;
    r.process_class = problem.process_class;
    r.material = problem.material;
    for (const auto& [id, inst] : problem.instances) {
        auto state = inst.attribute_state();
        if (!state.empty()) r.attributes[id] = std::move(state);
    }
    for (const auto& [name, k] : problem.knowns) {
        r.knowns.push_back({name, k.value, unit_of(problem, schema, name), std::string(to_string(k.source))});
    }
    r.targets = problem.targets;

    for (std::size_t i = 0; i < path.steps.size() && i < execution.steps.size(); ++i) {
        const auto& step = path.steps[i];
        const auto& inst = instances.at(step.equation);
        ReportStep s;
        s.index = static_cast<int>(i) + 1;
        s.equation = inst.name;
        s.template_name = inst.template_name;
        s.rendered = inst.rendered();
        s.lhs = inst.lhs.to_string();
        s.rhs = inst.rhs.to_string();
        s.binding = inst.binding;
        for (const auto& g : inst.guards) {
            std::string cond;
            if (const auto rule = schema.rules.find(g); rule != schema.rules.end()) {
                for (const auto& [attr, value] : rule->second.condition) {
                    cond += (cond.empty() ? "" : ", ") + attr + "=" + value;
                }
            }
            s.guards.push_back({g, cond});
        }
        s.solved = step.variable;
        s.value = execution.steps[i].value;
        s.unit = unit_of(problem, schema, step.variable);
        s.residual = execution.steps[i].residual;
        s.method = std::string(to_string(execution.steps[i].method));
        r.steps.push_back(std::move(s));
    }

    for (const auto& t : problem.targets) {
        const auto v = execution.valuation.find(t);
        if (v == execution.valuation.end()) {
            r.undetermined.push_back(t);
        } else {
            r.results.push_back({t, v->second, unit_of(problem, schema, t)});
        }
    }
    r.audit = execution.audit;
    r.warnings = execution.warnings;
    if (!r.undetermined.empty()) {
        std::string list;
        for (const auto& u : r.undetermined) list += (list.empty() ? "" : ", ") + u;
        r.warnings.push_back("undetermined: " + list);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Markdown

std::string to_markdown(const SolutionReport& r) {
    std::ostringstream out;
    auto unit = [](const std::string& u) { return u.empty() || u == "1" ? std::string() : " " + u; };
    out << "# Solution report\n\n";
    out << "- Process class: " << r.process_class << "\n";
    out << "- Material: " << (r.material.empty() ? "(none)" : r.material) << "\n";
    out << "- Status: " << to_string(r.status) << "\n";
    for (const auto& [inst, attrs] : r.attributes) {
        out << "- Attributes of " << inst << ":";
        for (const auto& [k, v] : attrs) out << " " << k << "=" << v;
        out << "\n";
    }
    out << "\n## Known values\n\n";
    out << "| Variable | Value | Unit | Source |\n|---|---|---|---|\n";
    for (const auto& k : r.knowns) {
        out << "| " << k.name << " | " << format_significant(k.value) << " | " << k.unit << " | " << k.source
            << " |\n";
    }
    out << "\n## Solution steps\n\n";
    if (r.steps.empty()) out << "No equations needed.\n";
    for (const auto& s : r.steps) {
        out << s.index << ". " << s.equation << ": " << s.rendered << "\n";
        if (!s.guards.empty()) {
            out << "   - applies because:";
            for (const auto& g : s.guards) out << " " << g.rule << " (" << g.condition << ")";
            out << "\n";
        }
        out << "   - " << s.solved << " = " << format_significant(s.value) << unit(s.unit) << " (" << s.method
            << ", residual " << format_significant(s.residual, 3) << ")\n";
    }
    out << "\n## Results\n\n";
    out << "| Target | Value | Unit |\n|---|---|---|\n";
    for (const auto& res : r.results) {
        out << "| " << res.name << " | " << format_significant(res.value) << " | " << res.unit << " |\n";
    }
    if (!r.undetermined.empty()) {
        out << "\nUndetermined:";
        for (const auto& u : r.undetermined) out << " " << u;
        out << "\n";
    }
    out << "\n## Audit\n\n";
    out << "| Equation | Residual | On path | OK |\n|---|---|---|---|\n";
    for (const auto& a : r.audit) {
        out << "| " << a.equation << " | " << format_significant(a.residual, 3) << " | " << (a.on_path ? "yes" : "no")
            << " | " << (a.ok ? "yes" : "no") << " |\n";
    }
    if (!r.warnings.empty()) {
        out << "\n## Warnings\n\n";
        for (const auto& w : r.warnings) out << "- " << w << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const SolutionReport& r) {
    json j;
    j["process_class"] = r.process_class;
    j["material"] = r.material;
    j["attributes"] = r.attributes;
    j["knowns"] = json::array();
    for (const auto& k : r.knowns) {
        j["knowns"].push_back({{"name", k.name}, {"value", k.value}, {"unit", k.unit}, {"source", k.source}});
    }
    j["targets"] = r.targets;
    j["steps"] = json::array();
    for (const auto& s : r.steps) {
        json guards = json::array();
        for (const auto& g : s.guards) guards.push_back({{"rule", g.rule}, {"condition", g.condition}});
        j["steps"].push_back({{"index", s.index},
                              {"equation", s.equation},
                              {"template", s.template_name},
                              {"rendered", s.rendered},
                              {"lhs", s.lhs},
                              {"rhs", s.rhs},
                              {"binding", s.binding},
                              {"guards", guards},
                              {"solved", s.solved},
                              {"value", s.value},
                              {"unit", s.unit},
                              {"residual", s.residual},
                              {"method", s.method}});
    }
    j["results"] = json::array();
    for (const auto& res : r.results) {
        j["results"].push_back({{"name", res.name}, {"value", res.value}, {"unit", res.unit}});
    }
    j["undetermined"] = r.undetermined;
    j["audit"] = json::array();
    for (const auto& a : r.audit) {
        j["audit"].push_back({{"equation", a.equation}, {"residual", a.residual}, {"on_path", a.on_path}, {"ok", a.ok}});
    }
    j["warnings"] = r.warnings;
    j["status"] = std::string(to_string(r.status));
    return j;
}

SolutionReport report_from_json(const json& j) {
    try {
        SolutionReport r;
        r.process_class = j.at("process_class").get<std::string>();
        r.material = j.at("material").get<std::string>();
        r.attributes = j.at("attributes").get<AttributeSettings>();
        for (const auto& k : j.at("knowns")) {
            r.knowns.push_back({k.at("name"), k.at("value"), k.at("unit"), k.at("source")});
        }
        r.targets = j.at("targets").get<std::vector<std::string>>();
        for (const auto& s : j.at("steps")) {
            ReportStep step;
            step.index = s.at("index");
            step.equation = s.at("equation");
            step.template_name = s.at("template");
            step.rendered = s.at("rendered");
            step.lhs = s.at("lhs");
            step.rhs = s.at("rhs");
            step.binding = s.at("binding").get<Binding>();
            for (const auto& g : s.at("guards")) step.guards.push_back({g.at("rule"), g.at("condition")});
            step.solved = s.at("solved");
            step.value = s.at("value");
            step.unit = s.at("unit");
            step.residual = s.at("residual");
            step.method = s.at("method");
            r.steps.push_back(std::move(step));
        }
        for (const auto& res : j.at("results")) r.results.push_back({res.at("name"), res.at("value"), res.at("unit")});
        r.undetermined = j.at("undetermined").get<std::vector<std::string>>();
        for (const auto& a : j.at("audit")) {
            r.audit.push_back({a.at("equation"), a.at("residual"), a.at("on_path"), a.at("ok")});
        }
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        const auto status = j.at("status").get<std::string>();
        if (status == "solved") {
            r.status = SolveStatus::Solved;
        } else if (status == "not_solvable") {
            r.status = SolveStatus::NotSolvable;
        } else if (status == "inconsistent_input") {
            r.status = SolveStatus::InconsistentInput;
        } else {
            throw Error(ErrorCode::ParseError, "unknown report status '" + status + "'", {status});
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
    }
}

}  // namespace thermo
