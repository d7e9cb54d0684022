#include "thermo/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "thermo/error.hpp"

namespace thermo {

// ---------------------------------------------------------------------------
// Equation setup

namespace {

struct Anchor {
    const ChangeSpec* change = nullptr;
    std::string state;  // state instance id for per-state templates
};

bool qualifier_is(const OntologySchema& schema, const std::string& qualifier, const std::string& kind) {
    return schema.concepts.count(qualifier) && schema.is_a(qualifier, kind);
}

std::optional<Binding> bind(const EquationTemplate& tmpl, const Anchor& anchor, const ProblemInstance& problem,
                            const OntologySchema& schema) {
    Binding binding;
    for (const auto& slot : tmpl.slots) {
        std::string id;
        if (slot.role > 0) {
            if (!anchor.change || slot.role > static_cast<int>(anchor.change->states.size())) {
                throw Error(ErrorCode::UnboundSlot,
                            "slot " + slot.key() + " of " + tmpl.name + " names a state the change does not have",
                            {tmpl.name, slot.key()});
            }
            id = anchor.change->states[static_cast<std::size_t>(slot.role) - 1];
            if (!schema.is_a(problem.instances.at(id).concept_name, slot.concept_name)) {
                throw Error(ErrorCode::UnboundSlot, "slot " + slot.key() + " of " + tmpl.name + " cannot bind to " + id,
                            {tmpl.name, slot.key()});
            }
        } else {
            std::vector<std::string> candidates;
            for (const auto& [iid, inst] : problem.instances) {
                if (schema.is_a(inst.concept_name, slot.concept_name)) candidates.push_back(iid);
            }
            auto pick = [&](const std::string& preferred) {
                return std::find(candidates.begin(), candidates.end(), preferred) != candidates.end();
            };
            if (anchor.change && pick(anchor.change->change)) {
                id = anchor.change->change;
            } else if (!anchor.state.empty() && pick(anchor.state)) {
                id = anchor.state;
            } else if (candidates.empty()) {
                return std::nullopt;
            } else if (candidates.size() == 1) {
                id = candidates.front();
            } else {
                throw Error(ErrorCode::UnboundSlot,
                            "slot " + slot.key() + " of " + tmpl.name + " matches several instances", candidates);
            }
        }
        const auto& vars = problem.instances.at(id).variables;
        const auto v = vars.find(slot.variable);
        if (v == vars.end()) return std::nullopt;
        binding[slot.key()] = v->second;
    }
    return binding;
}

}  // namespace

std::vector<EquationInstance> setup_equations(const ProblemInstance& problem, const KnowledgeBase& kb,
                                              const ReasonerOptions& options) {
    const auto& schema = kb.schema();
    const auto& pc = kb.process_classes().get(problem.process_class);

    std::set<std::string> change_ids;
    for (const auto& c : pc.changes) change_ids.insert(c.change);
    std::map<std::string, std::string> shared_state;
    for (const auto& [id, inst] : problem.instances) {
        if (change_ids.count(id)) continue;
        for (const auto& [k, v] : inst.attribute_state()) shared_state[k] = v;
    }
    std::vector<std::string> states;
    for (const auto& [id, inst] : problem.instances) {
        if (schema.is_a(inst.concept_name, "State")) states.push_back(id);
    }

    std::vector<EquationInstance> out;
    for (const auto& [name, tmpl] : schema.equations) {
        const bool per_change = std::any_of(tmpl.slots.begin(), tmpl.slots.end(), [&](const Slot& s) {
            return s.role > 0 || qualifier_is(schema, s.concept_name, "ChangeOfState");
        });
        const bool per_state = !per_change && std::any_of(tmpl.slots.begin(), tmpl.slots.end(), [&](const Slot& s) {
            return qualifier_is(schema, s.concept_name, "State");
        });

        std::vector<std::pair<Anchor, std::string>> anchors;  // anchor, instance name
        if (per_change) {
            for (const auto& c : pc.changes) anchors.push_back({Anchor{&c, ""}, name + "@" + c.change});
        } else if (per_state) {
            for (const auto& s : states) anchors.push_back({Anchor{nullptr, s}, name + "@" + s});
        } else {
            anchors.push_back({Anchor{}, name});
        }

        for (const auto& [anchor, inst_name] : anchors) {
            auto state = shared_state;
            if (anchor.change) {
                for (const auto& [k, v] : problem.instances.at(anchor.change->change).attribute_state()) state[k] = v;
            }
            // Attributes nobody carries count as unset.
            for (const auto& g : tmpl.guards) {
                const auto rule = schema.rules.find(g);
                if (rule == schema.rules.end()) continue;
                for (const auto& [attr, value] : rule->second.condition) state.try_emplace(attr, "");
            }
            if (!guards_satisfied(tmpl, state, schema.rules)) continue;
            auto binding = bind(tmpl, anchor, problem, schema);
            if (!binding) continue;
            out.push_back(instantiate(tmpl, inst_name, std::move(*binding), options.residual_tolerance));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

// ---------------------------------------------------------------------------
// Graph and reachability

std::vector<std::size_t> ReasoningGraph::edges_of_equation(std::size_t equation) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].equation == equation) out.push_back(i);
    }
    return out;
}

std::optional<std::size_t> ReasoningGraph::equation_index(const std::string& name) const {
    for (std::size_t i = 0; i < equations.size(); ++i) {
        if (equations[i].name == name) return i;
    }
    return std::nullopt;
}

const Firing* ReasoningGraph::firing_for(const std::string& variable) const {
    for (const auto& f : firings) {
        if (f.variable == variable) return &f;
    }
    return nullptr;
}

ReasoningGraph build_graph(std::vector<EquationInstance> instances, const std::set<std::string>& knowns,
                           const std::vector<std::string>& targets) {
    ReasoningGraph g;
    std::sort(instances.begin(), instances.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    g.equations = std::move(instances);
    std::set<std::string> vars(knowns.begin(), knowns.end());
    vars.insert(targets.begin(), targets.end());
    for (std::size_t i = 0; i < g.equations.size(); ++i) {
        for (const auto& v : g.equations[i].variables()) {
            vars.insert(v);
            g.edges.push_back({i, v, knowns.count(v) ? Orientation::VarToEq : Orientation::Undirected});
        }
    }
    g.variables.assign(vars.begin(), vars.end());
    g.known = knowns;
    g.targets = targets;
    return g;
}

const std::set<std::string>& reachability(ReasoningGraph& graph, const std::optional<std::vector<std::size_t>>& scan_order) {
    std::vector<std::size_t> order(graph.equations.size());
    if (scan_order) {
        order = *scan_order;
    } else {
        std::iota(order.begin(), order.end(), std::size_t{0});
    }
    std::vector<std::vector<std::string>> vars(graph.equations.size());
    for (std::size_t i = 0; i < graph.equations.size(); ++i) vars[i] = graph.equations[i].variables();

    graph.firings.clear();
    graph.determined = graph.known;
    for (auto& e : graph.edges) {
        e.orientation = graph.known.count(e.variable) ? Orientation::VarToEq : Orientation::Undirected;
    }
    std::vector<bool> fired(graph.equations.size(), false);
    for (int round = 1;; ++round) {
        std::vector<std::pair<std::size_t, std::string>> chosen;
        std::set<std::string> claimed;
        for (const auto idx : order) {
            if (fired[idx]) continue;
            std::string unknown;
            int count = 0;
            for (const auto& v : vars[idx]) {
                if (!graph.determined.count(v)) {
                    unknown = v;
                    ++count;
                }
            }
            if (count == 1 && claimed.insert(unknown).second) chosen.emplace_back(idx, unknown);
        }
        if (chosen.empty()) break;
        for (const auto& [idx, v] : chosen) {
            fired[idx] = true;
            graph.firings.push_back({idx, v, round});
            for (auto& e : graph.edges) {
                if (e.variable != v) continue;
                if (e.equation == idx) {
                    e.orientation = Orientation::EqToVar;
                } else if (e.orientation == Orientation::Undirected) {
                    e.orientation = Orientation::VarToEq;
                }
            }
        }
        for (const auto& [idx, v] : chosen) graph.determined.insert(v);
    }
    return graph.determined;
}

Solvability solvable(const ReasoningGraph& graph) {
    Solvability s;
    std::set<std::string> unreached;
    for (const auto& t : graph.targets) {
        if (!graph.determined.count(t)) unreached.insert(t);
    }
    s.unreached.assign(unreached.begin(), unreached.end());
    s.solvable = s.unreached.empty();
    return s;
}

SolutionPath FirstFoundPath::extract(const ReasoningGraph& graph, const std::vector<std::string>& targets) const {
    std::set<std::size_t> needed;
    std::vector<std::string> stack(targets.begin(), targets.end());
    std::set<std::string> seen;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        if (!seen.insert(v).second) continue;
        const auto* f = graph.firing_for(v);
        if (!f) continue;
        needed.insert(f->equation);
        for (const auto& u : graph.equations[f->equation].variables()) {
            if (u != v) stack.push_back(u);
        }
    }
    SolutionPath path;
    for (const auto& f : graph.firings) {
        if (needed.count(f.equation)) path.steps.push_back({f.equation, f.variable});
    }
    return path;
}

SolutionPath extract_path(const ReasoningGraph& graph, const std::vector<std::string>& targets,
                          const PathStrategy& strategy) {
    std::vector<std::string> unreached;
    for (const auto& t : targets) {
        if (!graph.determined.count(t)) unreached.push_back(t);
    }
    if (!unreached.empty()) {
        std::sort(unreached.begin(), unreached.end());
        std::string list;
        for (const auto& u : unreached) list += (list.empty() ? "" : ", ") + u;
        throw Error(ErrorCode::NotSolvable, "targets cannot be reached: " + list, unreached);
    }
    return strategy.extract(graph, targets);
}

// ---------------------------------------------------------------------------
// Execution

Execution execute(const SolutionPath& path, const Valuation& knowns, const std::vector<EquationInstance>& instances,
                  const std::map<std::string, Positivity>& domains, Execution* last_execution) {
    Execution ex;
    ex.valuation = knowns;
    std::set<std::size_t> on_path;
    for (std::size_t i = 0; i < path.steps.size(); ++i) {
        const auto& step = path.steps[i];
        const auto& inst = instances.at(step.equation);
        on_path.insert(step.equation);
        const auto d = domains.find(step.variable);
        const auto domain = d == domains.end() ? Positivity::Unrestricted : d->second;
        SolveResult r;
        try {
            r = solve_for(inst, step.variable, ex.valuation, domain);
        } catch (const Error& e) {
            auto details = e.details();
            details.insert(details.begin(), inst.name);
            throw Error(e.code(),
                        "step " + std::to_string(i + 1) + " (" + inst.name + " for " + step.variable + "): " + e.what(),
                        details);
        }
        ex.valuation[step.variable] = r.value;
        ex.steps.push_back({r.value, residual(inst, ex.valuation), r.method});
        for (auto& w : r.warnings) ex.warnings.push_back(std::move(w));
    }

    std::vector<std::string> violated;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const auto vars = inst.variables();
        if (!std::all_of(vars.begin(), vars.end(), [&](const auto& v) { return ex.valuation.count(v) > 0; })) {
            continue;
        }
        double r = 0.0;
        try {
            r = residual(inst, ex.valuation);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DomainError) throw;
            r = std::numeric_limits<double>::infinity();
        }
        const bool ok = r <= inst.residual_tolerance;
        ex.audit.push_back({inst.name, r, on_path.count(i) > 0, ok});
        if (!ok) violated.push_back(inst.name);
    }
    std::sort(ex.audit.begin(), ex.audit.end(), [](const auto& a, const auto& b) { return a.equation < b.equation; });
    std::sort(violated.begin(), violated.end());
    if (!violated.empty()) {
        for (const auto& a : ex.audit) {
            if (!a.ok) {
                ex.warnings.push_back("inconsistent input: " + a.equation + " has residual " +
                                      format_number(a.residual));
            }
        }
        if (last_execution) *last_execution = ex;
        std::string list;
        for (const auto& v : violated) list += (list.empty() ? "" : ", ") + v;
        throw Error(ErrorCode::InconsistentInput, "given values contradict " + list, violated);
    }
    return ex;
}

std::map<std::string, Positivity> variable_domains(const ProblemInstance& problem, const OntologySchema& schema) {
    std::map<std::string, Positivity> out;
    for (const auto& [id, inst] : problem.instances) {
        for (const auto& [var, name] : inst.variables) out[name] = schema.variables.at(var).positivity;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

template <typename F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (Error& e) {
        if (e.stage().empty()) e.with_stage(stage);
        throw;
    }
}

}  // namespace

SolutionReport solve_problem(const ProblemInstance& problem, const KnowledgeBase& kb, const ReasonerOptions& options,
                             ReasoningGraph* graph_out) {
    if (problem.status != ProblemStatus::Finalized) {
        throw Error(ErrorCode::IncompleteDefinition, "problem must be finalized before solving").with_stage("setup");
    }
    const auto instances = staged("setup", [&] { return setup_equations(problem, kb, options); });

    Valuation knowns;
    std::set<std::string> known_names;
    for (const auto& [name, k] : problem.knowns) {
        knowns[name] = k.value;
        known_names.insert(name);
    }

    auto graph = staged("reasoning", [&] {
        auto g = build_graph(instances, known_names, problem.targets);
        reachability(g);
        return g;
    });
    if (graph_out) *graph_out = graph;
    const auto verdict = solvable(graph);

    std::vector<std::string> reachable;
    for (const auto& t : problem.targets) {
        if (graph.determined.count(t)) reachable.push_back(t);
    }
    if (!verdict.solvable && !problem.default_targets) {
        Execution none;
        none.valuation = knowns;
        auto report = render_report({}, none, graph.equations, problem, kb);
        report.status = SolveStatus::NotSolvable;
        report.undetermined = verdict.unreached;
        report.results.clear();
        std::string list;
        for (const auto& u : verdict.unreached) list += (list.empty() ? "" : ", ") + u;
        report.warnings.push_back("not solvable: no single-equation route reaches " + list);
        return report;
    }
    const auto path = staged("reasoning", [&] { return extract_path(graph, reachable); });

    const auto domains = variable_domains(problem, kb.schema());
    Execution partial;
    try {
        const auto ex = staged("execution", [&] { return execute(path, knowns, graph.equations, domains, &partial); });
        return render_report(path, ex, graph.equations, problem, kb);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InconsistentInput) throw;
        auto report = render_report(path, partial, graph.equations, problem, kb);
        report.status = SolveStatus::InconsistentInput;
        return report;
    }
}

GraphDocument export_reasoning_graph(const ReasoningGraph& graph) {
    GraphDocument doc;
    const auto targets = std::set<std::string>(graph.targets.begin(), graph.targets.end());
    for (const auto& v : graph.variables) {
        doc.nodes.push_back({v,
                             "variable",
                             {{"color", "lightblue"},
                              {"known", graph.known.count(v) ? "true" : "false"},
                              {"target", targets.count(v) ? "true" : "false"},
                              {"determined", graph.determined.count(v) ? "true" : "false"}}});
    }
    std::set<std::size_t> fired;
    for (const auto& f : graph.firings) fired.insert(f.equation);
    for (std::size_t i = 0; i < graph.equations.size(); ++i) {
        const auto& e = graph.equations[i];
        doc.nodes.push_back({e.name,
                             "equation",
                             {{"color", fired.count(i) ? "orange" : "white"},
                              {"fired", fired.count(i) ? "true" : "false"},
                              {"text", e.rendered()}}});
    }
    for (const auto& e : graph.edges) {
        const auto& eq = graph.equations[e.equation].name;
        switch (e.orientation) {
            case Orientation::EqToVar: doc.edges.push_back({eq, e.variable, "determines", true}); break;
            case Orientation::VarToEq: doc.edges.push_back({e.variable, eq, "input", true}); break;
            case Orientation::Undirected: doc.edges.push_back({eq, e.variable, "", false}); break;
        }
    }
    return doc;
}

}  // namespace thermo
