#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "thermo/equation.hpp"
#include "thermo/explainer.hpp"
#include "thermo/knowledge_base.hpp"
#include "thermo/problem_builder.hpp"

namespace thermo {

struct ReasonerOptions {
    double residual_tolerance = kDefaultResidualTolerance;
};

/// One instance per applicable template and binding. Change-qualified or
/// role-suffixed templates bind once per change of state, other templates with
/// State slots once per state, the rest once.
std::vector<EquationInstance> setup_equations(const ProblemInstance& problem, const KnowledgeBase& kb,
                                              const ReasonerOptions& options = {});

enum class Orientation { Undirected, VarToEq, EqToVar };

struct ReasoningEdge {
    std::size_t equation;  // index into ReasoningGraph::equations
    std::string variable;
    Orientation orientation = Orientation::Undirected;
};

struct Firing {
    std::size_t equation;
    std::string variable;
    int round = 0;
};

struct ReasoningGraph {
    std::vector<EquationInstance> equations;  // sorted by name
    std::vector<std::string> variables;       // sorted
    std::vector<ReasoningEdge> edges;
    std::set<std::string> known;
    std::vector<std::string> targets;

    // Filled by reachability.
    std::vector<Firing> firings;  // in firing order
    std::set<std::string> determined;

    std::vector<std::size_t> edges_of_equation(std::size_t equation) const;
    std::optional<std::size_t> equation_index(const std::string& name) const;
    /// The firing that determined `variable`, if any.
    const Firing* firing_for(const std::string& variable) const;
};

ReasoningGraph build_graph(std::vector<EquationInstance> instances, const std::set<std::string>& knowns,
                           const std::vector<std::string>& targets);

/// Fixpoint in synchronous rounds: every round looks at the determined set as it
/// stood when the round began; an equation with exactly one undetermined
/// variable fires for it. When several equations could determine the same
/// variable in one round, the first in scan order wins. `scan_order` is a
/// permutation of equation indices; the default is by name.
const std::set<std::string>& reachability(ReasoningGraph& graph,
                                          const std::optional<std::vector<std::size_t>>& scan_order = std::nullopt);

struct Solvability {
    bool solvable = true;
    std::vector<std::string> unreached;
};
Solvability solvable(const ReasoningGraph& graph);

struct PathStep {
    std::size_t equation;
    std::string variable;
};

struct SolutionPath {
    std::vector<PathStep> steps;
};

class PathStrategy {
public:
    virtual ~PathStrategy() = default;
    virtual std::string name() const = 0;
    virtual SolutionPath extract(const ReasoningGraph& graph, const std::vector<std::string>& targets) const = 0;
};

/// Ancestors of the targets, in the order the reachability fired them.
class FirstFoundPath : public PathStrategy {
public:
    std::string name() const override { return "first_found"; }
    SolutionPath extract(const ReasoningGraph& graph, const std::vector<std::string>& targets) const override;
};

/// Throws NotSolvable with the unreached targets when some target is undetermined.
SolutionPath extract_path(const ReasoningGraph& graph, const std::vector<std::string>& targets,
                          const PathStrategy& strategy = FirstFoundPath{});

struct StepOutcome {
    double value = 0.0;
    double residual = 0.0;
    SolveMethod method = SolveMethod::Isolation;
};

struct Execution {
    Valuation valuation;
    std::vector<StepOutcome> steps;
    std::vector<AuditEntry> audit;  // every fully determined equation, by name
    std::vector<std::string> warnings;
};

/// Solves the path step by step, then audits every equation whose variables
/// are all valued. Throws InconsistentInput naming the violated equations;
/// the partial execution is available through `last_execution` on error.
Execution execute(const SolutionPath& path, const Valuation& knowns, const std::vector<EquationInstance>& instances,
                  const std::map<std::string, Positivity>& domains = {}, Execution* last_execution = nullptr);

/// Domains of all variable instances of a problem.
std::map<std::string, Positivity> variable_domains(const ProblemInstance& problem, const OntologySchema& schema);

/// Assembles the report from a problem, its instances and an execution.
SolutionReport render_report(const SolutionPath& path, const Execution& execution,
                             const std::vector<EquationInstance>& instances, const ProblemInstance& problem,
                             const KnowledgeBase& kb);

/// Setup, graph, reachability, path, execution and report. NotSolvable and
/// InconsistentInput come back as a report status; other failures are thrown
/// with the stage (setup, reasoning, execution) attached.
SolutionReport solve_problem(const ProblemInstance& problem, const KnowledgeBase& kb,
                             const ReasonerOptions& options = {}, ReasoningGraph* graph_out = nullptr);

/// Node-link view: variable and equation nodes, oriented edges, fired equations marked.
GraphDocument export_reasoning_graph(const ReasoningGraph& graph);

}  // namespace thermo
