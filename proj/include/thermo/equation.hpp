#pragma once

#include <map>
#include <string>
#include <vector>

#include "thermo/elements.hpp"
#include "thermo/expr.hpp"

namespace thermo {

inline constexpr double kDefaultResidualTolerance = 1e-9;

/// A template bound to concrete variable instances.
struct EquationInstance {
    std::string name;           // e.g. e_thermal_eos@state_1
    std::string template_name;  // e.g. e_thermal_eos
    Expr lhs = Expr::constant(0.0);
    Expr rhs = Expr::constant(0.0);
    Binding binding;  // slot key -> variable-instance name
    std::vector<std::string> guards;
    double residual_tolerance = kDefaultResidualTolerance;

    /// Distinct bound names, sorted.
    std::vector<std::string> variables() const;
    std::string lhs_text() const;
    std::string rhs_text() const;
    /// `lhs = rhs` with bound names, parseable by a plain infix evaluator.
    std::string rendered() const;
};

/// Throws UnboundSlot when the binding does not cover every slot, and
/// SchemaError when two slots are bound to the same name.
EquationInstance instantiate(const EquationTemplate& tmpl, std::string name, Binding binding,
                             double residual_tolerance = kDefaultResidualTolerance);

/// |lhs - rhs| / max(|lhs|, |rhs|, 1)
double residual(const EquationInstance& inst, const Valuation& valuation);

enum class SolveMethod { Isolation, Numeric };
std::string_view to_string(SolveMethod method);

struct SolveResult {
    double value = 0.0;
    SolveMethod method = SolveMethod::Isolation;
    std::vector<std::string> warnings;
};

/// Isolation when the unknown occurs once, otherwise (or if isolation leaves the
/// admissible domain) bracketed root finding. Values of the unknown in
/// `valuation` are ignored.
SolveResult solve_for(const EquationInstance& inst, const std::string& unknown, const Valuation& valuation,
                      Positivity domain = Positivity::Unrestricted);

/// Inverts the path from the root to the single occurrence of the unknown.
/// Throws MultipleOccurrenceUnsolved if the unknown does not occur exactly once.
double solve_by_isolation(const EquationInstance& inst, const std::string& unknown, const Valuation& valuation);

/// Grid scan for sign changes (log spaced over (1e-12, 1e16), mirrored for
/// unrestricted unknowns), then bisection safeguarded Newton.
SolveResult solve_numerically(const EquationInstance& inst, const std::string& unknown, const Valuation& valuation,
                              Positivity domain = Positivity::Unrestricted);

/// True iff every guard rule's condition holds under `attribute_state`.
bool guards_satisfied(const EquationTemplate& tmpl, const std::map<std::string, std::string>& attribute_state,
                      const std::map<std::string, RuleDef>& rules);

}  // namespace thermo
