#include "thermo/equation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "thermo/error.hpp"

namespace thermo {

std::vector<std::string> EquationInstance::variables() const {
    std::set<std::string> names;
    for (const auto& [slot, name] : binding) names.insert(name);
    return {names.begin(), names.end()};
}

namespace {

std::function<std::string(const Slot&)> bound_name(const Binding& binding) {
    return [&binding](const Slot& s) {
        const auto it = binding.find(s.key());
        return it == binding.end() ? s.key() : it->second;
    };
}

}  // namespace

std::string EquationInstance::lhs_text() const { return lhs.to_string(bound_name(binding)); }
std::string EquationInstance::rhs_text() const { return rhs.to_string(bound_name(binding)); }
std::string EquationInstance::rendered() const { return lhs_text() + " = " + rhs_text(); }

EquationInstance instantiate(const EquationTemplate& tmpl, std::string name, Binding binding,
                             double residual_tolerance) {
    std::set<std::string> used;
    for (const auto& slot : tmpl.slots) {
        const auto it = binding.find(slot.key());
        if (it == binding.end()) {
            throw Error(ErrorCode::UnboundSlot, "slot " + slot.key() + " of " + tmpl.name + " is not bound",
                        {tmpl.name, slot.key()});
        }
        if (!used.insert(it->second).second) {
            throw Error(ErrorCode::SchemaError, "two slots of " + tmpl.name + " bound to " + it->second,
                        {tmpl.name, it->second});
        }
    }
    EquationInstance inst;
    inst.name = std::move(name);
    inst.template_name = tmpl.name;
    inst.lhs = tmpl.lhs;
    inst.rhs = tmpl.rhs;
    inst.binding = std::move(binding);
    inst.guards = tmpl.guards;
    inst.residual_tolerance = residual_tolerance;
    return inst;
}

double residual(const EquationInstance& inst, const Valuation& valuation) {
    const double l = evaluate(inst.lhs, inst.binding, valuation);
    const double r = evaluate(inst.rhs, inst.binding, valuation);
    return std::abs(l - r) / std::max({std::abs(l), std::abs(r), 1.0});
}

std::string_view to_string(SolveMethod method) {
    return method == SolveMethod::Isolation ? "isolation" : "numeric";
}

// ---------------------------------------------------------------------------

namespace {

std::string slot_of(const EquationInstance& inst, const std::string& unknown) {
    for (const auto& [key, name] : inst.binding) {
        if (name == unknown) return key;
    }
    throw Error(ErrorCode::UnknownVariable, unknown + " does not occur in " + inst.name, {unknown, inst.name});
}

SlotLookup lookup_with(const EquationInstance& inst, const std::string& unknown_key, double x,
                       const Valuation& valuation) {
    return [&inst, &unknown_key, x, &valuation](const Slot& s) {
        const auto key = s.key();
        if (key == unknown_key) return x;
        const auto b = inst.binding.find(key);
        if (b == inst.binding.end()) throw Error(ErrorCode::MissingValue, "slot " + key + " is not bound", {key});
        const auto v = valuation.find(b->second);
        if (v == valuation.end()) throw Error(ErrorCode::MissingValue, "no value for " + b->second, {b->second});
        return v->second;
    };
}

bool contains(const Expr& e, const std::string& key) { return e.occurrences(key) > 0; }

[[noreturn]] void no_solution(const EquationInstance& inst, const std::string& unknown, const std::string& why) {
    throw Error(ErrorCode::NoSolution, "cannot solve " + inst.name + " for " + unknown + ": " + why,
                {inst.name, unknown});
}

}  // namespace

double solve_by_isolation(const EquationInstance& inst, const std::string& unknown, const Valuation& valuation) {
    using Op = Expr::Op;
    const auto key = slot_of(inst, unknown);
    const auto count = inst.lhs.occurrences(key) + inst.rhs.occurrences(key);
    if (count != 1) {
        throw Error(ErrorCode::MultipleOccurrenceUnsolved,
                    unknown + " occurs " + std::to_string(count) + " times in " + inst.name, {inst.name, unknown});
    }
    const auto lookup = lookup_with(inst, key, 0.0, valuation);
    Expr node = contains(inst.lhs, key) ? inst.lhs : inst.rhs;
    double target = evaluate(contains(inst.lhs, key) ? inst.rhs : inst.lhs, lookup);

    while (node.op() != Op::Slot) {
        const auto kids = node.children();
        if (node.op() == Op::Neg) {
            target = -target;
            node = kids[0];
            continue;
        }
        if (node.op() == Op::Ln) {
            target = std::exp(target);
            node = kids[0];
            continue;
        }
        const bool left = contains(kids[0], key);
        const Expr inner = left ? kids[0] : kids[1];
        const double other = evaluate(left ? kids[1] : kids[0], lookup);
        switch (node.op()) {
            case Op::Add: target = target - other; break;
            case Op::Sub: target = left ? target + other : other - target; break;
            case Op::Mul:
                if (other == 0.0) no_solution(inst, unknown, "coefficient is zero");
                target = target / other;
                break;
            case Op::Div:
                if (left) {
                    target = target * other;
                } else {
                    if (target == 0.0) no_solution(inst, unknown, "quotient is zero");
                    target = other / target;
                }
                break;
            case Op::Pow:
                if (left) {
                    if (other == 0.0) no_solution(inst, unknown, "exponent is zero");
                    if (target >= 0.0) {
                        target = std::pow(target, 1.0 / other);
                    } else if (std::fmod(other, 2.0) == 1.0 || std::fmod(other, 2.0) == -1.0) {
                        target = -std::pow(-target, 1.0 / other);
                    } else {
                        no_solution(inst, unknown, "no real root of a negative value");
                    }
                } else {
                    if (!(target > 0.0) || !(other > 0.0) || other == 1.0) {
                        no_solution(inst, unknown, "exponent not determined by a positive base and power");
                    }
                    target = std::log(target) / std::log(other);
                }
                break;
            default: break;
        }
        node = inner;
    }
    if (!std::isfinite(target)) no_solution(inst, unknown, "isolated value is not finite");
    return target;
}

SolveResult solve_numerically(const EquationInstance& inst, const std::string& unknown, const Valuation& valuation,
                              Positivity domain) {
    const auto key = slot_of(inst, unknown);
    auto f = [&](double x) {
        const auto lookup = lookup_with(inst, key, x, valuation);
        return evaluate(inst.lhs, lookup) - evaluate(inst.rhs, lookup);
    };
    auto f_safe = [&](double x) -> std::optional<double> {
        try {
            const double y = f(x);
            if (std::isfinite(y)) return y;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DomainError) throw;
        }
        return std::nullopt;
    };

    // Grid, ascending.
    std::vector<double> positive;
    constexpr int kPerDecade = 8;
    for (int i = -12 * kPerDecade; i <= 16 * kPerDecade; ++i) {
        positive.push_back(std::pow(10.0, static_cast<double>(i) / kPerDecade));
    }
    std::vector<double> grid;
    if (domain == Positivity::Unrestricted) {
        for (auto it = positive.rbegin(); it != positive.rend(); ++it) grid.push_back(-*it);
        grid.push_back(0.0);
    }
    grid.insert(grid.end(), positive.begin(), positive.end());

    struct Bracket {
        double lo, hi, flo, fhi;
    };
    std::vector<Bracket> brackets;
    std::vector<double> exact_roots;
    bool have_prev = false;
    std::pair<double, double> prev{0.0, 0.0};
    for (double x : grid) {
        const auto y = f_safe(x);
        if (!y) {
            have_prev = false;
            continue;
        }
        if (*y == 0.0) {
            exact_roots.push_back(x);
        } else if (have_prev && prev.second != 0.0 && (prev.second < 0.0) != (*y < 0.0)) {
            brackets.push_back({prev.first, x, prev.second, *y});
        }
        prev = {x, *y};
        have_prev = true;
    }

    const double centre = domain == Positivity::MustBePositive ? 1.0 : 0.0;
    auto distance = [&](double x) {
        if (domain == Positivity::MustBePositive) return std::abs(std::log(x));
        return std::abs(x - centre);
    };

    SolveResult result;
    result.method = SolveMethod::Numeric;
    const auto candidates = brackets.size() + exact_roots.size();
    if (candidates > 1) {
        result.warnings.push_back("several roots of " + inst.name + " for " + unknown +
                                  " in the admissible domain; took the one nearest " + (centre == 1.0 ? "1" : "0"));
    }
    for (double x : exact_roots) brackets.push_back({x, x, 0.0, 0.0});
    std::stable_sort(brackets.begin(), brackets.end(), [&](const Bracket& a, const Bracket& b) {
        return std::min(distance(a.lo), distance(a.hi)) < std::min(distance(b.lo), distance(b.hi));
    });

    bool hit_iteration_cap = false;
    for (auto br : brackets) {
        if (br.lo == br.hi) {
            result.value = br.lo;
            return result;
        }
        double x = 0.5 * (br.lo + br.hi);
        bool converged = false;
        bool failed = false;
        for (int iter = 0; iter < 100; ++iter) {
            Dual d{};
            try {
                d = evaluate_dual(inst.lhs, lookup_with(inst, key, x, valuation), key);
                const auto r = evaluate_dual(inst.rhs, lookup_with(inst, key, x, valuation), key);
                d.value -= r.value;
                d.derivative -= r.derivative;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DomainError) throw;
                failed = true;
                break;
            }
            if (d.value == 0.0) {
                converged = true;
                break;
            }
            if ((d.value < 0.0) == (br.flo < 0.0)) {
                br.lo = x;
                br.flo = d.value;
            } else {
                br.hi = x;
                br.fhi = d.value;
            }
            double next = (d.derivative != 0.0 && std::isfinite(d.derivative)) ? x - d.value / d.derivative
                                                                                : 0.5 * (br.lo + br.hi);
            if (!(next > std::min(br.lo, br.hi) && next < std::max(br.lo, br.hi))) {
                next = 0.5 * (br.lo + br.hi);
            }
            const double step = std::abs(next - x);
            x = next;
            if (step <= 1e-12 * std::abs(x) || std::abs(br.hi - br.lo) <= 1e-12 * std::abs(x) + 1e-300) {
                converged = true;
                break;
            }
        }
        if (failed) continue;
        Valuation with = valuation;
        with[unknown] = x;
        double res = 0.0;
        try {
            res = residual(inst, with);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DomainError) throw;
            continue;
        }
        if (res <= inst.residual_tolerance) {
            result.value = x;
            return result;
        }
        if (!converged) hit_iteration_cap = true;
    }
    if (hit_iteration_cap) {
        throw Error(ErrorCode::MultipleOccurrenceUnsolved,
                    "root finding for " + unknown + " in " + inst.name + " did not converge", {inst.name, unknown});
    }
    no_solution(inst, unknown, "no sign change over the admissible domain");
}

SolveResult solve_for(const EquationInstance& inst, const std::string& unknown, const Valuation& valuation,
                      Positivity domain) {
    const auto key = slot_of(inst, unknown);
    const auto count = inst.lhs.occurrences(key) + inst.rhs.occurrences(key);
    if (count == 1) {
        std::optional<Error> isolation_error;
        try {
            const double v = solve_by_isolation(inst, unknown, valuation);
            Valuation with = valuation;
            with[unknown] = v;
            const bool admissible = domain == Positivity::Unrestricted || v > 0.0;
            if (admissible && residual(inst, with) <= inst.residual_tolerance) {
                return {v, SolveMethod::Isolation, {}};
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoSolution && e.code() != ErrorCode::DomainError) throw;
            isolation_error = e;
        }
        try {
            return solve_numerically(inst, unknown, valuation, domain);
        } catch (const Error&) {
            if (isolation_error) throw *isolation_error;
            throw;
        }
    }
    return solve_numerically(inst, unknown, valuation, domain);
}

bool guards_satisfied(const EquationTemplate& tmpl, const std::map<std::string, std::string>& attribute_state,
                      const std::map<std::string, RuleDef>& rules) {
    bool all = true;
    for (const auto& g : tmpl.guards) {
        const auto rule = rules.find(g);
        if (rule == rules.end()) {
            throw Error(ErrorCode::UnknownRule, "equation " + tmpl.name + " is guarded by unknown rule " + g,
                        {tmpl.name, g});
        }
        for (const auto& [attr, value] : rule->second.condition) {
            const auto it = attribute_state.find(attr);
            if (it == attribute_state.end()) {
                throw Error(ErrorCode::UnknownAttribute, "attribute " + attr + " of rule " + g + " is not in the state",
                            {attr, g});
            }
            if (it->second != value) all = false;
        }
    }
    return all;
}

}  // namespace thermo
