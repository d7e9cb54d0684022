#pragma once

#include <compare>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thermo {

/// A concept-qualified variable reference inside an equation template, written
/// `var@Concept` in text. A trailing `_<k>` on the variable selects the k-th state
/// of the change of state the equation gets bound to (`T_2@State`); role 0 means
/// the slot carries no role.
struct Slot {
    std::string variable;
    std::string concept_name;
    int role = 0;

    std::string key() const;
    static Slot from_key(std::string_view key);

    auto operator<=>(const Slot&) const = default;
};

/// Variable-instance name -> value in SI units.
using Valuation = std::map<std::string, double>;

/// Slot key (`T_2@State`) -> variable-instance name (`T_2`).
using Binding = std::map<std::string, std::string>;

/// Immutable expression tree. Copies share structure.
class Expr {
public:
    enum class Op { Constant, Slot, Add, Sub, Mul, Div, Pow, Ln, Neg };

    static Expr constant(double value);
    static Expr slot(Slot slot);
    static Expr unary(Op op, Expr operand);
    static Expr binary(Op op, Expr lhs, Expr rhs);

    Op op() const;
    double value() const;
    const Slot& slot() const;
    std::span<const Expr> children() const;

    /// Distinct slots in lexicographic key order.
    std::vector<Slot> slots() const;
    std::size_t occurrences(const std::string& slot_key) const;

    /// Infix text that parses back to the same tree.
    std::string to_string() const;
    /// Infix text with each slot replaced by `name_of(slot)`.
    std::string to_string(const std::function<std::string(const Slot&)>& name_of) const;

    bool operator==(const Expr& other) const;

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

/// Grammar: infix + - * / ^ (right-assoc), unary minus, ln(...), parentheses,
/// numeric literals and slot tokens `var@Concept`.
Expr parse_expression(std::string_view text);

using SlotLookup = std::function<double(const Slot&)>;

double evaluate(const Expr& expr, const SlotLookup& lookup);
double evaluate(const Expr& expr, const Binding& binding, const Valuation& valuation);

/// Value and derivative with respect to the slot `wrt_key` (forward mode).
struct Dual {
    double value;
    double derivative;
};
Dual evaluate_dual(const Expr& expr, const SlotLookup& lookup, const std::string& wrt_key);

}  // namespace thermo
