#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermo/expr.hpp"

namespace thermo {

enum class ElementKind { Concept, Variable, Attribute, Equation, Rule };

std::string_view to_string(ElementKind kind);

enum class Multiplicity { One, Many };

struct ConceptRelation {
    std::string name;  // full relation name, e.g. has_a_material
    std::string concept_name;
    Multiplicity multiplicity = Multiplicity::One;

    bool operator==(const ConceptRelation&) const = default;
};

struct ConceptDef {
    std::string name;
    std::vector<std::string> synonyms;
    std::string comment;
    std::optional<std::string> parent;  // is_a
    // Attribute settings on the parent that select this specialization.
    std::map<std::string, std::string> selected_when;
    std::vector<ConceptRelation> has_concepts;  // sorted by relation name
    std::vector<std::string> has_variables;     // sorted
    std::vector<std::string> has_attributes;    // sorted

    const ConceptRelation* relation(const std::string& relation_name) const;
    bool operator==(const ConceptDef&) const = default;
};

enum class Positivity { MustBePositive, Unrestricted };

struct VariableDef {
    std::string name;
    std::string symbol;
    std::string si_unit;
    std::string owner_concept;
    Positivity positivity = Positivity::Unrestricted;
    std::vector<std::string> synonyms;
    std::string comment;

    bool operator==(const VariableDef&) const = default;
};

struct AttributeDef {
    std::string name;
    std::string owner_concept;
    std::vector<std::string> allowed_values;
    std::vector<std::string> synonyms;
    std::string comment;

    bool allows(const std::string& value) const;
    bool operator==(const AttributeDef&) const = default;
};

struct RuleConsequence {
    enum class Kind { EnableEquation, SetAttribute };
    Kind kind = Kind::EnableEquation;
    std::string target;  // equation name or attribute name
    std::string value;   // attribute value for SetAttribute

    bool operator==(const RuleConsequence&) const = default;
};

/// Conjunction of attribute settings with one consequence.
struct RuleDef {
    std::string name;
    std::map<std::string, std::string> condition;
    RuleConsequence consequence;
    std::string comment;

    bool operator==(const RuleDef&) const = default;
};

/// Equation in augmented form: every variable slot is qualified by the concept
/// it belongs to. Guards name rules whose conditions must all hold.
struct EquationTemplate {
    std::string name;
    Expr lhs = Expr::constant(0.0);
    Expr rhs = Expr::constant(0.0);
    std::vector<Slot> slots;  // exact set of slots in lhs and rhs, by key
    std::vector<std::string> guards;
    std::string comment;

    bool always_applicable() const { return guards.empty(); }
    std::string to_string() const { return lhs.to_string() + " = " + rhs.to_string(); }

    static EquationTemplate make(std::string name, const std::string& lhs, const std::string& rhs,
                                 std::vector<std::string> guards = {});

    bool operator==(const EquationTemplate&) const = default;
};

}  // namespace thermo
