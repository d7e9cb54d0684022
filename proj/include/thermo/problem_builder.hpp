#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermo/knowledge_base.hpp"
#include "thermo/process.hpp"

namespace thermo {

enum class ValueSource { User, Material, Constant };
std::string_view to_string(ValueSource source);

struct KnownValue {
    double value = 0.0;
    ValueSource source = ValueSource::User;

    bool operator==(const KnownValue&) const = default;
};

struct ConceptInstance {
    std::string id;
    std::string base_concept;
    std::string concept_name;  // current specialization
    std::string suffix;
    std::map<std::string, std::string> attributes;  // set by the user
    std::map<std::string, std::string> derived;     // set by rules
    std::map<std::string, std::string> variables;   // variable -> instance name

    /// User-set and derived attributes together.
    std::map<std::string, std::string> attribute_state() const;
    bool operator==(const ConceptInstance&) const = default;
};

enum class ProblemStatus { Building, Finalized };

struct ProblemInstance {
    std::string process_class;
    std::string material;  // canonical table name, empty until chosen
    std::map<std::string, ConceptInstance> instances;
    std::map<std::string, KnownValue> knowns;
    std::vector<std::string> targets;
    bool default_targets = true;  // targets were left to "everything not known"
    std::map<std::string, std::string> renames;  // default name -> current name
    ProblemStatus status = ProblemStatus::Building;

    /// instance id and variable of a variable-instance name.
    std::optional<std::pair<std::string, std::string>> find_variable(const std::string& name) const;
    std::vector<std::string> variable_names() const;  // sorted
    const ConceptInstance* instance_of(const OntologySchema& schema, const std::string& concept_name) const;

    bool operator==(const ProblemInstance&) const = default;
};

enum class ChoiceKind { Specialization, Material, Attribute };
std::string_view to_string(ChoiceKind kind);

struct PendingChoice {
    ChoiceKind kind = ChoiceKind::Attribute;
    std::string instance;
    std::string attribute;             // controlling attribute for specializations, empty for material
    std::vector<std::string> options;  // concept names, material names or attribute values

    bool operator==(const PendingChoice&) const = default;
};

struct VariableInfo {
    std::string name;
    std::string variable;
    std::string instance;
    std::string symbol;
    std::string unit;
    std::optional<KnownValue> known;
    bool target = false;
};

/// The problem-definition dialogue. Every operation validates and either applies
/// completely or throws without changing the problem.
class ProblemBuilder {
public:
    ProblemBuilder(const KnowledgeBase& kb, const std::string& process_class);

    /// Replays a problem document and finalizes it.
    static ProblemBuilder from_document(const KnowledgeBase& kb, const ProblemDocument& doc);

    const ProblemInstance& problem() const { return problem_; }
    const KnowledgeBase& knowledge_base() const { return *kb_; }

    std::vector<PendingChoice> pending_choices() const;
    std::vector<VariableInfo> variables() const;

    /// The attribute name `is_a` picks a specialization by concept name.
    void set_attribute(const std::string& instance, const std::string& attribute, const std::string& value);
    void choose_specialization(const std::string& instance, const std::string& concept_name);
    void set_material(const std::string& name);
    void set_value(const std::string& name, double value);
    void set_targets(const std::vector<std::string>& names);
    void rename_variable(const std::string& from, const std::string& to);

    /// Items that still block finalize, e.g. "material", "change.reversible".
    std::vector<std::string> missing_items() const;
    void finalize();

    ProblemDocument to_document() const;

private:
    void apply_attribute(ProblemInstance& p, const std::string& instance, const std::string& attribute,
                         const std::string& value) const;
    void refresh(ProblemInstance& p) const;
    void require_building() const;
    std::vector<std::string> mandatory_attributes(const ConceptInstance& inst) const;

    const KnowledgeBase* kb_;
    ProblemInstance problem_;
};

}  // namespace thermo
