#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermo/ontology.hpp"

namespace thermo {

/// One concept instance a process class creates. Variables of the instance are
/// named `<variable>_<suffix>`, or just `<variable>` when the suffix is empty.
struct InstanceSpec {
    std::string id;
    std::string concept_name;
    std::string suffix;
};

/// A change of state and its states in order; role k of a template slot binds
/// to `states[k-1]`.
struct ChangeSpec {
    std::string change;
    std::vector<std::string> states;
};

struct ProcessClass {
    std::string name;
    std::string description;
    std::vector<InstanceSpec> instances;
    std::vector<ChangeSpec> changes;

    const InstanceSpec* instance(const std::string& id) const;
};

class ProcessClassRegistry {
public:
    /// equilibrium_state and single_change_of_state.
    static const ProcessClassRegistry& builtin();

    void add(ProcessClass process_class);  // replaces a class of the same name
    const ProcessClass& get(const std::string& name) const;
    bool contains(const std::string& name) const { return classes_.count(name) > 0; }
    std::vector<const ProcessClass*> all() const;

private:
    std::map<std::string, ProcessClass> classes_;
};

std::string variable_instance_name(const std::string& variable, const std::string& suffix);

/// Instance ids and attribute names with values, as text.
using AttributeSettings = std::map<std::string, std::map<std::string, std::string>>;

/// The problem file. `given` keeps the raw text so that validation can report
/// non-numeric entries instead of failing the parse. An empty target list means
/// every undetermined variable is a target.
struct ProblemDocument {
    std::string process_class;
    std::string material;
    AttributeSettings attributes;
    std::map<std::string, std::string> given;
    std::vector<std::string> targets;
    std::map<std::string, std::string> variable_names;  // default name -> chosen name

    bool operator==(const ProblemDocument&) const = default;
};

ProblemDocument parse_problem_document(std::string_view text, const std::string& label = "");
std::string emit_problem_document(const ProblemDocument& doc);

/// Shortest text that parses back to the same double.
std::string format_number(double value);
/// Full-string numeric parse; nullopt for anything else.
std::optional<double> parse_number(std::string_view text);

/// Concept and variable names of one instance given the attribute settings.
struct InstanceLayout {
    std::string id;
    std::string base_concept;
    std::string concept_name;                      // after specialization
    std::map<std::string, std::string> variables;  // variable -> default instance name
};

std::vector<InstanceLayout> layout_instances(const OntologySchema& schema, const ProcessClass& process_class,
                                             const AttributeSettings& attributes);

struct Violation {
    std::string subject;
    std::string message;

    bool operator==(const Violation&) const = default;
};

/// Conformance of a problem file with the schema. Only malformed YAML throws.
std::vector<Violation> validate_instance_document(const OntologySchema& schema, std::string_view text,
                                                  const ProcessClassRegistry& registry = ProcessClassRegistry::builtin());

}  // namespace thermo
