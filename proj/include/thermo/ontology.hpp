#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "thermo/elements.hpp"

namespace thermo {

/// The loaded, referentially closed element graph. Immutable after load.
struct OntologySchema {
    std::map<std::string, ConceptDef> concepts;
    std::map<std::string, VariableDef> variables;
    std::map<std::string, AttributeDef> attributes;
    std::map<std::string, EquationTemplate> equations;
    std::map<std::string, RuleDef> rules;

    std::optional<ElementKind> kind_of(const std::string& name) const;
    std::size_t element_count() const;

    /// Maps a canonical name or synonym to the canonical name.
    std::optional<std::string> canonical_name(std::string_view name_or_synonym) const;

    const ConceptDef& concept_def(const std::string& name) const;
    const VariableDef& variable_def(const std::string& name) const;
    const AttributeDef& attribute_def(const std::string& name) const;
    const RuleDef& rule_def(const std::string& name) const;

    /// Self first, then parent, grandparent, ...
    std::vector<std::string> lineage(const std::string& concept_name) const;
    bool is_a(const std::string& concept_name, const std::string& ancestor) const;

    bool operator==(const OntologySchema&) const = default;
};

/// One structured-text document, labelled for error messages (usually the file name).
struct SchemaSource {
    std::string label;
    std::string text;
};

/// Parses and merges the documents by element name, then checks referential
/// closure, inheritance acyclicity and the per-kind invariants.
OntologySchema load_schema(const std::vector<SchemaSource>& sources);

/// Loads every `*.yaml` in `dir` except `materials.yaml`, in file-name order.
OntologySchema load_schema_directory(const std::filesystem::path& dir);

/// Single YAML document; `load_schema({{"", serialize_schema(s)}}) == s`.
std::string serialize_schema(const OntologySchema& schema);

/// Own relations merged with all ancestors'; a child relation with the same name
/// overrides the parent's. Variables and attributes are the union.
ConceptDef resolve_concept(const OntologySchema& schema, const std::string& name);

/// Direct is_a children in lexicographic order.
std::vector<std::string> specializations_of(const OntologySchema& schema, const std::string& name);

/// Follows `selected_when` from `base` as far as `attributes` allow.
std::string select_specialization(const OntologySchema& schema, const std::string& base,
                                  const std::map<std::string, std::string>& attributes);

/// The attribute whose value selects among the direct specializations of `name`,
/// if any child carries `selected_when`.
std::optional<std::string> controlling_attribute(const OntologySchema& schema, const std::string& name);

/// For each allowed value of the controlling attribute, the concept it leads to
/// (the child it selects, or `name` itself when no child matches).
std::vector<std::pair<std::string, std::string>> specialization_options(const OntologySchema& schema,
                                                                        const std::string& name);

bool is_well_formed_si_unit(std::string_view unit);

// ---------------------------------------------------------------------------
// Node-link graph documents, shared with the reasoning-graph export.

struct GraphNode {
    std::string id;
    std::string kind;
    std::map<std::string, std::string> properties;
};

struct GraphEdge {
    std::string from;
    std::string to;
    std::string label;
    bool directed = true;
};

struct GraphDocument {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;

    nlohmann::json to_json() const;
    std::string to_dot(const std::string& graph_name = "ontology") const;
};

/// Concepts, variables and attributes with is_a and has_a_<name> edges. With a
/// filter, the subgraph induced by the named concepts and the variables and
/// attributes they declare.
GraphDocument export_graph(const OntologySchema& schema,
                           const std::optional<std::set<std::string>>& concept_filter = std::nullopt);

}  // namespace thermo
