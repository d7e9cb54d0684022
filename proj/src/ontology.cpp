#include "thermo/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "thermo/error.hpp"

namespace thermo {

std::string_view to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::Concept: return "concept";
        case ElementKind::Variable: return "variable";
        case ElementKind::Attribute: return "attribute";
        case ElementKind::Equation: return "equation";
        case ElementKind::Rule: return "rule";
    }
    return "unknown";
}

const ConceptRelation* ConceptDef::relation(const std::string& relation_name) const {
    for (const auto& r : has_concepts) {
        if (r.name == relation_name) {
            return &r;
        }
    }
    return nullptr;
}

bool AttributeDef::allows(const std::string& value) const {
    return std::find(allowed_values.begin(), allowed_values.end(), value) != allowed_values.end();
}

EquationTemplate EquationTemplate::make(std::string name, const std::string& lhs, const std::string& rhs,
                                        std::vector<std::string> guards) {
    EquationTemplate t;
    t.name = std::move(name);
    t.lhs = parse_expression(lhs);
    t.rhs = parse_expression(rhs);
    std::map<std::string, Slot> slots;
    for (const auto& s : t.lhs.slots()) slots.emplace(s.key(), s);
    for (const auto& s : t.rhs.slots()) slots.emplace(s.key(), s);
    for (auto& [key, s] : slots) t.slots.push_back(s);
    t.guards = std::move(guards);
    return t;
}

// ---------------------------------------------------------------------------
// OntologySchema queries

std::optional<ElementKind> OntologySchema::kind_of(const std::string& name) const {
    if (concepts.count(name)) return ElementKind::Concept;
    if (variables.count(name)) return ElementKind::Variable;
    if (attributes.count(name)) return ElementKind::Attribute;
    if (equations.count(name)) return ElementKind::Equation;
    if (rules.count(name)) return ElementKind::Rule;
    return std::nullopt;
}

std::size_t OntologySchema::element_count() const {
    return concepts.size() + variables.size() + attributes.size() + equations.size() + rules.size();
}

std::optional<std::string> OntologySchema::canonical_name(std::string_view name_or_synonym) const {
    const std::string key(name_or_synonym);
    if (kind_of(key)) {
        return key;
    }
    auto search = [&](const auto& defs) -> std::optional<std::string> {
        for (const auto& [name, def] : defs) {
            if (std::find(def.synonyms.begin(), def.synonyms.end(), key) != def.synonyms.end()) {
                return name;
            }
        }
        return std::nullopt;
    };
    if (auto n = search(concepts)) return n;
    if (auto n = search(variables)) return n;
    if (auto n = search(attributes)) return n;
    return std::nullopt;
}

namespace {

template <typename Map>
const typename Map::mapped_type& lookup(const Map& map, const std::string& name, std::string_view kind) {
    const auto it = map.find(name);
    if (it == map.end()) {
        throw Error(ErrorCode::UnknownElement, "unknown " + std::string(kind) + " '" + name + "'", {name});
    }
    return it->second;
}

}  // namespace

const ConceptDef& OntologySchema::concept_def(const std::string& name) const { return lookup(concepts, name, "concept"); }
const VariableDef& OntologySchema::variable_def(const std::string& name) const {
    return lookup(variables, name, "variable");
}
const AttributeDef& OntologySchema::attribute_def(const std::string& name) const {
    return lookup(attributes, name, "attribute");
}
const RuleDef& OntologySchema::rule_def(const std::string& name) const { return lookup(rules, name, "rule"); }

std::vector<std::string> OntologySchema::lineage(const std::string& concept_name) const {
    std::vector<std::string> out;
    const ConceptDef* c = &concept_def(concept_name);
    out.push_back(c->name);
    while (c->parent) {
        c = &concept_def(*c->parent);
        if (out.size() > concepts.size()) {
            throw Error(ErrorCode::CyclicInheritance, "is_a cycle through '" + concept_name + "'", {concept_name});
        }
        out.push_back(c->name);
    }
    return out;
}

bool OntologySchema::is_a(const std::string& concept_name, const std::string& ancestor) const {
    const auto chain = lineage(concept_name);
    return std::find(chain.begin(), chain.end(), ancestor) != chain.end();
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string where(const std::string& label, const YAML::Node& node) {
    const auto mark = node.Mark();
    std::string out = label.empty() ? "<schema>" : label;
    if (mark.line >= 0) {
        out += ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
    }
    return out;
}

[[noreturn]] void parse_fail(const std::string& label, const YAML::Node& node, const std::string& what) {
    const auto mark = node.Mark();
    throw Error(ErrorCode::ParseError, where(label, node) + ": " + what,
                {label, std::to_string(mark.line + 1), std::to_string(mark.column + 1)});
}

std::string scalar(const std::string& label, const YAML::Node& node, const std::string& what) {
    if (!node.IsScalar()) {
        parse_fail(label, node, what + " must be a scalar");
    }
    return node.Scalar();
}

std::vector<std::string> string_list(const std::string& label, const YAML::Node& node, const std::string& what) {
    std::vector<std::string> out;
    if (!node || node.IsNull()) {
        return out;
    }
    if (!node.IsSequence()) {
        parse_fail(label, node, what + " must be a list");
    }
    for (const auto& item : node) {
        out.push_back(scalar(label, item, what + " entry"));
    }
    return out;
}

void check_fields(const std::string& label, const YAML::Node& entry, const std::string& element,
                  std::initializer_list<std::string_view> allowed) {
    if (!entry.IsMap()) {
        parse_fail(label, entry, "'" + element + "' must be a mapping");
    }
    for (const auto& kv : entry) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            parse_fail(label, kv.first, "unknown field '" + key + "' in '" + element + "'");
        }
    }
}

std::vector<std::string> sorted(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
}

struct ParsedElements {
    std::vector<std::pair<std::string, ConceptDef>> concepts;
    std::vector<std::pair<std::string, VariableDef>> variables;
    std::vector<std::pair<std::string, AttributeDef>> attributes;
    std::vector<std::pair<std::string, EquationTemplate>> equations;
    std::vector<std::pair<std::string, RuleDef>> rules;
    std::map<std::string, std::string> origin;  // element name -> location
};

void record(ParsedElements& out, const std::string& name, const std::string& location) {
    const auto [it, inserted] = out.origin.emplace(name, location);
    if (!inserted) {
        throw Error(ErrorCode::DuplicateElement,
                    "element '" + name + "' defined at " + it->second + " and again at " + location, {name});
    }
}

ConceptDef parse_concept(const std::string& label, const std::string& name, const YAML::Node& e) {
    check_fields(label, e, name, {"is_a", "comment", "synonyms", "has", "variables", "attributes", "selected_when"});
    ConceptDef c;
    c.name = name;
    if (e["is_a"]) c.parent = scalar(label, e["is_a"], "is_a");
    if (e["comment"]) c.comment = scalar(label, e["comment"], "comment");
    c.synonyms = string_list(label, e["synonyms"], "synonyms");
    c.has_variables = sorted(string_list(label, e["variables"], "variables"));
    c.has_attributes = sorted(string_list(label, e["attributes"], "attributes"));
    if (const auto sel = e["selected_when"]) {
        if (!sel.IsMap()) parse_fail(label, sel, "selected_when must be a mapping");
        for (const auto& kv : sel) {
            c.selected_when[kv.first.as<std::string>()] = scalar(label, kv.second, "selected_when value");
        }
    }
    if (const auto has = e["has"]) {
        if (!has.IsMap()) parse_fail(label, has, "has must be a mapping");
        for (const auto& kv : has) {
            const auto key = kv.first.as<std::string>();
            check_fields(label, kv.second, name + ".has." + key, {"concept", "multiplicity"});
            ConceptRelation r;
            r.name = "has_a_" + key;
            if (!kv.second["concept"]) parse_fail(label, kv.second, "relation '" + key + "' lacks 'concept'");
            r.concept_name = scalar(label, kv.second["concept"], "concept");
            const auto mult = kv.second["multiplicity"] ? scalar(label, kv.second["multiplicity"], "multiplicity")
                                                        : std::string("one");
            if (mult == "one") {
                r.multiplicity = Multiplicity::One;
            } else if (mult == "many") {
                r.multiplicity = Multiplicity::Many;
            } else {
                parse_fail(label, kv.second["multiplicity"], "multiplicity must be 'one' or 'many'");
            }
            if (c.relation(r.name)) parse_fail(label, kv.first, "duplicate relation '" + r.name + "'");
            c.has_concepts.push_back(std::move(r));
        }
        std::sort(c.has_concepts.begin(), c.has_concepts.end(),
                  [](const auto& a, const auto& b) { return a.name < b.name; });
    }
    return c;
}

VariableDef parse_variable(const std::string& label, const std::string& name, const YAML::Node& e) {
    check_fields(label, e, name, {"symbol", "si_unit", "owner_concept", "positivity", "synonyms", "comment"});
    VariableDef v;
    v.name = name;
    v.symbol = e["symbol"] ? scalar(label, e["symbol"], "symbol") : name;
    if (!e["si_unit"]) parse_fail(label, e, "variable '" + name + "' lacks si_unit");
    v.si_unit = scalar(label, e["si_unit"], "si_unit");
    if (!e["owner_concept"]) parse_fail(label, e, "variable '" + name + "' lacks owner_concept");
    v.owner_concept = scalar(label, e["owner_concept"], "owner_concept");
    const auto pos = e["positivity"] ? scalar(label, e["positivity"], "positivity") : std::string("unrestricted");
    if (pos == "must_be_positive") {
        v.positivity = Positivity::MustBePositive;
    } else if (pos == "unrestricted") {
        v.positivity = Positivity::Unrestricted;
    } else {
        parse_fail(label, e["positivity"], "positivity must be must_be_positive or unrestricted");
    }
    v.synonyms = string_list(label, e["synonyms"], "synonyms");
    if (e["comment"]) v.comment = scalar(label, e["comment"], "comment");
    return v;
}

AttributeDef parse_attribute(const std::string& label, const std::string& name, const YAML::Node& e) {
    check_fields(label, e, name, {"owner_concept", "allowed_values", "synonyms", "comment"});
    AttributeDef a;
    a.name = name;
    if (!e["owner_concept"]) parse_fail(label, e, "attribute '" + name + "' lacks owner_concept");
    a.owner_concept = scalar(label, e["owner_concept"], "owner_concept");
    a.allowed_values = string_list(label, e["allowed_values"], "allowed_values");
    a.synonyms = string_list(label, e["synonyms"], "synonyms");
    if (e["comment"]) a.comment = scalar(label, e["comment"], "comment");
    return a;
}

EquationTemplate parse_equation(const std::string& label, const std::string& name, const YAML::Node& e) {
    check_fields(label, e, name, {"lhs", "rhs", "guards", "comment"});
    if (!e["lhs"] || !e["rhs"]) parse_fail(label, e, "equation '" + name + "' needs lhs and rhs");
    try {
        auto t = EquationTemplate::make(name, scalar(label, e["lhs"], "lhs"), scalar(label, e["rhs"], "rhs"),
                                        string_list(label, e["guards"], "guards"));
        if (e["comment"]) t.comment = scalar(label, e["comment"], "comment");
        return t;
    } catch (const Error& err) {
        if (err.code() == ErrorCode::ParseError || err.code() == ErrorCode::UnknownFunction) {
            parse_fail(label, e, "equation '" + name + "': " + err.what());
        }
        throw;
    }
}

RuleDef parse_rule(const std::string& label, const std::string& name, const YAML::Node& e) {
    check_fields(label, e, name, {"condition", "consequence", "comment"});
    RuleDef r;
    r.name = name;
    const auto cond = e["condition"];
    if (!cond || !cond.IsMap() || cond.size() == 0) parse_fail(label, e, "rule '" + name + "' needs a condition mapping");
    for (const auto& kv : cond) {
        r.condition[kv.first.as<std::string>()] = scalar(label, kv.second, "condition value");
    }
    const auto cons = e["consequence"];
    if (!cons || !cons.IsMap() || cons.size() != 1) {
        parse_fail(label, e, "rule '" + name + "' needs exactly one consequence");
    }
    const auto kind = cons.begin()->first.as<std::string>();
    const YAML::Node body = cons.begin()->second;
    if (kind == "enable_equation") {
        r.consequence.kind = RuleConsequence::Kind::EnableEquation;
        r.consequence.target = scalar(label, body, "enable_equation");
    } else if (kind == "set_attribute") {
        if (!body.IsMap() || body.size() != 1) parse_fail(label, body, "set_attribute takes {attribute: value}");
        r.consequence.kind = RuleConsequence::Kind::SetAttribute;
        r.consequence.target = body.begin()->first.as<std::string>();
        r.consequence.value = scalar(label, body.begin()->second, "set_attribute value");
    } else {
        parse_fail(label, cons, "unknown consequence '" + kind + "'");
    }
    if (e["comment"]) r.comment = scalar(label, e["comment"], "comment");
    return r;
}

void parse_document(const SchemaSource& source, ParsedElements& out) {
    YAML::Node root;
    try {
        root = YAML::Load(source.text);
    } catch (const YAML::ParserException& ex) {
        throw Error(ErrorCode::ParseError,
                    (source.label.empty() ? std::string("<schema>") : source.label) + ":" +
                        std::to_string(ex.mark.line + 1) + ":" + std::to_string(ex.mark.column + 1) + ": " + ex.msg,
                    {source.label, std::to_string(ex.mark.line + 1), std::to_string(ex.mark.column + 1)});
    }
    if (!root || root.IsNull()) {
        return;
    }
    if (!root.IsMap()) {
        parse_fail(source.label, root, "schema document must be a mapping");
    }
    for (const auto& section : root) {
        const auto key = section.first.as<std::string>();
        const auto& body = section.second;
        if (body.IsNull()) continue;
        if (!body.IsMap()) parse_fail(source.label, body, "section '" + key + "' must be a mapping");
        for (const auto& kv : body) {
            const auto name = kv.first.as<std::string>();
            const auto loc = where(source.label, kv.first);
            if (key == "concepts") {
                out.concepts.emplace_back(name, parse_concept(source.label, name, kv.second));
            } else if (key == "variables") {
                out.variables.emplace_back(name, parse_variable(source.label, name, kv.second));
            } else if (key == "attributes") {
                out.attributes.emplace_back(name, parse_attribute(source.label, name, kv.second));
            } else if (key == "equations") {
                out.equations.emplace_back(name, parse_equation(source.label, name, kv.second));
            } else if (key == "rules") {
                out.rules.emplace_back(name, parse_rule(source.label, name, kv.second));
            } else {
                parse_fail(source.label, section.first, "unknown section '" + key + "'");
            }
            record(out, name, loc);
        }
    }
}

// ---------------------------------------------------------------------------
// Validation

[[noreturn]] void dangling(const std::string& missing, const std::string& referrer, std::string_view expected) {
    throw Error(ErrorCode::DanglingReference,
                "'" + referrer + "' references undefined " + std::string(expected) + " '" + missing + "'",
                {missing, referrer});
}

[[noreturn]] void schema_error(const std::string& what, std::vector<std::string> details = {}) {
    throw Error(ErrorCode::SchemaError, what, std::move(details));
}

bool ends_with_role_suffix(const std::string& name) {
    const auto u = name.rfind('_');
    if (u == std::string::npos || u + 1 >= name.size()) return false;
    return std::all_of(name.begin() + static_cast<long>(u) + 1, name.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

void check_acyclic(const OntologySchema& s) {
    for (const auto& [name, c] : s.concepts) {
        std::vector<std::string> path{name};
        const ConceptDef* cur = &c;
        while (cur->parent) {
            const auto& next = *cur->parent;
            const auto seen = std::find(path.begin(), path.end(), next);
            if (seen != path.end()) {
                std::string cycle;
                for (auto it = seen; it != path.end(); ++it) cycle += *it + " -> ";
                cycle += next;
                throw Error(ErrorCode::CyclicInheritance, "is_a cycle: " + cycle,
                            std::vector<std::string>(seen, path.end()));
            }
            path.push_back(next);
            cur = &s.concepts.at(next);
        }
    }
}

void validate(const OntologySchema& s) {
    // Synonyms must not shadow canonical names or each other.
    std::map<std::string, std::string> synonym_owner;
    auto check_synonyms = [&](const std::string& name, const std::vector<std::string>& synonyms) {
        for (const auto& syn : synonyms) {
            if (s.kind_of(syn) && syn != name) {
                schema_error("synonym '" + syn + "' of '" + name + "' collides with an element name", {syn});
            }
            const auto [it, fresh] = synonym_owner.emplace(syn, name);
            if (!fresh && it->second != name) {
                schema_error("synonym '" + syn + "' is ambiguous between '" + it->second + "' and '" + name + "'",
                             {syn});
            }
        }
    };

    for (const auto& [name, c] : s.concepts) {
        check_synonyms(name, c.synonyms);
        if (c.parent && !s.concepts.count(*c.parent)) dangling(*c.parent, name, "concept");
        for (const auto& r : c.has_concepts) {
            if (!s.concepts.count(r.concept_name)) dangling(r.concept_name, name, "concept");
        }
        for (const auto& v : c.has_variables) {
            const auto it = s.variables.find(v);
            if (it == s.variables.end()) dangling(v, name, "variable");
            if (it->second.owner_concept != name) {
                schema_error("concept '" + name + "' lists variable '" + v + "' owned by '" + it->second.owner_concept +
                                 "'",
                             {v});
            }
        }
        for (const auto& a : c.has_attributes) {
            const auto it = s.attributes.find(a);
            if (it == s.attributes.end()) dangling(a, name, "attribute");
            if (it->second.owner_concept != name) {
                schema_error("concept '" + name + "' lists attribute '" + a + "' owned by '" +
                                 it->second.owner_concept + "'",
                             {a});
            }
        }
    }
    for (const auto& [name, v] : s.variables) {
        check_synonyms(name, v.synonyms);
        const auto owner = s.concepts.find(v.owner_concept);
        if (owner == s.concepts.end()) dangling(v.owner_concept, name, "concept");
        const auto& listed = owner->second.has_variables;
        if (std::find(listed.begin(), listed.end(), name) == listed.end()) {
            schema_error("variable '" + name + "' is not listed by its owner '" + v.owner_concept + "'", {name});
        }
        if (!is_well_formed_si_unit(v.si_unit)) {
            schema_error("variable '" + name + "' has malformed SI unit '" + v.si_unit + "'", {name, v.si_unit});
        }
        if (ends_with_role_suffix(name)) {
            schema_error("variable name '" + name + "' must not end in _<digits>", {name});
        }
    }
    for (const auto& [name, a] : s.attributes) {
        check_synonyms(name, a.synonyms);
        const auto owner = s.concepts.find(a.owner_concept);
        if (owner == s.concepts.end()) dangling(a.owner_concept, name, "concept");
        const auto& listed = owner->second.has_attributes;
        if (std::find(listed.begin(), listed.end(), name) == listed.end()) {
            schema_error("attribute '" + name + "' is not listed by its owner '" + a.owner_concept + "'", {name});
        }
        if (a.allowed_values.empty()) schema_error("attribute '" + name + "' has no allowed values", {name});
        auto values = a.allowed_values;
        std::sort(values.begin(), values.end());
        if (std::adjacent_find(values.begin(), values.end()) != values.end()) {
            schema_error("attribute '" + name + "' has duplicate allowed values", {name});
        }
    }
    for (const auto& [name, r] : s.rules) {
        for (const auto& [attr, value] : r.condition) {
            const auto it = s.attributes.find(attr);
            if (it == s.attributes.end()) dangling(attr, name, "attribute");
            if (!it->second.allows(value)) {
                schema_error("rule '" + name + "' requires " + attr + "=" + value + ", which is not allowed", {name});
            }
        }
        if (r.consequence.kind == RuleConsequence::Kind::EnableEquation) {
            if (!s.equations.count(r.consequence.target)) dangling(r.consequence.target, name, "equation");
        } else {
            const auto it = s.attributes.find(r.consequence.target);
            if (it == s.attributes.end()) dangling(r.consequence.target, name, "attribute");
            if (!it->second.allows(r.consequence.value)) {
                schema_error("rule '" + name + "' sets a value not allowed for '" + r.consequence.target + "'", {name});
            }
        }
    }

    check_acyclic(s);

    std::map<std::string, std::string> controlling;  // parent -> attribute selecting among its children
    for (const auto& [name, c] : s.concepts) {
        if (c.selected_when.empty()) continue;
        if (!c.parent) schema_error("root concept '" + name + "' cannot have selected_when", {name});
        if (c.selected_when.size() != 1) {
            schema_error("'" + name + "' must be selected by exactly one attribute", {name});
        }
        const auto [it, fresh] = controlling.emplace(*c.parent, c.selected_when.begin()->first);
        if (!fresh && it->second != c.selected_when.begin()->first) {
            schema_error("specializations of '" + *c.parent + "' are selected by different attributes", {name});
        }
        const auto parent = resolve_concept(s, *c.parent);
        for (const auto& [attr, value] : c.selected_when) {
            if (std::find(parent.has_attributes.begin(), parent.has_attributes.end(), attr) ==
                parent.has_attributes.end()) {
                schema_error("'" + name + "' is selected by '" + attr + "', which its parent does not have", {name});
            }
            if (!s.attributes.at(attr).allows(value)) {
                schema_error("'" + name + "' is selected by a disallowed value of '" + attr + "'", {name});
            }
        }
    }

    for (const auto& [name, e] : s.equations) {
        for (const auto& g : e.guards) {
            if (!s.rules.count(g)) dangling(g, name, "rule");
        }
        for (const auto& slot : e.slots) {
            if (!s.variables.count(slot.variable)) dangling(slot.variable, name, "variable");
            if (!s.concepts.count(slot.concept_name)) dangling(slot.concept_name, name, "concept");
            // The variable must be reachable on the qualifier or one of its specializations.
            bool found = false;
            for (const auto& [cname, c] : s.concepts) {
                if (!s.is_a(cname, slot.concept_name)) continue;
                const auto& vars = c.has_variables;
                if (std::find(vars.begin(), vars.end(), slot.variable) != vars.end()) found = true;
            }
            for (const auto& anc : s.lineage(slot.concept_name)) {
                const auto& vars = s.concepts.at(anc).has_variables;
                if (std::find(vars.begin(), vars.end(), slot.variable) != vars.end()) found = true;
            }
            if (!found) {
                schema_error("equation '" + name + "': variable '" + slot.variable + "' does not belong to '" +
                                 slot.concept_name + "'",
                             {name, slot.key()});
            }
        }
    }
}

}  // namespace

OntologySchema load_schema(const std::vector<SchemaSource>& sources) {
    ParsedElements parsed;
    for (const auto& src : sources) {
        parse_document(src, parsed);
    }
    OntologySchema s;
    for (auto& [n, d] : parsed.concepts) s.concepts.emplace(n, std::move(d));
    for (auto& [n, d] : parsed.variables) s.variables.emplace(n, std::move(d));
    for (auto& [n, d] : parsed.attributes) s.attributes.emplace(n, std::move(d));
    for (auto& [n, d] : parsed.equations) s.equations.emplace(n, std::move(d));
    for (auto& [n, d] : parsed.rules) s.rules.emplace(n, std::move(d));
    validate(s);
    return s;
}

OntologySchema load_schema_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::ParseError, "ontology directory '" + dir.string() + "' does not exist", {dir.string()});
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto& p = entry.path();
        if (entry.is_regular_file() && p.extension() == ".yaml" && p.filename() != "materials.yaml") {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<SchemaSource> sources;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::stringstream buf;
        buf << in.rdbuf();
        sources.push_back({f.filename().string(), buf.str()});
    }
    return load_schema(sources);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void emit_list(YAML::Emitter& out, const std::vector<std::string>& items) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& i : items) out << i;
    out << YAML::EndSeq;
}

void emit_map(YAML::Emitter& out, const std::map<std::string, std::string>& items) {
    out << YAML::Flow << YAML::BeginMap;
    for (const auto& [k, v] : items) out << YAML::Key << k << YAML::Value << v;
    out << YAML::EndMap;
}

}  // namespace

std::string serialize_schema(const OntologySchema& s) {
    YAML::Emitter out;
    out << YAML::BeginMap;

    out << YAML::Key << "concepts" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, c] : s.concepts) {
        out << YAML::Key << name << YAML::Value << YAML::BeginMap;
        if (c.parent) out << YAML::Key << "is_a" << YAML::Value << *c.parent;
        if (!c.selected_when.empty()) {
            out << YAML::Key << "selected_when" << YAML::Value;
            emit_map(out, c.selected_when);
        }
        if (!c.comment.empty()) out << YAML::Key << "comment" << YAML::Value << c.comment;
        if (!c.synonyms.empty()) {
            out << YAML::Key << "synonyms" << YAML::Value;
            emit_list(out, c.synonyms);
        }
        if (!c.has_concepts.empty()) {
            out << YAML::Key << "has" << YAML::Value << YAML::BeginMap;
            for (const auto& r : c.has_concepts) {
                out << YAML::Key << r.name.substr(std::string("has_a_").size()) << YAML::Value << YAML::Flow
                    << YAML::BeginMap << YAML::Key << "concept" << YAML::Value << r.concept_name << YAML::Key
                    << "multiplicity" << YAML::Value << (r.multiplicity == Multiplicity::One ? "one" : "many")
                    << YAML::EndMap;
            }
            out << YAML::EndMap;
        }
        if (!c.has_variables.empty()) {
            out << YAML::Key << "variables" << YAML::Value;
            emit_list(out, c.has_variables);
        }
        if (!c.has_attributes.empty()) {
            out << YAML::Key << "attributes" << YAML::Value;
            emit_list(out, c.has_attributes);
        }
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "variables" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, v] : s.variables) {
        out << YAML::Key << name << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "symbol" << YAML::Value << v.symbol;
        out << YAML::Key << "si_unit" << YAML::Value << v.si_unit;
        out << YAML::Key << "owner_concept" << YAML::Value << v.owner_concept;
        out << YAML::Key << "positivity" << YAML::Value
            << (v.positivity == Positivity::MustBePositive ? "must_be_positive" : "unrestricted");
        if (!v.synonyms.empty()) {
            out << YAML::Key << "synonyms" << YAML::Value;
            emit_list(out, v.synonyms);
        }
        if (!v.comment.empty()) out << YAML::Key << "comment" << YAML::Value << v.comment;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "attributes" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, a] : s.attributes) {
        out << YAML::Key << name << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "owner_concept" << YAML::Value << a.owner_concept;
        out << YAML::Key << "allowed_values" << YAML::Value;
        emit_list(out, a.allowed_values);
        if (!a.synonyms.empty()) {
            out << YAML::Key << "synonyms" << YAML::Value;
            emit_list(out, a.synonyms);
        }
        if (!a.comment.empty()) out << YAML::Key << "comment" << YAML::Value << a.comment;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "equations" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, e] : s.equations) {
        out << YAML::Key << name << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "lhs" << YAML::Value << YAML::DoubleQuoted << e.lhs.to_string();
        out << YAML::Key << "rhs" << YAML::Value << YAML::DoubleQuoted << e.rhs.to_string();
        if (!e.guards.empty()) {
            out << YAML::Key << "guards" << YAML::Value;
            emit_list(out, e.guards);
        }
        if (!e.comment.empty()) out << YAML::Key << "comment" << YAML::Value << e.comment;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "rules" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, r] : s.rules) {
        out << YAML::Key << name << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "condition" << YAML::Value;
        emit_map(out, r.condition);
        out << YAML::Key << "consequence" << YAML::Value << YAML::Flow << YAML::BeginMap;
        if (r.consequence.kind == RuleConsequence::Kind::EnableEquation) {
            out << YAML::Key << "enable_equation" << YAML::Value << r.consequence.target;
        } else {
            out << YAML::Key << "set_attribute" << YAML::Value;
            emit_map(out, {{r.consequence.target, r.consequence.value}});
        }
        out << YAML::EndMap;
        if (!r.comment.empty()) out << YAML::Key << "comment" << YAML::Value << r.comment;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Inheritance

ConceptDef resolve_concept(const OntologySchema& schema, const std::string& name) {
    const auto chain = schema.lineage(name);  // child first
    ConceptDef view = schema.concept_def(name);
    std::map<std::string, ConceptRelation> relations;
    std::set<std::string> variables;
    std::set<std::string> attributes;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const auto& c = schema.concepts.at(*it);
        for (const auto& r : c.has_concepts) relations[r.name] = r;
        variables.insert(c.has_variables.begin(), c.has_variables.end());
        attributes.insert(c.has_attributes.begin(), c.has_attributes.end());
    }
    view.has_concepts.clear();
    for (auto& [n, r] : relations) view.has_concepts.push_back(r);
    view.has_variables.assign(variables.begin(), variables.end());
    view.has_attributes.assign(attributes.begin(), attributes.end());
    return view;
}

std::vector<std::string> specializations_of(const OntologySchema& schema, const std::string& name) {
    schema.concept_def(name);
    std::vector<std::string> out;
    for (const auto& [child, c] : schema.concepts) {
        if (c.parent && *c.parent == name) out.push_back(child);
    }
    return out;
}

std::string select_specialization(const OntologySchema& schema, const std::string& base,
                                  const std::map<std::string, std::string>& attributes) {
    std::string current = base;
    for (;;) {
        std::string next;
        for (const auto& child : specializations_of(schema, current)) {
            const auto& sel = schema.concepts.at(child).selected_when;
            if (sel.empty()) continue;
            const bool match = std::all_of(sel.begin(), sel.end(), [&](const auto& kv) {
                const auto it = attributes.find(kv.first);
                return it != attributes.end() && it->second == kv.second;
            });
            if (match) {
                next = child;
                break;
            }
        }
        if (next.empty()) return current;
        current = next;
    }
}

std::optional<std::string> controlling_attribute(const OntologySchema& schema, const std::string& name) {
    for (const auto& child : specializations_of(schema, name)) {
        const auto& sel = schema.concepts.at(child).selected_when;
        if (!sel.empty()) return sel.begin()->first;
    }
    return std::nullopt;
}

std::vector<std::pair<std::string, std::string>> specialization_options(const OntologySchema& schema,
                                                                        const std::string& name) {
    std::vector<std::pair<std::string, std::string>> out;
    const auto attr = controlling_attribute(schema, name);
    if (!attr) return out;
    for (const auto& value : schema.attribute_def(*attr).allowed_values) {
        std::string target = name;
        for (const auto& child : specializations_of(schema, name)) {
            const auto& sel = schema.concepts.at(child).selected_when;
            const auto it = sel.find(*attr);
            if (it != sel.end() && it->second == value) target = child;
        }
        out.emplace_back(value, target);
    }
    return out;
}

// ---------------------------------------------------------------------------
// SI units

namespace {

class UnitParser {
public:
    explicit UnitParser(std::string_view s) : s_(s) {}

    bool parse() {
        if (s_ == "1") return true;
        if (!product()) return false;
        return pos_ == s_.size();
    }

private:
    bool product() {
        if (!factor()) return false;
        for (;;) {
            if (eat("*") || eat("/") || eat("\xC2\xB7") || eat(".")) {
                if (!factor()) return false;
            } else {
                return true;
            }
        }
    }

    bool factor() {
        if (eat("(")) {
            if (!product() || !eat(")")) return false;
        } else if (!symbol()) {
            return false;
        }
        if (eat("^")) {
            eat("-");
            const auto start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            return pos_ > start;
        }
        return true;
    }

    bool symbol() {
        static const char* const known[] = {"mol", "kg", "cd", "Pa", "Hz", "m", "s", "A", "K", "N", "J", "W", "C", "V"};
        for (const char* k : known) {
            if (eat(k)) return true;
        }
        return false;
    }

    bool eat(std::string_view tok) {
        if (s_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

bool is_well_formed_si_unit(std::string_view unit) { return !unit.empty() && UnitParser(unit).parse(); }

// ---------------------------------------------------------------------------
// Graph export

nlohmann::json GraphDocument::to_json() const {
    nlohmann::json nodes_json = nlohmann::json::array();
    for (const auto& n : nodes) {
        nlohmann::json j = {{"id", n.id}, {"kind", n.kind}};
        for (const auto& [k, v] : n.properties) j[k] = v;
        nodes_json.push_back(std::move(j));
    }
    nlohmann::json edges_json = nlohmann::json::array();
    for (const auto& e : edges) {
        nlohmann::json j = {{"from", e.from}, {"to", e.to}, {"label", e.label}};
        if (!e.directed) j["directed"] = false;
        edges_json.push_back(std::move(j));
    }
    return {{"nodes", nodes_json}, {"edges", edges_json}};
}

namespace {

std::string dot_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string GraphDocument::to_dot(const std::string& graph_name) const {
    std::ostringstream out;
    out << "digraph " << dot_quote(graph_name) << " {\n";
    out << "  node [shape=box, style=filled];\n";
    for (const auto& n : nodes) {
        out << "  " << dot_quote(n.id) << " [kind=" << dot_quote(n.kind);
        for (const auto& [k, v] : n.properties) {
            out << ", " << k << "=" << dot_quote(v);
        }
        out << "];\n";
    }
    for (const auto& e : edges) {
        out << "  " << dot_quote(e.from) << " -> " << dot_quote(e.to) << " [label=" << dot_quote(e.label);
        if (e.label == "is_a") out << ", style=dashed";
        if (!e.directed) out << ", dir=none";
        out << "];\n";
    }
    out << "}\n";
    return out.str();
}

GraphDocument export_graph(const OntologySchema& schema, const std::optional<std::set<std::string>>& concept_filter) {
    if (concept_filter) {
        for (const auto& name : *concept_filter) schema.concept_def(name);
    }
    auto included = [&](const std::string& concept_name) {
        return !concept_filter || concept_filter->count(concept_name) > 0;
    };
    GraphDocument g;
    for (const auto& entry : schema.concepts) {
        if (!included(entry.first)) continue;
        g.nodes.push_back({entry.first, "concept", {{"color", "orange"}}});
    }
    for (const auto& [name, v] : schema.variables) {
        if (!included(v.owner_concept)) continue;
        g.nodes.push_back({name, "variable", {{"color", "lightblue"}, {"unit", v.si_unit}}});
    }
    for (const auto& [name, a] : schema.attributes) {
        if (!included(a.owner_concept)) continue;
        g.nodes.push_back({name, "attribute", {{"color", "lightgray"}}});
    }
    for (const auto& [name, c] : schema.concepts) {
        if (!included(name)) continue;
        if (c.parent && included(*c.parent)) g.edges.push_back({name, *c.parent, "is_a"});
        for (const auto& r : c.has_concepts) {
            if (included(r.concept_name)) g.edges.push_back({name, r.concept_name, r.name});
        }
        for (const auto& v : c.has_variables) g.edges.push_back({name, v, "has_a_" + v});
        for (const auto& a : c.has_attributes) g.edges.push_back({name, a, "has_a_" + a});
    }
    return g;
}

}  // namespace thermo
