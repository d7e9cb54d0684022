#include "thermo/process.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <yaml-cpp/yaml.h>

#include "thermo/error.hpp"

namespace thermo {

const InstanceSpec* ProcessClass::instance(const std::string& id) const {
    for (const auto& i : instances) {
        if (i.id == id) return &i;
    }
    return nullptr;
}

const ProcessClassRegistry& ProcessClassRegistry::builtin() {
    static const ProcessClassRegistry registry = [] {
        ProcessClassRegistry r;
        r.add({"equilibrium_state",
               "Closed system in a single equilibrium state.",
               {{"constants", "PhysicalConstants", ""},
                {"material", "Material", ""},
                {"state", "State", ""},
                {"system", "ClosedSystem", ""}},
               {}});
        r.add({"single_change_of_state",
               "Closed system undergoing one change of state from state 1 to state 2.",
               {{"change", "ChangeOfState", "12"},
                {"constants", "PhysicalConstants", ""},
                {"material", "Material", ""},
                {"state_1", "State", "1"},
                {"state_2", "State", "2"},
                {"system", "ClosedSystem", ""}},
               {{"change", {"state_1", "state_2"}}}});
        return r;
    }();
    return registry;
}

void ProcessClassRegistry::add(ProcessClass process_class) {
    std::sort(process_class.instances.begin(), process_class.instances.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    auto name = process_class.name;
    classes_.insert_or_assign(std::move(name), std::move(process_class));
}

const ProcessClass& ProcessClassRegistry::get(const std::string& name) const {
    const auto it = classes_.find(name);
    if (it == classes_.end()) {
        std::vector<std::string> known;
        for (const auto& [n, c] : classes_) known.push_back(n);
        throw Error(ErrorCode::UnknownProcessClass, "unknown process class '" + name + "'", known);
    }
    return it->second;
}

std::vector<const ProcessClass*> ProcessClassRegistry::all() const {
    std::vector<const ProcessClass*> out;
    for (const auto& [n, c] : classes_) out.push_back(&c);
    return out;
}

std::string variable_instance_name(const std::string& variable, const std::string& suffix) {
    return suffix.empty() ? variable : variable + "_" + suffix;
}

// ---------------------------------------------------------------------------
// Numbers

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// Problem documents

namespace {

[[noreturn]] void doc_fail(const std::string& label, const YAML::Node& node, const std::string& what) {
    const auto mark = node.Mark();
    throw Error(ErrorCode::ParseError,
                (label.empty() ? std::string("<problem>") : label) + ":" + std::to_string(mark.line + 1) + ":" +
                    std::to_string(mark.column + 1) + ": " + what,
                {label, std::to_string(mark.line + 1), std::to_string(mark.column + 1)});
}

std::string doc_scalar(const std::string& label, const YAML::Node& node, const std::string& what) {
    if (!node.IsScalar()) doc_fail(label, node, what + " must be a scalar");
    return node.Scalar();
}

std::map<std::string, std::string> scalar_map(const std::string& label, const YAML::Node& node,
                                              const std::string& what) {
    std::map<std::string, std::string> out;
    if (!node || node.IsNull()) return out;
    if (!node.IsMap()) doc_fail(label, node, what + " must be a mapping");
    for (const auto& kv : node) {
        out[doc_scalar(label, kv.first, what + " key")] = doc_scalar(label, kv.second, what + " value");
    }
    return out;
}

}  // namespace

ProblemDocument parse_problem_document(std::string_view text, const std::string& label) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& ex) {
        throw Error(ErrorCode::ParseError,
                    (label.empty() ? std::string("<problem>") : label) + ":" + std::to_string(ex.mark.line + 1) + ":" +
                        std::to_string(ex.mark.column + 1) + ": " + ex.msg,
                    {label, std::to_string(ex.mark.line + 1), std::to_string(ex.mark.column + 1)});
    }
    if (!root.IsMap()) doc_fail(label, root, "problem document must be a mapping");

    ProblemDocument doc;
    for (const auto& kv : root) {
        const auto key = doc_scalar(label, kv.first, "key");
        const YAML::Node value = kv.second;
        if (key == "process_class") {
            doc.process_class = doc_scalar(label, value, key);
        } else if (key == "material") {
            if (!value.IsNull()) doc.material = doc_scalar(label, value, key);
        } else if (key == "attributes") {
            if (value.IsNull()) continue;
            if (!value.IsMap()) doc_fail(label, value, "attributes must map instance ids to settings");
            for (const auto& inst : value) {
                doc.attributes[doc_scalar(label, inst.first, "instance id")] =
                    scalar_map(label, inst.second, "attribute settings");
            }
        } else if (key == "given") {
            doc.given = scalar_map(label, value, "given");
        } else if (key == "targets") {
            if (value.IsNull()) continue;
            if (!value.IsSequence()) doc_fail(label, value, "targets must be a list");
            for (const auto& t : value) doc.targets.push_back(doc_scalar(label, t, "target"));
        } else if (key == "variable_names") {
            doc.variable_names = scalar_map(label, value, "variable_names");
        } else {
            doc_fail(label, kv.first, "unknown key '" + key + "'");
        }
    }
    if (doc.process_class.empty()) doc_fail(label, root, "missing process_class");
    return doc;
}

std::string emit_problem_document(const ProblemDocument& doc) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "process_class" << YAML::Value << doc.process_class;
    if (!doc.material.empty()) out << YAML::Key << "material" << YAML::Value << doc.material;
    if (!doc.attributes.empty()) {
        out << YAML::Key << "attributes" << YAML::Value << YAML::BeginMap;
        for (const auto& [inst, settings] : doc.attributes) {
            out << YAML::Key << inst << YAML::Value << YAML::Flow << YAML::BeginMap;
            for (const auto& [k, v] : settings) out << YAML::Key << k << YAML::Value << v;
            out << YAML::EndMap;
        }
        out << YAML::EndMap;
    }
    if (!doc.variable_names.empty()) {
        out << YAML::Key << "variable_names" << YAML::Value << YAML::BeginMap;
        for (const auto& [k, v] : doc.variable_names) out << YAML::Key << k << YAML::Value << v;
        out << YAML::EndMap;
    }
    out << YAML::Key << "given" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : doc.given) out << YAML::Key << k << YAML::Value << v;
    out << YAML::EndMap;
    out << YAML::Key << "targets" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& t : doc.targets) out << t;
    out << YAML::EndSeq;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Layout and validation

std::vector<InstanceLayout> layout_instances(const OntologySchema& schema, const ProcessClass& process_class,
                                             const AttributeSettings& attributes) {
    std::vector<InstanceLayout> out;
    for (const auto& spec : process_class.instances) {
        InstanceLayout layout;
        layout.id = spec.id;
        layout.base_concept = spec.concept_name;
        const auto it = attributes.find(spec.id);
        layout.concept_name = it == attributes.end() ? spec.concept_name
                                                     : select_specialization(schema, spec.concept_name, it->second);
        for (const auto& v : resolve_concept(schema, layout.concept_name).has_variables) {
            layout.variables[v] = variable_instance_name(v, spec.suffix);
        }
        out.push_back(std::move(layout));
    }
    return out;
}

std::vector<Violation> validate_instance_document(const OntologySchema& schema, std::string_view text,
                                                  const ProcessClassRegistry& registry) {
    const auto doc = parse_problem_document(text);
    std::vector<Violation> report;
    if (!registry.contains(doc.process_class)) {
        report.push_back({doc.process_class, "unknown process class '" + doc.process_class + "'"});
        return report;
    }
    const auto& pc = registry.get(doc.process_class);
    const auto layouts = layout_instances(schema, pc, doc.attributes);

    for (const auto& [inst, settings] : doc.attributes) {
        const auto layout = std::find_if(layouts.begin(), layouts.end(), [&](const auto& l) { return l.id == inst; });
        if (layout == layouts.end()) {
            report.push_back({inst, "no instance '" + inst + "' in process class " + pc.name});
            continue;
        }
        const auto resolved = resolve_concept(schema, layout->concept_name);
        for (const auto& [attr, value] : settings) {
            const auto def = schema.attributes.find(attr);
            if (def == schema.attributes.end() ||
                std::find(resolved.has_attributes.begin(), resolved.has_attributes.end(), attr) ==
                    resolved.has_attributes.end()) {
                report.push_back({inst + "." + attr, "attribute '" + attr + "' is not defined for " +
                                                         layout->concept_name});
                continue;
            }
            if (!def->second.allows(value)) {
                std::string allowed;
                for (const auto& a : def->second.allowed_values) allowed += (allowed.empty() ? "" : ",") + a;
                report.push_back({inst + "." + attr,
                                  "value '" + value + "' for " + attr + " is not one of {" + allowed + "}"});
            }
        }
    }

    // Name table after renames; constants are instantiated but not enterable.
    std::map<std::string, std::string> defaults;  // default instance name -> variable
    std::set<std::string> constants;
    for (const auto& l : layouts) {
        for (const auto& [var, name] : l.variables) {
            defaults[name] = var;
            if (l.base_concept == "PhysicalConstants") constants.insert(name);
        }
    }
    std::map<std::string, std::string> names;  // final name -> variable
    for (const auto& [name, var] : defaults) {
        const auto r = doc.variable_names.find(name);
        names[r == doc.variable_names.end() ? name : r->second] = var;
    }
    for (const auto& [from, to] : doc.variable_names) {
        if (!defaults.count(from)) {
            report.push_back({from, "cannot rename '" + from + "': no such variable"});
        }
    }
    if (names.size() != defaults.size()) {
        report.push_back({"variable_names", "renames make variable names collide"});
    }
    auto final_name_of_constant = [&](const std::string& name) {
        for (const auto& c : constants) {
            const auto r = doc.variable_names.find(c);
            if ((r == doc.variable_names.end() ? c : r->second) == name) return true;
        }
        return false;
    };

    for (const auto& [name, raw] : doc.given) {
        const auto var = names.find(name);
        if (var == names.end()) {
            report.push_back({name, "variable '" + name + "' is not instantiated"});
            continue;
        }
        if (final_name_of_constant(name)) {
            report.push_back({name, "constant '" + name + "' cannot be given"});
            continue;
        }
        const auto value = parse_number(raw);
        if (!value || !std::isfinite(*value)) {
            report.push_back({name, "value '" + raw + "' for " + name + " is not a finite number"});
            continue;
        }
        if (schema.variables.at(var->second).positivity == Positivity::MustBePositive && *value <= 0.0) {
            report.push_back({name, "value for " + name + " must be positive"});
        }
    }
    for (const auto& t : doc.targets) {
        if (!names.count(t)) {
            report.push_back({t, "target '" + t + "' is not instantiated"});
        } else if (doc.given.count(t)) {
            report.push_back({t, "target '" + t + "' is also given"});
        }
    }
    return report;
}

}  // namespace thermo
