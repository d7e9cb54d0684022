#include "thermo/problem_builder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "thermo/error.hpp"

namespace thermo {

std::string_view to_string(ValueSource source) {
    switch (source) {
        case ValueSource::User: return "given";
        case ValueSource::Material: return "material";
        case ValueSource::Constant: return "constant";
    }
    return "given";
}

std::string_view to_string(ChoiceKind kind) {
    switch (kind) {
        case ChoiceKind::Specialization: return "specialization";
        case ChoiceKind::Material: return "material";
        case ChoiceKind::Attribute: return "attribute";
    }
    return "attribute";
}

std::map<std::string, std::string> ConceptInstance::attribute_state() const {
    auto state = derived;
    for (const auto& [k, v] : attributes) state[k] = v;
    return state;
}

std::optional<std::pair<std::string, std::string>> ProblemInstance::find_variable(const std::string& name) const {
    for (const auto& [id, inst] : instances) {
        for (const auto& [var, inst_name] : inst.variables) {
            if (inst_name == name) return std::make_pair(id, var);
        }
    }
    return std::nullopt;
}

std::vector<std::string> ProblemInstance::variable_names() const {
    std::vector<std::string> out;
    for (const auto& [id, inst] : instances) {
        for (const auto& [var, name] : inst.variables) out.push_back(name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

const ConceptInstance* ProblemInstance::instance_of(const OntologySchema& schema,
                                                    const std::string& concept_name) const {
    for (const auto& [id, inst] : instances) {
        if (schema.is_a(inst.base_concept, concept_name)) return &inst;
    }
    return nullptr;
}

namespace {

std::set<std::string> controlling_attributes(const OntologySchema& schema) {
    std::set<std::string> out;
    for (const auto& [name, c] : schema.concepts) {
        for (const auto& [attr, value] : c.selected_when) out.insert(attr);
    }
    return out;
}

std::set<std::string> derived_attributes(const OntologySchema& schema) {
    std::set<std::string> out;
    for (const auto& [name, r] : schema.rules) {
        if (r.consequence.kind == RuleConsequence::Kind::SetAttribute) out.insert(r.consequence.target);
    }
    return out;
}

bool has(const std::vector<std::string>& v, const std::string& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])))) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::optional<double> material_value(const MaterialRecord& m, const std::string& variable) {
    if (variable == "M") return m.molar_mass;
    if (variable == "R") return m.specific_gas_constant;
    if (variable == "cv") return m.cv;
    if (variable == "cp") return m.cp;
    if (variable == "kappa") return m.kappa();
    return std::nullopt;
}

std::optional<double> constant_value(const std::string& variable) {
    if (variable == "R_univ") return PhysicalConstants::R_univ;
    if (variable == "T0") return PhysicalConstants::T0;
    if (variable == "p0") return PhysicalConstants::p0;
    return std::nullopt;
}

}  // namespace

ProblemBuilder::ProblemBuilder(const KnowledgeBase& kb, const std::string& process_class) : kb_(&kb) {
    const auto& pc = kb.process_classes().get(process_class);
    problem_.process_class = pc.name;
    for (const auto& spec : pc.instances) {
        ConceptInstance inst;
        inst.id = spec.id;
        inst.base_concept = spec.concept_name;
        inst.concept_name = spec.concept_name;
        inst.suffix = spec.suffix;
        problem_.instances.emplace(spec.id, std::move(inst));
    }
    refresh(problem_);
}

void ProblemBuilder::require_building() const {
    if (problem_.status == ProblemStatus::Finalized) {
        throw Error(ErrorCode::AlreadyFinalized, "problem is already finalized");
    }
}

void ProblemBuilder::refresh(ProblemInstance& p) const {
    const auto& schema = kb_->schema();
    for (auto& [id, inst] : p.instances) {
        // Specialize, dropping attributes the chosen concept no longer has.
        for (;;) {
            inst.concept_name = select_specialization(schema, inst.base_concept, inst.attributes);
            const auto resolved = resolve_concept(schema, inst.concept_name);
            const auto before = inst.attributes.size();
            std::erase_if(inst.attributes, [&](const auto& kv) { return !has(resolved.has_attributes, kv.first); });
            if (inst.attributes.size() == before) break;
        }
        const auto resolved = resolve_concept(schema, inst.concept_name);

        inst.derived.clear();
        for (bool changed = true; changed;) {
            changed = false;
            const auto state = inst.attribute_state();
            for (const auto& [name, rule] : schema.rules) {
                if (rule.consequence.kind != RuleConsequence::Kind::SetAttribute) continue;
                const auto& target = rule.consequence.target;
                if (!has(resolved.has_attributes, target) || state.count(target)) continue;
                const bool holds = std::all_of(rule.condition.begin(), rule.condition.end(), [&](const auto& kv) {
                    const auto it = state.find(kv.first);
                    return it != state.end() && it->second == kv.second;
                });
                if (holds) {
                    inst.derived[target] = rule.consequence.value;
                    changed = true;
                }
            }
        }

        inst.variables.clear();
        for (const auto& v : resolved.has_variables) {
            const auto def = variable_instance_name(v, inst.suffix);
            const auto r = p.renames.find(def);
            inst.variables[v] = r == p.renames.end() ? def : r->second;
        }
    }

    const auto names = p.variable_names();
    std::erase_if(p.renames, [&](const auto& kv) { return !std::binary_search(names.begin(), names.end(), kv.second); });
    std::erase_if(p.knowns, [&](const auto& kv) {
        return kv.second.source != ValueSource::User || !std::binary_search(names.begin(), names.end(), kv.first);
    });

    const MaterialRecord* material = p.material.empty() ? nullptr : &kb_->materials().lookup(p.material);
    for (const auto& [id, inst] : p.instances) {
        const bool is_constants = schema.is_a(inst.base_concept, "PhysicalConstants");
        const bool is_material = schema.is_a(inst.base_concept, "Material");
        for (const auto& [var, name] : inst.variables) {
            if (p.knowns.count(name)) continue;
            if (is_constants) {
                if (const auto c = constant_value(var)) p.knowns[name] = {*c, ValueSource::Constant};
            } else if (is_material && material) {
                if (const auto m = material_value(*material, var)) p.knowns[name] = {*m, ValueSource::Material};
            }
        }
    }

    std::erase_if(p.targets, [&](const std::string& t) {
        return !std::binary_search(names.begin(), names.end(), t) || p.knowns.count(t) > 0;
    });
}

std::vector<PendingChoice> ProblemBuilder::pending_choices() const {
    std::vector<PendingChoice> out;
    if (problem_.status == ProblemStatus::Finalized) return out;
    const auto& schema = kb_->schema();
    const auto controlling = controlling_attributes(schema);
    const auto derived = derived_attributes(schema);
    for (const auto& [id, inst] : problem_.instances) {
        if (const auto attr = controlling_attribute(schema, inst.concept_name); attr && !inst.attributes.count(*attr)) {
            std::set<std::string> options;
            for (const auto& [value, concept_name] : specialization_options(schema, inst.concept_name)) {
                options.insert(concept_name);
            }
            out.push_back({ChoiceKind::Specialization, id, *attr, {options.begin(), options.end()}});
        }
        if (schema.is_a(inst.base_concept, "Material") && problem_.material.empty()) {
            out.push_back({ChoiceKind::Material, id, "", kb_->materials().names()});
        }
        for (const auto& attr : resolve_concept(schema, inst.concept_name).has_attributes) {
            if (controlling.count(attr) || derived.count(attr) || inst.attributes.count(attr)) continue;
            out.push_back({ChoiceKind::Attribute, id, attr, schema.attributes.at(attr).allowed_values});
        }
    }
    return out;
}

std::vector<VariableInfo> ProblemBuilder::variables() const {
    std::vector<VariableInfo> out;
    for (const auto& [id, inst] : problem_.instances) {
        for (const auto& [var, name] : inst.variables) {
            const auto& def = kb_->schema().variables.at(var);
            VariableInfo info{name, var, id, def.symbol, def.si_unit, std::nullopt, false};
            if (const auto k = problem_.knowns.find(name); k != problem_.knowns.end()) info.known = k->second;
            info.target = has(problem_.targets, name);
            out.push_back(std::move(info));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

void ProblemBuilder::apply_attribute(ProblemInstance& p, const std::string& instance, const std::string& attribute,
                                     const std::string& value) const {
    const auto& schema = kb_->schema();
    const auto it = p.instances.find(instance);
    if (it == p.instances.end()) {
        std::vector<std::string> ids;
        for (const auto& [id, i] : p.instances) ids.push_back(id);
        throw Error(ErrorCode::UnknownInstance, "no instance '" + instance + "'", ids);
    }
    auto& inst = it->second;
    const auto canonical = schema.canonical_name(attribute);
    if (!canonical || !schema.attributes.count(*canonical)) {
        throw Error(ErrorCode::UnknownAttribute, "unknown attribute '" + attribute + "'", {attribute});
    }
    const auto& def = schema.attributes.at(*canonical);
    if (!has(resolve_concept(schema, inst.concept_name).has_attributes, def.name)) {
        throw Error(ErrorCode::UnknownAttribute,
                    "attribute '" + def.name + "' does not apply to " + instance + " (" + inst.concept_name + ")",
                    {def.name, instance});
    }
    if (!def.allows(value)) {
        throw Error(ErrorCode::InvalidValue,
                    "value '" + value + "' is not allowed for " + def.name, def.allowed_values);
    }
    // Attributes that rules set are not user input.
    if (derived_attributes(schema).count(def.name)) {
        throw Error(ErrorCode::InvalidValue, "attribute '" + def.name + "' is derived by rules", {def.name});
    }
    inst.attributes[def.name] = value;
    refresh(p);
}

void ProblemBuilder::set_attribute(const std::string& instance, const std::string& attribute,
                                   const std::string& value) {
    require_building();
    if (attribute == "is_a") {
        choose_specialization(instance, value);
        return;
    }
    auto next = problem_;
    apply_attribute(next, instance, attribute, value);
    problem_ = std::move(next);
}

void ProblemBuilder::choose_specialization(const std::string& instance, const std::string& concept_name) {
    require_building();
    const auto& schema = kb_->schema();
    const auto it = problem_.instances.find(instance);
    if (it == problem_.instances.end()) {
        throw Error(ErrorCode::UnknownInstance, "no instance '" + instance + "'", {instance});
    }
    const auto& base = it->second.base_concept;
    const auto target = schema.canonical_name(concept_name).value_or(concept_name);
    auto reject = [&] {
        std::vector<std::string> names;
        for (const auto& [v, t] : specialization_options(schema, it->second.concept_name)) names.push_back(t);
        throw Error(ErrorCode::InvalidValue,
                    "'" + concept_name + "' is not a specialization available for " + instance, names);
    };
    if (!schema.concepts.count(target) || !schema.is_a(target, base)) reject();

    // Set the controlling attribute at every level from the base down to the target.
    auto path = schema.lineage(target);
    path.erase(std::find(path.begin(), path.end(), base) + 1, path.end());
    std::reverse(path.begin(), path.end());
    auto next = problem_;
    auto apply_choice = [&](const std::string& from, const std::string& to) {
        for (const auto& [value, selected] : specialization_options(schema, from)) {
            if (selected == to) {
                apply_attribute(next, instance, *controlling_attribute(schema, from), value);
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!apply_choice(path[i], path[i + 1])) reject();
    }
    // Choosing the current concept again means staying on it. Reaching an
    // intermediate concept leaves its own specialization pending.
    if (target == it->second.concept_name &&
        !(controlling_attribute(schema, target) && apply_choice(target, target))) {
        reject();
    }
    problem_ = std::move(next);
}

void ProblemBuilder::set_material(const std::string& name) {
    require_building();
    const auto& record = kb_->materials().lookup(name);
    auto next = problem_;
    next.material = record.name;
    refresh(next);
    problem_ = std::move(next);
}

void ProblemBuilder::set_value(const std::string& name, double value) {
    require_building();
    const auto found = problem_.find_variable(name);
    if (!found) throw Error(ErrorCode::UnknownVariable, "no variable '" + name + "'", {name});
    const auto& [id, var] = *found;
    if (kb_->schema().is_a(problem_.instances.at(id).base_concept, "PhysicalConstants")) {
        throw Error(ErrorCode::ConstantNotEditable, "'" + name + "' is a physical constant", {name});
    }
    if (!std::isfinite(value)) throw Error(ErrorCode::NotANumber, "value for '" + name + "' is not finite", {name});
    if (kb_->schema().variables.at(var).positivity == Positivity::MustBePositive && !(value > 0.0)) {
        throw Error(ErrorCode::NonPositiveValue, "'" + name + "' must be positive", {name});
    }
    auto next = problem_;
    next.knowns[name] = {value, ValueSource::User};
    std::erase(next.targets, name);
    problem_ = std::move(next);
}

void ProblemBuilder::set_targets(const std::vector<std::string>& names) {
    require_building();
    std::vector<std::string> targets;
    for (const auto& n : names) {
        if (!problem_.find_variable(n)) throw Error(ErrorCode::UnknownVariable, "no variable '" + n + "'", {n});
        if (problem_.knowns.count(n)) throw Error(ErrorCode::TargetIsKnown, "'" + n + "' already has a value", {n});
        if (!has(targets, n)) targets.push_back(n);
    }
    problem_.targets = std::move(targets);
    problem_.default_targets = problem_.targets.empty();
}

void ProblemBuilder::rename_variable(const std::string& from, const std::string& to) {
    require_building();
    const auto found = problem_.find_variable(from);
    if (!found) throw Error(ErrorCode::UnknownVariable, "no variable '" + from + "'", {from});
    if (from == to) return;
    if (kb_->schema().is_a(problem_.instances.at(found->first).base_concept, "PhysicalConstants")) {
        throw Error(ErrorCode::ConstantNotEditable, "'" + from + "' is a physical constant", {from});
    }
    if (!is_identifier(to)) {
        throw Error(ErrorCode::InvalidValue, "'" + to + "' is not a valid variable name", {to});
    }
    if (problem_.find_variable(to) || kb_->schema().kind_of(to)) {
        throw Error(ErrorCode::NameCollision, "name '" + to + "' is already in use", {to});
    }
    auto next = problem_;
    auto& inst = next.instances.at(found->first);
    const auto def = variable_instance_name(found->second, inst.suffix);
    if (def == to) {
        next.renames.erase(def);
    } else {
        next.renames[def] = to;
    }
    inst.variables[found->second] = to;
    if (const auto k = next.knowns.find(from); k != next.knowns.end()) {
        auto value = k->second;
        next.knowns.erase(k);
        next.knowns[to] = value;
    }
    std::replace(next.targets.begin(), next.targets.end(), from, to);
    problem_ = std::move(next);
}

std::vector<std::string> ProblemBuilder::mandatory_attributes(const ConceptInstance& inst) const {
    const auto& schema = kb_->schema();
    std::set<std::string> guarded;
    for (const auto& [name, eq] : schema.equations) {
        for (const auto& g : eq.guards) {
            for (const auto& [attr, value] : schema.rules.at(g).condition) guarded.insert(attr);
        }
    }
    std::vector<std::string> out;
    for (const auto& attr : resolve_concept(schema, inst.concept_name).has_attributes) {
        if (guarded.count(attr)) out.push_back(attr);
    }
    return out;
}

std::vector<std::string> ProblemBuilder::missing_items() const {
    std::vector<std::string> out;
    const auto& schema = kb_->schema();
    if (problem_.material.empty()) out.push_back("material");
    for (const auto& [id, inst] : problem_.instances) {
        std::set<std::string> missing;
        if (const auto attr = controlling_attribute(schema, inst.concept_name); attr && !inst.attributes.count(*attr)) {
            missing.insert(*attr);
        }
        for (const auto& attr : mandatory_attributes(inst)) {
            if (!inst.attributes.count(attr)) missing.insert(attr);
        }
        for (const auto& m : missing) out.push_back(id + "." + m);
    }
    return out;
}

void ProblemBuilder::finalize() {
    require_building();
    const auto missing = missing_items();
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw Error(ErrorCode::IncompleteDefinition, "problem definition is incomplete: " + list, missing);
    }
    if (problem_.default_targets) {
        problem_.targets.clear();
        for (const auto& name : problem_.variable_names()) {
            if (!problem_.knowns.count(name)) problem_.targets.push_back(name);
        }
    }
    problem_.status = ProblemStatus::Finalized;
}

ProblemDocument ProblemBuilder::to_document() const {
    ProblemDocument doc;
    doc.process_class = problem_.process_class;
    doc.material = problem_.material;
    for (const auto& [id, inst] : problem_.instances) {
        if (!inst.attributes.empty()) doc.attributes[id] = inst.attributes;
    }
    for (const auto& [name, k] : problem_.knowns) {
        if (k.source == ValueSource::User) doc.given[name] = format_number(k.value);
    }
    if (!problem_.default_targets) doc.targets = problem_.targets;
    doc.variable_names = problem_.renames;
    return doc;
}

ProblemBuilder ProblemBuilder::from_document(const KnowledgeBase& kb, const ProblemDocument& doc) {
    ProblemBuilder b(kb, doc.process_class);
    // Attributes of a specialization only exist once its parent's choice is made,
    // so keep sweeping until nothing more can be applied.
    std::vector<std::tuple<std::string, std::string, std::string>> todo;
    for (const auto& [inst, settings] : doc.attributes) {
        for (const auto& [attr, value] : settings) todo.emplace_back(inst, attr, value);
    }
    while (!todo.empty()) {
        std::vector<std::tuple<std::string, std::string, std::string>> later;
        std::optional<Error> last;
        for (const auto& [inst, attr, value] : todo) {
            try {
                b.set_attribute(inst, attr, value);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::UnknownAttribute) throw;
                later.emplace_back(inst, attr, value);
                last = e;
            }
        }
        if (later.size() == todo.size()) throw *last;
        todo = std::move(later);
    }
    if (!doc.material.empty()) b.set_material(doc.material);
    for (const auto& [from, to] : doc.variable_names) b.rename_variable(from, to);
    for (const auto& [name, raw] : doc.given) {
        const auto v = parse_number(raw);
        if (!v) throw Error(ErrorCode::NotANumber, "value '" + raw + "' for '" + name + "' is not a number", {name});
        b.set_value(name, *v);
    }
    b.set_targets(doc.targets);
    b.finalize();
    return b;
}

}  // namespace thermo
