#include "thermo/knowledge_base.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "thermo/error.hpp"

namespace thermo {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

double positive_field(const YAML::Node& rec, const std::string& name, const std::string& field,
                      const std::string& label) {
    const auto node = rec[field];
    if (!node) {
        throw Error(ErrorCode::ParseError, label + ": material '" + name + "' lacks " + field, {name, field});
    }
    const auto v = parse_number(node.Scalar());
    if (!v || !(*v > 0.0) || !std::isfinite(*v)) {
        throw Error(ErrorCode::SchemaError, label + ": " + field + " of '" + name + "' must be a positive number",
                    {name, field});
    }
    return *v;
}

}  // namespace

MaterialTable MaterialTable::parse(std::string_view text, const std::string& label) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& ex) {
        throw Error(ErrorCode::ParseError, label + ":" + std::to_string(ex.mark.line + 1) + ": " + ex.msg,
                    {label, std::to_string(ex.mark.line + 1)});
    }
    MaterialTable table;
    const auto materials = root["materials"];
    if (!materials || !materials.IsMap()) {
        throw Error(ErrorCode::ParseError, label + ": expected a 'materials' mapping", {label});
    }
    for (const auto& kv : materials) {
        MaterialRecord r;
        r.name = kv.first.as<std::string>();
        const YAML::Node rec = kv.second;
        r.molar_mass = positive_field(rec, r.name, "molar_mass", label);
        r.specific_gas_constant = positive_field(rec, r.name, "specific_gas_constant", label);
        r.cv = positive_field(rec, r.name, "cv", label);
        r.cp = positive_field(rec, r.name, "cp", label);
        r.is_ideal_gas = !rec["is_ideal_gas"] || rec["is_ideal_gas"].as<bool>();
        if (const auto syn = rec["synonyms"]) {
            for (const auto& s : syn) r.synonyms.push_back(s.as<std::string>());
        }
        if (!close(r.specific_gas_constant, PhysicalConstants::R_univ / r.molar_mass)) {
            throw Error(ErrorCode::SchemaError, label + ": R of '" + r.name + "' differs from R_univ/M", {r.name});
        }
        if (!close(r.cp, r.cv + r.specific_gas_constant)) {
            throw Error(ErrorCode::SchemaError, label + ": cp of '" + r.name + "' differs from cv + R", {r.name});
        }
        table.records_.push_back(std::move(r));
    }
    std::sort(table.records_.begin(), table.records_.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    return table;
}

const MaterialRecord& MaterialTable::lookup(std::string_view name_or_synonym) const {
    const auto key = lower(name_or_synonym);
    for (const auto& r : records_) {
        if (lower(r.name) == key) return r;
    }
    for (const auto& r : records_) {
        for (const auto& s : r.synonyms) {
            if (lower(s) == key) return r;
        }
    }
    throw Error(ErrorCode::UnknownMaterial,
                "unknown material '" + std::string(name_or_synonym) + "'", names());
}

std::vector<std::string> MaterialTable::names() const {
    std::vector<std::string> out;
    for (const auto& r : records_) out.push_back(r.name);
    return out;
}

KnowledgeBase::KnowledgeBase(OntologySchema schema, MaterialTable materials, ProcessClassRegistry registry)
    : schema_(std::move(schema)), materials_(std::move(materials)), registry_(std::move(registry)) {}

const KnowledgeBase& KnowledgeBase::builtin() {
    static const KnowledgeBase kb = [] {
        std::vector<SchemaSource> sources;
        std::string materials;
        for (const auto& [name, text] : embedded_ontology_files()) {
            if (name == "materials.yaml") {
                materials = text;
            } else {
                sources.push_back({name, text});
            }
        }
        return KnowledgeBase(load_schema(sources), MaterialTable::parse(materials));
    }();
    return kb;
}

KnowledgeBase KnowledgeBase::from_directory(const std::filesystem::path& dir) {
    auto schema = load_schema_directory(dir);
    std::ifstream in(dir / "materials.yaml");
    if (!in) {
        throw Error(ErrorCode::ParseError, "no materials.yaml in '" + dir.string() + "'", {dir.string()});
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return KnowledgeBase(std::move(schema), MaterialTable::parse(buf.str()));
}

std::vector<EquationTemplate> KnowledgeBase::equation_catalog() const {
    std::vector<EquationTemplate> out;
    for (const auto& [name, e] : schema_.equations) out.push_back(e);
    return out;
}

const OntologySchema& builtin_schema() { return KnowledgeBase::builtin().schema(); }

const MaterialRecord& material_lookup(std::string_view name_or_synonym) {
    return KnowledgeBase::builtin().materials().lookup(name_or_synonym);
}

std::vector<EquationTemplate> equation_catalog() { return KnowledgeBase::builtin().equation_catalog(); }

}  // namespace thermo
