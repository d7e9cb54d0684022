#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "thermo/ontology.hpp"
#include "thermo/process.hpp"

namespace thermo {

struct MaterialRecord {
    std::string name;
    double molar_mass = 0.0;             // kg/mol
    double specific_gas_constant = 0.0;  // J/(kg*K)
    double cv = 0.0;                     // J/(kg*K)
    double cp = 0.0;                     // J/(kg*K)
    bool is_ideal_gas = true;
    std::vector<std::string> synonyms;

    double kappa() const { return cp / cv; }
    bool operator==(const MaterialRecord&) const = default;
};

struct PhysicalConstants {
    static constexpr double R_univ = 8.31446261815324;  // J/(mol*K)
    static constexpr double T0 = 293.15;                // K
    static constexpr double p0 = 1.0e5;                 // Pa
};

class MaterialTable {
public:
    /// Rejects records violating R = R_univ/M or cp = cv + R (relative 1e-9).
    static MaterialTable parse(std::string_view text, const std::string& label = "materials.yaml");

    /// Case-insensitive on names and synonyms. UnknownMaterial lists the names.
    const MaterialRecord& lookup(std::string_view name_or_synonym) const;
    const std::vector<MaterialRecord>& records() const { return records_; }
    std::vector<std::string> names() const;

private:
    std::vector<MaterialRecord> records_;  // sorted by name
};

/// Schema, material table and process classes loaded together.
class KnowledgeBase {
public:
    /// The data compiled into the library.
    static const KnowledgeBase& builtin();
    /// Schema files and materials.yaml from a directory.
    static KnowledgeBase from_directory(const std::filesystem::path& dir);

    KnowledgeBase(OntologySchema schema, MaterialTable materials,
                  ProcessClassRegistry registry = ProcessClassRegistry::builtin());

    const OntologySchema& schema() const { return schema_; }
    const MaterialTable& materials() const { return materials_; }
    const ProcessClassRegistry& process_classes() const { return registry_; }
    std::vector<EquationTemplate> equation_catalog() const;

private:
    OntologySchema schema_;
    MaterialTable materials_;
    ProcessClassRegistry registry_;
};

const OntologySchema& builtin_schema();
const MaterialRecord& material_lookup(std::string_view name_or_synonym);
std::vector<EquationTemplate> equation_catalog();

/// Files embedded at build time: (file name, contents), sorted by name.
const std::vector<std::pair<std::string, std::string>>& embedded_ontology_files();

}  // namespace thermo
