#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "thermo/knowledge_base.hpp"
#include "thermo/problem_builder.hpp"
#include "thermo/process.hpp"

namespace fixtures {

inline std::filesystem::path dir() { return THERMO_FIXTURES_DIR; }
inline std::filesystem::path problem_path(const std::string& name) { return dir() / "problems" / (name + ".yaml"); }

inline std::string read(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline thermo::ProblemDocument document(const std::string& name) {
    return thermo::parse_problem_document(read(problem_path(name)), name);
}

inline thermo::ProblemBuilder builder(const std::string& name) {
    return thermo::ProblemBuilder::from_document(thermo::KnowledgeBase::builtin(), document(name));
}

}  // namespace fixtures
