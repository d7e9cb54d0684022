#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace thermo {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNotSolvable = 2;
inline constexpr int kExitInconsistent = 3;

struct CliConfig {
    std::optional<std::filesystem::path> ontology_dir;  // THERMO_ONTOLOGY_DIR unless --ontology
    std::optional<std::filesystem::path> problem;
    std::optional<std::filesystem::path> report;  // stdout when absent
    std::optional<std::filesystem::path> graph;   // .dot writes DOT, anything else JSON
    std::string format = "md";
};

/// `args` excludes the program name. stdout carries requested output only.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace thermo
