#include "thermo/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "thermo/error.hpp"
#include "thermo/explainer.hpp"
#include "thermo/knowledge_base.hpp"
#include "thermo/problem_builder.hpp"
#include "thermo/reasoner.hpp"
#include "thermo/service.hpp"

namespace thermo {

namespace {

struct Aborted {};

void print_error(std::ostream& err, const Error& e) {
    err << "error [" << to_string(e.code()) << "]";
    if (!e.stage().empty()) err << " (" << e.stage() << ")";
    err << ": " << e.what() << "\n";
    for (const auto& d : e.details()) err << "  " << d << "\n";
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ParseError, "cannot read '" + path.string() + "'", {path.string()});
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_output(const std::optional<std::filesystem::path>& path, const std::string& text, std::ostream& out) {
    if (!path) {
        out << text;
        return;
    }
    std::ofstream f(*path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write '" + path->string() + "'", {path->string()});
    f << text;
}

// Owns a directory-loaded knowledge base; otherwise refers to the builtin one.
struct LoadedKb {
    std::optional<KnowledgeBase> owned;
    const KnowledgeBase* kb = nullptr;
};

LoadedKb load_kb(const CliConfig& config) {
    LoadedKb l;
    if (config.ontology_dir) {
        l.owned = KnowledgeBase::from_directory(*config.ontology_dir);
        l.kb = &*l.owned;
    } else {
        l.kb = &KnowledgeBase::builtin();
    }
    return l;
}

int exit_code_for(SolveStatus status) {
    switch (status) {
        case SolveStatus::Solved: return kExitOk;
        case SolveStatus::NotSolvable: return kExitNotSolvable;
        case SolveStatus::InconsistentInput: return kExitInconsistent;
    }
    return kExitUsage;
}

// Shared tail of batch and interactive solving.
int solve_and_report(const ProblemBuilder& builder, const KnowledgeBase& kb, const CliConfig& config, std::ostream& out,
                     std::ostream& err) {
    ReasoningGraph graph;
    const auto report = solve_problem(builder.problem(), kb, {}, &graph);
    const auto text = config.format == "json" ? to_json(report).dump(2) + "\n" : to_markdown(report);
    write_output(config.report, text, out);
    if (config.graph) {
        const auto doc = export_reasoning_graph(graph);
        const auto g = config.graph->extension() == ".dot" ? doc.to_dot("reasoning") : doc.to_json().dump(2) + "\n";
        write_output(config.graph, g, out);
    }
    if (report.status == SolveStatus::NotSolvable) {
        err << "not solvable; unreached targets:";
        for (const auto& u : report.undetermined) err << " " << u;
        err << "\n";
    } else if (report.status == SolveStatus::InconsistentInput) {
        err << "inconsistent input; violated equations:";
        for (const auto& a : report.audit) {
            if (!a.ok) err << " " << a.equation;
        }
        err << "\n";
    }
    return exit_code_for(report.status);
}

int cmd_solve(const CliConfig& config, std::ostream& out, std::ostream& err) {
    const auto loaded = load_kb(config);
    const auto doc = parse_problem_document(read_file(*config.problem), config.problem->string());
    const auto builder = ProblemBuilder::from_document(*loaded.kb, doc);
    return solve_and_report(builder, *loaded.kb, config, out, err);
}

// ---------------------------------------------------------------------------
// Interactive dialogue. Prompts go to stderr so stdout holds only the report.

std::string read_line(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Aborted{};
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = line.find_last_not_of(" \t\r");
    return line.substr(first, last - first + 1);
}

// Index (1-based) or literal option; re-prompts until valid.
std::string choose(const std::string& title, const std::vector<std::string>& options, std::istream& in,
                   std::ostream& err) {
    for (;;) {
        err << title << "\n";
        for (std::size_t i = 0; i < options.size(); ++i) err << "  " << i + 1 << ") " << options[i] << "\n";
        err << "> " << std::flush;
        const auto answer = read_line(in);
        for (const auto& o : options) {
            if (o == answer) return o;
        }
        std::size_t index = 0;
        const auto [ptr, ec] = std::from_chars(answer.data(), answer.data() + answer.size(), index);
        if (ec == std::errc() && ptr == answer.data() + answer.size() && index >= 1 && index <= options.size()) {
            return options[index - 1];
        }
        err << "invalid choice '" << answer << "'\n";
    }
}

void show_variables(const ProblemBuilder& b, std::ostream& err) {
    err << "Variables:\n";
    for (const auto& v : b.variables()) {
        err << "  " << v.name << " [" << v.unit << "]";
        if (v.known) err << " = " << format_number(v.known->value) << " (" << to_string(v.known->source) << ")";
        err << "\n";
    }
}

int cmd_interactive(const CliConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
    const auto loaded = load_kb(config);
    const auto& kb = *loaded.kb;
    try {
        std::vector<std::string> classes;
        for (const auto* pc : kb.process_classes().all()) classes.push_back(pc->name);
        ProblemBuilder builder(kb, choose("Process class:", classes, in, err));

        for (auto pending = builder.pending_choices(); !pending.empty(); pending = builder.pending_choices()) {
            const auto& c = pending.front();
            std::string title;
            switch (c.kind) {
                case ChoiceKind::Specialization: title = "Kind of " + c.instance + ":"; break;
                case ChoiceKind::Material: title = "Material:"; break;
                case ChoiceKind::Attribute: title = c.instance + "." + c.attribute + ":"; break;
            }
            const auto answer = choose(title, c.options, in, err);
            try {
                switch (c.kind) {
                    case ChoiceKind::Specialization: builder.choose_specialization(c.instance, answer); break;
                    case ChoiceKind::Material: builder.set_material(answer); break;
                    case ChoiceKind::Attribute: builder.set_attribute(c.instance, c.attribute, answer); break;
                }
            } catch (const Error& e) {
                print_error(err, e);
            }
        }

        show_variables(builder, err);
        for (;;) {
            err << "Given value as 'name = number' (empty line to finish)\n> " << std::flush;
            auto line = read_line(in);
            if (line.empty()) break;
            std::replace(line.begin(), line.end(), '=', ' ');
            std::istringstream ss(line);
            std::string name, number, extra;
            ss >> name >> number;
            if (name.empty() || number.empty() || (ss >> extra)) {
                err << "expected 'name = number'\n";
                continue;
            }
            try {
                const auto value = parse_number(number);
                if (!value) throw Error(ErrorCode::NotANumber, "'" + number + "' is not a number", {name});
                builder.set_value(name, *value);
            } catch (const Error& e) {
                print_error(err, e);
            }
        }

        for (;;) {
            err << "Targets, space separated (empty line for all undetermined)\n> " << std::flush;
            std::istringstream ss(read_line(in));
            std::vector<std::string> targets;
            for (std::string t; ss >> t;) targets.push_back(t);
            try {
                builder.set_targets(targets);
                break;
            } catch (const Error& e) {
                print_error(err, e);
            }
        }
        builder.finalize();
        return solve_and_report(builder, kb, config, out, err);
    } catch (const Aborted&) {
        err << "\naborted: input ended before the problem was complete\n";
        return kExitUsage;
    }
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::optional<std::filesystem::path>& ontology, const std::optional<std::filesystem::path>& problem,
                 const CliConfig& config, std::ostream& out, std::ostream& err) {
    if (ontology) {
        const auto kb = KnowledgeBase::from_directory(*ontology);
        const auto& s = kb.schema();
        out << ontology->string() << ": ok (" << s.concepts.size() << " concepts, " << s.variables.size()
            << " variables, " << s.attributes.size() << " attributes, " << s.equations.size() << " equations, "
            << s.rules.size() << " rules, " << kb.materials().records().size() << " materials)\n";
    }
    if (problem) {
        CliConfig c = config;
        if (ontology) c.ontology_dir = ontology;
        const auto loaded = load_kb(c);
        const auto violations =
            validate_instance_document(loaded.kb->schema(), read_file(*problem), loaded.kb->process_classes());
        if (!violations.empty()) {
            for (const auto& v : violations) err << problem->string() << ": " << v.subject << ": " << v.message << "\n";
            return kExitUsage;
        }
        out << problem->string() << ": ok\n";
    }
    return kExitOk;
}

int cmd_list(bool equations, bool materials, bool concepts, const CliConfig& config, std::ostream& out) {
    const auto loaded = load_kb(config);
    const auto& kb = *loaded.kb;
    if (equations) {
        for (const auto& t : kb.equation_catalog()) {
            out << t.name << ": " << t.to_string();
            if (t.guards.empty()) {
                out << "  [always]";
            } else {
                out << "  [when";
                for (const auto& g : t.guards) out << " " << g;
                out << "]";
            }
            out << "\n";
        }
    }
    if (materials) {
        for (const auto& m : kb.materials().records()) {
            out << m.name << ": M=" << format_significant(m.molar_mass) << " kg/mol"
                << " R=" << format_significant(m.specific_gas_constant) << " J/(kg*K)"
                << " cv=" << format_significant(m.cv) << " cp=" << format_significant(m.cp)
                << " kappa=" << format_significant(m.kappa()) << "\n";
        }
    }
    if (concepts) {
        for (const auto& [name, c] : kb.schema().concepts) {
            out << name;
            if (c.parent) out << " is_a " << *c.parent;
            out << "\n";
        }
    }
    return kExitOk;
}

int cmd_serve(const CliConfig& config, const std::string& listen, std::optional<long> timeout,
              const std::vector<std::string>& cors, std::ostream& err) {
    const auto loaded = load_kb(config);
    auto sc = ServiceConfig::from_environment();
    if (!listen.empty()) {
        const auto colon = listen.rfind(':');
        if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "--listen expects host:port", {listen});
        sc.host = listen.substr(0, colon);
        const auto port = parse_number(listen.substr(colon + 1));
        if (!port) throw Error(ErrorCode::ParseError, "--listen expects host:port", {listen});
        sc.port = static_cast<int>(*port);
    }
    if (timeout) sc.session_timeout = std::chrono::seconds(*timeout);
    if (!cors.empty()) sc.cors_origins = cors;
    Service service(*loaded.kb, sc);
    err << "listening on " << sc.host << ":" << sc.port << "\n";
    if (!service.listen()) {
        err << "cannot bind " << sc.host << ":" << sc.port << "\n";
        return kExitUsage;
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ontology-driven thermodynamics problem solver", "thermo"};
    app.require_subcommand(1);

    CliConfig config;
    if (const char* env = std::getenv("THERMO_ONTOLOGY_DIR"); env && *env) config.ontology_dir = env;
    std::string ontology_flag;
    auto add_ontology = [&](CLI::App* sub) {
        sub->add_option("--ontology", ontology_flag, "Ontology data directory (default: THERMO_ONTOLOGY_DIR or builtin)");
    };
    auto add_outputs = [&](CLI::App* sub) {
        sub->add_option("--report", config.report, "Report file (default: stdout)");
        sub->add_option("--graph", config.graph, "Reasoning graph file, .dot for DOT, else JSON");
        sub->add_option("--format", config.format, "Report format")->check(CLI::IsMember({"md", "json"}));
    };

    auto* solve = app.add_subcommand("solve", "Solve a problem file");
    solve->add_option("--problem", config.problem, "Problem document (YAML)")->required();
    add_outputs(solve);
    add_ontology(solve);

    auto* interactive = app.add_subcommand("interactive", "Define and solve a problem in a terminal dialogue");
    add_outputs(interactive);
    add_ontology(interactive);

    std::optional<std::filesystem::path> validate_ontology, validate_problem;
    auto* validate = app.add_subcommand("validate", "Check an ontology directory or a problem file");
    validate->add_option("--ontology", validate_ontology, "Ontology data directory");
    validate->add_option("--problem", validate_problem, "Problem document");
    validate->require_option(1, 2);

    bool list_equations = false, list_materials = false, list_concepts = false;
    auto* list = app.add_subcommand("list", "Print catalog contents");
    list->add_flag("--equations", list_equations, "Equation templates with guards");
    list->add_flag("--materials", list_materials, "Material table");
    list->add_flag("--concepts", list_concepts, "Concepts with their parents");
    add_ontology(list);
    list->require_option(1, 3);

    std::string listen;
    std::optional<long> timeout;
    std::vector<std::string> cors;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--listen", listen, "host:port (default THERMO_LISTEN or 127.0.0.1:8080)");
    serve->add_option("--session-timeout", timeout, "Idle session lifetime in seconds");
    serve->add_option("--cors-origin", cors, "Allowed web origin (repeatable)");
    add_ontology(serve);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (!ontology_flag.empty()) config.ontology_dir = ontology_flag;

    try {
        if (*solve) return cmd_solve(config, out, err);
        if (*interactive) return cmd_interactive(config, in, out, err);
        if (*validate) return cmd_validate(validate_ontology, validate_problem, config, out, err);
        if (*list) return cmd_list(list_equations, list_materials, list_concepts, config, out);
        if (*serve) return cmd_serve(config, listen, timeout, cors, err);
    } catch (const Error& e) {
        print_error(err, e);
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace thermo
