#include <algorithm>

#include <catch_amalgamated.hpp>

#include "support/fixtures.hpp"
#include "support/replay.hpp"
#include "thermo/error.hpp"
#include "thermo/reasoner.hpp"

using namespace thermo;

namespace {

const KnowledgeBase& kb() { return KnowledgeBase::builtin(); }

SolutionReport solved(const std::string& name) { return solve_problem(fixtures::builder(name).problem(), kb()); }

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

const char* kAll[] = {"a1_isothermal_compression", "a2_adiabatic_expansion", "a3_isochoric_heating",
                      "a4_equilibrium_state",      "a5_isobaric_heating",    "a6_polytropic_compression",
                      "a7_default_targets",        "a8_overdetermined_consistent",
                      "a9_overdetermined_inconsistent", "a10_underdetermined", "a11_entropy_routes",
                      "a12_adiabatic_irreversible", "a13_isothermal_expansion"};

}  // namespace

TEST_CASE("two-step chain report") {
    ProblemBuilder b(kb(), "equilibrium_state");
    b.set_material("air");
    b.choose_specialization("material", "IdealGas");
    b.set_value("m", 1.0);
    b.set_value("T", 300.0);
    b.set_value("V", 1.0);
    b.set_targets({"s"});
    b.finalize();
    const auto r = solve_problem(b.problem(), kb());
    REQUIRE(r.steps.size() == 2);
    CHECK(r.steps[0].template_name == "e_thermal_eos");
    CHECK(r.steps[0].solved == "p");
    CHECK(r.steps[1].template_name == "e_specific_entropy");
    CHECK(r.results.size() == 1);
    CHECK(r.results[0].name == "s");
    CHECK(r.steps[0].index == 1);
    CHECK(r.steps[1].index == 2);
    CHECK(r.steps[0].unit == "Pa");
}

TEST_CASE("empty path") {
    // Targets are never known, so the builder cannot produce this; render it directly.
    SolutionReport r;
    r.process_class = "equilibrium_state";
    r.material = "air";
    r.results = {{"R", 287.04, "J/(kg*K)"}};
    const auto md = to_markdown(r);
    CHECK(md.find("No equations needed.") != std::string::npos);
    CHECK(md.find("| R | 287.04 | J/(kg*K) |") != std::string::npos);
    CHECK(report_from_json(to_json(r)) == r);
}

TEST_CASE("guards are cited") {
    const auto r = solved("a12_adiabatic_irreversible");
    const auto q = std::find_if(r.steps.begin(), r.steps.end(), [](const auto& s) { return s.solved == "Q_12"; });
    REQUIRE(q != r.steps.end());
    CHECK(q->template_name == "e_adiabatic_heat");
    REQUIRE(q->guards.size() == 1);
    CHECK(q->guards[0].rule == "r_adiabatic");
    CHECK(q->guards[0].condition == "adiabatic=true");
}

TEST_CASE("markdown layout") {
    for (const auto* name : kAll) {
        CAPTURE(name);
        const auto md = to_markdown(solved(name));
        CHECK(count(md, "## Solution steps") == 1);
        CHECK(count(md, "## Results") == 1);
        CHECK(count(md, "## Audit") == 1);
    }
    const auto md = to_markdown(solved("a1_isothermal_compression"));
    CHECK(md.find("| W_12 | 59688.3 | J |") != std::string::npos);
    CHECK(md.find("| R_univ | 8.31446 | J/(mol*K) | constant |") != std::string::npos);
}

TEST_CASE("JSON is lossless") {
    for (const auto* name : kAll) {
        CAPTURE(name);
        const auto r = solved(name);
        const auto j = to_json(r);
        CHECK(report_from_json(j) == r);
        CHECK(report_from_json(nlohmann::json::parse(j.dump())) == r);
    }
    CHECK_THROWS_AS(report_from_json(nlohmann::json::object()), Error);
}

TEST_CASE("inconsistent input is named in the warnings") {
    const auto j = to_json(solved("a9_overdetermined_inconsistent"));
    CHECK(j.at("status") == "inconsistent_input");
    bool named = false;
    for (const auto& w : j.at("warnings")) named |= w.get<std::string>().find("e_thermal_eos@state") != std::string::npos;
    CHECK(named);
}

TEST_CASE("reports replay without the library") {
    for (const auto* name : kAll) {
        CAPTURE(name);
        const auto j = to_json(solved(name));
        CHECK(replay::max_step_residual(j) <= 1e-9);
    }
}

TEST_CASE("significant digits") {
    CHECK(format_significant(59688.290012) == "59688.3");
    CHECK(format_significant(0.0) == "0");
    CHECK(format_significant(1e-12, 3) == "1e-12");
}
