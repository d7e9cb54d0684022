#include <algorithm>

#include <catch_amalgamated.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "thermo/error.hpp"
#include "thermo/reasoner.hpp"

using namespace thermo;
using Catch::Matchers::WithinRel;

namespace {

const KnowledgeBase& kb() { return KnowledgeBase::builtin(); }

std::vector<std::string> names_of(const std::vector<EquationInstance>& v) {
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(e.name);
    return out;
}

bool has(const std::vector<std::string>& v, const std::string& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

EquationInstance find_instance(const std::vector<EquationInstance>& v, const std::string& name) {
    const auto it = std::find_if(v.begin(), v.end(), [&](const auto& e) { return e.name == name; });
    REQUIRE(it != v.end());
    return *it;
}

std::vector<EquationInstance> a1_instances() {
    return setup_equations(fixtures::builder("a1_isothermal_compression").problem(), kb());
}

Valuation valuation_of(const ProblemInstance& p) {
    Valuation v;
    for (const auto& [name, k] : p.knowns) v[name] = k.value;
    return v;
}

}  // namespace

TEST_CASE("equation setup binds per state and per change") {
    const auto inst = a1_instances();
    const auto names = names_of(inst);
    CHECK(has(names, "e_thermal_eos@state_1"));
    CHECK(has(names, "e_thermal_eos@state_2"));
    const auto e1 = find_instance(inst, "e_thermal_eos@state_1");
    const auto e2 = find_instance(inst, "e_thermal_eos@state_2");
    CHECK(e1.binding.at("m@ClosedSystem") == e2.binding.at("m@ClosedSystem"));
    CHECK(e1.binding.at("R@Material") == "R");
    CHECK(e1.binding.at("T@State") == "T_1");
    CHECK(e2.binding.at("T@State") == "T_2");

    CHECK(has(names, "e_isothermal_work@change"));
    CHECK_FALSE(has(names, "e_adiabatic_heat@change"));
    CHECK_FALSE(has(names, "e_isobaric_work@change"));
    CHECK(has(names, "e_gas_constant"));

    const auto eq = setup_equations(fixtures::builder("a4_equilibrium_state").problem(), kb());
    const auto eq_names = names_of(eq);
    for (const auto& n : eq_names) CHECK(n.find("@change") == std::string::npos);
    CHECK(has(eq_names, "e_thermal_eos@state"));
    CHECK(has(eq_names, "e_specific_entropy@state"));
    CHECK(has(eq_names, "e_specific_internal_energy@state"));
    CHECK_FALSE(has(eq_names, "e_first_law@change"));
}

TEST_CASE("graph construction orients known edges") {
    const auto e1 = find_instance(a1_instances(), "e_thermal_eos@state_1");
    const auto g = build_graph({e1}, {"V_1", "m", "R", "T_1"}, {"p_1"});
    int in = 0, undirected = 0;
    for (const auto& e : g.edges) {
        if (e.orientation == Orientation::VarToEq) ++in;
        if (e.orientation == Orientation::Undirected) {
            ++undirected;
            CHECK(e.variable == "p_1");
        }
    }
    CHECK(in == 4);
    CHECK(undirected == 1);

    const auto none = build_graph({e1}, {}, {});
    for (const auto& e : none.edges) CHECK(e.orientation == Orientation::Undirected);

    const auto empty = build_graph({}, {"m"}, {"T"});
    CHECK(empty.edges.empty());
    CHECK(empty.variables == std::vector<std::string>{"T", "m"});
}

TEST_CASE("reachability fires on k-1 known variables") {
    const auto inst = a1_instances();
    const auto e1 = find_instance(inst, "e_thermal_eos@state_1");
    auto g = build_graph({e1}, {"V_1", "m", "R", "T_1"}, {"p_1"});
    reachability(g);
    CHECK(g.determined.count("p_1"));
    REQUIRE(g.firings.size() == 1);
    CHECK(g.firings[0].variable == "p_1");
    for (const auto& e : g.edges) {
        if (e.variable == "p_1") CHECK(e.orientation == Orientation::EqToVar);
    }

    auto all = build_graph({e1}, {"V_1", "m", "R", "T_1", "p_1"}, {});
    reachability(all);
    CHECK(all.firings.empty());

    const auto s1 = find_instance(inst, "e_specific_entropy@state_1");
    // Scan order puts the entropy equation first; it still has to wait a round.
    auto chain = build_graph({s1, e1}, {"m", "R", "T_1", "V_1", "cp", "T0", "p0"}, {"s_1"});
    reachability(chain);
    REQUIRE(chain.firings.size() == 2);
    CHECK(chain.firings[0].variable == "p_1");
    CHECK(chain.firings[0].round == 1);
    CHECK(chain.firings[1].variable == "s_1");
    CHECK(chain.firings[1].round == 2);

    const auto path = extract_path(chain, {"s_1"});
    REQUIRE(path.steps.size() == 2);
    CHECK(chain.equations[path.steps[0].equation].name == "e_thermal_eos@state_1");
    CHECK(path.steps[0].variable == "p_1");
    CHECK(chain.equations[path.steps[1].equation].name == "e_specific_entropy@state_1");
    CHECK(path.steps[1].variable == "s_1");
}

TEST_CASE("solvability") {
    const auto inst = a1_instances();
    const auto problem = fixtures::builder("a1_isothermal_compression").problem();
    std::set<std::string> known;
    for (const auto& [k, v] : problem.knowns) known.insert(k);

    auto g = build_graph(inst, known, {"W_12", "Q_12"});
    reachability(g);
    auto s = solvable(g);
    CHECK(s.solvable);
    CHECK(s.unreached.empty());

    known.erase("V_2");
    auto under = build_graph(inst, known, {"Q_12"});
    reachability(under);
    s = solvable(under);
    CHECK_FALSE(s.solvable);
    CHECK(s.unreached == std::vector<std::string>{"Q_12"});
    try {
        extract_path(under, {"Q_12"});
        FAIL("path extracted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotSolvable);
        CHECK(e.details() == std::vector<std::string>{"Q_12"});
    }

    auto no_targets = build_graph(inst, known, {});
    reachability(no_targets);
    CHECK(solvable(no_targets).solvable);
    CHECK(extract_path(no_targets, {"T_1"}).steps.empty());
}

TEST_CASE("redundant routes give one step per variable") {
    const auto problem = fixtures::builder("a11_entropy_routes").problem();
    const auto inst = setup_equations(problem, kb());
    std::set<std::string> known;
    for (const auto& [k, v] : problem.knowns) known.insert(k);
    known.insert({"v_1", "v_2"});
    auto g = build_graph(inst, known, {"ds_12"});
    reachability(g);
    const auto path = extract_path(g, {"ds_12"});
    int ds_steps = 0;
    for (const auto& st : path.steps) {
        if (st.variable == "ds_12") ++ds_steps;
    }
    CHECK(ds_steps == 1);
    // The name-ordered scan prefers the (T, p) route.
    CHECK(g.equations[path.steps.back().equation].template_name == "e_entropy_change_tp");
}

TEST_CASE("execution of the isothermal path") {
    const auto problem = fixtures::builder("a1_isothermal_compression").problem();
    auto g = build_graph(setup_equations(problem, kb()), [&] {
        std::set<std::string> k;
        for (const auto& [n, v] : problem.knowns) k.insert(n);
        return k;
    }(), problem.targets);
    reachability(g);
    const auto path = extract_path(g, problem.targets);
    const auto ex = execute(path, valuation_of(problem), g.equations, variable_domains(problem, kb().schema()));
    const double W = oracle::isothermal_work(oracle::air, 1.0, 300.0, 1.0, 0.5);
    CHECK_THAT(ex.valuation.at("W_12"), WithinRel(W, 1e-12));
    CHECK_THAT(ex.valuation.at("Q_12"), WithinRel(-W, 1e-12));
    CHECK(ex.valuation.at("dU_12") == 0.0);
    for (const auto& a : ex.audit) {
        CAPTURE(a.equation);
        CHECK(a.ok);
        CHECK(a.residual <= 1e-9);
    }
}

TEST_CASE("over-specified input") {
    auto b = fixtures::builder("a8_overdetermined_consistent");
    const auto& problem = b.problem();
    std::set<std::string> known;
    for (const auto& [k, v] : problem.knowns) known.insert(k);
    auto g = build_graph(setup_equations(problem, kb()), known, problem.targets);
    reachability(g);
    const auto path = extract_path(g, problem.targets);
    const auto ex = execute(path, valuation_of(problem), g.equations);
    const auto eos = std::find_if(ex.audit.begin(), ex.audit.end(), [](const auto& a) { return a.equation == "e_thermal_eos@state"; });
    REQUIRE(eos != ex.audit.end());
    CHECK(eos->residual <= 1e-9);
    CHECK_FALSE(eos->on_path);

    auto off = valuation_of(problem);
    off["V"] *= 1.05;
    Execution partial;
    try {
        execute(path, off, g.equations, {}, &partial);
        FAIL("inconsistency not detected");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InconsistentInput);
        CHECK(e.details() == std::vector<std::string>{"e_thermal_eos@state"});
    }
    CHECK(partial.valuation.count("u"));
}

TEST_CASE("solve_problem outcomes") {
    const auto a4 = solve_problem(fixtures::builder("a4_equilibrium_state").problem(), kb());
    CHECK(a4.status == SolveStatus::Solved);
    const auto p = std::find_if(a4.results.begin(), a4.results.end(), [](const auto& r) { return r.name == "p"; });
    REQUIRE(p != a4.results.end());
    CHECK_THAT(p->value, WithinRel(oracle::pressure(oracle::air, 2.0, 350.0, 0.5), 1e-12));

    const auto a10 = solve_problem(fixtures::builder("a10_underdetermined").problem(), kb());
    CHECK(a10.status == SolveStatus::NotSolvable);
    CHECK(a10.undetermined == std::vector<std::string>{"W_12"});
    CHECK(a10.steps.empty());

    const auto a9 = solve_problem(fixtures::builder("a9_overdetermined_inconsistent").problem(), kb());
    CHECK(a9.status == SolveStatus::InconsistentInput);
    CHECK(std::any_of(a9.warnings.begin(), a9.warnings.end(),
                      [](const auto& w) { return w.find("e_thermal_eos@state") != std::string::npos; }));

    ProblemBuilder open(kb(), "single_change_of_state");
    try {
        solve_problem(open.problem(), kb());
        FAIL("unfinalized problem solved");
    } catch (const Error& e) {
        CHECK(e.stage() == "setup");
    }
}

TEST_CASE("default targets leave unreachable variables undetermined") {
    ProblemBuilder b(kb(), "single_change_of_state");
    b.set_material("air");
    b.choose_specialization("material", "IdealGas");
    for (const auto* a : {"reversible", "adiabatic", "isothermal", "isobaric", "isochoric", "polytropic"}) {
        b.set_attribute("change", a, "false");
    }
    b.set_value("m", 1.0);
    b.set_value("T_1", 300.0);
    b.set_value("p_1", 1e5);
    b.finalize();
    const auto r = solve_problem(b.problem(), kb());
    CHECK(r.status == SolveStatus::Solved);
    CHECK(has(r.undetermined, "T_2"));
    CHECK(has(r.undetermined, "W_12"));
    const auto V1 = std::find_if(r.results.begin(), r.results.end(), [](const auto& x) { return x.name == "V_1"; });
    REQUIRE(V1 != r.results.end());
    CHECK_THAT(V1->value, WithinRel(oracle::volume(oracle::air, 1.0, 300.0, 1e5), 1e-12));
}

TEST_CASE("reasoning graph export") {
    ReasoningGraph g;
    solve_problem(fixtures::builder("a1_isothermal_compression").problem(), kb(), {}, &g);
    const auto doc = export_reasoning_graph(g);
    const auto fired = std::count_if(doc.nodes.begin(), doc.nodes.end(), [](const GraphNode& n) {
        return n.kind == "equation" && n.properties.count("fired") && n.properties.at("fired") == "true";
    });
    CHECK(fired == static_cast<long>(g.firings.size()));
    const auto determines = std::count_if(doc.edges.begin(), doc.edges.end(), [](const auto& e) { return e.label == "determines"; });
    CHECK(determines == static_cast<long>(g.firings.size()));
    CHECK(doc.to_dot("reasoning").find("W_12") != std::string::npos);
}
