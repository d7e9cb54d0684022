#pragma once

// Randomized properties shared by the unit suite and the acceptance binary.
// Each check returns a summary instead of asserting so both drivers can report.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/brute_force.hpp"
#include "support/fixtures.hpp"
#include "support/replay.hpp"
#include "thermo/error.hpp"
#include "thermo/reasoner.hpp"

namespace properties {

struct Outcome {
    bool ok = true;
    std::size_t cases = 0;
    std::vector<std::string> failures;  // first few only

    void fail(const std::string& what) {
        ok = false;
        if (failures.size() < 10) failures.push_back(what);
    }
    std::string summary() const {
        std::ostringstream s;
        s << cases << " cases";
        if (!failures.empty()) s << "; first failure: " << failures.front();
        return s.str();
    }
};

// ---------------------------------------------------------------------------
// P1: solve_for round trip over the shipped catalog.

struct Range {
    double lo;
    double hi;
    bool log_scale;
};

inline Range range_for(const std::string& variable) {
    static const std::map<std::string, Range> ranges = {
        {"T", {200, 2000, true}},       {"p", {1e3, 1e7, true}},        {"V", {1e-3, 1e2, true}},
        {"m", {1e-2, 1e2, true}},       {"n_mol", {1e-2, 1e5, true}},   {"M", {2e-3, 0.2, true}},
        {"R", {40, 4200, true}},        {"cp", {500, 15000, true}},     {"cv", {300, 11000, true}},
        {"kappa", {1.05, 1.7, true}},   {"rho", {1e-3, 1e3, true}},     {"v", {1e-4, 1e4, true}},
        {"n_poly", {0.5, 2.0, false}},  {"R_univ", {1, 20, true}},      {"T0", {200, 400, true}},
        {"p0", {1e4, 1e6, true}},       {"u", {-1e6, 1e6, false}},      {"h", {-1e6, 1e6, false}},
        {"du", {-1e6, 1e6, false}},     {"dh", {-1e6, 1e6, false}},     {"s", {-5e3, 5e3, false}},
        {"ds", {-5e3, 5e3, false}},     {"S", {-1e5, 1e5, false}},      {"dS", {-1e5, 1e5, false}},
        {"U", {-1e8, 1e8, false}},      {"H", {-1e8, 1e8, false}},      {"Q", {-1e8, 1e8, false}},
        {"W", {-1e8, 1e8, false}},      {"dU", {-1e8, 1e8, false}},     {"dH", {-1e8, 1e8, false}},
    };
    const auto it = ranges.find(variable);
    if (it == ranges.end()) throw std::runtime_error("no sampling range for " + variable);
    return it->second;
}

inline double draw(std::mt19937_64& rng, const Range& r) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double t = u(rng);
    if (r.log_scale) return std::exp(std::log(r.lo) + t * (std::log(r.hi) - std::log(r.lo)));
    return r.lo + t * (r.hi - r.lo);
}

inline std::string plain_name(const thermo::Slot& slot) {
    std::string key = slot.key();
    std::replace(key.begin(), key.end(), '@', '_');
    return key + "_";
}

// Test-side root search: sign changes on a log grid, refined by bisection and
// accepted only if the residual really vanishes (poles change sign too).
inline bool has_admissible_root(const std::string& rendered, const std::string& unknown,
                                std::map<std::string, double> values, bool positive_only) {
    auto f = [&](double x) {
        values[unknown] = x;
        const auto eq = rendered.find(" = ");
        const double l = replay::Evaluator(rendered.substr(0, eq), values).parse();
        const double r = replay::Evaluator(rendered.substr(eq + 3), values).parse();
        return l - r;
    };
    auto resid = [&](double x) {
        values[unknown] = x;
        return replay::residual_of(rendered, values);
    };
    std::vector<double> grid;
    for (int i = 0; i <= 1400; ++i) grid.push_back(std::pow(10.0, -12.0 + 28.0 * i / 1400.0));
    if (!positive_only) {
        std::vector<double> mirrored;
        for (auto it = grid.rbegin(); it != grid.rend(); ++it) mirrored.push_back(-*it);
        mirrored.push_back(0.0);
        mirrored.insert(mirrored.end(), grid.begin(), grid.end());
        grid = std::move(mirrored);
    }
    double prev_x = 0.0, prev_f = 0.0;
    bool have_prev = false;
    for (double x : grid) {
        const double fx = f(x);
        if (!std::isfinite(fx)) {
            have_prev = false;
            continue;
        }
        if (fx == 0.0) return true;
        if (have_prev && (prev_f < 0) != (fx < 0)) {
            double a = prev_x, b = x, fa = prev_f;
            for (int k = 0; k < 300; ++k) {
                const double mid = 0.5 * (a + b);
                if (mid == a || mid == b) break;
                const double fm = f(mid);
                if (!std::isfinite(fm)) break;
                if ((fm < 0) == (fa < 0)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            if (resid(a) <= 1e-10 || resid(b) <= 1e-10) return true;
        }
        prev_x = x;
        prev_f = fx;
        have_prev = true;
    }
    return false;
}

struct RoundTripOptions {
    int samples = 100;
    int max_draws = 20000;
    std::uint64_t seed = 20240611;
};

inline Outcome solve_for_round_trip(const thermo::KnowledgeBase& kb, const RoundTripOptions& opt = {}) {
    Outcome out;
    std::mt19937_64 rng(opt.seed);
    for (const auto& tmpl : kb.equation_catalog()) {
        thermo::Binding binding;
        for (const auto& s : tmpl.slots) binding[s.key()] = plain_name(s);
        const auto inst = thermo::instantiate(tmpl, tmpl.name, binding);
        const auto rendered = inst.rendered();
        for (const auto& unknown_slot : tmpl.slots) {
            const auto unknown = plain_name(unknown_slot);
            const bool positive =
                kb.schema().variables.at(unknown_slot.variable).positivity == thermo::Positivity::MustBePositive;
            int admissible = 0;
            int draws = 0;
            while (admissible < opt.samples && draws < opt.max_draws) {
                ++draws;
                thermo::Valuation val;
                for (const auto& s : tmpl.slots) {
                    if (s.key() != unknown_slot.key()) val[plain_name(s)] = draw(rng, range_for(s.variable));
                }
                if (!has_admissible_root(rendered, unknown, val, positive)) continue;
                ++admissible;
                ++out.cases;
                try {
                    const auto r = thermo::solve_for(
                        inst, unknown, val,
                        positive ? thermo::Positivity::MustBePositive : thermo::Positivity::Unrestricted);
                    auto full = val;
                    full[unknown] = r.value;
                    const double res = thermo::residual(inst, full);
                    if (!(res <= 1e-9)) {
                        std::ostringstream s;
                        s << tmpl.name << " for " << unknown_slot.key() << ": residual " << res;
                        out.fail(s.str());
                    }
                } catch (const std::exception& e) {
                    out.fail(tmpl.name + " for " + unknown_slot.key() + ": " + e.what());
                }
            }
            if (admissible < opt.samples) {
                out.fail(tmpl.name + " for " + unknown_slot.key() + ": only " + std::to_string(admissible) +
                         " admissible valuations");
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Equation pools for the reachability properties.

inline std::vector<thermo::EquationInstance> instances_of(const std::string& fixture) {
    const auto& kb = thermo::KnowledgeBase::builtin();
    return thermo::setup_equations(fixtures::builder(fixture).problem(), kb);
}

// Distinct instances from problems with different guard settings.
inline std::vector<thermo::EquationInstance> instance_pool() {
    std::map<std::string, thermo::EquationInstance> pool;
    for (const auto* f : {"a1_isothermal_compression", "a2_adiabatic_expansion", "a3_isochoric_heating",
                          "a4_equilibrium_state", "a5_isobaric_heating", "a6_polytropic_compression",
                          "a12_adiabatic_irreversible"}) {
        for (auto& inst : instances_of(f)) pool.emplace(inst.name, std::move(inst));
    }
    std::vector<thermo::EquationInstance> out;
    for (auto& [_, inst] : pool) out.push_back(std::move(inst));
    return out;
}

inline std::set<std::string> all_variables(const std::vector<thermo::EquationInstance>& eqs) {
    std::set<std::string> vars;
    for (const auto& e : eqs) {
        for (const auto& v : e.variables()) vars.insert(v);
    }
    return vars;
}

inline std::set<std::string> random_subset(std::mt19937_64& rng, const std::set<std::string>& from, double p) {
    std::bernoulli_distribution pick(p);
    std::set<std::string> out;
    for (const auto& v : from) {
        if (pick(rng)) out.insert(v);
    }
    return out;
}

inline std::set<std::string> determined(const std::vector<thermo::EquationInstance>& eqs,
                                        const std::set<std::string>& known,
                                        const std::optional<std::vector<std::size_t>>& order = std::nullopt) {
    auto g = thermo::build_graph(eqs, known, {});
    return thermo::reachability(g, order);
}

// ---------------------------------------------------------------------------
// P2: reachability against exhaustive enumeration.

inline Outcome reachability_vs_brute_force(int trials = 200, std::uint64_t seed = 7) {
    Outcome out;
    const auto pool = instance_pool();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(1, 8);
    for (int t = 0; t < trials; ++t) {
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min<std::size_t>(size(rng), idx.size()));
        std::vector<thermo::EquationInstance> eqs;
        std::vector<brute_force::VarSet> sets;
        for (auto i : idx) {
            eqs.push_back(pool[i]);
            const auto vs = pool[i].variables();
            sets.emplace_back(vs.begin(), vs.end());
        }
        const auto known = random_subset(rng, all_variables(eqs), 0.45);
        ++out.cases;
        const auto got = determined(eqs, known);
        const auto terminals = brute_force::terminal_states(sets, known);
        if (terminals.size() != 1) {
            out.fail("trial " + std::to_string(t) + ": " + std::to_string(terminals.size()) + " terminal states");
        } else if (*terminals.begin() != got) {
            out.fail("trial " + std::to_string(t) + ": determined set differs from enumeration");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// P3: monotonicity in the knowns and independence of scan order.

inline Outcome reachability_monotone(int trials = 100, std::uint64_t seed = 11) {
    Outcome out;
    const auto eqs = instance_pool();
    const auto vars = all_variables(eqs);
    std::mt19937_64 rng(seed);
    for (int t = 0; t < trials; ++t) {
        const auto k = random_subset(rng, vars, 0.25);
        auto k2 = k;
        for (const auto& v : random_subset(rng, vars, 0.15)) k2.insert(v);
        ++out.cases;
        const auto small = determined(eqs, k);
        const auto large = determined(eqs, k2);
        if (!std::includes(large.begin(), large.end(), small.begin(), small.end())) {
            out.fail("trial " + std::to_string(t) + ": determined set shrank when knowns grew");
        }
    }
    return out;
}

inline Outcome reachability_order_independent(int trials = 100, std::uint64_t seed = 13) {
    Outcome out;
    const auto eqs = instance_pool();
    const auto vars = all_variables(eqs);
    std::mt19937_64 rng(seed);
    for (int t = 0; t < trials; ++t) {
        const auto k = random_subset(rng, vars, 0.3);
        std::vector<std::size_t> order(eqs.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        ++out.cases;
        if (determined(eqs, k) != determined(eqs, k, order)) {
            out.fail("trial " + std::to_string(t) + ": scan order changed the determined set");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// P4: one extra applicable equation never changes a target value.

inline std::map<std::string, double> solve_with(const std::vector<thermo::EquationInstance>& eqs,
                                                const thermo::ProblemInstance& problem,
                                                const std::map<std::string, thermo::Positivity>& domains,
                                                std::vector<thermo::AuditEntry>* audit = nullptr) {
    thermo::Valuation knowns;
    std::set<std::string> names;
    for (const auto& [n, k] : problem.knowns) {
        knowns[n] = k.value;
        names.insert(n);
    }
    auto g = thermo::build_graph(eqs, names, problem.targets);
    thermo::reachability(g);
    const auto path = thermo::extract_path(g, problem.targets);
    const auto ex = thermo::execute(path, knowns, g.equations, domains);
    if (audit) *audit = ex.audit;
    std::map<std::string, double> values;
    for (const auto& t : problem.targets) values[t] = ex.valuation.at(t);
    return values;
}

inline Outcome redundancy_tolerance(const std::vector<std::string>& fixture_names) {
    Outcome out;
    const auto& kb = thermo::KnowledgeBase::builtin();
    for (const auto& fixture : fixture_names) {
        const auto builder = fixtures::builder(fixture);
        const auto& problem = builder.problem();
        const auto domains = thermo::variable_domains(problem, kb.schema());
        const auto all = thermo::setup_equations(problem, kb);

        std::set<std::string> known;
        for (const auto& [n, _] : problem.knowns) known.insert(n);
        auto g = thermo::build_graph(all, known, problem.targets);
        thermo::reachability(g);
        const auto path = thermo::extract_path(g, problem.targets);
        std::vector<thermo::EquationInstance> base;
        std::set<std::string> on_path;
        for (const auto& step : path.steps) {
            base.push_back(g.equations[step.equation]);
            on_path.insert(g.equations[step.equation].name);
        }
        std::map<std::string, double> reference;
        try {
            reference = solve_with(base, problem, domains);
        } catch (const std::exception& e) {
            out.fail(fixture + ": path-only set failed: " + e.what());
            continue;
        }
        for (const auto& extra : all) {
            if (on_path.count(extra.name)) continue;
            ++out.cases;
            auto eqs = base;
            eqs.push_back(extra);
            try {
                std::vector<thermo::AuditEntry> audit;
                const auto values = solve_with(eqs, problem, domains, &audit);
                if (values != reference) out.fail(fixture + " + " + extra.name + ": target value changed");
                for (const auto& a : audit) {
                    if (!a.ok) out.fail(fixture + " + " + extra.name + ": audit of " + a.equation + " failed");
                }
            } catch (const std::exception& e) {
                out.fail(fixture + " + " + extra.name + ": " + e.what());
            }
        }
    }
    return out;
}

}  // namespace properties
