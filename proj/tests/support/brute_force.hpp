#pragma once

// Exhaustive firing-sequence enumeration. Each equation is just its variable
// set; an equation may fire when exactly one of its variables is undetermined.
// Every reachable terminal state is collected, so a non-confluent rule set
// would show up as more than one result.

#include <functional>
#include <set>
#include <string>
#include <vector>

namespace brute_force {

using VarSet = std::set<std::string>;

inline std::set<VarSet> terminal_states(const std::vector<VarSet>& equations, const VarSet& known) {
    std::set<VarSet> seen;
    std::set<VarSet> terminals;
    std::function<void(const VarSet&)> visit = [&](const VarSet& state) {
        if (!seen.insert(state).second) return;
        bool fired = false;
        for (const auto& eq : equations) {
            std::string missing;
            int count = 0;
            for (const auto& v : eq) {
                if (!state.count(v)) {
                    missing = v;
                    ++count;
                }
            }
            if (count != 1) continue;
            fired = true;
            auto next = state;
            next.insert(missing);
            visit(next);
        }
        if (!fired) terminals.insert(state);
    };
    visit(known);
    return terminals;
}

}  // namespace brute_force
