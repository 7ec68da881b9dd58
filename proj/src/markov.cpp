#include "pctl/markov.hpp"

#include "pctl/linalg.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace pctl {

StateIndex MarkovChain::add_state(std::string id, std::set<std::string> labels) {
    if (by_id_.contains(id)) throw std::invalid_argument("duplicate state id '" + id + "'");
    StateIndex s = ids_.size();
    by_id_.emplace(id, s);
    ids_.push_back(std::move(id));
    labels_.push_back(std::move(labels));
    succ_.emplace_back();
    return s;
}

void MarkovChain::add_transition(StateIndex from, StateIndex to, Rational probability) {
    if (from >= size() || to >= size()) throw std::out_of_range("transition endpoint out of range");
    probability.canonicalize();
    succ_[from].push_back({to, std::move(probability)});
}

std::optional<StateIndex> MarkovChain::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

StateIndex MarkovChain::index_of(std::string_view id) const {
    auto s = find(id);
    if (!s) throw std::out_of_range("unknown state '" + std::string(id) + "'");
    return *s;
}

Rational MarkovChain::probability(StateIndex from, StateIndex to) const {
    Rational sum = 0;
    for (const auto& tr : successors(from))
        if (tr.target == to) sum += tr.probability;
    return sum;
}

std::vector<Diagnostic> validate(const MarkovChain& chain) {
    std::vector<Diagnostic> out;
    for (StateIndex s = 0; s < chain.size(); ++s) {
        Rational sum = 0;
        std::set<StateIndex> seen;
        for (const auto& tr : chain.successors(s)) {
            const auto& target = chain.id(tr.target);
            if (tr.probability <= 0)
                out.push_back({chain.id(s), "edge to '" + target + "' has non-positive probability " +
                                                to_string(tr.probability) + " (omit zero edges)"});
            else if (tr.probability > 1)
                out.push_back({chain.id(s), "edge to '" + target + "' has probability " +
                                                to_string(tr.probability) + " above 1"});
            if (!seen.insert(tr.target).second)
                out.push_back({chain.id(s), "duplicate edge to '" + target + "'"});
            sum += tr.probability;
        }
        if (sum != 1)
            out.push_back({chain.id(s), "outgoing probabilities sum to " + to_string(sum) + ", expected 1"});
    }
    return out;
}

SccDecomposition scc_decompose(const MarkovChain& chain) {
    // Iterative Tarjan; components come out sinks first.
    const std::size_t n = chain.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<StateIndex> stack;
    std::size_t counter = 0;
    SccDecomposition out;
    out.component_of.assign(n, 0);

    struct Frame {
        StateIndex state;
        std::size_t next_edge;
    };
    for (StateIndex root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& frame = call.back();
            const auto& succ = chain.successors(frame.state);
            if (frame.next_edge < succ.size()) {
                StateIndex w = succ[frame.next_edge++].target;
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[frame.state] = std::min(low[frame.state], index[w]);
                }
                continue;
            }
            StateIndex v = frame.state;
            call.pop_back();
            if (!call.empty()) low[call.back().state] = std::min(low[call.back().state], low[v]);
            if (low[v] != index[v]) continue;
            std::vector<StateIndex> component;
            StateIndex w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                out.component_of[w] = out.components.size();
                component.push_back(w);
            } while (w != v);
            std::sort(component.begin(), component.end());
            out.components.push_back(std::move(component));
        }
    }

    out.is_bottom.assign(out.components.size(), true);
    for (StateIndex s = 0; s < n; ++s)
        for (const auto& tr : chain.successors(s))
            if (out.component_of[tr.target] != out.component_of[s]) out.is_bottom[out.component_of[s]] = false;
    return out;
}

StateSet reachable_from(const MarkovChain& chain, StateIndex from) {
    StateSet seen = chain.empty_set();
    std::deque<StateIndex> queue{from};
    seen.set(from);
    while (!queue.empty()) {
        StateIndex s = queue.front();
        queue.pop_front();
        for (const auto& tr : chain.successors(s)) {
            if (!seen.test(tr.target)) {
                seen.set(tr.target);
                queue.push_back(tr.target);
            }
        }
    }
    return seen;
}

StateSet can_reach(const MarkovChain& chain, const StateSet& targets) {
    std::vector<std::vector<StateIndex>> pred(chain.size());
    for (StateIndex s = 0; s < chain.size(); ++s)
        for (const auto& tr : chain.successors(s)) pred[tr.target].push_back(s);
    StateSet seen = targets;
    std::deque<StateIndex> queue;
    for (auto s = targets.find_first(); s != StateSet::npos; s = targets.find_next(s)) queue.push_back(s);
    while (!queue.empty()) {
        StateIndex s = queue.front();
        queue.pop_front();
        for (StateIndex p : pred[s]) {
            if (!seen.test(p)) {
                seen.set(p);
                queue.push_back(p);
            }
        }
    }
    return seen;
}

StateSet bscc_states(const MarkovChain& chain) {
    auto scc = scc_decompose(chain);
    StateSet out = chain.empty_set();
    for (std::size_t c = 0; c < scc.components.size(); ++c)
        if (scc.is_bottom[c])
            for (StateIndex s : scc.components[c]) out.set(s);
    return out;
}

namespace {

// Solves x = P x on `unknown` states with x fixed to `fixed` columns
// elsewhere. One column per right-hand side.
linalg::Matrix solve_absorption(const MarkovChain& chain, const std::vector<StateIndex>& unknown,
                                const std::vector<std::vector<Rational>>& fixed_values,
                                const std::vector<bool>& is_unknown) {
    const std::size_t k = unknown.size();
    const std::size_t columns = fixed_values.size();
    std::vector<std::size_t> position(chain.size(), 0);
    for (std::size_t i = 0; i < k; ++i) position[unknown[i]] = i;
    linalg::Matrix a(k, k), b(k, columns);
    for (std::size_t i = 0; i < k; ++i) {
        a(i, i) = 1;
        for (const auto& tr : chain.successors(unknown[i])) {
            if (is_unknown[tr.target]) {
                a(i, position[tr.target]) -= tr.probability;
            } else {
                for (std::size_t c = 0; c < columns; ++c) b(i, c) += tr.probability * fixed_values[c][tr.target];
            }
        }
    }
    auto x = linalg::solve(a, b);
    if (!x) throw std::logic_error("absorption system is singular");
    return *x;
}

}  // namespace

std::vector<Rational> reach_probabilities(const MarkovChain& chain, const StateSet& targets) {
    const std::size_t n = chain.size();
    StateSet maybe = can_reach(chain, targets) - targets;
    std::vector<Rational> result(n, Rational(0));
    std::vector<Rational> fixed(n, Rational(0));
    for (auto s = targets.find_first(); s != StateSet::npos; s = targets.find_next(s)) {
        result[s] = 1;
        fixed[s] = 1;
    }
    std::vector<StateIndex> unknown;
    std::vector<bool> is_unknown(n, false);
    for (auto s = maybe.find_first(); s != StateSet::npos; s = maybe.find_next(s)) {
        unknown.push_back(s);
        is_unknown[s] = true;
    }
    if (unknown.empty()) return result;
    auto x = solve_absorption(chain, unknown, {fixed}, is_unknown);
    for (std::size_t i = 0; i < unknown.size(); ++i) result[unknown[i]] = x(i, 0);
    return result;
}

std::map<StateIndex, Rational> first_passage(const MarkovChain& chain, StateIndex start, const StateSet& targets) {
    const std::size_t n = chain.size();
    std::map<StateIndex, Rational> out;
    for (auto t = targets.find_first(); t != StateSet::npos; t = targets.find_next(t)) out[t] = 0;
    if (targets.test(start)) {
        out[start] = 1;
        return out;
    }

    // States visited before the first hit of `targets`.
    StateSet before = chain.empty_set();
    std::deque<StateIndex> queue{start};
    before.set(start);
    while (!queue.empty()) {
        StateIndex s = queue.front();
        queue.pop_front();
        for (const auto& tr : chain.successors(s)) {
            if (targets.test(tr.target) || before.test(tr.target)) continue;
            before.set(tr.target);
            queue.push_back(tr.target);
        }
    }
    StateSet reaches = can_reach(chain, targets);
    if (!(before - reaches).none()) {
        // The states that cannot reach `targets` are closed under successors,
        // so they contain a bottom SCC.
        StateSet stuck = before - reaches;
        auto scc = scc_decompose(chain);
        for (std::size_t c = 0; c < scc.components.size(); ++c) {
            if (!scc.is_bottom[c] || !stuck.test(scc.components[c].front())) continue;
            std::string names;
            for (StateIndex s : scc.components[c]) names += (names.empty() ? "" : ",") + chain.id(s);
            throw FirstPassageError("target set is not reached with probability 1 from '" + chain.id(start) +
                                        "': bottom SCC {" + names + "} avoids it",
                                    scc.components[c]);
        }
        throw std::logic_error("first_passage: missing bottom SCC certificate");
    }

    std::vector<StateIndex> unknown;
    std::vector<bool> is_unknown(n, false);
    for (auto s = before.find_first(); s != StateSet::npos; s = before.find_next(s)) {
        unknown.push_back(s);
        is_unknown[s] = true;
    }
    std::vector<StateIndex> target_list;
    std::vector<std::vector<Rational>> fixed;
    for (auto t = targets.find_first(); t != StateSet::npos; t = targets.find_next(t)) {
        target_list.push_back(t);
        std::vector<Rational> column(n, Rational(0));
        column[t] = 1;
        fixed.push_back(std::move(column));
    }
    // Only states in `before` and `targets` are ever touched from `start`.
    auto x = solve_absorption(chain, unknown, fixed, is_unknown);
    std::size_t start_row = 0;
    for (std::size_t i = 0; i < unknown.size(); ++i)
        if (unknown[i] == start) start_row = i;
    for (std::size_t c = 0; c < target_list.size(); ++c) out[target_list[c]] = x(start_row, c);
    return out;
}

MarkovChain chain_from_json(const nlohmann::json& doc) {
    MarkovChain chain;
    if (!doc.contains("states") || !doc.at("states").is_array())
        throw std::invalid_argument("model JSON: missing \"states\" array");
    for (const auto& st : doc.at("states")) {
        std::set<std::string> labels;
        if (st.contains("ap"))
            for (const auto& ap : st.at("ap")) labels.insert(ap.get<std::string>());
        chain.add_state(st.at("id").get<std::string>(), std::move(labels));
    }
    if (doc.contains("edges")) {
        for (const auto& e : doc.at("edges")) {
            auto from = chain.find(e.at("from").get<std::string>());
            auto to = chain.find(e.at("to").get<std::string>());
            if (!from || !to) throw std::invalid_argument("model JSON: edge refers to an unknown state");
            std::string text = e.at("p").is_string() ? e.at("p").get<std::string>() : e.at("p").dump();
            auto p = parse_rational(text);
            if (!p) throw std::invalid_argument("model JSON: malformed probability '" + text + "'");
            chain.add_transition(*from, *to, *p);
        }
    }
    return chain;
}

nlohmann::json chain_to_json(const MarkovChain& chain) {
    nlohmann::json states = nlohmann::json::array();
    nlohmann::json edges = nlohmann::json::array();
    for (StateIndex s = 0; s < chain.size(); ++s) {
        states.push_back({{"id", chain.id(s)}, {"ap", chain.labels(s)}});
        for (const auto& tr : chain.successors(s))
            edges.push_back({{"from", chain.id(s)}, {"to", chain.id(tr.target)}, {"p", to_string(tr.probability)}});
    }
    return {{"states", states}, {"edges", edges}};
}

std::string to_dot(const MarkovChain& chain) {
    std::ostringstream out;
    out << "digraph markov {\n";
    for (StateIndex s = 0; s < chain.size(); ++s) {
        std::string label = chain.id(s);
        if (!chain.labels(s).empty()) {
            label += "\\n";
            bool first = true;
            for (const auto& ap : chain.labels(s)) {
                label += (first ? "" : ",") + ap;
                first = false;
            }
        }
        out << "  \"" << chain.id(s) << "\" [label=\"" << label << "\"];\n";
    }
    for (StateIndex s = 0; s < chain.size(); ++s)
        for (const auto& tr : chain.successors(s))
            out << "  \"" << chain.id(s) << "\" -> \"" << chain.id(tr.target) << "\" [label=\""
                << to_string(tr.probability) << "\"];\n";
    out << "}\n";
    return out.str();
}

}  // namespace pctl
