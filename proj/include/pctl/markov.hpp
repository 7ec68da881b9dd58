#pragma once

#include "pctl/rational.hpp"

#include <boost/dynamic_bitset.hpp>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pctl {

using StateIndex = std::size_t;
using StateSet = boost::dynamic_bitset<>;

struct Transition {
    StateIndex target;
    Rational probability;
};

/// Finite Markov chain with exact transition probabilities. States are
/// identified by index (declaration order) and carry a string id.
///
/// Construction does not enforce row sums; call validate() before analysis.
class MarkovChain {
public:
    StateIndex add_state(std::string id, std::set<std::string> labels = {});
    void add_transition(StateIndex from, StateIndex to, Rational probability);

    std::size_t size() const { return ids_.size(); }
    const std::string& id(StateIndex s) const { return ids_.at(s); }
    std::optional<StateIndex> find(std::string_view id) const;
    /// Throws std::out_of_range for an unknown id.
    StateIndex index_of(std::string_view id) const;

    const std::set<std::string>& labels(StateIndex s) const { return labels_.at(s); }
    bool has_label(StateIndex s, const std::string& ap) const { return labels_.at(s).contains(ap); }
    const std::vector<Transition>& successors(StateIndex s) const { return succ_.at(s); }
    Rational probability(StateIndex from, StateIndex to) const;

    StateSet empty_set() const { return StateSet(size()); }
    StateSet full_set() const { return ~StateSet(size()); }

private:
    std::vector<std::string> ids_;
    std::vector<std::set<std::string>> labels_;
    std::vector<std::vector<Transition>> succ_;
    std::unordered_map<std::string, StateIndex> by_id_;
};

struct Diagnostic {
    std::string state;
    std::string message;
};

/// Empty when every row sums to exactly 1 and every listed edge has
/// probability in (0,1]. Zero-probability edges must be absent.
std::vector<Diagnostic> validate(const MarkovChain& chain);

struct SccDecomposition {
    /// Reverse topological order: every edge between components goes from a
    /// later component to an earlier one.
    std::vector<std::vector<StateIndex>> components;
    std::vector<bool> is_bottom;
    std::vector<std::size_t> component_of;
};

SccDecomposition scc_decompose(const MarkovChain& chain);

/// States reachable from `from` by a path of length >= 0.
StateSet reachable_from(const MarkovChain& chain, StateIndex from);
/// States from which some member of `targets` is reachable.
StateSet can_reach(const MarkovChain& chain, const StateSet& targets);
/// States lying in some bottom SCC.
StateSet bscc_states(const MarkovChain& chain);

/// Probability of eventually visiting `targets`, for every state.
std::vector<Rational> reach_probabilities(const MarkovChain& chain, const StateSet& targets);

class FirstPassageError : public std::runtime_error {
public:
    FirstPassageError(const std::string& message, std::vector<StateIndex> certificate)
        : std::runtime_error(message), certificate_(std::move(certificate)) {}
    /// A bottom SCC reachable from the start state and disjoint from the
    /// target set.
    const std::vector<StateIndex>& certificate() const { return certificate_; }

private:
    std::vector<StateIndex> certificate_;
};

/// For each t in `targets`: the probability that a run from `start` visits t
/// with no earlier visit to `targets`. Requires that `targets` is reached
/// with probability 1 (FirstPassageError otherwise); the values sum to 1.
std::map<StateIndex, Rational> first_passage(const MarkovChain& chain, StateIndex start, const StateSet& targets);

MarkovChain chain_from_json(const nlohmann::json& doc);
nlohmann::json chain_to_json(const MarkovChain& chain);
std::string to_dot(const MarkovChain& chain);

}  // namespace pctl
