#pragma once

#include "pctl/formula.hpp"
#include "pctl/markov.hpp"
#include "pctl/modelcheck.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pctl {

struct ProgressLoop {
    std::vector<FormulaSet> sets;
};

std::string to_string(const ProgressLoop& loop);

/// Formulas of the loop that the loop itself does not discharge: every G
/// formula, every F formula whose body is absent from the loop, and F=1 psi
/// in L_i whose body is absent from L_i..L_n.
FormulaSet delta(const ProgressLoop& loop);

/// Numbered loop conditions; Subset is the requirement L_i of sub(X).
enum class LoopCondition {
    Hypothesis,
    Subset,
    Contains,
    Distinct,
    Local,
    DeltaHolds,
    DeltaBodies,
    Continuation
};

const char* to_string(LoopCondition c);

struct LoopViolation {
    LoopCondition condition;
    std::string message;
};

/// Checks every loop condition independently and reports all violations.
/// The hypotheses (s satisfies X, X closed and updated) are checked too.
std::vector<LoopViolation> verify_loop(ModelChecker& mc, StateIndex s, const FormulaSet& xs, const ProgressLoop& loop);

class LoopSearchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SearchStatus { Found, NotFound, BudgetExceeded };

struct SearchResult {
    SearchStatus status = SearchStatus::NotFound;
    std::optional<ProgressLoop> loop;
    std::uint64_t nodes = 0;
};

struct GenericSearchOptions {
    std::size_t max_n = 3;
    std::uint64_t node_budget = 5'000'000;
    /// Largest |sub(X)| for which subsets are enumerated.
    std::size_t max_sub = 20;
};

/// Exhaustive search over sequences of distinct locally consistent subsets of
/// sub(X), shortest loops first.
SearchResult search_loop_generic(ModelChecker& mc, StateIndex s, const FormulaSet& xs,
                                 const GenericSearchOptions& options = {});

/// Constructive search for X in fragment L2. Throws LoopSearchError if X is
/// outside the fragment or violates the hypotheses.
ProgressLoop search_loop_L2(ModelChecker& mc, StateIndex s, const FormulaSet& xs);

struct CaratheodoryResult {
    std::vector<std::size_t> support;  // indices into the input points
    std::vector<Rational> weights;     // aligned with support
};

/// Reduces a convex combination to at most dim+1 points with the same
/// weighted sum. Among ties the point with the smallest index is dropped.
CaratheodoryResult caratheodory_reduce(const std::vector<std::vector<Rational>>& points,
                                       const std::vector<Rational>& weights);

struct SuccessorSelection {
    std::vector<StateIndex> targets;                  // T, ascending
    std::map<StateIndex, Rational> alpha;
    FormulaSet delta;
    std::vector<PathFormula> paths;                   // p(delta), F formulas first
    std::map<StateIndex, std::vector<Rational>> values;  // Prob_t(paths[i])
    std::vector<Rational> at_source;                  // Prob_s(paths[i])
};

SuccessorSelection successor_selection(ModelChecker& mc, StateIndex s, const FormulaSet& delta);

struct Submodel {
    MarkovChain chain;
    StateIndex entry;
    Rational weight;
};

struct LoopModel {
    MarkovChain chain;
    StateIndex entry;
    Rational epsilon;
};

/// Loop exit mass: midpoint of (max R, 1), or 1/2 when R is empty, where R
/// holds the bounds r < 1 of F formulas in the loop.
Rational loop_epsilon(const ProgressLoop& loop);

/// Chain L_0 -> ... -> L_n with L_n returning to L_0 with probability epsilon
/// and entering submodel k with (1 - epsilon) * weight_k. The entry is the
/// first L_i containing X.
LoopModel build_loop_model(const ProgressLoop& loop, const FormulaSet& xs, const std::vector<Submodel>& submodels,
                           std::optional<Rational> epsilon = std::nullopt);

/// Collapses the BSCC of t to one cycle with a state per distinct
/// satisfaction signature over sub(X). Entry first.
std::pair<MarkovChain, StateIndex> bscc_reduce(ModelChecker& mc, StateIndex t, const FormulaSet& xs);

enum class LoopStrategy { L2, Generic };

struct CompressOptions {
    LoopStrategy strategy = LoopStrategy::L2;
    GenericSearchOptions generic;
    std::size_t max_depth = 64;
};

struct CompressResult {
    MarkovChain chain;
    StateIndex entry = 0;
    nlohmann::json trace;
    bool bounds_respected = true;
    bool measure_decreased = true;
};

class CompressError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bounded model of psi built from the model (chain, s). The result is
/// re-verified by model checking; size bounds and measure decrease are
/// recorded per level in the trace.
CompressResult compress_model(const MarkovChain& chain, StateIndex s, const StateFormula& psi,
                              const CompressOptions& options = {});

/// Every non-bottom SCC is a cycle whose states have exactly one successor
/// inside the SCC, and at most one state has edges leaving it.
bool loops_have_single_exit(const MarkovChain& chain);

}  // namespace pctl
