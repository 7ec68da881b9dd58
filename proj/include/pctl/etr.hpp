#pragma once

#include "pctl/formula.hpp"
#include "pctl/markov.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pctl::etr {

enum class Relation : unsigned char { Geq, Gt, Leq, Lt };

const char* to_string(Relation rel);
Relation negate(Relation rel);
bool compare(const Rational& value, Relation rel, const Rational& bound);

/// Formula whose only probabilistic operator is F with one of four
/// relations. True and False only appear when a trivial bound was removed.
class FFormula {
public:
    enum class Kind : unsigned char { True, False, Atom, NegAtom, And, Or, Eventually };

    FFormula() : FFormula(constant(true)) {}

    static FFormula constant(bool value);
    static FFormula atom(std::string name);
    static FFormula neg_atom(std::string name);
    /// Flattens nested operands and folds constants.
    static FFormula conj(std::vector<FFormula> operands);
    static FFormula disj(std::vector<FFormula> operands);
    /// Trivial bounds (>= 0, <= 1, > 1, < 0) fold to constants.
    static FFormula eventually(Relation rel, Rational bound, FFormula body);

    Kind kind() const { return node_->kind; }
    const std::string& name() const { return node_->name; }
    const std::vector<FFormula>& operands() const { return node_->operands; }
    Relation relation() const { return node_->rel; }
    const Rational& bound() const { return node_->bound; }
    const FFormula& body() const { return node_->operands.front(); }

    /// Canonical text; equal formulas have equal keys.
    const std::string& key() const { return node_->key; }

    friend bool operator==(const FFormula& a, const FFormula& b) { return a.key() == b.key(); }

private:
    struct Node {
        Kind kind;
        std::string name;
        std::vector<FFormula> operands;
        Relation rel = Relation::Geq;
        Rational bound;
        std::string key;
    };
    explicit FFormula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    static FFormula make(Node node);
    std::shared_ptr<const Node> node_;
};

std::string to_string(const FFormula& f);

/// Negation pushed to the atoms; F relations flip.
FFormula negation(const FFormula& f);

/// G>=r psi becomes F<=1-r (not psi) and G>r psi becomes F<1-r (not psi).
FFormula f_normal_form(const StateFormula& f);

/// Inverse direction for model checking; throws for constants.
StateFormula to_state_formula(const FFormula& f);

/// Distinct subformulas, children before parents, root last.
std::vector<FFormula> f_subformulas(const FFormula& f);

/// Vertex i is bit i. Bounds below keep n small enough for this.
using VertexSet = std::uint32_t;
inline constexpr std::size_t kMaxVertices = 8;

struct ETRCandidate {
    std::size_t vertices = 0;
    std::vector<VertexSet> successors;  // per vertex, nonempty
    std::vector<VertexSet> labels;      // aligned with f_subformulas(phi)
};

struct EnumerateOptions {
    /// Skip labelings already refuted by interval reasoning.
    bool prune = true;
};

/// Visits candidates with 1..n vertices: graphs in which every vertex has a
/// successor and is reachable from v1, then labelings with v1 in V(phi).
/// The visitor returns false to stop. Returns the number of visits.
std::uint64_t enumerate_candidates(const FFormula& phi, std::size_t n,
                                   const std::function<bool(const ETRCandidate&)>& visit,
                                   const EnumerateOptions& options = {});

/// Candidate read off a chain: its graph and the true satisfaction sets.
ETRCandidate induced_candidate(const MarkovChain& chain, const FFormula& phi);

enum class YRole : unsigned char { Target, Out, Other };

struct YBound {
    std::size_t vertex;
    Relation rel;
    Rational bound;
};

/// Reachability variables for one F body, shared by every F subformula with
/// that body.
struct YBlock {
    FFormula body;
    std::vector<YRole> roles;
    /// Other vertices from which every path avoiding the target can still
    /// reach it; these get y = 1 for every choice of x.
    std::vector<bool> certain;
    std::vector<YBound> bounds;
};

struct ETRSystem {
    std::size_t vertices = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // x_i, sorted
    std::vector<YBlock> blocks;
};

ETRSystem encode(const ETRCandidate& c, const FFormula& phi);
std::size_t constraint_count(const ETRSystem& sys);

/// True when some y variable has no value compatible with its structural
/// range and all of its bounds.
bool interval_refutes(const ETRSystem& sys);

/// Exact y values of each block for edge values x. Throws
/// std::invalid_argument if x is out of range or violates Distr.
std::vector<std::vector<Rational>> block_values(const ETRSystem& sys, const std::vector<Rational>& x);
bool check_assignment(const ETRSystem& sys, const std::vector<Rational>& x);

std::string to_smtlib(const ETRSystem& sys);

/// Chain on v1..vm with the given edge values; atoms from the labeling.
MarkovChain reconstruct(const ETRCandidate& c, const FFormula& phi, const ETRSystem& sys,
                        const std::vector<Rational>& x);

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    /// Shell command; `{file}` is replaced by the constraint file path.
    std::string command;
    std::chrono::milliseconds timeout{10'000};
};

/// Reads the default command template from PCTLSAT_SOLVER_CMD.
std::optional<SolverConfig> solver_from_env();

enum class SolverVerdict { Sat, Unsat, Unknown };

struct SolverAnswer {
    SolverVerdict verdict = SolverVerdict::Unknown;
    /// Edge values when sat and every value was a rational literal.
    std::optional<std::vector<Rational>> x;
    std::string output;
};

/// Runs the solver on `file`, which must already hold to_smtlib(sys).
SolverAnswer run_solver(const SolverConfig& config, const std::filesystem::path& file, const ETRSystem& sys);

enum class SatStatus { Sat, UnsatUpToN, Unknown };

struct SatOptions {
    std::optional<SolverConfig> solver;
    /// Try uniform edge probabilities before calling the solver.
    bool uniform_probe = true;
    std::optional<std::filesystem::path> dump_dir;
    /// Write constraint files without solving.
    bool emit_only = false;
};

struct SatStats {
    std::uint64_t candidates = 0;
    std::uint64_t refuted = 0;
    std::uint64_t solver_calls = 0;
    std::uint64_t solver_unsat = 0;
    std::uint64_t unknown = 0;
    std::uint64_t emitted = 0;
};

struct SatResult {
    SatStatus status = SatStatus::Unknown;
    std::optional<MarkovChain> model;  // entry is v1 (index 0)
    SatStats stats;
};

const char* to_string(SatStatus status);

SatResult solve_bounded_sat(const StateFormula& phi, std::size_t n, const SatOptions& options = {});

}  // namespace pctl::etr
