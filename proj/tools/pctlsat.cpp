// pctlsat: command-line front end for the pctl library.

#include "pctl/closure.hpp"
#include "pctl/etr.hpp"
#include "pctl/measure.hpp"
#include "pctl/modelcheck.hpp"
#include "pctl/progress.hpp"
#include "pctl/syntax.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace pctl;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFails = 1, kUsage = 2, kBackend = 3 };

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

MarkovChain load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("model file '" + path + "': " + e.what());
    }
    MarkovChain chain = chain_from_json(doc);
    auto diags = validate(chain);
    if (!diags.empty()) {
        std::string msg = "model file '" + path + "' is not a Markov chain:";
        for (const auto& d : diags) msg += "\n  state '" + d.state + "': " + d.message;
        throw InputError(msg);
    }
    return chain;
}

StateIndex state_of(const MarkovChain& chain, const std::string& id) {
    auto s = chain.find(id);
    if (!s) throw InputError("unknown state '" + id + "'");
    return *s;
}

StateFormula formula_of(const std::string& text) {
    try {
        return parse_formula(text);
    } catch (const ParseError& e) {
        throw InputError(std::string("formula: ") + e.what());
    }
}

FormulaSet set_of(const std::vector<std::string>& texts) {
    FormulaSet out;
    for (const auto& t : texts) out.insert(formula_of(t));
    return out;
}

json set_json(const FormulaSet& xs) {
    json out = json::array();
    for (const auto& g : xs) out.push_back(to_string(g));
    return out;
}

json path_json(const PathSet& ps) {
    json out = json::array();
    for (const auto& p : ps) out.push_back(to_string(p));
    return out;
}

json states_json(const MarkovChain& chain, const StateSet& set) {
    json out = json::array();
    for (StateIndex s = 0; s < chain.size(); ++s)
        if (set.test(s)) out.push_back(chain.id(s));
    return out;
}

std::string states_text(const MarkovChain& chain, const StateSet& set) {
    std::string out = "{";
    bool first = true;
    for (StateIndex s = 0; s < chain.size(); ++s) {
        if (!set.test(s)) continue;
        out += (first ? "" : ", ") + chain.id(s);
        first = false;
    }
    return out + "}";
}

json loop_json(const ProgressLoop& loop) {
    json out = json::array();
    for (const auto& set : loop.sets) out.push_back(set_json(set));
    return out;
}

ProgressLoop load_loop(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open loop file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("loop file '" + path + "': " + e.what());
    }
    if (doc.is_object() && doc.contains("loop")) doc = doc["loop"];
    if (!doc.is_array()) throw InputError("loop file must hold an array of formula arrays");
    ProgressLoop loop;
    for (const auto& set : doc) {
        if (!set.is_array()) throw InputError("loop file must hold an array of formula arrays");
        FormulaSet fs;
        for (const auto& g : set) fs.insert(formula_of(g.get<std::string>()));
        loop.sets.push_back(std::move(fs));
    }
    return loop;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
}

struct Common {
    std::string model;
    std::string state;
    std::vector<std::string> formulas;
    bool json = false;
};

void add_model(CLI::App* cmd, Common& c) { cmd->add_option("-m,--model", c.model, "Model JSON file")->required(); }
void add_state(CLI::App* cmd, Common& c) { cmd->add_option("-s,--state", c.state, "State id")->required(); }
void add_formulas(CLI::App* cmd, Common& c) {
    cmd->add_option("-f,--formula", c.formulas, "Formula (repeatable; a set when given several times)")->required();
}
void add_json(CLI::App* cmd, Common& c) { cmd->add_flag("--json", c.json, "Print JSON"); }

int run_check(const Common& c, bool has_state) {
    auto chain = load_model(c.model);
    ModelChecker mc(chain);
    auto phi = formula_of(c.formulas.front());
    const StateSet& sat = mc.sat(phi);
    std::optional<StateIndex> s;
    if (has_state) s = state_of(chain, c.state);

    json probs = json::object();
    for (const auto& p : psub(phi)) {
        json row = json::object();
        for (StateIndex t = 0; t < chain.size(); ++t) row[chain.id(t)] = to_string(mc.prob(t, p));
        probs[to_string(p)] = row;
    }
    if (c.json) {
        json out{{"formula", to_string(phi)}, {"sat", states_json(chain, sat)}, {"probabilities", probs}};
        if (s) {
            out["state"] = c.state;
            out["holds"] = sat.test(*s);
        }
        std::cout << out.dump(2) << "\n";
    } else if (s) {
        std::cout << (sat.test(*s) ? "true" : "false") << "\n";
    } else {
        std::cout << "sat: " << states_text(chain, sat) << "\n";
        for (auto it = probs.begin(); it != probs.end(); ++it) {
            std::cout << "P(" << it.key() << "):";
            for (StateIndex t = 0; t < chain.size(); ++t)
                std::cout << " " << chain.id(t) << "=" << it.value()[chain.id(t)].get<std::string>();
            std::cout << "\n";
        }
    }
    return !s || sat.test(*s) ? kOk : kFails;
}

int run_closure(const Common& c) {
    auto chain = load_model(c.model);
    ModelChecker mc(chain);
    StateIndex s = state_of(chain, c.state);
    FormulaSet xs = set_of(c.formulas);
    FormulaSet cl = closure(mc, s, xs), u = uc(mc, s, xs), th = theta(mc, s, xs);
    if (c.json) {
        std::cout << json{{"closure", set_json(cl)}, {"uc", set_json(u)}, {"theta", set_json(th)}}.dump(2) << "\n";
    } else {
        std::cout << "C:     " << to_string(cl) << "\n";
        std::cout << "UC:    " << to_string(u) << "\n";
        std::cout << "theta: " << to_string(th) << "\n";
    }
    return kOk;
}

int run_measure(const Common& c, const std::string& mode) {
    auto chain = load_model(c.model);
    ModelChecker mc(chain);
    StateIndex s = state_of(chain, c.state);
    FormulaSet xs = set_of(c.formulas);
    if (mode == "uc") xs = uc(mc, s, xs);
    auto aux = aux_sets(mc, s, xs);
    auto m = measure(mc, s, xs);
    json norms = json::object();
    for (const auto& p : maximal_psub(xs)) norms[to_string(p)] = path_norm(p);
    if (c.json) {
        std::cout << json{{"X", set_json(xs)},       {"deg", path_json(aux.deg)},
                          {"cf", path_json(aux.cf)}, {"b", aux.b},
                          {"norms", norms},          {"measure", m},
                          {"size_bound", size_bound(aux.b, m).get_str()}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << m << "\n";
        std::cout << "X:   " << to_string(xs) << "\n";
        std::cout << "deg: " << to_string(aux.deg) << "\n";
        std::cout << "cf:  " << to_string(aux.cf) << "\n";
        std::cout << "b:   " << aux.b << "\n";
        for (auto it = norms.begin(); it != norms.end(); ++it)
            std::cout << "|" << it.key() << "| = " << it.value() << "\n";
    }
    return kOk;
}

int run_loop_verify(const Common& c, const std::string& loop_file, bool raw) {
    auto chain = load_model(c.model);
    ModelChecker mc(chain);
    StateIndex s = state_of(chain, c.state);
    FormulaSet xs = set_of(c.formulas);
    if (!raw) xs = uc(mc, s, xs);
    auto loop = load_loop(loop_file);
    auto violations = verify_loop(mc, s, xs, loop);
    if (c.json) {
        json vs = json::array();
        for (const auto& v : violations) vs.push_back({{"condition", to_string(v.condition)}, {"message", v.message}});
        std::cout << json{{"ok", violations.empty()}, {"violations", vs}, {"delta", set_json(delta(loop))}}.dump(2)
                  << "\n";
    } else if (violations.empty()) {
        std::cout << "ok\ndelta: " << to_string(delta(loop)) << "\n";
    } else {
        for (const auto& v : violations) std::cout << to_string(v.condition) << ": " << v.message << "\n";
    }
    return violations.empty() ? kOk : kFails;
}

int run_loop_search(const Common& c, const std::string& strategy, const GenericSearchOptions& options, bool raw) {
    auto chain = load_model(c.model);
    ModelChecker mc(chain);
    StateIndex s = state_of(chain, c.state);
    FormulaSet xs = set_of(c.formulas);
    if (!raw) xs = uc(mc, s, xs);
    std::optional<ProgressLoop> loop;
    std::string status = "found";
    if (strategy == "l2") {
        try {
            loop = search_loop_L2(mc, s, xs);
        } catch (const LoopSearchError& e) {
            throw InputError(e.what());
        }
    } else {
        auto res = search_loop_generic(mc, s, xs, options);
        loop = res.loop;
        if (res.status == SearchStatus::NotFound) status = "not-found";
        if (res.status == SearchStatus::BudgetExceeded) status = "budget-exceeded";
    }
    if (c.json) {
        json out{{"status", status}, {"X", set_json(xs)}};
        if (loop) {
            out["loop"] = loop_json(*loop);
            out["delta"] = set_json(delta(*loop));
        }
        std::cout << out.dump(2) << "\n";
    } else if (loop) {
        std::cout << to_string(*loop) << "delta: " << to_string(delta(*loop)) << "\n";
    } else {
        std::cout << status << "\n";
    }
    if (status == "budget-exceeded") return kBackend;
    return loop ? kOk : kFails;
}

int run_compress(const Common& c, const std::string& strategy, const GenericSearchOptions& generic,
                 const std::string& output, const std::string& trace_file) {
    auto chain = load_model(c.model);
    StateIndex s = state_of(chain, c.state);
    auto psi = formula_of(c.formulas.front());
    CompressOptions options;
    options.strategy = strategy == "l2" ? LoopStrategy::L2 : LoopStrategy::Generic;
    options.generic = generic;
    CompressResult res;
    try {
        res = compress_model(chain, s, psi, options);
    } catch (const CompressError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFails;
    } catch (const LoopSearchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFails;
    }
    json model = chain_to_json(res.chain);
    json out{{"entry", res.chain.id(res.entry)},
             {"states", res.chain.size()},
             {"bounds_respected", res.bounds_respected},
             {"measure_decreased", res.measure_decreased},
             {"single_exit_loops", loops_have_single_exit(res.chain)}};
    if (!output.empty()) write_text(output, model.dump(2) + "\n");
    if (!trace_file.empty()) write_text(trace_file, res.trace.dump(2) + "\n");
    if (c.json) {
        out["model"] = model;
        out["trace"] = res.trace;
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "entry: " << out["entry"].get<std::string>() << "\n";
        std::cout << "states: " << res.chain.size() << "\n";
        std::cout << "bounds respected: " << (res.bounds_respected ? "yes" : "no") << "\n";
        if (output.empty()) std::cout << model.dump(2) << "\n";
    }
    return res.bounds_respected ? kOk : kFails;
}

struct SatArgs {
    std::size_t bound = 3;
    std::string solver_cmd;
    std::string dump_dir;
    bool emit_only = false;
    bool no_probe = false;
    int timeout_ms = 10'000;
    std::string output;
};

int run_sat(const Common& c, const SatArgs& a) {
    auto phi = formula_of(c.formulas.front());
    etr::SatOptions options;
    if (!a.solver_cmd.empty())
        options.solver = etr::SolverConfig{a.solver_cmd};
    else
        options.solver = etr::solver_from_env();
    if (options.solver) options.solver->timeout = std::chrono::milliseconds(a.timeout_ms);
    options.uniform_probe = !a.no_probe;
    if (!a.dump_dir.empty()) options.dump_dir = a.dump_dir;
    options.emit_only = a.emit_only;
    if (a.emit_only && a.dump_dir.empty()) throw InputError("--emit-only needs --dump-smt");
    if (a.bound == 0 || a.bound > etr::kMaxVertices)
        throw InputError("--bound must be between 1 and " + std::to_string(etr::kMaxVertices));

    auto res = etr::solve_bounded_sat(phi, a.bound, options);
    const auto& st = res.stats;
    json stats{{"candidates", st.candidates}, {"refuted", st.refuted},   {"solver_calls", st.solver_calls},
               {"solver_unsat", st.solver_unsat}, {"unknown", st.unknown}, {"emitted", st.emitted}};
    std::string status = a.emit_only ? "emitted" : etr::to_string(res.status);
    if (res.model && !a.output.empty()) write_text(a.output, chain_to_json(*res.model).dump(2) + "\n");
    if (c.json) {
        json out{{"status", status}, {"bound", a.bound}, {"stats", stats}};
        if (res.model) {
            out["model"] = chain_to_json(*res.model);
            out["entry"] = res.model->id(0);
        }
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << status << "\n";
        if (res.model && a.output.empty()) std::cout << chain_to_json(*res.model).dump(2) << "\n";
        std::cerr << "candidates " << st.candidates << ", refuted " << st.refuted << ", solver calls "
                  << st.solver_calls << ", unknown " << st.unknown << "\n";
    }
    if (a.emit_only) return kOk;
    switch (res.status) {
    case etr::SatStatus::Sat: return kOk;
    case etr::SatStatus::UnsatUpToN: return kFails;
    case etr::SatStatus::Unknown: return kBackend;
    }
    return kBackend;
}

int run_fragment(const Common& c) {
    auto phi = formula_of(c.formulas.front());
    auto f = fragment_classify(phi);
    if (c.json) {
        std::cout << json{{"formula", to_string(phi)}, {"L1", f.in_l1}, {"L2", f.in_l2}, {"L3", f.in_l3}, {"L4", f.in_l4}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << "L1: " << (f.in_l1 ? "yes" : "no") << "\n";
        std::cout << "L2: " << (f.in_l2 ? "yes" : "no") << "\n";
        std::cout << "L3: " << (f.in_l3 ? "yes" : "no") << "\n";
        std::cout << "L4: " << (f.in_l4 ? "yes" : "no") << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantitative PCTL toolkit: model checking, progress loops, compression and bounded satisfiability"};
    app.require_subcommand(1);
    Common c;

    auto* check = app.add_subcommand("check", "Satisfaction set and exact probabilities");
    add_model(check, c);
    auto* check_state = check->add_option("-s,--state", c.state, "State id");
    check->add_option("-f,--formula", c.formulas, "Formula")->required()->expected(1);
    add_json(check, c);

    auto* clo = app.add_subcommand("closure", "Closure, update and theta of a formula set at a state");
    add_model(clo, c);
    add_state(clo, c);
    add_formulas(clo, c);
    add_json(clo, c);

    std::string set_mode = "uc";
    auto* meas = app.add_subcommand("measure", "deg, cf, b and the measure of a formula set");
    add_model(meas, c);
    add_state(meas, c);
    add_formulas(meas, c);
    meas->add_option("--set", set_mode, "Use the formulas as given (raw) or their uc closure (uc)")
        ->check(CLI::IsMember({"uc", "raw"}));
    add_json(meas, c);

    auto* loop = app.add_subcommand("loop", "Progress loops");
    loop->require_subcommand(1);
    std::string loop_file;
    bool raw = false;
    auto* verify = loop->add_subcommand("verify", "Check a loop given as a JSON array of formula arrays");
    add_model(verify, c);
    add_state(verify, c);
    add_formulas(verify, c);
    verify->add_option("--loop", loop_file, "Loop JSON file")->required();
    verify->add_flag("--raw", raw, "Use the formulas as X without closing them");
    add_json(verify, c);

    std::string strategy = "l2";
    GenericSearchOptions generic;
    auto* search = loop->add_subcommand("search", "Find a progress loop");
    add_model(search, c);
    add_state(search, c);
    add_formulas(search, c);
    search->add_option("--strategy", strategy, "l2 or generic")->check(CLI::IsMember({"l2", "generic"}));
    search->add_option("--max-n", generic.max_n, "Largest loop index n for the generic search");
    search->add_option("--budget", generic.node_budget, "Node budget for the generic search");
    search->add_flag("--raw", raw, "Use the formulas as X without closing them");
    add_json(search, c);

    std::string output, trace_file;
    auto* comp = app.add_subcommand("compress", "Build a small model of a formula from a given model");
    add_model(comp, c);
    add_state(comp, c);
    comp->add_option("-f,--formula", c.formulas, "Formula")->required()->expected(1);
    comp->add_option("--strategy", strategy, "l2 or generic")->check(CLI::IsMember({"l2", "generic"}));
    comp->add_option("--max-n", generic.max_n, "Largest loop index n for the generic search");
    comp->add_option("--budget", generic.node_budget, "Node budget for the generic search");
    comp->add_option("-o,--output", output, "Write the model JSON here");
    comp->add_option("--trace", trace_file, "Write the recursion trace JSON here");
    add_json(comp, c);

    SatArgs sat_args;
    auto* sat = app.add_subcommand("sat", "Bounded satisfiability through an external solver");
    sat->add_option("-f,--formula", c.formulas, "Formula")->required()->expected(1);
    sat->add_option("-n,--bound", sat_args.bound, "Largest model size");
    sat->add_option("--solver-cmd", sat_args.solver_cmd, "Solver command, {file} marks the input (default $PCTLSAT_SOLVER_CMD)");
    sat->add_option("--dump-smt", sat_args.dump_dir, "Directory for constraint files");
    sat->add_flag("--emit-only", sat_args.emit_only, "Write constraint files and stop");
    sat->add_flag("--no-probe", sat_args.no_probe, "Skip the uniform-probability probe");
    sat->add_option("--timeout", sat_args.timeout_ms, "Solver timeout per candidate in ms");
    sat->add_option("-o,--output", sat_args.output, "Write the model JSON here");
    add_json(sat, c);

    auto* frag = app.add_subcommand("fragment", "Fragment membership");
    frag->add_option("-f,--formula", c.formulas, "Formula")->required()->expected(1);
    add_json(frag, c);

    auto* dot = app.add_subcommand("export-dot", "Graphviz rendering of a model");
    add_model(dot, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (check->parsed()) return run_check(c, check_state->count() > 0);
        if (clo->parsed()) return run_closure(c);
        if (meas->parsed()) return run_measure(c, set_mode);
        if (verify->parsed()) return run_loop_verify(c, loop_file, raw);
        if (search->parsed()) return run_loop_search(c, strategy, generic, raw);
        if (comp->parsed()) return run_compress(c, strategy, generic, output, trace_file);
        if (sat->parsed()) return run_sat(c, sat_args);
        if (frag->parsed()) return run_fragment(c);
        if (dot->parsed()) {
            std::cout << to_dot(load_model(c.model));
            return kOk;
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NormalizeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const etr::BackendError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kBackend;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
