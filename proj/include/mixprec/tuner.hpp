#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixprec/analysis.hpp"
#include "mixprec/transform.hpp"

namespace mixprec {

enum class CostKind { Simple, Benchmarked, OpCount, Error, Auto };

inline const char* cost_kind_name(CostKind k) {
    switch (k) {
        case CostKind::Simple: return "simple";
        case CostKind::Benchmarked: return "benchmarked";
        case CostKind::OpCount: return "opcount";
        case CostKind::Error: return "error";
        case CostKind::Auto: return "auto";
    }
    return "?";
}

inline std::optional<CostKind> parse_cost_kind(std::string_view s) {
    if (s == "simple") return CostKind::Simple;
    if (s == "benchmarked") return CostKind::Benchmarked;
    if (s == "opcount") return CostKind::OpCount;
    if (s == "error") return CostKind::Error;
    if (s == "auto") return CostKind::Auto;
    return std::nullopt;
}

/// Abstract per-operation costs measured on a reference machine. The table
/// is platform specific; `tune-costs` regenerates it for the host.
struct CostTable {
    std::map<std::pair<std::string, Precision>, Rational> ops;
    std::map<std::pair<Precision, Precision>, Rational> casts;

    Rational op_cost(OpKind op, Precision p) const {
        auto it = ops.find({op_name(op), p});
        if (it == ops.end())
            throw MissingCostEntry(std::string("no cost entry for ") + op_name(op) + " at " +
                                   precision_name(p));
        return it->second;
    }

    Rational cast_cost(Precision from, Precision to) const {
        auto it = casts.find({from, to});
        if (it == casts.end())
            throw MissingCostEntry("no cost entry for cast " + precision_name(from) + " -> " +
                                   precision_name(to));
        return it->second;
    }

    /// Text form: one `op precision cost` or `cast from to cost` per line,
    /// costs as decimal strings; '#' starts a comment.
    static CostTable parse(const std::string& text) {
        CostTable t;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::istringstream ls(line);
            std::string first;
            if (!(ls >> first)) continue;
            auto bad = [&](const std::string& why) {
                throw Error("cost table line " + std::to_string(lineno) + ": " + why);
            };
            if (first == "cast") {
                std::string from, to, cost;
                if (!(ls >> from >> to >> cost)) bad("expected 'cast from to cost'");
                auto pf = parse_precision(from), pt = parse_precision(to);
                auto c = parse_decimal(cost);
                if (!pf || !pt || !c) bad("malformed cast entry");
                if (c->sign() < 0) bad("negative cost");
                t.casts[{*pf, *pt}] = *c;
            } else {
                std::string prec, cost;
                if (!(ls >> prec >> cost)) bad("expected 'op precision cost'");
                auto p = parse_precision(prec);
                auto c = parse_decimal(cost);
                if (!p || !c) bad("malformed op entry");
                if (c->sign() < 0) bad("negative cost");
                t.ops[{first, *p}] = *c;
            }
        }
        return t;
    }

    std::string serialize() const {
        std::string out = "# operation costs (abstract units)\n";
        for (const auto& [key, c] : ops)
            out += key.first + " " + precision_name(key.second) + " " + decimal_string_up(c, 6) + "\n";
        out += "# cast costs\n";
        for (const auto& [key, c] : casts)
            out += "cast " + std::string(precision_name(key.first)) + " " +
                   precision_name(key.second) + " " + decimal_string_up(c, 6) + "\n";
        return out;
    }
};

/// Average per-operation latencies measured once on the reference machine
/// (nanoseconds); see the tune-costs command for regeneration.
inline const CostTable& default_cost_table() {
    static const CostTable table = CostTable::parse(R"(
add f32 0.67
add f64 0.83
add f128 16.4
sub f32 0.67
sub f64 0.67
sub f128 17.7
mul f32 1.35
mul f64 1.35
mul f128 22.4
div f32 3.67
div f64 4.7
div f128 30.1
neg f32 0.68
neg f64 0.33
neg f128 0.33
sqrt f32 4.6
sqrt f64 4.9
sqrt f128 152.2
cast f32 f64 0.33
cast f64 f32 0.34
cast f64 f128 9.03
cast f128 f64 4.03
cast f32 f128 8.71
cast f128 f32 4.37
)");
    return table;
}

struct CostModel {
    CostKind kind = CostKind::Simple;
    const CostTable* table = nullptr; // benchmarked only
};

/// Comparable cost: a lexicographically ordered vector (scalar models use a
/// single component).
struct CostValue {
    std::vector<Rational> parts;

    bool operator==(const CostValue&) const = default;
    bool operator<(const CostValue& o) const {
        return std::lexicographical_compare(parts.begin(), parts.end(), o.parts.begin(),
                                            o.parts.end());
    }

    std::string to_string() const {
        std::string s = "(";
        for (size_t i = 0; i < parts.size(); ++i) {
            if (i) s += ", ";
            s += parts[i].to_string();
        }
        return s + ")";
    }
};

namespace detail {

inline Rational simple_weight(Precision p) {
    switch (p) {
        case Precision::Float32: return 1;
        case Precision::Float64: return 2;
        case Precision::Float128: return 4;
        case Precision::Fixed16: return 1;
        case Precision::Fixed32: return 2;
    }
    return 0;
}

/// Cast edges: operands whose precision differs from the operation's, and
/// assignments into a strictly lower precision. Simple-cost weights a cast
/// by its narrower endpoint.
template <typename OpFn, typename CastFn>
inline void walk_typed_ops(const FunctionSpec& f, const TypeConfig& config,
                           const ErrorAnalysis& ea, OpFn&& on_op, CastFn&& on_cast) {
    std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& e) {
        switch (e->kind) {
            case ExprKind::Var:
            case ExprKind::Const: return;
            case ExprKind::Let: {
                walk(e->a);
                if (config.contains(e->name)) {
                    Precision t = config.at(e->name);
                    Precision v = ea.value_precision.at(e->a.get());
                    if (ladder_rank(t) < ladder_rank(v)) on_cast(v, t);
                }
                walk(e->b);
                return;
            }
            default: {
                Precision pi = ea.op_precision.at(e.get());
                on_op(to_op_kind(e->kind), pi);
                for (const ExprPtr* child : {&e->a, &e->b}) {
                    if (!*child) continue;
                    walk(*child);
                    Precision pc = ea.value_precision.at(child->get());
                    if (pc != pi) on_cast(pc, pi);
                }
                return;
            }
        }
    };
    walk(f.body);
}

} // namespace detail

/// Static cost of a typed program under the chosen model.
inline CostValue cost(const FunctionSpec& f, const TypeConfig& config, const CostModel& model,
                      const ErrorAnalysis& ea) {
    switch (model.kind) {
        case CostKind::Simple: {
            Rational total;
            detail::walk_typed_ops(
                f, config, ea, [&](OpKind, Precision p) { total += detail::simple_weight(p); },
                [&](Precision from, Precision to) {
                    total += min(detail::simple_weight(from), detail::simple_weight(to));
                });
            return {{total}};
        }
        case CostKind::Benchmarked: {
            const CostTable& table = model.table ? *model.table : default_cost_table();
            Rational total;
            detail::walk_typed_ops(
                f, config, ea, [&](OpKind op, Precision p) { total += table.op_cost(op, p); },
                [&](Precision from, Precision to) { total += table.cast_cost(from, to); });
            return {{total}};
        }
        case CostKind::OpCount: {
            // counts per precision from the highest rung down; casts ignored
            std::map<int, Rational> counts;
            detail::walk_typed_ops(
                f, config, ea, [&](OpKind, Precision p) { counts[ladder_rank(p)] += 1; },
                [](Precision, Precision) {});
            bool fl = config.is_float_config();
            CostValue v;
            for (int rank = fl ? 2 : 1; rank >= 0; --rank) v.parts.push_back(counts[rank]);
            return v;
        }
        case CostKind::Error:
            // smaller roundoff means costlier (bigger data types)
            return {{-ea.bound}};
        case CostKind::Auto: break;
    }
    throw Error("cost model 'auto' must be resolved per tuning pass");
}

inline CostValue cost(const FunctionSpec& f, const RangeMap& ranges, const TypeConfig& config,
                      const CostModel& model) {
    ErrorAnalysis ea = roundoff_error(f, ranges, config);
    return cost(f, config, model, ea);
}

struct TunerOptions {
    CostKind cost_override = CostKind::Auto;
    const CostTable* benchmarked_table = nullptr; // null: built-in default
};

/// Two-pronged policy: the naive weights whenever quad precision may appear
/// in the configurations under comparison, the benchmarked table once it
/// cannot, and always the naive weights on the fixed ladder.
inline CostModel select_cost_model(const PrecisionLadder& ladder, Precision high,
                                   const TypeConfig& current, const TunerOptions& opts = {}) {
    if (opts.cost_override != CostKind::Auto)
        return {opts.cost_override, opts.benchmarked_table};
    if (!ladder.is_float_ladder()) return {CostKind::Simple, nullptr};
    bool quad_present = high == Precision::Float128;
    for (const auto& [v, p] : current.assignment)
        if (p == Precision::Float128) quad_present = true;
    if (quad_present) return {CostKind::Simple, nullptr};
    return {CostKind::Benchmarked, opts.benchmarked_table};
}

struct PassStats {
    Precision high;
    Precision low;
    size_t tau_size = 0;
    size_t evaluations = 0;
    CostKind cost_kind = CostKind::Simple;
};

struct DeltaDebugResult {
    TypeConfig config;
    Rational final_bound;
    ErrorAnalysis final_analysis;
    std::vector<TypeConfig> visited_valid; // bound-satisfying configs seen
    std::vector<PassStats> passes;
    size_t error_evaluations = 0;
};

/// Delta-debugging over the precision ladder: per adjacent (high, low) pair,
/// recursively try to lower the variables currently at `high`, halving on
/// failure; among every bound-satisfying configuration the pass visited pick
/// the cheapest. Variables left at `high` are frozen for later passes.
inline DeltaDebugResult delta_debug(const FunctionSpec& f, const RangeMap& ranges,
                                    const PrecisionLadder& ladder,
                                    const TunerOptions& opts = {}) {
    if (!f.target_error) throw Error("function '" + f.name + "' has no target error to tune for");
    ladder.validate();
    std::vector<std::string> tunables = tunable_variables(f);
    DeltaDebugResult out;

    TypeConfig config = TypeConfig::uniform(tunables, ladder.top());
    auto evaluate = [&](const TypeConfig& cand) -> std::optional<ErrorAnalysis> {
        ++out.error_evaluations;
        try {
            ErrorAnalysis ea = roundoff_error(f, ranges, cand);
            if (ea.bound <= *f.target_error) return ea;
        } catch (const Error&) {
            // range or special-value failures are simply not valid candidates
        }
        return std::nullopt;
    };

    std::optional<ErrorAnalysis> top = evaluate(config);
    if (!top)
        throw NoValidConfig("function '" + f.name +
                            "': even the highest ladder precision misses the target error");
    out.visited_valid.push_back(config);

    struct Candidate {
        TypeConfig config;
        ErrorAnalysis analysis;
    };

    for (size_t ri = ladder.rungs.size(); ri-- > 1;) {
        Precision high = ladder.rungs[ri];
        Precision low = ladder.rungs[ri - 1];
        std::vector<std::string> tau;
        for (const auto& v : tunables)
            if (config.at(v) == high) tau.push_back(v);
        CostModel model = select_cost_model(ladder, high, config, opts);
        PassStats stats{high, low, tau.size(), 0, model.kind};
        if (tau.empty()) {
            out.passes.push_back(stats);
            continue;
        }

        std::vector<Candidate> candidates;
        candidates.push_back({config, std::move(*top)});

        std::function<void(const std::vector<std::string>&)> recurse =
            [&](const std::vector<std::string>& vars) {
                TypeConfig trial = config;
                for (const auto& v : vars) trial.assignment[v] = low;
                ++stats.evaluations;
                std::optional<ErrorAnalysis> ea = evaluate(trial);
                if (ea) {
                    config = trial;
                    candidates.push_back({trial, std::move(*ea)});
                    out.visited_valid.push_back(trial);
                    return;
                }
                if (vars.size() <= 1) return; // stays at high
                size_t half = (vars.size() + 1) / 2;
                std::vector<std::string> left(vars.begin(), vars.begin() + half);
                std::vector<std::string> right(vars.begin() + half, vars.end());
                recurse(left);
                recurse(right);
            };
        recurse(tau);

        // pick the cheapest valid configuration this pass saw; ties prefer
        // more lowered variables, then earlier variables at lower precision
        auto lowered_count = [&](const TypeConfig& c) {
            int n = 0;
            for (const auto& v : tau)
                if (ladder_rank(c.at(v)) < ladder_rank(high)) ++n;
            return n;
        };
        auto rank_seq = [&](const TypeConfig& c) {
            std::vector<int> seq;
            seq.reserve(tunables.size());
            for (const auto& v : tunables) seq.push_back(ladder_rank(c.at(v)));
            return seq;
        };
        size_t best = 0;
        CostValue best_cost = cost(f, candidates[0].config, model, candidates[0].analysis);
        for (size_t i = 1; i < candidates.size(); ++i) {
            CostValue ci = cost(f, candidates[i].config, model, candidates[i].analysis);
            bool better = ci < best_cost;
            if (!better && ci == best_cost) {
                int li = lowered_count(candidates[i].config), lb = lowered_count(candidates[best].config);
                if (li > lb) better = true;
                else if (li == lb) better = rank_seq(candidates[i].config) < rank_seq(candidates[best].config);
            }
            if (better) {
                best = i;
                best_cost = ci;
            }
        }
        config = candidates[best].config;
        top = std::move(candidates[best].analysis);
        out.passes.push_back(stats);
    }

    // re-verify the final configuration before anything is generated from it
    ErrorAnalysis final_ea = roundoff_error(f, ranges, config);
    if (final_ea.bound > *f.target_error)
        throw Error("internal: tuned configuration fails re-verification");
    out.config = std::move(config);
    out.final_bound = final_ea.bound;
    out.final_analysis = std::move(final_ea);
    return out;
}

} // namespace mixprec
