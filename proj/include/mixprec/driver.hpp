#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixprec/codegen.hpp"
#include "mixprec/rewrite.hpp"
#include "mixprec/simulate.hpp"
#include "mixprec/transform.hpp"
#include "mixprec/tuner.hpp"

namespace mixprec {

enum class CodegenChoice { C, Scala, Both, None };

inline std::optional<CodegenChoice> parse_codegen_choice(std::string_view s) {
    if (s == "c") return CodegenChoice::C;
    if (s == "scala") return CodegenChoice::Scala;
    if (s == "both") return CodegenChoice::Both;
    if (s == "none") return CodegenChoice::None;
    return std::nullopt;
}

struct DriverOptions {
    bool no_rewrite = false;
    bool coarse = false;
    PrecisionLadder ladder = PrecisionLadder::parse("f32,f64,f128");
    CostKind cost = CostKind::Auto;
    std::optional<CostTable> cost_table; // overrides the built-in benchmarked table
    CodegenChoice codegen = CodegenChoice::C;
    std::uint64_t rewrite_seed = 4242;
    RangeMethod range_method = RangeMethod::Interval;
    bool gen_bounds = false;
    std::optional<Precision> uniform;
};

enum class FunctionStatus { Ok, Skipped, NoValidConfig, AnalysisError };

/// Everything the pipeline produced for one function; the report is printed
/// from this and the acceptance suite consumes it directly.
struct FunctionOutcome {
    std::string name;
    FunctionStatus status = FunctionStatus::Ok;
    std::string message;

    FunctionSpec parsed;    // as written
    FunctionSpec prepared;  // after rewrite + transforms (what was tuned)
    int source_ops = 0;
    int input_vars = 0;

    bool rewrote = false;
    Rational bound_before_rewrite; // uniform f64
    Rational bound_after_rewrite;  // uniform f64
    std::string rewritten_source;

    TypeConfig config;
    Rational final_bound;
    ErrorAnalysis analysis;
    std::map<std::string, int> op_counts_by_precision; // precision name -> ops
    CostKind cost_kind = CostKind::Simple;
    CostValue cost_value;
    std::vector<std::string> artifact_names;

    // phase wall times in microseconds; console-only, never in the report
    std::map<std::string, long> phase_us;
};

struct RunResult {
    int exit_code = 0;
    std::vector<FunctionOutcome> functions;
    std::string report_text;
    std::string sidecar_text;
    std::string console;
    std::map<std::string, std::string> artifacts; // file name -> content
};

/// Derives the nine benchmark variants of a target-less function: the
/// rounded-up uniform float32/float64 bounds, their 0.5/0.1/0.01 multiples,
/// and the rounded-up quad bound.
inline std::vector<FunctionSpec> gen_bounds(const FunctionSpec& f) {
    if (f.target_error)
        throw Error("gen-bounds expects a function without an error target: " + f.name);
    RangeMap rm = compute_ranges(f, RangeMethod::Interval);
    std::vector<std::string> vars = tunable_variables(f);
    Rational eF = roundoff_error(f, rm, TypeConfig::uniform(vars, Precision::Float32)).bound;
    Rational eD = roundoff_error(f, rm, TypeConfig::uniform(vars, Precision::Float64)).bound;
    Rational eQ = roundoff_error(f, rm, TypeConfig::uniform(vars, Precision::Float128)).bound;

    auto variant = [&](const std::string& suffix, Rational target) {
        FunctionSpec v = f;
        v.name = f.name + "_" + suffix;
        v.target_error = std::move(target);
        return v;
    };
    Rational F = round_up_3sig(eF), D = round_up_3sig(eD), Q = round_up_3sig(eQ);
    Rational half(BigInt(1), BigInt(2)), tenth(BigInt(1), BigInt(10)),
        hundredth(BigInt(1), BigInt(100));
    return {
        variant("F", F),          variant("F05", F * half),  variant("F01", F * tenth),
        variant("F001", F * hundredth), variant("D", D),     variant("D05", D * half),
        variant("D01", D * tenth), variant("D001", D * hundredth), variant("Q", Q),
    };
}

namespace detail {

class PhaseTimer {
public:
    explicit PhaseTimer(std::map<std::string, long>& sink) : sink_(sink) {}
    template <typename Fn>
    auto time(const std::string& name, Fn&& fn) {
        auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            sink_[name] += elapsed_us(t0);
        } else {
            auto r = fn();
            sink_[name] += elapsed_us(t0);
            return r;
        }
    }

private:
    static long elapsed_us(std::chrono::steady_clock::time_point t0) {
        return static_cast<long>(std::chrono::duration_cast<std::chrono::microseconds>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count());
    }
    std::map<std::string, long>& sink_;
};

inline std::string percent_string(const Rational& from, const Rational& to) {
    if (from.is_zero()) return "0";
    Rational pct = (from - to) / from * 100;
    if (pct.sign() < 0) return "-" + decimal_string_up(-pct, 4);
    return decimal_string_up(pct, 4);
}

inline void codegen_outputs(const FunctionSpec& tuned, const DriverOptions& opts,
                            const RangeMap& ranges, RunResult& out, FunctionOutcome& rec) {
    if (opts.codegen == CodegenChoice::None) return;
    bool is_float = opts.ladder.is_float_ladder();
    auto add = [&](CodegenTarget tgt) {
        std::string name = output_filename(tuned.name, opts.ladder, tgt);
        std::string code = is_float ? emit_float(tuned, rec.config, tgt)
                                    : emit_fixed(tuned, rec.config, ranges, tgt);
        out.artifacts[name] = code;
        rec.artifact_names.push_back(name);
    };
    if (is_float) {
        if (opts.codegen == CodegenChoice::C || opts.codegen == CodegenChoice::Both)
            add(CodegenTarget::C);
        if (opts.codegen == CodegenChoice::Scala || opts.codegen == CodegenChoice::Both)
            add(CodegenTarget::Scala);
    } else {
        // fixed-point output exists for C only
        add(CodegenTarget::C);
    }
}

} // namespace detail

/// Runs the full pipeline on one parsed function: rewrite, normalize, range
/// analysis, delta-debugging, re-verification, code generation.
inline FunctionOutcome run_function(const FunctionSpec& f, const DriverOptions& opts,
                                    RunResult& out) {
    FunctionOutcome rec;
    rec.name = f.name;
    rec.parsed = f;
    rec.source_ops = count_ops(f.body);
    rec.input_vars = static_cast<int>(f.params.size());
    detail::PhaseTimer timer(rec.phase_us);

    try {
        FunctionSpec work = f;

        // step 1: rewriting for accuracy at unchanged operation count
        if (!opts.no_rewrite) {
            SearchParams params;
            params.seed = opts.rewrite_seed;
            GeneticResult gr = timer.time("rewrite", [&] { return genetic_search(work, params); });
            rec.rewrote = true;
            if (gr.original_fitness.finite) rec.bound_before_rewrite = gr.original_fitness.value;
            if (gr.best_fitness.finite) rec.bound_after_rewrite = gr.best_fitness.value;
            rec.rewritten_source = to_source(gr.best);
            work.body = gr.best;
        }

        // step 2: every constant and operation gets its own variable
        if (!opts.coarse) {
            work = timer.time("transform", [&] { return to_three_address(extract_constants(work)); });
        }
        rec.prepared = work;

        // step 3: real ranges, computed once
        RangeMap ranges = timer.time("ranges", [&] { return compute_ranges(work, opts.range_method); });

        std::vector<std::string> tunables = tunable_variables(work);

        if (opts.uniform) {
            // degenerate pipeline: report the uniform bound, no tuning
            rec.config = TypeConfig::uniform(tunables, *opts.uniform);
            rec.analysis = timer.time("analysis", [&] { return roundoff_error(work, ranges, rec.config); });
            rec.final_bound = rec.analysis.bound;
            rec.cost_kind = opts.cost == CostKind::Auto ? CostKind::Simple : opts.cost;
            CostModel cm{rec.cost_kind, opts.cost_table ? &*opts.cost_table : nullptr};
            rec.cost_value = cost(work, rec.config, cm, rec.analysis);
        } else if (work.target_error) {
            // step 4: delta-debugging over the ladder
            TunerOptions topts;
            topts.cost_override = opts.cost;
            if (opts.cost_table) topts.benchmarked_table = &*opts.cost_table;
            DeltaDebugResult dd =
                timer.time("tuning", [&] { return delta_debug(work, ranges, opts.ladder, topts); });
            rec.config = dd.config;
            rec.final_bound = dd.final_bound;
            rec.analysis = dd.final_analysis;
            rec.cost_kind = dd.passes.empty() ? CostKind::Simple : dd.passes.back().cost_kind;
            CostModel cm{rec.cost_kind, opts.cost_table ? &*opts.cost_table : nullptr};
            rec.cost_value = cost(work, rec.config, cm, rec.analysis);
        } else {
            // no target: nothing to tune, report the ladder-top bound
            rec.config = TypeConfig::uniform(tunables, opts.ladder.top());
            rec.analysis = timer.time("analysis", [&] { return roundoff_error(work, ranges, rec.config); });
            rec.final_bound = rec.analysis.bound;
            rec.status = FunctionStatus::Skipped;
            rec.message = "no error target: tuning skipped, bound reported at " +
                          precision_name(opts.ladder.top());
            return rec;
        }

        // per-precision operation counts
        for (const auto& [node, p] : rec.analysis.op_precision)
            rec.op_counts_by_precision[precision_name(p)]++;

        // step 5: code generation with all casts and shifts
        timer.time("codegen", [&] { detail::codegen_outputs(work, opts, ranges, out, rec); });
    } catch (const NoValidConfig& e) {
        rec.status = FunctionStatus::NoValidConfig;
        rec.message = e.what();
    } catch (const Error& e) {
        rec.status = FunctionStatus::AnalysisError;
        rec.message = e.what();
    }
    return rec;
}

namespace detail {

inline void render_reports(const std::vector<FunctionOutcome>& fns, const DriverOptions& opts,
                           RunResult& out) {
    std::ostringstream rep, kv, console;
    for (const FunctionOutcome& fo : fns) {
        rep << "== " << fo.name << " ==\n";
        kv << "function=" << fo.name << "\n";
        const char* status = fo.status == FunctionStatus::Ok            ? "ok"
                             : fo.status == FunctionStatus::Skipped     ? "skipped"
                             : fo.status == FunctionStatus::NoValidConfig ? "no-valid-config"
                                                                          : "analysis-error";
        rep << "status: " << status << "\n";
        kv << "status=" << status << "\n";
        if (!fo.message.empty()) {
            rep << "note: " << fo.message << "\n";
            kv << "note=" << fo.message << "\n";
        }
        rep << "source operations: " << fo.source_ops << ", input variables: " << fo.input_vars
            << "\n";
        kv << "ops=" << fo.source_ops << "\nvars=" << fo.input_vars << "\n";
        if (fo.parsed.target_error) {
            rep << "target error: " << exact_decimal_string(*fo.parsed.target_error) << "\n";
            kv << "target=" << exact_decimal_string(*fo.parsed.target_error) << "\n";
        }
        rep << "ladder: " << opts.ladder.to_string()
            << ", range method: " << range_method_name(opts.range_method) << "\n";
        kv << "ladder=" << opts.ladder.to_string() << "\n";
        kv << "range_method=" << range_method_name(opts.range_method) << "\n";
        if (fo.rewrote) {
            rep << "rewriting (seed " << opts.rewrite_seed << "):\n";
            rep << "  uniform-f64 bound before: " << decimal_string_up(fo.bound_before_rewrite, 6)
                << "\n";
            rep << "  uniform-f64 bound after:  " << decimal_string_up(fo.bound_after_rewrite, 6)
                << "\n";
            rep << "  improvement: " << percent_string(fo.bound_before_rewrite, fo.bound_after_rewrite)
                << "%\n";
            rep << "  rewritten: " << fo.rewritten_source << "\n";
            kv << "seed=" << opts.rewrite_seed << "\n";
            kv << "bound_before_rewrite=" << fo.bound_before_rewrite.to_string() << "\n";
            kv << "bound_after_rewrite=" << fo.bound_after_rewrite.to_string() << "\n";
            kv << "rewritten=" << fo.rewritten_source << "\n";
        }
        bool has_config = !fo.config.assignment.empty() &&
                          (fo.status == FunctionStatus::Ok || fo.status == FunctionStatus::Skipped);
        if (has_config) {
            std::vector<std::string> tunables = tunable_variables(fo.prepared);
            rep << "configuration:\n";
            std::string cfgkv;
            for (const std::string& v : tunables) {
                rep << "  " << v << " -> " << precision_name(fo.config.at(v)) << "\n";
                if (!cfgkv.empty()) cfgkv += ",";
                cfgkv += v + ":" + precision_name(fo.config.at(v));
            }
            kv << "config=" << cfgkv << "\n";
            rep << "certified error bound: " << decimal_string_up(fo.final_bound, 6);
            kv << "bound_final=" << fo.final_bound.to_string() << "\n";
            if (fo.parsed.target_error) {
                rep << (fo.final_bound <= *fo.parsed.target_error ? " (within target)"
                                                                  : " (exceeds target)");
            }
            rep << "\n";
        }
        if (fo.status == FunctionStatus::Ok) {
            // the (a, b, c) triple: operations per precision, lowest first
            std::string triple;
            int total = 0;
            for (const Precision p : opts.ladder.rungs) {
                auto it = fo.op_counts_by_precision.find(precision_name(p));
                int n = it == fo.op_counts_by_precision.end() ? 0 : it->second;
                total += n;
                if (!triple.empty()) triple += ", ";
                triple += std::to_string(n);
            }
            rep << "operations per precision (" << opts.ladder.to_string() << "): (" << triple
                << ")\n";
            kv << "opcounts=" << triple << "\n";
            kv << "opcount_total=" << total << "\n";
            rep << "cost (" << cost_kind_name(fo.cost_kind) << "): " << fo.cost_value.to_string()
                << "\n";
            kv << "cost_model=" << cost_kind_name(fo.cost_kind) << "\n";
            kv << "cost=" << fo.cost_value.to_string() << "\n";
        }
        for (const std::string& a : fo.artifact_names) {
            rep << "generated: " << a << "\n";
            kv << "generated=" << a << "\n";
        }
        // timings are informational only and stay off the reproducible report
        console << fo.name << ":";
        for (const auto& [phase, us] : fo.phase_us)
            console << " " << phase << " " << us / 1000 << "ms";
        console << "\n";
        rep << "\n";
        kv << "\n";
    }
    out.report_text = rep.str();
    out.sidecar_text = kv.str();
    out.console = console.str();
}

} // namespace detail

/// Parses and processes a whole source text; each function is optimized
/// independently. Exit codes: 1 parse error, 2 no valid configuration,
/// 3 analysis error.
inline RunResult run_source(const std::string& source, const DriverOptions& opts) {
    RunResult out;
    std::vector<FunctionSpec> fns;
    try {
        fns = parse_functions(source);
    } catch (const ParseError& e) {
        out.exit_code = 1;
        out.report_text = std::string("parse error: ") + e.what() + "\n";
        return out;
    }

    if (opts.gen_bounds) {
        for (const FunctionSpec& f : fns) {
            try {
                FunctionSpec base = f;
                base.target_error = std::nullopt; // derive fresh bounds either way
                std::vector<FunctionSpec> variants = gen_bounds(base);
                std::string text;
                for (const FunctionSpec& v : variants) text += print_function(v) + "\n";
                out.artifacts[f.name + "_bounds.daisy"] = text;
                FunctionOutcome rec;
                rec.name = f.name;
                rec.parsed = f;
                rec.prepared = f;
                rec.source_ops = count_ops(f.body);
                rec.input_vars = static_cast<int>(f.params.size());
                rec.status = FunctionStatus::Skipped;
                rec.message = "generated 9 error-bound variants";
                rec.artifact_names.push_back(f.name + "_bounds.daisy");
                out.functions.push_back(std::move(rec));
            } catch (const Error& e) {
                FunctionOutcome rec;
                rec.name = f.name;
                rec.parsed = f;
                rec.prepared = f;
                rec.status = FunctionStatus::AnalysisError;
                rec.message = e.what();
                out.functions.push_back(std::move(rec));
                out.exit_code = 3;
            }
        }
        detail::render_reports(out.functions, opts, out);
        // artifact names into the report for gen-bounds runs
        return out;
    }

    for (const FunctionSpec& f : fns) out.functions.push_back(run_function(f, opts, out));
    for (const FunctionOutcome& fo : out.functions) {
        if (fo.status == FunctionStatus::NoValidConfig && out.exit_code != 2) out.exit_code = 2;
        if (fo.status == FunctionStatus::AnalysisError && out.exit_code == 0) out.exit_code = 3;
    }
    detail::render_reports(out.functions, opts, out);
    return out;
}

} // namespace mixprec
