// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Every tolerance is fixed here, in code; nothing defers to calibration.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "mixprec/driver.hpp"
#include "support.hpp"

using namespace mixprec;
using testsupport::random_dyadic;
using testsupport::random_expr;
using testsupport::Rng;

namespace {

namespace fs = std::filesystem;

struct Criterion {
    int number;
    std::string description;
    bool pass;
    std::string detail;
};

std::vector<Criterion> results;

void report(int number, const std::string& description, bool pass, const std::string& detail) {
    results.push_back({number, description, pass, detail});
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << number << ": " << description
              << (detail.empty() ? "" : " — " + detail) << std::endl;
}

std::vector<FunctionSpec> load_corpus() {
    std::vector<FunctionSpec> fns;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(MIXPREC_BENCHMARK_DIR))
        if (entry.path().extension() == ".daisy") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        for (FunctionSpec& f : parse_functions(ss.str())) fns.push_back(std::move(f));
    }
    return fns;
}

bool has_sqrt(const ExprPtr& e) {
    bool found = false;
    for_each_node(e, [&](const ExprPtr& n) { found |= n->kind == ExprKind::Sqrt; });
    return found;
}

/// Unreduced exact fraction: the oracle evaluator skips canonicalization
/// entirely (denominators stay products of input denominators, a few hundred
/// bits at most) and compares against the bound by cross-multiplication.
struct Frac {
    BigInt num;
    BigInt den; // > 0

    static Frac of(const Rational& r) { return {r.numerator(), r.denominator()}; }
    Frac operator+(const Frac& o) const { return {num * o.den + o.num * den, den * o.den}; }
    Frac operator-(const Frac& o) const { return {num * o.den - o.num * den, den * o.den}; }
    Frac operator*(const Frac& o) const { return {num * o.num, den * o.den}; }
    Frac operator/(const Frac& o) const {
        if (o.num == 0) throw Error("oracle division by zero");
        if (o.num < 0) return {-num * o.den, den * -o.num};
        return {num * o.den, den * o.num};
    }
    Frac operator-() const { return {-num, den}; }
};

/// Exact point evaluation without canonicalization; sqrt-free only.
Frac eval_point(const ExprPtr& e, std::map<std::string, Frac>& env) {
    switch (e->kind) {
        case ExprKind::Var: return env.at(e->name);
        case ExprKind::Const: return Frac::of(e->value);
        case ExprKind::Neg: return -eval_point(e->a, env);
        case ExprKind::Sqrt: throw Error("eval_point on sqrt");
        case ExprKind::Let: {
            env[e->name] = eval_point(e->a, env);
            return eval_point(e->b, env);
        }
        default: {
            Frac a = eval_point(e->a, env);
            Frac b = eval_point(e->b, env);
            switch (e->kind) {
                case ExprKind::Add: return a + b;
                case ExprKind::Sub: return a - b;
                case ExprKind::Mul: return a * b;
                default: return a / b;
            }
        }
    }
}

/// |fin - exact| <= bound, exactly, with exact given as an unreduced
/// fraction: |fin.n * d - n * fin.d| * B.d <= B.n * fin.d * d.
bool within_bound(const Rational& fin, const Frac& exact, const Rational& bound) {
    BigInt lhs = boost::multiprecision::abs(fin.numerator() * exact.den -
                                            exact.num * fin.denominator());
    return lhs * bound.denominator() <= bound.numerator() * fin.denominator() * exact.den;
}

/// True iff the simulated run stays within the certified bound.
bool sample_within(const FunctionSpec& f, const TypeConfig& cfg, const ErrorAnalysis* ea,
                   const std::map<std::string, Rational>& pt, bool sqrt_free,
                   const Rational& bound) {
    Rational fin = simulate(f, cfg, pt, ea);
    if (sqrt_free) {
        std::map<std::string, Frac> env;
        for (const auto& [k, v] : pt) env.emplace(k, Frac::of(v));
        return within_bound(fin, eval_point(f.body, env), bound);
    }
    Interval ex = eval_exact(f, pt);
    Rational err = max(abs(fin - ex.lo), abs(fin - ex.hi));
    return err <= bound;
}

/// Per-function sampler precomputing the one-gcd point construction
/// lo + width * k / 2^bits for every parameter.
struct PointSampler {
    struct Param {
        std::string name;
        BigInt base_num;  // lo.num * w.den << bits
        BigInt step_num;  // w.num * lo.den
        BigInt den;       // lo.den * w.den << bits
    };
    std::vector<Param> params;
    int bits;

    PointSampler(const FunctionSpec& f, int bits = 16) : bits(bits) {
        for (const auto& p : f.params) {
            const Interval& iv = f.input_ranges.at(p);
            Rational w = iv.hi - iv.lo;
            params.push_back({p,
                              (iv.lo.numerator() * w.denominator()) << static_cast<unsigned>(bits),
                              w.numerator() * iv.lo.denominator(),
                              (iv.lo.denominator() * w.denominator()) << static_cast<unsigned>(bits)});
        }
    }

    std::map<std::string, Rational> sample(Rng& rng) const {
        std::map<std::string, Rational> pt;
        for (const Param& p : params) {
            std::uint64_t k = rng() & ((std::uint64_t(1) << bits) - 1);
            pt.emplace(p.name, Rational(p.base_num + p.step_num * k, p.den));
        }
        return pt;
    }
};

// --- criterion 1 -----------------------------------------------------------

void criterion1(const std::vector<FunctionSpec>& corpus) {
    auto start = std::chrono::steady_clock::now();
    const int samples = 100000;
    long violations = 0;
    long configs = 0;
    std::string first_fail;

    PrecisionLadder ladder = PrecisionLadder::parse("f32,f64,f128");
    for (const FunctionSpec& original : corpus) {
        FunctionSpec base = original;
        base.target_error = std::nullopt;
        std::vector<FunctionSpec> variants = gen_bounds(base);

        SearchParams params; // default published settings, seed 4242
        GeneticResult gr = genetic_search(base, params);

        for (const FunctionSpec& variant : variants) {
            FunctionSpec work = variant;
            work.body = gr.best;
            work = to_three_address(extract_constants(work));
            work.target_error = variant.target_error;
            RangeMap rm = compute_ranges(work);
            DeltaDebugResult dd;
            try {
                dd = delta_debug(work, rm, ladder);
            } catch (const Error& e) {
                ++violations;
                if (first_fail.empty()) first_fail = variant.name + ": " + e.what();
                continue;
            }
            ++configs;
            bool sqrt_free = !has_sqrt(work.body);
            PointSampler sampler(work);
            Rng rng(std::hash<std::string>{}(variant.name) & 0xffffffff);
            for (int i = 0; i < samples; ++i) {
                auto pt = sampler.sample(rng);
                if (!sample_within(work, dd.config, nullptr, pt, sqrt_free, dd.final_bound)) {
                    ++violations;
                    if (first_fail.empty())
                        first_fail = variant.name + " exceeded bound at sample " + std::to_string(i);
                    break;
                }
            }
        }
    }
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() -
                                                                 start)
                    .count();
    bool in_budget = secs < 600;
    std::ostringstream detail;
    detail << configs << " tuned configurations x " << samples << " samples, " << violations
           << " violations, " << secs << "s";
    if (!first_fail.empty()) detail << " (" << first_fail << ")";
    report(1, "soundness of every tuned configuration against the simulator",
           violations == 0 && in_budget, detail.str());
}

// --- criterion 2 -----------------------------------------------------------

void criterion2(const std::vector<FunctionSpec>& corpus) {
    const FunctionSpec* rb1 = nullptr;
    for (const FunctionSpec& f : corpus)
        if (f.name == "rigidBody1") rb1 = &f;
    if (!rb1 || !rb1->target_error) {
        report(2, "rigidBody1 reproduction", false, "benchmark missing");
        return;
    }
    bool a = count_ops(rb1->body) == 7 && rb1->params.size() == 3;

    GeneticResult gr = genetic_search(*rb1, SearchParams{});
    bool ops_ok = count_ops(gr.best) <= 7;
    bool not_worse = !(gr.original_fitness < gr.best_fitness);
    Rational improvement =
        (gr.original_fitness.value - gr.best_fitness.value) / gr.original_fitness.value * 100;
    bool window = improvement >= Rational(25) && improvement <= Rational(36);
    bool b = ops_ok && not_worse && window;

    auto t0 = std::chrono::steady_clock::now();
    FunctionSpec work = *rb1;
    work.body = gr.best;
    work = to_three_address(extract_constants(work));
    RangeMap rm = compute_ranges(work);
    bool c = false;
    std::string cmsg;
    try {
        DeltaDebugResult dd = delta_debug(work, rm, PrecisionLadder::parse("f32,f64,f128"));
        bool has64 = false, has128 = false;
        for (const auto& [n, p] : dd.final_analysis.op_precision) {
            has64 |= p == Precision::Float64;
            has128 |= p == Precision::Float128;
        }
        bool bound_ok = check_bound(work, dd.config, rm);
        long secs = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        c = has64 && has128 && bound_ok && secs < 30;
        cmsg = "mixed f64/f128=" + std::string(has64 && has128 ? "yes" : "no") + ", " +
               std::to_string(secs) + "s";
    } catch (const Error& e) {
        cmsg = e.what();
    }

    std::ostringstream detail;
    detail << "(a) ops/vars " << (a ? "ok" : "WRONG") << "; (b) improvement "
           << decimal_string_up(improvement, 4) << "% in [25,36] " << (b ? "ok" : "WRONG")
           << "; (c) " << cmsg;
    report(2, "rigidBody1 reproduction (op count, rewriting window, mixed tuning)", a && b && c,
           detail.str());
}

// --- criterion 3 -----------------------------------------------------------

void criterion3() {
    Rng rng(777);
    std::vector<std::string> vars{"x", "y"};
    PrecisionLadder ladder = PrecisionLadder::parse("f32,f64");
    int instances = 0, failures = 0;
    std::string first_fail;
    while (instances < 60) {
        ExprPtr body = random_expr(rng, 2, vars, false, false);
        FunctionSpec f;
        f.name = "inst" + std::to_string(instances);
        f.params = vars;
        f.input_ranges.emplace("x", Interval(Rational(-3), Rational(5)));
        f.input_ranges.emplace("y", Interval(Rational(BigInt(1), BigInt(2)), Rational(2)));
        f.body = body;
        FunctionSpec t = to_three_address(extract_constants(f));
        std::vector<std::string> tunables = tunable_variables(t);
        if (tunables.size() > 5 || count_ops(t.body) == 0) continue;
        RangeMap rm;
        try {
            rm = compute_ranges(t);
        } catch (const Error&) {
            continue;
        }
        TypeConfig all_hi = TypeConfig::uniform(tunables, Precision::Float64);
        TypeConfig all_lo = TypeConfig::uniform(tunables, Precision::Float32);
        Rational b_hi = roundoff_error(t, rm, all_hi).bound;
        Rational b_lo = roundoff_error(t, rm, all_lo).bound;
        if (!(b_hi < b_lo)) continue;
        ++instances;

        int k = 1 + instances % 4;
        t.target_error = b_hi + (b_lo - b_hi) * Rational(k) / 4;
        DeltaDebugResult res;
        try {
            res = delta_debug(t, rm, ladder);
        } catch (const Error& e) {
            ++failures;
            if (first_fail.empty()) first_fail = e.what();
            continue;
        }
        CostModel model = select_cost_model(ladder, Precision::Float64, all_hi);
        bool ok = check_bound(t, res.config, rm);
        CostValue got = cost(t, rm, res.config, model);
        // cheapest valid uniform
        for (const TypeConfig& uni : {all_hi, all_lo}) {
            if (check_bound(t, uni, rm) && cost(t, rm, uni, model) < got) ok = false;
        }
        // minimum over the visited valid set, verified exhaustively valid
        size_t n = tunables.size();
        for (const TypeConfig& v : res.visited_valid) {
            if (cost(t, rm, v, model) < got) ok = false;
        }
        // double-check validity of every visited config by enumeration
        for (size_t mask = 0; mask < (size_t(1) << n); ++mask) {
            TypeConfig c;
            for (size_t i = 0; i < n; ++i)
                c.assignment[tunables[i]] =
                    (mask >> i) & 1 ? Precision::Float64 : Precision::Float32;
            bool visited = false;
            for (const TypeConfig& v : res.visited_valid) visited |= v == c;
            if (visited && !check_bound(t, c, rm)) ok = false;
        }
        if (!ok) {
            ++failures;
            if (first_fail.empty()) first_fail = "instance " + std::to_string(instances);
        }
    }
    report(3, "delta-debugging matches the exhaustive oracle on small instances", failures == 0,
           std::to_string(instances) + " instances, " + std::to_string(failures) + " failures" +
               (first_fail.empty() ? "" : " (" + first_fail + ")"));
}

// --- criterion 4 -----------------------------------------------------------

bool equivalent_at_points(const ExprPtr& a, const ExprPtr& b,
                          const std::map<std::string, Interval>& inputs, Rng& rng, int points) {
    for (int i = 0; i < points; ++i) {
        std::map<std::string, Interval> env1, env2;
        for (const auto& [name, iv] : inputs) {
            Rational v = random_dyadic(rng, iv);
            env1.emplace(name, Interval(v));
            env2.emplace(name, Interval(v));
        }
        Interval va, vb;
        try {
            va = eval_exact(a, env1);
            vb = eval_exact(b, env2);
        } catch (const DivisionByZeroRange&) {
            continue; // excluded points
        } catch (const NegativeSqrtRange&) {
            continue;
        }
        if (!iintersect(va, vb)) return false;
    }
    return true;
}

void criterion4() {
    Rng rng(4242);
    std::map<std::string, Interval> inputs{
        {"x", Interval(Rational(BigInt(1), BigInt(4)), Rational(2))},
        {"y", Interval(Rational(BigInt(1), BigInt(4)), Rational(2))}};
    std::vector<std::string> vars{"x", "y"};
    RangeQuery range = [&](const ExprPtr& sub) {
        FunctionSpec probe;
        probe.body = sub;
        for (const auto& [name, iv] : inputs) {
            probe.params.push_back(name);
            probe.input_ranges.emplace(name, iv);
        }
        return compute_ranges(probe).at(sub.get());
    };

    int rule_checks = 0, rule_failures = 0;
    for (const RewriteRule& rule : default_rules()) {
        int tried = 0;
        for (int attempt = 0; attempt < 200 && tried < 10; ++attempt) {
            Bindings binds(static_cast<size_t>(rule.max_meta() + 1));
            for (auto& b : binds) {
                switch (testsupport::uniform_index(rng, 4)) {
                    case 0: b = make_var(vars[testsupport::uniform_index(rng, 2)]); break;
                    case 1:
                        b = make_add(make_var(vars[testsupport::uniform_index(rng, 2)]),
                                     make_var(vars[testsupport::uniform_index(rng, 2)]));
                        break;
                    case 2:
                        b = make_mul(make_var(vars[testsupport::uniform_index(rng, 2)]),
                                     make_var(vars[testsupport::uniform_index(rng, 2)]));
                        break;
                    default:
                        b = make_const(
                            Rational(BigInt(1 + (long)testsupport::uniform_index(rng, 5)), BigInt(2)));
                }
            }
            ExprPtr lhs;
            try {
                lhs = instantiate(rule.pattern, binds);
            } catch (const Error&) {
                continue;
            }
            Bindings check;
            if (!match_pattern(rule.pattern, lhs, check)) continue;
            if (rule.guard && !rule.guard(check, range)) continue;
            ExprPtr rhs = instantiate(rule.replacement, check);
            ++tried;
            ++rule_checks;
            if (!equivalent_at_points(lhs, rhs, inputs, rng, 100)) ++rule_failures;
        }
    }

    int searches = 0, search_failures = 0, budget_violations = 0;
    while (searches < 1000) {
        ExprPtr e = random_expr(rng, 5, vars, true, true);
        FunctionSpec f;
        f.name = "r";
        f.params = vars;
        f.input_ranges = inputs;
        f.body = e;
        try {
            compute_ranges(f);
        } catch (const Error&) {
            continue;
        }
        SearchParams params;
        params.population_size = 6;
        params.generations = 3;
        params.seed = 50000 + searches;
        GeneticResult res = genetic_search(f, params);
        ++searches;
        if (count_ops(res.best) > count_ops(res.original)) ++budget_violations;
        if (res.original_fitness < res.best_fitness) ++search_failures;
        if (!equivalent_at_points(res.original, res.best, inputs, rng, 100)) ++search_failures;
    }
    bool pass = rule_failures == 0 && search_failures == 0 && budget_violations == 0;
    report(4, "rewriting preserves real semantics; operation budget never violated", pass,
           std::to_string(rule_checks) + " rule instances, " + std::to_string(searches) +
               " searches, " + std::to_string(rule_failures + search_failures) +
               " semantic failures, " + std::to_string(budget_violations) + " budget violations");
}

// --- criterion 5 -----------------------------------------------------------

void criterion5() {
    bool eps_ok = machine_epsilon(Precision::Float32) == pow2(-24) &&
                  machine_epsilon(Precision::Float64) == pow2(-53) &&
                  machine_epsilon(Precision::Float128) == pow2(-113);

    Rng rng(5555);
    int failures = 0;
    const OpKind ops[] = {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Div};
    for (int trial = 0; trial < 10000; ++trial) {
        Interval a = testsupport::random_interval(rng, 12);
        Interval b = testsupport::random_interval(rng, 12);
        OpKind op = ops[testsupport::uniform_index(rng, 4)];
        if (op == OpKind::Div && b.contains_zero()) continue;
        Interval ir = interval_op(op, a, &b);
        NoiseAllocator alloc;
        AffineForm fa = AffineForm::from_interval(a, alloc);
        AffineForm fb = AffineForm::from_interval(b, alloc);
        Interval ar = affine_op(op, fa, &fb, alloc).to_interval();
        for (int s = 0; s < 4; ++s) {
            Rational x = random_dyadic(rng, a, 10);
            Rational y = random_dyadic(rng, b, 10);
            Rational v;
            switch (op) {
                case OpKind::Add: v = x + y; break;
                case OpKind::Sub: v = x - y; break;
                case OpKind::Mul: v = x * y; break;
                default:
                    if (y.is_zero()) continue;
                    v = x / y;
                    break;
            }
            if (!ir.contains(v)) ++failures;
            if (!ar.contains(v)) ++failures;
        }
    }

    // the cancellation identity
    AffineForm x = AffineForm::from_interval({-7, 3});
    bool cancel_ok = (x - x).is_zero();

    report(5, "numerics property suite (interval/affine soundness, cancellation, epsilons)",
           eps_ok && cancel_ok && failures == 0,
           "10000 operand pairs, " + std::to_string(failures) + " enclosure failures");
}

// --- criterion 6 -----------------------------------------------------------

void criterion6(const std::vector<FunctionSpec>& corpus) {
    bool q411 = fixed_format(Interval(-15, 15), Precision::Fixed16) == FixedFormat{16, 4, 11};

    bool overflow_ok = false;
    try {
        fixed_format(Interval(-70000, 70000), Precision::Fixed16);
    } catch (const FormatOverflow&) {
        overflow_ok = true;
    }

    PrecisionLadder ladder = PrecisionLadder::parse("fixed16,fixed32");
    const int samples = 10000;
    long violations = 0;
    int tested = 0;
    std::string note;
    for (const std::string& name : {"rigidBody1", "bspline2", "sine", "norm2"}) {
        const FunctionSpec* src = nullptr;
        for (const FunctionSpec& f : corpus)
            if (f.name == name) src = &f;
        if (!src) continue;
        FunctionSpec work = to_three_address(extract_constants(*src));
        RangeMap rm = compute_ranges(work);
        std::vector<std::string> tunables = tunable_variables(work);
        Rational b32;
        try {
            b32 = roundoff_error(work, rm, TypeConfig::uniform(tunables, Precision::Fixed32)).bound;
        } catch (const Error& e) {
            note = name + ": " + e.what();
            ++violations;
            continue;
        }
        work.target_error = round_up_3sig(b32 * Rational(BigInt(3), BigInt(2)));
        DeltaDebugResult dd;
        try {
            dd = delta_debug(work, rm, ladder);
        } catch (const Error& e) {
            note = name + ": " + e.what();
            ++violations;
            continue;
        }
        // the generated fixed-point code must exist and compile-checkable
        std::string code = emit_fixed(work, dd.config, rm, CodegenTarget::C);
        if (code.find("int") == std::string::npos) ++violations;
        ++tested;
        bool sqrt_free = !has_sqrt(work.body);
        PointSampler sampler(work);
        Rng rng(9000 + tested);
        for (int i = 0; i < samples; ++i) {
            auto pt = sampler.sample(rng);
            if (!sample_within(work, dd.config, &dd.final_analysis, pt, sqrt_free,
                               dd.final_bound)) {
                ++violations;
                note = name + " exceeded bound";
                break;
            }
        }
    }
    report(6, "fixed-point path (Q4.11 format, simulated code within bound, overflow raised)",
           q411 && overflow_ok && violations == 0 && tested == 4,
           std::to_string(tested) + " functions x " + std::to_string(samples) + " samples, " +
               std::to_string(violations) + " violations" + (note.empty() ? "" : " (" + note + ")"));
}

// --- criterion 7 -----------------------------------------------------------

void criterion7() {
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(MIXPREC_BENCHMARK_DIR))
        if (entry.path().extension() == ".daisy") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());

    DriverOptions opts; // defaults: seed 4242, full pipeline
    bool identical = true;
    std::string which;
    for (const auto& p : paths) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        RunResult a = run_source(ss.str(), opts);
        RunResult b = run_source(ss.str(), opts);
        if (a.report_text != b.report_text || a.sidecar_text != b.sidecar_text ||
            a.artifacts != b.artifacts) {
            identical = false;
            which = p.filename().string();
            break;
        }
    }
    report(7, "two consecutive pipeline runs are byte-identical", identical,
           identical ? std::to_string(paths.size()) + " files" : "differs on " + which);
}

// --- criterion 8 -----------------------------------------------------------

void criterion8(const std::vector<FunctionSpec>& corpus) {
    bool pass = true;
    std::string which;
    for (const FunctionSpec& f : corpus) {
        RangeMap rm = compute_ranges(f);
        std::vector<std::string> vars = tunable_variables(f);
        Rational b32 = roundoff_error(f, rm, TypeConfig::uniform(vars, Precision::Float32)).bound;
        Rational b64 = roundoff_error(f, rm, TypeConfig::uniform(vars, Precision::Float64)).bound;
        Rational b128 =
            roundoff_error(f, rm, TypeConfig::uniform(vars, Precision::Float128)).bound;
        if (!(b32 > b64 && b64 > b128)) {
            pass = false;
            which = f.name;
            break;
        }
    }
    report(8, "uniform bounds are strictly monotone across the float ladder", pass,
           pass ? std::to_string(corpus.size()) + " functions" : "fails on " + which);
}

} // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<FunctionSpec> corpus = load_corpus();
    std::cout << "benchmark corpus: " << corpus.size() << " functions" << std::endl;

    criterion2(corpus);
    criterion3();
    criterion4();
    criterion5();
    criterion6(corpus);
    criterion8(corpus);
    criterion7();
    criterion1(corpus); // the long one last

    auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0)
            .count();
    int failed = 0;
    for (const Criterion& c : results)
        if (!c.pass) ++failed;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed in " << secs
              << "s" << std::endl;
    return failed == 0 ? 0 : 1;
}
