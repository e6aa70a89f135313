// Command-line driver: parses the input kernels, rewrites them for accuracy,
// tunes per-variable precisions against the declared error bounds, and emits
// mixed-precision source with all casts. `tune-costs` regenerates the
// benchmarked cost table for the host machine.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <quadmath.h>

#include "mixprec/driver.hpp"

namespace fs = std::filesystem;
using namespace mixprec;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open input file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
}

// --- tune-costs ------------------------------------------------------------

template <typename T, typename Op>
double bench_ns(Op op, T seed) {
    const int n = 2000000;
    volatile T b = static_cast<T>(1.000001);
    T acc = seed;
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < n; ++i) acc = op(acc, (T)b);
    auto t1 = std::chrono::steady_clock::now();
    volatile T sink = acc;
    (void)sink;
    return std::chrono::duration<double, std::nano>(t1 - t0).count() / n;
}

std::string fmt_cost(double ns) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", ns < 0.01 ? 0.01 : ns);
    return buf;
}

template <typename T>
void bench_precision(std::ostringstream& out, const char* prec, T seed) {
    out << "add " << prec << " " << fmt_cost(bench_ns<T>([](T x, T y) { return x + y; }, seed)) << "\n";
    out << "sub " << prec << " " << fmt_cost(bench_ns<T>([](T x, T y) { return x - y; }, seed)) << "\n";
    out << "mul " << prec << " " << fmt_cost(bench_ns<T>([](T x, T y) { return x * y; }, seed)) << "\n";
    out << "div " << prec << " " << fmt_cost(bench_ns<T>([](T x, T y) { return x / y; }, seed)) << "\n";
    out << "neg " << prec << " " << fmt_cost(bench_ns<T>([](T x, T y) { (void)y; return -x; }, seed)) << "\n";
}

std::string run_tune_costs() {
    std::ostringstream out;
    out << "# benchmarked operation costs, average ns per op on this machine\n";
    bench_precision<float>(out, "f32", 1.5f);
    bench_precision<double>(out, "f64", 1.5);
    bench_precision<__float128>(out, "f128", (__float128)1.5);
    out << "sqrt f32 "
        << fmt_cost(bench_ns<float>([](float x, float y) { (void)y; return sqrtf(x + 2.0f); }, 1.5f))
        << "\n";
    out << "sqrt f64 "
        << fmt_cost(bench_ns<double>([](double x, double y) { (void)y; return sqrt(x + 2.0); }, 1.5))
        << "\n";
    out << "sqrt f128 "
        << fmt_cost(bench_ns<__float128>(
               [](__float128 x, __float128 y) { (void)y; return sqrtq(x + (__float128)2); },
               (__float128)1.5))
        << "\n";

    const int n = 2000000;
    auto cast_ns = [&](auto from, auto to_tag) {
        using To = decltype(to_tag);
        volatile decltype(from) src = from;
        volatile To dst{};
        auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < n; ++i) dst = (To)src;
        auto t1 = std::chrono::steady_clock::now();
        (void)dst;
        return std::chrono::duration<double, std::nano>(t1 - t0).count() / n;
    };
    out << "cast f32 f64 " << fmt_cost(cast_ns(1.5f, double{})) << "\n";
    out << "cast f64 f32 " << fmt_cost(cast_ns(1.5, float{})) << "\n";
    out << "cast f32 f128 " << fmt_cost(cast_ns(1.5f, __float128{})) << "\n";
    out << "cast f128 f32 " << fmt_cost(cast_ns((__float128)1.5, float{})) << "\n";
    out << "cast f64 f128 " << fmt_cost(cast_ns(1.5, __float128{})) << "\n";
    out << "cast f128 f64 " << fmt_cost(cast_ns((__float128)1.5, double{})) << "\n";
    return out.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sound mixed-precision optimizer for arithmetic kernels"};
    app.require_subcommand(0, 1);

    CLI::App* tune_costs = app.add_subcommand(
        "tune-costs", "measure per-operation costs on this machine and print a cost table");
    std::string costs_out;
    tune_costs->add_option("--out", costs_out, "write the table to a file instead of stdout");

    std::vector<std::string> inputs;
    app.add_option("files", inputs, "input kernels (.daisy)");

    bool no_rewrite = false, coarse = false, want_gen_bounds = false;
    std::string ladder = "f32,f64,f128", cost = "auto", cost_table_path, codegen = "c";
    std::string out_dir = ".", range_method = "interval", report_path, uniform;
    std::uint64_t seed = 0;

    app.add_flag("--no-rewrite", no_rewrite, "skip the rewriting phase");
    app.add_flag("--coarse", coarse,
                 "skip constant extraction and three-address conversion; tune declared variables only");
    app.add_option("--ladder", ladder, "precision ladder (f32,f64,f128 | f32,f64 | fixed16,fixed32)");
    app.add_option("--cost", cost, "cost model: simple|benchmarked|opcount|error|auto");
    app.add_option("--cost-table", cost_table_path, "benchmarked cost table file");
    app.add_option("--codegen", codegen, "code generation targets: c|scala|both|none");
    app.add_option("--out-dir", out_dir, "directory for generated files");
    CLI::Option* seed_opt =
        app.add_option("--rewrite-seed", seed, "seed for the rewriting search (default 4242)");
    app.add_option("--range-method", range_method, "range analysis: interval|affine");
    app.add_flag("--gen-bounds", want_gen_bounds,
                 "derive the nine benchmark error-bound variants per function");
    app.add_option("--uniform", uniform, "skip tuning; analyze one uniform precision");
    app.add_option("--report", report_path,
                   "report file (text; a key-value sidecar lands next to it as <path>.kv)");

    CLI11_PARSE(app, argc, argv);

    if (tune_costs->parsed()) {
        std::string table = run_tune_costs();
        if (costs_out.empty()) {
            std::cout << table;
        } else {
            write_file(costs_out, table);
            std::cout << "wrote " << costs_out << "\n";
        }
        return 0;
    }

    if (inputs.empty()) {
        std::cerr << "no input files\n" << app.help();
        return 1;
    }

    DriverOptions opts;
    try {
        opts.no_rewrite = no_rewrite;
        opts.coarse = coarse;
        opts.gen_bounds = want_gen_bounds;
        opts.ladder = PrecisionLadder::parse(ladder);
        auto ck = parse_cost_kind(cost);
        if (!ck) throw Error("unknown cost model: " + cost);
        opts.cost = *ck;
        if (!cost_table_path.empty())
            opts.cost_table = CostTable::parse(read_file(cost_table_path));
        auto cg = parse_codegen_choice(codegen);
        if (!cg) throw Error("unknown codegen target: " + codegen);
        opts.codegen = *cg;
        if (range_method == "interval") opts.range_method = RangeMethod::Interval;
        else if (range_method == "affine") opts.range_method = RangeMethod::Affine;
        else if (range_method == "plugin") opts.range_method = RangeMethod::Plugin;
        else throw Error("unknown range method: " + range_method);
        if (!uniform.empty()) {
            auto p = parse_precision(uniform);
            if (!p) throw Error("unknown precision: " + uniform);
            opts.uniform = *p;
        }
        if (seed_opt->count() > 0) {
            opts.rewrite_seed = seed;
        } else if (const char* env = std::getenv("PRECISION_TUNER_SEED")) {
            opts.rewrite_seed = std::strtoull(env, nullptr, 10);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    int exit_code = 0;
    std::string all_reports, all_sidecars;
    for (const std::string& file : inputs) {
        std::string source;
        try {
            source = read_file(file);
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
        RunResult res = run_source(source, opts);
        if (res.exit_code == 1) {
            std::cerr << file << ": " << res.report_text;
            return 1;
        }
        if (res.exit_code != 0 && (exit_code == 0 || res.exit_code < exit_code))
            exit_code = res.exit_code;
        all_reports += res.report_text;
        all_sidecars += res.sidecar_text;
        std::cerr << res.console; // phase timings, informational
        for (const auto& [name, content] : res.artifacts)
            write_file(fs::path(out_dir) / name, content);
    }

    if (report_path.empty()) {
        std::cout << all_reports;
    } else {
        write_file(report_path, all_reports);
        write_file(report_path + ".kv", all_sidecars);
        std::cout << "report written to " << report_path << "\n";
    }
    return exit_code;
}
