#include "mixprec/codegen.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mixprec/simulate.hpp"
#include "mixprec/transform.hpp"
#include "support.hpp"

using namespace mixprec;
using testsupport::random_dyadic;
using testsupport::Rng;

namespace {

FunctionSpec parse_one(const std::string& src) { return parse_functions(src)[0]; }

FunctionSpec sum_fn() {
    return parse_one(R"(
def g(x: Real, y: Real): Real = {
  require(0 <= x && x <= 1 && 0 <= y && y <= 1)
  val z = x + y
  z
}
)");
}

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "mixprec_codegen_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

// compiles a C translation unit; returns the compiler exit status
int compile_c(const std::string& source, const std::string& tag, bool link_main = false,
              std::string* binary_out = nullptr) {
    auto dir = scratch_dir();
    auto cfile = dir / (tag + ".c");
    std::ofstream(cfile) << source;
    auto bin = dir / tag;
    std::string cmd;
    if (link_main) {
        cmd = "gcc -O1 -ffp-contract=off -o " + bin.string() + " " + cfile.string() + " -lm 2>" +
              (dir / (tag + ".log")).string();
    } else {
        cmd = "gcc -O1 -ffp-contract=off -c -o " + bin.string() + ".o " + cfile.string() + " 2>" +
              (dir / (tag + ".log")).string();
    }
    int rc = std::system(cmd.c_str());
    if (binary_out) *binary_out = bin.string();
    return rc;
}

std::string run_binary(const std::string& path) {
    std::string out;
    FILE* p = popen(path.c_str(), "r");
    if (!p) return out;
    char buf[256];
    while (fgets(buf, sizeof buf, p)) out += buf;
    pclose(p);
    return out;
}

} // namespace

TEST(CodegenFloat, UniformDoubleHasNoCasts) {
    FunctionSpec f = parse_one(testsupport::rigid_body1_source());
    FunctionSpec t = to_three_address(extract_constants(f));
    TypeConfig cfg = TypeConfig::uniform(tunable_variables(t), Precision::Float64);
    TypedProgram prog = build_typed_program(t, cfg);
    check_casts(prog);
    std::function<int(const TypedExprPtr&)> casts = [&](const TypedExprPtr& e) {
        int n = e->kind == TypedExpr::Kind::Cast ? 1 : 0;
        for (const auto& a : e->args) n += casts(a);
        return n;
    };
    int total = 0;
    for (const auto& b : prog.bindings) total += casts(b.rhs);
    total += casts(prog.result);
    EXPECT_EQ(total, 0);

    std::string c = emit_float(t, cfg, CodegenTarget::C);
    EXPECT_EQ(c.find("(float)"), std::string::npos);
    EXPECT_EQ(c.find("__float128"), std::string::npos);
    std::string scala = emit_float(t, cfg, CodegenTarget::Scala);
    EXPECT_EQ(scala.find(".to"), std::string::npos);
}

TEST(CodegenFloat, TargetLiftUpcastsBothOperands) {
    FunctionSpec f = sum_fn();
    TypeConfig cfg;
    cfg.assignment = {{"x", Precision::Float32}, {"y", Precision::Float32},
                      {"z", Precision::Float64}};
    std::string c = emit_float(f, cfg, CodegenTarget::C);
    EXPECT_NE(c.find("const double z = ((double)(x) + (double)(y));"), std::string::npos) << c;

    std::string scala = emit_float(f, cfg, CodegenTarget::Scala);
    EXPECT_NE(scala.find("val z: Double = ((x).toDouble + (y).toDouble)"), std::string::npos)
        << scala;
}

TEST(CodegenFloat, DowncastAssignmentIsExplicit) {
    FunctionSpec f = sum_fn();
    TypeConfig cfg;
    cfg.assignment = {{"x", Precision::Float64}, {"y", Precision::Float64},
                      {"z", Precision::Float32}};
    std::string c = emit_float(f, cfg, CodegenTarget::C);
    EXPECT_NE(c.find("const float z = (float)((x + y));"), std::string::npos) << c;
}

TEST(CodegenFloat, QuadLiteralsAndHeaders) {
    FunctionSpec f = parse_one(
        "def q(x: Real): Real = { require(1 <= x && x <= 2) sqrt(x) * 0.5 }");
    FunctionSpec t = to_three_address(extract_constants(f));
    TypeConfig cfg = TypeConfig::uniform(tunable_variables(t), Precision::Float128);
    std::string c = emit_float(t, cfg, CodegenTarget::C);
    EXPECT_NE(c.find("#include <quadmath.h>"), std::string::npos);
    EXPECT_NE(c.find("sqrtq("), std::string::npos);
    EXPECT_NE(c.find("0.5Q"), std::string::npos);
    EXPECT_NE(c.find("__float128"), std::string::npos);
    EXPECT_EQ(compile_c(c, "quad_smoke"), 0) << c;
}

TEST(CodegenFloat, MixedQuadDoubleCompiles) {
    FunctionSpec f = parse_one(testsupport::rigid_body1_source());
    FunctionSpec t = to_three_address(extract_constants(f));
    std::vector<std::string> vars = tunable_variables(t);
    TypeConfig cfg = TypeConfig::uniform(vars, Precision::Float128);
    // lower the tail of the computation to double
    cfg.assignment["_t5"] = Precision::Float64;
    cfg.assignment["_t6"] = Precision::Float64;
    std::string c = emit_float(t, cfg, CodegenTarget::C);
    EXPECT_NE(c.find("__float128"), std::string::npos);
    EXPECT_NE(c.find("double"), std::string::npos);
    EXPECT_EQ(compile_c(c, "mixed_smoke"), 0) << c;
}

TEST(CodegenFloat, CheckCastsCatchesBrokenPrograms) {
    using detail::typed_cast;
    using detail::typed_op;
    using detail::typed_var;
    TypedProgram prog;
    prog.name = "broken";
    prog.params = {"x", "y"};
    prog.param_prec = {{"x", Precision::Float32}, {"y", Precision::Float64}};
    // implicit mix: float32 operand in a float64 add
    prog.result = typed_op(OpKind::Add, Precision::Float64,
                           {typed_var("x", Precision::Float32), typed_var("y", Precision::Float64)});
    prog.result_prec = Precision::Float64;
    EXPECT_THROW(check_casts(prog), Error);
    // a pointless cast is rejected too
    prog.result = typed_cast(typed_var("y", Precision::Float64), Precision::Float64);
    EXPECT_THROW(check_casts(prog), Error);
    // the explicit version passes
    prog.result = typed_op(OpKind::Add, Precision::Float64,
                           {typed_cast(typed_var("x", Precision::Float32), Precision::Float64),
                            typed_var("y", Precision::Float64)});
    check_casts(prog);
}

// The compiled program and the bit-accurate simulator agree exactly.
TEST(CodegenFloat, CompiledCodeMatchesSimulator) {
    FunctionSpec f = parse_one(testsupport::rigid_body1_source());
    FunctionSpec t = to_three_address(extract_constants(f));
    std::vector<std::string> vars = tunable_variables(t);
    TypeConfig cfg;
    Rng seedrng(404);
    for (const auto& v : vars)
        cfg.assignment[v] = (seedrng() & 1) ? Precision::Float64 : Precision::Float32;

    std::string kernel = emit_float(t, cfg, CodegenTarget::C);
    Rng rng(405);
    std::vector<std::map<std::string, Rational>> points;
    for (int i = 0; i < 64; ++i) {
        std::map<std::string, Rational> pt;
        for (const auto& p : t.params) pt[p] = random_dyadic(rng, t.input_ranges.at(p));
        points.push_back(pt);
    }

    std::ostringstream harness;
    harness << kernel << "\n#include <stdio.h>\nint main(void) {\n";
    for (const auto& pt : points) {
        harness << "    printf(\"%a\\n\", (double)" << t.name << "(";
        bool first = true;
        for (const auto& p : t.params) {
            if (!first) harness << ", ";
            first = false;
            Precision pr = cfg.at(p);
            // pass the exact input value; the conversion in the call rounds
            // it to the parameter precision exactly like the simulator does
            harness << (pr == Precision::Float32 ? "(float)" : "(double)")
                    << exact_decimal_string(pt.at(p));
        }
        harness << "));\n";
    }
    harness << "    return 0;\n}\n";

    std::string bin;
    ASSERT_EQ(compile_c(harness.str(), "match_sim", true, &bin), 0) << harness.str();
    std::istringstream out(run_binary(bin));
    std::string line;
    size_t idx = 0;
    while (std::getline(out, line)) {
        ASSERT_LT(idx, points.size());
        double got = std::strtod(line.c_str(), nullptr);
        Rational sim = simulate(t, cfg, points[idx]);
        EXPECT_EQ(testsupport::rational_of_double(got), sim) << "point " << idx;
        ++idx;
    }
    EXPECT_EQ(idx, points.size());
}

TEST(CodegenFixed, FormatsAndComments) {
    FunctionSpec f = parse_one(
        "def s(x: Real): Real = { require(-15 <= x && x <= 15) x * x }");
    FunctionSpec t = to_three_address(f);
    RangeMap rm = compute_ranges(t);
    TypeConfig cfg = TypeConfig::uniform(tunable_variables(t), Precision::Fixed16);
    std::string c = emit_fixed(t, cfg, rm, CodegenTarget::C);
    EXPECT_NE(c.find("x: 1+4+11"), std::string::npos) << c;
    EXPECT_NE(c.find("int16_t"), std::string::npos);
    EXPECT_EQ(compile_c(c, "fixed_fmt"), 0) << c;
    EXPECT_THROW(emit_fixed(t, cfg, rm, CodegenTarget::Scala), Error);
}

TEST(CodegenFixed, IdenticalFormatsAddNoShift) {
    FunctionSpec f = parse_one(
        "def a(x: Real, y: Real): Real = { require(0 <= x && x <= 1.75 && -1.75 <= y && y <= 0) x + y }");
    RangeMap rm = compute_ranges(f);
    TypeConfig cfg = TypeConfig::uniform({"x", "y"}, Precision::Fixed16);
    std::string c = emit_fixed(f, cfg, rm, CodegenTarget::C);
    // both operands and the sum share Q1.14: pure integer add, no shifts
    std::istringstream lines(c);
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
        if (line.find("return") != std::string::npos) {
            found = true;
            EXPECT_EQ(line.find("<<"), std::string::npos) << line;
            EXPECT_EQ(line.find(">>"), std::string::npos) << line;
        }
    }
    EXPECT_TRUE(found);
}

TEST(CodegenFixed, CompiledCodeMatchesSimulator) {
    FunctionSpec f = parse_one(
        "def g(x: Real, y: Real): Real = { require(1 <= x && x <= 5 && 2 <= y && y <= 8) "
        "sqrt(x * x + y) / y - 0.75 }");
    FunctionSpec t = to_three_address(extract_constants(f));
    RangeMap rm = compute_ranges(t);
    for (Precision p : {Precision::Fixed16, Precision::Fixed32}) {
        TypeConfig cfg = TypeConfig::uniform(tunable_variables(t), p);
        ErrorAnalysis ea = roundoff_error(t, rm, cfg);
        std::string kernel = emit_fixed(t, cfg, rm, CodegenTarget::C);

        Rng rng(p == Precision::Fixed16 ? 500 : 501);
        std::vector<std::map<std::string, Rational>> points;
        for (int i = 0; i < 64; ++i) {
            std::map<std::string, Rational> pt;
            for (const auto& prm : t.params) pt[prm] = random_dyadic(rng, t.input_ranges.at(prm));
            points.push_back(pt);
        }

        std::ostringstream harness;
        harness << kernel << "\n#include <stdio.h>\nint main(void) {\n";
        for (const auto& pt : points) {
            harness << "    printf(\"%lld\\n\", (long long)" << t.name << "(";
            bool first = true;
            for (const auto& prm : t.params) {
                if (!first) harness << ", ";
                first = false;
                const FixedFormat& fmt = ea.var_format.at(prm);
                BigInt word = floor_rat(pt.at(prm) * pow2(fmt.fractional_bits));
                harness << "(" << (p == Precision::Fixed16 ? "int16_t" : "int32_t") << ")"
                        << word.str();
            }
            harness << "));\n";
        }
        harness << "    return 0;\n}\n";

        std::string bin;
        ASSERT_EQ(compile_c(harness.str(), std::string("fixed_match_") + precision_name(p), true,
                            &bin), 0)
            << harness.str();
        std::istringstream out(run_binary(bin));
        std::string line;
        size_t idx = 0;
        const ExprNode* result_node = nullptr;
        ExprPtr chain = t.body;
        while (chain->kind == ExprKind::Let) chain = chain->b;
        result_node = chain.get();
        (void)result_node;
        // result format: the final variable's format
        FixedFormat rfmt = ea.var_format.at(chain->name);
        while (std::getline(out, line)) {
            ASSERT_LT(idx, points.size());
            long long got = std::strtoll(line.c_str(), nullptr, 10);
            Rational got_val = Rational(BigInt(got)) * pow2(-rfmt.fractional_bits);
            Rational sim = simulate(t, cfg, points[idx], &ea);
            EXPECT_EQ(got_val, sim) << precision_name(p) << " point " << idx;
            ++idx;
        }
        EXPECT_EQ(idx, points.size());
    }
}

TEST(Codegen, OutputFilename) {
    EXPECT_EQ(output_filename("rigidBody1", PrecisionLadder::parse("f32,f64,f128"),
                              CodegenTarget::C),
              "rigidBody1_f32f64f128_tuned.c");
    EXPECT_EQ(output_filename("g", PrecisionLadder::parse("fixed16,fixed32"),
                              CodegenTarget::Scala),
              "g_fixed16fixed32_tuned.scala");
}
