#include "mixprec/transform.hpp"

#include <gtest/gtest.h>

#include "mixprec/simulate.hpp"
#include "support.hpp"

using namespace mixprec;
using testsupport::random_dyadic;
using testsupport::Rng;

namespace {

FunctionSpec parse_one(const std::string& src) { return parse_functions(src)[0]; }

void expect_same_semantics(const FunctionSpec& a, const FunctionSpec& b, unsigned seed) {
    Rng rng(seed);
    for (int i = 0; i < 200; ++i) {
        std::map<std::string, Rational> pt;
        for (const auto& p : a.params) pt[p] = random_dyadic(rng, a.input_ranges.at(p));
        Interval va = eval_exact(a, pt);
        Interval vb = eval_exact(b, pt);
        ASSERT_TRUE(iintersect(va, vb).has_value())
            << va.to_string() << " vs " << vb.to_string();
    }
}

int binding_count(const FunctionSpec& f) {
    int n = 0;
    ExprPtr body = f.body;
    while (body->kind == ExprKind::Let) {
        ++n;
        body = body->b;
    }
    return n;
}

} // namespace

TEST(ExtractConstants, Simple) {
    FunctionSpec f = parse_one("def c(x: Real): Real = { require(0 <= x && x <= 1) 2.0 * x }");
    FunctionSpec g = extract_constants(f);
    ASSERT_EQ(g.body->kind, ExprKind::Let);
    EXPECT_EQ(g.body->name, "_const0");
    EXPECT_EQ(g.body->a->kind, ExprKind::Const);
    EXPECT_EQ(g.body->a->value, Rational(2));
    EXPECT_EQ(g.body->b->kind, ExprKind::Mul);
    EXPECT_EQ(g.body->b->a->kind, ExprKind::Var);
    EXPECT_EQ(g.body->b->a->name, "_const0");
    expect_same_semantics(f, g, 1);
}

TEST(ExtractConstants, NoConstantsUnchanged) {
    FunctionSpec f = parse_one(
        "def a(x: Real, y: Real): Real = { require(0 <= x && x <= 1 && 0 <= y && y <= 1) x + y }");
    FunctionSpec g = extract_constants(f);
    EXPECT_TRUE(structural_equal(f.body, g.body));
}

TEST(ExtractConstants, RigidBody1HasExactlyOneConstant) {
    FunctionSpec f = parse_one(testsupport::rigid_body1_source());
    FunctionSpec g = extract_constants(f);
    int consts = 0;
    ExprPtr body = g.body;
    while (body->kind == ExprKind::Let) {
        if (body->a->kind == ExprKind::Const) ++consts;
        body = body->b;
    }
    EXPECT_EQ(consts, 1);
    expect_same_semantics(f, g, 2);
}

TEST(ThreeAddress, Simple) {
    FunctionSpec f = parse_one(
        "def s(a: Real, b: Real, c: Real): Real = { require(0 <= a && a <= 1 && 0 <= b && b <= 1 && 0 <= c && c <= 1) a * b + c }");
    FunctionSpec g = to_three_address(f);
    // let _t0 = a*b in let _t1 = _t0 + c in _t1
    ASSERT_EQ(g.body->kind, ExprKind::Let);
    EXPECT_EQ(g.body->name, "_t0");
    EXPECT_EQ(g.body->a->kind, ExprKind::Mul);
    ASSERT_EQ(g.body->b->kind, ExprKind::Let);
    EXPECT_EQ(g.body->b->name, "_t1");
    EXPECT_EQ(g.body->b->a->kind, ExprKind::Add);
    EXPECT_EQ(g.body->b->b->kind, ExprKind::Var);
    EXPECT_EQ(g.body->b->b->name, "_t1");
    expect_same_semantics(f, g, 3);
}

TEST(ThreeAddress, VariableOnly) {
    FunctionSpec f = parse_one("def id(x: Real): Real = { require(0 <= x && x <= 1) x }");
    FunctionSpec g = to_three_address(f);
    EXPECT_EQ(g.body->kind, ExprKind::Var);
    EXPECT_EQ(g.body->name, "x");
}

TEST(ThreeAddress, RigidBody1BindingCount) {
    FunctionSpec f = parse_one(testsupport::rigid_body1_source());
    FunctionSpec g = to_three_address(extract_constants(f));
    // one constant binding plus one binding per operation
    EXPECT_EQ(binding_count(g), 1 + count_ops(f.body));
    EXPECT_EQ(count_ops(g.body), count_ops(f.body));
    expect_same_semantics(f, g, 4);

    // every binding holds a constant or one operation over variables only
    ExprPtr body = g.body;
    while (body->kind == ExprKind::Let) {
        const ExprPtr& bound = body->a;
        if (bound->kind != ExprKind::Const) {
            ASSERT_TRUE(is_arith_op(bound->kind));
            EXPECT_EQ(bound->a->kind, ExprKind::Var);
            if (bound->b) EXPECT_EQ(bound->b->kind, ExprKind::Var);
        }
        body = body->b;
    }
    EXPECT_EQ(body->kind, ExprKind::Var);
}

TEST(ThreeAddress, KeepsUserBindingNames) {
    FunctionSpec f = parse_one(R"(
def doppler(u: Real, v: Real, T: Real): Real = {
  require(-100 <= u && u <= 100 && 20 <= v && v <= 20000 && -30 <= T && T <= 50)
  val t1 = 331.4 + 0.6 * T
  (-(t1) * v) / ((t1 + u) * (t1 + u))
}
)");
    FunctionSpec g = to_three_address(extract_constants(f));
    std::vector<std::string> vars = tunable_variables(g);
    EXPECT_NE(std::find(vars.begin(), vars.end(), "t1"), vars.end());
    EXPECT_EQ(count_ops(g.body), 8);
    expect_same_semantics(f, g, 5);
}

TEST(ThreeAddress, AliasForCopyBinding) {
    FunctionSpec f = parse_one(R"(
def c(x: Real): Real = {
  require(0 <= x && x <= 1)
  val y = x
  y + y
}
)");
    FunctionSpec g = to_three_address(f);
    // y collapses onto x; the add binds to a temp
    EXPECT_EQ(binding_count(g), 1);
    expect_same_semantics(f, g, 6);
}

TEST(TunableVariables, OrderOfAppearance) {
    FunctionSpec f = parse_one(testsupport::rigid_body1_source());
    FunctionSpec g = to_three_address(extract_constants(f));
    std::vector<std::string> vars = tunable_variables(g);
    ASSERT_GE(vars.size(), 4u);
    EXPECT_EQ(vars[0], "x1");
    EXPECT_EQ(vars[1], "x2");
    EXPECT_EQ(vars[2], "x3");
    EXPECT_EQ(vars[3], "_const0");
    // params + 1 constant + 7 temporaries
    EXPECT_EQ(vars.size(), 3u + 1u + 7u);
    // coarse view: only declared variables
    std::vector<std::string> coarse = tunable_variables(f);
    EXPECT_EQ(coarse, f.params);
}

TEST(Transform, RandomizedEquivalence) {
    Rng rng(77);
    const char* srcs[] = {testsupport::rigid_body1_source(), testsupport::rigid_body2_source()};
    for (const char* src : srcs) {
        FunctionSpec f = parse_one(src);
        FunctionSpec g = to_three_address(extract_constants(f));
        EXPECT_EQ(count_ops(g.body), count_ops(f.body));
        expect_same_semantics(f, g, static_cast<unsigned>(rng()));
    }
}
