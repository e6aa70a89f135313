#include "mixprec/precision.hpp"

#include <gtest/gtest.h>

#include <cfloat>

#include "support.hpp"

using namespace mixprec;

TEST(Precision, MachineEpsilonValues) {
    EXPECT_EQ(machine_epsilon(Precision::Float32), pow2(-24));
    EXPECT_EQ(machine_epsilon(Precision::Float64), pow2(-53));
    EXPECT_EQ(machine_epsilon(Precision::Float128), pow2(-113));
}

TEST(Precision, MinNormal) {
    EXPECT_EQ(min_normal(Precision::Float32), pow2(-126));
    EXPECT_EQ(min_normal(Precision::Float64), pow2(-1022));
    EXPECT_EQ(min_normal(Precision::Float128), pow2(-16382));
    EXPECT_EQ(min_normal(Precision::Float32), testsupport::rational_of_float(FLT_MIN));
    EXPECT_EQ(min_normal(Precision::Float64), testsupport::rational_of_double(DBL_MIN));
}

TEST(Precision, MaxFinite) {
    EXPECT_EQ(max_finite(Precision::Float32), testsupport::rational_of_float(FLT_MAX));
    EXPECT_EQ(max_finite(Precision::Float64), testsupport::rational_of_double(DBL_MAX));
    EXPECT_GT(max_finite(Precision::Float128), max_finite(Precision::Float64));
}

TEST(Precision, LadderOrder) {
    EXPECT_LT(ladder_rank(Precision::Float32), ladder_rank(Precision::Float64));
    EXPECT_LT(ladder_rank(Precision::Float64), ladder_rank(Precision::Float128));
    EXPECT_LT(ladder_rank(Precision::Fixed16), ladder_rank(Precision::Fixed32));
    EXPECT_EQ(max_precision(Precision::Float32, Precision::Float64), Precision::Float64);
    EXPECT_THROW(max_precision(Precision::Float32, Precision::Fixed16), Error);
}

TEST(Precision, FixedBits) {
    EXPECT_EQ(total_bits(Precision::Fixed16), 16);
    EXPECT_EQ(total_bits(Precision::Fixed32), 32);
    EXPECT_THROW(machine_epsilon(Precision::Fixed16), Error);
}

TEST(Precision, ParseAndPrint) {
    for (Precision p : {Precision::Float32, Precision::Float64, Precision::Float128,
                        Precision::Fixed16, Precision::Fixed32}) {
        EXPECT_EQ(parse_precision(precision_name(p)), p);
    }
    EXPECT_FALSE(parse_precision("f16").has_value());
}

TEST(Precision, LadderParse) {
    PrecisionLadder l = PrecisionLadder::parse("f32,f64,f128");
    EXPECT_EQ(l.rungs.size(), 3u);
    EXPECT_EQ(l.top(), Precision::Float128);
    EXPECT_EQ(l.bottom(), Precision::Float32);
    EXPECT_TRUE(l.is_float_ladder());

    PrecisionLadder fx = PrecisionLadder::parse("fixed16,fixed32");
    EXPECT_FALSE(fx.is_float_ladder());

    EXPECT_THROW(PrecisionLadder::parse("f64,f32"), Error);
    EXPECT_THROW(PrecisionLadder::parse("f32,fixed16"), Error);
    EXPECT_THROW(PrecisionLadder::parse("f32,nope"), Error);
    EXPECT_EQ(PrecisionLadder::parse("f32,f64").to_string(), "f32,f64");
}
