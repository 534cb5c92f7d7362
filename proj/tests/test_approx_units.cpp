#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "duomax/approx_units.hpp"
#include "duomax/pwl.hpp"

using namespace duomax;
using namespace duomax::formats;

namespace {
PwlTable exp_table() {
    return quantize_knots(
        fit_pwl([](double v) { return std::exp2(v); }, 8, 0.0, 1.0, "exp2").table);
}
PwlTable log_table() {
    return quantize_knots(
        fit_pwl([](double m) { return std::log2(1.0 + m); }, 8, 0.0, 1.0, "log2p1").table);
}
FxWord sum_word(double v) { return quantize(v, q6_16, RoundingMode::Floor); }
}  // namespace

TEST_CASE("log2e constant") {
    CHECK(kLog2E.raw == 1549082004);
    CHECK(std::abs(kLog2E.value() - std::log2(std::exp(1.0))) < std::exp2(-30));
}

TEST_CASE("scale_log2e") {
    CHECK(scale_log2e(FxWord{0, q5_10, false}).raw == 0);

    FxWord one{1024, q5_10, false};
    CHECK(std::abs(scale_log2e(one).value() - 1.4426950408889634) <= std::exp2(-16));

    FxWord minus_ln2 = quantize(-std::log(2.0), q5_10, RoundingMode::Floor);
    double got = scale_log2e(minus_ln2).value();
    CHECK(std::abs(got - (-1.0)) <= 2.0 * std::exp2(-10) * 1.45);

    // deep differences clip to the sum format floor and flag it
    FxWord deep = scale_log2e(FxWord{-63 * 1024, q6_10, false});
    CHECK(deep.raw == q6_16.min_raw());
    CHECK(deep.saturated);
}

TEST_CASE("exp2 unit") {
    ExpUnit unit{exp_table(), q0_16, RoundingMode::Floor};

    FxWord at0 = unit.eval(sum_word(0.0));
    CHECK(at0.raw == unit.table.intercepts_raw[0]);
    CHECK(std::abs(at0.value() - 1.0) <= 4e-3);

    // exactly -1 is a pure shift of the value at 0
    FxWord at_m1 = unit.eval(sum_word(-1.0));
    CHECK(at_m1.raw == at0.raw >> 1);
    CHECK(std::abs(at_m1.value() - 0.5) <= 2e-3);

    CHECK(unit.eval(sum_word(-30.0)).raw == 0);
    CHECK(unit.eval(FxWord{q6_16.min_raw(), q6_16, false}).raw == 0);

    // sampled accuracy and monotonicity on [-16, 0]
    int64_t prev = -1;
    for (int64_t raw = -16 * 65536; raw <= 0; raw += 7) {
        FxWord y = unit.eval(FxWord{raw, q6_16, false});
        double expect = std::exp2(double(raw) / 65536.0);
        REQUIRE(std::abs(y.value() - expect) <= 4e-3);
        if (raw > -16 * 65536) REQUIRE(y.raw >= prev);
        prev = y.raw;
    }
}

TEST_CASE("log2 unit") {
    LogUnit unit{log_table(), q6_16, RoundingMode::Floor};

    FxWord at1 = unit.eval(sum_word(1.0));
    CHECK(at1.raw == unit.table.intercepts_raw[0]);  // w=0, m=0
    CHECK(std::abs(at1.value()) <= 3.5e-3);

    CHECK(std::abs(unit.eval(sum_word(2.0)).value() - 1.0) <= 3.5e-3);
    CHECK(std::abs(unit.eval(sum_word(3.0)).value() - std::log2(3.0)) <= 3.5e-3);

    CHECK_THROWS_AS(unit.eval(FxWord{0, q6_16, false}), std::domain_error);
    CHECK_THROWS_AS(unit.eval(FxWord{-5, q6_16, false}), std::domain_error);

    // sampled accuracy over (0, 64]
    for (int64_t raw = 1; raw <= (int64_t(1) << 22); raw += 37) {
        FxWord L = unit.eval(FxWord{raw, q6_16, false});
        double expect = std::log2(double(raw) / 65536.0);
        REQUIRE(std::abs(L.value() - expect) <= 3.5e-3);
    }
}

TEST_CASE("exp/log round trip") {
    // The composition needs room above 1.0, so this instance widens the
    // output format; the softmax datapath instance stays at Q0.16.
    ExpUnit exp_unit{exp_table(), QFormat{18, 16, false}, RoundingMode::Floor};
    LogUnit log_unit{log_table(), q6_16, RoundingMode::Floor};

    for (int64_t raw = 32768; raw <= (int64_t(1) << 22); raw += 101) {
        double s = double(raw) / 65536.0;  // [0.5, 64]
        FxWord L = log_unit.eval(FxWord{raw, q6_16, false});
        FxWord back = exp_unit.eval(FxWord{-L.raw, q6_16, false});
        REQUIRE(std::abs(back.value() * s - 1.0) <= 1.5e-2);
    }
}
