#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "duomax/reference.hpp"
#include "duomax/softmax.hpp"

using namespace duomax;
using namespace duomax::formats;

namespace {

FxWord in(double v) { return quantize(v, q5_10, RoundingMode::Floor); }

std::vector<FxWord> random_vector(std::mt19937_64& rng, int n) {
    std::vector<FxWord> x;
    for (int i = 0; i < n; ++i)
        x.push_back(FxWord{int64_t(int16_t(rng() & 0xFFFF)), q5_10, false});
    return x;
}

std::vector<double> values(const std::vector<FxWord>& v) {
    std::vector<double> out;
    for (const FxWord& w : v) out.push_back(w.value());
    return out;
}

}  // namespace

TEST_CASE("max_tree") {
    std::vector<FxWord> x{in(3), in(1), in(4), in(1)};
    auto normal = max_tree(x, Mode::Normal);
    REQUIRE(normal.size() == 1);
    CHECK(normal[0].value() == 4.0);

    auto pairs = max_tree(x, Mode::GeluPairs);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].value() == 3.0);
    CHECK(pairs[1].value() == 4.0);

    std::vector<FxWord> tied(8, in(2.5));
    for (Mode m : {Mode::Normal, Mode::GeluPairs})
        for (const FxWord& w : max_tree(tied, m)) CHECK(w.value() == 2.5);

    CHECK_THROWS_AS(max_tree(std::vector<FxWord>{in(1)}, Mode::Normal), std::invalid_argument);
}

TEST_CASE("adder_tree") {
    auto s = [&](double v) { return quantize(v, q0_16, RoundingMode::Floor); };
    std::vector<FxWord> ones{s(0.25), s(0.25), s(0.25), s(0.25)};
    auto total = adder_tree(ones, Mode::Normal, q6_16);
    REQUIRE(total.size() == 1);
    CHECK(total[0].value() == 1.0);

    std::vector<FxWord> seq{s(0.1), s(0.2), s(0.3), s(0.4)};
    auto pairs = adder_tree(seq, Mode::GeluPairs, q6_16);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].raw == seq[0].raw + seq[1].raw);
    CHECK(pairs[1].raw == seq[2].raw + seq[3].raw);

    // 32 unit terms sum exactly, no rounding anywhere in the tree
    std::vector<FxWord> units(32, quantize(1.0, q6_16, RoundingMode::Floor));
    auto sum32 = adder_tree(units, Mode::Normal, q6_16);
    CHECK(sum32[0].value() == 32.0);
    CHECK_FALSE(sum32[0].saturated);
}

TEST_CASE("softmax on constant vectors") {
    UnitConfig cfg = UnitConfig::defaults(8);
    std::vector<FxWord> x(8, in(1.0));
    SoftmaxResult r = softmax_forward(x, cfg, Mode::Normal);
    for (int i = 1; i < 8; ++i) CHECK(r.outputs[size_t(i)].raw == r.outputs[0].raw);
    CHECK(std::abs(r.outputs[0].value() - 0.125) <= 5e-3);

    UnitConfig cfg2 = UnitConfig::defaults(2);
    std::vector<FxWord> pair{in(0.0), in(0.0)};
    SoftmaxResult rp = softmax_forward(pair, cfg2, Mode::Normal);
    CHECK(rp.outputs[0].raw == rp.outputs[1].raw);
    CHECK(std::abs(rp.outputs[0].value() - 0.5) <= 5e-3);
}

TEST_CASE("dual-mode equals concatenated width-2 softmaxes") {
    std::mt19937_64 rng(11);
    for (int n : {4, 8, 32}) {
        UnitConfig cfg = UnitConfig::defaults(n);
        UnitConfig cfg2 = cfg;
        cfg2.n = 2;
        for (int t = 0; t < 1000; ++t) {
            std::vector<FxWord> x = random_vector(rng, n);
            SoftmaxResult pairs = softmax_forward(x, cfg, Mode::GeluPairs);
            for (int j = 0; j < n / 2; ++j) {
                std::vector<FxWord> sub{x[size_t(2 * j)], x[size_t(2 * j + 1)]};
                SoftmaxResult two = softmax_forward(sub, cfg2, Mode::Normal);
                REQUIRE(pairs.outputs[size_t(2 * j)].raw == two.outputs[0].raw);
                REQUIRE(pairs.outputs[size_t(2 * j) + 1].raw == two.outputs[1].raw);
            }
        }
    }
}

TEST_CASE("shift invariance is bit-exact") {
    UnitConfig cfg = UnitConfig::defaults(8);
    std::mt19937_64 rng(12);
    for (int t = 0; t < 1000; ++t) {
        std::vector<FxWord> x = random_vector(rng, 8);
        int64_t lo = x[0].raw, hi = x[0].raw;
        for (const FxWord& w : x) {
            lo = std::min(lo, w.raw);
            hi = std::max(hi, w.raw);
        }
        int64_t cmin = q5_10.min_raw() - lo;
        int64_t cmax = q5_10.max_raw() - hi;
        int64_t c = cmin + int64_t(rng() % uint64_t(cmax - cmin + 1));
        std::vector<FxWord> shifted;
        for (const FxWord& w : x) shifted.push_back(FxWord{w.raw + c, q5_10, false});

        SoftmaxResult a = softmax_forward(x, cfg, Mode::Normal);
        SoftmaxResult b = softmax_forward(shifted, cfg, Mode::Normal);
        for (int i = 0; i < 8; ++i) REQUIRE(a.outputs[size_t(i)].raw == b.outputs[size_t(i)].raw);
    }
}

TEST_CASE("permutation equivariance is bit-exact") {
    UnitConfig cfg = UnitConfig::defaults(8);
    std::mt19937_64 rng(13);
    for (int t = 0; t < 1000; ++t) {
        std::vector<FxWord> x = random_vector(rng, 8);
        std::vector<int> perm{0, 1, 2, 3, 4, 5, 6, 7};
        for (int i = 7; i > 0; --i) std::swap(perm[size_t(i)], perm[rng() % uint64_t(i + 1)]);

        std::vector<FxWord> px(8);
        for (int i = 0; i < 8; ++i) px[size_t(i)] = x[size_t(perm[size_t(i)])];

        SoftmaxResult a = softmax_forward(x, cfg, Mode::Normal);
        SoftmaxResult b = softmax_forward(px, cfg, Mode::Normal);
        for (int i = 0; i < 8; ++i)
            REQUIRE(b.outputs[size_t(i)].raw == a.outputs[size_t(perm[size_t(i)])].raw);
    }
}

TEST_CASE("output range, normalization and reference agreement") {
    UnitConfig cfg = UnitConfig::defaults(8);
    std::mt19937_64 rng(14);
    double min_quarter = quantize(1.0 / 8.0, q0_16, RoundingMode::Floor).value() - 2e-2;
    for (int t = 0; t < 1000; ++t) {
        std::vector<FxWord> x = random_vector(rng, 8);
        SoftmaxResult r = softmax_forward(x, cfg, Mode::Normal);
        std::vector<double> ref = ref_softmax(values(x));

        double sum = 0.0;
        int argmax = 0;
        for (int i = 0; i < 8; ++i) {
            double v = r.outputs[size_t(i)].value();
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
            REQUIRE(std::abs(v - ref[size_t(i)]) <= 2e-2);
            sum += v;
            if (x[size_t(i)].raw > x[size_t(argmax)].raw) argmax = i;
        }
        REQUIRE(std::abs(sum - 1.0) <= 8 * 8e-3);
        REQUIRE(r.outputs[size_t(argmax)].value() >= min_quarter);

        // exact adds only: the tree must never clip under these formats
        for (const FxWord& s : r.trace.sums) REQUIRE_FALSE(s.saturated);
    }
}

TEST_CASE("trace shapes and tie indices") {
    UnitConfig cfg = UnitConfig::defaults(8);
    std::vector<FxWord> x(8, in(0.75));
    SoftmaxResult rn = softmax_forward(x, cfg, Mode::Normal);
    CHECK(rn.trace.maxima.size() == 1);
    CHECK(rn.trace.sums.size() == 1);
    CHECK(rn.trace.logs.size() == 1);
    CHECK(rn.trace.diffs.size() == 8);
    CHECK(rn.trace.outputs.size() == 8);
    CHECK(rn.trace.max_index[0] == 0);  // lowest index wins ties

    SoftmaxResult rp = softmax_forward(x, cfg, Mode::GeluPairs);
    CHECK(rp.trace.maxima.size() == 4);
    CHECK(rp.trace.sums.size() == 4);
    CHECK(rp.trace.logs.size() == 4);
    for (int g = 0; g < 4; ++g) CHECK(rp.trace.max_index[size_t(g)] == 2 * g);
}

TEST_CASE("input validation") {
    UnitConfig cfg = UnitConfig::defaults(8);
    std::vector<FxWord> short_vec(4, in(0.0));
    CHECK_THROWS_AS(softmax_forward(short_vec, cfg, Mode::Normal), std::invalid_argument);

    std::vector<FxWord> wrong_fmt(8, quantize(0.0, q6_16, RoundingMode::Floor));
    CHECK_THROWS_AS(softmax_forward(wrong_fmt, cfg, Mode::Normal), std::invalid_argument);

    UnitConfig bad = cfg;
    bad.n = 3;
    std::vector<FxWord> three(3, in(0.0));
    CHECK_THROWS_AS(softmax_forward(three, bad, Mode::Normal), std::invalid_argument);
}
