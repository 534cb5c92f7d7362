#pragma once

// Dual-mode log-domain softmax datapath. Normal mode computes one width-n
// softmax; GeluPairs mode computes n/2 independent two-element softmaxes.
// Both modes run through the same comparison and adder trees, with the mode
// selecting which tree level is tapped, so their equivalence holds by
// construction and is additionally tested bit-exactly.

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "duomax/approx_units.hpp"
#include "duomax/fixed_point.hpp"
#include "duomax/pwl.hpp"

namespace duomax {

enum class Mode { Normal, GeluPairs };

struct UnitConfig {
    int n = 8;  // vector width, power of two, >= 2
    QFormat input_fmt = formats::q5_10;
    QFormat diff_fmt = formats::q6_10;  // exact x - max differences
    QFormat sum_fmt = formats::q6_16;   // scaled differences, sums, logs
    QFormat prob_fmt = formats::q0_16;
    RoundingMode rounding = RoundingMode::Floor;
    PwlTable exp_table;
    PwlTable log_table;

    void validate() const {
        if (n < 2 || !std::has_single_bit(unsigned(n)))
            throw std::invalid_argument("UnitConfig: n must be a power of two >= 2");
        if (exp_table.slopes_raw.empty() || log_table.slopes_raw.empty())
            throw std::invalid_argument("UnitConfig: missing coefficient tables");
    }

    ExpUnit exp_unit() const { return ExpUnit{exp_table, prob_fmt, rounding}; }
    LogUnit log_unit() const { return LogUnit{log_table, sum_fmt, rounding}; }

    // Default tables: 8-piece fits of 2^v and log2(1+m) on [0, 1), knot-
    // quantized (slope Q1.14, intercept Q1.16). Deterministic.
    static UnitConfig defaults(int n, RoundingMode rounding = RoundingMode::Floor) {
        UnitConfig cfg;
        cfg.n = n;
        cfg.rounding = rounding;
        cfg.exp_table = quantize_knots(
            fit_pwl([](double v) { return std::exp2(v); }, 8, 0.0, 1.0, "exp2").table);
        cfg.log_table = quantize_knots(
            fit_pwl([](double m) { return std::log2(1.0 + m); }, 8, 0.0, 1.0, "log2p1").table);
        cfg.validate();
        return cfg;
    }
};

// Per-stage intermediates of one softmax_forward call, for inspection and
// trace dumps. Lengths: maxima/sums/logs have 1 entry (Normal) or n/2
// (GeluPairs); everything else has n.
struct SoftmaxTrace {
    Mode mode = Mode::Normal;
    std::vector<FxWord> maxima;
    std::vector<int> max_index;  // lowest index on ties
    std::vector<FxWord> diffs;
    std::vector<FxWord> scaled;
    std::vector<FxWord> exps;
    std::vector<FxWord> sums;
    std::vector<FxWord> logs;
    std::vector<FxWord> norms;
    std::vector<FxWord> outputs;
};

namespace detail {

// Binary reduction tree; GeluPairs taps the first level, Normal the last.
template <typename Combine>
std::vector<FxWord> tree_reduce(std::span<const FxWord> x, Mode mode, Combine&& combine) {
    std::vector<FxWord> level;
    level.reserve(x.size() / 2);
    for (size_t i = 0; i + 1 < x.size(); i += 2)
        level.push_back(combine(x[i], x[i + 1]));
    if (mode == Mode::GeluPairs) return level;
    while (level.size() > 1) {
        std::vector<FxWord> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i + 1 < level.size(); i += 2)
            next.push_back(combine(level[i], level[i + 1]));
        level = std::move(next);
    }
    return level;
}

}  // namespace detail

// Pairwise maxima (GeluPairs) or the global maximum (Normal). Ties keep the
// left operand, so tied maxima resolve to the lowest index.
inline std::vector<FxWord> max_tree(std::span<const FxWord> x, Mode mode) {
    if (x.empty() || (x.size() & 1))
        throw std::invalid_argument("max_tree: length must be even and nonzero");
    return detail::tree_reduce(x, mode, [](FxWord a, FxWord b) { return a.raw >= b.raw ? a : b; });
}

// Pair sums from the first tree level (GeluPairs) or the full sum (Normal).
// Additions are exact integer adds in sum_fmt; saturation cannot fire for
// n <= 32 exponent outputs and is surfaced through the flag if it ever does.
inline std::vector<FxWord> adder_tree(std::span<const FxWord> e, Mode mode, QFormat sum_fmt) {
    if (e.empty() || (e.size() & 1))
        throw std::invalid_argument("adder_tree: length must be even and nonzero");
    std::vector<FxWord> widened;
    widened.reserve(e.size());
    for (FxWord w : e) widened.push_back(fx_convert(w, sum_fmt, RoundingMode::Floor));
    return detail::tree_reduce(widened, mode,
                               [sum_fmt](FxWord a, FxWord b) { return fx_add(a, b, sum_fmt); });
}

struct SoftmaxResult {
    std::vector<FxWord> outputs;
    SoftmaxTrace trace;
};

// y_i = 2^(t_i - log2(sum_j 2^(t_j))) with t_i = (x_i - max) * log2(e).
// Division happens in the logarithm domain: one log per group, one subtract
// per lane. Outputs land in prob_fmt, inside [0, 1].
inline SoftmaxResult softmax_forward(std::span<const FxWord> x, const UnitConfig& cfg, Mode mode) {
    cfg.validate();
    if (int(x.size()) != cfg.n)
        throw std::invalid_argument("softmax_forward: input length != n");
    for (const FxWord& w : x)
        if (!(w.fmt == cfg.input_fmt))
            throw std::invalid_argument("softmax_forward: input format mismatch");

    const ExpUnit exp_unit = cfg.exp_unit();
    const LogUnit log_unit = cfg.log_unit();
    const int n = cfg.n;
    const int groups = (mode == Mode::Normal) ? 1 : n / 2;
    const int group_span = n / groups;

    SoftmaxTrace tr;
    tr.mode = mode;
    tr.maxima = max_tree(x, mode);
    tr.max_index.resize(size_t(groups));
    for (int g = 0; g < groups; ++g) {
        int best = g * group_span;
        for (int i = best + 1; i < (g + 1) * group_span; ++i)
            if (x[size_t(i)].raw > x[size_t(best)].raw) best = i;
        tr.max_index[size_t(g)] = best;
    }

    tr.diffs.reserve(size_t(n));
    tr.scaled.reserve(size_t(n));
    tr.exps.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        int g = i / group_span;
        FxWord d = fx_sub(x[size_t(i)], tr.maxima[size_t(g)], cfg.diff_fmt);
        FxWord t = scale_log2e(d, cfg.sum_fmt, cfg.rounding);
        tr.diffs.push_back(d);
        tr.scaled.push_back(t);
        tr.exps.push_back(exp_unit.eval(t));
    }

    tr.sums = adder_tree(tr.exps, mode, cfg.sum_fmt);
    tr.logs.reserve(size_t(groups));
    for (int g = 0; g < groups; ++g) tr.logs.push_back(log_unit.eval(tr.sums[size_t(g)]));

    tr.norms.reserve(size_t(n));
    tr.outputs.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        int g = i / group_span;
        FxWord r = fx_sub(tr.scaled[size_t(i)], tr.logs[size_t(g)], cfg.sum_fmt);
        tr.norms.push_back(r);
        tr.outputs.push_back(exp_unit.eval(r));
    }

    return SoftmaxResult{tr.outputs, std::move(tr)};
}

}  // namespace duomax
