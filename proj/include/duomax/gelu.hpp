#pragma once

// GELU through the dual-mode softmax: k = sqrt(2/pi) * (z + 0.044715 z^3)
// feeds [k, -k] pairs into the pair-mode softmax, and the first lane of each
// pair times z is the GELU outcome. One invocation yields n/2 results.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "duomax/fixed_point.hpp"
#include "duomax/softmax.hpp"

namespace duomax {

struct GeluConstants {
    FxWord c_cubic;  // 0.044715
    FxWord c_sqrt;   // sqrt(2/pi)

    static GeluConstants defaults() {
        return GeluConstants{quantize(0.044715, formats::q1_30, RoundingMode::Floor),
                             quantize(std::sqrt(2.0 / 3.14159265358979323846), formats::q1_30,
                                      RoundingMode::Floor)};
    }
};

// k and its exact negation. k saturates to the symmetric sub-range of the
// input format (the most negative code is excluded) so -k is always
// representable; past that range the pair softmax is already 0 or 1.
struct KPair {
    FxWord k;
    FxWord neg_k;
};

inline KPair compute_k(FxWord z, const GeluConstants& c = GeluConstants::defaults(),
                       RoundingMode mode = RoundingMode::Floor) {
    // z^3 in 32-bit wide intermediates: z^2 exact, one rounding into Q16.15
    FxWord z2 = fx_mul(z, z, formats::q11_20, mode);
    FxWord z3 = fx_mul(z2, z, formats::q16_15, mode);
    FxWord cubic = fx_mul(c.c_cubic, z3, formats::q16_15, mode);
    FxWord inner = fx_add(z, cubic, formats::q16_15);
    FxWord k_wide = fx_mul(c.c_sqrt, inner, formats::q16_15, mode);

    int shift = formats::q16_15.frac_bits - z.fmt.frac_bits;
    int64_t raw = detail::round_shift_right(k_wide.raw, shift, mode);
    int64_t lim = z.fmt.max_raw();
    KPair p;
    p.k.fmt = z.fmt;
    p.k.saturated = raw > lim || raw < -lim;
    p.k.raw = raw > lim ? lim : (raw < -lim ? -lim : raw);
    p.neg_k = p.k;
    p.neg_k.raw = -p.k.raw;
    return p;
}

// GELU over n/2 inputs: interleave [k_j, -k_j], run the pair-mode softmax,
// keep the first lane of each pair and multiply by z_j. GELU(0) is exactly 0.
inline std::vector<FxWord> gelu_forward(std::span<const FxWord> z, const UnitConfig& cfg,
                                        const GeluConstants& c = GeluConstants::defaults()) {
    cfg.validate();
    if (int(z.size()) != cfg.n / 2)
        throw std::invalid_argument("gelu_forward: expected n/2 inputs");

    std::vector<FxWord> lanes;
    lanes.reserve(size_t(cfg.n));
    for (const FxWord& zi : z) {
        KPair p = compute_k(zi, c, cfg.rounding);
        lanes.push_back(p.k);
        lanes.push_back(p.neg_k);
    }
    SoftmaxResult sm = softmax_forward(lanes, cfg, Mode::GeluPairs);

    std::vector<FxWord> out;
    out.reserve(z.size());
    for (size_t j = 0; j < z.size(); ++j)
        out.push_back(fx_mul(z[j], sm.outputs[2 * j], z[j].fmt, cfg.rounding));
    return out;
}

// Bulk evaluation: rows shorter than n/2 are zero-padded and the padding
// lanes discarded. Stateless, so results match per-row gelu_forward calls.
inline std::vector<std::vector<FxWord>> gelu_batch(const std::vector<std::vector<FxWord>>& rows,
                                                   const UnitConfig& cfg,
                                                   const GeluConstants& c = GeluConstants::defaults()) {
    std::vector<std::vector<FxWord>> out;
    out.reserve(rows.size());
    const size_t width = size_t(cfg.n) / 2;
    for (const auto& row : rows) {
        if (row.size() > width)
            throw std::invalid_argument("gelu_batch: row longer than n/2");
        std::vector<FxWord> padded = row;
        padded.resize(width, FxWord{0, cfg.input_fmt, false});
        std::vector<FxWord> full = gelu_forward(padded, cfg, c);
        full.resize(row.size());
        out.push_back(std::move(full));
    }
    return out;
}

}  // namespace duomax
