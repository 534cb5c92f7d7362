#pragma once

// The two scalar function units of the datapath: a base-2 exponent unit
// built on the 2^u * 2^v split (shift + PWL), and a forward log2 converter
// built on leading-one detection + PWL. Everything is base 2; the single
// log2(e) constant bridges to natural exponentials.

#include <bit>
#include <cstdint>
#include <stdexcept>

#include "duomax/fixed_point.hpp"
#include "duomax/pwl.hpp"

namespace duomax {

// floor(log2(e) * 2^30), checked against std::log2 in the test suite
inline constexpr FxWord kLog2E{1549082004, formats::q1_30, false};

// Multiply by log2(e): converts a natural-log exponent into a base-2 one.
inline FxWord scale_log2e(FxWord x, QFormat out_fmt = formats::q6_16,
                          RoundingMode mode = RoundingMode::Floor) {
    return fx_mul(x, kLog2E, out_fmt, mode);
}

namespace detail {
inline constexpr QFormat eval_fmt(QFormat out) {
    // 7 integer bits of headroom around the PWL accumulation
    return QFormat{out.frac_bits + 7, out.frac_bits, true};
}
}  // namespace detail

// 2^t with u = floor(t), v = t - u in [0, 1): PWL for 2^v, shift for 2^u.
// The floor split is the natural two's-complement bit slice, so negative t
// needs no special casing. Deep negative t underflows to exactly 0; results
// past out_fmt's range clip to its maximum.
struct ExpUnit {
    PwlTable table;                       // 2^v on [0, 1)
    QFormat out_fmt = formats::q0_16;
    RoundingMode rounding = RoundingMode::Floor;

    FxWord eval(FxWord t) const {
        const int frac = t.fmt.frac_bits;
        int64_t u = t.raw >> frac;
        FxWord v{t.raw - (u << frac), QFormat{frac, frac, false}, false};
        FxWord p = eval_pwl(table, v, detail::eval_fmt(out_fmt), rounding);
        return fx_convert(fx_shift(p, int(u)), out_fmt, rounding);
    }
};

// log2(s) for s > 0: leading-one detection gives s = 2^w * (1 + m) with
// m in [0, 1); w is exact and the PWL of log2(1 + m) carries all the
// approximation error (plus the truncation of m below out_fmt precision).
struct LogUnit {
    PwlTable table;                       // log2(1 + m) on [0, 1)
    QFormat out_fmt = formats::q6_16;
    RoundingMode rounding = RoundingMode::Floor;

    FxWord eval(FxWord s) const {
        if (s.raw <= 0) throw std::domain_error("LogUnit: input must be positive");
        const int tf = out_fmt.frac_bits;
        int p = std::bit_width(uint64_t(s.raw)) - 1;
        int64_t w = int64_t(p) - s.fmt.frac_bits;
        int64_t rem = s.raw - (int64_t(1) << p);
        int64_t m_raw = (p >= tf) ? (rem >> (p - tf)) : (rem << (tf - p));
        FxWord m{m_raw, QFormat{tf, tf, false}, false};
        FxWord frac_log = eval_pwl(table, m, detail::eval_fmt(out_fmt), rounding);
        FxWord whole{w << tf, detail::eval_fmt(out_fmt), false};
        return fx_add(frac_log, whole, out_fmt);
    }
};

}  // namespace duomax
