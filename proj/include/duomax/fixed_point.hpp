#pragma once

// Deterministic fixed-point arithmetic with explicit formats, rounding and
// saturation. All datapath modules compute on FxWord values; operations are
// pure and never wrap silently (out-of-range results clamp and set a flag).

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace duomax {

using wide_int = __int128;

enum class RoundingMode {
    Floor,        // truncate toward -inf (arithmetic right shift)
    NearestEven,  // round to nearest, ties to even
};

// Fixed-point format descriptor. word_bits counts the sign bit for signed
// formats; frac_bits == word_bits means a pure fraction (no integer bits).
struct QFormat {
    int word_bits = 0;
    int frac_bits = 0;
    bool is_signed = false;

    constexpr bool valid() const {
        if (word_bits < 1 || word_bits > 64 || frac_bits < 0 || frac_bits > word_bits)
            return false;
        if (!is_signed && word_bits > 63) return false;  // raw lives in int64
        return true;
    }
    constexpr int64_t min_raw() const {
        return is_signed ? -(int64_t(1) << (word_bits - 1)) : 0;
    }
    constexpr int64_t max_raw() const {
        return is_signed ? (int64_t(1) << (word_bits - 1)) - 1
                         : (int64_t(1) << word_bits) - 1;
    }
    double lsb() const { return std::ldexp(1.0, -frac_bits); }
    double min_value() const { return double(min_raw()) * lsb(); }
    double max_value() const { return double(max_raw()) * lsb(); }

    constexpr bool operator==(const QFormat&) const = default;
};

namespace formats {
inline constexpr QFormat q5_10{16, 10, true};    // datapath inputs
inline constexpr QFormat q6_10{17, 10, true};    // exact input differences
inline constexpr QFormat q6_16{23, 16, true};    // sums, logs, scaled differences
inline constexpr QFormat q0_16{16, 16, false};   // probabilities, exponent outputs
inline constexpr QFormat q1_14{16, 14, true};    // PWL slopes
inline constexpr QFormat q1_16{18, 16, true};    // PWL intercepts (knot precision)
inline constexpr QFormat q1_30{32, 30, true};    // constants
inline constexpr QFormat q11_20{32, 20, true};   // z^2 intermediate
inline constexpr QFormat q16_15{32, 15, true};   // z^3 / k intermediates
}  // namespace formats

// One fixed-point value. `saturated` reports whether the operation that
// produced this value clipped; it does not accumulate across operations.
struct FxWord {
    int64_t raw = 0;
    QFormat fmt{};
    bool saturated = false;

    double value() const { return double(raw) * fmt.lsb(); }
};

namespace detail {

inline int64_t round_shift_right(wide_int v, int n, RoundingMode mode) {
    if (n <= 0) return int64_t(v);
    if (n > 126) n = 126;
    wide_int q = v >> n;
    if (mode == RoundingMode::NearestEven) {
        wide_int rem = v - (q << n);
        wide_int half = wide_int(1) << (n - 1);
        if (rem > half || (rem == half && (q & 1)))
            ++q;
    }
    return int64_t(q);
}

inline FxWord saturate(wide_int raw, QFormat fmt) {
    FxWord w;
    w.fmt = fmt;
    if (raw > wide_int(fmt.max_raw())) {
        w.raw = fmt.max_raw();
        w.saturated = true;
    } else if (raw < wide_int(fmt.min_raw())) {
        w.raw = fmt.min_raw();
        w.saturated = true;
    } else {
        w.raw = int64_t(raw);
    }
    return w;
}

}  // namespace detail

// Scale a real to fmt.frac_bits, round per mode, saturate to fmt's range.
inline FxWord quantize(double x, QFormat fmt, RoundingMode mode) {
    if (!fmt.valid()) throw std::invalid_argument("quantize: invalid format");
    if (std::isnan(x)) throw std::invalid_argument("quantize: NaN input");
    long double scaled = (long double)x * std::exp2((long double)fmt.frac_bits);
    long double r = (mode == RoundingMode::Floor) ? std::floor(scaled)
                                                  : std::nearbyint(scaled);
    FxWord w;
    w.fmt = fmt;
    if (!(r >= (long double)fmt.min_raw())) {  // also catches -inf
        w.raw = fmt.min_raw();
        w.saturated = true;
    } else if (!(r <= (long double)fmt.max_raw())) {
        w.raw = fmt.max_raw();
        w.saturated = true;
    } else {
        w.raw = (int64_t)r;
    }
    return w;
}

inline double dequantize(FxWord w) { return w.value(); }

// Re-quantize raw between formats: exact when gaining fraction bits,
// rounded per mode when losing them, saturating either way.
inline FxWord fx_convert(FxWord a, QFormat out_fmt, RoundingMode mode) {
    wide_int raw = a.raw;
    int d = out_fmt.frac_bits - a.fmt.frac_bits;
    if (d >= 0)
        raw <<= d;
    else
        raw = detail::round_shift_right(raw, -d, mode);
    return detail::saturate(raw, out_fmt);
}

// Exact integer addition after fraction alignment, then saturation.
// out_fmt must not discard fraction bits (no rounding point inside an add).
inline FxWord fx_add(FxWord a, FxWord b, QFormat out_fmt) {
    int common = a.fmt.frac_bits > b.fmt.frac_bits ? a.fmt.frac_bits : b.fmt.frac_bits;
    if (out_fmt.frac_bits < common)
        throw std::invalid_argument("fx_add: output format drops fraction bits");
    wide_int wa = wide_int(a.raw) << (common - a.fmt.frac_bits);
    wide_int wb = wide_int(b.raw) << (common - b.fmt.frac_bits);
    wide_int sum = (wa + wb) << (out_fmt.frac_bits - common);
    return detail::saturate(sum, out_fmt);
}

inline FxWord fx_sub(FxWord a, FxWord b, QFormat out_fmt) {
    FxWord nb = b;
    nb.raw = -b.raw;  // exact: |raw| < 2^63
    nb.fmt = b.fmt;
    return fx_add(a, nb, out_fmt);
}

// Full-precision integer product, shifted/rounded to out_fmt per mode.
inline FxWord fx_mul(FxWord a, FxWord b, QFormat out_fmt, RoundingMode mode) {
    wide_int prod = wide_int(a.raw) * wide_int(b.raw);
    int pfrac = a.fmt.frac_bits + b.fmt.frac_bits;
    int d = out_fmt.frac_bits - pfrac;
    if (d >= 0)
        prod <<= d;
    else
        prod = detail::round_shift_right(prod, -d, mode);
    return detail::saturate(prod, out_fmt);
}

// Power-of-two scaling in place: n >= 0 shifts left with saturation,
// n < 0 is an arithmetic right shift (floor). Format is unchanged.
inline FxWord fx_shift(FxWord a, int n) {
    if (n >= 0) {
        if (a.raw == 0) return FxWord{0, a.fmt, false};
        if (n >= 63)  // any nonzero raw lands past every representable range
            return detail::saturate(a.raw > 0 ? (wide_int(1) << 126) : -(wide_int(1) << 126),
                                    a.fmt);
        return detail::saturate(wide_int(a.raw) << n, a.fmt);
    }
    int m = -n > 63 ? 63 : -n;
    FxWord w;
    w.fmt = a.fmt;
    w.raw = a.raw >> m;  // >>63 leaves 0 or -1, same as any deeper shift
    return w;
}

inline std::string to_string(QFormat f) {
    int int_bits = f.word_bits - f.frac_bits - (f.is_signed ? 1 : 0);
    return (f.is_signed ? "s" : "u") + std::to_string(int_bits) + "." +
           std::to_string(f.frac_bits) + "/" + std::to_string(f.word_bits) + "b";
}

}  // namespace duomax
