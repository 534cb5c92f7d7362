#pragma once

// Piecewise-linear approximants on uniform power-of-two breakpoints: least-
// squares fitting, coefficient quantization and the bit-exact evaluator used
// by the exponent and logarithm units. Segment selection is a bit slice of
// the fractional input, so segment counts must be powers of two.

#include <bit>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "duomax/fixed_point.hpp"

namespace duomax {

inline constexpr int kFitSamples = 1 << 12;   // dense sampling grid per fit
inline constexpr int kVerifyGrid = 1 << 16;   // error-report grid

// Double-precision table straight out of the fitter.
struct PwlTableReal {
    std::string function;
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    std::vector<double> breakpoints;  // segments + 1, uniform
    std::vector<double> slopes;
    std::vector<double> intercepts;

    int segments() const { return int(slopes.size()); }
};

struct PwlFit {
    PwlTableReal table;
    double max_abs_err = 0.0;  // on the kVerifyGrid sweep
};

// Quantized table. Raw coefficient integers are the authoritative values.
struct PwlTable {
    std::string function;
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    int index_bits = 0;  // log2(segment count); segment = top bits of fraction
    QFormat slope_fmt{};
    QFormat intercept_fmt{};
    std::vector<int64_t> slopes_raw;
    std::vector<int64_t> intercepts_raw;

    int segments() const { return 1 << index_bits; }
    FxWord slope(int i) const { return {slopes_raw[size_t(i)], slope_fmt, false}; }
    FxWord intercept(int i) const { return {intercepts_raw[size_t(i)], intercept_fmt, false}; }
};

inline double eval_pwl_real(const PwlTableReal& t, double x) {
    int s = t.segments();
    double h = (t.domain_hi - t.domain_lo) / s;
    int i = int((x - t.domain_lo) / h);
    if (i < 0) i = 0;
    if (i >= s) i = s - 1;
    return t.slopes[size_t(i)] * x + t.intercepts[size_t(i)];
}

// Continuous piecewise-linear least squares on uniform breakpoints.
// Parameterized by knot values (hat basis); the normal equations are
// tridiagonal and solved exactly with the Thomas algorithm.
inline PwlFit fit_pwl(const std::function<double(double)>& f, int segments,
                      double lo, double hi, std::string function_name = "") {
    if (segments < 1 || !std::has_single_bit(unsigned(segments)))
        throw std::invalid_argument("fit_pwl: segments must be a power of two");
    if (!(lo < hi)) throw std::invalid_argument("fit_pwl: empty domain");

    const int s = segments;
    const double h = (hi - lo) / s;
    std::vector<double> diag(size_t(s) + 1, 0.0);
    std::vector<double> off(size_t(s), 0.0);
    std::vector<double> rhs(size_t(s) + 1, 0.0);

    for (int j = 0; j < kFitSamples; ++j) {
        double x = lo + (hi - lo) * j / kFitSamples;
        double fx = f(x);
        if (!std::isfinite(fx))
            throw std::invalid_argument("fit_pwl: non-finite sample at x=" + std::to_string(x));
        int seg = int((x - lo) / h);
        if (seg >= s) seg = s - 1;
        double lam = (x - (lo + seg * h)) / h;
        double w0 = 1.0 - lam;
        diag[size_t(seg)] += w0 * w0;
        diag[size_t(seg) + 1] += lam * lam;
        off[size_t(seg)] += w0 * lam;
        rhs[size_t(seg)] += w0 * fx;
        rhs[size_t(seg) + 1] += lam * fx;
    }

    std::vector<double> cp(size_t(s), 0.0);
    std::vector<double> dp(size_t(s) + 1, 0.0);
    cp[0] = off[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (int i = 1; i <= s; ++i) {
        double m = diag[size_t(i)] - off[size_t(i) - 1] * cp[size_t(i) - 1];
        if (i < s) cp[size_t(i)] = off[size_t(i)] / m;
        dp[size_t(i)] = (rhs[size_t(i)] - off[size_t(i) - 1] * dp[size_t(i) - 1]) / m;
    }
    std::vector<double> y(size_t(s) + 1);
    y[size_t(s)] = dp[size_t(s)];
    for (int i = s - 1; i >= 0; --i)
        y[size_t(i)] = dp[size_t(i)] - cp[size_t(i)] * y[size_t(i) + 1];

    PwlFit out;
    out.table.function = std::move(function_name);
    out.table.domain_lo = lo;
    out.table.domain_hi = hi;
    out.table.breakpoints.resize(size_t(s) + 1);
    out.table.slopes.resize(size_t(s));
    out.table.intercepts.resize(size_t(s));
    for (int i = 0; i <= s; ++i) out.table.breakpoints[size_t(i)] = lo + i * h;
    for (int i = 0; i < s; ++i) {
        out.table.slopes[size_t(i)] = (y[size_t(i) + 1] - y[size_t(i)]) / h;
        out.table.intercepts[size_t(i)] =
            y[size_t(i)] - out.table.slopes[size_t(i)] * out.table.breakpoints[size_t(i)];
    }
    for (int j = 0; j < kVerifyGrid; ++j) {
        double x = lo + (hi - lo) * j / kVerifyGrid;
        double e = std::abs(eval_pwl_real(out.table, x) - f(x));
        if (e > out.max_abs_err) out.max_abs_err = e;
    }
    return out;
}

// Quantize each slope/intercept independently into the given formats.
// Coefficients that do not fit are an error, not a silent clamp.
inline PwlTable quantize_coeffs(const PwlTableReal& t, QFormat slope_fmt,
                                QFormat intercept_fmt, RoundingMode mode) {
    PwlTable q;
    q.function = t.function;
    q.domain_lo = t.domain_lo;
    q.domain_hi = t.domain_hi;
    q.index_bits = std::countr_zero(unsigned(t.segments()));
    q.slope_fmt = slope_fmt;
    q.intercept_fmt = intercept_fmt;
    for (int i = 0; i < t.segments(); ++i) {
        FxWord s = quantize(t.slopes[size_t(i)], slope_fmt, mode);
        FxWord c = quantize(t.intercepts[size_t(i)], intercept_fmt, mode);
        if (s.saturated || c.saturated)
            throw std::invalid_argument("quantize_coeffs: coefficient format too narrow");
        q.slopes_raw.push_back(s.raw);
        q.intercepts_raw.push_back(c.raw);
    }
    if (q.function == "exp2") {
        for (int64_t s : q.slopes_raw)
            if (s <= 0) throw std::invalid_argument("quantize_coeffs: exp2 slope not positive");
    }
    return q;
}

// Quantize the knot values instead of the coefficients: round each knot to
// intercept_fmt precision, then derive slopes and intercepts exactly from
// the rounded knots. The quantized approximant is exactly continuous, so
// positive slopes make it strictly increasing. Domain must be [0, 1).
inline PwlTable quantize_knots(const PwlTableReal& t,
                               QFormat slope_fmt = formats::q1_14,
                               QFormat intercept_fmt = formats::q1_16) {
    if (t.domain_lo != 0.0 || t.domain_hi != 1.0)
        throw std::invalid_argument("quantize_knots: domain must be [0, 1)");
    const int s = t.segments();
    const int kb = std::countr_zero(unsigned(s));
    const int kf = intercept_fmt.frac_bits;
    // slope = dy * segments; exact in slope_fmt iff the rescaling shifts left
    const int slope_shift = kb + slope_fmt.frac_bits - kf;
    if (slope_shift < 0)
        throw std::invalid_argument("quantize_knots: slope format too coarse for knots");

    std::vector<int64_t> yraw(size_t(s) + 1);
    for (int i = 0; i <= s; ++i) {
        double yi = (i < s) ? t.slopes[size_t(i)] * t.breakpoints[size_t(i)] + t.intercepts[size_t(i)]
                            : t.slopes[size_t(s) - 1] * t.breakpoints[size_t(s)] +
                                  t.intercepts[size_t(s) - 1];
        FxWord w = quantize(yi, intercept_fmt, RoundingMode::NearestEven);
        if (w.saturated)
            throw std::invalid_argument("quantize_knots: knot outside intercept format");
        yraw[size_t(i)] = w.raw;
    }

    PwlTable q;
    q.function = t.function;
    q.domain_lo = t.domain_lo;
    q.domain_hi = t.domain_hi;
    q.index_bits = kb;
    q.slope_fmt = slope_fmt;
    q.intercept_fmt = intercept_fmt;
    for (int i = 0; i < s; ++i) {
        int64_t dy = yraw[size_t(i) + 1] - yraw[size_t(i)];
        int64_t sraw = dy << slope_shift;
        int64_t craw = yraw[size_t(i)] - dy * i;  // y_i - slope*b_i, exact
        if (sraw < slope_fmt.min_raw() || sraw > slope_fmt.max_raw() ||
            craw < intercept_fmt.min_raw() || craw > intercept_fmt.max_raw())
            throw std::invalid_argument("quantize_knots: coefficient format too narrow");
        q.slopes_raw.push_back(sraw);
        q.intercepts_raw.push_back(craw);
    }
    if (q.function == "exp2") {
        for (int64_t sl : q.slopes_raw)
            if (sl <= 0) throw std::invalid_argument("quantize_knots: exp2 slope not positive");
    }
    return q;
}

// Fixed-point evaluation: segment = top index_bits of v's fraction, then
// slope*v + intercept through fx_mul/fx_add. v must lie in [0, 1).
inline FxWord eval_pwl(const PwlTable& t, FxWord v, QFormat out_fmt, RoundingMode mode) {
    if (t.domain_lo != 0.0 || t.domain_hi != 1.0)
        throw std::domain_error("eval_pwl: quantized tables cover [0, 1)");
    if (v.raw < 0 || v.raw >= (int64_t(1) << v.fmt.frac_bits))
        throw std::domain_error("eval_pwl: input outside [0, 1)");
    int seg = int(v.raw >> (v.fmt.frac_bits - t.index_bits));
    FxWord prod = fx_mul(t.slope(seg), v, out_fmt, mode);
    return fx_add(prod, t.intercept(seg), out_fmt);
}

}  // namespace duomax
