#pragma once

// Error measurement and sweep harness: compares the fixed-point unit against
// the double-precision references over grids, random draws or trace files,
// and reduces the differences to reportable statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "duomax/fixed_point.hpp"
#include "duomax/gelu.hpp"
#include "duomax/reference.hpp"
#include "duomax/softmax.hpp"

namespace duomax {

struct ErrorReport {
    double mae = 0.0;
    double max_abs_err = 0.0;
    double rmse = 0.0;
    double argmax_err_input = 0.0;  // input at the worst point (index if unknown)
    int64_t n_samples = 0;
};

inline ErrorReport error_stats(const std::vector<double>& approx,
                               const std::vector<double>& reference,
                               const std::vector<double>& inputs = {}) {
    if (approx.size() != reference.size() || approx.empty())
        throw std::invalid_argument("error_stats: lists must have equal nonzero length");
    if (!inputs.empty() && inputs.size() != approx.size())
        throw std::invalid_argument("error_stats: inputs length mismatch");
    ErrorReport r;
    r.n_samples = int64_t(approx.size());
    double sum_abs = 0.0, sum_sq = 0.0;
    size_t worst = 0;
    for (size_t i = 0; i < approx.size(); ++i) {
        double e = std::abs(approx[i] - reference[i]);
        sum_abs += e;
        sum_sq += e * e;
        if (e > r.max_abs_err) {
            r.max_abs_err = e;
            worst = i;
        }
    }
    r.mae = sum_abs / double(r.n_samples);
    r.rmse = std::sqrt(sum_sq / double(r.n_samples));
    r.argmax_err_input = inputs.empty() ? double(worst) : inputs[worst];
    return r;
}

// Deterministic sample source. mt19937_64 plus explicit output mappings, so
// identical seeds give identical draws on every standard library.
class Rng {
   public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    // uniform over the full two's-complement code space of a <=16-bit format
    int64_t input_raw(QFormat fmt) {
        uint64_t span = uint64_t(fmt.max_raw() - fmt.min_raw()) + 1;
        return fmt.min_raw() + int64_t(eng_() % span);
    }
    FxWord input_word(QFormat fmt) { return FxWord{input_raw(fmt), fmt, false}; }

    double unit_open() {  // (0, 1]
        return double((eng_() >> 11) + 1) * 0x1.0p-53;
    }

    double standard_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = unit_open();
        double u2 = unit_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    uint64_t next() { return eng_(); }

   private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct SweepSpec {
    enum class Dist { UniformGrid, StandardNormal, TraceFile };
    Dist dist = Dist::UniformGrid;
    double lo = -8.0;
    double hi = 8.0;
    double step = 0.0009765625;  // 2^-10
    int64_t samples = 10000;     // StandardNormal draw count
    uint64_t seed = 0;
    std::string trace_path;

    void validate() const {
        if (dist == Dist::UniformGrid && (!(lo < hi || lo == hi) || step <= 0.0))
            throw std::invalid_argument("SweepSpec: need lo <= hi and step > 0");
        if (dist == Dist::StandardNormal && samples < 1)
            throw std::invalid_argument("SweepSpec: need samples >= 1");
    }
};

namespace detail {

// Flat list of numbers from a CSV-ish trace file; errors carry file:line.
inline std::vector<double> read_trace_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::vector<double> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t pos = 0;
                double v = std::stod(cell, &pos);
                values.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": not a number: '" + cell + "'");
            }
        }
    }
    return values;
}

inline std::vector<double> make_sweep_inputs(const SweepSpec& spec) {
    spec.validate();
    std::vector<double> z;
    switch (spec.dist) {
        case SweepSpec::Dist::UniformGrid: {
            int64_t count = int64_t(std::floor((spec.hi - spec.lo) / spec.step + 0.5)) + 1;
            for (int64_t i = 0; i < count; ++i) z.push_back(spec.lo + double(i) * spec.step);
            break;
        }
        case SweepSpec::Dist::StandardNormal: {
            Rng rng(spec.seed);
            for (int64_t i = 0; i < spec.samples; ++i) z.push_back(rng.standard_normal());
            break;
        }
        case SweepSpec::Dist::TraceFile:
            z = read_trace_values(spec.trace_path);
            break;
    }
    if (z.empty()) throw std::invalid_argument("sweep: no input points");
    return z;
}

}  // namespace detail

enum class GeluReference { Tanh, Erf };

struct GeluSweepRow {
    double z = 0.0;
    double approx = 0.0;
    double reference = 0.0;
    double abs_err = 0.0;
};

struct GeluSweepResult {
    ErrorReport report;
    std::vector<GeluSweepRow> rows;
};

// Quantize the requested points to the input format, push them through the
// GELU unit in n/2-wide batches and compare against the chosen reference.
inline GeluSweepResult sweep_gelu(const SweepSpec& spec, const UnitConfig& cfg,
                                  GeluReference reference = GeluReference::Tanh) {
    std::vector<double> points = detail::make_sweep_inputs(spec);
    std::vector<FxWord> z;
    z.reserve(points.size());
    for (double p : points) z.push_back(quantize(p, cfg.input_fmt, cfg.rounding));

    const size_t width = size_t(cfg.n) / 2;
    std::vector<std::vector<FxWord>> rows;
    for (size_t i = 0; i < z.size(); i += width) {
        size_t end = std::min(z.size(), i + width);
        rows.emplace_back(z.begin() + long(i), z.begin() + long(end));
    }
    std::vector<std::vector<FxWord>> outs = gelu_batch(rows, cfg);

    GeluSweepResult res;
    std::vector<double> approx, ref, inputs;
    for (size_t r = 0, idx = 0; r < outs.size(); ++r) {
        for (const FxWord& g : outs[r]) {
            double zi = z[idx++].value();
            double a = g.value();
            double rf = (reference == GeluReference::Tanh) ? ref_gelu_tanh(zi) : ref_gelu_erf(zi);
            res.rows.push_back(GeluSweepRow{zi, a, rf, std::abs(a - rf)});
            approx.push_back(a);
            ref.push_back(rf);
            inputs.push_back(zi);
        }
    }
    res.report = error_stats(approx, ref, inputs);
    return res;
}

struct SoftmaxSweepResult {
    ErrorReport lane;          // per-lane error against ref_softmax
    double max_norm_gap = 0.0; // max |sum(outputs) - 1|
    double mean_norm_gap = 0.0;
    int n = 0;
    int64_t vectors = 0;
    uint64_t seed = 0;
};

inline SoftmaxSweepResult sweep_softmax(int n, int64_t vectors, uint64_t seed,
                                        const UnitConfig& cfg) {
    if (n != cfg.n) throw std::invalid_argument("sweep_softmax: n != cfg.n");
    Rng rng(seed);
    SoftmaxSweepResult res;
    res.n = n;
    res.vectors = vectors;
    res.seed = seed;

    std::vector<double> approx, ref, inputs;
    approx.reserve(size_t(vectors) * size_t(n));
    double gap_sum = 0.0;
    for (int64_t v = 0; v < vectors; ++v) {
        std::vector<FxWord> x;
        std::vector<double> xr;
        for (int i = 0; i < n; ++i) {
            x.push_back(rng.input_word(cfg.input_fmt));
            xr.push_back(x.back().value());
        }
        SoftmaxResult sm = softmax_forward(x, cfg, Mode::Normal);
        std::vector<double> r = ref_softmax(xr);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            double a = sm.outputs[size_t(i)].value();
            approx.push_back(a);
            ref.push_back(r[size_t(i)]);
            inputs.push_back(xr[size_t(i)]);
            sum += a;
        }
        double gap = std::abs(sum - 1.0);
        gap_sum += gap;
        if (gap > res.max_norm_gap) res.max_norm_gap = gap;
    }
    res.mean_norm_gap = gap_sum / double(vectors);
    res.lane = error_stats(approx, ref, inputs);
    return res;
}

// Largest raw difference between pair-mode outputs and per-pair width-2
// normal-mode outputs over random vectors. The dual-mode contract makes
// this exactly zero.
inline int64_t dual_mode_max_diff(int n, int64_t vectors, uint64_t seed, const UnitConfig& cfg) {
    if (n != cfg.n) throw std::invalid_argument("dual_mode_max_diff: n != cfg.n");
    UnitConfig cfg2 = cfg;
    cfg2.n = 2;
    Rng rng(seed);
    int64_t max_diff = 0;
    for (int64_t v = 0; v < vectors; ++v) {
        std::vector<FxWord> x;
        for (int i = 0; i < n; ++i) x.push_back(rng.input_word(cfg.input_fmt));
        SoftmaxResult pairs = softmax_forward(x, cfg, Mode::GeluPairs);
        for (int j = 0; j < n / 2; ++j) {
            std::vector<FxWord> sub{x[size_t(2 * j)], x[size_t(2 * j + 1)]};
            SoftmaxResult two = softmax_forward(sub, cfg2, Mode::Normal);
            for (int l = 0; l < 2; ++l) {
                int64_t d = std::abs(pairs.outputs[size_t(2 * j + l)].raw - two.outputs[size_t(l)].raw);
                if (d > max_diff) max_diff = d;
            }
        }
    }
    return max_diff;
}

}  // namespace duomax
