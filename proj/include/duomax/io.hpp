#pragma once

// Serialization: the JSON coefficient interchange format (raw integers are
// authoritative), trace/report dumps, run configuration and CSV handling.
// Decimal output is presentational; bit-exactness lives in the raw columns.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "duomax/analysis.hpp"
#include "duomax/fixed_point.hpp"
#include "duomax/pwl.hpp"
#include "duomax/softmax.hpp"

namespace duomax {

using json = nlohmann::json;

// ---- formatting ----

inline std::string format_sig12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string rounding_to_string(RoundingMode m) {
    return m == RoundingMode::Floor ? "floor" : "nearest-even";
}

inline RoundingMode rounding_from_string(const std::string& s) {
    if (s == "floor") return RoundingMode::Floor;
    if (s == "nearest-even") return RoundingMode::NearestEven;
    throw std::invalid_argument("unknown rounding mode: " + s);
}

// ---- JSON ----

inline json qformat_to_json(QFormat f) {
    return json{{"word_bits", f.word_bits}, {"frac_bits", f.frac_bits}, {"signed", f.is_signed}};
}

inline QFormat qformat_from_json(const json& j) {
    QFormat f{j.at("word_bits").get<int>(), j.at("frac_bits").get<int>(),
              j.at("signed").get<bool>()};
    if (!f.valid()) throw std::invalid_argument("invalid QFormat in JSON");
    return f;
}

inline json pwl_table_to_json(const PwlTable& t) {
    return json{{"function", t.function},
                {"domain", {t.domain_lo, t.domain_hi}},
                {"segments", t.segments()},
                {"slope_fmt", qformat_to_json(t.slope_fmt)},
                {"intercept_fmt", qformat_to_json(t.intercept_fmt)},
                {"slopes_raw", t.slopes_raw},
                {"intercepts_raw", t.intercepts_raw}};
}

inline PwlTable pwl_table_from_json(const json& j) {
    PwlTable t;
    t.function = j.at("function").get<std::string>();
    t.domain_lo = j.at("domain").at(0).get<double>();
    t.domain_hi = j.at("domain").at(1).get<double>();
    int segments = j.at("segments").get<int>();
    if (segments < 1 || (segments & (segments - 1)) != 0)
        throw std::invalid_argument("PwlTable JSON: segments must be a power of two");
    t.index_bits = std::countr_zero(unsigned(segments));
    t.slope_fmt = qformat_from_json(j.at("slope_fmt"));
    t.intercept_fmt = qformat_from_json(j.at("intercept_fmt"));
    t.slopes_raw = j.at("slopes_raw").get<std::vector<int64_t>>();
    t.intercepts_raw = j.at("intercepts_raw").get<std::vector<int64_t>>();
    if (int(t.slopes_raw.size()) != segments || int(t.intercepts_raw.size()) != segments)
        throw std::invalid_argument("PwlTable JSON: coefficient count != segments");
    return t;
}

inline void save_pwl_table(const PwlTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << pwl_table_to_json(t).dump(2) << "\n";
}

inline PwlTable load_pwl_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    in >> j;
    return pwl_table_from_json(j);
}

inline json error_report_to_json(const ErrorReport& r) {
    return json{{"mae", r.mae},
                {"max_abs_err", r.max_abs_err},
                {"rmse", r.rmse},
                {"argmax_err_input", r.argmax_err_input},
                {"n_samples", r.n_samples}};
}

inline json trace_to_json(const SoftmaxTrace& tr) {
    auto raws = [](const std::vector<FxWord>& v) {
        std::vector<int64_t> r;
        r.reserve(v.size());
        for (const FxWord& w : v) r.push_back(w.raw);
        return r;
    };
    return json{{"mode", tr.mode == Mode::Normal ? "normal" : "gelu-pairs"},
                {"maxima", raws(tr.maxima)},
                {"max_index", tr.max_index},
                {"diffs", raws(tr.diffs)},
                {"scaled", raws(tr.scaled)},
                {"exps", raws(tr.exps)},
                {"sums", raws(tr.sums)},
                {"logs", raws(tr.logs)},
                {"norms", raws(tr.norms)},
                {"outputs", raws(tr.outputs)}};
}

// ---- run configuration (config file + flag overrides) ----

struct RunConfig {
    int n = 8;
    RoundingMode rounding = RoundingMode::Floor;
    uint64_t seed = 0;
    std::string exp_table_path;  // empty: fit default tables
    std::string log_table_path;

    static RunConfig from_json(const json& j) {
        RunConfig c;
        if (j.contains("n")) c.n = j.at("n").get<int>();
        if (j.contains("rounding")) c.rounding = rounding_from_string(j.at("rounding"));
        if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
        if (j.contains("exp_table_path")) c.exp_table_path = j.at("exp_table_path");
        if (j.contains("log_table_path")) c.log_table_path = j.at("log_table_path");
        return c;
    }
};

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    json j;
    in >> j;
    return RunConfig::from_json(j);
}

inline UnitConfig make_unit_config(const RunConfig& rc) {
    UnitConfig cfg = UnitConfig::defaults(rc.n, rc.rounding);
    if (!rc.exp_table_path.empty()) cfg.exp_table = load_pwl_table(rc.exp_table_path);
    if (!rc.log_table_path.empty()) cfg.log_table = load_pwl_table(rc.log_table_path);
    cfg.validate();
    return cfg;
}

inline json unit_config_to_json(const UnitConfig& cfg, uint64_t seed) {
    return json{{"n", cfg.n},
                {"rounding", rounding_to_string(cfg.rounding)},
                {"seed", seed},
                {"input_fmt", qformat_to_json(cfg.input_fmt)},
                {"diff_fmt", qformat_to_json(cfg.diff_fmt)},
                {"sum_fmt", qformat_to_json(cfg.sum_fmt)},
                {"prob_fmt", qformat_to_json(cfg.prob_fmt)},
                {"exp_table", pwl_table_to_json(cfg.exp_table)},
                {"log_table", pwl_table_to_json(cfg.log_table)}};
}

// ---- CSV ----

// One data row plus the line it came from, for error reporting.
struct CsvRow {
    int line = 0;
    std::vector<double> values;
};

struct CsvRawRow {
    int line = 0;
    std::vector<int64_t> values;
};

// Numeric rows; '#' lines are comments. Errors name the file and line.
inline std::vector<CsvRow> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<CsvRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        CsvRow row;
        row.line = lineno;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": not a number: '" + cell + "'");
            }
        }
        if (!row.values.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<CsvRawRow> read_csv_raw_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<CsvRawRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        CsvRawRow row;
        row.line = lineno;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.values.push_back(std::stoll(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": not a raw integer: '" + cell + "'");
            }
        }
        if (!row.values.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_gelu_sweep_csv(const GeluSweepResult& res, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "z,approx,reference,abs_err\n";
    for (const GeluSweepRow& r : res.rows)
        out << format_sig12(r.z) << "," << format_sig12(r.approx) << ","
            << format_sig12(r.reference) << "," << format_sig12(r.abs_err) << "\n";
}

}  // namespace duomax
