// duomax command line: coefficient fitting, softmax/GELU evaluation, error
// sweeps, dual-mode comparison and configuration dumps. Exit codes: 0 on
// success, 1 when a configured threshold fails, 2 on usage or input errors.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "duomax/analysis.hpp"
#include "duomax/gelu.hpp"
#include "duomax/io.hpp"
#include "duomax/pwl.hpp"
#include "duomax/reference.hpp"
#include "duomax/softmax.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitThreshold = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
    std::string config_path;
    std::optional<int> n;
    std::optional<std::string> rounding;
    std::optional<uint64_t> seed;
    std::optional<std::string> exp_table_path;
    std::optional<std::string> log_table_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags override it)");
        cmd->add_option("--n", n, "vector width (power of two)");
        cmd->add_option("--rounding", rounding, "floor | nearest-even");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--exp-table", exp_table_path, "exp2 coefficient file");
        cmd->add_option("--log-table", log_table_path, "log2p1 coefficient file");
    }

    duomax::RunConfig resolve() const {
        duomax::RunConfig rc;
        if (!config_path.empty()) rc = duomax::load_run_config(config_path);
        if (n) rc.n = *n;
        if (rounding) rc.rounding = duomax::rounding_from_string(*rounding);
        if (seed) rc.seed = *seed;
        if (exp_table_path) rc.exp_table_path = *exp_table_path;
        if (log_table_path) rc.log_table_path = *log_table_path;
        return rc;
    }
};

int cmd_fit(const std::string& fn, int segments, const std::string& out_path,
            const std::string& method) {
    duomax::PwlFit fit;
    if (fn == "exp2")
        fit = duomax::fit_pwl([](double v) { return std::exp2(v); }, segments, 0.0, 1.0, "exp2");
    else
        fit = duomax::fit_pwl([](double m) { return std::log2(1.0 + m); }, segments, 0.0, 1.0,
                              "log2p1");

    duomax::PwlTable table =
        (method == "knots")
            ? duomax::quantize_knots(fit.table)
            : duomax::quantize_coeffs(fit.table, duomax::formats::q1_14, duomax::formats::q1_14,
                                      duomax::RoundingMode::NearestEven);
    std::cout << "fit " << fn << ": segments=" << segments
              << " max_abs_err=" << duomax::format_sig12(fit.max_abs_err) << "\n";
    if (!out_path.empty()) {
        duomax::save_pwl_table(table, out_path);
        std::cout << "wrote " << out_path << "\n";
    } else {
        std::cout << duomax::pwl_table_to_json(table).dump(2) << "\n";
    }
    return kExitOk;
}

void write_eval_header(std::ostream& out, int m) {
    for (int i = 0; i < m; ++i) out << "raw_" << i << ",";
    for (int i = 0; i < m; ++i) out << "value_" << i << (i + 1 < m ? "," : "");
    out << "\n";
}

void write_eval_row(std::ostream& out, const std::vector<duomax::FxWord>& row) {
    for (const duomax::FxWord& w : row) out << w.raw << ",";
    for (size_t i = 0; i < row.size(); ++i)
        out << duomax::format_sig12(row[i].value()) << (i + 1 < row.size() ? "," : "");
    out << "\n";
}

std::vector<std::vector<duomax::FxWord>> load_eval_inputs(const std::string& path, bool raw,
                                                          duomax::QFormat fmt,
                                                          duomax::RoundingMode rounding,
                                                          size_t expected, bool exact_width) {
    std::vector<std::vector<duomax::FxWord>> rows;
    std::vector<int> lines;
    if (raw) {
        for (const duomax::CsvRawRow& r : duomax::read_csv_raw_rows(path)) {
            std::vector<duomax::FxWord> row;
            for (int64_t v : r.values) {
                if (v < fmt.min_raw() || v > fmt.max_raw())
                    throw std::runtime_error(path + ":" + std::to_string(r.line) +
                                             ": raw value out of format range");
                row.push_back(duomax::FxWord{v, fmt, false});
            }
            rows.push_back(std::move(row));
            lines.push_back(r.line);
        }
    } else {
        for (const duomax::CsvRow& r : duomax::read_csv_rows(path)) {
            std::vector<duomax::FxWord> row;
            for (double v : r.values) row.push_back(duomax::quantize(v, fmt, rounding));
            rows.push_back(std::move(row));
            lines.push_back(r.line);
        }
    }
    for (size_t i = 0; i < rows.size(); ++i) {
        bool bad = exact_width ? rows[i].size() != expected : rows[i].size() > expected;
        if (bad)
            throw std::runtime_error(path + ":" + std::to_string(lines[i]) + ": expected " +
                                     (exact_width ? "exactly " : "at most ") +
                                     std::to_string(expected) + " values, got " +
                                     std::to_string(rows[i].size()));
    }
    return rows;
}

int cmd_eval(const std::string& what, const CommonOpts& opts, const std::string& input_path,
             const std::string& output_path, bool raw, const std::string& trace_path) {
    duomax::RunConfig rc = opts.resolve();
    duomax::UnitConfig cfg = duomax::make_unit_config(rc);

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!output_path.empty()) {
        file_out.open(output_path);
        if (!file_out) throw std::runtime_error("cannot write " + output_path);
        out = &file_out;
    }

    duomax::json traces = duomax::json::array();
    if (what == "softmax") {
        auto rows = load_eval_inputs(input_path, raw, cfg.input_fmt, cfg.rounding,
                                     size_t(cfg.n), true);
        write_eval_header(*out, cfg.n);
        for (const auto& row : rows) {
            duomax::SoftmaxResult res = duomax::softmax_forward(row, cfg, duomax::Mode::Normal);
            write_eval_row(*out, res.outputs);
            if (!trace_path.empty()) traces.push_back(duomax::trace_to_json(res.trace));
        }
    } else {
        auto rows = load_eval_inputs(input_path, raw, cfg.input_fmt, cfg.rounding,
                                     size_t(cfg.n) / 2, false);
        std::vector<std::vector<duomax::FxWord>> outs = duomax::gelu_batch(rows, cfg);
        size_t width = 0;
        for (const auto& r : rows) width = std::max(width, r.size());
        write_eval_header(*out, int(width));
        for (const auto& r : outs) write_eval_row(*out, r);
    }
    if (!trace_path.empty()) {
        std::ofstream tf(trace_path);
        if (!tf) throw std::runtime_error("cannot write " + trace_path);
        tf << traces.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_sweep_gelu(const CommonOpts& opts, duomax::SweepSpec spec, const std::string& reference,
                   std::optional<double> max_err, std::optional<double> max_mae,
                   const std::string& report_path, const std::string& csv_path) {
    duomax::RunConfig rc = opts.resolve();
    spec.seed = rc.seed;
    duomax::UnitConfig cfg = duomax::make_unit_config(rc);
    duomax::GeluReference ref =
        reference == "erf" ? duomax::GeluReference::Erf : duomax::GeluReference::Tanh;
    duomax::GeluSweepResult res = duomax::sweep_gelu(spec, cfg, ref);

    duomax::json report = duomax::error_report_to_json(res.report);
    report["seed"] = rc.seed;
    report["reference"] = reference;
    std::cout << report.dump(2) << "\n";
    if (!report_path.empty()) {
        std::ofstream rf(report_path);
        if (!rf) throw std::runtime_error("cannot write " + report_path);
        rf << report.dump(2) << "\n";
    }
    if (!csv_path.empty()) duomax::write_gelu_sweep_csv(res, csv_path);

    if (max_err && res.report.max_abs_err > *max_err) {
        std::cout << "FAIL max_abs_err " << duomax::format_sig12(res.report.max_abs_err) << " > "
                  << duomax::format_sig12(*max_err) << "\n";
        return kExitThreshold;
    }
    if (max_mae && res.report.mae > *max_mae) {
        std::cout << "FAIL mae " << duomax::format_sig12(res.report.mae) << " > "
                  << duomax::format_sig12(*max_mae) << "\n";
        return kExitThreshold;
    }
    std::cout << "PASS\n";
    return kExitOk;
}

int cmd_sweep_softmax(const CommonOpts& opts, int64_t vectors, std::optional<double> max_lane_err,
                      std::optional<double> max_norm_gap, const std::string& report_path) {
    duomax::RunConfig rc = opts.resolve();
    duomax::UnitConfig cfg = duomax::make_unit_config(rc);
    duomax::SoftmaxSweepResult res = duomax::sweep_softmax(cfg.n, vectors, rc.seed, cfg);

    duomax::json report{{"n", res.n},
                        {"vectors", res.vectors},
                        {"seed", res.seed},
                        {"lane", duomax::error_report_to_json(res.lane)},
                        {"max_norm_gap", res.max_norm_gap},
                        {"mean_norm_gap", res.mean_norm_gap}};
    std::cout << report.dump(2) << "\n";
    if (!report_path.empty()) {
        std::ofstream rf(report_path);
        if (!rf) throw std::runtime_error("cannot write " + report_path);
        rf << report.dump(2) << "\n";
    }
    if (max_lane_err && res.lane.max_abs_err > *max_lane_err) {
        std::cout << "FAIL lane max_abs_err " << duomax::format_sig12(res.lane.max_abs_err)
                  << " > " << duomax::format_sig12(*max_lane_err) << "\n";
        return kExitThreshold;
    }
    if (max_norm_gap && res.max_norm_gap > *max_norm_gap) {
        std::cout << "FAIL max_norm_gap " << duomax::format_sig12(res.max_norm_gap) << " > "
                  << duomax::format_sig12(*max_norm_gap) << "\n";
        return kExitThreshold;
    }
    std::cout << "PASS\n";
    return kExitOk;
}

int cmd_compare_dual_mode(const CommonOpts& opts, int64_t vectors, int64_t max_diff) {
    duomax::RunConfig rc = opts.resolve();
    duomax::UnitConfig cfg = duomax::make_unit_config(rc);
    int64_t diff = duomax::dual_mode_max_diff(cfg.n, vectors, rc.seed, cfg);
    std::cout << "dual-mode max raw diff over " << vectors << " vectors (n=" << cfg.n
              << "): " << diff << "\n";
    if (diff > max_diff) {
        std::cout << "FAIL max_raw_diff " << diff << " > " << max_diff << "\n";
        return kExitThreshold;
    }
    std::cout << "PASS\n";
    return kExitOk;
}

int cmd_dump_config(const CommonOpts& opts) {
    duomax::RunConfig rc = opts.resolve();
    duomax::UnitConfig cfg = duomax::make_unit_config(rc);
    std::cout << duomax::unit_config_to_json(cfg, rc.seed).dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bit-accurate dual-mode softmax / GELU fixed-point unit simulator"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "fit and quantize a PWL coefficient table");
    std::string fit_fn;
    int fit_segments = 8;
    std::string fit_out, fit_method = "knots";
    fit->add_option("--fn", fit_fn, "function: exp2 | log2p1")
        ->required()
        ->check(CLI::IsMember({"exp2", "log2p1"}));
    fit->add_option("--segments", fit_segments, "segment count (power of two)")
        ->check(CLI::PositiveNumber);
    fit->add_option("--out", fit_out, "output coefficient JSON");
    fit->add_option("--method", fit_method, "quantization: knots | coeffs")
        ->check(CLI::IsMember({"knots", "coeffs"}));

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate softmax or gelu over CSV rows");
    std::string eval_what, eval_input, eval_output, eval_trace;
    bool eval_raw = false;
    CommonOpts eval_opts;
    eval->add_option("what", eval_what, "softmax | gelu")
        ->required()
        ->check(CLI::IsMember({"softmax", "gelu"}));
    eval->add_option("--input", eval_input, "input CSV")->required();
    eval->add_option("--output", eval_output, "output CSV (default stdout)");
    eval->add_flag("--raw", eval_raw, "input cells are raw integer codes");
    eval->add_option("--trace", eval_trace, "dump per-row softmax traces to JSON");
    eval_opts.attach(eval);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "error sweep against a reference");
    sweep->require_subcommand(1);
    auto* sweep_g = sweep->add_subcommand("gelu", "GELU error sweep");
    duomax::SweepSpec gspec;
    std::string g_dist = "grid", g_reference = "tanh", g_report, g_csv, g_trace_file;
    std::optional<double> g_max_err, g_max_mae;
    CommonOpts g_opts;
    sweep_g->add_option("--lo", gspec.lo, "grid lower bound");
    sweep_g->add_option("--hi", gspec.hi, "grid upper bound");
    sweep_g->add_option("--step", gspec.step, "grid step");
    sweep_g->add_option("--samples", gspec.samples, "sample count for --dist normal");
    sweep_g->add_option("--dist", g_dist, "grid | normal | trace")
        ->check(CLI::IsMember({"grid", "normal", "trace"}));
    sweep_g->add_option("--trace-file", g_trace_file, "input trace for --dist trace");
    sweep_g->add_option("--reference", g_reference, "tanh | erf")
        ->check(CLI::IsMember({"tanh", "erf"}));
    sweep_g->add_option("--max-err", g_max_err, "fail if max_abs_err exceeds this");
    sweep_g->add_option("--max-mae", g_max_mae, "fail if mae exceeds this");
    sweep_g->add_option("--report", g_report, "write JSON report");
    sweep_g->add_option("--csv", g_csv, "write per-point CSV table");
    g_opts.attach(sweep_g);

    auto* sweep_s = sweep->add_subcommand("softmax", "softmax error sweep on random vectors");
    int64_t s_vectors = 10000;
    std::optional<double> s_max_lane, s_max_norm;
    std::string s_report;
    CommonOpts s_opts;
    sweep_s->add_option("--vectors", s_vectors, "random vector count");
    sweep_s->add_option("--max-lane-err", s_max_lane, "fail if lane max_abs_err exceeds this");
    sweep_s->add_option("--max-norm-gap", s_max_norm, "fail if max |sum-1| exceeds this");
    sweep_s->add_option("--report", s_report, "write JSON report");
    s_opts.attach(sweep_s);

    // compare
    auto* compare = app.add_subcommand("compare", "consistency comparisons");
    compare->require_subcommand(1);
    auto* cmp_dual = compare->add_subcommand("dual-mode",
                                             "pair mode vs width-2 normal mode, bit-exact");
    int64_t c_vectors = 10000;
    int64_t c_max_diff = 0;
    CommonOpts c_opts;
    cmp_dual->add_option("--vectors", c_vectors, "random vector count");
    cmp_dual->add_option("--max-diff", c_max_diff, "allowed raw difference");
    c_opts.attach(cmp_dual);

    // dump-config
    auto* dump = app.add_subcommand("dump-config", "print the effective configuration");
    CommonOpts d_opts;
    d_opts.attach(dump);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*fit) return cmd_fit(fit_fn, fit_segments, fit_out, fit_method);
        if (*eval)
            return cmd_eval(eval_what, eval_opts, eval_input, eval_output, eval_raw, eval_trace);
        if (*sweep_g) {
            if (g_dist == "grid") gspec.dist = duomax::SweepSpec::Dist::UniformGrid;
            if (g_dist == "normal") gspec.dist = duomax::SweepSpec::Dist::StandardNormal;
            if (g_dist == "trace") {
                gspec.dist = duomax::SweepSpec::Dist::TraceFile;
                gspec.trace_path = g_trace_file;
            }
            return cmd_sweep_gelu(g_opts, gspec, g_reference, g_max_err, g_max_mae, g_report,
                                  g_csv);
        }
        if (*sweep_s) return cmd_sweep_softmax(s_opts, s_vectors, s_max_lane, s_max_norm, s_report);
        if (*cmp_dual) return cmd_compare_dual_mode(c_opts, c_vectors, c_max_diff);
        if (*dump) return cmd_dump_config(d_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
