#ifndef WAAM_RESULTS_IO_HPP
#define WAAM_RESULTS_IO_HPP

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "waam/experiment_harness.hpp"

namespace waam::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ValidationError(context + ": '" + std::string(text) + "' is not a number");
    return value;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline std::ofstream open_for_write(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

inline void finish(std::ofstream& out, const fs::path& path)
{
    out.flush();
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const json& doc)
{
    auto out = open_for_write(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

inline json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// --- calibration samples ---------------------------------------------------

/// Reads a `v_t,dh` file. Errors name the offending 1-based line.
inline std::vector<CalibrationSample> read_calibration_samples(std::istream& in,
                                                               const std::string& source = "<samples>")
{
    std::vector<CalibrationSample> samples;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#')
            continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ValidationError(where + ": expected two comma-separated columns");
        if (!header_seen) {
            std::string h = line;
            std::erase_if(h, [](char c) { return c == ' ' || c == '\t'; });
            if (h != "v_t,dh")
                throw ValidationError(where + ": expected header 'v_t,dh'");
            header_seen = true;
            continue;
        }
        CalibrationSample s;
        s.v_t = parse_double(std::string_view(line).substr(0, comma), where);
        s.dh = parse_double(std::string_view(line).substr(comma + 1), where);
        if (!(s.v_t > 0.0) || !(s.dh > 0.0))
            throw DomainError(where + ": v_t and dh must be strictly positive");
        samples.push_back(s);
    }
    if (!header_seen)
        throw ValidationError(source + ": empty sample file (missing 'v_t,dh' header)");
    return samples;
}

inline std::vector<CalibrationSample> read_calibration_samples(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open sample file '" + path.string() + "'");
    return read_calibration_samples(in, path.string());
}

inline void write_calibration_samples(const fs::path& path, const std::vector<CalibrationSample>& samples)
{
    auto out = open_for_write(path);
    out << "v_t,dh\n";
    for (const auto& s : samples)
        out << format_double(s.v_t) << ',' << format_double(s.dh) << '\n';
    finish(out, path);
}

// --- coefficients ------------------------------------------------------------

inline json to_json(const CalibrationResult& r)
{
    return json{{"a", r.coeffs.a},
                {"b", r.coeffs.b},
                {"label", r.coeffs.label},
                {"r_squared", r.r_squared},
                {"residual_norm", r.residual_norm},
                {"sample_count", r.sample_count}};
}

inline void write_coefficients(const fs::path& path, const CalibrationResult& r) { write_json(path, to_json(r)); }

inline ModelCoefficients read_coefficients(const fs::path& path)
{
    const json doc = read_json(path);
    try {
        return {doc.at("a").get<double>(), doc.at("b").get<double>(), doc.value("label", std::string{})};
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// --- plans -------------------------------------------------------------------

inline json to_json(const ProcessBounds& b)
{
    return json{{"v_t_min", b.v_t_min}, {"v_t_max", b.v_t_max}, {"dh_min", b.dh_min}, {"dh_max", b.dh_max}};
}

inline json plan_document(const NominalPlan& plan, const ProcessBounds& bounds)
{
    int tilted = 0;
    json layers = json::array();
    for (const auto& lp : plan.layers) {
        tilted += lp.tilted ? 1 : 0;
        layers.push_back({{"layer", lp.layer_index},
                          {"tilted", lp.tilted},
                          {"tilt_increment", lp.tilt_increment},
                          {"segment_position", to_std(lp.segment_positions)},
                          {"h_d", to_std(lp.h_d)},
                          {"dh_nom", to_std(lp.dh_nom)}});
    }
    return json{{"theta_max", plan.theta_max},
                {"theta_step", plan.geometry.theta_step},
                {"p_rot", plan.geometry.p_rot},
                {"length", plan.geometry.length},
                {"n_segments", plan.geometry.segment_count()},
                {"r_of_segment", to_std(plan.geometry.r_of_segment)},
                {"bounds", to_json(bounds)},
                {"layer_count", plan.layers.size()},
                {"tilted_layer_count", tilted},
                {"layers", std::move(layers)}};
}

// --- traces ------------------------------------------------------------------

inline json trace_document(const RunTrace& t)
{
    json layers = json::array();
    for (const auto& r : t.layers) {
        json rec{{"layer", r.layer},
                 {"rmse", r.rmse},
                 {"max_abs_e", r.max_abs_e},
                 {"lambda", r.lambda},
                 {"standoff_exceeded", r.standoff_exceeded},
                 {"h_d", to_std(r.h_d)},
                 {"dh_target", to_std(r.dh_target)},
                 {"v_t_applied", to_std(r.v_t_applied)},
                 {"h_measured", to_std(r.h_measured)},
                 {"h_true", to_std(r.h_true)},
                 {"e", to_std(r.e)}};
        if (t.feedback == Feedback::closed_loop)
            rec["solver"] = {{"objective", r.objective},
                             {"iterations", r.solver_iterations},
                             {"status", r.solver_status},
                             {"active_bounds", r.active_bound_count}};
        layers.push_back(std::move(rec));
    }
    return json{{"scenario", t.scenario},
                {"feedback", to_string(t.feedback)},
                {"planning_model", to_string(t.planning_model)},
                {"seed", t.seed},
                {"n_segments", t.n_segments},
                {"theta_max", t.theta_max},
                {"theta_used", t.theta_used},
                {"bounds", to_json(t.bounds)},
                {"layers", std::move(layers)}};
}

/// Per-layer summary `layer,rmse,max_abs_e,lambda`.
inline void write_trace_csv(const fs::path& path, const RunTrace& t)
{
    if (t.layers.empty())
        throw ValidationError("refusing to export empty trace '" + t.scenario + "'");
    auto out = open_for_write(path);
    out << "layer,rmse,max_abs_e,lambda\n";
    for (const auto& r : t.layers)
        out << r.layer << ',' << format_double(r.rmse) << ',' << format_double(r.max_abs_e) << ','
            << format_double(r.lambda) << '\n';
    finish(out, path);
}

struct TraceCsvRow {
    int layer = 0;
    double rmse = 0.0;
    double max_abs_e = 0.0;
    double lambda = 0.0;
};

inline std::vector<TraceCsvRow> read_trace_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "layer,rmse,max_abs_e,lambda")
        throw ValidationError(path.string() + ":1: unexpected header");
    std::vector<TraceCsvRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        for (auto pos = rest.find(','); pos != std::string_view::npos; pos = rest.find(',')) {
            cols.push_back(rest.substr(0, pos));
            rest.remove_prefix(pos + 1);
        }
        cols.push_back(rest);
        if (cols.size() != 4)
            throw ValidationError(where + ": expected 4 columns");
        TraceCsvRow row;
        row.layer = static_cast<int>(parse_double(cols[0], where));
        row.rmse = parse_double(cols[1], where);
        row.max_abs_e = parse_double(cols[2], where);
        row.lambda = parse_double(cols[3], where);
        rows.push_back(row);
    }
    return rows;
}

// --- comparison ----------------------------------------------------------------

inline json report_document(const ComparisonReport& rep)
{
    json rows = json::array();
    for (const auto& r : rep.rows) {
        json row{{"scenario", r.scenario}, {"max_rmse", r.max_rmse}, {"final_rmse", r.final_rmse}};
        if (r.reference)
            row["physical_build"] = {{"max_rmse", r.reference->max_rmse},
                                     {"final_rmse", r.reference->final_rmse}};
        rows.push_back(std::move(row));
    }
    json per_layer = json::array();
    for (Eigen::Index i = 0; i < rep.per_layer_rmse.rows(); ++i)
        per_layer.push_back(to_std(rep.per_layer_rmse.row(i).transpose()));
    return json{{"seed", rep.seed},
                {"n_segments", rep.n_segments},
                {"rows", std::move(rows)},
                {"per_layer_rmse", std::move(per_layer)}};
}

/// `layer,<scenario>...` table of per-layer RMSE.
inline void write_report_csv(const fs::path& path, const ComparisonReport& rep)
{
    auto out = open_for_write(path);
    out << "layer";
    for (const auto& r : rep.rows)
        out << ',' << r.scenario;
    out << '\n';
    for (Eigen::Index i = 0; i < rep.per_layer_rmse.rows(); ++i) {
        out << i + 1;
        for (Eigen::Index j = 0; j < rep.per_layer_rmse.cols(); ++j)
            out << ',' << format_double(rep.per_layer_rmse(i, j));
        out << '\n';
    }
    finish(out, path);
}

/// Static SVG line plot of RMSE against layer, one labelled series per column.
inline void write_rmse_plot(const fs::path& path, const ComparisonReport& rep)
{
    constexpr double width = 720, height = 420, left = 70, right = 120, top = 30, bottom = 50;
    static constexpr const char* colours[] = {"#d62728", "#ff7f0e", "#1f77b4", "#2ca02c",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    const Eigen::Index layers = rep.per_layer_rmse.rows();
    const double y_max = std::max(rep.per_layer_rmse.maxCoeff(), 1e-12) * 1.05;
    const double x_span = std::max<double>(static_cast<double>(layers - 1), 1.0);
    auto px = [&](double layer) { return left + (layer - 1.0) / x_span * (width - left - right); };
    auto py = [&](double rmse) { return top + (1.0 - rmse / y_max) * (height - top - bottom); };

    std::ostringstream svg;
    svg << std::fixed << std::setprecision(2);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
        << height - bottom << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = y_max * t / 4.0;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
            << std::setprecision(3) << v << std::setprecision(2) << "</text>\n";
    }
    svg << "<text x=\"" << left << "\" y=\"" << height - bottom + 18 << "\">1</text>\n";
    svg << "<text x=\"" << width - right << "\" y=\"" << height - bottom + 18 << "\" text-anchor=\"end\">"
        << layers << "</text>\n";
    svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\">layer</text>\n";
    svg << "<text x=\"16\" y=\"" << (top + height - bottom) / 2 << "\" transform=\"rotate(-90 16 "
        << (top + height - bottom) / 2 << ")\" text-anchor=\"middle\">layer RMSE (mm)</text>\n";
    for (Eigen::Index j = 0; j < rep.per_layer_rmse.cols(); ++j) {
        const char* colour = colours[j % 8];
        svg << "<polyline class=\"series\" data-label=\"" << rep.rows[static_cast<std::size_t>(j)].scenario
            << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (Eigen::Index i = 0; i < layers; ++i)
            svg << (i ? " " : "") << px(static_cast<double>(i + 1)) << ',' << py(rep.per_layer_rmse(i, j));
        svg << "\"/>\n";
        const double ly = top + 18.0 * static_cast<double>(j);
        svg << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << width - right + 30
            << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << width - right + 36 << "\" y=\"" << ly + 4 << "\">"
            << rep.rows[static_cast<std::size_t>(j)].scenario << "</text>\n";
    }
    svg << "</svg>\n";

    auto out = open_for_write(path);
    out << svg.str();
    finish(out, path);
}

/// Writes every artifact of a run into `dir` and returns the manifest.
inline json export_results(const std::vector<RunTrace>& traces, const fs::path& dir)
{
    if (traces.empty())
        throw ValidationError("export_results: nothing to export");
    for (const auto& t : traces)
        if (t.layers.empty())
            throw ValidationError("export_results: trace '" + t.scenario + "' is empty");

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

    json artifacts = json::array();
    for (const auto& t : traces) {
        const std::string csv = t.scenario + "_layers.csv";
        const std::string doc = t.scenario + "_trace.json";
        write_trace_csv(dir / csv, t);
        write_json(dir / doc, trace_document(t));
        artifacts.push_back(csv);
        artifacts.push_back(doc);
    }
    const ComparisonReport rep = compare_scenarios(traces);
    write_json(dir / "report.json", report_document(rep));
    write_report_csv(dir / "rmse_by_layer.csv", rep);
    write_rmse_plot(dir / "rmse_plot.svg", rep);
    artifacts.push_back("report.json");
    artifacts.push_back("rmse_by_layer.csv");
    artifacts.push_back("rmse_plot.svg");

    json manifest{{"seed", traces.front().seed}, {"artifacts", artifacts}};
    write_json(dir / "manifest.json", manifest);
    return manifest;
}

} // namespace waam::io

#endif // WAAM_RESULTS_IO_HPP
