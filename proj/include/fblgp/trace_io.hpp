#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "fblgp/config.hpp"
#include "fblgp/errors.hpp"
#include "fblgp/simulator.hpp"

namespace fblgp {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("cannot parse number '" + std::string(s) + "'");
    return v;
}

/// t, x1..xn, x1_ref..xn_ref, e1..en, u_total, u_fbl, u_sfb, u_ref, u_gp,
/// u_rob, w1..wm, gp_mean, gp_var, d_true, V, Vdot, stage
inline std::vector<std::string> trace_columns(int n, int m) {
    std::vector<std::string> cols{"t"};
    for (int i = 1; i <= n; ++i) cols.push_back("x" + std::to_string(i));
    for (int i = 1; i <= n; ++i) cols.push_back("x" + std::to_string(i) + "_ref");
    for (int i = 1; i <= n; ++i) cols.push_back("e" + std::to_string(i));
    for (const char* c : {"u_total", "u_fbl", "u_sfb", "u_ref", "u_gp", "u_rob"}) cols.emplace_back(c);
    for (int i = 1; i <= m; ++i) cols.push_back("w" + std::to_string(i));
    for (const char* c : {"gp_mean", "gp_var", "d_true", "V", "Vdot", "stage"}) cols.emplace_back(c);
    return cols;
}

inline void write_trace(const Trace& trace, std::ostream& out) {
    const auto cols = trace_columns(trace.order, trace.num_weights);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    std::string line;
    for (const TraceRow& r : trace.rows) {
        line.clear();
        auto put = [&line](double v) {
            if (!line.empty()) line += ',';
            line += format_double(v);
        };
        put(r.t);
        for (const Vector* v : {&r.x, &r.x_ref, &r.e})
            for (Eigen::Index i = 0; i < v->size(); ++i) put((*v)(i));
        for (double v : {r.u.u_total, r.u.u_fbl, r.u.u_sfb, r.u.u_ref, r.u.u_gp, r.u.u_rob}) put(v);
        for (Eigen::Index i = 0; i < r.w.size(); ++i) put(r.w(i));
        for (double v : {r.gp_mean, r.gp_var, r.d_true, r.v, r.vdot}) put(v);
        line += ',';
        line += std::to_string(r.stage);
        out << line << '\n';
    }
}

inline void emit_trace(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_trace(trace, out);
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Reads a CSV written by write_trace. Only the CSV columns are restored.
inline Trace read_trace(std::istream& in, int n, int m) {
    const auto cols = trace_columns(n, m);
    std::string line;
    if (!std::getline(in, line)) throw IoError("trace: missing header");
    {
        std::vector<std::string> header;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
        if (header != cols) throw IoError("trace: header does not match the schema");
    }
    Trace trace;
    trace.order = n;
    trace.num_weights = m;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cells.size() != cols.size()) throw IoError("trace: wrong column count");
        std::size_t c = 0;
        auto next = [&] { return parse_double(cells[c++]); };
        auto next_vec = [&](int len) {
            Vector v(len);
            for (int i = 0; i < len; ++i) v(i) = next();
            return v;
        };
        TraceRow r;
        r.t = next();
        r.x = next_vec(n);
        r.x_ref = next_vec(n);
        r.e = next_vec(n);
        r.u.u_total = next();
        r.u.u_fbl = next();
        r.u.u_sfb = next();
        r.u.u_ref = next();
        r.u.u_gp = next();
        r.u.u_rob = next();
        r.w = next_vec(m);
        r.gp_mean = next();
        r.gp_var = next();
        r.d_true = next();
        r.v = next();
        r.vdot = next();
        r.stage = static_cast<int>(next());
        trace.rows.push_back(std::move(r));
    }
    if (trace.rows.size() >= 2) trace.h = trace.rows[1].t - trace.rows[0].t;
    return trace;
}

/// One pass/fail ordering assertion between two cases.
struct ReportCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool passed = false;
};

struct Report {
    std::vector<Metrics> metrics;
    std::vector<ReportCheck> checks;
    std::map<std::string, double> ratios;

    bool all_passed() const {
        for (const ReportCheck& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

/// Cross-case comparisons; each only when both of its cases ran.
inline Report build_report(std::vector<Metrics> metrics) {
    if (metrics.empty()) throw InvalidArgument("build_report: no metrics");
    Report rep;
    rep.metrics = std::move(metrics);
    auto find = [&](CaseId id) -> const Metrics* {
        for (const Metrics& m : rep.metrics)
            if (m.case_id == id) return &m;
        return nullptr;
    };
    const Metrics* a = find(CaseId::a);
    const Metrics* b = find(CaseId::b);
    const Metrics* c = find(CaseId::c);
    const Metrics* d = find(CaseId::d);
    const Metrics* e = find(CaseId::e);

    if (a && b) rep.checks.push_back({"a_gt_b_overall", a->overall_pct, b->overall_pct, a->overall_pct > b->overall_pct});
    if (c && e) rep.checks.push_back({"c_gt_e_stage3", c->stage_pct[2], e->stage_pct[2], c->stage_pct[2] > e->stage_pct[2]});
    if (d && e)
        rep.checks.push_back({"d_within_2x_e_stage3", d->stage_pct[2], 2.0 * e->stage_pct[2],
                              d->stage_pct[2] <= 2.0 * e->stage_pct[2]});
    if (b && e && b->stage_pct[0] > 0.0) rep.ratios["e_stage3_over_b_stage1"] = e->stage_pct[2] / b->stage_pct[0];
    if (a && b && a->overall_pct > 0.0) rep.ratios["b_over_a_overall"] = b->overall_pct / a->overall_pct;
    return rep;
}

/// Line-oriented key-value report; see README for the record layout.
inline void write_report(const Report& rep, const RunConfig& cfg, std::ostream& out) {
    out << "# fblgp report v1\n";
    for (const auto& [key, value] : resolved_settings(cfg)) out << "config " << key << " = " << value << '\n';
    static const char* stage_names[] = {"1", "2", "3"};
    for (const Metrics& m : rep.metrics) {
        for (int s = 0; s < 3; ++s)
            out << "metric case=" << to_char(m.case_id) << " stage=" << stage_names[s]
                << " avg_tracking_error_pct=" << format_double(m.stage_pct[s]) << '\n';
        out << "metric case=" << to_char(m.case_id) << " stage=overall avg_tracking_error_pct="
            << format_double(m.overall_pct) << '\n';
        out << "weight_error case=" << to_char(m.case_id) << " final_inf_norm=" << format_double(m.final_weight_error)
            << '\n';
    }
    for (const auto& [name, value] : rep.ratios) out << "ratio name=" << name << " value=" << format_double(value) << '\n';
    std::size_t failed = 0;
    for (const ReportCheck& c : rep.checks) {
        failed += c.passed ? 0 : 1;
        out << "check name=" << c.name << " lhs=" << format_double(c.lhs) << " rhs=" << format_double(c.rhs)
            << " result=" << (c.passed ? "pass" : "fail") << '\n';
    }
    out << "summary runs=" << rep.metrics.size() << " checks=" << rep.checks.size() << " failed=" << failed << '\n';
}

inline void print_summary_table(const Report& rep, std::ostream& out) {
    out << "case   stage1 %   stage2 %   stage3 %   overall %   |w-w*|inf\n";
    out << std::fixed << std::setprecision(4);
    for (const Metrics& m : rep.metrics) {
        out << "  " << to_char(m.case_id) << "  " << std::setw(9) << m.stage_pct[0] << "  " << std::setw(9)
            << m.stage_pct[1] << "  " << std::setw(9) << m.stage_pct[2] << "  " << std::setw(10) << m.overall_pct
            << "  " << std::setw(10) << m.final_weight_error << '\n';
    }
    for (const auto& [name, value] : rep.ratios) out << "ratio " << name << " = " << value << '\n';
    for (const ReportCheck& c : rep.checks)
        out << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.lhs << " vs " << c.rhs << ")\n";
    out.unsetf(std::ios::floatfield);
    out << std::setprecision(6);
}

inline Report emit_report(const std::vector<Metrics>& metrics, const RunConfig& cfg,
                          const std::filesystem::path& path, std::ostream& console) {
    Report rep = build_report(metrics);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_report(rep, cfg, out);
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
    print_summary_table(rep, console);
    return rep;
}

}  // namespace fblgp
