#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fblgp/errors.hpp"
#include "fblgp/simulator.hpp"

namespace fblgp {

/// A validated scenario file: which cases to run, where to write, and the
/// resolved simulation settings.
struct RunConfig {
    std::vector<CaseId> cases{kAllCases.begin(), kAllCases.end()};
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;
    std::map<std::string, nlohmann::json> overrides;  // as written, in key order
    SimulationSettings settings;
};

namespace config_detail {

using nlohmann::json;

inline std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

inline bool is_bare_word(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == ',' || c == '/';
    });
}

inline double number(const std::string& key, const json& v) {
    if (!v.is_number()) throw OutOfRange(key, "expected a number");
    return v.get<double>();
}

inline double positive(const std::string& key, const json& v) {
    const double x = number(key, v);
    if (!(x > 0.0)) throw OutOfRange(key, "must be > 0");
    return x;
}

inline double non_negative(const std::string& key, const json& v) {
    const double x = number(key, v);
    if (!(x >= 0.0)) throw OutOfRange(key, "must be >= 0");
    return x;
}

inline long long integer(const std::string& key, const json& v, long long min) {
    if (!v.is_number_integer()) throw OutOfRange(key, "expected an integer");
    const long long x = v.get<long long>();
    if (x < min) throw OutOfRange(key, "must be >= " + std::to_string(min));
    return x;
}

inline bool boolean(const std::string& key, const json& v) {
    if (!v.is_boolean()) throw OutOfRange(key, "expected true or false");
    return v.get<bool>();
}

inline std::string string(const std::string& key, const json& v) {
    if (!v.is_string()) throw OutOfRange(key, "expected a string");
    return v.get<std::string>();
}

inline Vector vector(const std::string& key, const json& v) {
    if (!v.is_array() || v.empty()) throw OutOfRange(key, "expected a non-empty list of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(key, v[i]);
    return out;
}

inline Matrix matrix(const std::string& key, const json& v) {
    if (!v.is_array() || v.empty()) throw OutOfRange(key, "expected a list of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) throw OutOfRange(key, "expected a list of rows");
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_array() || v[i].size() != cols) throw OutOfRange(key, "rows must have equal length");
        for (std::size_t j = 0; j < cols; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = number(key, v[i][j]);
    }
    return out;
}

inline std::vector<CaseId> cases(const std::string& key, const json& v) {
    std::string letters;
    if (v.is_string()) {
        letters = v.get<std::string>();
    } else if (v.is_array()) {
        for (const json& item : v) letters += string(key, item);
    } else {
        throw OutOfRange(key, "expected case letters such as a,b,c");
    }
    std::set<CaseId> seen;
    for (char c : letters) {
        if (c == ',' || c == ' ') continue;
        const auto id = case_from_char(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (!id) throw OutOfRange(key, std::string("unknown case '") + c + "'");
        seen.insert(*id);
    }
    if (seen.empty()) throw OutOfRange(key, "case list is empty");
    return {seen.begin(), seen.end()};
}

inline void apply(RunConfig& cfg, const std::string& key, const json& v) {
    SimulationSettings& s = cfg.settings;
    if (key == "cases") cfg.cases = cases(key, v);
    else if (key == "out") cfg.out_dir = string(key, v);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer(key, v, 0));
    else if (key == "plant") {
        s.plant = string(key, v);
        if (s.plant != benchmark::kName) throw OutOfRange(key, "only '" + std::string(benchmark::kName) + "' is built in");
    }
    else if (key == "amplitude") s.amplitude = positive(key, v);
    else if (key == "omega") s.omega = positive(key, v);
    else if (key == "duration") {
        s.duration = positive(key, v);
        if (s.duration > benchmark::kDisturbanceOff) throw OutOfRange(key, "the disturbance is defined up to 30 s");
    }
    else if (key == "h") {
        s.h = positive(key, v);
        if (s.h > 0.1) throw OutOfRange(key, "step must be <= 0.1 s");
    }
    else if (key == "w0") s.w0 = vector(key, v);
    else if (key == "xdot_mode") {
        const std::string mode = string(key, v);
        if (mode == "exact") s.xdot_mode = XdotMode::exact;
        else if (mode == "finite_difference") s.xdot_mode = XdotMode::finite_difference;
        else throw OutOfRange(key, "expected exact or finite_difference");
    }
    else if (key == "metric_transient") s.metric_transient = non_negative(key, v);
    else if (key == "paper_literal_gp_sign") s.paper_literal_gp_sign = boolean(key, v);
    else if (key == "gains") s.controller.gains = vector(key, v);
    else if (key == "m") s.controller.robustness_gain = non_negative(key, v);
    else if (key == "rho") s.controller.boundary_layer = positive(key, v);
    else if (key == "Q") s.controller.q = matrix(key, v);
    else if (key == "R") s.controller.r = non_negative(key, v);
    else if (key == "m_auto") s.controller.m_auto = boolean(key, v);
    else if (key == "gp_enabled") s.gp_enabled = boolean(key, v);
    else if (key == "rob_enabled") s.rob_enabled = boolean(key, v);
    else if (key == "cl_enabled") s.cl_enabled = boolean(key, v);
    else if (key == "gamma_w") s.learning.gamma_w = positive(key, v);
    else if (key == "stack_capacity") s.learning.stack_capacity = static_cast<std::size_t>(integer(key, v, 1));
    else if (key == "record_period") s.learning.record_period = positive(key, v);
    else if (key == "gp_window") s.gp.window = static_cast<std::size_t>(integer(key, v, 2));
    else if (key == "gp_sample_period") s.gp.sample_period = positive(key, v);
    else if (key == "gp_refit_period") s.gp.refit_period = positive(key, v);
    else if (key == "gp_starts") s.gp.starts = static_cast<int>(integer(key, v, 0));
    else if (key == "gp_max_iterations") s.gp.max_iterations = static_cast<int>(integer(key, v, 1));
    else if (key == "gp_lengthscale_mode") {
        const std::string mode = string(key, v);
        if (mode == "shared") s.gp.lengthscale_mode = LengthscaleMode::shared;
        else if (mode == "per_dim") s.gp.lengthscale_mode = LengthscaleMode::per_dim;
        else throw OutOfRange(key, "expected shared or per_dim");
    }
    else if (key == "gp_sigma_n_floor") s.gp.sigma_n_floor = positive(key, v);
    else throw UnknownKey(key);
}

}  // namespace config_detail

/// Cross-key checks that need the full picture (dimensions, Hurwitz gains).
inline void validate(const RunConfig& cfg) {
    const SimulationSettings& s = cfg.settings;
    const CaseSetup probe = make_case(CaseId::a, s);
    const Eigen::Index n = probe.scenario.plant.order();
    const Eigen::Index m = probe.scenario.plant.num_weights();
    if (s.controller.gains.size() != n) throw OutOfRange("gains", "need " + std::to_string(n) + " gains");
    if (s.controller.q.rows() != n || s.controller.q.cols() != n)
        throw OutOfRange("Q", "must be " + std::to_string(n) + "x" + std::to_string(n));
    if ((s.controller.q - s.controller.q.transpose()).norm() > 1e-12 * s.controller.q.norm())
        throw OutOfRange("Q", "must be symmetric");
    if (Eigen::LLT<Matrix>(s.controller.q).info() != Eigen::Success) throw OutOfRange("Q", "must be positive definite");
    if (s.w0.size() != m) throw OutOfRange("w0", "need " + std::to_string(m) + " weights");
    if (s.learning.stack_capacity < static_cast<std::size_t>(m))
        throw OutOfRange("stack_capacity", "must be >= the number of weights (" + std::to_string(m) + ")");
    if (!is_hurwitz(closed_loop_matrix(s.controller.gains)))
        throw OutOfRange("gains", "closed loop A - bk is not Hurwitz");
}

/// Parses `key = value` lines. Values are JSON (numbers, true/false,
/// "strings", [lists]); a bare word such as `a,b,c` is taken as a string.
/// `#` starts a comment.
inline RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string content = config_detail::trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string key = config_detail::trim(std::string_view(content).substr(0, eq));
        const std::string raw = config_detail::trim(std::string_view(content).substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "missing key");
        if (raw.empty()) throw ParseError(line_no, "missing value for '" + key + "'");
        if (cfg.overrides.count(key)) throw ParseError(line_no, "duplicate key '" + key + "'");

        nlohmann::json value = nlohmann::json::parse(raw, nullptr, /*allow_exceptions=*/false);
        if (value.is_discarded()) {
            if (!config_detail::is_bare_word(raw)) throw ParseError(line_no, "cannot parse value of '" + key + "'");
            value = raw;
        }
        config_detail::apply(cfg, key, value);
        cfg.overrides[key] = value;
    }
    validate(cfg);
    return cfg;
}

/// Every setting with its resolved value, for echoing into reports.
inline std::vector<std::pair<std::string, std::string>> resolved_settings(const RunConfig& cfg) {
    using nlohmann::json;
    const SimulationSettings& s = cfg.settings;
    auto vec = [](const Vector& v) {
        json a = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
        return a;
    };
    auto mat = [&](const Matrix& m) {
        json a = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
        return a;
    };
    auto flag = [](const std::optional<bool>& b) { return b ? json(*b) : json("per_case"); };
    std::string letters;
    for (CaseId id : cfg.cases) letters += to_char(id);

    std::vector<std::pair<std::string, json>> items{
        {"cases", letters},
        {"out", cfg.out_dir.string()},
        {"seed", cfg.seed},
        {"plant", s.plant},
        {"amplitude", s.amplitude},
        {"omega", s.omega},
        {"duration", s.duration},
        {"h", s.h},
        {"w0", vec(s.w0)},
        {"xdot_mode", s.xdot_mode == XdotMode::exact ? "exact" : "finite_difference"},
        {"metric_transient", s.metric_transient},
        {"paper_literal_gp_sign", s.paper_literal_gp_sign},
        {"gains", vec(s.controller.gains)},
        {"m", s.controller.robustness_gain},
        {"rho", s.controller.boundary_layer},
        {"Q", mat(s.controller.q)},
        {"R", s.controller.r},
        {"m_auto", s.controller.m_auto},
        {"cl_enabled", flag(s.cl_enabled)},
        {"gp_enabled", flag(s.gp_enabled)},
        {"rob_enabled", flag(s.rob_enabled)},
        {"gamma_w", s.learning.gamma_w},
        {"stack_capacity", s.learning.stack_capacity},
        {"record_period", s.learning.record_period},
        {"gp_window", s.gp.window},
        {"gp_sample_period", s.gp.sample_period},
        {"gp_refit_period", s.gp.refit_period},
        {"gp_starts", s.gp.starts},
        {"gp_max_iterations", s.gp.max_iterations},
        {"gp_lengthscale_mode", s.gp.lengthscale_mode == LengthscaleMode::shared ? "shared" : "per_dim"},
        {"gp_sigma_n_floor", s.gp.sigma_n_floor},
    };
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(items.size());
    for (auto& [k, v] : items) out.emplace_back(k, v.dump());
    return out;
}

}  // namespace fblgp
