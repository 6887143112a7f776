#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fblgp/concurrent_learning.hpp"
#include "fblgp/controller.hpp"
#include "fblgp/errors.hpp"
#include "fblgp/gp.hpp"
#include "fblgp/numerics.hpp"
#include "fblgp/plant.hpp"

namespace fblgp {

enum class CaseId { a, b, c, d, e };

inline constexpr std::array<CaseId, 5> kAllCases{CaseId::a, CaseId::b, CaseId::c, CaseId::d, CaseId::e};

inline char to_char(CaseId id) { return static_cast<char>('a' + static_cast<int>(id)); }

inline std::optional<CaseId> case_from_char(char c) {
    if (c < 'a' || c > 'e') return std::nullopt;
    return static_cast<CaseId>(c - 'a');
}

/// How the controller obtains ẋ_n: straight from the plant, or by a
/// backward difference of the sampled x_n.
enum class XdotMode { exact, finite_difference };

struct LearningConfig {
    double gamma_w = 3.0;
    std::size_t stack_capacity = 30;
    double record_period = 0.05;
};

struct GpSchedule {
    std::size_t window = 100;
    double sample_period = 0.1;
    double refit_period = 0.5;
    int starts = 5;
    int max_iterations = 100;
    LengthscaleMode lengthscale_mode = LengthscaleMode::shared;
    double sigma_n_floor = 1e-4;
    Hyperparams initial{1.0, Vector::Constant(1, 0.5), 0.1};
    /// Test hook: replace the GP mean by the exact mismatch d − w̃ᵀφ.
    bool oracle = false;
};

struct Scenario {
    CaseId case_id = CaseId::a;
    Plant plant = benchmark::make_plant(false);
    ReferenceModel reference = ReferenceModel::sinusoid(2, 0.5, 1.0);
    double ref_amplitude = 0.5;
    double duration = 30.0;
    double h = 1e-3;
    double t1 = 10.0;  // end of the disturbance-free training stage
    double t2 = 20.0;  // GP compensation starts
    Vector w0 = benchmark::mismatched_weights();
    Vector x0 = Vector::Zero(2);
    bool cl_enabled = false;
    bool gp_enabled = false;
    bool rob_enabled = true;
    LearningConfig learning;
    GpSchedule gp;
    bool paper_literal_gp_sign = false;
    XdotMode xdot_mode = XdotMode::exact;
    double metric_transient = 2.0;
};

struct TraceRow {
    double t = 0.0;
    Vector x, x_ref, e;
    ControlBreakdown u;
    Vector w;
    double gp_mean = 0.0;
    double gp_var = 0.0;
    double d_true = 0.0;
    double v = 0.0;
    double vdot = 0.0;
    int stage = 1;

    // Not part of the CSV schema.
    double xdot_n_measured = 0.0;
    double mismatch = 0.0;  // w̃ᵀφ − d + u_gp, from measurements
    double robustness_gain = 0.0;
    bool condition_ok = false;
};

struct Trace {
    CaseId case_id = CaseId::a;
    int order = 2;
    int num_weights = 3;
    double h = 1e-3;
    Matrix p;
    Matrix s_tilde;
    std::vector<TraceRow> rows;
};

struct MetricWindows {
    double t1 = 10.0;
    double t2 = 20.0;
    double transient = 2.0;
};

struct Metrics {
    CaseId case_id = CaseId::a;
    std::array<double, 3> stage_pct{};
    double overall_pct = 0.0;
    double final_weight_error = 0.0;
};

struct MonitorResult {
    double v = 0.0;
    double vdot = 0.0;
    bool condition_ok = false;
    bool outside_layer = false;
};

/// V = eᵀPe and V̇ = −eᵀS̃e + 2 bᵀPe (mismatch + u_rob), where the mismatch
/// is the measured gap between predicted and actual ẋ_n.
inline MonitorResult lyapunov_monitor(const Vector& e, double mismatch, double u_rob, const Matrix& p,
                                      const Matrix& s_tilde, double m, double rho) {
    MonitorResult r;
    r.v = e.dot(p * e);
    const double s = switching_value(p, e);
    r.vdot = -e.dot(s_tilde * e) + 2.0 * s * (mismatch + u_rob);
    r.condition_ok = m > std::abs(mismatch);
    r.outside_layer = std::abs(s) > rho;
    return r;
}

inline MonitorResult lyapunov_monitor(const TraceRow& row, const Matrix& p, const Matrix& s_tilde, double rho) {
    return lyapunov_monitor(row.e, row.mismatch, row.u.u_rob, p, s_tilde, row.robustness_gain, rho);
}

/// Mean |e_1| over rows with t in [from, to), as a percentage of the amplitude.
inline double average_tracking_error_pct(const std::vector<TraceRow>& rows, double ref_amplitude, double from,
                                         double to) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const TraceRow& r : rows) {
        if (r.t < from || r.t >= to) continue;
        sum += std::abs(r.e(0));
        ++count;
    }
    if (count == 0) return 0.0;
    return sum / static_cast<double>(count) / ref_amplitude * 100.0;
}

/// Per-stage and overall average tracking error, skipping the first
/// `transient` seconds of every stage.
inline Metrics compute_metrics(const Trace& trace, double ref_amplitude, const MetricWindows& win = {},
                               const std::optional<Vector>& ideal_weights = std::nullopt) {
    if (trace.rows.empty()) throw InvalidArgument("compute_metrics: empty trace");
    Metrics m;
    m.case_id = trace.case_id;
    const double inf = std::numeric_limits<double>::infinity();
    const std::array<std::pair<double, double>, 3> windows{
        std::pair{0.0 + win.transient, win.t1}, std::pair{win.t1 + win.transient, win.t2},
        std::pair{win.t2 + win.transient, inf}};

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const auto [from, to] = windows[s];
        m.stage_pct[s] = average_tracking_error_pct(trace.rows, ref_amplitude, from, to);
        for (const TraceRow& r : trace.rows) {
            if (r.t < from || r.t >= to) continue;
            total += std::abs(r.e(0));
            ++count;
        }
    }
    m.overall_pct = count == 0 ? 0.0 : total / static_cast<double>(count) / ref_amplitude * 100.0;
    if (ideal_weights)
        m.final_weight_error = (trace.rows.back().w - *ideal_weights).lpNorm<Eigen::Infinity>();
    return m;
}

struct CaseResult {
    Trace trace;
    Metrics metrics;
};

namespace detail {

inline std::int64_t steps_for(double period, double h) {
    const auto n = static_cast<std::int64_t>(std::llround(period / h));
    return n < 1 ? 1 : n;
}

inline std::uint64_t fit_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Runs one scenario. The plant state and, while learning is active, the
/// weight estimate are advanced together in a single RK4 state; recording,
/// GP sampling and refits happen between steps.
inline CaseResult run_case(const Scenario& scn, const ControllerConfig& cfg, std::uint64_t seed = 0) {
    const Plant& plant = scn.plant;
    const int n = plant.order();
    const Eigen::Index m = plant.num_weights();

    if (cfg.order() != n) throw InvalidArgument("run_case: gain count differs from plant order");
    if (cfg.gp_enabled != scn.gp_enabled || cfg.rob_enabled != scn.rob_enabled)
        throw InvalidArgument("run_case: controller flags disagree with the scenario");
    if (scn.w0.size() != m) throw InvalidArgument("run_case: initial weights have wrong length");
    if (scn.x0.size() != n) throw InvalidArgument("run_case: initial state has wrong length");
    if (!(scn.h > 0.0) || !(scn.duration > 0.0)) throw InvalidArgument("run_case: h and duration must be positive");
    if (scn.learning.stack_capacity < static_cast<std::size_t>(m))
        throw InvalidArgument("run_case: stack capacity must be at least the number of weights");

    const Matrix p = compute_p(cfg);
    const Matrix s_tilde = lyapunov_weight(cfg);
    const Vector w_star = plant.ideal_weights();
    const double h = scn.h;

    const std::int64_t total_steps = std::llround(scn.duration / h);
    const std::int64_t k1 = std::llround(scn.t1 / h);
    const std::int64_t k2 = std::llround(scn.t2 / h);
    const std::int64_t record_every = detail::steps_for(scn.learning.record_period, h);
    const std::int64_t sample_every = detail::steps_for(scn.gp.sample_period, h);
    const std::int64_t refit_every = detail::steps_for(scn.gp.refit_period, h);
    const double target_sign = scn.paper_literal_gp_sign ? -1.0 : 1.0;

    HistoryStack stack(scn.learning.stack_capacity);
    Hyperparams initial = scn.gp.initial;
    if (scn.gp.lengthscale_mode == LengthscaleMode::per_dim && initial.lengthscales.size() == 1)
        initial.lengthscales = Vector::Constant(n, initial.lengthscales(0));
    GpModel window(n, initial, scn.gp.window);
    std::optional<GpModel> snapshot;
    std::uint64_t fit_count = 0;
    std::int64_t last_fit = -1;
    const FitOptions fit_opts{scn.gp.starts, scn.gp.max_iterations, scn.gp.sigma_n_floor, scn.gp.lengthscale_mode};

    auto true_mismatch = [&](double t, const Vector& x, const Vector& w) {
        return target_sign * (plant.disturbance(t, x) - (w - w_star).dot(plant.regressor(x)));
    };

    Trace trace;
    trace.case_id = scn.case_id;
    trace.order = n;
    trace.num_weights = static_cast<int>(m);
    trace.h = h;
    trace.p = p;
    trace.s_tilde = s_tilde;
    trace.rows.reserve(static_cast<std::size_t>(total_steps + 1));

    Vector z(n + m);
    z.head(n) = scn.x0;
    z.tail(m) = scn.w0;
    double prev_xn = scn.x0(n - 1);
    double running_max_mismatch = 0.0;

    for (std::int64_t k = 0; k <= total_steps; ++k) {
        const double t = static_cast<double>(k) * h;
        const int stage = k < k1 ? 1 : (k < k2 ? 2 : 3);
        const bool learning = scn.cl_enabled && k < k1;

        if (scn.gp_enabled && !scn.gp.oracle && k >= k2 && window.size() >= 2 &&
            (last_fit < 0 || k - last_fit >= refit_every)) {
            try {
                FitResult fitted = fit(window, fit_opts, detail::fit_seed(seed, fit_count));
                window.set_hyper(fitted.model.hyper());
                snapshot = std::move(fitted.model);
            } catch (const AllStartsFailed&) {
                // keep compensating with the previous snapshot
            }
            ++fit_count;
            last_fit = k;
        }
        const bool gp_active = scn.gp_enabled && k >= k2 && (scn.gp.oracle || snapshot.has_value());

        const double robustness_gain =
            cfg.m_auto ? std::clamp(1.1 * running_max_mismatch, 0.1, 10.0) : cfg.robustness_gain;

        auto control_at = [&](double tt, const Vector& x, const Vector& w, const Vector& phi, const Vector& e,
                              double xdot_ref) {
            double gp_mean = 0.0;
            if (gp_active) gp_mean = scn.gp.oracle ? true_mismatch(tt, x, w) : snapshot->predict_mean(x);
            return compute_control_with_gain(cfg, p, w, phi, e, xdot_ref, gp_mean, robustness_gain);
        };

        // Row at the start of the step.
        TraceRow row;
        row.t = t;
        row.stage = stage;
        row.x = z.head(n);
        row.w = z.tail(m);
        const ReferenceSample ref = scn.reference(t);
        row.x_ref = ref.x_ref;
        row.e = ref.x_ref - row.x;
        const Vector phi = plant.regressor(row.x);
        row.u = control_at(t, row.x, row.w, phi, row.e, ref.xdot_n_ref);
        if (gp_active && !scn.gp.oracle) {
            const GpPrediction pred = snapshot->predict(row.x);
            row.gp_mean = pred.mean;
            row.gp_var = pred.variance;
        } else {
            row.gp_mean = row.u.u_gp;
        }
        row.d_true = plant.disturbance(t, row.x);

        const double xdot_exact = plant.last_derivative(t, row.x, row.u.u_total);
        row.xdot_n_measured = (scn.xdot_mode == XdotMode::finite_difference && k > 0)
                                  ? (row.x(n - 1) - prev_xn) / h
                                  : xdot_exact;
        row.mismatch = row.w.dot(phi) + row.u.u_total + row.u.u_gp - row.xdot_n_measured;
        row.robustness_gain = robustness_gain;
        const MonitorResult mon =
            lyapunov_monitor(row.e, row.mismatch, row.u.u_rob, p, s_tilde, robustness_gain, cfg.boundary_layer);
        row.v = mon.v;
        row.vdot = mon.vdot;
        row.condition_ok = mon.condition_ok;
        running_max_mismatch = std::max(running_max_mismatch, std::abs(row.mismatch));

        if (learning && k % record_every == 0) stack.try_record(phi, row.xdot_n_measured, row.u.u_total);
        if (scn.gp_enabled && k >= k1 && k % sample_every == 0)
            window.observe(row.x, target_sign * training_target(row.xdot_n_measured, row.w, phi, row.u.u_total));

        trace.rows.push_back(std::move(row));
        if (k == total_steps) break;

        prev_xn = z(n - 1);
        auto derivative = [&](double tt, const Vector& state) {
            const Vector x = state.head(n);
            const Vector w = state.tail(m);
            const ReferenceSample r = scn.reference(tt);
            const Vector e = r.x_ref - x;
            const Vector ph = plant.regressor(x);
            const ControlBreakdown u = control_at(tt, x, w, ph, e, r.xdot_n_ref);
            Vector dz(n + m);
            dz.head(n) = plant.derivative(tt, x, u.u_total);
            if (learning)
                dz.tail(m) = weight_update_derivative(w, scn.learning.gamma_w, stack, ph, e, p);
            else
                dz.tail(m).setZero();
            return dz;
        };
        z = rk4_step(derivative, t, z, h);
    }

    CaseResult result;
    result.metrics =
        compute_metrics(trace, scn.ref_amplitude, MetricWindows{scn.t1, scn.t2, scn.metric_transient}, w_star);
    result.trace = std::move(trace);
    return result;
}

/// Everything a scenario file can set, resolved to concrete values.
struct SimulationSettings {
    std::string plant = benchmark::kName;
    double amplitude = 0.5;
    double omega = 1.0;
    double duration = 30.0;
    double h = 1e-3;
    Vector w0 = benchmark::mismatched_weights();
    ControllerConfig controller = ControllerConfig::benchmark_defaults();
    LearningConfig learning;
    GpSchedule gp;
    std::optional<bool> cl_enabled;
    std::optional<bool> gp_enabled;
    std::optional<bool> rob_enabled;
    bool paper_literal_gp_sign = false;
    XdotMode xdot_mode = XdotMode::exact;
    double metric_transient = 2.0;
};

struct CaseSetup {
    Scenario scenario;
    ControllerConfig controller;
};

/// Case table: a) fixed mismatched weights, no disturbance; b) concurrent
/// learning, no disturbance; c) learning with disturbance; d) fixed
/// mismatched weights plus GP; e) learning plus GP.
inline CaseSetup make_case(CaseId id, const SimulationSettings& s = {}) {
    if (s.plant != benchmark::kName) throw InvalidArgument("make_case: unknown plant '" + s.plant + "'");
    const bool disturbed = id == CaseId::c || id == CaseId::d || id == CaseId::e;

    CaseSetup out;
    Scenario& scn = out.scenario;
    scn.case_id = id;
    scn.plant = benchmark::make_plant(disturbed);
    scn.reference = ReferenceModel::sinusoid(2, s.amplitude, s.omega);
    scn.ref_amplitude = s.amplitude;
    scn.duration = s.duration;
    scn.h = s.h;
    scn.w0 = s.w0;
    scn.cl_enabled = s.cl_enabled.value_or(id == CaseId::b || id == CaseId::c || id == CaseId::e);
    scn.gp_enabled = s.gp_enabled.value_or(id == CaseId::d || id == CaseId::e);
    scn.rob_enabled = s.rob_enabled.value_or(true);
    scn.learning = s.learning;
    scn.gp = s.gp;
    scn.paper_literal_gp_sign = s.paper_literal_gp_sign;
    scn.xdot_mode = s.xdot_mode;
    scn.metric_transient = s.metric_transient;

    out.controller = s.controller;
    out.controller.gp_enabled = scn.gp_enabled;
    out.controller.rob_enabled = scn.rob_enabled;
    return out;
}

inline CaseResult run_case(CaseId id, const SimulationSettings& s = {}, std::uint64_t seed = 0) {
    const CaseSetup setup = make_case(id, s);
    return run_case(setup.scenario, setup.controller, seed);
}

}  // namespace fblgp
