#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fblgp/simulator.hpp"

namespace fblgp {
namespace {

SimulationSettings short_run(double duration) {
    SimulationSettings s;
    s.duration = duration;
    return s;
}

TEST(CaseIds, RoundTrip) {
    for (CaseId id : kAllCases) EXPECT_EQ(case_from_char(to_char(id)), id);
    EXPECT_FALSE(case_from_char('f').has_value());
}

TEST(MakeCase, FeatureTable) {
    const CaseSetup a = make_case(CaseId::a);
    EXPECT_FALSE(a.scenario.cl_enabled);
    EXPECT_FALSE(a.scenario.gp_enabled);
    EXPECT_EQ(a.scenario.plant.disturbance(15.0, Vector::Zero(2)), 0.0);
    const CaseSetup c = make_case(CaseId::c);
    EXPECT_TRUE(c.scenario.cl_enabled);
    EXPECT_FALSE(c.scenario.gp_enabled);
    EXPECT_EQ(c.scenario.plant.disturbance(15.0, Vector::Zero(2)), 1.0);
    const CaseSetup d = make_case(CaseId::d);
    EXPECT_FALSE(d.scenario.cl_enabled);
    EXPECT_TRUE(d.controller.gp_enabled);
    const CaseSetup e = make_case(CaseId::e);
    EXPECT_TRUE(e.scenario.cl_enabled && e.scenario.gp_enabled);
}

TEST(RunCase, RowCountAndStages) {
    const CaseResult r = run_case(CaseId::a, short_run(21.0));
    ASSERT_EQ(r.trace.rows.size(), 21001u);
    for (const TraceRow& row : r.trace.rows) {
        const int want = row.t < 10.0 - 1e-9 ? 1 : (row.t < 20.0 - 1e-9 ? 2 : 3);
        EXPECT_EQ(row.stage, want) << row.t;
    }
    EXPECT_EQ(r.trace.rows.back().t, 21.0);
}

TEST(RunCase, FixedWeightsStayFixedAndLearningStopsAtFirstSwitch) {
    const CaseResult a = run_case(CaseId::a, short_run(12.0));
    for (const TraceRow& row : a.trace.rows) EXPECT_EQ(row.w, benchmark::mismatched_weights());

    const CaseResult b = run_case(CaseId::b, short_run(12.0));
    const Vector frozen = b.trace.rows[10000].w;
    EXPECT_NE(frozen, benchmark::mismatched_weights());
    for (std::size_t k = 10000; k < b.trace.rows.size(); ++k) EXPECT_EQ(b.trace.rows[k].w, frozen);
}

TEST(RunCase, DisturbanceAndGpGating) {
    const CaseResult e = run_case(CaseId::e, short_run(21.0));
    for (const TraceRow& row : e.trace.rows) {
        if (row.t < 10.0) EXPECT_EQ(row.d_true, 0.0);
        if (row.t < 20.0) {
            EXPECT_EQ(row.u.u_gp, 0.0);
            EXPECT_EQ(row.gp_mean, 0.0);
        }
    }
    EXPECT_NE(e.trace.rows.back().u.u_gp, 0.0);
}

TEST(RunCase, RowIdentities) {
    const CaseResult r = run_case(CaseId::c, short_run(12.0));
    const Matrix& p = r.trace.p;
    for (const TraceRow& row : r.trace.rows) {
        EXPECT_EQ(row.u.u_total, row.u.u_fbl + row.u.u_sfb + row.u.u_ref - row.u.u_gp - row.u.u_rob);
        EXPECT_LE(std::abs(row.v - row.e.dot(p * row.e)), 1e-12);
        EXPECT_EQ(row.e, row.x_ref - row.x);
    }
}

// ė_n computed from the trace matches ẍ_ref − ẋ_n away from switching instants.
TEST(RunCase, ErrorDynamicsConsistentWithTrace) {
    const CaseResult r = run_case(CaseId::b, short_run(9.0));
    const auto& rows = r.trace.rows;
    const double h = r.trace.h;
    for (std::size_t k = 1000; k + 1 < rows.size(); k += 7) {
        const double fd = (rows[k + 1].e(1) - rows[k - 1].e(1)) / (2 * h);
        const double want = -0.5 * std::sin(rows[k].t) - rows[k].xdot_n_measured;
        EXPECT_LE(std::abs(fd - want), 1e-4) << rows[k].t;
    }
}

// With a zero regressor and no robust term the loop is ė = (A − bk)e.
TEST(RunCase, LinearClosedLoopMatchesAnalyticSolution) {
    Scenario scn;
    scn.plant = Plant(2, Vector::Zero(1), [](const Vector&) { return Vector::Zero(1); }, nullptr);
    scn.reference = ReferenceModel::sinusoid(2, 0.0, 1.0);
    scn.ref_amplitude = 1.0;
    scn.duration = 5.0;
    scn.w0 = Vector::Zero(1);
    scn.x0 = (Vector(2) << 1.0, 0.0).finished();
    scn.rob_enabled = false;
    scn.learning.stack_capacity = 1;
    ControllerConfig cfg;
    cfg.gains = (Vector(2) << 2.0, 3.0).finished();
    cfg.q = Matrix::Identity(2, 2);
    cfg.r = 0.0;
    cfg.rob_enabled = false;
    const CaseResult r = run_case(scn, cfg);
    for (const TraceRow& row : r.trace.rows) {
        // roots −1, −2 with x(0) = 1, ẋ(0) = 0
        const double want = 2.0 * std::exp(-row.t) - std::exp(-2.0 * row.t);
        EXPECT_NEAR(row.x(0), want, 1e-10);
    }
}

TEST(Monitor, HandExamples) {
    const Matrix p = Matrix::Identity(2, 2);
    const Matrix s = Matrix::Identity(2, 2);
    MonitorResult r = lyapunov_monitor(Vector::Zero(2), 0.3, 0.0, p, s, 1.0, 0.01);
    EXPECT_EQ(r.v, 0.0);
    EXPECT_EQ(r.vdot, 0.0);
    EXPECT_TRUE(r.condition_ok);
    EXPECT_FALSE(r.outside_layer);

    const Vector e = (Vector(2) << 0.0, 0.5).finished();
    r = lyapunov_monitor(e, 0.3, -1.0, p, s, 1.0, 0.01);
    EXPECT_DOUBLE_EQ(r.v, 0.25);
    EXPECT_DOUBLE_EQ(r.vdot, -0.25 + 2 * 0.5 * (0.3 - 1.0));
    EXPECT_TRUE(r.outside_layer);
    EXPECT_FALSE(lyapunov_monitor(e, 1.5, -1.0, p, s, 1.0, 0.01).condition_ok);
}

// An exact compensator leaves no mismatch for the robust term to absorb.
TEST(Monitor, OracleCompensatorZeroesMismatch) {
    CaseSetup setup = make_case(CaseId::e, short_run(21.0));
    setup.scenario.gp.oracle = true;
    const CaseResult r = run_case(setup.scenario, setup.controller);
    for (const TraceRow& row : r.trace.rows)
        if (row.stage == 3) EXPECT_LE(std::abs(row.mismatch), 1e-12) << row.t;
}

Trace synthetic_trace(const std::function<double(double)>& e1, double duration, double h) {
    Trace tr;
    const auto steps = std::llround(duration / h);
    for (long long k = 0; k <= steps; ++k) {
        TraceRow row;
        row.t = static_cast<double>(k) * h;
        row.e = (Vector(2) << e1(row.t), 0.0).finished();
        row.w = Vector::Zero(1);
        tr.rows.push_back(row);
    }
    return tr;
}

TEST(Metrics, HandExamples) {
    const Trace zero = synthetic_trace([](double) { return 0.0; }, 30.0, 0.01);
    EXPECT_EQ(compute_metrics(zero, 0.5).overall_pct, 0.0);

    const Trace flat = synthetic_trace([](double) { return -0.05; }, 30.0, 0.01);
    const Metrics m = compute_metrics(flat, 0.5);
    for (double v : m.stage_pct) EXPECT_NEAR(v, 10.0, 1e-12);
    EXPECT_NEAR(m.overall_pct, 10.0, 1e-12);

    // mean |sin| over whole periods is 2/π
    const double two_pi = 2.0 * std::numbers::pi;
    const Trace wave = synthetic_trace([](double t) { return 0.05 * std::sin(t); }, 3 * two_pi, 1e-4);
    const Metrics w = compute_metrics(wave, 0.5, MetricWindows{two_pi, 2 * two_pi, 0.0});
    for (double v : w.stage_pct) EXPECT_NEAR(v, 20.0 / std::numbers::pi, 1e-3);
}

TEST(Metrics, TransientIsExcluded) {
    const Trace tr = synthetic_trace([](double t) { return std::fmod(t, 10.0) < 1.5 ? 1.0 : 0.0; }, 29.99, 0.01);
    EXPECT_EQ(compute_metrics(tr, 0.5).overall_pct, 0.0);
    EXPECT_GT(compute_metrics(tr, 0.5, MetricWindows{10.0, 20.0, 0.0}).overall_pct, 0.0);
}

TEST(RunCase, AutomaticRobustnessGainStaysInBand) {
    SimulationSettings s = short_run(5.0);
    s.controller.m_auto = true;
    const CaseResult r = run_case(CaseId::a, s);
    double previous = 0.0;
    for (const TraceRow& row : r.trace.rows) {
        EXPECT_GE(row.robustness_gain, 0.1);
        EXPECT_LE(row.robustness_gain, 10.0);
        EXPECT_GE(row.robustness_gain, previous);
        previous = row.robustness_gain;
    }
}

TEST(RunCase, FiniteDifferenceMeasurementTracksExact) {
    SimulationSettings s = short_run(5.0);
    const CaseResult exact = run_case(CaseId::b, s);
    s.xdot_mode = XdotMode::finite_difference;
    const CaseResult fd = run_case(CaseId::b, s);
    EXPECT_EQ(fd.trace.rows[0].xdot_n_measured, exact.trace.rows[0].xdot_n_measured);
    for (std::size_t k = 1000; k < fd.trace.rows.size(); k += 100)
        EXPECT_NEAR(fd.trace.rows[k].xdot_n_measured, exact.trace.rows[k].xdot_n_measured, 0.05);
    EXPECT_LT(fd.metrics.stage_pct[0], 1.0);
}

TEST(RunCase, SameSeedSameTrace) {
    const CaseResult a = run_case(CaseId::d, short_run(22.0), 3);
    const CaseResult b = run_case(CaseId::d, short_run(22.0), 3);
    ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
    for (std::size_t k = 0; k < a.trace.rows.size(); ++k) {
        EXPECT_EQ(a.trace.rows[k].x, b.trace.rows[k].x);
        EXPECT_EQ(a.trace.rows[k].gp_mean, b.trace.rows[k].gp_mean);
    }
}

TEST(RunCase, RejectsInconsistentInputs) {
    CaseSetup setup = make_case(CaseId::a, short_run(1.0));
    setup.controller.gp_enabled = true;
    EXPECT_THROW(run_case(setup.scenario, setup.controller), InvalidArgument);
    setup = make_case(CaseId::a, short_run(1.0));
    setup.scenario.w0 = Vector::Zero(2);
    EXPECT_THROW(run_case(setup.scenario, setup.controller), InvalidArgument);
}

}  // namespace
}  // namespace fblgp
