#include <sstream>

#include <gtest/gtest.h>

#include "fblgp/trace_io.hpp"

namespace fblgp {
namespace {

Trace small_trace() {
    const CaseResult r = run_case(CaseId::b, [] {
        SimulationSettings s;
        s.duration = 0.002;
        return s;
    }());
    return r.trace;
}

TEST(TraceColumns, BenchmarkWidth) {
    const auto cols = trace_columns(2, 3);
    EXPECT_EQ(cols.size(), 22u);
    EXPECT_EQ(cols.front(), "t");
    EXPECT_EQ(cols[7], "u_total");
    EXPECT_EQ(cols.back(), "stage");
}

TEST(WriteTrace, HeaderPlusOneLinePerRow) {
    const Trace tr = small_trace();
    ASSERT_EQ(tr.rows.size(), 3u);
    std::ostringstream out;
    write_trace(tr, out);
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
    EXPECT_EQ(text.substr(0, text.find('\n')).find("t,x1,x2,x1_ref"), 0u);
}

TEST(WriteTrace, RoundTripIsExact) {
    const Trace tr = small_trace();
    std::ostringstream out;
    write_trace(tr, out);
    std::istringstream in(out.str());
    const Trace back = read_trace(in, 2, 3);
    ASSERT_EQ(back.rows.size(), tr.rows.size());
    for (std::size_t k = 0; k < tr.rows.size(); ++k) {
        EXPECT_EQ(back.rows[k].t, tr.rows[k].t);
        EXPECT_EQ(back.rows[k].x, tr.rows[k].x);
        EXPECT_EQ(back.rows[k].w, tr.rows[k].w);
        EXPECT_EQ(back.rows[k].u.u_rob, tr.rows[k].u.u_rob);
        EXPECT_EQ(back.rows[k].vdot, tr.rows[k].vdot);
        EXPECT_EQ(back.rows[k].stage, tr.rows[k].stage);
    }
}

TEST(ReadTrace, RejectsForeignHeader) {
    std::istringstream in("t,x1\n0,0\n");
    EXPECT_THROW(read_trace(in, 2, 3), IoError);
}

TEST(FormatDouble, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) EXPECT_EQ(parse_double(format_double(v)), v);
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_THROW(parse_double("1.0x"), IoError);
}

Metrics metric(CaseId id, double s1, double s3, double overall) {
    Metrics m;
    m.case_id = id;
    m.stage_pct = {s1, 1.0, s3};
    m.overall_pct = overall;
    return m;
}

TEST(Report, SingleCaseHasNoChecks) {
    const Report rep = build_report({metric(CaseId::a, 1, 1, 1)});
    EXPECT_TRUE(rep.checks.empty());
    EXPECT_TRUE(rep.all_passed());
}

TEST(Report, AllCasesGiveThreeChecksAndRatios) {
    const Report rep = build_report({metric(CaseId::a, 1.4, 1.6, 1.5), metric(CaseId::b, 0.05, 0.001, 0.02),
                                     metric(CaseId::c, 0.05, 5.0, 3.8), metric(CaseId::d, 1.4, 0.12, 2.0),
                                     metric(CaseId::e, 0.05, 0.13, 2.1)});
    ASSERT_EQ(rep.checks.size(), 3u);
    EXPECT_TRUE(rep.all_passed());
    EXPECT_NEAR(rep.ratios.at("e_stage3_over_b_stage1"), 2.6, 1e-12);

    std::ostringstream out;
    write_report(rep, RunConfig{}, out);
    const std::string text = out.str();
    EXPECT_EQ(text.rfind("# fblgp report v1\n", 0), 0u);
    EXPECT_NE(text.find("ratio name=e_stage3_over_b_stage1 value=2.6"), std::string::npos);
    EXPECT_NE(text.find("metric case=e stage=3 avg_tracking_error_pct=0.13\n"), std::string::npos);
    EXPECT_NE(text.find("check name=c_gt_e_stage3 lhs=5 rhs=0.13 result=pass\n"), std::string::npos);
    EXPECT_NE(text.find("summary runs=5 checks=3 failed=0\n"), std::string::npos);
}

TEST(Report, FailedCheckIsReported) {
    const Report rep = build_report({metric(CaseId::a, 0.01, 0.01, 0.01), metric(CaseId::b, 1, 1, 1)});
    EXPECT_FALSE(rep.all_passed());
    std::ostringstream out;
    write_report(rep, RunConfig{}, out);
    EXPECT_NE(out.str().find("result=fail"), std::string::npos);
}

}  // namespace
}  // namespace fblgp
