#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "longrad/types.hpp"

namespace longrad {

// Mean local SSIM with a 7x7 uniform window over fully interior positions;
// stabilizers C1 = (0.01 L)^2, C2 = (0.03 L)^2 with L = max(ref).
double ssim(const RMat& x, const RMat& ref);

// ||x - ref||_2 / ||ref||_2.
double nrmse(const RMat& x, const RMat& ref);

struct TTestResult {
    double t = 0.0;
    int dof = 0;
    double p = 0.5;  // one-tail, H1: mean(a) > mean(b)
    bool degenerate = false;
};

TTestResult paired_ttest_onetail(const std::vector<double>& a, const std::vector<double>& b);

// Upper-tail Student probability P(T_dof > t) via the regularized
// incomplete beta function (continued fraction).
double student_t_upper_tail(double t, double dof);

struct MetricRow {
    int seed = 0;
    std::string mode;
    int session = 0;  // 1-based in reports
    std::int64_t frame = 0;
    double ssim = 0.0;
    double nrmse = 0.0;
};

struct ComparisonTest {
    std::string label;
    TTestResult ssim_test;
    TTestResult nrmse_test;  // H1: comparison reduces error
};

struct MetricsReport {
    std::vector<MetricRow> per_frame;
    std::vector<ComparisonTest> tests;

    // Mean/std of a metric over rows matching (mode, session); session 0
    // matches all sessions.
    std::pair<double, double> summary(const std::string& mode, int session, bool use_ssim) const;

    void write_csv(const std::filesystem::path& path) const;
    void write_summary(const std::filesystem::path& path) const;
};

// Significance stars matching the usual reporting convention
// (* p < 0.05, ** p < 0.01).
std::string significance_stars(double p);

} // namespace longrad
