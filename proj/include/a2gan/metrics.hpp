#pragma once

#include "a2gan/common.hpp"

#include <string>
#include <vector>

namespace a2gan {

/// Real vs. generated second-order comparison: correlation matrices over
/// the window positions and the scalar correlation matrix distance.
struct CorrelationReport {
    MatD r_real;
    MatD r_gen;
    double cmd = 0.0;
    int64_t b_used = 0;
    int gnb_id = -1; // -1 = aggregate
};

struct CdfReport {
    std::vector<double> grid; // merged sorted support
    std::vector<double> cdf_real;
    std::vector<double> cdf_gen;
    double ks_distance = 0.0;
};

struct DistanceTrendBin {
    double dist_lo = 0.0;
    double dist_hi = 0.0;
    int64_t count = 0;
    double rss_mean = 0.0;
    double rss_std = 0.0;
};

/// Binned mean/std of RSS vs. distance plus the log-distance least-squares
/// fit  RSS = intercept - 10 * exponent * log10(d / d_ref),  with d_ref the
/// midpoint of the observed distance range.
struct DistanceTrend {
    std::vector<DistanceTrendBin> bins;
    double exponent = 0.0;  // fitted path-loss exponent
    double intercept = 0.0; // fitted RSS at d_ref
    double d_ref_m = 0.0;
};

/// Sample correlation matrix over B realizations of W positions:
/// covariance with denominator B-1, normalized to unit diagonal.
MatD correlation_matrix(const MatD& sequences);

/// Correlation matrix distance, 1 - trace(R1 R2) / (|R1|_F |R2|_F),
/// clamped to [0, 1].
double cmd(const MatD& r1, const MatD& r2);

CorrelationReport correlation_report(const MatD& real, const MatD& generated, int gnb_id = -1);

/// Empirical CDFs of both sets flattened to length B*W on the merged
/// support, and the Kolmogorov-Smirnov distance between them.
CdfReport marginal_cdf_report(const MatD& real, const MatD& generated);

DistanceTrend distance_trend(const std::vector<double>& rss_dbm, const std::vector<double>& dist_m,
                             int n_bins);

std::string cdf_report_to_csv(const CdfReport& report);
std::string matrix_to_csv(const MatD& m);
std::string distance_trend_to_csv(const DistanceTrend& trend);

} // namespace a2gan
