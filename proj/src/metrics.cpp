#include "a2gan/metrics.hpp"

#include "a2gan/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace a2gan {

MatD correlation_matrix(const MatD& sequences) {
    const auto b = sequences.rows();
    const auto w = sequences.cols();
    require(b >= 2, "correlation_matrix needs at least 2 realizations");

    const Eigen::RowVectorXd mean = sequences.colwise().mean();
    const MatD centered = sequences.rowwise() - mean;
    MatD sigma = (centered.transpose() * centered) / static_cast<double>(b - 1);

    VecD inv_std(w);
    for (Eigen::Index j = 0; j < w; ++j) {
        const double var = sigma(j, j);
        // rounding floor for a numerically constant column
        const double tol = std::pow(1e-9 * (1.0 + std::abs(mean(j))), 2);
        require(var > tol, "zero variance at position " + std::to_string(j));
        inv_std(j) = 1.0 / std::sqrt(var);
    }
    MatD r = inv_std.asDiagonal() * sigma * inv_std.asDiagonal();
    // Exact unit diagonal and symmetry against rounding.
    r = 0.5 * (r + r.transpose()).eval();
    r.diagonal().setOnes();
    return r;
}

double cmd(const MatD& r1, const MatD& r2) {
    require(r1.rows() == r2.rows() && r1.cols() == r2.cols(), "cmd: shape mismatch");
    const double n1 = r1.norm();
    const double n2 = r2.norm();
    require(n1 > 0.0 && n2 > 0.0, "cmd: zero-norm input");
    const double inner = (r1.array() * r2.array()).sum(); // trace(R1 R2) for symmetric inputs
    const double value = 1.0 - inner / (n1 * n2);
    return std::clamp(value, 0.0, 1.0);
}

CorrelationReport correlation_report(const MatD& real, const MatD& generated, int gnb_id) {
    CorrelationReport report;
    report.r_real = correlation_matrix(real);
    report.r_gen = correlation_matrix(generated);
    report.cmd = cmd(report.r_real, report.r_gen);
    report.b_used = std::min(real.rows(), generated.rows());
    report.gnb_id = gnb_id;
    return report;
}

namespace {

std::vector<double> flatten_sorted(const MatD& m) {
    std::vector<double> v;
    v.reserve(static_cast<size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            v.push_back(m(r, c));
        }
    }
    std::sort(v.begin(), v.end());
    return v;
}

// Right-continuous ECDF evaluated on a sorted grid.
std::vector<double> ecdf_on_grid(const std::vector<double>& sorted_sample,
                                 const std::vector<double>& grid) {
    std::vector<double> cdf;
    cdf.reserve(grid.size());
    const double n = static_cast<double>(sorted_sample.size());
    for (double t : grid) {
        const auto it = std::upper_bound(sorted_sample.begin(), sorted_sample.end(), t);
        cdf.push_back(static_cast<double>(it - sorted_sample.begin()) / n);
    }
    return cdf;
}

} // namespace

CdfReport marginal_cdf_report(const MatD& real, const MatD& generated) {
    require(real.size() > 0 && generated.size() > 0, "marginal_cdf_report: empty input");
    const auto sr = flatten_sorted(real);
    const auto sg = flatten_sorted(generated);

    CdfReport report;
    report.grid.reserve(sr.size() + sg.size());
    std::merge(sr.begin(), sr.end(), sg.begin(), sg.end(), std::back_inserter(report.grid));
    report.grid.erase(std::unique(report.grid.begin(), report.grid.end()), report.grid.end());

    report.cdf_real = ecdf_on_grid(sr, report.grid);
    report.cdf_gen = ecdf_on_grid(sg, report.grid);
    double ks = 0.0;
    for (size_t i = 0; i < report.grid.size(); ++i) {
        ks = std::max(ks, std::abs(report.cdf_real[i] - report.cdf_gen[i]));
    }
    report.ks_distance = ks;
    return report;
}

DistanceTrend distance_trend(const std::vector<double>& rss_dbm, const std::vector<double>& dist_m,
                             int n_bins) {
    require(rss_dbm.size() == dist_m.size(), "distance_trend: length mismatch");
    require(!rss_dbm.empty(), "distance_trend: empty input");
    require(n_bins >= 1, "distance_trend: n_bins must be >= 1");

    double dmin = dist_m[0];
    double dmax = dist_m[0];
    for (double d : dist_m) {
        require(d > 0.0, "distance_trend: distances must be > 0");
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    require(dmax > dmin, "distance_trend: degenerate input (single distance)");

    DistanceTrend trend;
    trend.d_ref_m = 0.5 * (dmin + dmax);

    // Least squares on t = -10 log10(d / d_ref): RSS ~ intercept + exponent * t.
    double st = 0.0, stt = 0.0, sy = 0.0, sty = 0.0;
    const double n = static_cast<double>(rss_dbm.size());
    for (size_t i = 0; i < rss_dbm.size(); ++i) {
        const double t = -10.0 * std::log10(dist_m[i] / trend.d_ref_m);
        st += t;
        stt += t * t;
        sy += rss_dbm[i];
        sty += t * rss_dbm[i];
    }
    const double denom = stt - st * st / n;
    require(denom > 0.0, "distance_trend: degenerate regressor");
    trend.exponent = (sty - st * sy / n) / denom;
    trend.intercept = (sy - trend.exponent * st) / n;

    const double width = (dmax - dmin) / n_bins;
    trend.bins.resize(static_cast<size_t>(n_bins));
    std::vector<double> s1(static_cast<size_t>(n_bins), 0.0);
    std::vector<double> s2(static_cast<size_t>(n_bins), 0.0);
    for (int bin = 0; bin < n_bins; ++bin) {
        trend.bins[static_cast<size_t>(bin)].dist_lo = dmin + bin * width;
        trend.bins[static_cast<size_t>(bin)].dist_hi = dmin + (bin + 1) * width;
    }
    for (size_t i = 0; i < rss_dbm.size(); ++i) {
        int bin = static_cast<int>((dist_m[i] - dmin) / width);
        bin = std::clamp(bin, 0, n_bins - 1);
        auto& slot = trend.bins[static_cast<size_t>(bin)];
        slot.count += 1;
        s1[static_cast<size_t>(bin)] += rss_dbm[i];
        s2[static_cast<size_t>(bin)] += rss_dbm[i] * rss_dbm[i];
    }
    for (int bin = 0; bin < n_bins; ++bin) {
        auto& slot = trend.bins[static_cast<size_t>(bin)];
        if (slot.count > 0) {
            const double m = s1[static_cast<size_t>(bin)] / static_cast<double>(slot.count);
            slot.rss_mean = m;
            slot.rss_std =
                std::sqrt(std::max(0.0, s2[static_cast<size_t>(bin)] / static_cast<double>(slot.count) - m * m));
        }
    }
    return trend;
}

std::string cdf_report_to_csv(const CdfReport& report) {
    std::ostringstream out;
    out << "value,cdf_real,cdf_generated\n";
    for (size_t i = 0; i < report.grid.size(); ++i) {
        out << format_double(report.grid[i]) << ',' << format_double(report.cdf_real[i]) << ','
            << format_double(report.cdf_gen[i]) << '\n';
    }
    return out.str();
}

std::string matrix_to_csv(const MatD& m) {
    std::ostringstream out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) {
                out << ',';
            }
            out << format_double(m(r, c));
        }
        out << '\n';
    }
    return out.str();
}

std::string distance_trend_to_csv(const DistanceTrend& trend) {
    std::ostringstream out;
    out << "# exponent=" << format_double(trend.exponent)
        << " intercept=" << format_double(trend.intercept)
        << " d_ref_m=" << format_double(trend.d_ref_m) << '\n';
    out << "dist_lo,dist_hi,count,rss_mean,rss_std\n";
    for (const auto& bin : trend.bins) {
        out << format_double(bin.dist_lo) << ',' << format_double(bin.dist_hi) << ',' << bin.count
            << ',' << format_double(bin.rss_mean) << ',' << format_double(bin.rss_std) << '\n';
    }
    return out.str();
}

} // namespace a2gan
