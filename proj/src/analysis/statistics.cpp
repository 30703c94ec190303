#include <cmath>
#include <stdexcept>

#include "gbl/analysis.hpp"

namespace gbl {

double crossover_probability(double novel_ratio, std::uint32_t horizon) {
    if (!(novel_ratio > 0.0 && novel_ratio <= 1.0)) throw std::invalid_argument("novel ratio must lie in (0, 1]");
    if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
    return 1.0 - std::pow(novel_ratio, static_cast<double>(horizon));
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("correlation inputs differ in length");
    if (xs.size() < 2) throw std::invalid_argument("correlation needs at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("correlation undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

StabilityReport stability_report(const EstimateWindows& windows) {
    StabilityReport report;
    for (const auto& [pair, w] : windows.windows()) {
        if (w.size() < windows.window()) continue;
        double mean = 0.0;
        for (double x : w) mean += x;
        mean /= static_cast<double>(w.size());
        double ss = 0.0;
        for (double x : w) ss += (x - mean) * (x - mean);
        report.mean_of_means += mean;
        report.mean_of_stds += std::sqrt(ss / static_cast<double>(w.size() - 1));
        ++report.pairs;
    }
    if (report.pairs == 0) throw std::invalid_argument("no full estimate windows to report on");
    report.mean_of_means /= static_cast<double>(report.pairs);
    report.mean_of_stds /= static_cast<double>(report.pairs);
    return report;
}

StabilityReport stability_report(const RunMetrics& metrics) { return stability_report(metrics.estimates); }

StabilityReport stability_report_from_log(std::span<const EstimateLogEntry> log, std::size_t window) {
    EstimateWindows windows(window);
    for (const auto& e : log) windows.record(e.state, e.action, e.estimate);
    return stability_report(windows);
}

}  // namespace gbl
