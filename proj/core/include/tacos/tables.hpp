#pragma once

#include <string>
#include <vector>

#include "tacos/otacos.hpp"
#include "tacos/sac.hpp"

namespace tacos {

/// Learning curves and regret ledgers as comma-separated tables with
/// documented headers.
void write_curve_csv(const std::string& path, const LearningCurve& curve);
LearningCurve read_curve_csv(const std::string& path);

void write_regret_csv(const std::string& path, const RegretLedger& ledger);
RegretLedger read_regret_csv(const std::string& path);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    int n = 0;
};
MeanSe mean_se(const std::vector<double>& values);

/// Spearman rank correlation (average ranks on ties).
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// Minimal static line chart; one polyline per series.
struct SvgSeries {
    std::string label;
    std::vector<double> xs, ys;
};
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series);

} // namespace tacos
