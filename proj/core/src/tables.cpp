#include "tacos/tables.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tacos/errors.hpp"

namespace tacos {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

} // namespace

void write_curve_csv(const std::string& path, const LearningCurve& curve) {
    std::ofstream os(path);
    if (!os) throw ConfigError("curve_csv", "cannot open '" + path + "'");
    os.precision(17);
    os << "episode,env_steps,physical_time_s,return,interactions,wallclock_s,"
          "return_no_cost,has_eval,eval_return,eval_return_no_cost,eval_interactions\n";
    for (const CurvePoint& p : curve.points) {
        os << p.episode << ',' << p.env_steps << ',' << p.physical_time_s << ','
           << p.train_return << ',' << p.interactions << ',' << p.wallclock_s << ','
           << p.train_return_no_cost << ',' << (p.has_eval ? 1 : 0) << ',' << p.eval_return << ','
           << p.eval_return_no_cost << ',' << p.eval_interactions << '\n';
    }
}

LearningCurve read_curve_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("curve_csv", "cannot open '" + path + "'");
    std::string line;
    std::getline(is, line); // header
    LearningCurve curve;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 11) throw ConfigError("curve_csv", "bad row in '" + path + "'");
        CurvePoint p;
        p.episode = std::stoi(f[0]);
        p.env_steps = std::stol(f[1]);
        p.physical_time_s = std::stod(f[2]);
        p.train_return = std::stod(f[3]);
        p.interactions = std::stoi(f[4]);
        p.wallclock_s = std::stod(f[5]);
        p.train_return_no_cost = std::stod(f[6]);
        p.has_eval = f[7] == "1";
        p.eval_return = std::stod(f[8]);
        p.eval_return_no_cost = std::stod(f[9]);
        p.eval_interactions = std::stod(f[10]);
        curve.points.push_back(p);
    }
    return curve;
}

void write_regret_csv(const std::string& path, const RegretLedger& ledger) {
    std::ofstream os(path);
    if (!os) throw ConfigError("regret_csv", "cannot open '" + path + "'");
    os.precision(17);
    os << "# reference_value=" << ledger.reference_value << '\n';
    os << "episode,return,regret,cum_regret,model_complexity,coverage\n";
    for (const RegretRow& r : ledger.rows) {
        os << r.episode << ',' << r.episode_return << ',' << r.regret << ',' << r.cum_regret
           << ',' << r.model_complexity << ',' << r.coverage << '\n';
    }
}

RegretLedger read_regret_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("regret_csv", "cannot open '" + path + "'");
    RegretLedger ledger;
    std::string line;
    std::getline(is, line);
    if (line.rfind("# reference_value=", 0) == 0)
        ledger.reference_value = std::stod(line.substr(18));
    std::getline(is, line); // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 6) throw ConfigError("regret_csv", "bad row in '" + path + "'");
        RegretRow r;
        r.episode = std::stoi(f[0]);
        r.episode_return = std::stod(f[1]);
        r.regret = std::stod(f[2]);
        r.cum_regret = std::stod(f[3]);
        r.model_complexity = std::stod(f[4]);
        r.coverage = std::stod(f[5]);
        ledger.rows.push_back(r);
    }
    return ledger;
}

MeanSe mean_se(const std::vector<double>& values) {
    MeanSe out;
    out.n = static_cast<int>(values.size());
    if (out.n == 0) return out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / out.n;
    if (out.n < 2) return out;
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    var /= (out.n - 1);
    out.se = std::sqrt(var / out.n);
    return out;
}

namespace {
std::vector<double> ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0; // average rank, 1-based
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}
} // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw UsageError("spearman needs two equal-length series of >= 2 points");
    const std::vector<double> rx = ranks(xs), ry = ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series) {
    const int W = 720, H = 440, ml = 70, mr = 160, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            xmin = std::min(xmin, s.xs[i]);
            xmax = std::max(xmax, s.xs[i]);
            ymin = std::min(ymin, s.ys[i]);
            ymax = std::max(ymax, s.ys[i]);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    const auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    std::ofstream os(path);
    if (!os) throw ConfigError("svg", "cannot open '" + path + "'");
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
       << "</text>\n";
    os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
       << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
       << "' stroke='black'/>\n";
    os << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 12
       << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
    os << "<text x='16' y='" << (mt + H - mb) / 2 << "' font-size='12' transform='rotate(-90 16 "
       << (mt + H - mb) / 2 << ")' text-anchor='middle'>" << y_label << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + t * (xmax - xmin) / 4.0;
        const double yv = ymin + t * (ymax - ymin) / 4.0;
        os << "<text x='" << px(xv) << "' y='" << H - mb + 16
           << "' text-anchor='middle' font-size='10'>" << xv << "</text>\n";
        os << "<text x='" << ml - 6 << "' y='" << py(yv) + 3
           << "' text-anchor='end' font-size='10'>" << yv << "</text>\n";
    }
    int ci = 0;
    for (const auto& s : series) {
        const char* color = colors[ci % 8];
        os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            os << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
        os << "'/>\n";
        os << "<text x='" << W - mr + 8 << "' y='" << mt + 14 * ci + 10 << "' fill='" << color
           << "' font-size='11'>" << s.label << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
}

} // namespace tacos
