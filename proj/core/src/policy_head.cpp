#include "tacos/policy_head.hpp"

#include <cmath>

#include "tacos/errors.hpp"

namespace tacos {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178; // 0.5*log(2*pi)

inline double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

// log(1 - tanh(x)^2) = 2*(log 2 - x - softplus(-2x)), stable for large |x|
inline double log_one_minus_tanh_sq(double x) {
    return 2.0 * (M_LN2 - x - softplus(-2.0 * x));
}

} // namespace

SquashedGaussian::SquashedGaussian(Eigen::VectorXd low, Eigen::VectorXd high,
                                   std::vector<bool> log_scale, double logstd_min,
                                   double logstd_max)
    : low_(std::move(low)), high_(std::move(high)), log_scale_(std::move(log_scale)),
      logstd_min_(logstd_min), logstd_max_(logstd_max) {
    if (low_.size() != high_.size()) throw UsageError("bound size mismatch");
    if ((low_.array() >= high_.array()).any()) throw UsageError("need low < high per dimension");
    if (log_scale_.empty()) log_scale_.assign(low_.size(), false);
    if (log_scale_.size() != static_cast<std::size_t>(low_.size()))
        throw UsageError("log_scale size mismatch");
    half_span_.resize(low_.size());
    center_.resize(low_.size());
    for (int i = 0; i < dim(); ++i) {
        double lo = low_[i], hi = high_[i];
        if (log_scale_[i]) {
            if (!(lo > 0.0)) throw UsageError("log-scale dimension needs positive bounds");
            lo = std::log(lo);
            hi = std::log(hi);
        }
        half_span_[i] = 0.5 * (hi - lo);
        center_[i] = 0.5 * (hi + lo);
    }
}

double SquashedGaussian::to_env(double squashed, int i) const {
    return log_scale_[i] ? std::exp(squashed) : squashed;
}

double SquashedGaussian::from_env(double action, int i) const {
    return log_scale_[i] ? std::log(action) : action;
}

SquashedGaussian::SampleBatch SquashedGaussian::sample(const Eigen::MatrixXd& head_out,
                                                       RngStream& rng) const {
    const int d = dim();
    if (head_out.rows() != 2 * d) throw UsageError("head output must be 2*dim rows");
    const Eigen::Index n = head_out.cols();

    SampleBatch s;
    s.mean = head_out.topRows(d);
    Eigen::MatrixXd raw = head_out.bottomRows(d);
    s.logstd_active = ((raw.array() > logstd_min_) && (raw.array() < logstd_max_)).cast<double>();
    s.logstd = raw.array().min(logstd_max_).max(logstd_min_).matrix();
    s.stddev = s.logstd.array().exp().matrix();
    s.eps.resize(d, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (int i = 0; i < d; ++i) s.eps(i, j) = rng.normal();

    Eigen::MatrixXd pre = s.mean + s.stddev.cwiseProduct(s.eps);
    s.tanh_pre = pre.array().tanh().matrix();

    s.actions.resize(d, n);
    s.log_prob.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double lp = -d * kHalfLog2Pi;
        for (int i = 0; i < d; ++i) {
            const double y = center_[i] + half_span_[i] * s.tanh_pre(i, j);
            s.actions(i, j) = to_env(y, i);
            lp += -0.5 * s.eps(i, j) * s.eps(i, j) - s.logstd(i, j) -
                  log_one_minus_tanh_sq(pre(i, j)) - std::log(half_span_[i]);
            if (log_scale_[i]) lp -= y; // |d exp(y)/dy| = exp(y)
        }
        s.log_prob[j] = lp;
    }
    return s;
}

Eigen::VectorXd SquashedGaussian::mean_action(const Eigen::VectorXd& head_out) const {
    const int d = dim();
    Eigen::VectorXd a(d);
    for (int i = 0; i < d; ++i)
        a[i] = to_env(center_[i] + half_span_[i] * std::tanh(head_out[i]), i);
    return a;
}

double SquashedGaussian::log_prob_of(const Eigen::VectorXd& head_out,
                                     const Eigen::VectorXd& action) const {
    const int d = dim();
    double lp = -d * kHalfLog2Pi;
    for (int i = 0; i < d; ++i) {
        const double mean = head_out[i];
        const double logstd = std::clamp(head_out[d + i], logstd_min_, logstd_max_);
        const double sd = std::exp(logstd);
        const double y = from_env(action[i], i);
        double t = (y - center_[i]) / half_span_[i];
        t = std::clamp(t, -1.0 + 1e-12, 1.0 - 1e-12);
        const double pre = std::atanh(t);
        const double eps = (pre - mean) / sd;
        lp += -0.5 * eps * eps - logstd - log_one_minus_tanh_sq(pre) - std::log(half_span_[i]);
        if (log_scale_[i]) lp -= y;
    }
    return lp;
}

Eigen::MatrixXd SquashedGaussian::backward(const SampleBatch& s, const Eigen::MatrixXd& d_actions,
                                           const Eigen::VectorXd& d_log_prob) const {
    const int d = dim();
    const Eigen::Index n = s.actions.cols();

    Eigen::MatrixXd out(2 * d, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) {
            const double t = s.tanh_pre(i, j);
            const double one_m_t2 = 1.0 - t * t;
            const double dy_dpre = half_span_[i] * one_m_t2;
            // d action / d pre, and d logp / d pre
            double da_dpre = dy_dpre;
            double dlp_dpre = 2.0 * t;
            if (log_scale_[i]) {
                da_dpre *= s.actions(i, j);
                dlp_dpre -= dy_dpre;
            }
            const double g_pre = d_actions(i, j) * da_dpre + d_log_prob[j] * dlp_dpre;
            out(i, j) = g_pre;
            double g_logstd = g_pre * s.stddev(i, j) * s.eps(i, j) - d_log_prob[j];
            out(d + i, j) = g_logstd * s.logstd_active(i, j);
        }
    }
    return out;
}

} // namespace tacos
