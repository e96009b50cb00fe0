#pragma once

#include <Eigen/Core>

#include "tacos/rng.hpp"

namespace tacos {

/// Tanh-squashed diagonal Gaussian over a box. The trunk network emits
/// (mean, log_std) per action dimension; samples are squashed and mapped into
/// [low, high]. Dimensions flagged log-scale are squashed onto
/// [log low, log high] and exponentiated, which keeps wide duration ranges
/// away from the saturated tanh tails. Log-probabilities carry the full
/// change-of-variables correction in the numerically stable softplus form.
class SquashedGaussian {
public:
    SquashedGaussian(Eigen::VectorXd low, Eigen::VectorXd high,
                     std::vector<bool> log_scale = {}, double logstd_min = -10.0,
                     double logstd_max = 2.0);

    int dim() const { return static_cast<int>(low_.size()); }
    /// Trunk output size this head expects (mean and log_std per dimension).
    int head_dim() const { return 2 * dim(); }
    const Eigen::VectorXd& low() const { return low_; }
    const Eigen::VectorXd& high() const { return high_; }

    struct SampleBatch {
        Eigen::MatrixXd actions;  // dim x n, in [low, high]
        Eigen::VectorXd log_prob; // n
        // caches for backward()
        Eigen::MatrixXd mean, logstd, stddev, eps, tanh_pre;
        Eigen::ArrayXXd logstd_active; // 1 where the clamp was not engaged
    };

    /// Reparameterized sample for each column of head_out (2*dim x n).
    SampleBatch sample(const Eigen::MatrixXd& head_out, RngStream& rng) const;

    /// Squashed mean (deterministic evaluation mode).
    Eigen::VectorXd mean_action(const Eigen::VectorXd& head_out) const;

    /// Density of a given action under the head output, as log p(a).
    double log_prob_of(const Eigen::VectorXd& head_out, const Eigen::VectorXd& action) const;

    /// Chain rule into the trunk: given dL/dactions and dL/dlog_prob per
    /// sample, returns dL/dhead_out (2*dim x n).
    Eigen::MatrixXd backward(const SampleBatch& s, const Eigen::MatrixXd& d_actions,
                             const Eigen::VectorXd& d_log_prob) const;

private:
    double to_env(double squashed, int i) const;   // squash-space -> action units
    double from_env(double action, int i) const;   // action units -> squash-space

    Eigen::VectorXd low_, high_;
    std::vector<bool> log_scale_;
    Eigen::VectorXd half_span_, center_; // over the (possibly log) squash space
    double logstd_min_, logstd_max_;
};

} // namespace tacos
