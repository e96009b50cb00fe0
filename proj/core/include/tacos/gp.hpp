#pragma once

#include <Eigen/Core>
#include <vector>

#include "tacos/rng.hpp"

namespace tacos {

/// Hyperparameters of a squared-exponential kernel with per-input-dimension
/// lengthscales, all kept on the log scale.
struct GpHyperparams {
    Eigen::VectorXd log_lengthscales;
    double log_signal = 0.0; // log of the signal standard deviation
    double log_noise = std::log(0.1);

    Eigen::VectorXd pack() const;
    static GpHyperparams unpack(const Eigen::VectorXd& v, int dim_in);
};

/// Exact Gaussian-process regression for one output dimension. Posterior
/// standard deviations are epistemic (no observation noise added), matching
/// the confidence-band use |mu(z) - f(z)| <= beta * sigma(z).
class GpRegressor {
public:
    explicit GpRegressor(int dim_in);

    int dim_in() const { return dim_in_; }
    std::size_t train_size() const { return static_cast<std::size_t>(x_.rows()); }

    GpHyperparams& hyperparams() { return hp_; }
    const GpHyperparams& hyperparams() const { return hp_; }

    /// Fits the posterior for inputs X (one row per point) and targets y.
    /// Non-PSD factorizations escalate jitter 1e-8..1e-4, then throw.
    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
    /// Re-factorizes with the current hyperparameters on the stored data.
    void refit();

    /// Posterior mean and epistemic standard deviation at one point.
    std::pair<double, double> posterior(const Eigen::VectorXd& z) const;
    /// Batched posterior: one column of Zq per query point.
    void posterior_batch(const Eigen::MatrixXd& Zq_cols, Eigen::VectorXd& mean,
                         Eigen::VectorXd& stddev) const;
    void posterior_mean_batch(const Eigen::MatrixXd& Zq_cols, Eigen::VectorXd& mean) const;

    double log_marginal_likelihood() const;
    /// Gradient of the log marginal likelihood in packed hyperparameter order.
    Eigen::VectorXd log_marginal_gradient() const;
    /// Adam ascent on the log marginal likelihood; returns the final value.
    double optimize_hyperparams(int iterations, double lr = 0.05);

    double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

private:
    void cross_kernel(const Eigen::MatrixXd& Zq_cols, Eigen::MatrixXd& Kq) const;

    int dim_in_;
    GpHyperparams hp_;
    Eigen::MatrixXd x_; // n x d training inputs
    Eigen::VectorXd y_;
    Eigen::MatrixXd chol_; // lower Cholesky factor of K + sigma_n^2 I
    Eigen::VectorXd alpha_;
    double jitter_used_ = 0.0;
};

} // namespace tacos
