#pragma once

#include <vector>

#include "tacos/gp.hpp"
#include "tacos/mdp.hpp"
#include "tacos/sde.hpp"

namespace tacos {

/// Confidence-scaling schedule; must be nondecreasing in the episode index.
struct BetaSchedule {
    enum class Kind { fixed, log_growing };
    Kind kind = Kind::fixed;
    double beta0 = 2.0;

    double value(int n) const {
        return kind == Kind::fixed ? beta0 : beta0 * std::sqrt(std::log(static_cast<double>(n) + 2.0));
    }
};

struct FlowModelConfig {
    int max_points = 3000;  // greedy variance-based subset above this
    int hyperopt_iters = 40;
    double hyperopt_lr = 0.1;
    double init_noise = 0.1; // on standardized targets
    BetaSchedule beta;
};

/// Per-output-dimension GP posterior over the concatenated state-and-reward
/// flow z = (x, u, tau) -> (x', db). Inputs are featurized through the
/// environment's state features and standardized from the running dataset;
/// targets are modeled as deltas (x' - x, db) and standardized per dimension.
/// Posteriors are reported back on the flow scale.
class FlowModel {
public:
    FlowModel(const ControlledSde& sde, FlowModelConfig cfg = {});

    int input_dim() const { return input_dim_; }
    int output_dim() const { return sde_->dim_x + 1; }
    std::size_t train_size() const { return static_cast<std::size_t>(z_.rows()); }
    bool fitted() const { return train_size() > 0; }

    /// Refits the posterior on the dataset (subsampled to max_points by
    /// greedy conditional-variance selection when larger).
    void fit(const TransitionDataset& data, bool refit_hyperparams);

    /// Posterior mean and epistemic std of (x', db) at one query.
    void posterior(const Vec& x, const Vec& u, double tau, Vec& mu, Vec& sigma) const;
    /// Batched queries: states (dim_x x m), controls (dim_u x m), taus (m).
    void posterior_batch(const Mat& states, const Mat& controls, const Vec& taus, Mat& mu,
                         Mat& sigma) const;

    double beta(int episode) const { return cfg_.beta.value(episode); }

    const GpRegressor& regressor(int output_dim) const { return gps_[output_dim]; }
    GpRegressor& regressor(int output_dim) { return gps_[output_dim]; }

    /// Fraction of holdout points with |mu_j(z) - f_j(z)| <= beta sigma_j(z),
    /// per output dimension. `truth` rows are flow values (x', db).
    Vec calibration_report(const TransitionDataset& holdout, double beta_value) const;

    /// Sum over rows of the squared posterior-std norm at the row inputs (the
    /// per-episode model-complexity increment).
    double complexity_increment(const TransitionDataset& rows) const;

private:
    Vec featurize(const Vec& x, const Vec& u, double tau) const;
    std::vector<int> select_subset(const Mat& Z, int cap) const;

    const ControlledSde* sde_;
    FlowModelConfig cfg_;
    int input_dim_;
    std::vector<GpRegressor> gps_;
    Mat z_;                  // standardized training inputs (rows)
    Vec in_mean_, in_scale_; // standardization of featurized inputs
    Vec out_mean_, out_scale_;
    int fits_done_ = 0;
};

} // namespace tacos
