#include "tacos/flow_model.hpp"

#include <cmath>
#include <numeric>

#include "tacos/errors.hpp"

namespace tacos {

FlowModel::FlowModel(const ControlledSde& sde, FlowModelConfig cfg)
    : sde_(&sde), cfg_(cfg), input_dim_(sde.feature_dim() + sde.dim_u + 1) {
    gps_.reserve(output_dim());
    for (int j = 0; j < output_dim(); ++j) {
        GpRegressor gp(input_dim_);
        gp.hyperparams().log_noise = std::log(cfg_.init_noise);
        gps_.push_back(std::move(gp));
    }
    in_mean_ = Vec::Zero(input_dim_);
    in_scale_ = Vec::Ones(input_dim_);
    out_mean_ = Vec::Zero(output_dim());
    out_scale_ = Vec::Ones(output_dim());
}

Vec FlowModel::featurize(const Vec& x, const Vec& u, double tau) const {
    const Vec xf = sde_->features(x);
    Vec z(input_dim_);
    z.head(xf.size()) = xf;
    z.segment(xf.size(), sde_->dim_u) = u;
    z[input_dim_ - 1] = tau;
    return z;
}

std::vector<int> FlowModel::select_subset(const Mat& Z, int cap) const {
    // Greedy max-conditional-variance under a unit-lengthscale kernel on the
    // standardized inputs, updated by rank-one conditioning.
    const int n = static_cast<int>(Z.rows());
    std::vector<int> picked;
    picked.reserve(cap);
    Vec var = Vec::Ones(n);
    Mat v(n, cap); // v.col(t) = conditional cross-covariances with pick t
    std::vector<char> used(n, 0);

    for (int t = 0; t < cap; ++t) {
        int best = -1;
        double best_var = -1.0;
        for (int i = 0; i < n; ++i)
            if (!used[i] && var[i] > best_var) {
                best_var = var[i];
                best = i;
            }
        if (best < 0 || best_var < 1e-12) break;
        used[best] = 1;
        picked.push_back(best);

        Vec k = (-(0.5) * (Z.rowwise() - Z.row(best)).rowwise().squaredNorm().array()).exp();
        Vec c = k;
        for (int s = 0; s < t; ++s) c -= v(best, s) * v.col(s);
        const double denom = std::sqrt(std::max(best_var, 1e-12));
        v.col(t) = c / denom;
        var -= v.col(t).cwiseProduct(v.col(t));
    }
    return picked;
}

void FlowModel::fit(const TransitionDataset& data, bool refit_hyperparams) {
    const int n_all = static_cast<int>(data.rows.size());
    if (n_all == 0) throw UsageError("FlowModel::fit on an empty dataset");

    Mat zf(n_all, input_dim_);
    Mat targets(n_all, output_dim());
    for (int i = 0; i < n_all; ++i) {
        const TransitionRow& r = data.rows[i];
        zf.row(i) = featurize(r.x, r.u, r.tau).transpose();
        targets.row(i).head(sde_->dim_x) = (r.x_next_raw - r.x).transpose();
        targets(i, sde_->dim_x) = r.delta_reward;
    }

    in_mean_ = zf.colwise().mean();
    for (int d = 0; d < input_dim_; ++d) {
        const double sd = std::sqrt((zf.col(d).array() - in_mean_[d]).square().mean());
        in_scale_[d] = std::max(sd, 1e-8);
    }
    Mat zs = (zf.rowwise() - in_mean_.transpose()) * in_scale_.cwiseInverse().asDiagonal();

    out_mean_ = targets.colwise().mean();
    for (int j = 0; j < output_dim(); ++j) {
        const double sd = std::sqrt((targets.col(j).array() - out_mean_[j]).square().mean());
        out_scale_[j] = std::max(sd, 1e-8);
    }

    if (n_all > cfg_.max_points) {
        std::vector<int> idx = select_subset(zs, cfg_.max_points);
        Mat zsub(idx.size(), input_dim_);
        Mat tsub(idx.size(), output_dim());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            zsub.row(i) = zs.row(idx[i]);
            tsub.row(i) = targets.row(idx[i]);
        }
        zs = std::move(zsub);
        targets = std::move(tsub);
    }
    z_ = zs;

    for (int j = 0; j < output_dim(); ++j) {
        Vec yj = (targets.col(j).array() - out_mean_[j]) / out_scale_[j];
        gps_[j].fit(z_, yj);
        if (refit_hyperparams) gps_[j].optimize_hyperparams(cfg_.hyperopt_iters, cfg_.hyperopt_lr);
    }
    fits_done_ += 1;
}

void FlowModel::posterior(const Vec& x, const Vec& u, double tau, Vec& mu, Vec& sigma) const {
    Mat xs(sde_->dim_x, 1), us(sde_->dim_u, 1);
    xs.col(0) = x;
    us.col(0) = u;
    Mat mu_m, sig_m;
    posterior_batch(xs, us, Vec::Constant(1, tau), mu_m, sig_m);
    mu = mu_m.col(0);
    sigma = sig_m.col(0);
}

void FlowModel::posterior_batch(const Mat& states, const Mat& controls, const Vec& taus, Mat& mu,
                                Mat& sigma) const {
    const Eigen::Index m = states.cols();
    Mat zq(input_dim_, m);
    for (Eigen::Index i = 0; i < m; ++i)
        zq.col(i) = featurize(states.col(i), controls.col(i), taus[i]);
    zq = in_scale_.cwiseInverse().asDiagonal() * (zq.colwise() - in_mean_);

    mu.resize(output_dim(), m);
    sigma.resize(output_dim(), m);
    Vec mean_j, sd_j;
    for (int j = 0; j < output_dim(); ++j) {
        gps_[j].posterior_batch(zq, mean_j, sd_j);
        mu.row(j) = (mean_j.array() * out_scale_[j] + out_mean_[j]).transpose();
        sigma.row(j) = (sd_j.array() * out_scale_[j]).transpose();
    }
    // delta-state parameterization: add the query state back
    mu.topRows(sde_->dim_x) += states;
}

Vec FlowModel::calibration_report(const TransitionDataset& holdout, double beta_value) const {
    const int n = static_cast<int>(holdout.rows.size());
    if (n == 0) throw UsageError("calibration_report on an empty holdout");
    Mat states(sde_->dim_x, n), controls(sde_->dim_u, n);
    Vec taus(n);
    Mat truth(output_dim(), n);
    for (int i = 0; i < n; ++i) {
        const TransitionRow& r = holdout.rows[i];
        states.col(i) = r.x;
        controls.col(i) = r.u;
        taus[i] = r.tau;
        truth.col(i).head(sde_->dim_x) = r.x_next_raw;
        truth(sde_->dim_x, i) = r.delta_reward;
    }
    Mat mu, sigma;
    posterior_batch(states, controls, taus, mu, sigma);
    Vec coverage = Vec::Zero(output_dim());
    for (int j = 0; j < output_dim(); ++j)
        for (int i = 0; i < n; ++i)
            if (std::abs(mu(j, i) - truth(j, i)) <= beta_value * sigma(j, i) + 1e-12)
                coverage[j] += 1.0;
    return coverage / n;
}

double FlowModel::complexity_increment(const TransitionDataset& rows) const {
    if (rows.rows.empty()) return 0.0;
    const int n = static_cast<int>(rows.rows.size());
    Mat states(sde_->dim_x, n), controls(sde_->dim_u, n);
    Vec taus(n);
    for (int i = 0; i < n; ++i) {
        states.col(i) = rows.rows[i].x;
        controls.col(i) = rows.rows[i].u;
        taus[i] = rows.rows[i].tau;
    }
    Mat mu, sigma;
    posterior_batch(states, controls, taus, mu, sigma);
    return sigma.array().square().sum();
}

} // namespace tacos
