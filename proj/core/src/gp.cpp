#include "tacos/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "tacos/adam.hpp"
#include "tacos/errors.hpp"

namespace tacos {

Eigen::VectorXd GpHyperparams::pack() const {
    Eigen::VectorXd v(log_lengthscales.size() + 2);
    v.head(log_lengthscales.size()) = log_lengthscales;
    v[log_lengthscales.size()] = log_signal;
    v[log_lengthscales.size() + 1] = log_noise;
    return v;
}

GpHyperparams GpHyperparams::unpack(const Eigen::VectorXd& v, int dim_in) {
    GpHyperparams hp;
    hp.log_lengthscales = v.head(dim_in);
    hp.log_signal = v[dim_in];
    hp.log_noise = v[dim_in + 1];
    return hp;
}

GpRegressor::GpRegressor(int dim_in) : dim_in_(dim_in) {
    hp_.log_lengthscales = Eigen::VectorXd::Zero(dim_in);
}

double GpRegressor::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const Eigen::ArrayXd inv_l = (-hp_.log_lengthscales.array()).exp();
    const double r2 = ((a - b).array() * inv_l).square().sum();
    return std::exp(2.0 * hp_.log_signal - 0.5 * r2);
}

void GpRegressor::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.cols() != dim_in_) throw UsageError("GpRegressor: input dimension mismatch");
    if (X.rows() != y.size()) throw UsageError("GpRegressor: target count mismatch");
    if (X.size() > 0 && (!X.allFinite() || !y.allFinite()))
        throw UsageError("GpRegressor: non-finite inputs");
    x_ = X;
    y_ = y;
    refit();
}

void GpRegressor::refit() {
    const Eigen::Index n = x_.rows();
    if (n == 0) {
        chol_.resize(0, 0);
        alpha_.resize(0);
        return;
    }
    const Eigen::ArrayXd inv_l = (-hp_.log_lengthscales.array()).exp();
    const double sf2 = std::exp(2.0 * hp_.log_signal);
    const double sn2 = std::exp(2.0 * hp_.log_noise);

    // scaled inputs turn the Gram matrix into a plain squared-distance kernel
    Eigen::MatrixXd xs = x_;
    for (int d = 0; d < dim_in_; ++d) xs.col(d) *= inv_l[d];
    Eigen::VectorXd sq = xs.rowwise().squaredNorm();
    Eigen::MatrixXd K = -2.0 * (xs * xs.transpose());
    K.colwise() += sq;
    K.rowwise() += sq.transpose();
    K = (sf2 * (-0.5 * K.array().max(0.0)).exp()).matrix();

    for (double jitter = 0.0;;) {
        Eigen::MatrixXd Kn = K;
        Kn.diagonal().array() += sn2 + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(Kn);
        if (llt.info() == Eigen::Success) {
            chol_ = llt.matrixL();
            alpha_ = llt.solve(y_);
            jitter_used_ = jitter;
            return;
        }
        if (jitter == 0.0)
            jitter = 1e-8;
        else if (jitter < 1e-4)
            jitter *= 10.0;
        else
            throw UsageError("GpRegressor: factorization failed even at jitter 1e-4");
    }
}

std::pair<double, double> GpRegressor::posterior(const Eigen::VectorXd& z) const {
    Eigen::VectorXd mean, sd;
    posterior_batch(z, mean, sd);
    return {mean[0], sd[0]};
}

void GpRegressor::cross_kernel(const Eigen::MatrixXd& Zq_cols, Eigen::MatrixXd& Kq) const {
    const Eigen::ArrayXd inv_l = (-hp_.log_lengthscales.array()).exp();
    const double sf2 = std::exp(2.0 * hp_.log_signal);
    Eigen::MatrixXd xs = x_;
    for (int d = 0; d < dim_in_; ++d) xs.col(d) *= inv_l[d];
    Eigen::MatrixXd zs = Zq_cols;
    for (int d = 0; d < dim_in_; ++d) zs.row(d) *= inv_l[d];
    Eigen::VectorXd sqx = xs.rowwise().squaredNorm();
    Eigen::VectorXd sqz = zs.colwise().squaredNorm();
    Kq.noalias() = -2.0 * (xs * zs);
    Kq.colwise() += sqx;
    Kq.rowwise() += sqz.transpose();
    Kq = (sf2 * (-0.5 * Kq.array().max(0.0)).exp()).matrix();
}

void GpRegressor::posterior_batch(const Eigen::MatrixXd& Zq_cols, Eigen::VectorXd& mean,
                                  Eigen::VectorXd& stddev) const {
    const Eigen::Index m = Zq_cols.cols();
    const double sf2 = std::exp(2.0 * hp_.log_signal);
    if (x_.rows() == 0) {
        mean = Eigen::VectorXd::Zero(m);
        stddev = Eigen::VectorXd::Constant(m, std::exp(hp_.log_signal));
        return;
    }
    Eigen::MatrixXd Kq;
    cross_kernel(Zq_cols, Kq); // n x m
    mean = Kq.transpose() * alpha_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(Kq);
    stddev = (sf2 - Kq.colwise().squaredNorm().transpose().array()).max(0.0).sqrt();
}

void GpRegressor::posterior_mean_batch(const Eigen::MatrixXd& Zq_cols,
                                       Eigen::VectorXd& mean) const {
    if (x_.rows() == 0) {
        mean = Eigen::VectorXd::Zero(Zq_cols.cols());
        return;
    }
    Eigen::MatrixXd Kq;
    cross_kernel(Zq_cols, Kq);
    mean = Kq.transpose() * alpha_;
}

double GpRegressor::log_marginal_likelihood() const {
    const Eigen::Index n = x_.rows();
    if (n == 0) return 0.0;
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(chol_(i, i));
    return -0.5 * y_.dot(alpha_) - log_det - 0.5 * n * std::log(2.0 * M_PI);
}

Eigen::VectorXd GpRegressor::log_marginal_gradient() const {
    const Eigen::Index n = x_.rows();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim_in_ + 2);
    if (n == 0) return grad;

    const Eigen::ArrayXd inv_l = (-hp_.log_lengthscales.array()).exp();
    const double sf2 = std::exp(2.0 * hp_.log_signal);
    const double sn2 = std::exp(2.0 * hp_.log_noise);

    Eigen::MatrixXd xs = x_;
    for (int d = 0; d < dim_in_; ++d) xs.col(d) *= inv_l[d];
    Eigen::VectorXd sq = xs.rowwise().squaredNorm();
    Eigen::MatrixXd R2 = -2.0 * (xs * xs.transpose());
    R2.colwise() += sq;
    R2.rowwise() += sq.transpose();
    R2 = R2.array().max(0.0).matrix(); // lengthscale-scaled squared distances
    Eigen::MatrixXd K = (sf2 * (-0.5 * R2.array()).exp()).matrix();

    // grad_theta = 0.5 tr((alpha alpha^T - Kn^-1) dKn/dtheta)
    Eigen::MatrixXd Kinv =
        chol_.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
    Kinv = chol_.transpose().triangularView<Eigen::Upper>().solve(Kinv);
    Eigen::MatrixXd A = alpha_ * alpha_.transpose() - Kinv;

    for (int d = 0; d < dim_in_; ++d) {
        // dK/dlog l_d = K .* ((x_d - x'_d) / l_d)^2
        Eigen::VectorXd xd = xs.col(d);
        Eigen::MatrixXd D = xd.replicate(1, n) - xd.transpose().replicate(n, 1);
        grad[d] = 0.5 * (A.array() * K.array() * D.array().square()).sum();
    }
    grad[dim_in_] = (A.array() * K.array()).sum(); // 0.5 tr(A * 2K)
    grad[dim_in_ + 1] = A.trace() * sn2;           // 0.5 tr(A * 2 sn2 I)
    return grad;
}

double GpRegressor::optimize_hyperparams(int iterations, double lr) {
    if (x_.rows() == 0) return 0.0;
    Adam opt(lr);
    Eigen::VectorXd theta = hp_.pack();
    double best = log_marginal_likelihood();
    Eigen::VectorXd best_theta = theta;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd g = -log_marginal_gradient(); // Adam minimizes
        opt.step(theta, g);
        theta = theta.cwiseMax(-6.0).cwiseMin(6.0);
        theta[dim_in_ + 1] = std::max(theta[dim_in_ + 1], std::log(1e-4));
        hp_ = GpHyperparams::unpack(theta, dim_in_);
        refit();
        const double ml = log_marginal_likelihood();
        if (ml > best) {
            best = ml;
            best_theta = theta;
        }
    }
    hp_ = GpHyperparams::unpack(best_theta, dim_in_);
    refit();
    return best;
}

} // namespace tacos
