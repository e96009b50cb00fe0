#pragma once

#include <Eigen/Core>

namespace tacos {

/// Bias-corrected adaptive-moment gradient step.
struct Adam {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    Eigen::VectorXd m, v;
    long t = 0;

    explicit Adam(double lr_ = 3e-4) : lr(lr_) {}

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
        if (m.size() != params.size()) {
            m = Eigen::VectorXd::Zero(params.size());
            v = Eigen::VectorXd::Zero(params.size());
            t = 0;
        }
        t += 1;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        params.array() -=
            lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
};

} // namespace tacos
