#include "tacos/mlp.hpp"

#include <cmath>

#include "tacos/errors.hpp"

namespace tacos {

Mlp::Mlp(std::vector<int> widths, Activation act) : widths_(std::move(widths)), act_(act) {
    if (widths_.size() < 2) throw UsageError("Mlp needs at least input and output widths");
    std::ptrdiff_t total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        w_offset_.push_back(total);
        total += static_cast<std::ptrdiff_t>(widths_[l + 1]) * widths_[l];
        b_offset_.push_back(total);
        total += widths_[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(total);
    grad_ = Eigen::VectorXd::Zero(total);
    acts_.resize(widths_.size());
    preacts_.resize(widths_.size() - 1);
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int l) {
    return {params_.data() + w_offset_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int l) const {
    return {params_.data() + w_offset_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int l) {
    return {params_.data() + b_offset_[l], widths_[l + 1]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int l) const {
    return {params_.data() + b_offset_[l], widths_[l + 1]};
}
Eigen::Map<Eigen::MatrixXd> Mlp::grad_weight(int l) {
    return {grad_.data() + w_offset_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<Eigen::VectorXd> Mlp::grad_bias(int l) {
    return {grad_.data() + b_offset_[l], widths_[l + 1]};
}

void Mlp::init(RngStream& rng) {
    for (int l = 0; l < n_layers(); ++l) {
        auto W = weight(l);
        const double bound = std::sqrt(6.0 / (widths_[l] + widths_[l + 1]));
        for (Eigen::Index j = 0; j < W.cols(); ++j)
            for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = rng.uniform(-bound, bound);
        bias(l).setZero();
    }
}

const Eigen::MatrixXd& Mlp::forward(const Eigen::MatrixXd& input) {
    if (input.rows() != dim_in()) throw UsageError("Mlp::forward input size mismatch");
    acts_[0] = input;
    const int L = n_layers();
    for (int l = 0; l < L; ++l) {
        preacts_[l].noalias() = weight(l) * acts_[l];
        preacts_[l].colwise() += bias(l);
        if (l + 1 == L) {
            acts_[l + 1] = preacts_[l];
        } else if (act_ == Activation::relu) {
            acts_[l + 1] = preacts_[l].cwiseMax(0.0);
        } else {
            acts_[l + 1] = preacts_[l].array().tanh().matrix();
        }
    }
    return acts_[L];
}

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& upstream) {
    const int L = n_layers();
    if (upstream.rows() != dim_out() || upstream.cols() != acts_[L].cols())
        throw UsageError("Mlp::backward shape mismatch");
    Eigen::MatrixXd delta = upstream;
    for (int l = L - 1; l >= 0; --l) {
        grad_weight(l).noalias() += delta * acts_[l].transpose();
        grad_bias(l).noalias() += delta.rowwise().sum();
        if (l == 0) {
            return weight(l).transpose() * delta;
        }
        Eigen::MatrixXd next = weight(l).transpose() * delta;
        if (act_ == Activation::relu) {
            delta = next.cwiseProduct((preacts_[l - 1].array() > 0.0).cast<double>().matrix());
        } else {
            delta = next.cwiseProduct(
                (1.0 - acts_[l].array().square()).matrix()); // acts_[l] = tanh(pre)
        }
    }
    return delta; // unreachable
}

Eigen::VectorXd Mlp::forward1(const Eigen::VectorXd& x) const {
    Eigen::VectorXd a = x;
    const int L = n_layers();
    for (int l = 0; l < L; ++l) {
        Eigen::VectorXd z = weight(l) * a + bias(l);
        if (l + 1 == L)
            a = z;
        else if (act_ == Activation::relu)
            a = z.cwiseMax(0.0);
        else
            a = z.array().tanh().matrix();
    }
    return a;
}

} // namespace tacos
