#pragma once

#include <Eigen/Core>
#include <vector>

#include "tacos/rng.hpp"

namespace tacos {

/// Fully-connected network with exact reverse-mode gradients. Columns are
/// batch samples. Hidden activations are relu (tanh optional), output is
/// linear. Parameters live in one flat vector so optimizers and checkpoints
/// can treat the network as a single array.
class Mlp {
public:
    enum class Activation { relu = 0, tanh = 1 };

    Mlp(std::vector<int> widths, Activation act = Activation::relu);

    void init(RngStream& rng);

    int dim_in() const { return widths_.front(); }
    int dim_out() const { return widths_.back(); }
    const std::vector<int>& widths() const { return widths_; }
    Activation activation() const { return act_; }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }
    Eigen::VectorXd& grad() { return grad_; }
    const Eigen::VectorXd& grad() const { return grad_; }
    void zero_grad() { grad_.setZero(); }

    /// Forward pass caching activations for a subsequent backward().
    const Eigen::MatrixXd& forward(const Eigen::MatrixXd& input);
    /// Accumulates parameter gradients for the latest forward() and returns
    /// the gradient with respect to the input batch.
    Eigen::MatrixXd backward(const Eigen::MatrixXd& upstream);

    /// Convenience single-sample forward (no gradient cache touched).
    Eigen::VectorXd forward1(const Eigen::VectorXd& x) const;

    int n_layers() const { return static_cast<int>(widths_.size()) - 1; }
    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<Eigen::VectorXd> bias(int layer);
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

private:
    Eigen::Map<Eigen::MatrixXd> grad_weight(int layer);
    Eigen::Map<Eigen::VectorXd> grad_bias(int layer);

    std::vector<int> widths_;
    Activation act_;
    std::vector<std::ptrdiff_t> w_offset_;
    std::vector<std::ptrdiff_t> b_offset_;
    Eigen::VectorXd params_;
    Eigen::VectorXd grad_;
    std::vector<Eigen::MatrixXd> acts_;    // acts_[0] = input, acts_[L] = output
    std::vector<Eigen::MatrixXd> preacts_; // pre-activation per hidden layer
};

} // namespace tacos
