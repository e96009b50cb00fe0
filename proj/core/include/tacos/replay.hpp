#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "tacos/rng.hpp"

namespace tacos {

/// One stored transition of the augmented MDP; states are feature vectors and
/// the action holds (u, tau) as executed. Self-contained, so a sampled batch
/// can never pair states across episode boundaries.
struct Transition {
    Eigen::VectorXd s;
    Eigen::VectorXd a;
    double r = 0.0;
    Eigen::VectorXd s_next;
    bool done = false;
};

/// Fixed-capacity ring buffer with uniform sampling and FIFO eviction.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool contains(const Transition&) = delete;

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }

    const Transition& at(std::size_t i) const { return data_[i]; }

    /// Samples `batch` transitions uniformly with replacement into
    /// column-major matrices (one column per transition).
    void sample(std::size_t batch, RngStream& rng, Eigen::MatrixXd& s, Eigen::MatrixXd& a,
                Eigen::VectorXd& r, Eigen::MatrixXd& s_next, Eigen::VectorXd& done) const {
        const auto dim_s = data_.front().s.size();
        const auto dim_a = data_.front().a.size();
        s.resize(dim_s, batch);
        a.resize(dim_a, batch);
        r.resize(batch);
        s_next.resize(dim_s, batch);
        done.resize(batch);
        for (std::size_t j = 0; j < batch; ++j) {
            const Transition& t = data_[rng.index(data_.size())];
            s.col(j) = t.s;
            a.col(j) = t.a;
            r[j] = t.r;
            s_next.col(j) = t.s_next;
            done[j] = t.done ? 1.0 : 0.0;
        }
    }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

} // namespace tacos
