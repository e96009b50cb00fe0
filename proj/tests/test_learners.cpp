#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tacos/adam.hpp"
#include "tacos/checkpoint.hpp"
#include "tacos/mlp.hpp"
#include "tacos/policy_head.hpp"
#include "tacos/replay.hpp"

using namespace tacos;

TEST_CASE("a zeroed final layer maps everything to zero") {
    Mlp net({4, 32, 3});
    RngStream rng(1, 0);
    net.init(rng);
    net.weight(1).setZero();
    net.bias(1).setZero();
    Eigen::MatrixXd x(4, 5);
    for (int i = 0; i < x.size(); ++i) x(i / 5, i % 5) = rng.uniform(-2, 2);
    CHECK(net.forward(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single linear layer has the analytic gradient") {
    Mlp net({3, 2});
    RngStream rng(2, 0);
    net.init(rng);
    Eigen::MatrixXd x(3, 1);
    x << 0.5, -1.0, 2.0;
    Eigen::MatrixXd up(2, 1);
    up << 1.0, -0.5;
    net.forward(x);
    net.zero_grad();
    Eigen::MatrixXd dx = net.backward(up);

    // dW = up x^T, db = up, dx = W^T up
    Eigen::MatrixXd expected_dw = up * x.transpose();
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) {
            // gradient vector layout: W first, then b
            CHECK(net.grad()[j * 2 + i] == doctest::Approx(expected_dw(i, j)));
        }
    }
    CHECK(net.grad()[6] == doctest::Approx(up(0, 0)));
    CHECK(net.grad()[7] == doctest::Approx(up(1, 0)));
    Eigen::MatrixXd expected_dx = net.weight(0).transpose() * up;
    CHECK((dx - expected_dx).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backward matches central finite differences") {
    for (Mlp::Activation act : {Mlp::Activation::relu, Mlp::Activation::tanh}) {
        Mlp net({3, 24, 24, 2}, act);
        RngStream rng(3, 0);
        net.init(rng);
        double max_rel = 0.0;
        for (int probe = 0; probe < 100; ++probe) {
            Eigen::MatrixXd x(3, 1), up(2, 1);
            for (int i = 0; i < 3; ++i) x(i, 0) = rng.uniform(-1, 1);
            for (int i = 0; i < 2; ++i) up(i, 0) = rng.uniform(-1, 1);
            net.forward(x);
            net.zero_grad();
            net.backward(up);
            const int pi = static_cast<int>(rng.index(net.params().size()));
            const double analytic = net.grad()[pi];
            const double h = 1e-5, saved = net.params()[pi];
            net.params()[pi] = saved + h;
            const double fp = (up.transpose() * net.forward(x)).sum();
            net.params()[pi] = saved - h;
            const double fm = (up.transpose() * net.forward(x)).sum();
            net.params()[pi] = saved;
            const double fd = (fp - fm) / (2 * h);
            max_rel = std::max(max_rel, std::abs(fd - analytic) / std::max(1.0, std::abs(fd)));
        }
        CHECK(max_rel <= 1e-4);
    }
}

TEST_CASE("batched forward equals the single-sample path") {
    Mlp net({4, 16, 2});
    RngStream rng(4, 0);
    net.init(rng);
    Eigen::MatrixXd x(4, 7);
    for (int i = 0; i < x.size(); ++i) x(i % 4, i / 4) = rng.uniform(-1, 1);
    Eigen::MatrixXd y = net.forward(x);
    for (int j = 0; j < 7; ++j)
        CHECK((y.col(j) - net.forward1(x.col(j))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("squashed gaussian head") {
    Eigen::VectorXd low(2), high(2);
    low << -2.5, 0.05;
    high << 2.5, 10.0;
    SquashedGaussian head(low, high, {false, true});

    SUBCASE("vanishing noise collapses onto the deterministic action") {
        Eigen::MatrixXd out(4, 1);
        out << 0.3, -0.7, -10.0, -10.0; // log-std at the clamp floor
        RngStream rng(5, 0);
        auto s = head.sample(out, rng);
        Eigen::VectorXd det = head.mean_action(out.col(0));
        CHECK((s.actions.col(0) - det).cwiseAbs().maxCoeff() < 1e-3);
    }
    SUBCASE("saturated duration mean maps to the bound exactly") {
        Eigen::MatrixXd out(4, 1);
        out << 0.0, 60.0, -10.0, -10.0; // tanh(60) == 1 in doubles
        Eigen::VectorXd det = head.mean_action(out.col(0));
        CHECK(det[1] == 10.0);
        out(1, 0) = -60.0;
        det = head.mean_action(out.col(0));
        CHECK(det[1] == 0.05);
    }
    SUBCASE("samples always satisfy the bounds") {
        RngStream rng(5, 1);
        Eigen::MatrixXd out(4, 64);
        for (int i = 0; i < out.size(); ++i) out(i % 4, i / 4) = rng.uniform(-3, 3);
        auto s = head.sample(out, rng);
        for (int j = 0; j < 64; ++j) {
            CHECK(s.actions(0, j) >= -2.5);
            CHECK(s.actions(0, j) <= 2.5);
            CHECK(s.actions(1, j) >= 0.05);
            CHECK(s.actions(1, j) <= 10.0);
            CHECK(std::isfinite(s.log_prob[j]));
        }
    }
    SUBCASE("density integrates to one on a grid") {
        // both an affine dimension and a log-scale dimension
        Eigen::VectorXd l1(1), h1(1);
        l1 << -2.0;
        h1 << 3.0;
        SquashedGaussian affine(l1, h1);
        Eigen::VectorXd out(2);
        out << 0.4, -0.3;
        const int n = 20000;
        double integral = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = -2.0 + (i + 0.5) * 5.0 / n;
            integral += std::exp(affine.log_prob_of(out, Eigen::VectorXd::Constant(1, a))) * 5.0 / n;
        }
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));

        Eigen::VectorXd l2(1), h2(1);
        l2 << 0.05;
        h2 << 10.0;
        SquashedGaussian logdim(l2, h2, {true});
        integral = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = 0.05 + (i + 0.5) * 9.95 / n;
            integral += std::exp(logdim.log_prob_of(out, Eigen::VectorXd::Constant(1, a))) * 9.95 / n;
        }
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("backward matches finite differences through sample and density") {
        RngStream rng(5, 2);
        Eigen::MatrixXd out(4, 1);
        out << 0.2, -0.4, -1.0, -0.5;
        // freeze the noise by reusing the stream seed
        auto eval = [&](const Eigen::MatrixXd& head_out, Eigen::VectorXd* d_act = nullptr) {
            RngStream r(6, 3);
            auto s = head.sample(head_out, r);
            // scalar objective: sum(actions) + 0.3 * log_prob
            if (d_act) *d_act = Eigen::VectorXd::Ones(2);
            return s.actions.col(0).sum() + 0.3 * s.log_prob[0];
        };
        RngStream r(6, 3);
        auto s = head.sample(out, r);
        Eigen::MatrixXd d_actions = Eigen::MatrixXd::Ones(2, 1);
        Eigen::VectorXd d_logp = Eigen::VectorXd::Constant(1, 0.3);
        Eigen::MatrixXd g = head.backward(s, d_actions, d_logp);
        for (int i = 0; i < 4; ++i) {
            const double h = 1e-6;
            Eigen::MatrixXd hp = out, hm = out;
            hp(i, 0) += h;
            hm(i, 0) -= h;
            const double fd = (eval(hp) - eval(hm)) / (2 * h);
            CHECK(g(i, 0) == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("adaptive moment steps") {
    SUBCASE("zero gradient leaves parameters untouched") {
        Adam opt(0.1);
        Eigen::VectorXd w = Eigen::VectorXd::Constant(3, 1.5);
        opt.step(w, Eigen::VectorXd::Zero(3));
        CHECK((w.array() == 1.5).all());
    }
    SUBCASE("descends a quadratic") {
        Adam opt(0.1);
        Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
        opt.step(w, 2.0 * w);
        CHECK(w[0] < 1.0);
    }
    SUBCASE("three steps match a scalar hand computation") {
        // f(w) = w^2, lr = 0.1, default betas; the oracle below is plain
        // scalar arithmetic
        double m = 0.0, v = 0.0, w_hand = 1.0;
        const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
        Adam opt(lr);
        Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
        for (int t = 1; t <= 3; ++t) {
            const double g = 2.0 * w_hand;
            m = b1 * m + (1 - b1) * g;
            v = b2 * v + (1 - b2) * g * g;
            const double mhat = m / (1 - std::pow(b1, t));
            const double vhat = v / (1 - std::pow(b2, t));
            w_hand -= lr * mhat / (std::sqrt(vhat) + eps);

            opt.step(w, 2.0 * w);
            CHECK(w[0] == doctest::Approx(w_hand).epsilon(1e-12));
        }
    }
}

TEST_CASE("replay buffer") {
    auto make_t = [](double tag, bool done = false) {
        Transition t;
        t.s = Eigen::VectorXd::Constant(2, tag);
        t.a = Eigen::VectorXd::Constant(1, tag);
        t.r = tag;
        t.s_next = Eigen::VectorXd::Constant(2, tag + 0.5);
        t.done = done;
        return t;
    };
    SUBCASE("FIFO eviction drops the oldest entries") {
        ReplayBuffer buf(5);
        for (int i = 0; i < 8; ++i) buf.push(make_t(i));
        CHECK(buf.size() == 5);
        std::vector<double> tags;
        for (std::size_t i = 0; i < buf.size(); ++i) tags.push_back(buf.at(i).r);
        std::sort(tags.begin(), tags.end());
        CHECK(tags.front() == doctest::Approx(3.0)); // 0, 1, 2 evicted
        CHECK(tags.back() == doctest::Approx(7.0));
    }
    SUBCASE("sampled pairs never mix episodes") {
        ReplayBuffer buf(64);
        // two episodes with distinct tags; (s, s') consistency must survive sampling
        for (int e = 0; e < 2; ++e)
            for (int i = 0; i < 10; ++i) buf.push(make_t(100 * e + i, i == 9));
        RngStream rng(7, 0);
        Eigen::MatrixXd s, a, s2;
        Eigen::VectorXd r, done;
        buf.sample(128, rng, s, a, r, s2, done);
        for (int j = 0; j < 128; ++j) {
            // every sampled transition is one of the inserted ones, unsplit
            CHECK(s2(0, j) == doctest::Approx(s(0, j) + 0.5));
        }
    }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    Mlp net({3, 8, 2}, Mlp::Activation::tanh);
    RngStream rng(8, 0);
    net.init(rng);
    const std::string path = "/tmp/tacos_test_ckpt.net";
    save_checkpoint(path, net);
    Mlp loaded = load_checkpoint(path);
    CHECK(loaded.widths() == net.widths());
    CHECK(loaded.activation() == net.activation());
    REQUIRE(loaded.params().size() == net.params().size());
    for (Eigen::Index i = 0; i < net.params().size(); ++i)
        CHECK(loaded.params()[i] == net.params()[i]);
}
