#include "tacos/sac.hpp"

#include <chrono>
#include <cmath>

#include "tacos/errors.hpp"

namespace tacos {

void SacConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("sac.gamma", "must be in (0, 1]");
    if (!(polyak > 0.0 && polyak < 1.0)) throw ConfigError("sac.polyak", "must be in (0, 1)");
    if (batch < 1) throw ConfigError("sac.batch", "must be >= 1");
    if (updates_per_interaction < 0) throw ConfigError("sac.updates_per_interaction", "negative");
    if (hidden.empty()) throw ConfigError("sac.hidden", "need at least one hidden layer");
    if (replay_capacity < 1) throw ConfigError("sac.replay_capacity", "must be >= 1");
}

double LearningCurve::converged_eval_return(int n_points, bool include_cost) const {
    double sum = 0.0;
    int count = 0;
    for (auto it = points.rbegin(); it != points.rend() && count < n_points; ++it) {
        if (!it->has_eval) continue;
        sum += include_cost ? it->eval_return : it->eval_return_no_cost;
        ++count;
    }
    return count > 0 ? sum / count : 0.0;
}

double LearningCurve::converged_eval_interactions(int n_points) const {
    double sum = 0.0;
    int count = 0;
    for (auto it = points.rbegin(); it != points.rend() && count < n_points; ++it) {
        if (!it->has_eval) continue;
        sum += it->eval_interactions;
        ++count;
    }
    return count > 0 ? sum / count : 0.0;
}

namespace {

SquashedGaussian make_head(const ControlledSde& sde, const SacConfig& cfg) {
    const int du = sde.dim_u;
    const bool with_tau = !cfg.fixed_tau.has_value();
    Eigen::VectorXd low(du + (with_tau ? 1 : 0)), high(low.size());
    low.head(du) = sde.action_low;
    high.head(du) = sde.action_high;
    std::vector<bool> log_scale(low.size(), false);
    if (with_tau) {
        low[du] = sde.duration_min;
        high[du] = sde.duration_max;
        log_scale[du] = true; // durations explore multiplicatively
    }
    return SquashedGaussian(low, high, log_scale);
}

std::vector<int> net_widths(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> w;
    w.push_back(in);
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

} // namespace

SacTrainer::SacTrainer(const ControlledSde& sde, Mode mode, int max_interactions, double dt_sim,
                       SacConfig config, std::uint64_t seed)
    : sde_(sde),
      mdp_(sde_, mode, dt_sim, max_interactions),
      cfg_(std::move(config)),
      head_(make_head(sde_, cfg_)),
      actor_(net_widths(mdp_.feature_dim(), cfg_.hidden, head_.head_dim())),
      critic1_(net_widths(mdp_.feature_dim() + head_.dim(), cfg_.hidden, 1)),
      critic2_(net_widths(mdp_.feature_dim() + head_.dim(), cfg_.hidden, 1)),
      target1_(critic1_.widths()),
      target2_(critic2_.widths()),
      opt_actor_(cfg_.lr),
      opt_critic1_(cfg_.lr),
      opt_critic2_(cfg_.lr),
      opt_alpha_(cfg_.lr),
      log_alpha_(std::log(cfg_.init_alpha)),
      entropy_target_(-cfg_.entropy_target_scale * head_.dim()),
      replay_(cfg_.replay_capacity),
      rng_env_(seed, 1),
      rng_policy_(seed, 2),
      rng_batch_(seed, 3) {
    cfg_.validate();
    RngStream init(seed, 0);
    RngStream ia = init.substream(0), ic1 = init.substream(1), ic2 = init.substream(2);
    actor_.init(ia);
    critic1_.init(ic1);
    critic2_.init(ic2);
    target1_.params() = critic1_.params();
    target2_.params() = critic2_.params();
}

Eigen::VectorXd SacTrainer::stored_action(const TimedAction& a, double applied_tau) const {
    // Executed action, normalized to roughly [-1, 1] per dimension for
    // conditioning; durations are normalized on the log scale they live on.
    Eigen::VectorXd n(action_dim());
    for (int i = 0; i < sde_.dim_u; ++i) {
        const double c = 0.5 * (sde_.action_high[i] + sde_.action_low[i]);
        const double h = 0.5 * (sde_.action_high[i] - sde_.action_low[i]);
        n[i] = (a.u[i] - c) / h;
    }
    if (!cfg_.fixed_tau) {
        const double lo = std::log(sde_.duration_min), hi = std::log(sde_.duration_max);
        const double c = 0.5 * (hi + lo), h = 0.5 * (hi - lo);
        n[sde_.dim_u] = (std::log(std::max(applied_tau, 1e-12)) - c) / h;
    }
    return n;
}

TimedAction SacTrainer::to_timed_action(const Eigen::VectorXd& head_action) const {
    TimedAction a;
    a.u = head_action.head(sde_.dim_u);
    a.tau = cfg_.fixed_tau ? *cfg_.fixed_tau : head_action[sde_.dim_u];
    return a;
}

TimedAction SacTrainer::greedy_action(const AugmentedState& s) const {
    return to_timed_action(head_.mean_action(actor_.forward1(mdp_.features(s))));
}

TimedAction SacTrainer::explore_action(const AugmentedState& s) {
    Eigen::MatrixXd head_out = actor_.forward1(mdp_.features(s));
    auto samp = head_.sample(head_out, rng_policy_);
    return to_timed_action(samp.actions.col(0));
}

void SacTrainer::push_transition(const AugmentedState& s, const TimedAction& executed,
                                 double applied_tau, double reward, const AugmentedState& s_next,
                                 bool done) {
    Transition t;
    t.s = mdp_.features(s);
    t.a = stored_action(executed, applied_tau);
    t.r = reward;
    t.s_next = mdp_.features(s_next);
    t.done = done;
    replay_.push(std::move(t));
}

UpdateLosses SacTrainer::update_once() {
    const int n = cfg_.batch;
    replay_.sample(static_cast<std::size_t>(n), rng_batch_, batch_s_, batch_a_, batch_r_,
                   batch_s2_, batch_done_);
    const double alpha_now = std::exp(log_alpha_);

    // soft Bellman target through the target critics
    const Eigen::MatrixXd& head2 = actor_.forward(batch_s2_);
    auto samp2 = head_.sample(head2, rng_policy_);
    Eigen::MatrixXd a2n = normalize_batch(samp2.actions);

    Eigen::MatrixXd x2(batch_s2_.rows() + a2n.rows(), n);
    x2.topRows(batch_s2_.rows()) = batch_s2_;
    x2.bottomRows(a2n.rows()) = a2n;
    Eigen::RowVectorXd q1t = target1_.forward(x2).row(0);
    Eigen::RowVectorXd q2t = target2_.forward(x2).row(0);
    Eigen::RowVectorXd qt = q1t.cwiseMin(q2t) - alpha_now * samp2.log_prob.transpose();
    Eigen::RowVectorXd y = cfg_.reward_scale * batch_r_.transpose() +
                           cfg_.gamma * (1.0 - batch_done_.array()).matrix().transpose()
                               .cwiseProduct(qt);

    // twin critic regression
    Eigen::MatrixXd x(batch_s_.rows() + batch_a_.rows(), n);
    x.topRows(batch_s_.rows()) = batch_s_;
    x.bottomRows(batch_a_.rows()) = batch_a_;

    UpdateLosses losses;
    {
        Eigen::RowVectorXd q1 = critic1_.forward(x).row(0);
        Eigen::RowVectorXd err = q1 - y;
        losses.critic1 = err.squaredNorm() / n;
        critic1_.zero_grad();
        critic1_.backward(err * (2.0 / n));
        opt_critic1_.step(critic1_.params(), critic1_.grad());
    }
    {
        Eigen::RowVectorXd q2 = critic2_.forward(x).row(0);
        Eigen::RowVectorXd err = q2 - y;
        losses.critic2 = err.squaredNorm() / n;
        critic2_.zero_grad();
        critic2_.backward(err * (2.0 / n));
        opt_critic2_.step(critic2_.params(), critic2_.grad());
    }

    // reparameterized actor step through the refreshed critics
    const Eigen::MatrixXd& head1 = actor_.forward(batch_s_);
    auto samp = head_.sample(head1, rng_policy_);
    Eigen::MatrixXd an = normalize_batch(samp.actions);
    Eigen::MatrixXd xa(batch_s_.rows() + an.rows(), n);
    xa.topRows(batch_s_.rows()) = batch_s_;
    xa.bottomRows(an.rows()) = an;

    Eigen::RowVectorXd q1a = critic1_.forward(xa).row(0);
    // Forward order matters: critic2 last would clobber critic1's cache, so
    // backprop critic1's half before running critic2.
    Eigen::ArrayXd q1_arr = q1a.transpose().array();
    critic1_.zero_grad();
    Eigen::MatrixXd dxa1 = critic1_.backward(Eigen::RowVectorXd::Ones(n));
    Eigen::RowVectorXd q2a = critic2_.forward(xa).row(0);
    critic2_.zero_grad();
    Eigen::MatrixXd dxa2 = critic2_.backward(Eigen::RowVectorXd::Ones(n));
    critic1_.zero_grad();
    critic2_.zero_grad();

    Eigen::ArrayXd q2_arr = q2a.transpose().array();
    Eigen::ArrayXd qmin = q1_arr.min(q2_arr);
    losses.actor = (alpha_now * samp.log_prob.array() - qmin).mean();

    // dL/d a_norm: route -1/n through whichever critic attains the minimum
    Eigen::MatrixXd d_an(an.rows(), n);
    for (int j = 0; j < n; ++j) {
        const Eigen::MatrixXd& dxa = (q1_arr[j] <= q2_arr[j]) ? dxa1 : dxa2;
        d_an.col(j) = -dxa.col(j).tail(an.rows()) / n;
    }
    Eigen::MatrixXd d_actions = d_an;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < sde_.dim_u; ++i)
            d_actions(i, j) /= 0.5 * (sde_.action_high[i] - sde_.action_low[i]);
        if (!cfg_.fixed_tau) {
            const double h =
                0.5 * (std::log(sde_.duration_max) - std::log(sde_.duration_min));
            d_actions(sde_.dim_u, j) /= h * samp.actions(sde_.dim_u, j);
        }
    }
    Eigen::VectorXd d_logp = Eigen::VectorXd::Constant(n, alpha_now / n);
    Eigen::MatrixXd d_head = head_.backward(samp, d_actions, d_logp);
    actor_.zero_grad();
    actor_.backward(d_head);
    opt_actor_.step(actor_.params(), actor_.grad());

    // temperature toward the entropy target
    const double mean_logp = samp.log_prob.mean();
    losses.alpha = -std::exp(log_alpha_) * (mean_logp + entropy_target_);
    Eigen::VectorXd la(1), ga(1);
    la[0] = log_alpha_;
    ga[0] = losses.alpha;
    opt_alpha_.step(la, ga);
    log_alpha_ = std::clamp(la[0], -20.0, 5.0);

    // target smoothing
    target1_.params() = (1.0 - cfg_.polyak) * target1_.params() + cfg_.polyak * critic1_.params();
    target2_.params() = (1.0 - cfg_.polyak) * target2_.params() + cfg_.polyak * critic2_.params();

    updates_ += 1;
    return losses;
}

Eigen::MatrixXd SacTrainer::normalize_batch(const Eigen::MatrixXd& actions_env) const {
    Eigen::MatrixXd n = actions_env;
    for (int i = 0; i < sde_.dim_u; ++i) {
        const double c = 0.5 * (sde_.action_high[i] + sde_.action_low[i]);
        const double h = 0.5 * (sde_.action_high[i] - sde_.action_low[i]);
        n.row(i) = (n.row(i).array() - c) / h;
    }
    if (!cfg_.fixed_tau) {
        const double lo = std::log(sde_.duration_min), hi = std::log(sde_.duration_max);
        const double c = 0.5 * (hi + lo), h = 0.5 * (hi - lo);
        n.row(sde_.dim_u) = (n.row(sde_.dim_u).array().max(1e-12).log() - c) / h;
    }
    return n;
}

double SacTrainer::critic_value(const AugmentedState& s, const TimedAction& a) const {
    Eigen::VectorXd x(mdp_.feature_dim() + action_dim());
    x.head(mdp_.feature_dim()) = mdp_.features(s);
    x.tail(action_dim()) = stored_action(a, a.tau);
    return std::min(critic1_.forward1(x)[0], critic2_.forward1(x)[0]);
}

SacTrainer::EvalResult SacTrainer::evaluate(int n_episodes, std::uint64_t eval_stream) const {
    EvalResult out;
    for (int i = 0; i < n_episodes; ++i) {
        RngStream rng = RngStream(rng_env_.seed(), 1000000 + eval_stream).substream(i);
        EpisodeRecord ep =
            rollout(mdp_, [this](const AugmentedState& s) { return greedy_action(s); }, rng);
        out.mean_return += ep.episode_return;
        out.mean_return_no_cost += ep.episode_return_no_cost;
        out.mean_interactions += ep.interactions;
    }
    out.mean_return /= n_episodes;
    out.mean_return_no_cost /= n_episodes;
    out.mean_interactions /= n_episodes;
    return out;
}

LearningCurve SacTrainer::train(long budget_interactions) {
    LearningCurve curve;
    const auto t0 = std::chrono::steady_clock::now();
    long env_steps = 0;
    double physical_time = 0.0;
    int episode = 0;
    std::uint64_t eval_counter = 0;

    while (env_steps < budget_interactions) {
        AugmentedState s = mdp_.reset();
        double ep_return = 0.0, ep_return_nc = 0.0;
        int ep_interactions = 0;
        bool done = (mdp_.mode() == Mode::cost) ? !(s.t_to_go > 0.0) : mdp_.max_interactions() == 0;
        bool diverged = false;

        while (!done) {
            TimedAction a;
            if (env_steps < cfg_.warmup_interactions) {
                a.u.resize(sde_.dim_u);
                for (int i = 0; i < sde_.dim_u; ++i)
                    a.u[i] = cfg_.warmup_bang_bang
                                 ? (rng_policy_.uniform() < 0.5 ? sde_.action_low[i]
                                                                : sde_.action_high[i])
                                 : rng_policy_.uniform(sde_.action_low[i], sde_.action_high[i]);
                a.tau = cfg_.fixed_tau ? *cfg_.fixed_tau
                                       : std::exp(rng_policy_.uniform(
                                             std::log(sde_.duration_min),
                                             std::log(sde_.duration_max)));
            } else {
                a = explore_action(s);
            }

            StepResult r;
            try {
                r = mdp_.step(s, a, rng_env_);
            } catch (const DivergedError& e) {
                ep_return += e.reward;
                ep_return_nc += e.reward;
                diverged = true;
                break;
            }
            push_transition(s, a, r.info.applied_tau, r.reward, r.next_state, r.done);
            ep_return += r.reward;
            ep_return_nc += r.info.raw_delta_reward;
            physical_time += r.info.applied_tau;
            ep_interactions += 1;
            env_steps += 1;

            if (env_steps >= cfg_.warmup_interactions &&
                replay_.size() >= static_cast<std::size_t>(cfg_.batch)) {
                for (int j = 0; j < cfg_.updates_per_interaction; ++j) update_once();
            }
            s = r.next_state;
            done = r.done;
        }

        episode += 1;
        CurvePoint p;
        p.episode = episode;
        p.env_steps = env_steps;
        p.physical_time_s = physical_time;
        p.train_return = ep_return;
        p.train_return_no_cost = ep_return_nc;
        p.interactions = ep_interactions;
        p.wallclock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        (void)diverged; // diverged episodes keep their partial return in the log

        const bool last = env_steps >= budget_interactions;
        if ((episode % cfg_.eval_every_episodes == 0 || last) && cfg_.eval_episodes > 0) {
            EvalResult ev = evaluate(cfg_.eval_episodes, ++eval_counter);
            p.has_eval = true;
            p.eval_return = ev.mean_return;
            p.eval_return_no_cost = ev.mean_return_no_cost;
            p.eval_interactions = ev.mean_interactions;
        }
        curve.points.push_back(p);
    }
    return curve;
}

LearningCurve train_sac_tacos(const ControlledSde& sde, Mode mode, int max_interactions,
                              double dt_sim, const SacConfig& cfg, long budget,
                              std::uint64_t seed) {
    SacTrainer trainer(sde, mode, max_interactions, dt_sim, cfg, seed);
    return trainer.train(budget);
}

} // namespace tacos
