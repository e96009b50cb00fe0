#include "tacos/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tacos/checkpoint.hpp"
#include "tacos/envs.hpp"
#include "tacos/errors.hpp"

namespace fs = std::filesystem;

namespace tacos {

namespace {

double map_get(const std::map<std::string, std::string>& m, const std::string& k,
               double fallback) {
    auto it = m.find(k);
    if (it == m.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError(k, "expected a number, got '" + it->second + "'");
    }
}

std::vector<int> map_get_int_list(const std::map<std::string, std::string>& m,
                                  const std::string& k, std::vector<int> fallback) {
    auto it = m.find(k);
    if (it == m.end()) return fallback;
    std::vector<int> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

} // namespace

SacConfig sac_config_from(const ExperimentConfig& e) {
    SacConfig c;
    const auto& m = e.sac;
    c.gamma = map_get(m, "gamma", c.gamma);
    c.polyak = map_get(m, "polyak", c.polyak);
    c.lr = map_get(m, "lr", c.lr);
    c.batch = static_cast<int>(map_get(m, "batch", c.batch));
    c.updates_per_interaction =
        static_cast<int>(map_get(m, "updates_per_interaction", c.updates_per_interaction));
    c.warmup_interactions = static_cast<int>(map_get(m, "warmup", c.warmup_interactions));
    c.hidden = map_get_int_list(m, "hidden", c.hidden);
    c.replay_capacity =
        static_cast<std::size_t>(map_get(m, "replay_capacity", static_cast<double>(c.replay_capacity)));
    c.reward_scale = map_get(m, "reward_scale", c.reward_scale);
    c.init_alpha = map_get(m, "init_alpha", c.init_alpha);
    c.entropy_target_scale = map_get(m, "entropy_target_scale", c.entropy_target_scale);
    c.eval_every_episodes = static_cast<int>(map_get(m, "eval_every", c.eval_every_episodes));
    c.eval_episodes = static_cast<int>(map_get(m, "eval_episodes", c.eval_episodes));
    if (m.count("fixed_tau")) c.fixed_tau = map_get(m, "fixed_tau", 0.0);
    return c;
}

OtacosConfig otacos_config_from(const ExperimentConfig& e) {
    OtacosConfig c;
    const auto& m = e.model_based;
    if (e.algorithm == "otacos")
        c.planner.kind = PlannerKind::optimistic;
    else if (e.algorithm == "mean-tacos")
        c.planner.kind = PlannerKind::mean;
    else if (e.algorithm == "pets-tacos")
        c.planner.kind = PlannerKind::trajectory_sampling;
    c.planner.population = static_cast<int>(map_get(m, "population", c.planner.population));
    c.planner.elites = static_cast<int>(map_get(m, "elites", c.planner.elites));
    c.planner.iterations = static_cast<int>(map_get(m, "iterations", c.planner.iterations));
    c.planner.horizon = static_cast<int>(map_get(m, "horizon", c.planner.horizon));
    c.planner.ts_samples = static_cast<int>(map_get(m, "ts_samples", c.planner.ts_samples));
    c.warmup_episodes = static_cast<int>(map_get(m, "warmup_episodes", c.warmup_episodes));
    c.hyperopt_every = static_cast<int>(map_get(m, "hyperopt_every", c.hyperopt_every));
    c.model.max_points = static_cast<int>(map_get(m, "max_points", c.model.max_points));
    c.model.hyperopt_iters =
        static_cast<int>(map_get(m, "hyperopt_iters", c.model.hyperopt_iters));
    c.model.hyperopt_lr = map_get(m, "hyperopt_lr", c.model.hyperopt_lr);
    c.model.init_noise = map_get(m, "init_noise", c.model.init_noise);
    c.model.beta.beta0 = map_get(m, "beta", c.model.beta.beta0);
    auto it = m.find("beta_mode");
    if (it != m.end())
        c.model.beta.kind =
            it->second == "log" ? BetaSchedule::Kind::log_growing : BetaSchedule::Kind::fixed;
    c.reference_value = map_get(m, "reference_value", 0.0);
    return c;
}

std::size_t cell_count(const ExperimentConfig& e) {
    return e.sweep_param.empty() ? 1 : e.sweep_values.size();
}

ExperimentConfig resolve_cell(const ExperimentConfig& e, std::size_t i) {
    ExperimentConfig cell = e;
    if (e.sweep_param.empty()) return cell;
    const double v = e.sweep_values.at(i);
    if (e.sweep_param == "K") {
        cell.sac["K"] = std::to_string(static_cast<int>(v));
        cell.model_based["K"] = std::to_string(static_cast<int>(v));
    } else if (e.sweep_param == "fixed_tau") {
        std::stringstream ss;
        ss.precision(17);
        ss << v;
        cell.sac["fixed_tau"] = ss.str();
    } else {
        cell.env_overrides[e.sweep_param] = v;
    }
    cell.sweep_param.clear();
    cell.sweep_values.clear();
    return cell;
}

std::string cell_label(const ExperimentConfig& e, std::size_t i) {
    if (e.sweep_param.empty()) return "cell";
    std::stringstream ss;
    ss << e.sweep_param << '_' << e.sweep_values.at(i);
    std::string s = ss.str();
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

RunOutcome run_cell_seed(const ExperimentConfig& cell, long seed,
                         const fs::path* artifact_dir) {
    const ControlledSde sde = make_env(cell.env, cell.env_overrides);
    const Mode mode = cell.mode == "cost" ? Mode::cost : Mode::bounded;
    RunOutcome out;

    const bool model_based = cell.algorithm == "otacos" || cell.algorithm == "mean-tacos" ||
                             cell.algorithm == "pets-tacos";
    if (model_based) {
        OtacosConfig cfg = otacos_config_from(cell);
        const int K =
            mode == Mode::bounded ? static_cast<int>(map_get(cell.model_based, "K", 0)) : 0;
        if (cell.env == "linear-test") {
            // closed-form episode value: the reward flow is policy-independent
            LinearTestParams p;
            p.decay = cell.env_overrides.count("decay") ? cell.env_overrides.at("decay") : 1.0;
            const double a = p.decay;
            const double x0 =
                cell.env_overrides.count("initial_x") ? cell.env_overrides.at("initial_x") : 1.0;
            const double T =
                cell.env_overrides.count("horizon") ? cell.env_overrides.at("horizon") : 1.0;
            const double C = cell.env_overrides.count("cost") ? cell.env_overrides.at("cost") : 0.0;
            cfg.exact_episode_value = [a, x0, T, C](const EpisodeRecord& ep) {
                return x0 * (1.0 - std::exp(-a * T)) / a - C * ep.interactions;
            };
        }
        OtacosResult r = run_otacos(sde, mode, K, cell.dt_sim, static_cast<int>(cell.budget), cfg,
                                    static_cast<std::uint64_t>(seed));
        out.curve = std::move(r.curve);
        out.ledger = std::move(r.ledger);
        return out;
    }

    SacConfig cfg = sac_config_from(cell);
    int K = 0;
    if (mode == Mode::bounded) {
        K = static_cast<int>(map_get(cell.sac, "K", 0));
        if (cell.algorithm == "sac-equidistant" && !cfg.fixed_tau)
            cfg.fixed_tau = sde.horizon / K;
    }
    if (cell.algorithm == "sac-equidistant" || cell.algorithm == "sac-mc") {
        if (!cfg.fixed_tau)
            throw ConfigError("sac.fixed_tau", "equidistant algorithms need a grid duration");
    }
    SacTrainer trainer(sde, mode, K, cell.dt_sim, cfg, static_cast<std::uint64_t>(seed));
    out.curve = trainer.train(cell.budget);
    if (artifact_dir) {
        save_checkpoint((*artifact_dir / "actor.net").string(), trainer.actor());
        RngStream rng(static_cast<std::uint64_t>(seed), 424242);
        EpisodeRecord ep = rollout(
            trainer.mdp(), [&](const AugmentedState& s) { return trainer.greedy_action(s); }, rng);
        std::ofstream os(*artifact_dir / "episodes.txt");
        write_episode_steps(os, ep);
    }
    return out;
}

namespace {

void write_metadata(const fs::path& dir, const ExperimentConfig& cell, long seed) {
    KvConfig md;
    md.set("metadata", "code_version", "0.1.0");
    md.set("metadata", "algorithm", cell.algorithm);
    md.set("metadata", "seed", std::to_string(seed));
    md.set("metadata", "reward_shift", "0");
    md.set("metadata", "gamma", std::to_string(map_get(cell.sac, "gamma", 0.99)));
    md.set("metadata", "beta", std::to_string(map_get(cell.model_based, "beta", 2.0)));
    md.set("metadata", "reference_value",
           std::to_string(map_get(cell.model_based, "reference_value", 0.0)));
    md.set("metadata", "reference_source",
           cell.model_based.count("reference_source") ? cell.model_based.at("reference_source")
                                                      : "none");
    std::ofstream os(dir / "metadata.kv");
    os << md.to_string();
}

} // namespace

int run_experiment(const ExperimentConfig& e, const fs::path& out_root) {
    int failures = 0;
    for (std::size_t ci = 0; ci < cell_count(e); ++ci) {
        const ExperimentConfig cell = resolve_cell(e, ci);
        for (long seed : e.seeds) {
            const fs::path dir =
                out_root / e.output / cell_label(e, ci) / ("seed" + std::to_string(seed));
            if (fs::exists(dir / "done")) continue; // resumable
            fs::create_directories(dir);
            {
                std::ofstream os(dir / "config.cfg");
                os << cell.to_config().to_string();
            }
            write_metadata(dir, cell, seed);
            try {
                RunOutcome r = run_cell_seed(cell, seed, &dir);
                write_curve_csv((dir / "curve.csv").string(), r.curve);
                if (r.ledger) write_regret_csv((dir / "regret.csv").string(), *r.ledger);
                std::ofstream ok(dir / "done");
                ok << "ok\n";
            } catch (const std::exception& ex) {
                std::ofstream bad(dir / "failed");
                bad << ex.what() << '\n';
                failures += 1;
            }
        }
    }
    return failures;
}

std::vector<CellSummary> summarize(const fs::path& experiment_dir) {
    std::vector<CellSummary> out;
    if (!fs::exists(experiment_dir))
        throw ConfigError("summarize", "no artifact directory '" + experiment_dir.string() + "'");
    std::vector<fs::path> cells;
    for (const auto& entry : fs::directory_iterator(experiment_dir))
        if (entry.is_directory()) cells.push_back(entry.path());
    std::sort(cells.begin(), cells.end());

    for (const fs::path& cell_dir : cells) {
        CellSummary cs;
        cs.cell = cell_dir.filename().string();
        // parse trailing value out of "<param>_<value>" labels (p = decimal point)
        const auto us = cs.cell.rfind('_');
        if (us != std::string::npos) {
            std::string v = cs.cell.substr(us + 1);
            for (char& c : v)
                if (c == 'p') c = '.';
            try {
                cs.sweep_value = std::stod(v);
                cs.has_sweep_value = true;
            } catch (const std::exception&) {
            }
        }
        std::vector<double> rets, rets_nc, inters, eps, regrets;
        for (const auto& entry : fs::directory_iterator(cell_dir)) {
            if (!entry.is_directory()) continue;
            const fs::path curve_path = entry.path() / "curve.csv";
            if (!fs::exists(curve_path)) continue;
            LearningCurve c = read_curve_csv(curve_path.string());
            if (c.points.empty()) continue;
            bool any_eval = false;
            for (const auto& p : c.points) any_eval |= p.has_eval;
            if (any_eval) {
                rets.push_back(c.converged_eval_return(3, true));
                rets_nc.push_back(c.converged_eval_return(3, false));
                inters.push_back(c.converged_eval_interactions(3));
            } else {
                // model-based curves: average the last quarter of episodes
                const std::size_t n = c.points.size();
                double s1 = 0, s2 = 0;
                std::size_t count = 0;
                for (std::size_t i = (3 * n) / 4; i < n; ++i, ++count) {
                    s1 += c.points[i].train_return;
                    s2 += c.points[i].interactions;
                }
                rets.push_back(s1 / count);
                rets_nc.push_back(s1 / count);
                inters.push_back(s2 / count);
            }
            eps.push_back(static_cast<double>(c.points.size()));
            const fs::path regret_path = entry.path() / "regret.csv";
            if (fs::exists(regret_path)) {
                RegretLedger lg = read_regret_csv(regret_path.string());
                if (!lg.rows.empty()) regrets.push_back(lg.rows.back().cum_regret);
            }
        }
        if (rets.empty()) continue;
        cs.n_seeds = static_cast<int>(rets.size());
        cs.eval_return = mean_se(rets);
        cs.eval_return_no_cost = mean_se(rets_nc);
        cs.interactions = mean_se(inters);
        cs.episodes = mean_se(eps);
        if (!regrets.empty()) {
            cs.cum_regret = mean_se(regrets);
            cs.has_regret = true;
        }
        out.push_back(std::move(cs));
    }
    return out;
}

void write_summary_csv(const fs::path& experiment_dir, const std::vector<CellSummary>& summaries) {
    std::ofstream os(experiment_dir / "summary.csv");
    os.precision(12);
    os << "cell,sweep_value,n_seeds,return_mean,return_se,return_no_cost_mean,return_no_cost_se,"
          "interactions_mean,interactions_se,episodes_mean,cum_regret_mean,cum_regret_se\n";
    for (const auto& s : summaries) {
        os << s.cell << ',' << (s.has_sweep_value ? s.sweep_value : 0.0) << ',' << s.n_seeds << ','
           << s.eval_return.mean << ',' << s.eval_return.se << ',' << s.eval_return_no_cost.mean
           << ',' << s.eval_return_no_cost.se << ',' << s.interactions.mean << ','
           << s.interactions.se << ',' << s.episodes.mean << ',' << s.cum_regret.mean << ','
           << s.cum_regret.se << '\n';
    }
}

void emit_plotdata(const fs::path& experiment_dir) {
    std::vector<CellSummary> summaries = summarize(experiment_dir);
    write_summary_csv(experiment_dir, summaries);

    // sweep trend table + Spearman when the sweep axis is numeric
    bool numeric = !summaries.empty();
    for (const auto& s : summaries) numeric &= s.has_sweep_value;
    if (numeric && summaries.size() >= 2) {
        std::sort(summaries.begin(), summaries.end(),
                  [](const CellSummary& a, const CellSummary& b) {
                      return a.sweep_value < b.sweep_value;
                  });
        std::vector<double> xs, inter, ret;
        for (const auto& s : summaries) {
            xs.push_back(s.sweep_value);
            inter.push_back(s.interactions.mean);
            ret.push_back(s.eval_return.mean);
        }
        std::ofstream os(experiment_dir / "trend.csv");
        os.precision(12);
        os << "sweep_value,interactions_mean,return_mean\n";
        for (std::size_t i = 0; i < xs.size(); ++i)
            os << xs[i] << ',' << inter[i] << ',' << ret[i] << '\n';
        os << "# spearman_interactions=" << spearman(xs, inter) << '\n';
        os << "# spearman_return=" << spearman(xs, ret) << '\n';

        write_svg_chart((experiment_dir / "trend.svg").string(),
                        experiment_dir.filename().string(), "sweep value", "interactions",
                        {{"interactions", xs, inter}});
    }

    // learning-curve chart: eval return vs env steps, one series per cell
    std::vector<SvgSeries> series;
    for (const auto& entry : fs::directory_iterator(experiment_dir)) {
        if (!entry.is_directory()) continue;
        const fs::path first_seed = entry.path();
        for (const auto& seed_dir : fs::directory_iterator(first_seed)) {
            if (!seed_dir.is_directory()) continue;
            const fs::path curve_path = seed_dir.path() / "curve.csv";
            if (!fs::exists(curve_path)) continue;
            LearningCurve c = read_curve_csv(curve_path.string());
            SvgSeries s;
            s.label = entry.path().filename().string() + "/" +
                      seed_dir.path().filename().string();
            for (const auto& p : c.points) {
                if (p.has_eval) {
                    s.xs.push_back(static_cast<double>(p.env_steps));
                    s.ys.push_back(p.eval_return);
                } else if (!p.has_eval && c.points.size() < 500) {
                    s.xs.push_back(static_cast<double>(p.env_steps));
                    s.ys.push_back(p.train_return);
                }
            }
            if (!s.xs.empty()) series.push_back(std::move(s));
            break; // one representative seed per cell
        }
    }
    if (!series.empty())
        write_svg_chart((experiment_dir / "curves.svg").string(),
                        experiment_dir.filename().string(), "env steps", "return", series);
}

fs::path resolve_output_root(const std::string& cli_value) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv("TACOS_OUT_ROOT")) return env;
    return "results";
}

} // namespace tacos
