#include "gbl/learner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gbl/analysis.hpp"
#include "gbl/errors.hpp"

namespace gbl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void LearnerConfig::validate() const {
    if (total_steps == 0) throw std::invalid_argument("learner.steps must be positive");
    if (replay_period == 0) throw std::invalid_argument("learner.replay_period must be positive");
    if (batch_size == 0) throw std::invalid_argument("learner.batch_size must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("learner.alpha must lie in (0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("learner.epsilon must lie in [0, 1]");
    if (target_update_every == 0) throw std::invalid_argument("learner.target_update_every must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("learner.gamma must lie in [0, 1)");
    if (eval_every == 0) throw std::invalid_argument("learner.eval_every must be positive");
    if (eval_episodes == 0) throw std::invalid_argument("learner.eval_episodes must be positive");
    if (estimate_window < 2) throw std::invalid_argument("learner.estimate_window must be at least 2");
    if (report_every == 0) throw std::invalid_argument("learner.report_every must be positive");
}

void EstimateWindows::record(const StateKey& state, Action action, double estimate) {
    auto& w = windows_[{state, action}];
    w.push_back(estimate);
    if (w.size() > window_) w.pop_front();
}

// CSV

void RunMetrics::write_csv(std::ostream& os) const {
    os << "step,episode,return,eval_return,op,seed,target_mean,target_std,nsr\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g,%.17g,%s,%llu,%.17g,%.17g,%.17g\n",
                      static_cast<unsigned long long>(r.step), static_cast<unsigned long long>(r.episode),
                      r.episode_return, r.eval_return, op.c_str(), static_cast<unsigned long long>(seed),
                      r.target_mean, r.target_std, r.novel_state_ratio);
        os << buf;
    }
}

void RunMetrics::save_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_csv(os);
}

std::vector<MetricsRow> RunMetrics::read_csv(std::istream& is) {
    std::vector<MetricsRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        if (++lineno == 1) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        if (f.size() != 9) throw ParseError("expected 9 columns", lineno);
        try {
            MetricsRow r;
            r.step = std::stoull(f[0]);
            r.episode = std::stoull(f[1]);
            r.episode_return = std::strtod(f[2].c_str(), nullptr);
            r.eval_return = std::strtod(f[3].c_str(), nullptr);
            r.target_mean = std::strtod(f[6].c_str(), nullptr);
            r.target_std = std::strtod(f[7].c_str(), nullptr);
            r.novel_state_ratio = std::strtod(f[8].c_str(), nullptr);
            rows.push_back(r);
        } catch (const std::exception&) {
            throw ParseError("bad numeric field", lineno);
        }
    }
    return rows;
}

// Acting and evaluation

Action epsilon_greedy(const ValueEstimator& model, const StateKey& state, double epsilon, Rng& rng) {
    const Action n = model.action_count();
    if (epsilon > 0.0 && rng.bernoulli(epsilon)) return static_cast<Action>(rng.below(n));
    auto q = model.q_row(state);
    double best = q[0];
    for (double v : q) best = std::max(best, v);
    Action ties = 0;
    for (double v : q) ties += v == best;
    auto pick = ties > 1 ? rng.below(ties) : 0;
    for (Action a = 0; a < n; ++a) {
        if (q[a] == best && pick-- == 0) return a;
    }
    return 0;
}

double evaluate_policy(const Environment& prototype, const ValueEstimator& model, std::uint32_t episodes,
                       std::uint64_t seed) {
    if (episodes == 0) throw std::invalid_argument("evaluation needs at least one episode");
    auto env = prototype.clone();
    double total = 0.0;
    for (std::uint32_t e = 0; e < episodes; ++e) {
        StateKey s = env->reset(derive_seed(seed, 0x6576616c, e));
        while (!env->episode_over()) {
            auto r = env->step(greedy_action(model, s));
            total += r.reward;
            s = std::move(r.next_state);
        }
    }
    return total / static_cast<double>(episodes);
}

// Shared optimization machinery

namespace {

class Optimizer {
public:
    Optimizer(const LearnerConfig& lcfg, const BackupConfig& bcfg, Action actions)
        : lcfg_(lcfg), bcfg_(bcfg), scalar_(actions), sample_rng_(derive_seed(lcfg.seed, 0x73616d70)) {
        if (bcfg_.distributional) {
            categorical_.emplace(actions, lcfg.support);
            categorical_target_ = categorical_->snapshot();
        } else {
            scalar_target_ = scalar_.snapshot();
        }
    }

    const ValueEstimator& online() const {
        return categorical_ ? static_cast<const ValueEstimator&>(*categorical_) : scalar_;
    }

    struct BatchStats {
        double mean = 0.0, std = 0.0;
    };

    BatchStats step(const ReplayBuffer& buffer, const TransitionGraph& graph, RunMetrics& metrics, bool log_estimates) {
        ++opt_step_;
        std::vector<std::size_t> batch(lcfg_.batch_size);
        for (auto& i : batch) i = buffer.sample_index(sample_rng_);

        // Targets first, from one frozen snapshot; updates afterwards.
        std::vector<double> targets(batch.size());
        std::vector<std::vector<double>> dists;
        if (categorical_) dists.resize(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const auto& rec = buffer[batch[k]];
            Rng rng(derive_seed(lcfg_.seed, opt_step_, rec.state.digest() ^ (std::uint64_t(rec.action) << 56)));
            if (categorical_) {
                dists[k] = categorical_target(buffer, batch[k], graph, rng);
                targets[k] = expected_value(dists[k], categorical_->atoms());
            } else {
                targets[k] = scalar_target(buffer, batch[k], graph, rng);
            }
        }
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const auto& rec = buffer[batch[k]];
            if (categorical_)
                categorical_->update(rec.state, rec.action, dists[k], lcfg_.alpha);
            else
                scalar_.update(rec.state, rec.action, targets[k], lcfg_.alpha);
            metrics.estimates.record(rec.state, rec.action, targets[k]);
            if (log_estimates) metrics.estimate_log.push_back({opt_step_, rec.state, rec.action, targets[k]});
        }

        BatchStats stats;
        for (double t : targets) stats.mean += t;
        stats.mean /= static_cast<double>(targets.size());
        for (double t : targets) stats.std += (t - stats.mean) * (t - stats.mean);
        stats.std = targets.size() > 1 ? std::sqrt(stats.std / static_cast<double>(targets.size() - 1)) : 0.0;
        metrics.optimization.push_back({opt_step_, version_, stats.mean, stats.std});

        if (opt_step_ % lcfg_.target_update_every == 0) {
            if (categorical_)
                categorical_target_ = categorical_->snapshot();
            else
                scalar_target_ = scalar_.snapshot();
            ++version_;
        }
        return stats;
    }

    std::uint64_t opt_step() const noexcept { return opt_step_; }

    void export_tables(TrainingResult& result) {
        result.scalar_table = scalar_;
        if (categorical_) result.categorical_table = *categorical_;
    }

private:
    double scalar_target(const ReplayBuffer& buffer, std::size_t i, const TransitionGraph& graph, Rng& rng) const {
        Models models{scalar_, *scalar_target_};
        const auto& rec = buffer[i];
        switch (bcfg_.op) {
            case BackupOperator::one_step: return one_step_target(rec, models, bcfg_);
            case BackupOperator::n_step_q: return n_step_q_target(buffer.slice(i, bcfg_.depth), bcfg_.depth, models, bcfg_);
            case BackupOperator::tree: return tree_backup_target(buffer.slice(i, bcfg_.depth), bcfg_.depth, models, bcfg_);
            case BackupOperator::graph: return graph_backup_target(graph, rec.state, rec.action, models, bcfg_, rng);
            case BackupOperator::graph_mixed:
                return mixed_graph_backup_target(graph, rec.state, rec.action, models, bcfg_, rng);
        }
        throw std::logic_error("unhandled operator");
    }

    std::vector<double> categorical_target(const ReplayBuffer& buffer, std::size_t i, const TransitionGraph& graph,
                                           Rng& rng) const {
        CategoricalModels models{*categorical_, *categorical_target_};
        const auto& rec = buffer[i];
        if (bcfg_.op == BackupOperator::one_step) return distributional_one_step(rec, models, bcfg_);
        auto expansion = expand_local_graph(graph, rec.state, rec.action, bcfg_.depth, bcfg_.breadth, rng, bcfg_.per_pair_cap);
        return distributional_graph_backup(graph, expansion, models, bcfg_);
    }

    const LearnerConfig& lcfg_;
    const BackupConfig& bcfg_;
    ScalarQTable scalar_;
    std::shared_ptr<const ScalarQTable> scalar_target_;
    std::optional<CategoricalQTable> categorical_;
    std::shared_ptr<const CategoricalQTable> categorical_target_;
    Rng sample_rng_;
    std::uint64_t opt_step_ = 0;
    std::uint64_t version_ = 0;
};

void prepare(const LearnerConfig& lcfg, BackupConfig& bcfg) {
    lcfg.validate();
    bcfg.gamma = lcfg.gamma;
    bcfg.validate();
}

}  // namespace

TrainingResult run_training(const Environment& prototype, const LearnerConfig& lcfg, BackupConfig bcfg) {
    prepare(lcfg, bcfg);
    auto env = prototype.clone();

    TrainingResult result;
    auto& metrics = result.metrics;
    metrics.op = std::string(to_string(bcfg.op));
    metrics.seed = lcfg.seed;
    metrics.estimates = EstimateWindows(lcfg.estimate_window);

    Optimizer opt(lcfg, bcfg, env->action_count());
    ReplayBuffer buffer(lcfg.total_steps);
    Rng act_rng(derive_seed(lcfg.seed, 0x61637421));

    std::uint64_t episode = 0;
    std::uint32_t episode_step = 0;
    double episode_return = 0.0;
    StateKey s = env->reset(derive_seed(lcfg.seed, 0x65706973, episode));
    result.graph.observe_initial(s);
    Optimizer::BatchStats last{kNaN, kNaN};

    for (std::uint64_t t = 1; t <= lcfg.total_steps; ++t) {
        Action a = epsilon_greedy(opt.online(), s, lcfg.epsilon, act_rng);
        auto r = env->step(a);
        TransitionRecord rec{s, a, r.reward, r.next_state, r.terminal};
        buffer.push(rec, episode);
        result.graph.insert(rec);
        result.log.push_back(LoggedStep{episode, episode_step++, rec});
        episode_return += r.reward;

        if (t % lcfg.replay_period == 0) last = opt.step(buffer, result.graph, metrics, false);

        if (env->episode_over()) {
            ++episode;
            metrics.rows.push_back(MetricsRow{t, episode, episode_return, kNaN, last.mean, last.std,
                                              result.graph.novel_state_ratio()});
            episode_return = 0.0;
            episode_step = 0;
            s = env->reset(derive_seed(lcfg.seed, 0x65706973, episode));
            result.graph.observe_initial(s);
        } else {
            s = std::move(r.next_state);
        }

        if (t % lcfg.eval_every == 0 || t == lcfg.total_steps) {
            double ret = evaluate_policy(prototype, opt.online(), lcfg.eval_episodes, derive_seed(lcfg.seed, t));
            metrics.rows.push_back(MetricsRow{t, episode, kNaN, ret, last.mean, last.std,
                                              result.graph.novel_state_ratio()});
            metrics.final_eval_return = ret;
        }
    }
    metrics.episodes = episode;
    opt.export_tables(result);
    return result;
}

TrainingResult offline_training(std::span<const LoggedStep> dataset, Action action_count, const LearnerConfig& lcfg,
                                BackupConfig bcfg) {
    if (dataset.empty()) throw std::invalid_argument("offline training needs a nonempty dataset");
    prepare(lcfg, bcfg);

    TrainingResult result;
    auto& metrics = result.metrics;
    metrics.op = std::string(to_string(bcfg.op));
    metrics.seed = lcfg.seed;
    metrics.estimates = EstimateWindows(lcfg.estimate_window);
    result.log.assign(dataset.begin(), dataset.end());

    ReplayBuffer buffer(dataset.size());
    for (const auto& episode : split_episodes(dataset)) {
        result.graph.observe_initial(episode.front().record.state);
        for (const auto& e : episode) {
            if (e.record.action >= action_count) throw std::invalid_argument("dataset action out of range");
            buffer.push(e.record, e.episode);
            result.graph.insert(e.record);
        }
    }
    metrics.episodes = split_episodes(dataset).size();

    Optimizer opt(lcfg, bcfg, action_count);
    const double nsr = result.graph.novel_state_ratio();
    for (std::uint64_t k = 1; k <= lcfg.total_steps; ++k) {
        auto stats = opt.step(buffer, result.graph, metrics, true);
        if (k % lcfg.report_every == 0 || k == lcfg.total_steps) {
            try {
                auto report = stability_report(metrics.estimates);
                metrics.stability.push_back({k, report.mean_of_means, report.mean_of_stds, report.pairs});
            } catch (const std::invalid_argument&) {
                // no full window yet
            }
            metrics.rows.push_back(MetricsRow{k, metrics.episodes, kNaN, kNaN, stats.mean, stats.std, nsr});
        }
    }
    opt.export_tables(result);
    return result;
}

}  // namespace gbl
