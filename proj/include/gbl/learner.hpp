#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gbl/backup.hpp"
#include "gbl/env.hpp"
#include "gbl/trajectory.hpp"
#include "gbl/transition_graph.hpp"
#include "gbl/value_model.hpp"

namespace gbl {

struct LearnerConfig {
    /// Environment steps (online) or optimization steps (offline).
    std::uint64_t total_steps = 20000;
    std::uint32_t replay_period = 1;
    std::uint32_t batch_size = 32;
    double alpha = 0.1;
    double epsilon = 0.02;
    std::uint32_t target_update_every = 200;
    double gamma = 0.95;
    std::uint64_t seed = 0;
    std::uint64_t eval_every = 1000;
    std::uint32_t eval_episodes = 1;
    /// Support for distributional runs.
    CategoricalSupport support{51, 0.0, 1.0};
    /// Length of the per-pair target-estimate windows.
    std::uint32_t estimate_window = 10;
    /// Optimization steps between stability samples (offline runs).
    std::uint32_t report_every = 50;

    void validate() const;
};

/// One CSV row.
struct MetricsRow {
    std::uint64_t step = 0;
    std::uint64_t episode = 0;
    double episode_return = 0.0;  // NaN when the row is not an episode end
    double eval_return = 0.0;     // NaN when the row is not an evaluation
    double target_mean = 0.0;
    double target_std = 0.0;
    double novel_state_ratio = 0.0;
};

struct OptimizationRecord {
    std::uint64_t opt_step = 0;
    /// Number of target refreshes before this step's targets were computed.
    std::uint64_t snapshot_version = 0;
    double target_mean = 0.0;
    double target_std = 0.0;
};

/// Last-K target estimates per (s, a).
class EstimateWindows {
public:
    explicit EstimateWindows(std::size_t window = 10) : window_(window) {}

    void record(const StateKey& state, Action action, double estimate);
    std::size_t window() const noexcept { return window_; }

    /// Ordered by (state encoding, action).
    const std::map<std::pair<StateKey, Action>, std::deque<double>>& windows() const noexcept { return windows_; }

private:
    std::size_t window_;
    std::map<std::pair<StateKey, Action>, std::deque<double>> windows_;
};

struct EstimateLogEntry {
    std::uint64_t opt_step;
    StateKey state;
    Action action;
    double estimate;
};

struct StabilityPoint {
    std::uint64_t opt_step = 0;
    double mean_of_means = 0.0;
    double mean_of_stds = 0.0;
    std::size_t pairs = 0;
};

struct RunMetrics {
    std::string op;
    std::uint64_t seed = 0;
    std::vector<MetricsRow> rows;
    std::vector<OptimizationRecord> optimization;
    EstimateWindows estimates;
    /// Every recorded estimate in order (offline runs only).
    std::vector<EstimateLogEntry> estimate_log;
    std::vector<StabilityPoint> stability;
    double final_eval_return = 0.0;
    std::uint64_t episodes = 0;

    /// Columns: step,episode,return,eval_return,op,seed,target_mean,target_std,nsr.
    void write_csv(std::ostream& os) const;
    void save_csv(const std::filesystem::path& path) const;
    static std::vector<MetricsRow> read_csv(std::istream& is);
};

/// Everything a training run produces.
struct TrainingResult {
    RunMetrics metrics;
    TransitionGraph graph;
    TrajectoryLog log;
    ScalarQTable scalar_table{1};
    std::optional<CategoricalQTable> categorical_table;
};

TrainingResult run_training(const Environment& prototype, const LearnerConfig& lcfg, BackupConfig bcfg);

TrainingResult offline_training(std::span<const LoggedStep> dataset, Action action_count, const LearnerConfig& lcfg,
                                BackupConfig bcfg);

/// Mean undiscounted return of greedy rollouts (lowest-index tie-break).
double evaluate_policy(const Environment& prototype, const ValueEstimator& model, std::uint32_t episodes,
                       std::uint64_t seed);

/// epsilon-greedy action; exact ties among greedy actions are broken
/// uniformly at random.
Action epsilon_greedy(const ValueEstimator& model, const StateKey& state, double epsilon, Rng& rng);

}  // namespace gbl
