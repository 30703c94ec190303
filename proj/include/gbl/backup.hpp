#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gbl/env.hpp"
#include "gbl/rng.hpp"
#include "gbl/transition_graph.hpp"
#include "gbl/value_model.hpp"

namespace gbl {

enum class BackupOperator { one_step, n_step_q, tree, graph, graph_mixed };

std::string_view to_string(BackupOperator op);
BackupOperator parse_operator(std::string_view name);

enum class PolicyMode { greedy, explicit_table };

/// Target policy pi(a|s) for policy evaluation; unseen states are uniform.
class ExplicitPolicy {
public:
    explicit ExplicitPolicy(Action action_count);

    void set(const StateKey& state, std::vector<double> probs);
    std::span<const double> probs(const StateKey& state) const;
    Action action_count() const noexcept { return actions_; }

private:
    Action actions_;
    std::vector<double> uniform_;
    std::unordered_map<StateKey, std::vector<double>, StateKeyHash> table_;
};

struct BackupConfig {
    BackupOperator op = BackupOperator::graph;
    /// n for n-step-Q and tree; number of expanded levels for graph variants.
    std::uint32_t depth = 5;
    /// Transitions sampled per expansion level (graph variants only).
    std::uint32_t breadth = 50;
    double gamma = 0.95;
    bool double_q = false;
    bool distributional = false;
    /// Apply the breadth limit per (s,a) node instead of per level.
    bool per_pair_cap = false;
    PolicyMode policy_mode = PolicyMode::greedy;
    std::shared_ptr<const ExplicitPolicy> policy;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Online (q_theta) and frozen target (q_theta') models.
struct Models {
    const ValueEstimator& online;
    const ValueEstimator& target;
};

struct CategoricalModels {
    const CategoricalQTable& online;
    const CategoricalQTable& target;
};

// Trajectory operators. `slice` starts at the source transition and holds
// the rest of its episode (possibly cut at the replay buffer's end); only
// the first n records are read.

double one_step_target(const TransitionRecord& t, const Models& models, const BackupConfig& cfg);
double n_step_q_target(std::span<const TransitionRecord> slice, std::uint32_t n, const Models& models,
                       const BackupConfig& cfg);
double tree_backup_target(std::span<const TransitionRecord> slice, std::uint32_t n, const Models& models,
                          const BackupConfig& cfg);

struct ExpandedPair {
    StateId state = 0;
    Action action = 0;
    friend bool operator==(const ExpandedPair&, const ExpandedPair&) = default;
};

struct ExpansionLevel {
    /// Distinct pairs of the selected transitions, first-appearance order.
    std::vector<ExpandedPair> pairs;
    std::vector<TransitionRef> selected;
};

/// Local subgraph around a source pair. Level 0 holds the source pair and
/// its sampled transitions; level i+1 holds the sampled transitions out of
/// the non-terminal next states selected at level i. `levels` is empty when
/// the source state was never seen.
struct ExpansionList {
    StateKey source_state;
    Action source_action = 0;
    std::optional<StateId> source_id;
    std::vector<ExpansionLevel> levels;

    std::size_t pair_count() const;
};

ExpansionList expand_local_graph(const TransitionGraph& graph, const StateKey& source_state, Action source_action,
                                 std::uint32_t depth, std::uint32_t breadth, Rng& rng, bool per_pair_cap = false);

/// Graph Backup over an explicit expansion.
double graph_backup_target(const TransitionGraph& graph, const ExpansionList& expansion, const Models& models,
                           const BackupConfig& cfg);
double graph_backup_target(const TransitionGraph& graph, const StateKey& state, Action action, const Models& models,
                           const BackupConfig& cfg, Rng& rng);

/// Mixed Graph Backup: frequency averages over all expanded actions of an
/// interior state, max only at the boundary.
double mixed_graph_backup_target(const TransitionGraph& graph, const ExpansionList& expansion, const Models& models,
                                 const BackupConfig& cfg);
double mixed_graph_backup_target(const TransitionGraph& graph, const StateKey& state, Action action,
                                 const Models& models, const BackupConfig& cfg, Rng& rng);

/// Categorical Graph Backup over an expansion; returns the source pair's
/// target distribution on the target model's support.
std::vector<double> distributional_graph_backup(const TransitionGraph& graph, const ExpansionList& expansion,
                                                const CategoricalModels& models, const BackupConfig& cfg);

/// Categorical one-step target for a single transition.
std::vector<double> distributional_one_step(const TransitionRecord& t, const CategoricalModels& models,
                                            const BackupConfig& cfg);

/// Adds `weight` times the distribution of r + gamma Z (Z ~ `child` on
/// `support`) to `out`, split onto neighbouring atoms. A terminal branch
/// places the whole weight at the projection of r.
void project_categorical(std::span<double> out, double weight, double reward, double gamma, bool terminal,
                         std::span<const double> child, const CategoricalSupport& support);

/// Exhaustive recursive Graph Backup with no breadth limit and greedy
/// target policy. Without `depth_cap` the reachable graph must be acyclic
/// (CycleError otherwise); with it, recursion stops after that many levels.
double naive_recursive_target(const TransitionGraph& graph, const StateKey& state, Action action,
                              const ValueEstimator& target, double gamma,
                              std::optional<std::uint32_t> depth_cap = std::nullopt);

/// Longest transition path from any state; throws CycleError on cycles.
std::uint32_t longest_path(const TransitionGraph& graph);

}  // namespace gbl
