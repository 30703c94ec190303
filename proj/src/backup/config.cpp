#include <cmath>
#include <stdexcept>
#include <string>

#include "gbl/backup.hpp"

namespace gbl {

std::string_view to_string(BackupOperator op) {
    switch (op) {
        case BackupOperator::one_step: return "one_step";
        case BackupOperator::n_step_q: return "n_step_q";
        case BackupOperator::tree: return "tree";
        case BackupOperator::graph: return "graph";
        case BackupOperator::graph_mixed: return "graph_mixed";
    }
    return "?";
}

BackupOperator parse_operator(std::string_view name) {
    for (auto op : {BackupOperator::one_step, BackupOperator::n_step_q, BackupOperator::tree, BackupOperator::graph,
                    BackupOperator::graph_mixed}) {
        if (to_string(op) == name) return op;
    }
    throw std::invalid_argument("unknown backup operator '" + std::string(name) +
                                "' (expected one_step|n_step_q|tree|graph|graph_mixed)");
}

ExplicitPolicy::ExplicitPolicy(Action action_count)
    : actions_(action_count), uniform_(action_count, 1.0 / static_cast<double>(action_count)) {
    if (action_count == 0) throw std::invalid_argument("action count must be positive");
}

void ExplicitPolicy::set(const StateKey& state, std::vector<double> probs) {
    if (probs.size() != actions_) throw std::invalid_argument("policy row has the wrong width");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("policy probabilities must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("policy row does not sum to 1");
    table_.insert_or_assign(state, std::move(probs));
}

std::span<const double> ExplicitPolicy::probs(const StateKey& state) const {
    auto it = table_.find(state);
    return it == table_.end() ? std::span<const double>(uniform_) : std::span<const double>(it->second);
}

void BackupConfig::validate() const {
    if (depth == 0) throw std::invalid_argument("backup.depth must be positive");
    if (breadth == 0) throw std::invalid_argument("backup.breadth must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("backup.gamma must lie in [0, 1)");
    if (policy_mode == PolicyMode::explicit_table && !policy)
        throw std::invalid_argument("backup.policy: explicit policy mode needs a policy table");
    if (distributional && op != BackupOperator::graph && op != BackupOperator::one_step)
        throw std::invalid_argument("backup.distributional is supported with the one_step and graph operators only");
}

}  // namespace gbl
