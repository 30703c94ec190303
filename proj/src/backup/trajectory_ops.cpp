#include <algorithm>
#include <stdexcept>

#include "backup_detail.hpp"

namespace gbl {

namespace detail {

double leaf_value(const StateKey& s, const Models& models, const BackupConfig& cfg) {
    if (cfg.policy_mode == PolicyMode::explicit_table) {
        auto pi = cfg.policy->probs(s);
        double v = 0.0;
        for (Action a = 0; a < pi.size(); ++a)
            if (pi[a] != 0.0) v += pi[a] * models.target.q(s, a);
        return v;
    }
    if (cfg.double_q) return models.target.q(s, greedy_action(models.online, s));
    return max_q(models.target, s);
}

}  // namespace detail

double one_step_target(const TransitionRecord& t, const Models& models, const BackupConfig& cfg) {
    if (t.terminal) return t.reward;
    return t.reward + cfg.gamma * detail::leaf_value(t.next_state, models, cfg);
}

namespace {

// Number of records the n-step window covers: at most n, stopping at the
// first terminal.
std::size_t window(std::span<const TransitionRecord> slice, std::uint32_t n) {
    if (slice.empty()) throw std::invalid_argument("empty trajectory slice");
    if (n == 0) throw std::invalid_argument("n must be positive");
    std::size_t m = std::min<std::size_t>(n, slice.size());
    for (std::size_t k = 0; k < m; ++k) {
        if (k + 1 < m && !(slice[k].next_state == slice[k + 1].state))
            throw std::invalid_argument("trajectory slice is not contiguous");
        if (slice[k].terminal) return k + 1;
    }
    return m;
}

}  // namespace

double n_step_q_target(std::span<const TransitionRecord> slice, std::uint32_t n, const Models& models,
                       const BackupConfig& cfg) {
    const std::size_t m = window(slice, n);
    double g = 0.0, discount = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
        g += discount * slice[k].reward;
        if (slice[k].terminal) return g;
        discount *= cfg.gamma;
    }
    return g + discount * detail::leaf_value(slice[m - 1].next_state, models, cfg);
}

double tree_backup_target(std::span<const TransitionRecord> slice, std::uint32_t n, const Models& models,
                          const BackupConfig& cfg) {
    const std::size_t m = window(slice, n);
    const auto& last = slice[m - 1];
    const bool explicit_pi = cfg.policy_mode == PolicyMode::explicit_table;
    const bool use_double = cfg.double_q && !explicit_pi;

    // With double, a parallel recursion over the online model selects the
    // action at each state; the target recursion evaluates it.
    double g = one_step_target(last, models, cfg);
    double g_sel = 0.0;
    if (use_double) {
        g_sel = last.terminal ? last.reward : last.reward + cfg.gamma * max_q(models.online, last.next_state);
    }

    for (std::size_t k = m - 1; k-- > 0;) {
        const StateKey& s = slice[k].next_state;
        const Action taken = slice[k + 1].action;
        auto value = [&](Action a) { return a == taken ? g : models.target.q(s, a); };
        double cont = 0.0;
        if (explicit_pi) {
            auto pi = cfg.policy->probs(s);
            for (Action a = 0; a < pi.size(); ++a)
                if (pi[a] != 0.0) cont += pi[a] * value(a);
        } else if (use_double) {
            Action best = 0;
            double best_v = taken == 0 ? g_sel : models.online.q(s, 0);
            for (Action a = 1; a < models.online.action_count(); ++a) {
                double v = a == taken ? g_sel : models.online.q(s, a);
                if (v > best_v) {
                    best = a;
                    best_v = v;
                }
            }
            cont = value(best);
            g_sel = slice[k].reward + cfg.gamma * best_v;
        } else {
            cont = value(0);
            for (Action a = 1; a < models.target.action_count(); ++a) cont = std::max(cont, value(a));
        }
        g = slice[k].reward + cfg.gamma * cont;
    }
    return g;
}

}  // namespace gbl
