#pragma once

#include <unordered_map>

#include "gbl/backup.hpp"

namespace gbl::detail {

/// Continuation value at a state that is not expanded: the target model
/// combined under the configured target policy.
double leaf_value(const StateKey& s, const Models& models, const BackupConfig& cfg);

inline std::uint64_t memo_key(StateId s, Action a) { return (std::uint64_t(s) << 32) | a; }

/// Invokes fn(begin, end) for each run of consecutive selected transitions
/// sharing the same key.
template <typename KeyOf, typename Fn>
void for_each_group_reversed(const TransitionGraph& graph, std::span<const TransitionRef> selected, KeyOf key_of,
                             Fn fn) {
    std::size_t end = selected.size();
    while (end > 0) {
        std::size_t begin = end - 1;
        auto key = key_of(graph, selected[begin]);
        while (begin > 0 && key_of(graph, selected[begin - 1]) == key) --begin;
        fn(begin, end);
        end = begin;
    }
}

}  // namespace gbl::detail
