#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "gbl/env.hpp"

namespace gbl {

struct LoggedStep {
    std::uint64_t episode = 0;
    std::uint32_t step = 0;
    TransitionRecord record;

    friend bool operator==(const LoggedStep&, const LoggedStep&) = default;
};

/// Transitions in the order they were experienced, tagged with episode and
/// in-episode step index.
using TrajectoryLog = std::vector<LoggedStep>;

/// Line format: `episode step hex(s) a r hex(s') done`.
void write_trajectory_log(std::ostream& os, std::span<const LoggedStep> log);
void save_trajectory_log(const std::filesystem::path& path, std::span<const LoggedStep> log);
/// Throws ParseError carrying the 1-based line number.
TrajectoryLog read_trajectory_log(std::istream& is);
TrajectoryLog load_trajectory_log(const std::filesystem::path& path);

/// Plays a fixed action sequence from reset(seed); stops early at episode end.
TrajectoryLog rollout(Environment& env, std::span<const Action> actions, std::uint64_t seed, std::uint64_t episode = 0);

/// Uniform random-action episodes until `transitions` steps are collected.
TrajectoryLog random_walk_dataset(const Environment& prototype, std::size_t transitions, std::uint64_t seed);

/// Episode boundaries: each span is one episode's records in order.
std::vector<std::span<const LoggedStep>> split_episodes(std::span<const LoggedStep> log);

/// Fixed-capacity replay storage in arrival order.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    /// Appends a record belonging to `episode`. Throws when full.
    void push(const TransitionRecord& record, std::uint64_t episode);

    std::size_t size() const noexcept { return records_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool empty() const noexcept { return records_.empty(); }
    const TransitionRecord& operator[](std::size_t i) const { return records_[i]; }

    /// Records from i to the end of i's episode (as stored so far), at most n.
    std::span<const TransitionRecord> slice(std::size_t i, std::size_t n) const;

    std::size_t sample_index(Rng& rng) const;

private:
    std::size_t capacity_;
    std::vector<TransitionRecord> records_;
    std::vector<std::uint64_t> episode_;
};

}  // namespace gbl
