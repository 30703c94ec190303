#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gbl/rng.hpp"
#include "gbl/state_key.hpp"

namespace gbl {

/// One recorded step. A terminal transition's next state is absorbing and
/// valued 0 by every backup.
struct TransitionRecord {
    StateKey state;
    Action action = 0;
    double reward = 0.0;
    StateKey next_state;
    bool terminal = false;

    friend bool operator==(const TransitionRecord&, const TransitionRecord&) = default;
};

struct StepResult {
    double reward = 0.0;
    StateKey next_state;
    bool terminal = false;
    /// Episode cut by max_episode_steps; the next state is not absorbing.
    bool truncated = false;
};

/// One branch of the known transition kernel.
struct Outcome {
    double probability = 1.0;
    double reward = 0.0;
    StateKey next_state;
    bool terminal = false;
};

struct EnvSpec {
    std::string name;
    std::vector<double> params;
    Action action_count = 0;
    std::uint32_t max_episode_steps = 0;
    bool stochastic = false;

    /// `Name:p1:p2` form accepted by make_environment.
    std::string describe() const;
};

/// Tabular MDP with a seeded sampling stream. Subclasses define the start
/// state and the transition kernel; stepping samples from the kernel.
class Environment {
public:
    virtual ~Environment() = default;

    const EnvSpec& spec() const noexcept { return spec_; }
    Action action_count() const noexcept { return spec_.action_count; }

    StateKey reset(std::uint64_t seed);
    StepResult step(Action action);

    const StateKey& state() const noexcept { return state_; }
    bool episode_over() const noexcept { return over_; }
    std::uint32_t steps_taken() const noexcept { return steps_; }

    virtual StateKey initial_state() const = 0;
    /// Kernel for a non-terminal state; probabilities sum to 1 and
    /// identical next states are merged.
    virtual std::vector<Outcome> outcomes(const StateKey& state, Action action) const = 0;
    virtual std::unique_ptr<Environment> clone() const = 0;
    /// False for environments whose reachable state set cannot be enumerated.
    virtual bool enumerable() const { return true; }

    /// Human-readable decoding of a key for diagnostics.
    virtual std::string describe_state(const StateKey& state) const { return state.hex(); }

protected:
    explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {}

private:
    EnvSpec spec_;
    Rng rng_{0};
    StateKey state_;
    std::uint32_t steps_ = 0;
    bool over_ = true;
};

/// n x n open room, start (0,0), goal (n-1,n-1). Actions: 0 up, 1 right,
/// 2 down, 3 left; moving into the border leaves the agent in place. With
/// slip > 0 the commanded action is replaced by a uniformly random one with
/// that probability (SlipperyGrid).
class GridWorld : public Environment {
public:
    GridWorld(int n, double slip);

    StateKey initial_state() const override;
    std::vector<Outcome> outcomes(const StateKey& state, Action action) const override;
    std::unique_ptr<Environment> clone() const override;
    std::string describe_state(const StateKey& state) const override;

    int size() const noexcept { return n_; }
    static StateKey key(int row, int col);

private:
    int n_;
    double slip_;
};

/// n x n grid split by a wall column at n/2 with a door at row (n-1)/2.
/// The key lies at (n-1, 0); the goal at (n-1, n-1). Action 4 picks up the
/// key when standing on it, or opens the door when carrying the key and
/// standing next to the door. A closed door blocks movement.
class DoorKeyGrid : public Environment {
public:
    explicit DoorKeyGrid(int n);

    StateKey initial_state() const override;
    std::vector<Outcome> outcomes(const StateKey& state, Action action) const override;
    std::unique_ptr<Environment> clone() const override;
    std::string describe_state(const StateKey& state) const override;

    static StateKey key(int row, int col, bool has_key, bool door_open);

private:
    int n_;
};

/// Integer-node MDP defined by a fixed table; used for the small
/// structural test environments.
class TableMdp : public Environment {
public:
    struct Edge {
        int next;
        double reward;
        bool terminal;
    };

    TableMdp(EnvSpec spec, int start, std::vector<std::vector<Edge>> table);

    StateKey initial_state() const override;
    std::vector<Outcome> outcomes(const StateKey& state, Action action) const override;
    std::unique_ptr<Environment> clone() const override;
    std::string describe_state(const StateKey& state) const override;

    static StateKey key(int node);

private:
    int start_;
    std::vector<std::vector<Edge>> table_;
};

std::unique_ptr<Environment> make_empty_grid(int n);
std::unique_ptr<Environment> make_slippery_grid(int n, double slip);
std::unique_ptr<Environment> make_door_key_grid(int n);
/// Chain of n states; action 1 moves right, action 0 left. Taking action 1
/// at the last state pays 1 and terminates.
std::unique_ptr<Environment> make_chain(int n);
/// Nodes A=0, B=1, C=2, goal=3. Action 0 at A is a self-loop.
std::unique_ptr<Environment> make_loop_mdp();
/// Two routes from S0 that share the interior node X. Route A
/// (actions 0,0,0,0) is rewarded; route B (actions 1,0,1,0) is not.
std::unique_ptr<Environment> make_crossover_mdp();

namespace crossover {
inline constexpr int kStart = 0, kA1 = 1, kB1 = 2, kCross = 3, kA3 = 4, kB3 = 5, kGoal = 6, kDead = 7;
inline const std::vector<Action> kRewardedRoute{0, 0, 0, 0};
inline const std::vector<Action> kUnrewardedRoute{1, 0, 1, 0};
}  // namespace crossover

/// Parses `Name:p1:p2` (e.g. `EmptyGrid:8`, `SlipperyGrid:5:0.2`).
std::unique_ptr<Environment> make_environment(std::string_view description);

/// Every state reachable from the start state whose kernel is defined,
/// in breadth-first order. Terminal next states are not expanded.
std::vector<StateKey> enumerate_states(const Environment& env);

}  // namespace gbl
