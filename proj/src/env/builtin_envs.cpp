#include <algorithm>
#include <array>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "gbl/env.hpp"

namespace gbl {

namespace {

constexpr std::array<int, 4> kDr{-1, 0, 1, 0};
constexpr std::array<int, 4> kDc{0, 1, 0, -1};

// Adds probability mass to an existing branch with the same next state, or
// appends a new branch.
void merge_outcome(std::vector<Outcome>& out, Outcome o) {
    for (auto& e : out) {
        if (e.next_state == o.next_state && e.reward == o.reward && e.terminal == o.terminal) {
            e.probability += o.probability;
            return;
        }
    }
    out.push_back(std::move(o));
}

}  // namespace

// GridWorld

GridWorld::GridWorld(int n, double slip)
    : Environment(EnvSpec{slip > 0.0 ? "SlipperyGrid" : "EmptyGrid",
                          slip > 0.0 ? std::vector<double>{double(n), slip} : std::vector<double>{double(n)},
                          4, static_cast<std::uint32_t>(4 * n * n), slip > 0.0}),
      n_(n),
      slip_(slip) {
    if (n < 2) throw std::invalid_argument("grid size must be at least 2");
    if (slip < 0.0 || slip > 1.0) throw std::invalid_argument("slip probability must lie in [0, 1]");
}

StateKey GridWorld::key(int row, int col) { return KeyWriter().i32(row).i32(col).finish(); }

StateKey GridWorld::initial_state() const { return key(0, 0); }

std::vector<Outcome> GridWorld::outcomes(const StateKey& state, Action action) const {
    KeyReader r(state);
    int row = r.i32(), col = r.i32();
    std::vector<Outcome> out;
    for (Action actual = 0; actual < 4; ++actual) {
        double p = (actual == action ? 1.0 - slip_ : 0.0) + slip_ / 4.0;
        if (p == 0.0) continue;
        int nr = std::clamp(row + kDr[actual], 0, n_ - 1);
        int nc = std::clamp(col + kDc[actual], 0, n_ - 1);
        bool goal = nr == n_ - 1 && nc == n_ - 1;
        merge_outcome(out, Outcome{p, goal ? 1.0 : 0.0, key(nr, nc), goal});
    }
    return out;
}

std::unique_ptr<Environment> GridWorld::clone() const { return std::make_unique<GridWorld>(*this); }

std::string GridWorld::describe_state(const StateKey& state) const {
    KeyReader r(state);
    int row = r.i32(), col = r.i32();
    std::ostringstream os;
    os << '(' << row << ',' << col << ')';
    return os.str();
}

// DoorKeyGrid

DoorKeyGrid::DoorKeyGrid(int n)
    : Environment(EnvSpec{"DoorKeyGrid", {double(n)}, 5, static_cast<std::uint32_t>(10 * n * n), false}), n_(n) {
    if (n < 4) throw std::invalid_argument("DoorKeyGrid size must be at least 4");
}

StateKey DoorKeyGrid::key(int row, int col, bool has_key, bool door_open) {
    return KeyWriter().i32(row).i32(col).u8(has_key).u8(door_open).finish();
}

StateKey DoorKeyGrid::initial_state() const { return key(0, 0, false, false); }

std::vector<Outcome> DoorKeyGrid::outcomes(const StateKey& state, Action action) const {
    KeyReader r(state);
    int row = r.i32(), col = r.i32();
    bool has_key = r.u8() != 0, door_open = r.u8() != 0;

    const int wall_col = n_ / 2, door_row = (n_ - 1) / 2;
    const int key_row = n_ - 1, key_col = 0;

    if (action == 4) {
        if (row == key_row && col == key_col && !has_key) {
            has_key = true;
        } else if (has_key && !door_open && std::abs(row - door_row) + std::abs(col - wall_col) == 1) {
            door_open = true;
        }
    } else {
        int nr = std::clamp(row + kDr[action], 0, n_ - 1);
        int nc = std::clamp(col + kDc[action], 0, n_ - 1);
        bool blocked = nc == wall_col && (nr != door_row || !door_open);
        if (!blocked) {
            row = nr;
            col = nc;
        }
    }
    bool goal = row == n_ - 1 && col == n_ - 1;
    return {Outcome{1.0, goal ? 1.0 : 0.0, key(row, col, has_key, door_open), goal}};
}

std::unique_ptr<Environment> DoorKeyGrid::clone() const { return std::make_unique<DoorKeyGrid>(*this); }

std::string DoorKeyGrid::describe_state(const StateKey& state) const {
    KeyReader r(state);
    int row = r.i32(), col = r.i32();
    int has_key = r.u8(), door_open = r.u8();
    std::ostringstream os;
    os << '(' << row << ',' << col << (has_key ? ",key" : "") << (door_open ? ",open" : "") << ')';
    return os.str();
}

// TableMdp

TableMdp::TableMdp(EnvSpec spec, int start, std::vector<std::vector<Edge>> table)
    : Environment(std::move(spec)), start_(start), table_(std::move(table)) {
    for (const auto& row : table_) {
        if (!row.empty() && row.size() != this->spec().action_count)
            throw std::invalid_argument("table row width must equal action count");
    }
}

StateKey TableMdp::key(int node) { return KeyWriter().i32(node).finish(); }

StateKey TableMdp::initial_state() const { return key(start_); }

std::vector<Outcome> TableMdp::outcomes(const StateKey& state, Action action) const {
    KeyReader r(state);
    int node = r.i32();
    if (node < 0 || static_cast<std::size_t>(node) >= table_.size() || table_[node].empty())
        throw std::logic_error("no transitions defined for node " + std::to_string(node));
    const auto& e = table_[node][action];
    return {Outcome{1.0, e.reward, key(e.next), e.terminal}};
}

std::unique_ptr<Environment> TableMdp::clone() const { return std::make_unique<TableMdp>(*this); }

std::string TableMdp::describe_state(const StateKey& state) const {
    KeyReader r(state);
    return "n" + std::to_string(r.i32());
}

// Factories

std::unique_ptr<Environment> make_empty_grid(int n) { return std::make_unique<GridWorld>(n, 0.0); }

std::unique_ptr<Environment> make_slippery_grid(int n, double slip) {
    if (slip <= 0.0) throw std::invalid_argument("SlipperyGrid needs a positive slip probability");
    return std::make_unique<GridWorld>(n, slip);
}

std::unique_ptr<Environment> make_door_key_grid(int n) { return std::make_unique<DoorKeyGrid>(n); }

std::unique_ptr<Environment> make_chain(int n) {
    if (n < 1) throw std::invalid_argument("chain length must be positive");
    std::vector<std::vector<TableMdp::Edge>> table(n + 1);
    for (int i = 0; i < n; ++i) {
        table[i].push_back({std::max(i - 1, 0), 0.0, false});
        if (i + 1 < n)
            table[i].push_back({i + 1, 0.0, false});
        else
            table[i].push_back({n, 1.0, true});
    }
    return std::make_unique<TableMdp>(
        EnvSpec{"ChainMDP", {double(n)}, 2, static_cast<std::uint32_t>(10 * n), false}, 0, std::move(table));
}

std::unique_ptr<Environment> make_loop_mdp() {
    // A: 0 -> A (self-loop), 1 -> B.  B: 0 -> C, 1 -> A.  C: 0 -> goal (+1), 1 -> B.
    std::vector<std::vector<TableMdp::Edge>> table{
        {{0, 0.0, false}, {1, 0.0, false}},
        {{2, 0.0, false}, {0, 0.0, false}},
        {{3, 1.0, true}, {1, 0.0, false}},
        {},
    };
    return std::make_unique<TableMdp>(EnvSpec{"LoopMDP", {}, 2, 50, false}, 0, std::move(table));
}

std::unique_ptr<Environment> make_crossover_mdp() {
    using namespace crossover;
    std::vector<std::vector<TableMdp::Edge>> table(8);
    table[kStart] = {{kA1, 0.0, false}, {kB1, 0.0, false}};
    table[kA1] = {{kCross, 0.0, false}, {kCross, 0.0, false}};
    table[kB1] = {{kCross, 0.0, false}, {kCross, 0.0, false}};
    table[kCross] = {{kA3, 0.0, false}, {kB3, 0.0, false}};
    table[kA3] = {{kGoal, 1.0, true}, {kGoal, 1.0, true}};
    table[kB3] = {{kDead, 0.0, true}, {kDead, 0.0, true}};
    return std::make_unique<TableMdp>(EnvSpec{"CrossoverMDP", {}, 2, 10, false}, kStart, std::move(table));
}

}  // namespace gbl
