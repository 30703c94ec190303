#include "gbl/env.hpp"

#include <charconv>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace gbl {

std::string EnvSpec::describe() const {
    std::ostringstream os;
    os << name;
    for (double p : params) os << ':' << p;
    return os.str();
}

StateKey Environment::reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    state_ = initial_state();
    steps_ = 0;
    over_ = false;
    return state_;
}

StepResult Environment::step(Action action) {
    if (over_) throw std::logic_error("step() called on a finished episode; call reset() first");
    if (action >= spec_.action_count)
        throw std::out_of_range("action " + std::to_string(action) + " out of range for " + spec_.name);

    auto branches = outcomes(state_, action);
    std::size_t pick = 0;
    if (branches.size() > 1) {
        double u = rng_.uniform();
        double acc = 0.0;
        pick = branches.size() - 1;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            acc += branches[i].probability;
            if (u < acc) {
                pick = i;
                break;
            }
        }
    }
    auto& chosen = branches[pick];
    ++steps_;
    state_ = chosen.next_state;

    StepResult result{chosen.reward, std::move(chosen.next_state), chosen.terminal, false};
    if (result.terminal) {
        over_ = true;
    } else if (steps_ >= spec_.max_episode_steps) {
        result.truncated = true;
        over_ = true;
    }
    return result;
}

std::vector<StateKey> enumerate_states(const Environment& env) {
    std::vector<StateKey> order;
    std::unordered_set<StateKey, StateKeyHash> seen;
    std::deque<StateKey> frontier;
    auto start = env.initial_state();
    seen.insert(start);
    frontier.push_back(start);
    while (!frontier.empty()) {
        StateKey s = std::move(frontier.front());
        frontier.pop_front();
        for (Action a = 0; a < env.action_count(); ++a) {
            for (auto& o : env.outcomes(s, a)) {
                if (o.terminal) continue;
                if (seen.insert(o.next_state).second) frontier.push_back(o.next_state);
            }
        }
        order.push_back(std::move(s));
    }
    return order;
}

namespace {

std::vector<double> parse_params(std::string_view text, std::string& name) {
    std::vector<double> params;
    auto colon = text.find(':');
    name = std::string(text.substr(0, colon));
    while (colon != std::string_view::npos) {
        text = text.substr(colon + 1);
        colon = text.find(':');
        auto field = text.substr(0, colon);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw std::invalid_argument("bad environment parameter '" + std::string(field) + "'");
        params.push_back(v);
    }
    return params;
}

int int_param(const std::vector<double>& p, std::size_t i, int fallback) {
    if (i >= p.size()) return fallback;
    if (p[i] != static_cast<int>(p[i])) throw std::invalid_argument("integer parameter expected");
    return static_cast<int>(p[i]);
}

}  // namespace

std::unique_ptr<Environment> make_environment(std::string_view description) {
    std::string name;
    auto p = parse_params(description, name);
    auto expect_at_most = [&](std::size_t n) {
        if (p.size() > n) throw std::invalid_argument("too many parameters for " + name);
    };
    if (name == "EmptyGrid") {
        expect_at_most(1);
        return make_empty_grid(int_param(p, 0, 8));
    }
    if (name == "SlipperyGrid") {
        expect_at_most(2);
        return make_slippery_grid(int_param(p, 0, 5), p.size() > 1 ? p[1] : 0.2);
    }
    if (name == "DoorKeyGrid") {
        expect_at_most(1);
        return make_door_key_grid(int_param(p, 0, 6));
    }
    if (name == "ChainMDP") {
        expect_at_most(1);
        return make_chain(int_param(p, 0, 5));
    }
    if (name == "LoopMDP") {
        expect_at_most(0);
        return make_loop_mdp();
    }
    if (name == "CrossoverMDP") {
        expect_at_most(0);
        return make_crossover_mdp();
    }
    throw std::invalid_argument("unknown environment '" + name + "'");
}

}  // namespace gbl
