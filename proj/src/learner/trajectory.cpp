#include "gbl/trajectory.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gbl/errors.hpp"
#include "gbl/rng.hpp"

namespace gbl {

void write_trajectory_log(std::ostream& os, std::span<const LoggedStep> log) {
    char reward[32];
    for (const auto& e : log) {
        std::snprintf(reward, sizeof reward, "%.17g", e.record.reward);
        os << e.episode << ' ' << e.step << ' ' << e.record.state.hex() << ' ' << e.record.action << ' ' << reward
           << ' ' << e.record.next_state.hex() << ' ' << (e.record.terminal ? 1 : 0) << '\n';
    }
}

void save_trajectory_log(const std::filesystem::path& path, std::span<const LoggedStep> log) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_trajectory_log(os, log);
}

namespace {

template <typename T>
T parse_number(const std::string& field, std::size_t line) {
    T v{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("bad numeric field '" + field + "'", line);
    return v;
}

}  // namespace

TrajectoryLog read_trajectory_log(std::istream& is) {
    TrajectoryLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string f[7], extra;
        for (auto& x : f)
            if (!(fields >> x)) throw ParseError("expected 7 fields", lineno);
        if (fields >> extra) throw ParseError("trailing fields", lineno);
        LoggedStep e;
        e.episode = parse_number<std::uint64_t>(f[0], lineno);
        e.step = parse_number<std::uint32_t>(f[1], lineno);
        try {
            e.record.state = StateKey::from_hex(f[2]);
            e.record.next_state = StateKey::from_hex(f[5]);
        } catch (const std::invalid_argument& err) {
            throw ParseError(err.what(), lineno);
        }
        e.record.action = parse_number<Action>(f[3], lineno);
        e.record.reward = parse_number<double>(f[4], lineno);
        auto done = parse_number<int>(f[6], lineno);
        if (done != 0 && done != 1) throw ParseError("done flag must be 0 or 1", lineno);
        e.record.terminal = done == 1;
        log.push_back(std::move(e));
    }
    return log;
}

TrajectoryLog load_trajectory_log(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_trajectory_log(is);
}

TrajectoryLog rollout(Environment& env, std::span<const Action> actions, std::uint64_t seed, std::uint64_t episode) {
    TrajectoryLog log;
    StateKey s = env.reset(seed);
    for (Action a : actions) {
        auto r = env.step(a);
        log.push_back(LoggedStep{episode, static_cast<std::uint32_t>(log.size()),
                                 TransitionRecord{s, a, r.reward, r.next_state, r.terminal}});
        s = std::move(r.next_state);
        if (env.episode_over()) break;
    }
    return log;
}

TrajectoryLog random_walk_dataset(const Environment& prototype, std::size_t transitions, std::uint64_t seed) {
    auto env = prototype.clone();
    Rng rng(derive_seed(seed, 0x72616e64));
    TrajectoryLog log;
    std::uint64_t episode = 0;
    StateKey s = env->reset(derive_seed(seed, episode));
    std::uint32_t step = 0;
    while (log.size() < transitions) {
        auto a = static_cast<Action>(rng.below(env->action_count()));
        auto r = env->step(a);
        log.push_back(LoggedStep{episode, step++, TransitionRecord{s, a, r.reward, r.next_state, r.terminal}});
        if (env->episode_over()) {
            ++episode;
            step = 0;
            s = env->reset(derive_seed(seed, episode));
        } else {
            s = std::move(r.next_state);
        }
    }
    return log;
}

std::vector<std::span<const LoggedStep>> split_episodes(std::span<const LoggedStep> log) {
    std::vector<std::span<const LoggedStep>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= log.size(); ++i) {
        if (i == log.size() || log[i].episode != log[begin].episode || log[i].step == 0) {
            out.push_back(log.subspan(begin, i - begin));
            begin = i;
        }
    }
    return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    records_.reserve(capacity);
    episode_.reserve(capacity);
}

void ReplayBuffer::push(const TransitionRecord& record, std::uint64_t episode) {
    if (records_.size() == capacity_) throw std::length_error("replay buffer is full");
    records_.push_back(record);
    episode_.push_back(episode);
}

std::span<const TransitionRecord> ReplayBuffer::slice(std::size_t i, std::size_t n) const {
    std::size_t end = i;
    while (end < records_.size() && end - i < n && episode_[end] == episode_[i]) ++end;
    return std::span<const TransitionRecord>(records_).subspan(i, end - i);
}

std::size_t ReplayBuffer::sample_index(Rng& rng) const { return static_cast<std::size_t>(rng.below(records_.size())); }

}  // namespace gbl
