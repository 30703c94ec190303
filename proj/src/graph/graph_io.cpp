#include <cstdio>
#include <fstream>
#include <ostream>

#include "gbl/binary_io.hpp"
#include "gbl/transition_graph.hpp"

namespace gbl {

namespace {
constexpr std::string_view kMagic = "TGPH1";
}

// Record tags: S state key, I initial state (id, count), T transition,
// O observation total, Z end marker (record count).
void TransitionGraph::write_binary(std::ostream& os) const {
    io::RecordWriter w(os, kMagic);
    std::uint64_t records = 0;
    for (const auto& s : states_) {
        w.bytes(s.key.encoding()).emit('S');
        ++records;
    }
    for (std::size_t i = 0; i < initial_.size(); ++i) {
        w.u32(initial_[i]).u64(initial_counts_[i]).emit('I');
        ++records;
    }
    for (const auto& node : pairs_) {
        for (const auto& t : node.out) {
            w.u32(node.state).u32(node.action).f64(t.reward).u32(t.next).u8(t.terminal).u64(t.frequency).emit('T');
            ++records;
        }
    }
    w.u64(observations_).emit('O');
    ++records;
    w.u64(records).emit('Z');
}

TransitionGraph TransitionGraph::read_binary(std::istream& is) {
    io::RecordReader r(is, kMagic);
    TransitionGraph g;
    if (r.at_end()) return g;

    std::uint64_t records = 0;
    bool ended = false;
    while (!r.at_end()) {
        if (ended) throw ParseError("data after end record", r.offset());
        char tag = r.next_record();
        switch (tag) {
            case 'S': {
                bool created = false;
                g.intern(StateKey(r.rest()), created);
                if (!created) throw ParseError("duplicate state record", r.record_offset());
                break;
            }
            case 'I': {
                StateId id = r.u32();
                std::uint64_t n = r.u64();
                if (id >= g.states_.size()) throw ParseError("initial state id out of range", r.record_offset());
                g.initial_.push_back(id);
                g.initial_counts_.push_back(n);
                break;
            }
            case 'T': {
                StateId s = r.u32();
                Action a = r.u32();
                double reward = r.f64();
                StateId next = r.u32();
                std::uint8_t terminal = r.u8();
                std::uint64_t f = r.u64();
                if (s >= g.states_.size() || next >= g.states_.size())
                    throw ParseError("transition state id out of range", r.record_offset());
                if (f == 0 || terminal > 1) throw ParseError("invalid transition fields", r.record_offset());
                g.add_transition(s, a, reward, next, terminal != 0, f);
                break;
            }
            case 'O':
                g.observations_ = r.u64();
                break;
            case 'Z':
                if (r.u64() != records) throw ParseError("record count mismatch", r.record_offset());
                ended = true;
                break;
            default:
                throw ParseError(std::string("unknown record tag '") + tag + "'", r.record_offset());
        }
        r.finish_record();
        ++records;
    }
    if (!ended) throw ParseError("truncated file: missing end record", r.offset());
    return g;
}

void TransitionGraph::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_binary(os);
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

TransitionGraph TransitionGraph::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_binary(is);
}

void TransitionGraph::write_edge_list(std::ostream& os) const {
    char reward[32];
    for (const auto& node : pairs_) {
        for (const auto& t : node.out) {
            std::snprintf(reward, sizeof reward, "%.17g", t.reward);
            os << states_[node.state].key.hex() << ' ' << node.action << ' ' << reward << ' '
               << states_[t.next].key.hex() << ' ' << (t.terminal ? 1 : 0) << ' ' << t.frequency << '\n';
        }
    }
}

}  // namespace gbl
