#include "gbl/value_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "gbl/binary_io.hpp"

namespace gbl {

std::vector<double> ValueEstimator::q_row(const StateKey& state) const {
    std::vector<double> row(action_count());
    for (Action a = 0; a < row.size(); ++a) row[a] = q(state, a);
    return row;
}

Action greedy_action(const ValueEstimator& model, const StateKey& state) {
    Action best = 0;
    double best_q = model.q(state, 0);
    for (Action a = 1; a < model.action_count(); ++a) {
        double v = model.q(state, a);
        if (v > best_q) {
            best = a;
            best_q = v;
        }
    }
    return best;
}

double max_q(const ValueEstimator& model, const StateKey& state) { return model.q(state, greedy_action(model, state)); }

// ScalarQTable

ScalarQTable::ScalarQTable(Action action_count) : actions_(action_count) {
    if (action_count == 0) throw std::invalid_argument("action count must be positive");
}

double ScalarQTable::q(const StateKey& state, Action action) const {
    auto it = values_.find(state);
    return it == values_.end() ? 0.0 : it->second.at(action);
}

void ScalarQTable::set(const StateKey& state, Action action, double value) {
    if (action >= actions_) throw std::out_of_range("action out of range");
    auto& row = values_.try_emplace(state, actions_, 0.0).first->second;
    row[action] = value;
}

void ScalarQTable::update(const StateKey& state, Action action, double target, double alpha) {
    if (!std::isfinite(target)) throw std::invalid_argument("non-finite backup target");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("learning rate must lie in (0, 1]");
    if (action >= actions_) throw std::out_of_range("action out of range");
    auto& row = values_.try_emplace(state, actions_, 0.0).first->second;
    row[action] += alpha * (target - row[action]);
}

std::vector<std::pair<StateKey, std::vector<double>>> ScalarQTable::rows() const {
    std::vector<std::pair<StateKey, std::vector<double>>> out(values_.begin(), values_.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

// CategoricalQTable

std::vector<double> CategoricalSupport::atom_values() const {
    std::vector<double> z(atoms);
    for (std::size_t i = 0; i < atoms; ++i) z[i] = atom(i);
    return z;
}

double expected_value(std::span<const double> dist, std::span<const double> atoms) {
    if (dist.size() != atoms.size()) throw std::invalid_argument("distribution and support sizes differ");
    double ev = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) ev += atoms[i] * dist[i];
    return ev;
}

double expected_value(std::span<const double> dist, const CategoricalSupport& support) {
    if (dist.size() != support.atoms) throw std::invalid_argument("distribution and support sizes differ");
    double ev = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) ev += support.atom(i) * dist[i];
    return ev;
}

CategoricalQTable::CategoricalQTable(Action action_count, CategoricalSupport support)
    : actions_(action_count), support_(support) {
    if (action_count == 0) throw std::invalid_argument("action count must be positive");
    if (support.atoms < 2 || !(support.v_max > support.v_min))
        throw std::invalid_argument("categorical support needs >= 2 atoms and v_max > v_min");
    atoms_ = support_.atom_values();
    uniform_.assign(support_.atoms, 1.0 / static_cast<double>(support_.atoms));
}

std::span<const double> CategoricalQTable::dist(const StateKey& state, Action action) const {
    if (action >= actions_) throw std::out_of_range("action out of range");
    auto it = probs_.find(state);
    if (it == probs_.end()) return uniform_;
    return std::span<const double>(it->second).subspan(action * support_.atoms, support_.atoms);
}

double CategoricalQTable::q(const StateKey& state, Action action) const {
    return expected_value(dist(state, action), atoms_);
}

std::vector<double>& CategoricalQTable::row(const StateKey& state) {
    auto it = probs_.find(state);
    if (it != probs_.end()) return it->second;
    std::vector<double> fresh;
    fresh.reserve(actions_ * support_.atoms);
    for (Action a = 0; a < actions_; ++a) fresh.insert(fresh.end(), uniform_.begin(), uniform_.end());
    return probs_.emplace(state, std::move(fresh)).first->second;
}

void CategoricalQTable::check_distribution(std::span<const double> probs) const {
    if (probs.size() != support_.atoms) throw std::invalid_argument("distribution has the wrong number of atoms");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("distribution has a negative or non-finite entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("distribution does not sum to 1");
}

void CategoricalQTable::set_dist(const StateKey& state, Action action, std::span<const double> probs) {
    if (action >= actions_) throw std::out_of_range("action out of range");
    check_distribution(probs);
    std::copy(probs.begin(), probs.end(), row(state).begin() + action * support_.atoms);
}

void CategoricalQTable::update(const StateKey& state, Action action, std::span<const double> target, double alpha) {
    if (action >= actions_) throw std::out_of_range("action out of range");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("learning rate must lie in (0, 1]");
    check_distribution(target);
    auto slot = row(state).begin() + action * support_.atoms;
    double sum = 0.0;
    for (std::size_t i = 0; i < support_.atoms; ++i) {
        slot[i] = (1.0 - alpha) * slot[i] + alpha * target[i];
        sum += slot[i];
    }
    for (std::size_t i = 0; i < support_.atoms; ++i) slot[i] /= sum;
}

// Persistence. Records: H header, V row (key length, key, values), Z end.

namespace {

constexpr std::string_view kTableMagic = "VTBL1";

void write_rows(io::RecordWriter& w, std::vector<std::pair<StateKey, const std::vector<double>*>> rows) {
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, values] : rows) {
        w.u32(static_cast<std::uint32_t>(key.encoding().size())).bytes(key.encoding());
        for (double v : *values) w.f64(v);
        w.emit('V');
    }
    w.u64(rows.size()).emit('Z');
}

struct TableHeader {
    std::uint8_t kind;
    Action actions;
    CategoricalSupport support;
};

template <typename Emit>
TableHeader read_rows(std::istream& is, std::uint8_t expected_kind, Emit&& emit_header_then_rows) {
    io::RecordReader r(is, kTableMagic);
    if (r.next_record() != 'H') throw ParseError("expected table header record", r.record_offset());
    TableHeader h{};
    h.kind = r.u8();
    h.actions = r.u32();
    h.support.atoms = r.u32();
    h.support.v_min = r.f64();
    h.support.v_max = r.f64();
    r.finish_record();
    if (h.kind != expected_kind) throw ParseError("value table has a different kind", 0);
    emit_header_then_rows(h, r);
    return h;
}

}  // namespace

void ScalarQTable::write_binary(std::ostream& os) const {
    io::RecordWriter w(os, kTableMagic);
    w.u8(0).u32(actions_).u32(1).f64(0.0).f64(0.0).emit('H');
    std::vector<std::pair<StateKey, const std::vector<double>*>> rows;
    for (const auto& [k, v] : values_) rows.emplace_back(k, &v);
    write_rows(w, std::move(rows));
}

void CategoricalQTable::write_binary(std::ostream& os) const {
    io::RecordWriter w(os, kTableMagic);
    w.u8(1).u32(actions_).u32(static_cast<std::uint32_t>(support_.atoms)).f64(support_.v_min).f64(support_.v_max).emit('H');
    std::vector<std::pair<StateKey, const std::vector<double>*>> rows;
    for (const auto& [k, v] : probs_) rows.emplace_back(k, &v);
    write_rows(w, std::move(rows));
}

namespace {

template <typename Store>
void read_body(io::RecordReader& r, std::size_t width, Store&& store) {
    std::uint64_t n = 0;
    for (;;) {
        if (r.at_end()) throw ParseError("truncated file: missing end record", r.offset());
        char tag = r.next_record();
        if (tag == 'Z') {
            if (r.u64() != n) throw ParseError("row count mismatch", r.record_offset());
            r.finish_record();
            if (!r.at_end()) throw ParseError("data after end record", r.offset());
            return;
        }
        if (tag != 'V') throw ParseError(std::string("unknown record tag '") + tag + "'", r.record_offset());
        std::uint32_t len = r.u32();
        std::vector<std::uint8_t> key(len);
        for (auto& b : key) b = r.u8();
        std::vector<double> values(width);
        for (auto& v : values) v = r.f64();
        r.finish_record();
        store(StateKey(std::move(key)), std::move(values));
        ++n;
    }
}

}  // namespace

ScalarQTable ScalarQTable::read_binary(std::istream& is) {
    std::optional<ScalarQTable> table;
    read_rows(is, 0, [&](const TableHeader& h, io::RecordReader& r) {
        if (h.actions == 0) throw ParseError("zero action count", 0);
        table.emplace(h.actions);
        read_body(r, h.actions, [&](StateKey k, std::vector<double> v) { table->values_.emplace(std::move(k), std::move(v)); });
    });
    return std::move(*table);
}

CategoricalQTable CategoricalQTable::read_binary(std::istream& is) {
    std::optional<CategoricalQTable> table;
    read_rows(is, 1, [&](const TableHeader& h, io::RecordReader& r) {
        if (h.actions == 0) throw ParseError("zero action count", 0);
        table.emplace(h.actions, h.support);
        read_body(r, h.actions * h.support.atoms,
                  [&](StateKey k, std::vector<double> v) { table->probs_.emplace(std::move(k), std::move(v)); });
    });
    return std::move(*table);
}

namespace {
template <typename Table>
void save_table(const Table& t, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    t.write_binary(os);
}
std::ifstream open_table(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return is;
}
}  // namespace

void ScalarQTable::save(const std::filesystem::path& path) const { save_table(*this, path); }
void CategoricalQTable::save(const std::filesystem::path& path) const { save_table(*this, path); }

ScalarQTable ScalarQTable::load(const std::filesystem::path& path) {
    auto is = open_table(path);
    return read_binary(is);
}

CategoricalQTable CategoricalQTable::load(const std::filesystem::path& path) {
    auto is = open_table(path);
    return read_binary(is);
}

}  // namespace gbl
