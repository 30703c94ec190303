#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "gbl/state_key.hpp"

namespace gbl {

/// Read-only state-action value lookup consumed by the backup operators.
class ValueEstimator {
public:
    virtual ~ValueEstimator() = default;
    virtual Action action_count() const noexcept = 0;
    virtual double q(const StateKey& state, Action action) const = 0;

    std::vector<double> q_row(const StateKey& state) const;
};

/// argmax_a q(s,a); ties go to the lowest action index.
Action greedy_action(const ValueEstimator& model, const StateKey& state);
double max_q(const ValueEstimator& model, const StateKey& state);

/// Tabular q with default 0 for unseen pairs.
class ScalarQTable final : public ValueEstimator {
public:
    explicit ScalarQTable(Action action_count);

    Action action_count() const noexcept override { return actions_; }
    double q(const StateKey& state, Action action) const override;

    void set(const StateKey& state, Action action, double value);
    /// Tabular SGD step on the squared error: q <- q + alpha (target - q).
    void update(const StateKey& state, Action action, double target, double alpha);

    std::size_t size() const noexcept { return values_.size(); }
    std::shared_ptr<const ScalarQTable> snapshot() const { return std::make_shared<const ScalarQTable>(*this); }

    /// Rows sorted by state encoding.
    std::vector<std::pair<StateKey, std::vector<double>>> rows() const;

    void save(const std::filesystem::path& path) const;
    static ScalarQTable load(const std::filesystem::path& path);
    void write_binary(std::ostream& os) const;
    static ScalarQTable read_binary(std::istream& is);

    friend bool operator==(const ScalarQTable& a, const ScalarQTable& b) {
        return a.actions_ == b.actions_ && a.values_ == b.values_;
    }

private:
    Action actions_;
    std::unordered_map<StateKey, std::vector<double>, StateKeyHash> values_;
};

/// Fixed categorical support z_i = v_min + i * delta.
struct CategoricalSupport {
    std::size_t atoms = 51;
    double v_min = 0.0;
    double v_max = 1.0;

    double delta() const noexcept { return (v_max - v_min) / static_cast<double>(atoms - 1); }
    double atom(std::size_t i) const noexcept { return v_min + static_cast<double>(i) * delta(); }
    std::vector<double> atom_values() const;

    friend bool operator==(const CategoricalSupport&, const CategoricalSupport&) = default;
};

double expected_value(std::span<const double> dist, std::span<const double> atoms);
double expected_value(std::span<const double> dist, const CategoricalSupport& support);

/// Tabular categorical value distribution per pair, default uniform.
class CategoricalQTable final : public ValueEstimator {
public:
    CategoricalQTable(Action action_count, CategoricalSupport support);

    Action action_count() const noexcept override { return actions_; }
    const CategoricalSupport& support() const noexcept { return support_; }
    std::span<const double> atoms() const noexcept { return atoms_; }

    /// Expected value of the stored distribution.
    double q(const StateKey& state, Action action) const override;
    std::span<const double> dist(const StateKey& state, Action action) const;

    void set_dist(const StateKey& state, Action action, std::span<const double> probs);
    /// Stored vector <- normalize((1 - alpha) p + alpha m).
    void update(const StateKey& state, Action action, std::span<const double> target, double alpha);

    std::size_t size() const noexcept { return probs_.size(); }
    std::shared_ptr<const CategoricalQTable> snapshot() const {
        return std::make_shared<const CategoricalQTable>(*this);
    }

    void save(const std::filesystem::path& path) const;
    static CategoricalQTable load(const std::filesystem::path& path);
    void write_binary(std::ostream& os) const;
    static CategoricalQTable read_binary(std::istream& is);

    friend bool operator==(const CategoricalQTable& a, const CategoricalQTable& b) {
        return a.actions_ == b.actions_ && a.support_ == b.support_ && a.probs_ == b.probs_;
    }

private:
    std::vector<double>& row(const StateKey& state);
    void check_distribution(std::span<const double> probs) const;

    Action actions_;
    CategoricalSupport support_;
    std::vector<double> atoms_;
    std::vector<double> uniform_;
    std::unordered_map<StateKey, std::vector<double>, StateKeyHash> probs_;
};

}  // namespace gbl
