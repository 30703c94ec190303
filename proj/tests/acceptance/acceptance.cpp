// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when everything passes).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "../support/fixtures.hpp"
#include "gbl/analysis.hpp"
#include "gbl/backup.hpp"
#include "gbl/cli.hpp"
#include "gbl/learner.hpp"

using namespace gbl;
using gbl::testing::node;

namespace {

// Tolerances and limits.
constexpr double kOracleTol = 1e-12;
constexpr double kTreeTol = 1e-12;
constexpr double kDistTol = 1e-3;
constexpr double kNormTol = 1e-9;
constexpr double kCrossoverTarget = 0.5314;
constexpr double kCrossoverTol = 0.0005;
constexpr double kStabilityRatio = 0.1;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Verdict()> run;
};

std::string format(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

BackupConfig config(BackupOperator op, std::uint32_t depth, std::uint32_t breadth, double gamma) {
    BackupConfig cfg;
    cfg.op = op;
    cfg.depth = depth;
    cfg.breadth = breadth;
    cfg.gamma = gamma;
    return cfg;
}

Verdict oracle_equivalence() {
    Rng rng(1001);
    double worst = 0.0;
    std::size_t pairs = 0;
    const int datasets = 120;
    for (int d = 0; d < datasets; ++d) {
        auto g = gbl::testing::random_acyclic_graph(rng, 50, 4);
        auto q = gbl::testing::random_table(rng, 50, 4);
        auto cfg = config(BackupOperator::graph, longest_path(g), static_cast<std::uint32_t>(g.total_transitions()), 0.9);
        for (auto [s, a] : gbl::testing::stored_pairs(g)) {
            Rng r(derive_seed(d, a, s.digest()));
            double graph = graph_backup_target(g, s, a, Models{q, q}, cfg, r);
            double naive = naive_recursive_target(g, s, a, q, cfg.gamma);
            worst = std::max(worst, std::abs(graph - naive));
            ++pairs;
        }
    }
    return {worst <= kOracleTol, format("%d datasets, %zu pairs, max |graph - naive| = %.3g", datasets, pairs, worst)};
}

Verdict tree_reduction() {
    Rng rng(2002);
    double worst = 0.0;
    std::size_t checks = 0;
    const int datasets = 60;
    for (int d = 0; d < datasets; ++d) {
        int length = 1 + static_cast<int>(rng.below(15));
        auto traj = gbl::testing::random_trajectory(rng, length, 4, rng.bernoulli(0.5));
        auto g = gbl::testing::graph_from(std::span<const TransitionRecord>(traj));
        auto q = gbl::testing::random_table(rng, length + 1, 4);
        for (std::uint32_t depth = 1; depth <= 8; ++depth) {
            auto cfg = config(BackupOperator::graph, depth, 1 + static_cast<std::uint32_t>(rng.below(4)), 0.9);
            for (int i = 0; i < length; ++i) {
                std::span<const TransitionRecord> slice(traj.begin() + i, traj.end());
                Rng r(static_cast<std::uint64_t>(i));
                double tree = tree_backup_target(slice, depth, Models{q, q}, cfg);
                double graph = graph_backup_target(g, slice[0].state, slice[0].action, Models{q, q}, cfg, r);
                worst = std::max(worst, std::abs(tree - graph));
                ++checks;
            }
        }
    }
    return {worst <= kTreeTol, format("%d trajectories, %zu (source, d) checks, max |graph - tree| = %.3g", datasets,
                                      checks, worst)};
}

Verdict base_case_chain() {
    auto env = make_environment("EmptyGrid:8");
    auto log = random_walk_dataset(*env, 10000, 3003);
    Rng rng(3);
    ScalarQTable q(4);
    for (const auto& s : log)
        for (Action a = 0; a < 4; ++a) q.set(s.record.next_state, a, rng.uniform());
    auto cfg = config(BackupOperator::one_step, 1, 1, 0.95);
    Models m{q, q};
    std::size_t mismatches = 0;
    std::vector<TransitionRecord> records;
    for (const auto& s : log) records.push_back(s.record);
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::size_t end = i;
        while (end < records.size() && log[end].episode == log[i].episode) ++end;
        std::span<const TransitionRecord> slice(records.begin() + static_cast<std::ptrdiff_t>(i),
                                                records.begin() + static_cast<std::ptrdiff_t>(end));
        double one = one_step_target(slice[0], m, cfg);
        mismatches += n_step_q_target(slice, 1, m, cfg) != one;
        mismatches += tree_backup_target(slice, 1, m, cfg) != one;
    }
    return {mismatches == 0, format("%zu transitions, %zu inexact matches", records.size(), mismatches)};
}

Verdict counterfactual() {
    auto env = make_crossover_mdp();
    auto good = rollout(*env, crossover::kRewardedRoute, 0, 0);
    auto bad = rollout(*env, crossover::kUnrewardedRoute, 0, 1);
    TrajectoryLog log = good;
    log.insert(log.end(), bad.begin(), bad.end());
    auto g = gbl::testing::graph_from(std::span<const LoggedStep>(log));
    ScalarQTable zero(env->action_count());
    Models m{zero, zero};
    auto cfg = config(BackupOperator::graph, 5, 50, 0.95);

    std::vector<TransitionRecord> records;
    for (const auto& s : bad) records.push_back(s.record);
    auto pre = std::find_if(records.begin(), records.end(),
                            [](const TransitionRecord& r) { return r.state == TableMdp::key(crossover::kB1); });
    std::span<const TransitionRecord> slice(pre, records.end());
    Rng rng(0);
    double graph = graph_backup_target(g, slice[0].state, slice[0].action, m, cfg, rng);
    double nstep = n_step_q_target(slice, cfg.depth, m, cfg);
    double tree = tree_backup_target(slice, cfg.depth, m, cfg);
    return {graph > 0.0 && nstep == 0.0 && tree == 0.0,
            format("graph %.6g, n-step-Q %.6g, tree %.6g at the pre-crossover pair", graph, nstep, tree)};
}

struct StabilitySummary {
    double initial = 0.0;     // first point with full windows
    double end = 0.0;         // mean over the final target-update period
    double last_point = 0.0;  // literal last report
};

StabilitySummary stability_for(BackupOperator op, const LearnerConfig& base) {
    auto env = make_environment("EmptyGrid:5");
    StabilitySummary sum;
    const std::size_t period = base.target_update_every / base.report_every;
    const int seeds = 5;
    for (int seed = 0; seed < seeds; ++seed) {
        auto data = random_walk_dataset(*env, 5000, static_cast<std::uint64_t>(seed));
        auto lcfg = base;
        lcfg.seed = static_cast<std::uint64_t>(seed);
        BackupConfig b;
        b.op = op;
        auto r = offline_training(data, env->action_count(), lcfg, b);
        const auto& st = r.metrics.stability;
        double tail = 0.0;
        for (std::size_t i = st.size() - period; i < st.size(); ++i) tail += st[i].mean_of_stds;
        sum.initial += st.front().mean_of_stds / seeds;
        sum.end += tail / static_cast<double>(period) / seeds;
        sum.last_point += st.back().mean_of_stds / seeds;
    }
    return sum;
}

Verdict stability() {
    LearnerConfig lcfg;
    lcfg.total_steps = 2000;
    const char* names[] = {"graph", "one_step", "n_step_q", "tree"};
    StabilitySummary s[4];
    for (int i = 0; i < 4; ++i) s[i] = stability_for(parse_operator(names[i]), lcfg);
    bool pass = s[0].end < kStabilityRatio * s[0].initial;
    std::string detail = format("end std (mean over last target period; last point): graph %.3g (%.3g, initial %.3g)",
                                s[0].end, s[0].last_point, s[0].initial);
    for (int i = 1; i < 4; ++i) {
        pass = pass && s[0].end < s[i].end;
        detail += format(", %s %.3g (%.3g)", names[i], s[i].end, s[i].last_point);
    }
    return {pass, detail};
}

Verdict learning_ordering() {
    const char* envs[] = {"EmptyGrid:8", "DoorKeyGrid:6"};
    const BackupOperator ops[] = {BackupOperator::graph, BackupOperator::tree, BackupOperator::one_step};
    bool pass = true;
    std::string detail;
    for (const char* name : envs) {
        auto env = make_environment(name);
        double med[3];
        for (int o = 0; o < 3; ++o) {
            std::vector<double> finals;
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                LearnerConfig lcfg;
                lcfg.total_steps = 20000;
                lcfg.seed = seed;
                BackupConfig b;
                b.op = ops[o];
                finals.push_back(run_training(*env, lcfg, b).metrics.final_eval_return);
            }
            std::sort(finals.begin(), finals.end());
            med[o] = finals[2];
        }
        pass = pass && med[0] >= med[1] && med[0] >= med[2];
        if (std::string(name) == "EmptyGrid:8") pass = pass && med[0] == 1.0;
        detail += format("%s%s median graph %.3g tree %.3g one_step %.3g", detail.empty() ? "" : "; ", name, med[0],
                         med[1], med[2]);
    }
    return {pass, detail};
}

Verdict distributional() {
    Rng rng(7007);
    CategoricalSupport support{2001, 0.0, 20.0};
    double worst = 0.0, worst_norm = 0.0, min_atom = 0.0;
    std::size_t pairs = 0;
    const int datasets = 20;
    for (int d = 0; d < datasets; ++d) {
        auto g = gbl::testing::random_acyclic_graph(rng, 12, 3);
        CategoricalQTable cat(3, support);
        ScalarQTable scalar(3);
        for (int s = 0; s < 12; ++s) {
            for (Action a = 0; a < 3; ++a) {
                // random distribution over the atoms in [0, 5]
                std::vector<double> p(support.atoms, 0.0);
                for (int k = 0; k < 4; ++k) p[rng.below(501)] += rng.uniform() + 0.01;
                double total = std::accumulate(p.begin(), p.end(), 0.0);
                for (double& x : p) x /= total;
                cat.set_dist(node(s), a, p);
                scalar.set(node(s), a, expected_value(cat.dist(node(s), a), support));
            }
        }
        auto cfg = config(BackupOperator::graph, 4, 6, 0.9);
        cfg.distributional = true;
        for (auto [s, a] : gbl::testing::stored_pairs(g)) {
            Rng r(derive_seed(d, a, s.digest()));
            auto e = expand_local_graph(g, s, a, cfg.depth, cfg.breadth, r);
            auto m = distributional_graph_backup(g, e, CategoricalModels{cat, cat}, cfg);
            worst_norm = std::max(worst_norm, std::abs(std::accumulate(m.begin(), m.end(), 0.0) - 1.0));
            min_atom = std::min(min_atom, *std::min_element(m.begin(), m.end()));
            double scalar_target = graph_backup_target(g, e, Models{scalar, scalar}, cfg);
            worst = std::max(worst, std::abs(expected_value(m, support) - scalar_target));
            ++pairs;
        }
    }
    return {worst <= kDistTol && worst_norm <= kNormTol && min_atom >= 0.0,
            format("%d datasets, %zu pairs, max |E[m] - scalar| = %.3g, max |sum - 1| = %.3g, min atom %.3g", datasets,
                   pairs, worst, worst_norm, min_atom)};
}

Verdict crossover_figure() {
    double p = crossover_probability(0.927, 10);
    return {std::abs(p - kCrossoverTarget) <= kCrossoverTol, format("crossover_probability(0.927, 10) = %.6f", p)};
}

Verdict double_consistency() {
    Rng rng(9009);
    std::size_t pairs = 0, diffs = 0;
    for (int d = 0; d < 20; ++d) {
        auto g = gbl::testing::random_acyclic_graph(rng, 30, 4);
        // add a few back edges so that revisits and cycles are exercised
        for (int k = 0; k < 5; ++k)
            g.insert({node(static_cast<int>(rng.below(20)) + 5), static_cast<Action>(rng.below(4)), rng.uniform(),
                      node(static_cast<int>(rng.below(5))), false});
        auto q = gbl::testing::random_table(rng, 30, 4);
        auto cfg = config(BackupOperator::graph, 5, 8, 0.9);
        auto dbl = cfg;
        dbl.double_q = true;
        for (auto [s, a] : gbl::testing::stored_pairs(g)) {
            Rng r1(derive_seed(d, a, s.digest())), r2(derive_seed(d, a, s.digest()));
            diffs += graph_backup_target(g, s, a, Models{q, q}, cfg, r1) !=
                     graph_backup_target(g, s, a, Models{q, q}, dbl, r2);
            ++pairs;
        }
    }
    return {diffs == 0, format("20 datasets, %zu pairs, %zu differing targets", pairs, diffs)};
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

Verdict determinism() {
    namespace fs = std::filesystem;
    fs::path root = fs::temp_directory_path() / "gbl_acceptance_determinism";
    fs::remove_all(root);
    const std::vector<std::vector<std::string>> runs = {
        {"--env", "SlipperyGrid:5:0.2", "--backup.operator", "graph", "--steps", "4000", "--seeds", "3"},
        {"--env", "DoorKeyGrid:5", "--backup.operator", "graph", "--backup.distributional", "--backup.double",
         "--steps", "3000", "--seeds", "1"},
    };
    // Both repetitions write to the same directory so that config.ini, which
    // records the output path, is comparable too.
    auto snapshot = [](const fs::path& dir) {
        std::map<std::string, std::string> files;
        for (const auto& entry : fs::directory_iterator(dir)) files[entry.path().filename().string()] = read_file(entry.path());
        return files;
    };
    std::size_t compared = 0, differing = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        fs::path dir = root / std::to_string(k);
        std::map<std::string, std::string> first;
        for (int rep = 0; rep < 2; ++rep) {
            std::vector<std::string> args{"gbl", "train"};
            args.insert(args.end(), runs[k].begin(), runs[k].end());
            args.push_back("--out");
            args.push_back(dir.string());
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            if (cli::run(static_cast<int>(argv.size()), argv.data(), out, err) != 0)
                return {false, "train failed: " + err.str()};
            if (rep == 0) {
                first = snapshot(dir);
                fs::remove_all(dir);
            }
        }
        auto second = snapshot(dir);
        differing += first.size() != second.size();
        for (const auto& [name, bytes] : first) {
            ++compared;
            auto it = second.find(name);
            differing += it == second.end() || it->second != bytes;
        }
    }
    fs::remove_all(root);
    return {compared > 0 && differing == 0, format("%zu files compared across repeated runs, %zu differ", compared, differing)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "oracle equivalence", 10, oracle_equivalence},
        {2, "reduction to tree backup", 5, tree_reduction},
        {3, "operator base-case chain", 5, base_case_chain},
        {4, "counterfactual propagation", 1, counterfactual},
        {5, "stability experiment", 120, stability},
        {6, "directional learning ordering", 300, learning_ordering},
        {7, "distributional consistency", 30, distributional},
        {8, "crossover-probability figure", 1, crossover_figure},
        {9, "double self-consistency", 1, double_consistency},
        {10, "determinism", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_time = c.limit_seconds == 0 || secs < c.limit_seconds;
        bool pass = o.pass && in_time;
        failed += !pass;
        std::string limit = c.limit_seconds == 0 ? "no limit" : format("limit %.0fs", c.limit_seconds);
        std::printf("[%s] %2d %s: %s (%.2fs, %s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    limit.c_str(), in_time ? "" : ", over time");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
