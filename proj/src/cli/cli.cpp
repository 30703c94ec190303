#include "gbl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "gbl/analysis.hpp"
#include "gbl/errors.hpp"

namespace gbl::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw UsageError("bad seed '" + std::string(s) + "'");
    return v;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
void parallel_for(std::size_t n, std::uint32_t jobs, const std::function<void(std::size_t)>& fn) {
    std::size_t threads = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    std::size_t m = xs.size() / 2;
    return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

double std_of(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs), s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Field checks only; an empty env is allowed here.
void validate_fields(const RunConfig& cfg) {
    try {
        cfg.learner.validate();
        auto b = cfg.backup;
        b.gamma = cfg.learner.gamma;
        b.validate();
        if (!cfg.env.empty()) make_environment(cfg.env);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (cfg.seeds.empty()) throw UsageError("run.seeds: no seeds given");
}

void validate(const RunConfig& cfg) {
    if (cfg.env.empty()) throw UsageError("env.name required");
    validate_fields(cfg);
}

// Option registration shared by the training-style commands.

struct Bindings {
    RunConfig cfg;
    std::string env_params;
    std::string op = "graph";
    std::string seeds;
    std::string config_path;
    bool print_config = false;
};

void add_run_options(CLI::App& sub, Bindings& b, bool with_learner) {
    auto& c = b.cfg;
    sub.add_option("--config", b.config_path, "INI config file; flags override it");
    sub.add_flag("--print-config", b.print_config, "Print the resolved config and exit");
    sub.add_option("--env,--env.name", c.env, "Environment, e.g. EmptyGrid:8 or SlipperyGrid:5:0.2");
    sub.add_option("--env.params", b.env_params, "Extra environment parameters, colon separated");

    sub.add_option("--backup.operator", b.op, "one_step|n_step_q|tree|graph|graph_mixed")
        ->check(CLI::IsMember({"one_step", "n_step_q", "tree", "graph", "graph_mixed"}));
    sub.add_option("--backup.depth", c.backup.depth, "n for n-step/tree, depth limit for graph");
    sub.add_option("--backup.breadth", c.backup.breadth, "Transitions per expansion level");
    sub.add_flag("--backup.double", c.backup.double_q, "Online-greedy action selection");
    sub.add_flag("--backup.distributional", c.backup.distributional, "Categorical value distributions");
    sub.add_flag("--backup.per_pair_cap", c.backup.per_pair_cap, "Apply the breadth limit per (s,a)");

    auto& l = c.learner;
    sub.add_option("--learner.gamma", l.gamma);
    sub.add_option("--learner.atoms", l.support.atoms);
    sub.add_option("--learner.v_min", l.support.v_min);
    sub.add_option("--learner.v_max", l.support.v_max);
    if (with_learner) {
        sub.add_option("--steps,--learner.total_steps", l.total_steps, "Environment (or optimization) steps");
        sub.add_option("--learner.replay_period", l.replay_period);
        sub.add_option("--learner.batch_size", l.batch_size);
        sub.add_option("--learner.alpha", l.alpha);
        sub.add_option("--learner.epsilon", l.epsilon);
        sub.add_option("--learner.target_update_every", l.target_update_every);
        sub.add_option("--learner.eval_every", l.eval_every);
        sub.add_option("--learner.eval_episodes", l.eval_episodes);
        sub.add_option("--learner.estimate_window", l.estimate_window);
        sub.add_option("--learner.report_every", l.report_every);
        sub.add_option("--seeds,--run.seeds", b.seeds, "Seed list, e.g. 0..4 (falls back to GBL_SEED)");
        sub.add_option("--out,--run.out", c.out, "Output directory");
        sub.add_option("--jobs,--run.jobs", c.jobs, "Worker threads for seeds (0 = all cores)");
        sub.add_flag("--emit-plots,--run.emit_plots", c.emit_plots, "Write SVG charts of the curves");
    }
}

void resolve(Bindings& b, const CLI::App& sub) {
    auto& c = b.cfg;
    if (!b.env_params.empty() && !c.env.empty()) c.env += ":" + b.env_params;
    c.backup.op = parse_operator(b.op);
    c.backup.gamma = c.learner.gamma;
    if (sub.get_option_no_throw("--seeds") == nullptr) return;
    if (!b.seeds.empty()) {
        c.seeds = parse_seeds(b.seeds);
    } else if (const char* env_seed = std::getenv("GBL_SEED"); env_seed && *env_seed) {
        c.seeds = {parse_u64(trim(env_seed))};
    }
}

/// Injects the config file as `--section.key=value` arguments ahead of the
/// user's flags so that flags win.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
    if (args.size() < 2) return args;
    const CLI::App* sub = nullptr;
    try {
        sub = app.get_subcommand(args[1]);
    } catch (const CLI::OptionNotFound&) {
        return args;
    }
    std::string path;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream is(path);
    if (!is) throw UsageError("cannot read config file " + path);
    std::vector<std::string> injected;
    for (const auto& [key, value] : read_ini(is)) {
        if (key == "config" || key == "print_config" || sub->get_option_no_throw("--" + key) == nullptr)
            throw UsageError("unknown config key '" + key + "'");
        injected.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    return args;
}

// Commands

fs::path seed_file(const RunConfig& cfg, const char* stem, std::uint64_t seed, const char* ext) {
    return cfg.out / (std::string(stem) + "_seed" + std::to_string(seed) + ext);
}

json summary_json(const RunConfig& cfg, const std::vector<double>& finals, const char* metric) {
    json j;
    j["env"] = cfg.env;
    j["operator"] = std::string(to_string(cfg.backup.op));
    j["seeds"] = cfg.seeds;
    j[metric] = finals;
    j["mean"] = mean_of(finals);
    j["median"] = median_of(finals);
    j["std"] = std_of(finals);
    return j;
}

void emit_return_plot(const RunConfig& cfg, const std::vector<RunMetrics>& runs) {
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
    for (const auto& m : runs) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : m.rows)
            if (!std::isnan(row.eval_return)) pts.emplace_back(static_cast<double>(row.step), row.eval_return);
        series.emplace_back("seed " + std::to_string(m.seed), std::move(pts));
    }
    std::ostringstream os;
    write_svg_chart(os, cfg.env + " " + std::string(to_string(cfg.backup.op)) + ": greedy return", series);
    write_text(cfg.out / "returns.svg", os.str());
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    auto finals = train_all(cfg);
    for (std::size_t i = 0; i < finals.size(); ++i)
        out << "seed " << cfg.seeds[i] << ": final eval return " << fmt(finals[i]) << '\n';
    out << "mean " << fmt(mean_of(finals)) << " median " << fmt(median_of(finals)) << '\n';
    return 0;
}

int cmd_offline(const RunConfig& cfg, const std::string& dataset_path, std::uint64_t transitions, std::ostream& out) {
    auto env = make_environment(cfg.env);
    TrajectoryLog shared;
    if (!dataset_path.empty()) shared = load_trajectory_log(dataset_path);
    ensure_dir(cfg.out);
    write_text(cfg.out / "config.ini", format_config(cfg));

    std::vector<RunMetrics> runs(cfg.seeds.size());
    std::vector<double> final_std(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), cfg.jobs, [&](std::size_t i) {
        auto lcfg = cfg.learner;
        lcfg.seed = cfg.seeds[i];
        TrajectoryLog data = dataset_path.empty() ? random_walk_dataset(*env, transitions, lcfg.seed) : shared;
        auto result = offline_training(data, env->action_count(), lcfg, cfg.backup);
        result.metrics.save_csv(seed_file(cfg, "metrics", lcfg.seed, ".csv"));
        std::ostringstream st;
        st << "opt_step,mean_of_means,mean_of_stds,pairs\n";
        for (const auto& p : result.metrics.stability)
            st << p.opt_step << ',' << fmt(p.mean_of_means) << ',' << fmt(p.mean_of_stds) << ',' << p.pairs << '\n';
        write_text(seed_file(cfg, "stability", lcfg.seed, ".csv"), st.str());
        if (result.categorical_table)
            result.categorical_table->save(seed_file(cfg, "table", lcfg.seed, ".vtbl"));
        else
            result.scalar_table.save(seed_file(cfg, "table", lcfg.seed, ".vtbl"));
        final_std[i] = result.metrics.stability.empty() ? std::nan("") : result.metrics.stability.back().mean_of_stds;
        runs[i] = std::move(result.metrics);
    });

    write_text(cfg.out / "summary.json", summary_json(cfg, final_std, "final_mean_of_stds").dump(2) + "\n");
    if (cfg.emit_plots) {
        std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
        for (const auto& m : runs) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : m.stability) pts.emplace_back(static_cast<double>(p.opt_step), p.mean_of_stds);
            series.emplace_back("seed " + std::to_string(m.seed), std::move(pts));
        }
        std::ostringstream os;
        write_svg_chart(os, "std of last estimates", series);
        write_text(cfg.out / "stability.svg", os.str());
    }
    for (std::size_t i = 0; i < final_std.size(); ++i)
        out << "seed " << cfg.seeds[i] << ": final mean std " << fmt(final_std[i]) << '\n';
    return 0;
}

int cmd_compare(const RunConfig& base, std::vector<std::string> envs, const std::string& operators, std::ostream& out) {
    std::vector<BackupOperator> ops;
    std::stringstream ss(operators);
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            ops.push_back(parse_operator(trim(tok)));
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("compare.operators: ") + e.what());
        }
    }
    if (ops.size() < 2) throw UsageError("compare.operators: at least two operators required");
    if (envs.empty()) envs.push_back(base.env);
    for (const auto& e : envs) {
        auto c = base;
        c.env = e;
        validate(c);
    }

    const std::size_t per_cell = base.seeds.size();
    std::vector<double> finals(envs.size() * ops.size() * per_cell);
    parallel_for(finals.size(), base.jobs, [&](std::size_t k) {
        std::size_t e = k / (ops.size() * per_cell), o = (k / per_cell) % ops.size(), s = k % per_cell;
        auto env = make_environment(envs[e]);
        auto lcfg = base.learner;
        lcfg.seed = base.seeds[s];
        auto bcfg = base.backup;
        bcfg.op = ops[o];
        finals[k] = run_training(*env, lcfg, bcfg).metrics.final_eval_return;
    });

    ensure_dir(base.out);
    std::ostringstream csv;
    csv << "env,operator,mean,std,median,seeds\n";
    std::vector<std::vector<std::string>> cells(envs.size(), std::vector<std::string>(ops.size()));
    json summary = json::array();
    for (std::size_t e = 0; e < envs.size(); ++e) {
        for (std::size_t o = 0; o < ops.size(); ++o) {
            std::span<const double> xs(finals.data() + (e * ops.size() + o) * per_cell, per_cell);
            double m = mean_of(xs), sd = std_of(xs), med = median_of({xs.begin(), xs.end()});
            csv << envs[e] << ',' << to_string(ops[o]) << ',' << fmt(m) << ',' << fmt(sd) << ',' << fmt(med) << ','
                << per_cell << '\n';
            char cell[64];
            std::snprintf(cell, sizeof cell, "%.3f±%.3f", m, sd);
            cells[e][o] = cell;
            summary.push_back({{"env", envs[e]},
                               {"operator", std::string(to_string(ops[o]))},
                               {"final_eval_return", std::vector<double>(xs.begin(), xs.end())},
                               {"mean", m},
                               {"median", med},
                               {"std", sd}});
        }
    }

    // Aligned text table; "±" is two bytes but one column.
    auto width = [](const std::string& s) {
        return static_cast<int>(s.size()) - static_cast<int>(std::count(s.begin(), s.end(), '\xc2'));
    };
    std::vector<int> col(ops.size() + 1, 3);
    for (const auto& e : envs) col[0] = std::max(col[0], width(e));
    for (std::size_t o = 0; o < ops.size(); ++o) {
        col[o + 1] = width(std::string(to_string(ops[o])));
        for (const auto& row : cells) col[o + 1] = std::max(col[o + 1], width(row[o]));
    }
    std::ostringstream text;
    auto pad = [&](const std::string& s, int w) { text << s << std::string(static_cast<std::size_t>(w - width(s)), ' '); };
    pad("env", col[0]);
    for (std::size_t o = 0; o < ops.size(); ++o) {
        text << "  ";
        pad(std::string(to_string(ops[o])), col[o + 1]);
    }
    text << '\n';
    for (std::size_t e = 0; e < envs.size(); ++e) {
        pad(envs[e], col[0]);
        for (std::size_t o = 0; o < ops.size(); ++o) {
            text << "  ";
            pad(cells[e][o], col[o + 1]);
        }
        text << '\n';
    }
    write_text(base.out / "compare.csv", csv.str());
    write_text(base.out / "compare.txt", text.str());
    write_text(base.out / "compare.json", summary.dump(2) + "\n");
    out << text.str();
    return 0;
}

int cmd_analyze(const std::string& graph_path, const std::string& out_path, std::ostream& out) {
    auto g = TransitionGraph::load(graph_path);
    if (g.empty()) throw std::runtime_error("graph " + graph_path + " is empty");
    double nsr = g.novel_state_ratio();
    std::size_t self_loops = 0;
    for (std::size_t p = 0; p < g.pair_count(); ++p) {
        const auto& node = g.pair(static_cast<PairId>(p));
        for (const auto& t : node.out) self_loops += t.next == node.state;
    }
    json records = json::array();
    auto add = [&](const char* metric, double value, json params) {
        records.push_back({{"metric", metric}, {"value", value}, {"params", std::move(params)}});
    };
    add("novel_state_ratio", nsr, json::object());
    for (std::uint32_t h : {5u, 10u}) add("crossover_probability", crossover_probability(nsr, h), {{"h", h}});
    add("self_loop_count", static_cast<double>(self_loops), json::object());
    add("unique_states", static_cast<double>(g.state_count()), json::object());
    add("total_states", static_cast<double>(g.state_observations()), json::object());
    add("distinct_transitions", static_cast<double>(g.distinct_transitions()), json::object());
    add("total_transitions", static_cast<double>(g.total_transitions()), json::object());
    std::string text = records.dump(2) + "\n";
    if (out_path.empty())
        out << text;
    else
        write_text(out_path, text);
    return 0;
}

int cmd_export(const std::string& graph_path, const std::string& out_path, std::ostream& out) {
    auto g = TransitionGraph::load(graph_path);
    auto layout = compute_radial_layout(g, layout_roots(g));
    export_dot(g, layout, out_path);
    out << "wrote " << out_path << " (" << g.state_count() << " states, " << layout.edges.size() << " edges, "
        << layout.self_loops.size() << " self-loops)\n";
    return 0;
}

struct TargetRequest {
    std::string graph_path, dataset_path, table_path, state_hex;
    Action action = 0;
    std::uint64_t seed = 0;
};

int cmd_compute_target(const RunConfig& cfg, const TargetRequest& req, std::ostream& out) {
    try {
        auto b = cfg.backup;
        b.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (req.graph_path.empty() == req.dataset_path.empty()) throw UsageError("give exactly one of --graph or --dataset");
    const bool trajectory_op = cfg.backup.op == BackupOperator::n_step_q || cfg.backup.op == BackupOperator::tree;
    if (trajectory_op && req.dataset_path.empty()) throw UsageError("n_step_q and tree need --dataset");

    TrajectoryLog log;
    TransitionGraph graph;
    if (!req.dataset_path.empty()) {
        log = load_trajectory_log(req.dataset_path);
        for (const auto& step : log) {
            if (step.step == 0) graph.observe_initial(step.record.state);
            graph.insert(step.record);
        }
    } else {
        graph = TransitionGraph::load(req.graph_path);
    }
    StateKey state;
    try {
        state = StateKey::from_hex(req.state_hex);
    } catch (const std::exception&) {
        throw UsageError("--state: not a hex state key");
    }

    Action actions = 1;
    if (!cfg.env.empty()) actions = make_environment(cfg.env)->action_count();
    for (std::size_t p = 0; p < graph.pair_count(); ++p)
        actions = std::max(actions, graph.pair(static_cast<PairId>(p)).action + 1);
    if (req.action >= actions) throw UsageError("--action out of range");

    json j;
    j["operator"] = std::string(to_string(cfg.backup.op));
    j["state"] = req.state_hex;
    j["action"] = req.action;
    Rng rng(derive_seed(req.seed, 0, state.digest() ^ (std::uint64_t(req.action) << 56)));

    if (cfg.backup.distributional) {
        CategoricalQTable table = req.table_path.empty() ? CategoricalQTable(actions, cfg.learner.support)
                                                         : CategoricalQTable::load(req.table_path);
        CategoricalModels models{table, table};
        std::vector<double> m;
        if (cfg.backup.op == BackupOperator::one_step) {
            auto out_edges = graph.outgoing(state, req.action);
            if (out_edges.empty()) throw std::runtime_error("pair not found in the data");
            m = distributional_one_step({state, req.action, out_edges[0].reward, out_edges[0].next_state,
                                         out_edges[0].terminal},
                                        models, cfg.backup);
        } else {
            auto e = expand_local_graph(graph, state, req.action, cfg.backup.depth, cfg.backup.breadth, rng,
                                        cfg.backup.per_pair_cap);
            j["expanded_pairs"] = e.pair_count();
            m = distributional_graph_backup(graph, e, models, cfg.backup);
        }
        j["target"] = expected_value(m, table.support());
        j["distribution"] = m;
    } else {
        ScalarQTable table = req.table_path.empty() ? ScalarQTable(actions) : ScalarQTable::load(req.table_path);
        Models models{table, table};
        double target = 0.0;
        if (cfg.backup.op == BackupOperator::graph || cfg.backup.op == BackupOperator::graph_mixed) {
            auto e = expand_local_graph(graph, state, req.action, cfg.backup.depth, cfg.backup.breadth, rng,
                                        cfg.backup.per_pair_cap);
            j["expanded_pairs"] = e.pair_count();
            target = cfg.backup.op == BackupOperator::graph ? graph_backup_target(graph, e, models, cfg.backup)
                                                            : mixed_graph_backup_target(graph, e, models, cfg.backup);
        } else {
            std::vector<TransitionRecord> slice;
            if (!log.empty()) {
                auto it = std::find_if(log.begin(), log.end(), [&](const LoggedStep& s) {
                    return s.record.state == state && s.record.action == req.action;
                });
                if (it == log.end()) throw std::runtime_error("pair not found in the data");
                for (auto k = it; k != log.end() && k->episode == it->episode; ++k) slice.push_back(k->record);
            } else {
                auto edges = graph.outgoing(state, req.action);
                if (edges.empty()) throw std::runtime_error("pair not found in the data");
                slice.push_back({state, req.action, edges[0].reward, edges[0].next_state, edges[0].terminal});
            }
            switch (cfg.backup.op) {
                case BackupOperator::one_step: target = one_step_target(slice[0], models, cfg.backup); break;
                case BackupOperator::n_step_q: target = n_step_q_target(slice, cfg.backup.depth, models, cfg.backup); break;
                default: target = tree_backup_target(slice, cfg.backup.depth, models, cfg.backup); break;
            }
        }
        j["target"] = target;
    }
    out << j.dump(2) << '\n';
    return 0;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
    std::vector<std::uint64_t> seeds;
    std::string s(text);
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');) {
        tok = trim(tok);
        if (tok.empty()) continue;
        if (auto dots = tok.find(".."); dots != std::string::npos) {
            auto lo = parse_u64(tok.substr(0, dots)), hi = parse_u64(tok.substr(dots + 2));
            if (hi < lo) throw UsageError("bad seed range '" + tok + "'");
            if (hi - lo > 100000) throw UsageError("seed range too large '" + tok + "'");
            for (auto v = lo; v <= hi; ++v) seeds.push_back(v);
        } else {
            seeds.push_back(parse_u64(tok));
        }
    }
    if (seeds.empty()) throw UsageError("run.seeds: empty seed list");
    return seeds;
}

std::map<std::string, std::string> read_ini(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string section, line;
    for (int n = 1; std::getline(is, line); ++n) {
        auto t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw UsageError("config line " + std::to_string(n) + ": bad section header");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(n) + ": expected key = value");
        auto key = trim(std::string_view(t).substr(0, eq));
        auto value = trim(std::string_view(t).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) throw UsageError("config line " + std::to_string(n) + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        if (!kv.emplace(full, value).second) throw UsageError("config line " + std::to_string(n) + ": duplicate key '" + full + "'");
    }
    return kv;
}

std::string format_config(const RunConfig& c) {
    const auto& l = c.learner;
    const auto& b = c.backup;
    std::ostringstream os;
    os << "[env]\nname = " << c.env << "\n\n";
    os << "[learner]\n"
       << "total_steps = " << l.total_steps << '\n'
       << "replay_period = " << l.replay_period << '\n'
       << "batch_size = " << l.batch_size << '\n'
       << "alpha = " << fmt(l.alpha) << '\n'
       << "epsilon = " << fmt(l.epsilon) << '\n'
       << "target_update_every = " << l.target_update_every << '\n'
       << "gamma = " << fmt(l.gamma) << '\n'
       << "eval_every = " << l.eval_every << '\n'
       << "eval_episodes = " << l.eval_episodes << '\n'
       << "atoms = " << l.support.atoms << '\n'
       << "v_min = " << fmt(l.support.v_min) << '\n'
       << "v_max = " << fmt(l.support.v_max) << '\n'
       << "estimate_window = " << l.estimate_window << '\n'
       << "report_every = " << l.report_every << "\n\n";
    os << "[backup]\n"
       << "operator = " << to_string(b.op) << '\n'
       << "depth = " << b.depth << '\n'
       << "breadth = " << b.breadth << '\n'
       << "double = " << fmt(b.double_q) << '\n'
       << "distributional = " << fmt(b.distributional) << '\n'
       << "per_pair_cap = " << fmt(b.per_pair_cap) << "\n\n";
    os << "[run]\nseeds = ";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? "," : "") << c.seeds[i];
    os << "\nout = " << c.out.string() << "\njobs = " << c.jobs << "\nemit_plots = " << fmt(c.emit_plots) << '\n';
    return os.str();
}

std::vector<double> train_all(const RunConfig& cfg) {
    validate(cfg);
    auto env = make_environment(cfg.env);
    ensure_dir(cfg.out);
    write_text(cfg.out / "config.ini", format_config(cfg));

    std::vector<double> finals(cfg.seeds.size());
    std::vector<RunMetrics> runs(cfg.emit_plots ? cfg.seeds.size() : 0);
    parallel_for(cfg.seeds.size(), cfg.jobs, [&](std::size_t i) {
        auto lcfg = cfg.learner;
        lcfg.seed = cfg.seeds[i];
        auto result = run_training(*env, lcfg, cfg.backup);
        result.metrics.save_csv(seed_file(cfg, "metrics", lcfg.seed, ".csv"));
        result.graph.save(seed_file(cfg, "graph", lcfg.seed, ".tgph"));
        save_trajectory_log(seed_file(cfg, "trajectory", lcfg.seed, ".log"), result.log);
        if (result.categorical_table)
            result.categorical_table->save(seed_file(cfg, "table", lcfg.seed, ".vtbl"));
        else
            result.scalar_table.save(seed_file(cfg, "table", lcfg.seed, ".vtbl"));
        finals[i] = result.metrics.final_eval_return;
        if (cfg.emit_plots) runs[i] = std::move(result.metrics);
    });
    write_text(cfg.out / "summary.json", summary_json(cfg, finals, "final_eval_return").dump(2) + "\n");
    if (cfg.emit_plots) emit_return_plot(cfg, runs);
    return finals;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Graph Backup experiments over tabular environments", "gbl"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    Bindings train_b, offline_b, compare_b, target_b;
    auto* train = app.add_subcommand("train", "Online training, one run per seed");
    add_run_options(*train, train_b, true);

    auto* offline = app.add_subcommand("offline-train", "Training on a fixed dataset");
    add_run_options(*offline, offline_b, true);
    std::string dataset;
    std::uint64_t transitions = 5000;
    offline->add_option("--dataset,--offline.dataset", dataset, "Trajectory log; default is a random-walk dataset");
    offline->add_option("--transitions,--offline.transitions", transitions, "Random-walk dataset size");

    auto* compare = app.add_subcommand("compare", "Run several operators on identical seeds");
    add_run_options(*compare, compare_b, true);
    std::string operators;
    std::vector<std::string> envs;
    compare->add_option("--operators,--compare.operators", operators, "Comma separated operators")->required();
    compare->add_option("--envs,--compare.envs", envs, "Comma separated environments (rows); default env.name")
        ->delimiter(',');

    auto* target = app.add_subcommand("compute-target", "Evaluate one backup target");
    add_run_options(*target, target_b, false);
    TargetRequest req;
    target->add_option("--graph", req.graph_path, "Transition graph file")->check(CLI::ExistingFile);
    target->add_option("--dataset", req.dataset_path, "Trajectory log")->check(CLI::ExistingFile);
    target->add_option("--table", req.table_path, "Value table used as online and target model")
        ->check(CLI::ExistingFile);
    target->add_option("--state", req.state_hex, "Source state key (hex)")->required();
    target->add_option("--action", req.action, "Source action")->required();
    target->add_option("--seed", req.seed, "Expansion sampling seed");

    auto* analyze = app.add_subcommand("analyze", "Density statistics of a transition graph");
    std::string analyze_in, analyze_out;
    analyze->add_option("graph", analyze_in, "Graph file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", analyze_out, "Write JSON here instead of stdout");

    auto* exporter = app.add_subcommand("export-graph", "Radial-layout DOT export of a transition graph");
    std::string export_in, export_out;
    exporter->add_option("graph", export_in, "Graph file")->required()->check(CLI::ExistingFile);
    exporter->add_option("--out", export_out, "DOT output path")->required();

    try {
        std::vector<std::string> args(argv, argv + argc);
        args = expand_config(app, std::move(args));
        std::vector<const char*> cargs;
        for (const auto& a : args) cargs.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                out << app.help();
                return 0;
            }
            err << "error: " << e.what() << '\n';
            return 2;
        }

        for (auto [sub, b] : {std::pair{train, &train_b}, std::pair{offline, &offline_b}, std::pair{compare, &compare_b},
                              std::pair{target, &target_b}}) {
            if (!sub->parsed()) continue;
            resolve(*b, *sub);
            if (b->print_config) {
                validate_fields(b->cfg);
                out << format_config(b->cfg);
                return 0;
            }
        }
        if (train->parsed()) return cmd_train(train_b.cfg, out);
        if (offline->parsed()) {
            validate(offline_b.cfg);
            return cmd_offline(offline_b.cfg, dataset, transitions, out);
        }
        if (compare->parsed()) return cmd_compare(compare_b.cfg, envs, operators, out);
        if (target->parsed()) return cmd_compute_target(target_b.cfg, req, out);
        if (analyze->parsed()) return cmd_analyze(analyze_in, analyze_out, out);
        if (exporter->parsed()) return cmd_export(export_in, export_out, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace gbl::cli
