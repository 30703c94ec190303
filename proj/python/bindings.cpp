// Python bindings. State keys cross the boundary as hex strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "gbl/analysis.hpp"
#include "gbl/backup.hpp"
#include "gbl/cli.hpp"
#include "gbl/env.hpp"
#include "gbl/errors.hpp"
#include "gbl/learner.hpp"
#include "gbl/oracle.hpp"
#include "gbl/trajectory.hpp"

namespace py = pybind11;
using namespace gbl;

namespace {

StateKey key(const std::string& hex) { return StateKey::from_hex(hex); }

TransitionRecord record(const std::string& s, Action a, double r, const std::string& next, bool terminal) {
    return {key(s), a, r, key(next), terminal};
}

py::tuple to_tuple(const LoggedStep& s) {
    return py::make_tuple(s.episode, s.step, s.record.state.hex(), s.record.action, s.record.reward,
                          s.record.next_state.hex(), s.record.terminal);
}

TrajectoryLog from_tuples(const std::vector<py::tuple>& steps) {
    TrajectoryLog log;
    log.reserve(steps.size());
    for (const auto& t : steps) {
        if (t.size() != 7) throw py::value_error("expected (episode, step, state, action, reward, next_state, terminal)");
        log.push_back({t[0].cast<std::uint64_t>(), t[1].cast<std::uint32_t>(),
                       record(t[2].cast<std::string>(), t[3].cast<Action>(), t[4].cast<double>(),
                              t[5].cast<std::string>(), t[6].cast<bool>())});
    }
    return log;
}

std::vector<TransitionRecord> records(const std::vector<py::tuple>& transitions) {
    std::vector<TransitionRecord> out;
    for (const auto& t : transitions)
        out.push_back(record(t[0].cast<std::string>(), t[1].cast<Action>(), t[2].cast<double>(),
                             t[3].cast<std::string>(), t[4].cast<bool>()));
    return out;
}

py::dict metrics_dict(const RunMetrics& m) {
    py::list rows;
    for (const auto& r : m.rows) {
        py::dict d;
        d["step"] = r.step;
        d["episode"] = r.episode;
        d["return"] = r.episode_return;
        d["eval_return"] = r.eval_return;
        d["target_mean"] = r.target_mean;
        d["target_std"] = r.target_std;
        d["nsr"] = r.novel_state_ratio;
        rows.append(d);
    }
    py::list stability;
    for (const auto& p : m.stability)
        stability.append(py::make_tuple(p.opt_step, p.mean_of_means, p.mean_of_stds, p.pairs));
    py::dict out;
    out["op"] = m.op;
    out["seed"] = m.seed;
    out["final_eval_return"] = m.final_eval_return;
    out["episodes"] = m.episodes;
    out["rows"] = rows;
    out["stability"] = stability;
    return out;
}

}  // namespace

PYBIND11_MODULE(_gbl, m) {
    m.doc() = "Graph backup for tabular value learning";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);

    py::class_<Environment>(m, "Environment")
        .def(py::init([](const std::string& d) { return make_environment(d); }), py::arg("description"))
        .def_property_readonly("action_count", &Environment::action_count)
        .def_property_readonly("description", [](const Environment& e) { return e.spec().describe(); })
        .def("initial_state", [](const Environment& e) { return e.initial_state().hex(); })
        .def("outcomes",
             [](const Environment& e, const std::string& s, Action a) {
                 std::vector<py::tuple> out;
                 for (const auto& o : e.outcomes(key(s), a))
                     out.push_back(py::make_tuple(o.probability, o.reward, o.next_state.hex(), o.terminal));
                 return out;
             })
        .def("describe_state", [](const Environment& e, const std::string& s) { return e.describe_state(key(s)); });

    py::class_<BackupConfig>(m, "BackupConfig")
        .def(py::init<>())
        .def_property(
            "op", [](const BackupConfig& c) { return std::string(to_string(c.op)); },
            [](BackupConfig& c, const std::string& s) { c.op = parse_operator(s); })
        .def_readwrite("depth", &BackupConfig::depth)
        .def_readwrite("breadth", &BackupConfig::breadth)
        .def_readwrite("gamma", &BackupConfig::gamma)
        .def_readwrite("double_q", &BackupConfig::double_q)
        .def_readwrite("distributional", &BackupConfig::distributional)
        .def_readwrite("per_pair_cap", &BackupConfig::per_pair_cap)
        .def("validate", &BackupConfig::validate);

    py::class_<LearnerConfig>(m, "LearnerConfig")
        .def(py::init<>())
        .def_readwrite("total_steps", &LearnerConfig::total_steps)
        .def_readwrite("replay_period", &LearnerConfig::replay_period)
        .def_readwrite("batch_size", &LearnerConfig::batch_size)
        .def_readwrite("alpha", &LearnerConfig::alpha)
        .def_readwrite("epsilon", &LearnerConfig::epsilon)
        .def_readwrite("target_update_every", &LearnerConfig::target_update_every)
        .def_readwrite("gamma", &LearnerConfig::gamma)
        .def_readwrite("seed", &LearnerConfig::seed)
        .def_readwrite("eval_every", &LearnerConfig::eval_every)
        .def_readwrite("eval_episodes", &LearnerConfig::eval_episodes);

    py::class_<ScalarQTable>(m, "QTable")
        .def(py::init<Action>(), py::arg("action_count"))
        .def_property_readonly("action_count", &ScalarQTable::action_count)
        .def("__len__", &ScalarQTable::size)
        .def("q", [](const ScalarQTable& t, const std::string& s, Action a) { return t.q(key(s), a); })
        .def("set", [](ScalarQTable& t, const std::string& s, Action a, double v) { t.set(key(s), a, v); })
        .def("row", [](const ScalarQTable& t, const std::string& s) { return t.q_row(key(s)); })
        .def("save", &ScalarQTable::save)
        .def_static("load", &ScalarQTable::load)
        .def("__eq__", [](const ScalarQTable& a, const ScalarQTable& b) { return a == b; });

    py::class_<TransitionGraph>(m, "TransitionGraph")
        .def(py::init<>())
        .def("insert",
             [](TransitionGraph& g, const std::string& s, Action a, double r, const std::string& next, bool terminal) {
                 g.insert(record(s, a, r, next, terminal));
             },
             py::arg("state"), py::arg("action"), py::arg("reward"), py::arg("next_state"), py::arg("terminal") = false)
        .def("observe_initial", [](TransitionGraph& g, const std::string& s) { g.observe_initial(key(s)); })
        .def("count",
             [](const TransitionGraph& g, const std::string& s, Action a) -> std::uint64_t {
                 auto id = g.find(key(s));
                 return id ? g.count(*id, a) : 0;
             })
        .def("outgoing",
             [](const TransitionGraph& g, const std::string& s, Action a) {
                 std::vector<py::tuple> out;
                 for (const auto& e : g.outgoing(key(s), a))
                     out.push_back(py::make_tuple(e.reward, e.next_state.hex(), e.terminal, e.frequency));
                 return out;
             })
        .def_property_readonly("state_count", &TransitionGraph::state_count)
        .def_property_readonly("pair_count", &TransitionGraph::pair_count)
        .def_property_readonly("distinct_transitions", &TransitionGraph::distinct_transitions)
        .def_property_readonly("total_transitions", &TransitionGraph::total_transitions)
        .def("novel_state_ratio", &TransitionGraph::novel_state_ratio)
        .def("longest_path", [](const TransitionGraph& g) { return longest_path(g); })
        .def("save", &TransitionGraph::save)
        .def_static("load", &TransitionGraph::load)
        .def("to_dot",
             [](const TransitionGraph& g) {
                 auto roots = layout_roots(g);
                 std::ostringstream os;
                 write_dot(os, g, compute_radial_layout(g, roots));
                 return os.str();
             })
        .def("__eq__", [](const TransitionGraph& a, const TransitionGraph& b) { return a == b; });

    m.def("random_walk_dataset",
          [](const Environment& env, std::size_t n, std::uint64_t seed) {
              std::vector<py::tuple> out;
              for (const auto& s : random_walk_dataset(env, n, seed)) out.push_back(to_tuple(s));
              return out;
          },
          py::arg("env"), py::arg("transitions"), py::arg("seed"),
          "Uniform random-policy log as (episode, step, state, action, reward, next_state, terminal) tuples.");

    m.def("graph_from_dataset",
          [](const std::vector<py::tuple>& steps) {
              TransitionGraph g;
              for (const auto& s : from_tuples(steps)) {
                  if (s.step == 0) g.observe_initial(s.record.state);
                  g.insert(s.record);
              }
              return g;
          },
          py::arg("steps"));

    m.def("graph_backup_target",
          [](const TransitionGraph& g, const std::string& s, Action a, const ScalarQTable& online,
             const ScalarQTable& target, const BackupConfig& cfg, std::uint64_t seed) {
              cfg.validate();
              Rng rng(seed);
              Models models{online, target};
              return cfg.op == BackupOperator::graph_mixed ? mixed_graph_backup_target(g, key(s), a, models, cfg, rng)
                                                           : graph_backup_target(g, key(s), a, models, cfg, rng);
          },
          py::arg("graph"), py::arg("state"), py::arg("action"), py::arg("online"), py::arg("target"),
          py::arg("config"), py::arg("seed") = 0);

    m.def("naive_target",
          [](const TransitionGraph& g, const std::string& s, Action a, const ScalarQTable& q, double gamma) {
              return naive_recursive_target(g, key(s), a, q, gamma);
          },
          py::arg("graph"), py::arg("state"), py::arg("action"), py::arg("table"), py::arg("gamma"));

    m.def("one_step_target",
          [](const py::tuple& t, const ScalarQTable& online, const ScalarQTable& target, const BackupConfig& cfg) {
              return one_step_target(records({t}).front(), Models{online, target}, cfg);
          });
    m.def("n_step_q_target",
          [](const std::vector<py::tuple>& slice, std::uint32_t n, const ScalarQTable& online,
             const ScalarQTable& target, const BackupConfig& cfg) {
              auto r = records(slice);
              return n_step_q_target(r, n, Models{online, target}, cfg);
          });
    m.def("tree_backup_target",
          [](const std::vector<py::tuple>& slice, std::uint32_t n, const ScalarQTable& online,
             const ScalarQTable& target, const BackupConfig& cfg) {
              auto r = records(slice);
              return tree_backup_target(r, n, Models{online, target}, cfg);
          });

    m.def("train",
          [](const std::string& env, const LearnerConfig& lcfg, const BackupConfig& bcfg) {
              auto e = make_environment(env);
              TrainingResult r;
              {
                  py::gil_scoped_release release;
                  r = run_training(*e, lcfg, bcfg);
              }
              return py::make_tuple(metrics_dict(r.metrics), r.scalar_table, r.graph);
          },
          py::arg("env"), py::arg("learner") = LearnerConfig{}, py::arg("backup") = BackupConfig{},
          "Online training; returns (metrics, table, graph).");

    m.def("offline_train",
          [](const std::vector<py::tuple>& steps, Action action_count, const LearnerConfig& lcfg,
             const BackupConfig& bcfg) {
              auto log = from_tuples(steps);
              TrainingResult r;
              {
                  py::gil_scoped_release release;
                  r = offline_training(log, action_count, lcfg, bcfg);
              }
              return py::make_tuple(metrics_dict(r.metrics), r.scalar_table);
          },
          py::arg("dataset"), py::arg("action_count"), py::arg("learner") = LearnerConfig{},
          py::arg("backup") = BackupConfig{});

    m.def("crossover_probability", &crossover_probability, py::arg("novel_ratio"), py::arg("horizon"));
    m.def("pearson_correlation", [](const std::vector<double>& x, const std::vector<double>& y) {
        return pearson_correlation(x, y);
    });

    m.def("cli",
          [](const std::vector<std::string>& args) {
              std::vector<const char*> argv{"gbl"};
              for (const auto& a : args) argv.push_back(a.c_str());
              std::ostringstream out, err;
              int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
              return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
