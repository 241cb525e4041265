#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "opshape/errors.hpp"
#include "opshape/general.hpp"
#include "opshape/harness.hpp"
#include "opshape/partial.hpp"
#include "opshape/sas.hpp"
#include "opshape/sgd.hpp"

namespace py = pybind11;
using namespace opshape;

namespace {

py::dict to_dict(const Trajectory& t) {
  const auto rows = static_cast<Eigen::Index>(t.points.size());
  const Eigen::Index m = rows ? t.points.front().u.size() : 0;
  std::vector<std::uint64_t> k;
  Eigen::MatrixXd u(rows, m);
  Eigen::VectorXd payoff(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& p = t.points[static_cast<std::size_t>(r)];
    k.push_back(p.k);
    u.row(r) = p.u.transpose();
    payoff[r] = p.payoff;
  }
  py::dict d;
  d["k"] = k;
  d["u"] = u;
  d["payoff"] = payoff;
  return d;
}

RunControl control_of(std::uint64_t record_every, std::optional<ControlVector> u0) {
  RunControl c;
  c.record_every = record_every;
  if (u0) c.u0 = *u0;
  return c;
}

ActivationModel activation_of(double q, std::size_t nodes) {
  return q >= 1.0 ? ActivationModel::synchronous() : ActivationModel::asynchronous(nodes, q);
}

}  // namespace

PYBIND11_MODULE(_opshape, m) {
  m.doc() = "Budgeted opinion shaping on gossip networks";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DanglingNode>(m, "DanglingNode", base.ptr());
  py::register_exception<Infeasible>(m, "Infeasible", base.ptr());
  py::register_exception<NonAbsorbing>(m, "NonAbsorbing", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<InteractionGraph>(m, "InteractionGraph")
      .def_property_readonly("node_count", &InteractionGraph::node_count)
      .def_property_readonly("edge_count", &InteractionGraph::edge_count)
      .def_property_readonly("directed", &InteractionGraph::directed)
      .def_property_readonly("labels", &InteractionGraph::labels)
      .def_property_readonly("poll_matrix", &InteractionGraph::poll_matrix);

  m.def(
      "load_edge_list",
      [](const std::filesystem::path& path, bool directed, std::optional<bool> weighted) {
        return load_edge_list(path, EdgeListOptions{weighted, directed});
      },
      py::arg("path"), py::arg("directed") = false, py::arg("weighted") = py::none());

  py::class_<AgentPartition>(m, "AgentPartition")
      .def_property_readonly("controlled", &AgentPartition::controlled)
      .def_property_readonly("uncontrolled", &AgentPartition::uncontrolled)
      .def_property_readonly("stubborn", &AgentPartition::stubborn)
      .def_property_readonly("alpha", &AgentPartition::alphas)
      .def_property_readonly("h", &AgentPartition::hs);

  m.def(
      "random_partition",
      [](const InteractionGraph& g, std::size_t controlled, std::size_t uncontrolled, std::size_t stubborn,
         double alpha, std::uint64_t seed) {
        return random_partition(g, PartitionSizes{controlled, uncontrolled, stubborn}, alpha, seed);
      },
      py::arg("graph"), py::arg("controlled"), py::arg("uncontrolled"), py::arg("stubborn"), py::arg("alpha") = 0.6,
      py::arg("seed") = 1);

  py::class_<OpinionModel>(m, "OpinionModel")
      .def(py::init<InteractionGraph, AgentPartition>(), py::arg("graph"), py::arg("partition"))
      .def_property_readonly("graph", &OpinionModel::graph)
      .def_property_readonly("partition", &OpinionModel::partition)
      .def_property_readonly("influence", &OpinionModel::influence)
      .def("stationary", &OpinionModel::stationary, py::arg("u"))
      .def("payoff", &OpinionModel::payoff, py::arg("u"))
      .def("gradient", &OpinionModel::gradient, py::arg("u"));

  m.def("project_budget_simplex", &project_budget_simplex, py::arg("v"), py::arg("budget"));
  m.def("reference_optimum", &reference_optimum, py::arg("model"), py::arg("budget"));
  m.def("phi_oracle", &phi_oracle, py::arg("model"), py::arg("u"));

  m.def(
      "run_sas",
      [](const OpinionModel& model, double budget, std::uint64_t n_iters, std::uint64_t seed, double A, double B,
         double denom, double activation, std::uint64_t record_every, std::optional<ControlVector> u0) {
        py::gil_scoped_release release;
        auto r = run_sas(model, budget, StepSchedule{A, B, denom}, activation_of(activation, model.node_count()),
                         n_iters, seed, control_of(record_every, u0));
        py::gil_scoped_acquire acquire;
        py::dict d = to_dict(r.trajectory);
        d["psi"] = r.psi;
        return d;
      },
      py::arg("model"), py::arg("budget"), py::arg("n_iters"), py::arg("seed"), py::arg("A") = 0.6, py::arg("B") = 0.6,
      py::arg("denom") = 100.0, py::arg("activation") = 1.0, py::arg("record_every") = 1, py::arg("u0") = py::none());

  m.def(
      "run_sgd",
      [](const OpinionModel& model, double budget, std::uint64_t n_iters, std::uint64_t seed, int scheme, double A,
         double block, std::uint64_t record_every, std::optional<ControlVector> u0) {
        if (scheme != 1 && scheme != 2) throw ConfigError("scheme must be 1 or 2");
        SgdOptions options;
        options.scheme = scheme == 1 ? WalkScheme::Killed : WalkScheme::Discounted;
        options.step = BlockSchedule{A, block};
        py::gil_scoped_release release;
        Trajectory t = run_sgd(model, budget, n_iters, seed, options, control_of(record_every, u0));
        py::gil_scoped_acquire acquire;
        return to_dict(t);
      },
      py::arg("model"), py::arg("budget"), py::arg("n_iters"), py::arg("seed"), py::arg("scheme") = 1,
      py::arg("A") = 0.6, py::arg("block") = 100.0, py::arg("record_every") = 1, py::arg("u0") = py::none());

  m.def(
      "run_partial",
      [](const OpinionModel& model, double budget, std::uint64_t n_iters, std::uint64_t seed, double observed_fraction,
         std::uint64_t observation_seed, double A, double B, double denom, std::uint64_t record_every) {
        const auto obs = ObservationSet::hide_fraction(model.partition(), 1.0 - observed_fraction, observation_seed);
        py::gil_scoped_release release;
        auto r = run_partial(model, obs, budget, StepSchedule{A, B, denom}, n_iters, seed, control_of(record_every, {}));
        py::gil_scoped_acquire acquire;
        py::dict d = to_dict(r.trajectory);
        d["psi"] = r.psi;
        d["observed"] = obs.mask();
        return d;
      },
      py::arg("model"), py::arg("budget"), py::arg("n_iters"), py::arg("seed"), py::arg("observed_fraction") = 0.5,
      py::arg("observation_seed") = 1, py::arg("A") = 0.6, py::arg("B") = 0.6, py::arg("denom") = 100.0,
      py::arg("record_every") = 1);

  py::class_<GeneralModel>(m, "GeneralModel")
      .def_static("saturating_influence", &GeneralModel::saturating_influence, py::arg("graph"), py::arg("partition"),
                  py::arg("scale") = 0.1)
      .def_static("from_base", &GeneralModel::from_base, py::arg("graph"), py::arg("partition"))
      .def("value", &GeneralModel::value, py::arg("u"))
      .def("payoff", &GeneralModel::payoff, py::arg("u"))
      .def("gradient", &GeneralModel::gradient, py::arg("u"))
      .def("gradient_table", &GeneralModel::gradient_table, py::arg("u"));

  m.def(
      "run_general",
      [](const GeneralModel& model, double budget, std::uint64_t n_iters, std::uint64_t seed, bool known_p, double C,
         double A, double B, double denom, std::uint64_t record_every) {
        GeneralOptions options;
        options.mode = known_p ? GeneralMode::KnownP : GeneralMode::Sampled;
        options.anneal.C = C;
        py::gil_scoped_release release;
        auto r = run_general(model, budget, StepSchedule{A, B, denom}, ActivationModel::synchronous(), n_iters, seed,
                             options, control_of(record_every, {}));
        py::gil_scoped_acquire acquire;
        py::dict d = to_dict(r.trajectory);
        d["values"] = r.values;
        d["psi"] = r.psi;
        return d;
      },
      py::arg("model"), py::arg("budget"), py::arg("n_iters"), py::arg("seed"), py::arg("known_p") = false,
      py::arg("C") = 10.0, py::arg("A") = 0.6, py::arg("B") = 0.6, py::arg("denom") = 100.0,
      py::arg("record_every") = 1);

  m.def(
      "run_experiment",
      [](const std::filesystem::path& config_path, const std::map<std::string, std::string>& overrides) {
        ExperimentConfig config = load_config(config_path);
        for (const auto& [key, value] : overrides) apply_setting(config, key, value);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(config);
        }
        py::list rows;
        for (const auto& row : r.summary) rows.append(py::make_tuple(row.k, row.median, row.q1, row.q3));
        py::dict d;
        d["optimum"] = r.reference.u;
        d["optimum_payoff"] = r.reference.payoff;
        d["summary"] = rows;
        d["run_files"] = r.run_files;
        d["summary_file"] = r.summary_file;
        return d;
      },
      py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{});
}
