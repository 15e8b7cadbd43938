#include "cellcheck/adaptive.hpp"
#include "cellcheck/baseline.hpp"
#include "cellcheck/checker.hpp"
#include "cellcheck/cli.hpp"
#include "cellcheck/continuum.hpp"
#include "cellcheck/error.hpp"
#include "cellcheck/network.hpp"
#include "cellcheck/vcas.hpp"
#include "cellcheck/verifier.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace cellcheck;

namespace {

std::vector<std::string> action_names(const ActionSet& s, const std::vector<std::string>& labels) {
    std::vector<std::string> out;
    for (std::size_t a : s.members()) out.push_back(labels.at(a));
    return out;
}

py::dict stats_dict(const CheckStats& s) {
    py::dict d;
    d["verifier_calls"] = s.adaptive.verifier_calls;
    d["sweeps"] = s.sweeps;
    d["final_delta"] = s.final_delta;
    d["converged"] = s.converged;
    d["transition_splits"] = s.transition_splits;
    d["action_splits"] = s.action_splits;
    d["boundary_splits"] = s.boundary_splits;
    d["leaves_initial"] = s.leaves_initial;
    d["leaves_final"] = s.leaves_final;
    d["wall_time"] = s.wall_time;
    return d;
}

py::dict verifier_stats_dict(const VerifierStats& s) {
    py::dict d;
    d["verifier_calls"] = s.verifier_calls;
    d["corner_eval_batches"] = s.corner_eval_batches;
    d["leaves_total"] = s.leaves_total;
    d["leaves_singleton"] = s.leaves_singleton;
    d["leaves_multi"] = s.leaves_multi;
    d["wall_time"] = s.wall_time;
    return d;
}

// Leaves of one tree as arrays: low and high are (n, d), prob is (n,), actions holds bitmasks.
py::dict tree_cells(const PartitionTree& t) {
    const auto leaves = t.leaves();
    const std::size_t n = leaves.size(), d = t.root_box().dim();
    py::array_t<double> low({n, d}), high({n, d});
    py::array_t<double> prob(static_cast<py::ssize_t>(n));
    py::array_t<std::uint64_t> actions(static_cast<py::ssize_t>(n));
    auto lo = low.mutable_unchecked<2>();
    auto hi = high.mutable_unchecked<2>();
    auto p = prob.mutable_unchecked<1>();
    auto a = actions.mutable_unchecked<1>();
    for (std::size_t k = 0; k < n; ++k) {
        const Cell& c = t.cell(leaves[k]);
        for (std::size_t i = 0; i < d; ++i) {
            lo(k, i) = c.box.lows[i];
            hi(k, i) = c.box.highs[i];
        }
        p(k) = c.prob;
        a(k) = c.actions.bits();
    }
    py::dict out;
    out["low"] = low;
    out["high"] = high;
    out["prob"] = prob;
    out["actions"] = actions;
    return out;
}

BoundaryPolicy parse_boundary(const std::string& s) {
    if (s == "clamp") return BoundaryPolicy::Clamp;
    if (s == "safe") return BoundaryPolicy::TreatAsSafe;
    throw ValidationError("boundary must be 'clamp' or 'safe', got '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_cellcheck, m) {
    m.doc() = "Cell-based probabilistic safety checking of neural network controllers.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<NonFiniteError>(m, "NonFiniteError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<PartitionError>(m, "PartitionError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<Network>(m, "Network")
        .def_property_readonly("input_dim", &Network::input_dim)
        .def_property_readonly("output_dim", &Network::output_dim)
        .def_property_readonly("layer_sizes", &Network::layer_sizes)
        .def_property_readonly("action_labels", &Network::action_labels)
        .def("evaluate", [](const Network& n, std::vector<double> x) { return n.evaluate(x); }, py::arg("x"))
        .def("best_action", [](const Network& n, std::vector<double> x) { return n.best_action(x); }, py::arg("x"));

    m.def("load_network", [](const std::string& path) { return load_network(path); }, py::arg("path"));

    m.def(
        "possible_actions",
        [](const Network& net, std::vector<double> low, std::vector<double> high, int refine_depth) {
            VerifierConfig cfg;
            cfg.refine_depth = refine_depth;
            return action_names(possible_actions(net, Box(std::move(low), std::move(high)), cfg), net.action_labels());
        },
        py::arg("net"), py::arg("low"), py::arg("high"), py::arg("refine_depth") = 4,
        "Actions the network may select somewhere in the box, as labels.");

    m.def(
        "adaptive_verify",
        [](const Network& net, std::vector<double> low, std::vector<double> high, std::vector<double> min_size,
           const std::string& strategy) {
            AdaptiveConfig cfg;
            cfg.min_size = std::move(min_size);
            const Box domain(std::move(low), std::move(high));
            if (strategy != "uniform") cfg.strategy = parse_split_strategy(strategy);
            const AdaptiveResult r =
                strategy == "uniform" ? uniform_verify(net, domain, cfg) : adaptive_verify(net, domain, cfg);
            py::dict out = tree_cells(r.tree);
            out["stats"] = verifier_stats_dict(r.stats);
            return out;
        },
        py::arg("net"), py::arg("low"), py::arg("high"), py::arg("min_size"), py::arg("strategy") = "informed",
        "Partition a box into cells labelled with their possible actions. strategy is informed, all or uniform.");

    py::class_<DynamicsModel>(m, "Model")
        .def_property_readonly("name", &DynamicsModel::name)
        .def_property_readonly("state_dim", &DynamicsModel::state_dim)
        .def_property_readonly("action_labels", &DynamicsModel::action_labels)
        .def_property_readonly("field_count", &DynamicsModel::field_count)
        .def("field_label", &DynamicsModel::field_label, py::arg("field"))
        .def_property_readonly("domain", [](const DynamicsModel& d) {
            return py::make_tuple(d.domain().lows, d.domain().highs);
        });

    py::class_<ContinuumWorld, DynamicsModel>(m, "ContinuumWorld")
        .def(py::init([](const std::string& boundary, bool goal_absorbing) {
                 ContinuumConfig c;
                 c.boundary = parse_boundary(boundary);
                 c.goal_absorbing = goal_absorbing;
                 return ContinuumWorld(c);
             }),
             py::arg("boundary") = "clamp", py::arg("goal_absorbing") = true);

    py::class_<VcasModel, DynamicsModel>(m, "VcasModel")
        .def(py::init([](std::vector<std::string> advisories, std::optional<double> intruder_rate, int tau_max) {
                 VcasConfig c;
                 if (!advisories.empty()) c.advisories = std::move(advisories);
                 c.fixed_intruder_rate = intruder_rate;
                 c.tau_max = tau_max;
                 return VcasModel(c);
             }),
             py::arg("advisories") = std::vector<std::string>{}, py::arg("intruder_rate") = py::none(),
             py::arg("tau_max") = 40)
        .def("field_of", &VcasModel::field_of, py::arg("advisory"), py::arg("tau"));

    py::class_<ProbField>(m, "ProbField")
        .def_property_readonly("field_labels", [](const ProbField& p) { return p.field_labels; })
        .def_property_readonly("action_labels", [](const ProbField& p) { return p.action_labels; })
        .def_property_readonly("layer_max", [](const ProbField& p) { return p.layer_max; })
        .def_property_readonly("stats", [](const ProbField& p) { return stats_dict(p.stats); })
        .def_property_readonly("leaf_count", &ProbField::leaf_count)
        .def("prob_at", [](const ProbField& p, std::size_t field, std::vector<double> x) { return p.prob_at(field, x); },
             py::arg("field"), py::arg("x"))
        .def("max_prob", &ProbField::max_prob, py::arg("field"))
        .def("cells", [](const ProbField& p, std::size_t field) { return tree_cells(p.fields.at(field)); },
             py::arg("field") = 0);

    m.def(
        "check",
        [](const std::vector<Network>& nets, const DynamicsModel& model, std::vector<double> min_size,
           double transition_threshold, const std::string& action_threshold, double eps, bool online_splits,
           const std::string& strategy, unsigned threads) {
            CheckConfig cfg;
            cfg.min_size = std::move(min_size);
            cfg.transition_threshold = transition_threshold;
            if (!action_threshold.empty()) cfg.action_threshold = ThresholdSchedule::parse(action_threshold);
            cfg.convergence_eps = eps;
            cfg.online_splits = online_splits;
            cfg.strategy = parse_split_strategy(strategy);
            cfg.threads = threads;
            py::gil_scoped_release release;
            return model.field_layer(0) ? check_layered(nets, model, cfg) : check(nets, model, cfg);
        },
        py::arg("nets"), py::arg("model"), py::arg("min_size"),
        py::arg("transition_threshold") = std::numeric_limits<double>::infinity(), py::arg("action_threshold") = "",
        py::arg("eps") = 1e-6, py::arg("online_splits") = true, py::arg("strategy") = "informed",
        py::arg("threads") = 1, "Upper bounds on the probability of reaching the unsafe set, per cell.");

    m.def(
        "monte_carlo",
        [](const std::vector<Network>& nets, const DynamicsModel& model, std::vector<double> start, std::size_t n,
           std::size_t horizon, std::uint64_t seed, std::size_t field) {
            py::gil_scoped_release release;
            const McEstimate e = monte_carlo(nets, model, field, start, {n, horizon, seed});
            return std::make_tuple(e.estimate, e.std_error, e.n, e.hits);
        },
        py::arg("nets"), py::arg("model"), py::arg("start"), py::arg("n") = 1000, py::arg("horizon") = 500,
        py::arg("seed") = 0, py::arg("field") = 0, "Returns (estimate, std_error, n, hits).");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return std::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in process. Returns (exit_code, stdout, stderr).");
}
