#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fhtc/config.hpp"

namespace py = pybind11;
using namespace fhtc;

namespace {

Fht interpolate_py(const std::function<double(Eigen::VectorXd)>& g, const DyadicTree& tree,
                   const BasisSet& basis, int margin, std::uint64_t seed) {
    SketchPlan plan = SketchPlan::make(tree, basis, margin, seed);
    return interpolate([&](const Eigen::VectorXd& x) { return g(x); }, tree, basis, plan);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Functional hierarchical tensors for stochastic optimal control";

    py::class_<BasisSet>(m, "BasisSet")
        .def(py::init<int, double, double>(), py::arg("degree"), py::arg("lo"), py::arg("hi"))
        .def_property_readonly("size", &BasisSet::size)
        .def_property_readonly("lo", &BasisSet::lo)
        .def_property_readonly("hi", &BasisSet::hi)
        .def("eval", &BasisSet::eval, py::arg("x"))
        .def("eval_deriv", &BasisSet::eval_deriv, py::arg("x"))
        .def("sobolev_gram", [](const BasisSet& b) { return sobolev_gram(b); });

    m.def("legendre_basis", &legendre_basis, py::arg("q"), py::arg("lo"), py::arg("hi"));
    m.def("grid_to_leaf", &grid_to_leaf, py::arg("delta"), py::arg("mu"));

    py::class_<DyadicTree>(m, "DyadicTree")
        .def_static("build", &DyadicTree::build, py::arg("num_leaves"), py::arg("rank"),
                    py::arg("leaf_n"), py::arg("root_leg_n") = 0)
        .def_property_readonly("num_leaves", &DyadicTree::num_leaves)
        .def_property_readonly("node_count", &DyadicTree::node_count)
        .def("parent_rank", &DyadicTree::parent_rank, py::arg("node"));

    py::class_<Fht>(m, "Fht")
        .def_static("random", &Fht::random, py::arg("tree"), py::arg("leaf_basis"),
                    py::arg("root_basis") = BasisSet(0, -1.0, 1.0), py::arg("seed") = 0,
                    py::arg("scale") = 1.0)
        .def_property_readonly("input_dim", &Fht::input_dim)
        .def("evaluate",
             [](const Fht& f, const Eigen::VectorXd& point) { return f.evaluate(point); },
             py::arg("point"))
        .def("action_profile",
             [](const Fht& f, const Eigen::VectorXd& state) {
                 return f.action_profile(
                     std::span<const double>(state.data(), static_cast<size_t>(state.size())));
             },
             py::arg("state"))
        .def("contract_dense",
             [](const Fht& f, std::int64_t cap) { return contract_dense(f, cap); },
             py::arg("max_entries") = 10000000)
        .def("save", &save_fht, py::arg("path"));

    m.def("load_fht", &load_fht, py::arg("path"));
    m.def("add", &add, py::arg("a"), py::arg("b"));
    m.def(
        "round_fht",
        [](Fht f, double tol, int max_rank) {
            round_fht(f, tol, max_rank);
            return f;
        },
        py::arg("f"), py::arg("tol"), py::arg("max_rank") = 0);
    m.def("apply_markov", py::overload_cast<const Fht&, const Fht&>(&apply_markov), py::arg("P"),
          py::arg("v"));
    m.def("interpolate", &interpolate_py, py::arg("g"), py::arg("tree"), py::arg("basis"),
          py::arg("margin") = 2, py::arg("seed") = 0);
    m.def(
        "estimate_operator",
        [](const Eigen::MatrixXd& samples, const DyadicTree& tree, const BasisSet& state,
           const BasisSet& action, int margin, std::uint64_t seed) {
            OperatorSketchOptions opt;
            opt.margin = margin;
            opt.seed = seed;
            return estimate_operator(samples, tree, state, action, opt);
        },
        py::arg("samples"), py::arg("tree"), py::arg("state_basis"), py::arg("action_basis"),
        py::arg("margin") = 2, py::arg("seed") = 0);
    m.def("marginal_mass", &marginal_mass, py::arg("P"));

    py::class_<GLModel>(m, "GLModel")
        .def_static("chain", &GLModel::chain, py::arg("m"), py::arg("lambda_") = 0.2,
                    py::arg("mu_gl") = 1.0, py::arg("beta") = 1.0, py::arg("gain") = 20.0)
        .def_static("grid", &GLModel::grid, py::arg("m"), py::arg("lambda_") = 0.5,
                    py::arg("mu_gl") = 1.0, py::arg("beta") = 1.0, py::arg("gain") = 20.0)
        .def_readonly("d", &GLModel::d)
        .def_readonly("m", &GLModel::m)
        .def_readonly("omega", &GLModel::omega);

    m.def("potential", &potential, py::arg("model"), py::arg("x"));
    m.def("drift", &drift, py::arg("model"), py::arg("x"), py::arg("a"));
    m.def(
        "simulate",
        [](const GLModel& model, const Eigen::VectorXd& x0, double a, double duration,
           int substeps, std::uint64_t seed, std::uint64_t stream) {
            CostSpec cost;
            std::mt19937_64 rng = rng_stream(seed, stream);
            StepResult r = simulate(model, cost, x0, a, duration, substeps, rng);
            return py::make_tuple(r.x_next, r.cost);
        },
        py::arg("model"), py::arg("x0"), py::arg("a"), py::arg("duration"), py::arg("substeps"),
        py::arg("seed"), py::arg("stream") = 0);

    py::class_<SolvedStack>(m, "SolvedStack")
        .def("value_at", &SolvedStack::value_at, py::arg("x_site"), py::arg("t"))
        .def("value_k", &SolvedStack::value_k, py::arg("x_site"), py::arg("k"))
        .def("q_value", &SolvedStack::q_value, py::arg("x_site"), py::arg("a"), py::arg("k"))
        .def("policy_action", &SolvedStack::policy_action, py::arg("x_site"), py::arg("k"))
        .def("rollout",
             [](const SolvedStack& s, const Eigen::VectorXd& x0, std::uint64_t seed,
                std::uint64_t stream) {
                 std::mt19937_64 rng = rng_stream(seed, stream);
                 RolloutResult r = rollout(s, x0, rng);
                 return py::make_tuple(r.x_final, r.realized_cost, r.actions);
             },
             py::arg("x0_site"), py::arg("seed"), py::arg("stream") = 0)
        .def_property_readonly("K",
                               [](const SolvedStack& s) { return s.problem.cost.steps_K; });

    m.def(
        "solve",
        [](const std::string& problem_json, const std::string& out_dir) {
            ControlProblem p = problem_from_json(problem_json);
            p.validate();
            return backward_solve(p, out_dir);
        },
        py::arg("problem_json"), py::arg("out_dir"));
    m.def("load_stack", &load_stack, py::arg("dir"));
    m.def("preset_json",
          [](const std::string& name) { return ExperimentConfig::preset(name).to_json(); },
          py::arg("name"));
}
