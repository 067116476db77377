// Python bindings for the sqr library: model construction and I/O,
// node-conditional partition functions, normalizability checks, node-wise
// fitting, Gibbs sampling, AIS likelihood, and the chain-graph benchmark.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sqr/bench.hpp"
#include "sqr/data.hpp"
#include "sqr/errors.hpp"
#include "sqr/estimation.hpp"
#include "sqr/model.hpp"
#include "sqr/sampling.hpp"

namespace py = pybind11;
using namespace sqr;

namespace {

DataMatrix as_data(const Eigen::MatrixXd& values) {
    DataMatrix d;
    d.values = values;
    return d;
}

FitConfig make_fit_config(double lambda, int max_iters, double grad_tol, double diag_cap,
                          int threads) {
    FitConfig cfg;
    cfg.lambda = lambda;
    cfg.max_iters = max_iters;
    cfg.grad_tol = grad_tol;
    cfg.diag_cap = diag_cap;
    cfg.threads = threads;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(sqrgm, m) {
    m.doc() = "Square-root graphical models: exponential-family Markov random fields "
              "whose interactions couple the square roots of the sufficient statistics.";

    py::register_exception<SqrError>(m, "SqrError", PyExc_RuntimeError);
    py::register_exception<InvalidParams>(m, "InvalidParams", PyExc_ValueError);
    py::register_exception<DomainViolation>(m, "DomainViolation", PyExc_ValueError);
    py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);

    py::enum_<FamilyTag>(m, "Family")
        .value("Exponential", FamilyTag::Exponential)
        .value("Poisson", FamilyTag::Poisson)
        .value("Gaussian", FamilyTag::Gaussian);

    py::class_<NodeConditionalParams>(m, "NodeParams")
        .def(py::init<double, double>(), py::arg("eta1"), py::arg("eta2"))
        .def_readwrite("eta1", &NodeConditionalParams::eta1)
        .def_readwrite("eta2", &NodeConditionalParams::eta2)
        .def("__repr__", [](const NodeConditionalParams& p) {
            std::ostringstream s;
            s << "NodeParams(eta1=" << p.eta1 << ", eta2=" << p.eta2 << ")";
            return s.str();
        });

    m.def("node_log_partition", &node_log_partition, py::arg("family"), py::arg("params"));
    m.def("node_log_partition_quadrature", &node_log_partition_quadrature,
          py::arg("family"), py::arg("params"), py::arg("tol") = 1e-10);
    m.def("node_log_partition_grad", &node_log_partition_grad, py::arg("family"),
          py::arg("params"));
    m.def("node_conditional_valid", &node_conditional_valid, py::arg("family"),
          py::arg("params"));
    m.def(
        "slice_interval",
        [](FamilyTag tag, NodeConditionalParams p, double level) {
            const SliceInterval s = slice_interval(tag, p, level);
            return std::make_pair(s.lo, s.hi);
        },
        py::arg("family"), py::arg("params"), py::arg("level"));

    py::class_<SqrModel>(m, "SqrModel")
        .def(py::init<FamilyTag, Eigen::VectorXd, Eigen::MatrixXd>(), py::arg("family"),
             py::arg("theta"), py::arg("phi"))
        .def_property_readonly("family", &SqrModel::family)
        .def_property_readonly("p", &SqrModel::dim)
        .def_property_readonly("theta", &SqrModel::theta)
        .def_property_readonly("phi", &SqrModel::phi)
        .def("save", &save_model_file, py::arg("path"))
        .def_static("load", &load_model_file, py::arg("path"))
        .def("__repr__", [](const SqrModel& mod) {
            std::ostringstream s;
            s << "SqrModel(" << family_name(mod.family()) << ", p=" << mod.dim() << ")";
            return s.str();
        });

    m.def(
        "unnormalized_log_density",
        [](const SqrModel& model, const Eigen::VectorXd& x) {
            return unnormalized_log_density(model, x);
        },
        py::arg("model"), py::arg("x"));
    m.def("node_conditional_params", &node_conditional_params, py::arg("model"),
          py::arg("s"), py::arg("x_minus"));
    m.def(
        "radial_conditional_params",
        [](const SqrModel& model, const Eigen::VectorXd& u) {
            const RadialParams r = radial_conditional_params(model, u);
            return std::make_pair(r.eta1_bar, r.eta2_bar);
        },
        py::arg("model"), py::arg("u"));

    py::class_<NormalizabilityReport>(m, "NormalizabilityReport")
        .def_property_readonly("status",
                               [](const NormalizabilityReport& r) { return to_string(r.status); })
        .def_property_readonly("witness",
                               [](const NormalizabilityReport& r)
                                   -> std::optional<Eigen::VectorXd> { return r.witness; })
        .def_readonly("detail", &NormalizabilityReport::detail)
        .def("__repr__", [](const NormalizabilityReport& r) {
            return std::string(to_string(r.status)) + ": " + r.detail;
        });
    m.def("check_normalizable", &check_normalizable, py::arg("model"),
          py::arg("probes") = 10000, py::arg("probe_seed") = 20160610);

    m.def("exact_log_partition_small", &exact_log_partition_small, py::arg("model"),
          py::arg("tol") = 1e-8);
    m.def(
        "gaussian_equivalent",
        [](const SqrModel& model) {
            const GaussianEquivalent g = gaussian_equivalent(model);
            return std::make_pair(g.mu, g.sigma);
        },
        py::arg("model"));

    m.def(
        "fit",
        [](const Eigen::MatrixXd& data, FamilyTag family, double lambda, int max_iters,
           double grad_tol, double diag_cap, int threads) {
            return fit(as_data(data), family,
                       make_fit_config(lambda, max_iters, grad_tol, diag_cap, threads));
        },
        py::arg("data"), py::arg("family"), py::arg("lambda_") = 1e-5,
        py::arg("max_iters") = 5000, py::arg("grad_tol") = 1e-6,
        py::arg("diag_cap") = -1e-4, py::arg("threads") = 0);
    m.def(
        "fit_independent_baseline",
        [](const Eigen::MatrixXd& data, FamilyTag family) {
            return fit_independent_baseline(as_data(data), family);
        },
        py::arg("data"), py::arg("family"));

    m.def(
        "gibbs_sample",
        [](const SqrModel& model, long n, int sweeps, int slice_steps, std::uint64_t seed,
           int threads) {
            GibbsConfig cfg;
            cfg.sweeps = sweeps;
            cfg.slice_steps = slice_steps;
            return gibbs_sample(model, n, cfg, RandomStream(seed), threads).values;
        },
        py::arg("model"), py::arg("n"), py::arg("sweeps") = 1000,
        py::arg("slice_steps") = 10, py::arg("seed") = 0, py::arg("threads") = 0);

    py::class_<AisResult>(m, "AisResult")
        .def_readonly("log_partition", &AisResult::log_partition)
        .def_readonly("log_independent", &AisResult::log_independent)
        .def_readonly("log_weights", &AisResult::log_weights)
        .def_readonly("std_err", &AisResult::std_err)
        .def_readonly("ess", &AisResult::ess)
        .def_readonly("degenerate_weights", &AisResult::degenerate_weights)
        .def("__repr__", [](const AisResult& r) {
            std::ostringstream s;
            s << "AisResult(log_partition=" << r.log_partition << ", std_err=" << r.std_err
              << ", ess=" << r.ess << ")";
            return s.str();
        });
    m.def(
        "ais_log_partition",
        [](const SqrModel& model, int num_chains, int anneal_steps, int gibbs_per_step,
           int slice_steps, std::uint64_t seed, int threads) {
            AisConfig cfg;
            cfg.num_chains = num_chains;
            cfg.anneal_steps = anneal_steps;
            cfg.gibbs_per_step = gibbs_per_step;
            cfg.slice_steps = slice_steps;
            cfg.threads = threads;
            return ais_log_partition(model, cfg, RandomStream(seed));
        },
        py::arg("model"), py::arg("num_chains") = 1000, py::arg("anneal_steps") = 100,
        py::arg("gibbs_per_step") = 10, py::arg("slice_steps") = 10, py::arg("seed") = 0,
        py::arg("threads") = 0);
    m.def(
        "log_likelihood",
        [](const SqrModel& model, const Eigen::MatrixXd& data, const AisResult& ais) {
            return log_likelihood(model, as_data(data), ais);
        },
        py::arg("model"), py::arg("data"), py::arg("ais"));
    m.def("anneal_model", &anneal_model, py::arg("model"), py::arg("beta"));

    m.def(
        "chain_graph",
        [](int p, int k, double diag, double weight) {
            return chain_graph({p, k, diag, weight});
        },
        py::arg("p"), py::arg("k"), py::arg("diag") = -1.0, py::arg("weight") = 0.0);
    m.def("edge_precision", &edge_precision, py::arg("phi_true"), py::arg("phi_est"),
          py::arg("top_n"));
    m.def("relative_likelihood", &relative_likelihood, py::arg("l_model"),
          py::arg("l_baseline"), py::arg("n"));

    m.def(
        "load_csv",
        [](const std::string& path, FamilyTag family, bool has_header) {
            const DataMatrix d = load_csv(path, family, has_header);
            return std::make_pair(d.values, d.column_names);
        },
        py::arg("path"), py::arg("family"), py::arg("has_header") = false);
}
