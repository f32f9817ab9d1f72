// Python bindings for the flora core: tensor ops, small-matrix numerics,
// adapters, analysis metrics, and the seeded recovery driver.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flora/adapters.hpp"
#include "flora/analysis.hpp"
#include "flora/experiment.hpp"
#include "flora/numerics.hpp"
#include "flora/tensor.hpp"
#include "flora/tensor_io.hpp"
#include "flora/training.hpp"

namespace py = pybind11;

namespace {

using namespace flora;

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const DoubleArray& array) {
    const py::buffer_info info = array.request();
    std::vector<std::size_t> shape(info.shape.begin(), info.shape.end());
    const auto* data = static_cast<const double*>(info.ptr);
    return Tensor(std::move(shape), std::vector<double>(data, data + info.size));
}

Matrix matrix_from_array(const DoubleArray& array) {
    const py::buffer_info info = array.request();
    if (info.ndim != 2) throw std::invalid_argument("expected a 2-D array");
    const auto* data = static_cast<const double*>(info.ptr);
    return Matrix(static_cast<std::size_t>(info.shape[0]),
                  static_cast<std::size_t>(info.shape[1]),
                  std::vector<double>(data, data + info.size));
}

py::array array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.data(), t.data() + t.size(), static_cast<double*>(out.request().ptr));
    return out;
}

py::array array_from_matrix(const Matrix& m) {
    py::array_t<double> out({static_cast<py::ssize_t>(m.rows()),
                             static_cast<py::ssize_t>(m.cols())});
    std::copy(m.data(), m.data() + m.size(), static_cast<double*>(out.request().ptr));
    return out;
}

LayerSpec spec_from_args(const std::string& kind, const std::vector<std::size_t>& dims) {
    if (kind == "linear") {
        if (dims.size() != 2) throw std::invalid_argument("linear layers need dims (d1, d2)");
        return LayerSpec::linear(dims[0], dims[1]);
    }
    if (kind == "conv") {
        if (dims.size() != 3)
            throw std::invalid_argument("conv layers need dims (d_in, d_out, k)");
        return LayerSpec::conv(dims[0], dims[1], dims[2]);
    }
    throw std::invalid_argument("layer kind must be 'linear' or 'conv'");
}

py::dict recovery_to_dict(const RecoveryOutcome& outcome) {
    py::dict out;
    py::list records;
    for (const auto& rec : outcome.result.records)
        records.append(py::make_tuple(rec.step, rec.loss, rec.delta_frob, rec.amp_factor));
    out["records"] = std::move(records);
    out["diverged"] = outcome.result.diverged;
    out["final_rel_error"] = outcome.final_rel_error;
    out["param_count"] = outcome.parameter_count;
    out["scale"] = outcome.scale;
    out["target"] = array_from_tensor(outcome.target);
    if (const auto* tucker = std::get_if<TuckerAdapter>(&outcome.adapter))
        out["delta"] = array_from_tensor(reconstruct(*tucker));
    else {
        const auto& lora = std::get<LoraAdapter>(outcome.adapter);
        FrozenLayer probe(Tensor(outcome.target.shape()),
                          outcome.target.ndim() == 2
                              ? LayerSpec::linear(outcome.target.shape()[0],
                                                  outcome.target.shape()[1])
                              : LayerSpec::conv(outcome.target.shape()[0],
                                                outcome.target.shape()[1],
                                                outcome.target.shape()[2]));
        out["delta"] = array_from_tensor(lora_delta(lora, probe));
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_flora, m) {
    m.doc() = "Tucker-structured low-rank tensor adapters (FLoRA) with a LoRA baseline";

    // tensor ops (modes are 0-based)
    m.def(
        "mode_n_unfold",
        [](const DoubleArray& t, std::size_t mode) {
            return array_from_matrix(mode_n_unfold(tensor_from_array(t), mode));
        },
        py::arg("tensor"), py::arg("mode"));
    m.def(
        "mode_n_fold",
        [](const DoubleArray& m_in, std::size_t mode, const std::vector<std::size_t>& shape) {
            return array_from_tensor(mode_n_fold(matrix_from_array(m_in), mode, shape));
        },
        py::arg("matrix"), py::arg("mode"), py::arg("shape"));
    m.def(
        "mode_n_product",
        [](const DoubleArray& t, const DoubleArray& u, std::size_t mode) {
            return array_from_tensor(
                mode_n_product(tensor_from_array(t), matrix_from_array(u), mode));
        },
        py::arg("tensor"), py::arg("matrix"), py::arg("mode"));
    m.def(
        "frobenius_norm",
        [](const DoubleArray& t) { return frobenius_norm(tensor_from_array(t)); },
        py::arg("tensor"));

    // numerics
    m.def(
        "svd",
        [](const DoubleArray& a) {
            const SvdResult r = svd(matrix_from_array(a));
            return py::make_tuple(array_from_matrix(r.u), py::cast(r.sigma),
                                  array_from_matrix(r.v));
        },
        py::arg("a"), "Thin SVD (u, sigma, v) with deterministic signs");
    m.def(
        "pseudo_inverse",
        [](const DoubleArray& a) { return array_from_matrix(pseudo_inverse(matrix_from_array(a))); },
        py::arg("a"));
    m.def(
        "top_r_singular_subspaces",
        [](const DoubleArray& a, std::size_t r) {
            const auto [u, v] = top_r_singular_subspaces(matrix_from_array(a), r);
            return py::make_tuple(array_from_matrix(u), array_from_matrix(v));
        },
        py::arg("a"), py::arg("r"));

    // adapters
    py::class_<TuckerAdapter>(m, "TuckerAdapter")
        .def_property_readonly("core",
                               [](const TuckerAdapter& a) { return array_from_tensor(a.core()); })
        .def_property_readonly("factors",
                               [](const TuckerAdapter& a) {
                                   py::list out;
                                   for (const auto& f : a.factors())
                                       out.append(array_from_matrix(f));
                                   return out;
                               })
        .def_property_readonly("scale", &TuckerAdapter::scale)
        .def_property_readonly("ranks", [](const TuckerAdapter& a) { return a.ranks(); })
        .def("parameter_count", &TuckerAdapter::parameter_count)
        .def("reconstruct",
             [](const TuckerAdapter& a) { return array_from_tensor(reconstruct(a)); });

    m.def(
        "init_tucker",
        [](const std::vector<std::size_t>& shape, const std::vector<std::size_t>& ranks,
           double scale, std::uint64_t seed) { return init_tucker(shape, ranks, scale, seed); },
        py::arg("shape"), py::arg("ranks"), py::arg("scale"), py::arg("seed"),
        "Zero core, Gaussian factors; the initial update is exactly zero");
    m.def(
        "random_tucker_tensor",
        [](const std::vector<std::size_t>& shape, const std::vector<std::size_t>& ranks,
           std::uint64_t seed) {
            return array_from_tensor(random_tucker_tensor(shape, ranks, seed));
        },
        py::arg("shape"), py::arg("ranks"), py::arg("seed"));
    m.def(
        "lora_delta_linear",
        [](const DoubleArray& a, const DoubleArray& b) {
            return array_from_matrix(matmul(matrix_from_array(b), transpose(matrix_from_array(a))));
        },
        py::arg("a"), py::arg("b"), "b @ a.T");
    m.def(
        "lora_delta_conv",
        [](const DoubleArray& a, const DoubleArray& b, std::size_t d_in, std::size_t d_out,
           std::size_t k) {
            return array_from_tensor(reshape_matrix_to_conv(
                matmul(matrix_from_array(b), transpose(matrix_from_array(a))), d_in, d_out, k));
        },
        py::arg("a"), py::arg("b"), py::arg("d_in"), py::arg("d_out"), py::arg("k"));
    m.def(
        "merge",
        [](const DoubleArray& base, const DoubleArray& delta, double scale) {
            const Tensor base_t = tensor_from_array(base);
            return array_from_tensor(axpy(scale, tensor_from_array(delta), base_t));
        },
        py::arg("base"), py::arg("delta"), py::arg("scale"), "base + scale * delta");
    m.def(
        "param_count",
        [](const std::string& kind, const std::vector<std::size_t>& dims, std::size_t r,
           std::size_t r3, const std::string& method) {
            const LayerSpec spec = spec_from_args(kind, dims);
            if (method == "flora") {
                if (spec.kind == LayerKind::Conv && r3 == 0)
                    throw std::invalid_argument("conv flora budgets need r3 >= 1");
                return flora_param_count(spec, r, r, spec.kind == LayerKind::Conv ? r3 : 0);
            }
            if (method == "lora") return lora_param_count(spec, r);
            throw std::invalid_argument("method must be 'flora' or 'lora'");
        },
        py::arg("kind"), py::arg("dims"), py::arg("r"), py::arg("r3") = 0,
        py::arg("method") = "flora");

    // analysis
    m.def(
        "amplification_factor",
        [](const DoubleArray& delta, const DoubleArray& frozen, std::size_t r) {
            const AmpReport rep =
                amplification_factor(matrix_from_array(delta), matrix_from_array(frozen), r);
            py::dict out;
            out["delta_frob"] = rep.delta_frob;
            out["projection_frob"] = rep.projection_frob;
            out["factor"] = rep.factor;
            out["rank_used"] = rep.rank_used;
            return out;
        },
        py::arg("delta"), py::arg("frozen"), py::arg("r"));
    m.def(
        "optimal_core",
        [](const DoubleArray& a, const DoubleArray& b, const DoubleArray& target) {
            return array_from_matrix(optimal_core(matrix_from_array(a), matrix_from_array(b),
                                                  matrix_from_array(target)));
        },
        py::arg("a"), py::arg("b"), py::arg("target"),
        "Least-squares core G for |a G b^T - target|_F");
    m.def(
        "locality_dispersion",
        [](std::size_t d_in, std::size_t d_out, std::size_t k) {
            const LocalityReport rep = locality_dispersion(d_in, d_out, k);
            py::dict out;
            out["pair_count"] = rep.pairs.size();
            out["max_separation"] = rep.max_separation;
            out["mean_separation"] = rep.mean_separation;
            out["channel_row_stride"] = rep.channel_row_stride;
            out["channel_col_stride"] = rep.channel_col_stride;
            return out;
        },
        py::arg("d_in"), py::arg("d_out"), py::arg("k"));

    // file I/O
    m.def(
        "read_flt1",
        [](const std::string& path) { return array_from_tensor(read_flt1(path)); },
        py::arg("path"));
    m.def(
        "write_flt1",
        [](const std::string& path, const DoubleArray& t) {
            write_flt1(path, tensor_from_array(t));
        },
        py::arg("path"), py::arg("tensor"));

    // experiments
    m.def(
        "run_recovery",
        [](const std::string& kind, const std::vector<std::size_t>& dims,
           const std::string& method, std::size_t r, std::size_t r3,
           std::optional<double> scale, const std::string& optimizer, double lr,
           std::size_t steps, std::size_t record_every, std::uint64_t seed,
           const std::vector<std::size_t>& target_ranks) {
            RecoveryConfig cfg;
            cfg.layer = spec_from_args(kind, dims);
            cfg.method = method == "lora" ? Method::Lora : Method::Flora;
            cfg.r = r;
            cfg.r3 = r3;
            cfg.scale = scale;
            cfg.optimizer.kind =
                optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
            cfg.optimizer.lr = lr;
            cfg.steps = steps;
            cfg.record_every = record_every;
            cfg.seed = seed;
            cfg.target_ranks = target_ranks;
            return recovery_to_dict(run_recovery(cfg));
        },
        py::arg("kind"), py::arg("dims"), py::arg("method") = "flora", py::arg("r") = 2,
        py::arg("r3") = kDefaultKernelRank, py::arg("scale") = std::nullopt,
        py::arg("optimizer") = "adam", py::arg("lr") = 1e-2, py::arg("steps") = 5000,
        py::arg("record_every") = 10, py::arg("seed") = 0,
        py::arg("target_ranks") = std::vector<std::size_t>{},
        "Seeded recovery experiment; returns records and the final relative error");
    m.def(
        "gradcheck",
        [](double h, double tol, const std::string& only) {
            py::list out;
            for (const auto& c : run_gradcheck_grid(h, tol, only)) {
                py::dict entry;
                entry["name"] = c.name;
                entry["max_rel_err"] = c.report.max_rel_err;
                entry["passed"] = c.passed;
                out.append(std::move(entry));
            }
            return out;
        },
        py::arg("h") = 1e-5, py::arg("tol") = 1e-6, py::arg("only") = "");
}
