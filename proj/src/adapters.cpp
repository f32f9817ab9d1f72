#include "flora/adapters.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "flora/rng.hpp"
#include "flora/tensor_io.hpp"

namespace flora {

namespace {

void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

LayerSpec LayerSpec::linear(std::size_t d1, std::size_t d2) {
    check(d1 > 0 && d2 > 0, "linear layer extents must be positive");
    LayerSpec s;
    s.kind = LayerKind::Linear;
    s.d1 = d1;
    s.d2 = d2;
    return s;
}

LayerSpec LayerSpec::conv(std::size_t d_in, std::size_t d_out, std::size_t k) {
    check(d_in > 0 && d_out > 0 && k > 0, "conv layer extents must be positive");
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.d_in = d_in;
    s.d_out = d_out;
    s.k = k;
    return s;
}

std::vector<std::size_t> LayerSpec::weight_shape() const {
    if (kind == LayerKind::Linear) return {d1, d2};
    return {d_in, d_out, k, k};
}

FrozenLayer::FrozenLayer(Tensor weight, LayerSpec spec)
    : weight_(std::move(weight)), spec_(spec) {
    check(weight_.shape() == spec_.weight_shape(),
          "frozen weight shape " + shape_to_string(weight_.shape()) +
              " does not match layer spec " + shape_to_string(spec_.weight_shape()));
}

TuckerAdapter::TuckerAdapter(Tensor core, std::vector<Matrix> factors, double scale)
    : core_(std::move(core)), factors_(std::move(factors)), scale_(scale) {
    check(std::isfinite(scale_), "adapter scale must be finite");
    check(factors_.size() == core_.ndim(), "need one factor matrix per core mode");
    for (std::size_t n = 0; n < factors_.size(); ++n) {
        check(factors_[n].cols() == core_.shape()[n],
              "factor " + std::to_string(n) + " has " + std::to_string(factors_[n].cols()) +
                  " columns but core extent is " + std::to_string(core_.shape()[n]));
        check(core_.shape()[n] <= factors_[n].rows(),
              "rank " + std::to_string(core_.shape()[n]) + " exceeds layer extent " +
                  std::to_string(factors_[n].rows()) + " at mode " + std::to_string(n));
    }
}

std::vector<std::size_t> TuckerAdapter::layer_shape() const {
    std::vector<std::size_t> shape(factors_.size());
    for (std::size_t n = 0; n < factors_.size(); ++n) shape[n] = factors_[n].rows();
    return shape;
}

std::size_t TuckerAdapter::parameter_count() const {
    std::size_t total = core_.size();
    for (const auto& f : factors_) total += f.size();
    return total;
}

LoraAdapter::LoraAdapter(Matrix a, Matrix b, LoraKind kind, double scale)
    : a_(std::move(a)), b_(std::move(b)), kind_(kind), scale_(scale) {
    check(std::isfinite(scale_), "adapter scale must be finite");
    check(a_.cols() >= 1, "lora rank must be at least 1");
    check(a_.cols() == b_.cols(), "lora factors must share the rank dimension");
}

TuckerAdapter init_tucker(const std::vector<std::size_t>& shape,
                          const std::vector<std::size_t>& ranks, double scale,
                          std::uint64_t seed) {
    check(!shape.empty() && shape.size() == ranks.size(),
          "need one rank per layer mode, got ranks " + shape_to_string(ranks) + " for shape " +
              shape_to_string(shape));
    for (std::size_t n = 0; n < shape.size(); ++n) {
        check(ranks[n] >= 1, "ranks must be positive");
        check(ranks[n] <= shape[n], "rank " + std::to_string(ranks[n]) +
                                        " exceeds layer extent " + std::to_string(shape[n]) +
                                        " at mode " + std::to_string(n));
    }

    Tensor core{std::vector<std::size_t>(ranks.begin(), ranks.end())};  // zero
    Rng rng(seed);
    std::vector<Matrix> factors;
    factors.reserve(shape.size());
    for (std::size_t n = 0; n < shape.size(); ++n) {
        Matrix f(shape[n], ranks[n]);
        const double stddev = 1.0 / std::sqrt(static_cast<double>(ranks[n]));
        for (double& v : f.values()) v = rng.gaussian(stddev);
        factors.push_back(std::move(f));
    }
    return TuckerAdapter(std::move(core), std::move(factors), scale);
}

LoraAdapter init_lora(const LayerSpec& spec, std::size_t r, double scale, std::uint64_t seed) {
    check(r >= 1, "lora rank must be at least 1");
    std::size_t a_rows, b_rows;
    LoraKind kind;
    if (spec.kind == LayerKind::Linear) {
        a_rows = spec.d2;
        b_rows = spec.d1;
        kind = LoraKind::Linear;
    } else {
        a_rows = spec.k * spec.d_out;
        b_rows = spec.k * spec.d_in;
        kind = LoraKind::ConvReshape;
    }
    check(r <= std::min(a_rows, b_rows), "lora rank " + std::to_string(r) +
                                             " exceeds the flattened layer extents");

    Rng rng(seed);
    Matrix a(a_rows, r);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(r));
    for (double& v : a.values()) v = rng.gaussian(stddev);
    Matrix b(b_rows, r);  // zero, so the initial update vanishes
    return LoraAdapter(std::move(a), std::move(b), kind, scale);
}

Tensor reconstruct(const TuckerAdapter& adapter) {
    Tensor t = adapter.core();
    for (std::size_t n = 0; n < adapter.ndim(); ++n)
        t = mode_n_product(t, adapter.factor(n), n);
    return t;
}

Matrix reshape_conv_to_matrix(const Tensor& w) {
    check(w.ndim() == 4 && w.shape()[2] == w.shape()[3],
          "expected a conv weight of shape (d_in,d_out,k,k), got " + shape_to_string(w.shape()));
    const std::size_t d_in = w.shape()[0], d_out = w.shape()[1], k = w.shape()[2];
    Matrix m(k * d_in, k * d_out);
    for (std::size_t ci = 0; ci < d_in; ++ci)
        for (std::size_t co = 0; co < d_out; ++co)
            for (std::size_t kr = 0; kr < k; ++kr)
                for (std::size_t kc = 0; kc < k; ++kc)
                    m(ci * k + kr, co * k + kc) = w.at({ci, co, kr, kc});
    return m;
}

Tensor reshape_matrix_to_conv(const Matrix& m, std::size_t d_in, std::size_t d_out,
                              std::size_t k) {
    check(m.rows() == k * d_in && m.cols() == k * d_out,
          "matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
              " does not flatten a (d_in,d_out,k,k) conv weight");
    Tensor w({d_in, d_out, k, k});
    for (std::size_t ci = 0; ci < d_in; ++ci)
        for (std::size_t co = 0; co < d_out; ++co)
            for (std::size_t kr = 0; kr < k; ++kr)
                for (std::size_t kc = 0; kc < k; ++kc)
                    w.at({ci, co, kr, kc}) = m(ci * k + kr, co * k + kc);
    return w;
}

Tensor lora_delta(const LoraAdapter& adapter, const FrozenLayer& layer) {
    const LayerSpec& spec = layer.spec();
    if (adapter.kind() == LoraKind::Linear) {
        check(spec.kind == LayerKind::Linear, "linear lora adapter applied to a conv layer");
        check(adapter.b().rows() == spec.d1 && adapter.a().rows() == spec.d2,
              "lora factor shapes do not match the linear layer");
        return tensor_from_matrix(matmul(adapter.b(), transpose(adapter.a())));
    }
    check(spec.kind == LayerKind::Conv, "conv lora adapter applied to a linear layer");
    check(adapter.b().rows() == spec.k * spec.d_in && adapter.a().rows() == spec.k * spec.d_out,
          "lora factor shapes do not match the conv layer");
    return reshape_matrix_to_conv(matmul(adapter.b(), transpose(adapter.a())), spec.d_in,
                                  spec.d_out, spec.k);
}

Tensor merge(const FrozenLayer& layer, const Tensor& delta, double scale) {
    check(delta.shape() == layer.weight().shape(),
          "delta shape " + shape_to_string(delta.shape()) + " does not match the layer weight " +
              shape_to_string(layer.weight().shape()));
    return axpy(scale, delta, layer.weight());
}

std::size_t flora_param_count(const LayerSpec& spec, std::size_t r1, std::size_t r2,
                              std::size_t r3) {
    check(r1 >= 1 && r2 >= 1, "ranks must be positive");
    if (spec.kind == LayerKind::Linear) return r1 * r2 + spec.d1 * r1 + spec.d2 * r2;
    check(r3 >= 1, "conv adapters need a positive kernel rank r3");
    return r1 * r2 * r3 * r3 + spec.d_in * r1 + spec.d_out * r2 + 2 * spec.k * r3;
}

std::size_t lora_param_count(const LayerSpec& spec, std::size_t r) {
    check(r >= 1, "ranks must be positive");
    if (spec.kind == LayerKind::Linear) return r * (spec.d1 + spec.d2);
    return r * spec.k * (spec.d_in + spec.d_out);
}

std::size_t param_count(const LayerSpec& spec, const Ranks& ranks, Method method) {
    if (method == Method::Flora) return flora_param_count(spec, ranks.r1, ranks.r2, ranks.r3);
    return lora_param_count(spec, ranks.r1);
}

Tensor random_tucker_tensor(const std::vector<std::size_t>& shape,
                            const std::vector<std::size_t>& ranks, std::uint64_t seed) {
    TuckerAdapter adapter = init_tucker(shape, ranks, 1.0, seed);
    Rng rng(mix_seed(seed, 0x636f7265));  // separate stream for the core
    for (double& v : adapter.core().values()) v = rng.gaussian();
    return reconstruct(adapter);
}

// ---------------------------------------------------------------------------
// bundle I/O

namespace {

using nlohmann::json;

json layer_to_json(const LayerSpec& spec) {
    if (spec.kind == LayerKind::Linear)
        return json{{"kind", "linear"}, {"d1", spec.d1}, {"d2", spec.d2}};
    return json{{"kind", "conv"}, {"d_in", spec.d_in}, {"d_out", spec.d_out}, {"k", spec.k}};
}

LayerSpec layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear")
        return LayerSpec::linear(j.at("d1").get<std::size_t>(), j.at("d2").get<std::size_t>());
    if (kind == "conv")
        return LayerSpec::conv(j.at("d_in").get<std::size_t>(), j.at("d_out").get<std::size_t>(),
                               j.at("k").get<std::size_t>());
    throw std::runtime_error("unknown layer kind '" + kind + "' in adapter manifest");
}

constexpr const char* kManifestVersion = "flora-adapter/1";

}  // namespace

void save_adapter_bundle(const std::filesystem::path& dir, const AnyAdapter& adapter,
                         const LayerSpec& layer, std::optional<std::uint64_t> seed) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["version"] = kManifestVersion;
    manifest["layer"] = layer_to_json(layer);
    if (seed) manifest["seed"] = *seed;

    json files = json::object();
    if (const auto* tucker = std::get_if<TuckerAdapter>(&adapter)) {
        manifest["kind"] = "tucker";
        manifest["ranks"] = tucker->ranks();
        manifest["scale"] = tucker->scale();
        files["core"] = "core.flt";
        write_flt1(dir / "core.flt", tucker->core());
        for (std::size_t n = 0; n < tucker->ndim(); ++n) {
            const std::string name = "factor_" + std::to_string(n + 1);
            files[name] = name + ".flt";
            write_flt1(dir / (name + ".flt"), tensor_from_matrix(tucker->factor(n)));
        }
    } else {
        const auto& lora = std::get<LoraAdapter>(adapter);
        manifest["kind"] = lora.kind() == LoraKind::Linear ? "lora-linear" : "lora-conv";
        manifest["ranks"] = json::array({lora.rank()});
        manifest["scale"] = lora.scale();
        files["lora_a"] = "lora_a.flt";
        files["lora_b"] = "lora_b.flt";
        write_flt1(dir / "lora_a.flt", tensor_from_matrix(lora.a()));
        write_flt1(dir / "lora_b.flt", tensor_from_matrix(lora.b()));
    }
    manifest["files"] = files;
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedBundle load_adapter_bundle(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw std::runtime_error(manifest_path.string() + ": invalid manifest: " + e.what());
    }
    if (manifest.value("version", "") != kManifestVersion)
        throw std::runtime_error(manifest_path.string() + ": unsupported manifest version '" +
                                 manifest.value("version", "<missing>") + "'");

    const LayerSpec layer = layer_from_json(manifest.at("layer"));
    const double scale = manifest.at("scale").get<double>();
    std::optional<std::uint64_t> seed;
    if (manifest.contains("seed")) seed = manifest["seed"].get<std::uint64_t>();
    const json& files = manifest.at("files");
    const auto tensor_file = [&](const std::string& name) {
        return read_flt1(dir / files.at(name).get<std::string>());
    };

    const std::string kind = manifest.at("kind").get<std::string>();
    if (kind == "tucker") {
        Tensor core = tensor_file("core");
        const auto ranks = manifest.at("ranks").get<std::vector<std::size_t>>();
        if (core.shape() != ranks)
            throw std::runtime_error(manifest_path.string() +
                                     ": core shape does not match the declared ranks");
        std::vector<Matrix> factors;
        for (std::size_t n = 0; n < core.ndim(); ++n)
            factors.push_back(matrix_from_tensor(tensor_file("factor_" + std::to_string(n + 1))));
        TuckerAdapter adapter(std::move(core), std::move(factors), scale);
        if (adapter.layer_shape() != layer.weight_shape())
            throw std::runtime_error(manifest_path.string() +
                                     ": factor shapes do not match the declared layer");
        return LoadedBundle{std::move(adapter), layer, seed};
    }
    if (kind == "lora-linear" || kind == "lora-conv") {
        Matrix a = matrix_from_tensor(tensor_file("lora_a"));
        Matrix b = matrix_from_tensor(tensor_file("lora_b"));
        const LoraKind lk = kind == "lora-linear" ? LoraKind::Linear : LoraKind::ConvReshape;
        if ((lk == LoraKind::Linear) != (layer.kind == LayerKind::Linear))
            throw std::runtime_error(manifest_path.string() +
                                     ": adapter kind does not match the declared layer");
        LoraAdapter adapter(std::move(a), std::move(b), lk, scale);
        // surface shape mismatches now rather than at first use
        FrozenLayer probe(Tensor(layer.weight_shape()), layer);
        lora_delta(adapter, probe);
        return LoadedBundle{std::move(adapter), layer, seed};
    }
    throw std::runtime_error(manifest_path.string() + ": unknown adapter kind '" + kind + "'");
}

}  // namespace flora
