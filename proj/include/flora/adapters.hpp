#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "flora/tensor.hpp"

namespace flora {

enum class LayerKind { Linear, Conv };

/// Geometry of a target weight space: linear d1 x d2, or conv
/// d_in x d_out x k x k.
struct LayerSpec {
    LayerKind kind = LayerKind::Linear;
    std::size_t d1 = 0, d2 = 0;             // linear
    std::size_t d_in = 0, d_out = 0, k = 0; // conv

    static LayerSpec linear(std::size_t d1, std::size_t d2);
    static LayerSpec conv(std::size_t d_in, std::size_t d_out, std::size_t k);

    std::vector<std::size_t> weight_shape() const;
    std::size_t ndim() const { return kind == LayerKind::Linear ? 2 : 4; }
};

/// Immutable base weight plus its layer geometry.
class FrozenLayer {
public:
    FrozenLayer(Tensor weight, LayerSpec spec);

    const Tensor& weight() const { return weight_; }
    const LayerSpec& spec() const { return spec_; }

private:
    Tensor weight_;
    LayerSpec spec_;
};

/// Tucker-structured adapter: low-rank core G (shape J_1..J_N) plus one
/// factor matrix per mode (I_n x J_n). The update it represents is
/// G x_1 A(1) x_2 ... x_N A(N); the scale s is stored here but applied only
/// when merging or running a forward pass.
class TuckerAdapter {
public:
    TuckerAdapter(Tensor core, std::vector<Matrix> factors, double scale);

    const Tensor& core() const { return core_; }
    Tensor& core() { return core_; }
    const std::vector<Matrix>& factors() const { return factors_; }
    const Matrix& factor(std::size_t mode) const { return factors_.at(mode); }
    Matrix& factor(std::size_t mode) { return factors_.at(mode); }

    double scale() const { return scale_; }
    std::size_t ndim() const { return core_.ndim(); }
    const std::vector<std::size_t>& ranks() const { return core_.shape(); }
    std::vector<std::size_t> layer_shape() const;

    /// Total number of trainable entries actually allocated.
    std::size_t parameter_count() const;

private:
    Tensor core_;
    std::vector<Matrix> factors_;
    double scale_;
};

enum class LoraKind { Linear, ConvReshape };

/// Matrix-adapter baseline: delta = b a^T for linear layers; for conv layers
/// the same product is formed on the flattened (k d_in) x (k d_out) matrix
/// and reshaped back into the 4-D weight.
class LoraAdapter {
public:
    LoraAdapter(Matrix a, Matrix b, LoraKind kind, double scale);

    const Matrix& a() const { return a_; }
    Matrix& a() { return a_; }
    const Matrix& b() const { return b_; }
    Matrix& b() { return b_; }
    LoraKind kind() const { return kind_; }
    double scale() const { return scale_; }
    std::size_t rank() const { return a_.cols(); }
    std::size_t parameter_count() const { return a_.size() + b_.size(); }

private:
    Matrix a_;
    Matrix b_;
    LoraKind kind_;
    double scale_;
};

using AnyAdapter = std::variant<TuckerAdapter, LoraAdapter>;

/// Zero core, Gaussian factors with stddev 1/sqrt(J_n); the initial update
/// is exactly zero. Rejects ranks exceeding the layer extents.
TuckerAdapter init_tucker(const std::vector<std::size_t>& shape,
                          const std::vector<std::size_t>& ranks, double scale,
                          std::uint64_t seed);

/// Gaussian a (stddev 1/sqrt(r)), zero b; the initial update is zero.
LoraAdapter init_lora(const LayerSpec& spec, std::size_t r, double scale, std::uint64_t seed);

/// The unscaled update G x_1 A(1) ... x_N A(N).
Tensor reconstruct(const TuckerAdapter& adapter);

/// The unscaled update b a^T, reshaped into the layer's weight space for
/// conv layers.
Tensor lora_delta(const LoraAdapter& adapter, const FrozenLayer& layer);

/// W0 + scale * delta.
Tensor merge(const FrozenLayer& layer, const Tensor& delta, double scale);

enum class Method { Flora, Lora };

struct Ranks {
    std::size_t r1 = 0;
    std::size_t r2 = 0;
    std::size_t r3 = 0;  // conv-only, Flora-only
};

std::size_t flora_param_count(const LayerSpec& spec, std::size_t r1, std::size_t r2,
                              std::size_t r3);
std::size_t lora_param_count(const LayerSpec& spec, std::size_t r);
std::size_t param_count(const LayerSpec& spec, const Ranks& ranks, Method method);

/// Reconstruction of a fully random Tucker adapter (Gaussian core and
/// factors); used to synthesize targets with known Tucker ranks.
Tensor random_tucker_tensor(const std::vector<std::size_t>& shape,
                            const std::vector<std::size_t>& ranks, std::uint64_t seed);

/// The fixed conv flattening: matrix row = i_in * k + kr, column =
/// i_out * k + kc. Locality analysis and the LoRA conv baseline both rely on
/// this exact bijection.
Matrix reshape_conv_to_matrix(const Tensor& w);
Tensor reshape_matrix_to_conv(const Matrix& m, std::size_t d_in, std::size_t d_out,
                              std::size_t k);

/// On-disk bundle: manifest.json ("flora-adapter/1") plus one FLT1 file per
/// parameter tensor.
struct LoadedBundle {
    AnyAdapter adapter;
    LayerSpec layer;
    std::optional<std::uint64_t> seed;
};

void save_adapter_bundle(const std::filesystem::path& dir, const AnyAdapter& adapter,
                         const LayerSpec& layer, std::optional<std::uint64_t> seed);
LoadedBundle load_adapter_bundle(const std::filesystem::path& dir);

}  // namespace flora
