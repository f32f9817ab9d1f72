#include "flora/layers.hpp"

#include <stdexcept>
#include <string>

namespace flora {

namespace {

void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::vector<double> matvec(const Tensor& w, std::span<const double> x) {
    const std::size_t rows = w.shape()[0];
    const std::size_t cols = w.shape()[1];
    std::vector<double> out(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += w[i * cols + j] * x[j];
        out[i] = acc;
    }
    return out;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x) {
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, j) * x[i];
        out[j] = acc;
    }
    return out;
}

void check_linear(const FrozenLayer& layer, std::size_t x_len) {
    check(layer.spec().kind == LayerKind::Linear, "linear_forward needs a linear layer");
    check(x_len == layer.spec().d2, "input length " + std::to_string(x_len) +
                                        " does not match layer d2 " +
                                        std::to_string(layer.spec().d2));
}

}  // namespace

std::vector<double> linear_forward(std::span<const double> x, const FrozenLayer& layer) {
    check_linear(layer, x.size());
    return matvec(layer.weight(), x);
}

std::vector<double> linear_forward(std::span<const double> x, const FrozenLayer& layer,
                                   const TuckerAdapter& adapter) {
    check_linear(layer, x.size());
    check(adapter.ndim() == 2 && adapter.layer_shape() == layer.weight().shape(),
          "tucker adapter shape does not match the linear layer");
    std::vector<double> h = matvec(layer.weight(), x);
    // A (G (B^T x)), never forming A G B^T
    const std::vector<double> bx = matvec_transposed(adapter.factor(1), x);
    const std::vector<double> gbx = matvec(matrix_from_tensor(adapter.core()), bx);
    const std::vector<double> delta = matvec(adapter.factor(0), gbx);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += adapter.scale() * delta[i];
    return h;
}

std::vector<double> linear_forward(std::span<const double> x, const FrozenLayer& layer,
                                   const LoraAdapter& adapter) {
    check_linear(layer, x.size());
    check(adapter.kind() == LoraKind::Linear, "conv lora adapter applied to a linear layer");
    check(adapter.a().rows() == layer.spec().d2 && adapter.b().rows() == layer.spec().d1,
          "lora factor shapes do not match the linear layer");
    std::vector<double> h = matvec(layer.weight(), x);
    const std::vector<double> ax = matvec_transposed(adapter.a(), x);
    const std::vector<double> delta = matvec(adapter.b(), ax);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += adapter.scale() * delta[i];
    return h;
}

std::pair<std::size_t, std::size_t> conv2d_output_extents(const ConvGeometry& geom,
                                                          std::size_t k) {
    check(geom.input.ndim() == 3, "conv input must be channels x height x width, got shape " +
                                      shape_to_string(geom.input.shape()));
    check(geom.stride >= 1, "stride must be positive");
    const std::size_t h = geom.input.shape()[1];
    const std::size_t w = geom.input.shape()[2];
    if (geom.padding == Padding::Valid) {
        check(h >= k && w >= k, "conv input smaller than the kernel under valid padding");
        return {(h - k) / geom.stride + 1, (w - k) / geom.stride + 1};
    }
    return {(h - 1) / geom.stride + 1, (w - 1) / geom.stride + 1};
}

Tensor conv2d_forward(const ConvGeometry& geom, const Tensor& weight) {
    check(weight.ndim() == 4 && weight.shape()[2] == weight.shape()[3],
          "conv weight must have shape (d_in,d_out,k,k), got " +
              shape_to_string(weight.shape()));
    const std::size_t d_in = weight.shape()[0];
    const std::size_t d_out = weight.shape()[1];
    const std::size_t k = weight.shape()[2];
    check(geom.input.ndim() == 3 && geom.input.shape()[0] == d_in,
          "conv input channels do not match the weight's d_in");

    const auto [oh, ow] = conv2d_output_extents(geom, k);
    const std::size_t h = geom.input.shape()[1];
    const std::size_t w = geom.input.shape()[2];
    const std::ptrdiff_t pad = geom.padding == Padding::Valid
                                   ? 0
                                   : static_cast<std::ptrdiff_t>((k - 1) / 2);

    Tensor out({d_out, oh, ow});
    for (std::size_t o = 0; o < d_out; ++o)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (std::size_t c = 0; c < d_in; ++c)
                    for (std::size_t kr = 0; kr < k; ++kr)
                        for (std::size_t kc = 0; kc < k; ++kc) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(y * geom.stride + kr) - pad;
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(x * geom.stride + kc) - pad;
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                                ix >= static_cast<std::ptrdiff_t>(w))
                                continue;
                            acc += geom.input.at({c, static_cast<std::size_t>(iy),
                                                  static_cast<std::size_t>(ix)}) *
                                   weight.at({c, o, kr, kc});
                        }
                out.at({o, y, x}) = acc;
            }
    return out;
}

namespace {

void check_conv_layer(const ConvGeometry& geom, const FrozenLayer& layer) {
    check(layer.spec().kind == LayerKind::Conv, "conv2d_adapted needs a conv layer");
    check(geom.input.ndim() == 3 && geom.input.shape()[0] == layer.spec().d_in,
          "conv input channels do not match the layer's d_in");
}

}  // namespace

Tensor conv2d_adapted(const ConvGeometry& geom, const FrozenLayer& layer,
                      const TuckerAdapter& adapter, double scale) {
    check_conv_layer(geom, layer);
    check(adapter.layer_shape() == layer.weight().shape(),
          "tucker adapter shape does not match the conv layer");
    const Tensor base = conv2d_forward(geom, layer.weight());
    const Tensor delta_out = conv2d_forward(geom, reconstruct(adapter));
    return axpy(scale, delta_out, base);
}

Tensor conv2d_adapted(const ConvGeometry& geom, const FrozenLayer& layer,
                      const LoraAdapter& adapter, double scale) {
    check_conv_layer(geom, layer);
    const Tensor base = conv2d_forward(geom, layer.weight());
    const Tensor delta_out = conv2d_forward(geom, lora_delta(adapter, layer));
    return axpy(scale, delta_out, base);
}

Tensor conv2d_weight_grad(const ConvGeometry& geom, const Tensor& upstream, std::size_t d_in,
                          std::size_t k) {
    check(upstream.ndim() == 3, "upstream must be d_out x H' x W'");
    const std::size_t d_out = upstream.shape()[0];
    const std::size_t oh = upstream.shape()[1];
    const std::size_t ow = upstream.shape()[2];
    const auto expected = conv2d_output_extents(geom, k);
    check(expected.first == oh && expected.second == ow,
          "upstream spatial extents do not match the conv geometry");
    const std::size_t h = geom.input.shape()[1];
    const std::size_t w = geom.input.shape()[2];
    const std::ptrdiff_t pad = geom.padding == Padding::Valid
                                   ? 0
                                   : static_cast<std::ptrdiff_t>((k - 1) / 2);

    Tensor grad({d_in, d_out, k, k});
    for (std::size_t c = 0; c < d_in; ++c)
        for (std::size_t o = 0; o < d_out; ++o)
            for (std::size_t kr = 0; kr < k; ++kr)
                for (std::size_t kc = 0; kc < k; ++kc) {
                    double acc = 0.0;
                    for (std::size_t y = 0; y < oh; ++y)
                        for (std::size_t x = 0; x < ow; ++x) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(y * geom.stride + kr) - pad;
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(x * geom.stride + kc) - pad;
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                                ix >= static_cast<std::ptrdiff_t>(w))
                                continue;
                            acc += upstream.at({o, y, x}) *
                                   geom.input.at({c, static_cast<std::size_t>(iy),
                                                  static_cast<std::size_t>(ix)});
                        }
                    grad.at({c, o, kr, kc}) = acc;
                }
    return grad;
}

}  // namespace flora
