#pragma once

#include <vector>

#include "flora/adapters.hpp"
#include "flora/tensor.hpp"

namespace flora {

enum class Padding { Valid, SameZero };

/// Single-sample convolution geometry; input is channels x height x width.
struct ConvGeometry {
    Tensor input;
    std::size_t stride = 1;
    Padding padding = Padding::Valid;
};

/// W0 x, optionally plus the adapter's update applied in factored order
/// (the full delta matrix is never materialized). The adapter's own scale is
/// used.
std::vector<double> linear_forward(std::span<const double> x, const FrozenLayer& layer);
std::vector<double> linear_forward(std::span<const double> x, const FrozenLayer& layer,
                                   const TuckerAdapter& adapter);
std::vector<double> linear_forward(std::span<const double> x, const FrozenLayer& layer,
                                   const LoraAdapter& adapter);

/// Spatial extents of the convolution output for the given geometry.
std::pair<std::size_t, std::size_t> conv2d_output_extents(const ConvGeometry& geom,
                                                          std::size_t k);

/// Direct 2-D cross-correlation with weight (d_in, d_out, k, k); output is
/// d_out x H' x W'. Fixed loop nest, so results are bit-reproducible.
Tensor conv2d_forward(const ConvGeometry& geom, const Tensor& weight);

/// conv(x, W0) + scale * conv(x, delta(adapter)).
Tensor conv2d_adapted(const ConvGeometry& geom, const FrozenLayer& layer,
                      const TuckerAdapter& adapter, double scale);
Tensor conv2d_adapted(const ConvGeometry& geom, const FrozenLayer& layer,
                      const LoraAdapter& adapter, double scale);

/// Gradient of sum(upstream . conv2d_forward(geom, W)) with respect to W.
Tensor conv2d_weight_grad(const ConvGeometry& geom, const Tensor& upstream, std::size_t d_in,
                          std::size_t k);

}  // namespace flora
