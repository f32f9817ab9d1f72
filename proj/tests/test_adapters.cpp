#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "flora/adapters.hpp"
#include "flora/rng.hpp"
#include "oracles.hpp"

using namespace flora;

namespace {

TuckerAdapter random_adapter(const std::vector<std::size_t>& shape,
                             const std::vector<std::size_t>& ranks, double scale,
                             std::uint64_t seed) {
    TuckerAdapter adapter = init_tucker(shape, ranks, scale, seed);
    Rng rng(mix_seed(seed, 77));
    for (double& v : adapter.core().values()) v = rng.gaussian();
    return adapter;
}

}  // namespace

TEST_CASE("init_tucker: zero core means zero update") {
    const TuckerAdapter a = init_tucker({6, 4, 3, 3}, {2, 2, 1, 1}, 4.0, 11);
    CHECK(frobenius_norm(reconstruct(a)) == 0.0);
    const TuckerAdapter b = init_tucker({5, 7}, {3, 2}, 0.4, 12);
    CHECK(frobenius_norm(reconstruct(b)) == 0.0);
}

TEST_CASE("init_tucker is bit-deterministic in the seed") {
    const TuckerAdapter a = init_tucker({5, 7}, {3, 2}, 0.4, 99);
    const TuckerAdapter b = init_tucker({5, 7}, {3, 2}, 0.4, 99);
    for (std::size_t n = 0; n < a.ndim(); ++n) {
        CHECK(oracle::max_abs_diff(a.factor(n), b.factor(n)) == 0.0);
    }
    const TuckerAdapter c = init_tucker({5, 7}, {3, 2}, 0.4, 100);
    CHECK(oracle::max_abs_diff(a.factor(0), c.factor(0)) > 0.0);
}

TEST_CASE("init_tucker rejects ranks above the layer extents") {
    const std::vector<std::size_t> shape{4, 4};
    CHECK_THROWS_AS(init_tucker(shape, std::vector<std::size_t>{5, 2}, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_tucker(shape, std::vector<std::size_t>{2}, 1.0, 1), std::invalid_argument);
    CHECK_NOTHROW(init_tucker(shape, std::vector<std::size_t>{4, 4}, 1.0, 1));
}

TEST_CASE("reconstruct: rank-1 linear adapter is the outer product") {
    const Tensor core({1, 1}, {2});
    const Matrix a(2, 1, {1, 3});
    const Matrix b(2, 1, {2, 1});
    const TuckerAdapter adapter(core, {a, b}, 1.0);
    const Tensor delta = reconstruct(adapter);
    CHECK(delta.at({0, 0}) == 4.0);
    CHECK(delta.at({0, 1}) == 2.0);
    CHECK(delta.at({1, 0}) == 12.0);
    CHECK(delta.at({1, 1}) == 6.0);
}

TEST_CASE("reconstruct with identity factors returns the core") {
    Tensor core = oracle::gaussian_tensor({3, 2, 4}, 21);
    const TuckerAdapter adapter(core,
                                {Matrix::identity(3), Matrix::identity(2), Matrix::identity(4)},
                                1.0);
    CHECK(oracle::max_abs_diff(reconstruct(adapter), core) == 0.0);
}

TEST_CASE("reconstruct matches the brute-force Tucker sum on a conv adapter") {
    const TuckerAdapter adapter = random_adapter({3, 3, 3, 3}, {2, 2, 1, 1}, 1.0, 31);
    const Tensor expected = oracle::tucker_reconstruct(adapter.core(), adapter.factors());
    CHECK(oracle::max_abs_diff(reconstruct(adapter), expected) < 1e-12);
}

TEST_CASE("brute-force Tucker equivalence over random small adapters") {
    flora::Rng dims(515);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t ndim = 1 + dims.below(4);
        std::vector<std::size_t> shape(ndim), ranks(ndim);
        for (std::size_t n = 0; n < ndim; ++n) {
            shape[n] = 1 + dims.below(4);
            ranks[n] = 1 + dims.below(shape[n]);
        }
        const TuckerAdapter adapter =
            random_adapter(shape, ranks, 1.0, 600 + static_cast<std::uint64_t>(trial));
        const Tensor expected = oracle::tucker_reconstruct(adapter.core(), adapter.factors());
        CHECK(oracle::max_abs_diff(reconstruct(adapter), expected) < 1e-12);
    }
}

TEST_CASE("mode-order independence of the reconstruction") {
    const TuckerAdapter adapter = random_adapter({4, 3, 3, 3}, {2, 2, 2, 2}, 1.0, 41);
    const Tensor reference = reconstruct(adapter);

    std::vector<std::size_t> order(4);
    std::iota(order.begin(), order.end(), 0);
    int tried = 0;
    do {
        Tensor t = adapter.core();
        for (std::size_t mode : order) t = mode_n_product(t, adapter.factor(mode), mode);
        CHECK(oracle::max_abs_diff(t, reference) < 1e-12);
    } while (std::next_permutation(order.begin(), order.end()) && ++tried < 8);
}

TEST_CASE("scale linearity of the core") {
    const TuckerAdapter adapter = random_adapter({5, 4}, {2, 3}, 1.0, 51);
    const Tensor base = reconstruct(adapter);

    SUBCASE("power-of-two factor is bit-exact") {
        TuckerAdapter doubled = adapter;
        for (double& v : doubled.core().values()) v *= 2.0;
        const Tensor scaled = reconstruct(doubled);
        for (std::size_t i = 0; i < base.size(); ++i) CHECK(scaled[i] == 2.0 * base[i]);
    }
    SUBCASE("general factor within 1e-12, and merge equivalence") {
        const double c = 0.37;
        TuckerAdapter scaled_core = adapter;
        for (double& v : scaled_core.core().values()) v *= c;
        const Tensor scaled = reconstruct(scaled_core);
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(scaled[i] == doctest::Approx(c * base[i]).epsilon(1e-12));

        const FrozenLayer layer(oracle::gaussian_tensor({5, 4}, 52), LayerSpec::linear(5, 4));
        const Tensor via_scale = merge(layer, base, c);
        const Tensor via_core = merge(layer, scaled, 1.0);
        CHECK(oracle::max_abs_diff(via_scale, via_core) < 1e-12);
    }
}

TEST_CASE("lora_delta for linear layers") {
    const LayerSpec spec = LayerSpec::linear(2, 2);
    const FrozenLayer layer(Tensor({2, 2}), spec);

    SUBCASE("zero factors give a zero update") {
        const LoraAdapter adapter(Matrix(2, 1), Matrix(2, 1), LoraKind::Linear, 1.0);
        CHECK(frobenius_norm(lora_delta(adapter, layer)) == 0.0);
    }
    SUBCASE("rank-1 outer product") {
        const LoraAdapter adapter(Matrix(2, 1, {0, 1}), Matrix(2, 1, {1, 0}), LoraKind::Linear,
                                  1.0);
        const Tensor delta = lora_delta(adapter, layer);
        CHECK(delta.at({0, 0}) == 0.0);
        CHECK(delta.at({0, 1}) == 1.0);
        CHECK(delta.at({1, 0}) == 0.0);
        CHECK(delta.at({1, 1}) == 0.0);
    }
    SUBCASE("shape mismatches are rejected") {
        const LoraAdapter adapter(Matrix(3, 1), Matrix(2, 1), LoraKind::Linear, 1.0);
        CHECK_THROWS_AS(lora_delta(adapter, layer), std::invalid_argument);
    }
}

TEST_CASE("lora_delta conv reshape matches the explicit index-map oracle") {
    const std::size_t d_in = 2, d_out = 2, k = 3;
    const FrozenLayer layer(Tensor({d_in, d_out, k, k}), LayerSpec::conv(d_in, d_out, k));
    const Matrix a = oracle::gaussian_matrix(k * d_out, 1, 61);
    const Matrix b = oracle::gaussian_matrix(k * d_in, 1, 62);
    const LoraAdapter adapter(a, b, LoraKind::ConvReshape, 1.0);
    const Tensor expected = oracle::conv_delta_from_lora(a, b, d_in, d_out, k);
    CHECK(oracle::max_abs_diff(lora_delta(adapter, layer), expected) < 1e-15);
}

TEST_CASE("conv reshape round-trips") {
    const Tensor w = oracle::gaussian_tensor({3, 2, 3, 3}, 63);
    const Matrix m = reshape_conv_to_matrix(w);
    CHECK(m.rows() == 9);
    CHECK(m.cols() == 6);
    const Tensor back = reshape_matrix_to_conv(m, 3, 2, 3);
    CHECK(oracle::max_abs_diff(back, w) == 0.0);
}

TEST_CASE("merge") {
    const FrozenLayer layer(oracle::gaussian_tensor({4, 5}, 71), LayerSpec::linear(4, 5));
    const Tensor delta = oracle::gaussian_tensor({4, 5}, 72);

    CHECK(oracle::max_abs_diff(merge(layer, Tensor({4, 5}), 2.0), layer.weight()) == 0.0);
    CHECK(oracle::max_abs_diff(merge(layer, delta, 0.0), layer.weight()) == 0.0);

    const Tensor merged = merge(layer, delta, 1.7);
    for (std::size_t i = 0; i < merged.size(); ++i)
        CHECK(merged[i] == 1.7 * delta[i] + layer.weight()[i]);

    CHECK_THROWS_AS(merge(layer, Tensor({5, 4}), 1.0), std::invalid_argument);
}

TEST_CASE("param_count formulas match the worked examples") {
    const LayerSpec conv = LayerSpec::conv(64, 64, 3);
    CHECK(flora_param_count(conv, 4, 4, 2) == 588);
    CHECK(lora_param_count(conv, 4) == 1536);

    const LayerSpec linear = LayerSpec::linear(128, 128);
    CHECK(flora_param_count(linear, 8, 8, 0) == 2112);
    CHECK(lora_param_count(linear, 8) == 2048);
}

TEST_CASE("param_count equals the allocated parameter arrays on the full grid") {
    for (std::size_t d : {2, 8, 64}) {
        for (std::size_t r : {1, 2, 4, 8}) {
            for (std::size_t k : {1, 3}) {
                for (std::size_t r3 : {1, 2}) {
                    const LayerSpec conv = LayerSpec::conv(d, d, k);
                    const bool constructible = r <= d && r3 <= k;
                    if (constructible) {
                        const TuckerAdapter adapter = init_tucker(
                            conv.weight_shape(), {r, r, r3, r3}, 4.0, 7);
                        CHECK(adapter.parameter_count() == flora_param_count(conv, r, r, r3));
                        const LoraAdapter lora = init_lora(conv, r, 1.0, 7);
                        CHECK(lora.parameter_count() == lora_param_count(conv, r));
                    } else {
                        CHECK_THROWS_AS(
                            init_tucker(conv.weight_shape(), {r, r, r3, r3}, 4.0, 7),
                            std::invalid_argument);
                    }
                }
            }
            const LayerSpec linear = LayerSpec::linear(d, d);
            if (r <= d) {
                const TuckerAdapter adapter =
                    init_tucker(linear.weight_shape(), {r, r}, 0.4, 7);
                CHECK(adapter.parameter_count() == flora_param_count(linear, r, r, 0));
                const LoraAdapter lora = init_lora(linear, r, 1.0, 7);
                CHECK(lora.parameter_count() == lora_param_count(linear, r));
            } else {
                CHECK_THROWS_AS(init_tucker(linear.weight_shape(), {r, r}, 0.4, 7),
                                std::invalid_argument);
            }
        }
    }
}

TEST_CASE("budget crossover: flora conv beats lora conv at d >= 64, k = 3") {
    for (std::size_t r : {1, 2, 4, 8})
        for (std::size_t r3 : {1, 2}) {
            const LayerSpec conv = LayerSpec::conv(64, 64, 3);
            CHECK(flora_param_count(conv, r, r, r3) < lora_param_count(conv, r));
        }
}

TEST_CASE("init_lora: gaussian a, zero b, zero initial update") {
    const LayerSpec spec = LayerSpec::conv(4, 3, 3);
    const LoraAdapter adapter = init_lora(spec, 2, 1.0, 81);
    CHECK(adapter.a().rows() == 9);   // k * d_out
    CHECK(adapter.b().rows() == 12);  // k * d_in
    CHECK(frobenius_norm(adapter.b()) == 0.0);
    CHECK(frobenius_norm(adapter.a()) > 0.0);
    const FrozenLayer layer(Tensor(spec.weight_shape()), spec);
    CHECK(frobenius_norm(lora_delta(adapter, layer)) == 0.0);
}

TEST_CASE("random_tucker_tensor has the requested Tucker ranks") {
    const Tensor t = random_tucker_tensor({6, 6}, {2, 2}, 91);
    // a rank-2 matrix: the third singular value of its unfolding vanishes
    const Matrix m = mode_n_unfold(t, 0);
    const Matrix gram = matmul(transpose(m), m);
    const auto eig = oracle::symmetric_eigenvalues(gram);
    std::vector<double> sorted(eig.begin(), eig.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    CHECK(sorted[1] > 1e-6);
    CHECK(sorted[2] < 1e-18 * sorted[0]);
}
