#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flora/adapters.hpp"
#include "flora/layers.hpp"
#include "flora/tensor.hpp"

namespace flora {

// ---------------------------------------------------------------------------
// tasks

/// Drive the scaled update toward a fixed target change:
/// loss = 1/2 |s*delta - target|_F^2.
struct RecoveryTask {
    Tensor target;
};

/// Fit the adapted linear layer's outputs on a fixed batch:
/// loss = 1/2 |(W0 + s*delta) X - Y|_F^2 with X columns as samples.
struct LayerFitTask {
    Matrix inputs;   // d2 x batch
    Matrix targets;  // d1 x batch
};

/// Conv counterpart of LayerFitTask on a single input sample.
struct ConvFitTask {
    ConvGeometry geom;
    Tensor targets;  // d_out x H' x W'
};

using Task = std::variant<RecoveryTask, LayerFitTask, ConvFitTask>;

LayerFitTask make_layer_fit_task(const FrozenLayer& layer, const Tensor& target_delta,
                                 Matrix inputs);
ConvFitTask make_conv_fit_task(const FrozenLayer& layer, const Tensor& target_delta,
                               ConvGeometry geom);

/// Loss plus dL/d(delta) with the scale already folded in, so adapter
/// gradient code never sees s.
struct TaskEval {
    double loss = 0.0;
    Tensor upstream;
};

TaskEval evaluate_task(const Task& task, const FrozenLayer& layer, const Tensor& delta,
                       double scale);
double task_loss(const Task& task, const FrozenLayer& layer, const Tensor& delta, double scale);

// ---------------------------------------------------------------------------
// analytic gradients

struct TuckerGrads {
    Tensor core;
    std::vector<Matrix> factors;
};

/// Chain rule through the chained mode products:
///   dL/dG    = upstream x_1 A(1)^T ... x_N A(N)^T
///   dL/dA(n) = unfold(upstream, n) * unfold(G x_{m!=n} A(m), n)^T
TuckerGrads grad_tucker(const TuckerAdapter& adapter, const Tensor& upstream);

struct LoraGrads {
    Matrix a;
    Matrix b;
};

/// For linear: dB = U A, dA = U^T B. The conv case first maps the upstream
/// back through the fixed flattening.
LoraGrads grad_lora(const LoraAdapter& adapter, const FrozenLayer& layer,
                    const Tensor& upstream);

// ---------------------------------------------------------------------------
// optimizers

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    /// Applies one update. Moment buffers are created on first use and must
    /// keep the same parameter layout afterwards.
    void step(const std::vector<std::span<double>>& params,
              const std::vector<std::vector<double>>& grads);

    const OptimizerConfig& config() const { return cfg_; }
    std::size_t step_count() const { return step_; }

private:
    OptimizerConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t step_ = 0;
};

// ---------------------------------------------------------------------------
// training loop

struct TrainRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double delta_frob = 0.0;  // |s * delta|_F, the update actually applied
    double amp_factor = 0.0;  // 0 whenever undefined (zero update or zero projection)
};

struct TrainOptions {
    std::size_t steps = 0;
    std::size_t record_every = 1;
    bool core_only = false;  // Tucker only: freeze the factor matrices
};

struct TrainResult {
    std::vector<TrainRecord> records;
    bool diverged = false;
    std::string message;
};

/// Full-batch deterministic loop. Records at step 0, every record_every
/// steps, and at the final step. Aborts (diverged = true, diagnostic record
/// appended) on non-finite loss or loss above 1e6 x the initial loss.
TrainResult run_training(const Task& task, const FrozenLayer& layer, TuckerAdapter& adapter,
                         Optimizer& optimizer, const TrainOptions& options);
TrainResult run_training(const Task& task, const FrozenLayer& layer, LoraAdapter& adapter,
                         Optimizer& optimizer, const TrainOptions& options);

// ---------------------------------------------------------------------------
// finite differences

struct NamedParam {
    std::string name;
    std::span<double> values;
};

struct FiniteDiffWorst {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct FiniteDiffReport {
    double max_rel_err = 0.0;
    FiniteDiffWorst worst;
    std::size_t checked = 0;
};

/// Central differences (f(x+h) - f(x-h)) / 2h against the supplied analytic
/// gradient, entry by entry. Errors are measured relative to
/// max(1, |analytic|, |numeric|). Accurate for h in roughly [1e-7, 1e-3];
/// coarser steps simply report larger errors.
FiniteDiffReport finite_diff_check(const std::function<double()>& loss,
                                   const std::vector<NamedParam>& params,
                                   const std::vector<std::vector<double>>& analytic, double h);

/// One gradient-check configuration: adapter kind x layer kind x task kind
/// on small fixed shapes.
struct GradCheckCase {
    std::string name;
    FiniteDiffReport report;
    double tolerance = 0.0;
    bool passed = false;
};

/// Runs the fixed configuration grid (Tucker/LoRA x linear/conv x
/// recovery/layer-fit). `only` filters case names by substring; empty runs
/// everything.
std::vector<GradCheckCase> run_gradcheck_grid(double h, double tolerance,
                                              const std::string& only = "");

// ---------------------------------------------------------------------------
// record serialization

/// CSV with header step,loss,delta_frob,amp_factor; doubles use the
/// shortest round-trip form so rewriting parsed records is byte-identical.
std::string records_to_csv(std::span<const TrainRecord> records);
std::vector<TrainRecord> records_from_csv(std::string_view text);

std::string records_to_jsonl(std::span<const TrainRecord> records);
std::vector<TrainRecord> records_from_jsonl(std::string_view text);

}  // namespace flora
