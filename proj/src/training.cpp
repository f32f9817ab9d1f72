#include "flora/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "flora/analysis.hpp"
#include "flora/rng.hpp"
#include "flora/text.hpp"

namespace flora {

namespace {

void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// tasks

LayerFitTask make_layer_fit_task(const FrozenLayer& layer, const Tensor& target_delta,
                                 Matrix inputs) {
    check(layer.spec().kind == LayerKind::Linear, "layer-fit task needs a linear layer");
    check(target_delta.shape() == layer.weight().shape(),
          "target delta shape does not match the layer");
    check(inputs.rows() == layer.spec().d2, "input rows must equal the layer's d2");
    const Matrix w_star =
        matrix_from_tensor(axpy(1.0, target_delta, layer.weight()));  // W0 + delta*
    Matrix targets = matmul(w_star, inputs);
    return LayerFitTask{std::move(inputs), std::move(targets)};
}

ConvFitTask make_conv_fit_task(const FrozenLayer& layer, const Tensor& target_delta,
                               ConvGeometry geom) {
    check(layer.spec().kind == LayerKind::Conv, "conv-fit task needs a conv layer");
    check(target_delta.shape() == layer.weight().shape(),
          "target delta shape does not match the layer");
    Tensor targets = conv2d_forward(geom, axpy(1.0, target_delta, layer.weight()));
    return ConvFitTask{std::move(geom), std::move(targets)};
}

namespace {

TaskEval eval_recovery(const RecoveryTask& task, const Tensor& delta, double scale) {
    check(delta.shape() == task.target.shape(), "delta shape does not match the target");
    TaskEval out;
    Tensor residual{delta.shape()};
    double loss = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double r = scale * delta[i] - task.target[i];
        residual[i] = scale * r;  // dL/d(delta) folds the scale
        loss += r * r;
    }
    out.loss = 0.5 * loss;
    out.upstream = std::move(residual);
    return out;
}

TaskEval eval_layer_fit(const LayerFitTask& task, const FrozenLayer& layer, const Tensor& delta,
                        double scale) {
    check(layer.spec().kind == LayerKind::Linear, "layer-fit task needs a linear layer");
    check(delta.shape() == layer.weight().shape(), "delta shape does not match the layer");
    const Matrix w = matrix_from_tensor(axpy(scale, delta, layer.weight()));
    Matrix residual = matmul(w, task.inputs);
    check(residual.rows() == task.targets.rows() && residual.cols() == task.targets.cols(),
          "layer-fit targets have inconsistent shape");
    double loss = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        residual.values()[i] -= task.targets.values()[i];
        loss += residual.values()[i] * residual.values()[i];
    }
    Matrix grad_w = matmul(residual, transpose(task.inputs));
    for (double& v : grad_w.values()) v *= scale;
    return TaskEval{0.5 * loss, tensor_from_matrix(grad_w)};
}

TaskEval eval_conv_fit(const ConvFitTask& task, const FrozenLayer& layer, const Tensor& delta,
                       double scale) {
    check(layer.spec().kind == LayerKind::Conv, "conv-fit task needs a conv layer");
    check(delta.shape() == layer.weight().shape(), "delta shape does not match the layer");
    const Tensor out = conv2d_forward(task.geom, axpy(scale, delta, layer.weight()));
    check(out.shape() == task.targets.shape(), "conv-fit targets have inconsistent shape");
    Tensor residual{out.shape()};
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        residual[i] = out[i] - task.targets[i];
        loss += residual[i] * residual[i];
    }
    Tensor grad_w =
        conv2d_weight_grad(task.geom, residual, layer.spec().d_in, layer.spec().k);
    for (double& v : grad_w.values()) v *= scale;
    return TaskEval{0.5 * loss, std::move(grad_w)};
}

}  // namespace

TaskEval evaluate_task(const Task& task, const FrozenLayer& layer, const Tensor& delta,
                       double scale) {
    if (const auto* rec = std::get_if<RecoveryTask>(&task)) return eval_recovery(*rec, delta, scale);
    if (const auto* fit = std::get_if<LayerFitTask>(&task))
        return eval_layer_fit(*fit, layer, delta, scale);
    return eval_conv_fit(std::get<ConvFitTask>(task), layer, delta, scale);
}

double task_loss(const Task& task, const FrozenLayer& layer, const Tensor& delta, double scale) {
    return evaluate_task(task, layer, delta, scale).loss;
}

// ---------------------------------------------------------------------------
// gradients

TuckerGrads grad_tucker(const TuckerAdapter& adapter, const Tensor& upstream) {
    check(upstream.shape() == adapter.layer_shape(),
          "upstream shape " + shape_to_string(upstream.shape()) +
              " does not match the adapter's layer shape");
    TuckerGrads grads;

    Tensor core_grad = upstream;
    for (std::size_t n = 0; n < adapter.ndim(); ++n)
        core_grad = mode_n_product(core_grad, transpose(adapter.factor(n)), n);
    grads.core = std::move(core_grad);

    grads.factors.reserve(adapter.ndim());
    for (std::size_t n = 0; n < adapter.ndim(); ++n) {
        Tensor partial = adapter.core();
        for (std::size_t m = 0; m < adapter.ndim(); ++m) {
            if (m == n) continue;
            partial = mode_n_product(partial, adapter.factor(m), m);
        }
        grads.factors.push_back(
            matmul(mode_n_unfold(upstream, n), transpose(mode_n_unfold(partial, n))));
    }
    return grads;
}

LoraGrads grad_lora(const LoraAdapter& adapter, const FrozenLayer& layer,
                    const Tensor& upstream) {
    check(upstream.shape() == layer.weight().shape(),
          "upstream shape does not match the layer weight");
    Matrix u;
    if (adapter.kind() == LoraKind::Linear) {
        check(layer.spec().kind == LayerKind::Linear, "adapter kind does not match the layer");
        u = matrix_from_tensor(upstream);
    } else {
        check(layer.spec().kind == LayerKind::Conv, "adapter kind does not match the layer");
        u = reshape_conv_to_matrix(upstream);
    }
    check(u.rows() == adapter.b().rows() && u.cols() == adapter.a().rows(),
          "lora factor shapes do not match the layer");
    return LoraGrads{matmul(transpose(u), adapter.b()), matmul(u, adapter.a())};
}

// ---------------------------------------------------------------------------
// optimizer

void Optimizer::step(const std::vector<std::span<double>>& params,
                     const std::vector<std::vector<double>>& grads) {
    check(params.size() == grads.size(), "parameter/gradient count mismatch");
    if (m_.empty() && cfg_.kind == OptimizerKind::Adam) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].size(), 0.0);
            v_[i].assign(params[i].size(), 0.0);
        }
    }
    if (cfg_.kind == OptimizerKind::Adam)
        check(m_.size() == params.size(), "optimizer was initialized with a different layout");

    ++step_;
    if (cfg_.kind == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            check(params[i].size() == grads[i].size(), "gradient length mismatch");
            for (std::size_t j = 0; j < params[i].size(); ++j)
                params[i][j] -= cfg_.lr * grads[i][j];
        }
        return;
    }

    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        check(params[i].size() == grads[i].size() && params[i].size() == m_[i].size(),
              "gradient length mismatch");
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            const double g = grads[i][j];
            m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
            v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m_[i][j] / bc1;
            const double v_hat = v_[i][j] / bc2;
            params[i][j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// training loop

namespace {

struct TuckerOps {
    static Tensor delta(const TuckerAdapter& a, const FrozenLayer&) { return reconstruct(a); }
    static double scale(const TuckerAdapter& a) { return a.scale(); }
    static std::size_t amp_rank(const TuckerAdapter& a) { return a.ranks()[0]; }

    static std::vector<std::span<double>> params(TuckerAdapter& a, bool core_only) {
        std::vector<std::span<double>> out{a.core().values()};
        if (!core_only)
            for (std::size_t n = 0; n < a.ndim(); ++n) out.push_back(a.factor(n).values());
        return out;
    }

    static std::vector<std::vector<double>> grads(const TuckerAdapter& a, const FrozenLayer&,
                                                  const Tensor& upstream, bool core_only) {
        TuckerGrads g = grad_tucker(a, upstream);
        std::vector<std::vector<double>> out;
        out.push_back(std::vector<double>(g.core.values().begin(), g.core.values().end()));
        if (!core_only)
            for (auto& f : g.factors)
                out.push_back(std::vector<double>(f.values().begin(), f.values().end()));
        return out;
    }
};

struct LoraOps {
    static Tensor delta(const LoraAdapter& a, const FrozenLayer& layer) {
        return lora_delta(a, layer);
    }
    static double scale(const LoraAdapter& a) { return a.scale(); }
    static std::size_t amp_rank(const LoraAdapter& a) { return a.rank(); }

    static std::vector<std::span<double>> params(LoraAdapter& a, bool) {
        return {a.a().values(), a.b().values()};
    }

    static std::vector<std::vector<double>> grads(const LoraAdapter& a, const FrozenLayer& layer,
                                                  const Tensor& upstream, bool) {
        LoraGrads g = grad_lora(a, layer, upstream);
        std::vector<std::vector<double>> out;
        out.push_back(std::vector<double>(g.a.values().begin(), g.a.values().end()));
        out.push_back(std::vector<double>(g.b.values().begin(), g.b.values().end()));
        return out;
    }
};

// Matrix view of an update for the amplification metric: conv weights go
// through the fixed flattening.
Matrix metric_matrix(const Tensor& t) {
    return t.ndim() == 2 ? matrix_from_tensor(t) : reshape_conv_to_matrix(t);
}

double record_amp_factor(const Tensor& scaled_delta, const FrozenLayer& layer, std::size_t r) {
    const Matrix delta_m = metric_matrix(scaled_delta);
    const Matrix frozen_m = metric_matrix(layer.weight());
    const std::size_t rank = std::min(r, std::min(delta_m.rows(), delta_m.cols()));
    const AmpReport report = amplification_factor(delta_m, frozen_m, rank);
    // record streams stay finite; the undefined/infinite corner maps to 0
    return std::isfinite(report.factor) ? report.factor : 0.0;
}

template <class Ops, class Adapter>
TrainResult run_training_impl(const Task& task, const FrozenLayer& layer, Adapter& adapter,
                              Optimizer& optimizer, const TrainOptions& options) {
    check(options.record_every >= 1, "record_every must be at least 1");
    const double s = Ops::scale(adapter);

    TrainResult result;
    Tensor delta = Ops::delta(adapter, layer);
    TaskEval eval = evaluate_task(task, layer, delta, s);

    const auto make_record = [&](std::size_t step) {
        Tensor scaled = delta;
        for (double& v : scaled.values()) v *= s;
        return TrainRecord{step, eval.loss, frobenius_norm(scaled),
                           record_amp_factor(scaled, layer, Ops::amp_rank(adapter))};
    };
    result.records.push_back(make_record(0));

    const double initial_loss = eval.loss;
    const double guard = 1e6 * (initial_loss > 0.0 ? initial_loss : 1.0);

    for (std::size_t step = 1; step <= options.steps; ++step) {
        const auto grads = Ops::grads(adapter, layer, eval.upstream, options.core_only);
        optimizer.step(Ops::params(adapter, options.core_only), grads);

        delta = Ops::delta(adapter, layer);
        eval = evaluate_task(task, layer, delta, s);

        if (!std::isfinite(eval.loss) || eval.loss > guard) {
            result.diverged = true;
            std::ostringstream msg;
            msg << "training diverged at step " << step << " (loss " << format_double(eval.loss)
                << ", initial " << format_double(initial_loss) << ")";
            result.message = msg.str();
            result.records.push_back(TrainRecord{step, eval.loss, 0.0, 0.0});
            return result;
        }
        if (step % options.record_every == 0 || step == options.steps)
            result.records.push_back(make_record(step));
    }
    return result;
}

}  // namespace

TrainResult run_training(const Task& task, const FrozenLayer& layer, TuckerAdapter& adapter,
                         Optimizer& optimizer, const TrainOptions& options) {
    return run_training_impl<TuckerOps>(task, layer, adapter, optimizer, options);
}

TrainResult run_training(const Task& task, const FrozenLayer& layer, LoraAdapter& adapter,
                         Optimizer& optimizer, const TrainOptions& options) {
    check(!options.core_only, "core_only applies to Tucker adapters");
    return run_training_impl<LoraOps>(task, layer, adapter, optimizer, options);
}

// ---------------------------------------------------------------------------
// finite differences

FiniteDiffReport finite_diff_check(const std::function<double()>& loss,
                                   const std::vector<NamedParam>& params,
                                   const std::vector<std::vector<double>>& analytic, double h) {
    check(h > 0.0, "finite-difference step must be positive");
    check(params.size() == analytic.size(), "parameter/gradient count mismatch");

    FiniteDiffReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        check(params[p].values.size() == analytic[p].size(),
              "gradient length mismatch for " + params[p].name);
        for (std::size_t i = 0; i < params[p].values.size(); ++i) {
            double& x = params[p].values[i];
            const double saved = x;
            x = saved + h;
            const double plus = loss();
            x = saved - h;
            const double minus = loss();
            x = saved;

            const double numeric = (plus - minus) / (2.0 * h);
            const double a = analytic[p][i];
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            const double rel = std::abs(numeric - a) / denom;
            ++report.checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst = FiniteDiffWorst{params[p].name, i, a, numeric, rel};
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// gradient-check grid

namespace {

Tensor gaussian_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    Tensor t{std::move(shape)};
    Rng rng(seed);
    for (double& v : t.values()) v = rng.gaussian();
    return t;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    Rng rng(seed);
    for (double& v : m.values()) v = rng.gaussian();
    return m;
}

struct GridContext {
    FrozenLayer layer;
    Task recovery;
    Task fit;
};

GridContext make_linear_context(std::uint64_t seed) {
    const LayerSpec spec = LayerSpec::linear(5, 6);
    FrozenLayer layer(gaussian_tensor(spec.weight_shape(), mix_seed(seed, 1)), spec);
    Tensor target = gaussian_tensor(spec.weight_shape(), mix_seed(seed, 2));
    Task fit = make_layer_fit_task(layer, target, gaussian_matrix(6, 4, mix_seed(seed, 3)));
    return GridContext{std::move(layer), RecoveryTask{std::move(target)}, std::move(fit)};
}

GridContext make_conv_context(std::uint64_t seed) {
    const LayerSpec spec = LayerSpec::conv(4, 3, 3);
    FrozenLayer layer(gaussian_tensor(spec.weight_shape(), mix_seed(seed, 4)), spec);
    Tensor target = gaussian_tensor(spec.weight_shape(), mix_seed(seed, 5));
    ConvGeometry geom{gaussian_tensor({4, 5, 5}, mix_seed(seed, 6)), 1, Padding::Valid};
    Task fit = make_conv_fit_task(layer, target, std::move(geom));
    return GridContext{std::move(layer), RecoveryTask{std::move(target)}, std::move(fit)};
}

TuckerAdapter make_grid_tucker(const LayerSpec& spec, std::uint64_t seed) {
    std::vector<std::size_t> ranks =
        spec.kind == LayerKind::Linear ? std::vector<std::size_t>{2, 3}
                                       : std::vector<std::size_t>{2, 2, 2, 2};
    TuckerAdapter adapter = init_tucker(spec.weight_shape(), ranks, 0.7, mix_seed(seed, 7));
    Rng rng(mix_seed(seed, 8));
    for (double& v : adapter.core().values()) v = rng.gaussian();
    return adapter;
}

LoraAdapter make_grid_lora(const LayerSpec& spec, std::uint64_t seed) {
    LoraAdapter adapter = init_lora(spec, spec.kind == LayerKind::Linear ? 3 : 2, 0.7,
                                    mix_seed(seed, 9));
    Rng rng(mix_seed(seed, 10));
    for (double& v : adapter.b().values()) v = rng.gaussian();
    return adapter;
}

GradCheckCase check_tucker_case(const std::string& name, const GridContext& ctx,
                                const Task& task, double h, double tol, std::uint64_t seed) {
    TuckerAdapter adapter = make_grid_tucker(ctx.layer.spec(), seed);
    const auto loss = [&]() {
        return task_loss(task, ctx.layer, reconstruct(adapter), adapter.scale());
    };
    const TaskEval eval =
        evaluate_task(task, ctx.layer, reconstruct(adapter), adapter.scale());
    const TuckerGrads grads = grad_tucker(adapter, eval.upstream);

    std::vector<NamedParam> params{{"core", adapter.core().values()}};
    std::vector<std::vector<double>> analytic{
        std::vector<double>(grads.core.values().begin(), grads.core.values().end())};
    for (std::size_t n = 0; n < adapter.ndim(); ++n) {
        params.push_back({"factor_" + std::to_string(n + 1), adapter.factor(n).values()});
        analytic.push_back(std::vector<double>(grads.factors[n].values().begin(),
                                               grads.factors[n].values().end()));
    }
    const FiniteDiffReport report = finite_diff_check(loss, params, analytic, h);
    return GradCheckCase{name, report, tol, report.max_rel_err <= tol};
}

GradCheckCase check_lora_case(const std::string& name, const GridContext& ctx, const Task& task,
                              double h, double tol, std::uint64_t seed) {
    LoraAdapter adapter = make_grid_lora(ctx.layer.spec(), seed);
    const auto loss = [&]() {
        return task_loss(task, ctx.layer, lora_delta(adapter, ctx.layer), adapter.scale());
    };
    const TaskEval eval =
        evaluate_task(task, ctx.layer, lora_delta(adapter, ctx.layer), adapter.scale());
    const LoraGrads grads = grad_lora(adapter, ctx.layer, eval.upstream);

    std::vector<NamedParam> params{{"lora_a", adapter.a().values()},
                                   {"lora_b", adapter.b().values()}};
    std::vector<std::vector<double>> analytic{
        std::vector<double>(grads.a.values().begin(), grads.a.values().end()),
        std::vector<double>(grads.b.values().begin(), grads.b.values().end())};
    const FiniteDiffReport report = finite_diff_check(loss, params, analytic, h);
    return GradCheckCase{name, report, tol, report.max_rel_err <= tol};
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_grid(double h, double tolerance,
                                              const std::string& only) {
    constexpr std::uint64_t kSeed = 20240531;
    const GridContext linear = make_linear_context(kSeed);
    const GridContext conv = make_conv_context(kSeed + 1);

    std::vector<GradCheckCase> cases;
    const auto want = [&](const std::string& name) {
        return only.empty() || name.find(only) != std::string::npos;
    };

    if (want("tucker-linear-recovery"))
        cases.push_back(
            check_tucker_case("tucker-linear-recovery", linear, linear.recovery, h, tolerance, 11));
    if (want("tucker-linear-layerfit"))
        cases.push_back(
            check_tucker_case("tucker-linear-layerfit", linear, linear.fit, h, tolerance, 12));
    if (want("tucker-conv-recovery"))
        cases.push_back(
            check_tucker_case("tucker-conv-recovery", conv, conv.recovery, h, tolerance, 13));
    if (want("tucker-conv-layerfit"))
        cases.push_back(
            check_tucker_case("tucker-conv-layerfit", conv, conv.fit, h, tolerance, 14));
    if (want("lora-linear-recovery"))
        cases.push_back(
            check_lora_case("lora-linear-recovery", linear, linear.recovery, h, tolerance, 15));
    if (want("lora-linear-layerfit"))
        cases.push_back(
            check_lora_case("lora-linear-layerfit", linear, linear.fit, h, tolerance, 16));
    if (want("lora-conv-recovery"))
        cases.push_back(
            check_lora_case("lora-conv-recovery", conv, conv.recovery, h, tolerance, 17));
    if (want("lora-conv-layerfit"))
        cases.push_back(check_lora_case("lora-conv-layerfit", conv, conv.fit, h, tolerance, 18));
    return cases;
}

// ---------------------------------------------------------------------------
// record serialization

std::string records_to_csv(std::span<const TrainRecord> records) {
    std::string out = "step,loss,delta_frob,amp_factor\n";
    for (const auto& rec : records) {
        out += std::to_string(rec.step);
        out += ',';
        out += format_double(rec.loss);
        out += ',';
        out += format_double(rec.delta_frob);
        out += ',';
        out += format_double(rec.amp_factor);
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

std::vector<TrainRecord> records_from_csv(std::string_view text) {
    std::vector<TrainRecord> records;
    const auto lines = split(text, '\n');
    if (lines.empty() || lines[0] != "step,loss,delta_frob,amp_factor")
        throw std::runtime_error("record CSV is missing the expected header");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split(lines[i], ',');
        if (fields.size() != 4)
            throw std::runtime_error("record CSV line " + std::to_string(i + 1) +
                                     " has " + std::to_string(fields.size()) + " fields");
        TrainRecord rec;
        rec.step = parse_size(fields[0], "step");
        rec.loss = parse_double(fields[1], "loss");
        rec.delta_frob = parse_double(fields[2], "delta_frob");
        rec.amp_factor = parse_double(fields[3], "amp_factor");
        records.push_back(rec);
    }
    return records;
}

namespace {

// JSON has no literal for non-finite doubles (they only appear in divergence
// diagnostics); those are quoted so the text still round-trips exactly.
std::string jsonl_number(double v) {
    return std::isfinite(v) ? format_double(v) : "\"" + format_double(v) + "\"";
}

double jsonl_double(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_string()) return parse_double(v.get<std::string>(), key);
    return v.get<double>();
}

}  // namespace

std::string records_to_jsonl(std::span<const TrainRecord> records) {
    std::string out;
    for (const auto& rec : records) {
        out += "{\"step\":" + std::to_string(rec.step);
        out += ",\"loss\":" + jsonl_number(rec.loss);
        out += ",\"delta_frob\":" + jsonl_number(rec.delta_frob);
        out += ",\"amp_factor\":" + jsonl_number(rec.amp_factor);
        out += "}\n";
    }
    return out;
}

std::vector<TrainRecord> records_from_jsonl(std::string_view text) {
    std::vector<TrainRecord> records;
    for (const auto line : split(text, '\n')) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(std::string("bad JSON-lines record: ") + e.what());
        }
        TrainRecord rec;
        rec.step = j.at("step").get<std::size_t>();
        rec.loss = jsonl_double(j, "loss");
        rec.delta_frob = jsonl_double(j, "delta_frob");
        rec.amp_factor = jsonl_double(j, "amp_factor");
        records.push_back(rec);
    }
    return records;
}

}  // namespace flora
