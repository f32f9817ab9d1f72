#include "flora/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "flora/rng.hpp"
#include "flora/text.hpp"

namespace flora {

namespace {

void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// independent seed streams for one experiment seed
constexpr std::uint64_t kTargetStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kFrozenStream = 3;

Tensor gaussian_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    Tensor t{std::move(shape)};
    Rng rng(seed);
    for (double& v : t.values()) v = rng.gaussian();
    return t;
}

}  // namespace

double default_scale(LayerKind kind) { return kind == LayerKind::Linear ? 0.4 : 4.0; }

double recovery_error(const Tensor& delta, double scale, const Tensor& target) {
    check(delta.shape() == target.shape(), "delta and target shapes differ");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double r = scale * delta[i] - target[i];
        num += r * r;
        den += target[i] * target[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

RecoveryOutcome run_recovery(const RecoveryConfig& config) {
    check(config.r >= 1, "adapter rank must be at least 1");
    const LayerSpec& spec = config.layer;
    const double scale = config.scale.value_or(default_scale(spec.kind));
    check(std::isfinite(scale) && scale != 0.0, "scale must be finite and nonzero");

    Tensor target = [&] {
        if (config.target) {
            check(config.target->shape() == spec.weight_shape(),
                  "target shape " + shape_to_string(config.target->shape()) +
                      " does not match the layer " + shape_to_string(spec.weight_shape()));
            return *config.target;
        }
        check(!config.target_ranks.empty(),
              "either an explicit target or target ranks are required");
        return random_tucker_tensor(spec.weight_shape(), config.target_ranks,
                                    mix_seed(config.seed, kTargetStream));
    }();

    Tensor frozen = [&] {
        if (config.frozen) {
            check(config.frozen->shape() == spec.weight_shape(),
                  "frozen weight shape does not match the layer");
            return *config.frozen;
        }
        return gaussian_tensor(spec.weight_shape(), mix_seed(config.seed, kFrozenStream));
    }();
    FrozenLayer layer(std::move(frozen), spec);

    const Task task = RecoveryTask{target};
    Optimizer optimizer(config.optimizer);
    TrainOptions options;
    options.steps = config.steps;
    options.record_every = config.record_every;
    options.core_only = config.core_only;

    if (config.method == Method::Flora) {
        const std::size_t r2 = config.r2 ? config.r2 : config.r;
        std::vector<std::size_t> ranks;
        if (spec.kind == LayerKind::Linear)
            ranks = {config.r, r2};
        else
            ranks = {config.r, r2, config.r3, config.r3};
        TuckerAdapter adapter =
            init_tucker(spec.weight_shape(), ranks, scale, mix_seed(config.seed, kInitStream));
        const std::size_t params = adapter.parameter_count();
        TrainResult result = run_training(task, layer, adapter, optimizer, options);
        const double error = recovery_error(reconstruct(adapter), scale, target);
        return RecoveryOutcome{std::move(result), std::move(adapter), std::move(target), scale,
                               error, params};
    }
    check(!config.core_only, "core_only applies to the flora method");
    LoraAdapter adapter = init_lora(spec, config.r, scale, mix_seed(config.seed, kInitStream));
    const std::size_t params = adapter.parameter_count();
    TrainResult result = run_training(task, layer, adapter, optimizer, options);
    const double error = recovery_error(lora_delta(adapter, layer), scale, target);
    return RecoveryOutcome{std::move(result), std::move(adapter), std::move(target), scale,
                           error, params};
}

namespace {

SweepRow run_one_setting(const RecoveryConfig& base, SweepMode mode, double value,
                         LrPolicy lr_policy) {
    SweepRow row;
    row.setting = value;
    RecoveryConfig cfg = base;
    if (mode == SweepMode::Rank) {
        const double rounded = std::round(value);
        if (!(rounded >= 1.0) || rounded != value) {
            row.status = "error: rank settings must be positive integers";
            return row;
        }
        cfg.r = static_cast<std::size_t>(rounded);
        cfg.r2 = 0;
    } else {
        if (!(value != 0.0) || !std::isfinite(value)) {
            row.status = "error: scale settings must be finite and nonzero";
            return row;
        }
        cfg.scale = value;
        if (lr_policy == LrPolicy::InvScale)
            cfg.optimizer.lr = base.optimizer.lr / std::abs(value);
        else if (lr_policy == LrPolicy::InvScaleSq)
            cfg.optimizer.lr = base.optimizer.lr / (value * value);
    }

    try {
        const RecoveryOutcome outcome = run_recovery(cfg);
        row.params = outcome.parameter_count;
        row.final_error = outcome.final_rel_error;
        const TrainRecord& last = outcome.result.records.back();
        row.final_delta_frob = last.delta_frob;
        row.final_amp_factor = last.amp_factor;
        row.status = outcome.result.diverged ? "diverged" : "ok";
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const RecoveryConfig& base, SweepMode mode,
                                const std::vector<double>& values, LrPolicy lr_policy,
                                bool parallel) {
    check(!values.empty(), "sweep needs at least one setting");
    std::vector<SweepRow> rows(values.size());
    if (!parallel || values.size() == 1) {
        for (std::size_t i = 0; i < values.size(); ++i)
            rows[i] = run_one_setting(base, mode, values[i], lr_policy);
        return rows;
    }

    // settings are independent; each thread owns its row slot
    std::vector<std::thread> pool;
    const unsigned workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           static_cast<unsigned>(values.size()));
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= values.size()) return;
                rows[i] = run_one_setting(base, mode, values[i], lr_policy);
            }
        });
    }
    for (auto& th : pool) th.join();
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "setting,status,final_error,param_count,final_delta_frob,final_amp_factor\n";
    for (const auto& row : rows) {
        std::string status = row.status;  // keep the CSV single-token
        std::replace(status.begin(), status.end(), ',', ';');
        out += format_double(row.setting);
        out += ',' + status;
        out += ',' + format_double(row.final_error);
        out += ',' + std::to_string(row.params);
        out += ',' + format_double(row.final_delta_frob);
        out += ',' + format_double(row.final_amp_factor);
        out += '\n';
    }
    return out;
}

}  // namespace flora
