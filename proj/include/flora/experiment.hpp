#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flora/adapters.hpp"
#include "flora/training.hpp"

namespace flora {

double default_scale(LayerKind kind);  // 0.4 for linear, 4 for conv
inline constexpr std::size_t kDefaultKernelRank = 2;

/// One seeded recovery experiment: synthesize (or accept) a target change
/// for a layer, fit an adapter to it, and report the trajectory plus the
/// final relative error |s*delta - target|_F / |target|_F.
struct RecoveryConfig {
    LayerSpec layer;
    Method method = Method::Flora;
    std::size_t r = 2;                      // adapter r1 = r2 (Flora) or r (LoRA)
    std::size_t r2 = 0;                     // optional unequal second rank; 0 means r
    std::size_t r3 = kDefaultKernelRank;    // Flora conv kernel rank
    std::optional<double> scale;            // defaults to default_scale(layer.kind)
    OptimizerConfig optimizer;              // Adam, lr 1e-2
    std::size_t steps = 5000;
    std::size_t record_every = 10;
    bool core_only = false;
    std::uint64_t seed = 0;
    std::vector<std::size_t> target_ranks;  // used when no explicit target is given
    std::optional<Tensor> target;
    std::optional<Tensor> frozen;           // W0; Gaussian from the seed when absent
};

struct RecoveryOutcome {
    TrainResult result;
    AnyAdapter adapter;
    Tensor target;
    double scale = 0.0;
    double final_rel_error = 0.0;
    std::size_t parameter_count = 0;
};

RecoveryOutcome run_recovery(const RecoveryConfig& config);

/// Relative recovery error of a scaled delta against a target; falls back to
/// the absolute norm for an identically zero target.
double recovery_error(const Tensor& delta, double scale, const Tensor& target);

enum class SweepMode { Rank, Scale };
enum class LrPolicy { Fixed, InvScale, InvScaleSq };

struct SweepRow {
    double setting = 0.0;
    std::string status;  // "ok", "diverged", or "error: ..."
    double final_error = 0.0;
    std::size_t params = 0;
    double final_delta_frob = 0.0;
    double final_amp_factor = 0.0;
};

/// Runs one recovery per setting on a shared seeded target. Rank mode varies
/// the adapter rank; scale mode varies s (optionally rescaling the learning
/// rate by 1/s or 1/s^2). Per-setting failures land in `status` and the
/// sweep continues.
std::vector<SweepRow> run_sweep(const RecoveryConfig& base, SweepMode mode,
                                const std::vector<double>& values, LrPolicy lr_policy,
                                bool parallel);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace flora
