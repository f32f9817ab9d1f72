// flora — Tucker-structured low-rank tensor adapters for linear and conv
// weight spaces, with a LoRA matrix baseline, desk-scale recovery
// experiments, and analysis metrics.
//
// Exit codes: 0 success, 1 validation/IO error, 2 numerical divergence.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flora/analysis.hpp"
#include "flora/experiment.hpp"
#include "flora/tensor_io.hpp"
#include "flora/text.hpp"
#include "flora/training.hpp"

namespace {

using namespace flora;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;

// JSON config files: a flat object whose keys are long option names
// (without the leading dashes). Merged after parsing, so precedence stays
// flags > config > built-in defaults.
class ConfigValues {
public:
    ConfigValues(const CLI::App& cmd, const std::string& path) : cmd_(cmd) {
        if (path.empty()) return;
        try {
            values_ = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(path + ": config is not valid JSON: " + e.what());
        }
        if (!values_.is_object())
            throw std::invalid_argument(path + ": config must be a JSON object");
        for (const auto& [key, value] : values_.items()) {
            (void)value;
            if (cmd_.get_option_no_throw("--" + key) == nullptr)
                throw std::invalid_argument(path + ": unknown config key '" + key + "'");
        }
    }

    // true when the config supplies `flag` and the command line does not
    bool wants(const char* flag) const {
        if (values_.is_null() || !values_.contains(key(flag))) return false;
        const CLI::Option* opt = cmd_.get_option_no_throw(flag);
        return opt != nullptr && opt->count() == 0;
    }

    template <class T>
    void merge(const char* flag, T& out) const {
        if (!wants(flag)) return;
        try {
            out = values_.at(key(flag)).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config key '" + key(flag) + "': " + e.what());
        }
    }

private:
    static std::string key(const char* flag) { return std::string(flag).substr(2); }

    const CLI::App& cmd_;
    nlohmann::json values_;
};

// --- shared flag groups -----------------------------------------------------

struct LayerFlags {
    std::string layer;
    std::size_t d1 = 0, d2 = 0;
    std::size_t d_in = 0, d_out = 0, k = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--layer", layer, "Layer kind: linear or conv")
            ->check(CLI::IsMember({"linear", "conv"}));
        cmd->add_option("--d1", d1, "Linear output dimension d1");
        cmd->add_option("--d2", d2, "Linear input dimension d2");
        cmd->add_option("--din", d_in, "Conv input channels");
        cmd->add_option("--dout", d_out, "Conv output channels");
        cmd->add_option("--k", k, "Conv kernel size");
    }

    void merge_config(const ConfigValues& cfg) {
        cfg.merge("--layer", layer);
        cfg.merge("--d1", d1);
        cfg.merge("--d2", d2);
        cfg.merge("--din", d_in);
        cfg.merge("--dout", d_out);
        cfg.merge("--k", k);
    }

    LayerSpec resolve() const {
        if (layer.empty()) throw std::invalid_argument("--layer is required (flag or config)");
        if (layer != "linear" && layer != "conv")
            throw std::invalid_argument("--layer must be linear or conv");
        if (layer == "linear") {
            if (d1 == 0 || d2 == 0)
                throw std::invalid_argument("linear layers need --d1 and --d2");
            return LayerSpec::linear(d1, d2);
        }
        if (d_in == 0 || d_out == 0 || k == 0)
            throw std::invalid_argument("conv layers need --din, --dout and --k");
        return LayerSpec::conv(d_in, d_out, k);
    }
};

struct SeedFlag {
    std::uint64_t seed = 0;
    CLI::Option* opt = nullptr;
    bool from_config = false;

    void attach(CLI::App* cmd) {
        opt = cmd->add_option("--seed", seed,
                              "Random seed (falls back to the FLORA_SEED env var)");
    }

    void merge_config(const ConfigValues& cfg) {
        if (cfg.wants("--seed")) {
            cfg.merge("--seed", seed);
            from_config = true;
        }
    }

    std::uint64_t resolve() const {
        if (opt->count() > 0 || from_config) return seed;
        if (const char* env = std::getenv("FLORA_SEED"))
            return static_cast<std::uint64_t>(
                parse_size(env, "FLORA_SEED environment variable"));
        throw std::invalid_argument("a seed is required: pass --seed or set FLORA_SEED");
    }
};

struct TrainingFlags {
    std::string method = "flora";
    std::size_t r = 2;
    std::size_t r2 = 0;
    std::size_t r3 = kDefaultKernelRank;
    double scale = 0.0;
    CLI::Option* scale_opt = nullptr;
    std::string optimizer = "adam";
    double lr = 1e-2;
    std::size_t steps = 5000;
    std::size_t record_every = 10;
    bool core_only = false;
    std::vector<std::size_t> target_ranks;
    std::string target_file;
    std::string frozen_file;

    void attach(CLI::App* cmd) {
        cmd->add_option("--method", method, "Adapter family")
            ->check(CLI::IsMember({"flora", "lora"}))
            ->capture_default_str();
        cmd->add_option("--r", r, "Adapter rank r = r1 = r2")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--r2", r2, "Unequal second rank (flora only; 0 keeps r2 = r)");
        cmd->add_option("--r3", r3, "Kernel rank r3 (flora conv)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        scale_opt = cmd->add_option(
            "--scale", scale, "Adapter scale s (default 0.4 for linear, 4 for conv)");
        cmd->add_option("--optimizer", optimizer, "Optimizer")
            ->check(CLI::IsMember({"adam", "sgd"}))
            ->capture_default_str();
        cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
        cmd->add_option("--steps", steps, "Training steps")->capture_default_str();
        cmd->add_option("--record-every", record_every, "Record cadence in steps")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_flag("--core-only", core_only, "Train only the Tucker core");
        cmd->add_option("--target-ranks", target_ranks,
                        "Tucker ranks of the synthesized target, e.g. 2,2 or 2,2,1,1")
            ->delimiter(',');
        cmd->add_option("--target", target_file, "FLT1 file with an explicit target change");
        cmd->add_option("--frozen", frozen_file, "FLT1 file with the frozen base weight W0");
    }

    bool scale_given = false;

    void merge_config(const ConfigValues& cfg) {
        cfg.merge("--method", method);
        cfg.merge("--r", r);
        cfg.merge("--r2", r2);
        cfg.merge("--r3", r3);
        if (cfg.wants("--scale")) {
            cfg.merge("--scale", scale);
            scale_given = true;
        }
        cfg.merge("--optimizer", optimizer);
        cfg.merge("--lr", lr);
        cfg.merge("--steps", steps);
        cfg.merge("--record-every", record_every);
        cfg.merge("--core-only", core_only);
        cfg.merge("--target-ranks", target_ranks);
        cfg.merge("--target", target_file);
        cfg.merge("--frozen", frozen_file);
    }

    RecoveryConfig resolve(const LayerSpec& spec, std::uint64_t seed) const {
        if (method != "flora" && method != "lora")
            throw std::invalid_argument("--method must be flora or lora");
        if (optimizer != "adam" && optimizer != "sgd")
            throw std::invalid_argument("--optimizer must be adam or sgd");
        if (r == 0 || r3 == 0) throw std::invalid_argument("ranks must be positive");
        if (record_every == 0) throw std::invalid_argument("--record-every must be positive");
        RecoveryConfig cfg;
        cfg.layer = spec;
        cfg.method = method == "flora" ? Method::Flora : Method::Lora;
        cfg.r = r;
        cfg.r2 = r2;
        cfg.r3 = r3;
        if (scale_opt->count() > 0 || scale_given) cfg.scale = scale;
        cfg.optimizer.kind = optimizer == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
        cfg.optimizer.lr = lr;
        cfg.steps = steps;
        cfg.record_every = record_every;
        cfg.core_only = core_only;
        cfg.seed = seed;
        cfg.target_ranks = target_ranks;
        if (!target_file.empty()) cfg.target = read_flt1(target_file);
        if (!frozen_file.empty()) cfg.frozen = read_flt1(frozen_file);
        if (!cfg.target && cfg.target_ranks.empty())
            throw std::invalid_argument("pass --target-ranks or --target");
        return cfg;
    }
};

// --- paramcount ---------------------------------------------------------------

struct ParamcountArgs {
    LayerFlags layer;
    std::vector<std::size_t> rs{};
    std::vector<std::size_t> r3s{kDefaultKernelRank};
    bool compare = false;
    std::string csv_path;
};

int run_paramcount(const ParamcountArgs& args) {
    const LayerSpec spec = args.layer.resolve();
    for (std::size_t r : args.rs)
        if (r == 0) throw std::invalid_argument("--r values must be positive");
    for (std::size_t r3 : args.r3s)
        if (r3 == 0) throw std::invalid_argument("--r3 values must be positive");

    const auto rows = budget_table({spec}, args.rs, args.r3s);
    std::string csv;
    if (args.compare) {
        csv = budget_table_to_csv(rows);
    } else {
        csv = "layer,r,r3,flora_params\n";
        for (const auto& row : rows) {
            csv += (spec.kind == LayerKind::Linear
                        ? "linear " + std::to_string(spec.d1) + "x" + std::to_string(spec.d2)
                        : "conv " + std::to_string(spec.d_in) + "x" + std::to_string(spec.d_out) +
                              "x" + std::to_string(spec.k) + "x" + std::to_string(spec.k));
            csv += "," + std::to_string(row.r);
            csv += "," + (spec.kind == LayerKind::Conv ? std::to_string(row.r3) : std::string());
            csv += "," + std::to_string(row.flora_count) + "\n";
        }
    }
    std::cout << csv;
    if (!args.csv_path.empty()) write_file_atomic(args.csv_path, csv);
    return kExitOk;
}

// --- recover -------------------------------------------------------------------

struct RecoverArgs {
    LayerFlags layer;
    SeedFlag seed;
    TrainingFlags training;
    double tol = 0.0;
    CLI::Option* tol_opt = nullptr;
    std::string out_csv = "recover_records.csv";
    std::string out_jsonl;
    std::string out_bundle = "recover_adapter";
    std::string config_path;
    CLI::App* cmd = nullptr;
    bool tol_from_config = false;
};

int run_recover(RecoverArgs& args) {
    const ConfigValues config(*args.cmd, args.config_path);
    args.layer.merge_config(config);
    args.seed.merge_config(config);
    args.training.merge_config(config);
    if (config.wants("--tol")) {
        config.merge("--tol", args.tol);
        args.tol_from_config = true;
    }
    config.merge("--out-csv", args.out_csv);
    config.merge("--out-jsonl", args.out_jsonl);
    config.merge("--out-bundle", args.out_bundle);

    const LayerSpec spec = args.layer.resolve();
    const std::uint64_t seed = args.seed.resolve();
    const RecoveryConfig cfg = args.training.resolve(spec, seed);

    const RecoveryOutcome outcome = run_recovery(cfg);
    write_file_atomic(args.out_csv, records_to_csv(outcome.result.records));
    if (!args.out_jsonl.empty())
        write_file_atomic(args.out_jsonl, records_to_jsonl(outcome.result.records));
    save_adapter_bundle(args.out_bundle, outcome.adapter, spec, seed);

    const TrainRecord& last = outcome.result.records.back();
    std::cout << "steps: " << last.step << "\n";
    std::cout << "final_loss: " << format_double(last.loss) << "\n";
    std::cout << "final_rel_error: " << format_double(outcome.final_rel_error) << "\n";
    std::cout << "final_delta_frob: " << format_double(last.delta_frob) << "\n";
    std::cout << "final_amp_factor: " << format_double(last.amp_factor) << "\n";
    std::cout << "param_count: " << outcome.parameter_count << "\n";
    std::cout << "records_csv: " << args.out_csv << "\n";
    std::cout << "bundle: " << args.out_bundle << "\n";

    if (outcome.result.diverged) {
        std::cerr << "error: " << outcome.result.message << "\n";
        return kExitDiverged;
    }
    if ((args.tol_opt->count() > 0 || args.tol_from_config) &&
        !(outcome.final_rel_error <= args.tol)) {
        std::cerr << "error: final relative error " << format_double(outcome.final_rel_error)
                  << " exceeds --tol " << format_double(args.tol) << "\n";
        return kExitError;
    }
    return kExitOk;
}

// --- gradcheck -------------------------------------------------------------------

struct GradcheckArgs {
    double h = 1e-5;
    double tol = 1e-6;
    std::string only;
};

int run_gradcheck(const GradcheckArgs& args) {
    const auto cases = run_gradcheck_grid(args.h, args.tol, args.only);
    if (cases.empty()) {
        std::cerr << "error: no gradient-check cases match '" << args.only << "'\n";
        return kExitError;
    }
    bool all_passed = true;
    for (const auto& c : cases) {
        all_passed = all_passed && c.passed;
        std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << " max_rel_err "
                  << format_double(c.report.max_rel_err) << " (tol "
                  << format_double(c.tolerance) << ", worst " << c.report.worst.param << "["
                  << c.report.worst.index << "] analytic "
                  << format_double(c.report.worst.analytic) << " numeric "
                  << format_double(c.report.worst.numeric) << ")\n";
    }
    std::cout << (all_passed ? "gradcheck: all " : "gradcheck: FAILURES among ")
              << cases.size() << " cases\n";
    return all_passed ? kExitOk : kExitError;
}

// --- analyze ---------------------------------------------------------------------

struct AnalyzeAmpArgs {
    std::string delta_file;
    std::string frozen_file;
    std::size_t rank = 0;
    std::string out;
};

int run_analyze_amp(const AnalyzeAmpArgs& args) {
    const Tensor delta = read_flt1(args.delta_file);
    const Tensor frozen = read_flt1(args.frozen_file);
    const auto as_matrix = [](const Tensor& t, const std::string& file) {
        if (t.ndim() == 2) return matrix_from_tensor(t);
        if (t.ndim() == 4) return reshape_conv_to_matrix(t);
        throw std::invalid_argument(file + ": expected a 2-D or 4-D tensor, got " +
                                    shape_to_string(t.shape()));
    };
    if (delta.shape() != frozen.shape())
        throw std::invalid_argument(args.delta_file + " has shape " +
                                    shape_to_string(delta.shape()) + " but " + args.frozen_file +
                                    " has shape " + shape_to_string(frozen.shape()));
    const AmpReport report = amplification_factor(as_matrix(delta, args.delta_file),
                                                  as_matrix(frozen, args.frozen_file), args.rank);
    const std::string json = amp_report_to_json(report);
    std::cout << json;
    if (!args.out.empty()) write_file_atomic(args.out, json);
    return kExitOk;
}

struct AnalyzeLocalityArgs {
    std::size_t d_in = 0, d_out = 0, k = 0;
    std::string out;
};

int run_analyze_locality(const AnalyzeLocalityArgs& args) {
    const LocalityReport report = locality_dispersion(args.d_in, args.d_out, args.k);
    const std::string json = locality_report_to_json(report);
    std::cout << json;
    if (!args.out.empty()) write_file_atomic(args.out, json);
    return kExitOk;
}

// --- merge ------------------------------------------------------------------------

struct MergeArgs {
    std::string base_file;
    std::string bundle_dir;
    double scale = 0.0;
    CLI::Option* scale_opt = nullptr;
    std::string out;
};

int run_merge(const MergeArgs& args) {
    const Tensor base = read_flt1(args.base_file);
    const LoadedBundle bundle = load_adapter_bundle(args.bundle_dir);
    if (base.shape() != bundle.layer.weight_shape())
        throw std::invalid_argument(args.base_file + ": shape " + shape_to_string(base.shape()) +
                                    " does not match the bundle's layer " +
                                    shape_to_string(bundle.layer.weight_shape()));
    FrozenLayer layer(base, bundle.layer);

    double scale;
    Tensor delta{bundle.layer.weight_shape()};
    if (const auto* tucker = std::get_if<TuckerAdapter>(&bundle.adapter)) {
        delta = reconstruct(*tucker);
        scale = tucker->scale();
    } else {
        const auto& lora = std::get<LoraAdapter>(bundle.adapter);
        delta = lora_delta(lora, layer);
        scale = lora.scale();
    }
    if (args.scale_opt->count() > 0) scale = args.scale;

    write_flt1(args.out, merge(layer, delta, scale));
    std::cout << "merged: " << args.out << " (scale " << format_double(scale) << ")\n";
    return kExitOk;
}

// --- sweep -------------------------------------------------------------------------

struct SweepArgs {
    LayerFlags layer;
    SeedFlag seed;
    TrainingFlags training;
    std::string mode;
    std::vector<double> values;
    std::string lr_policy = "fixed";
    bool parallel = false;
    std::string out;
    std::string config_path;
    CLI::App* cmd = nullptr;
};

int run_sweep_cmd(SweepArgs& args) {
    const ConfigValues config(*args.cmd, args.config_path);
    args.layer.merge_config(config);
    args.seed.merge_config(config);
    args.training.merge_config(config);
    config.merge("--mode", args.mode);
    config.merge("--values", args.values);
    config.merge("--lr-policy", args.lr_policy);
    config.merge("--parallel", args.parallel);
    config.merge("--out", args.out);

    if (args.mode != "rank" && args.mode != "scale")
        throw std::invalid_argument("--mode must be rank or scale");
    if (args.values.empty())
        throw std::invalid_argument("--values needs at least one setting");
    if (args.lr_policy != "fixed" && args.lr_policy != "inv-scale" &&
        args.lr_policy != "inv-scale-sq")
        throw std::invalid_argument("--lr-policy must be fixed, inv-scale, or inv-scale-sq");

    const LayerSpec spec = args.layer.resolve();
    const std::uint64_t seed = args.seed.resolve();
    const RecoveryConfig base = args.training.resolve(spec, seed);

    const SweepMode mode = args.mode == "rank" ? SweepMode::Rank : SweepMode::Scale;
    LrPolicy policy = LrPolicy::Fixed;
    if (args.lr_policy == "inv-scale") policy = LrPolicy::InvScale;
    if (args.lr_policy == "inv-scale-sq") policy = LrPolicy::InvScaleSq;
    if (mode == SweepMode::Rank && policy != LrPolicy::Fixed)
        throw std::invalid_argument("--lr-policy applies to scale sweeps only");

    const auto rows = run_sweep(base, mode, args.values, policy, args.parallel);
    const std::string csv = sweep_to_csv(rows);
    std::cout << csv;
    if (!args.out.empty()) write_file_atomic(args.out, csv);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tucker-structured low-rank tensor adapters (FLoRA) with a LoRA baseline:\n"
                 "parameter budgets, seeded recovery experiments, gradient checks, and\n"
                 "update-analysis metrics over FLT1 tensor files."};
    app.require_subcommand(1);

    ParamcountArgs paramcount_args;
    auto* paramcount =
        app.add_subcommand("paramcount", "Exact adapter parameter budgets per layer spec");
    paramcount_args.layer.attach(paramcount);
    paramcount->add_option("--r", paramcount_args.rs, "Adapter rank(s), comma separated")
        ->required()
        ->delimiter(',');
    paramcount->add_option("--r3", paramcount_args.r3s, "Kernel rank(s) r3, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    paramcount->add_flag("--compare", paramcount_args.compare,
                         "Also list the LoRA budget and the flora/lora ratio");
    paramcount->add_option("--csv", paramcount_args.csv_path, "Also write the table to a file");

    RecoverArgs recover_args;
    auto* recover = app.add_subcommand(
        "recover", "Fit an adapter to a (synthetic or supplied) target weight change");
    recover_args.cmd = recover;
    recover->add_option("--config", recover_args.config_path,
                        "JSON config file whose keys are long option names; flags take "
                        "precedence over config values");
    recover_args.layer.attach(recover);
    recover_args.seed.attach(recover);
    recover_args.training.attach(recover);
    recover_args.tol_opt = recover->add_option(
        "--tol", recover_args.tol, "Exit nonzero unless the final relative error is at most this");
    recover->add_option("--out-csv", recover_args.out_csv, "Records CSV path")
        ->capture_default_str();
    recover->add_option("--out-jsonl", recover_args.out_jsonl, "Records JSON-lines path");
    recover->add_option("--out-bundle", recover_args.out_bundle, "Adapter bundle directory")
        ->capture_default_str();

    GradcheckArgs gradcheck_args;
    auto* gradcheck = app.add_subcommand(
        "gradcheck", "Check analytic adapter gradients against central finite differences");
    gradcheck->set_help_flag("--help", "Print this help message and exit");  // frees up --h
    gradcheck->add_option("--h", gradcheck_args.h, "Finite-difference step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gradcheck->add_option("--tol", gradcheck_args.tol, "Max relative error accepted")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gradcheck->add_option("--only", gradcheck_args.only,
                          "Run only cases whose name contains this substring");

    auto* analyze = app.add_subcommand("analyze", "Update-analysis metrics");
    analyze->require_subcommand(1);
    AnalyzeAmpArgs amp_args;
    auto* amp = analyze->add_subcommand(
        "amp", "Feature amplification factor of a weight change against the frozen weight");
    amp->add_option("--delta", amp_args.delta_file, "FLT1 file with the update")->required();
    amp->add_option("--frozen", amp_args.frozen_file, "FLT1 file with the frozen weight")
        ->required();
    amp->add_option("--rank", amp_args.rank, "Number of top singular directions")
        ->required()
        ->check(CLI::PositiveNumber);
    amp->add_option("--out", amp_args.out, "Also write the JSON report to a file");

    AnalyzeLocalityArgs locality_args;
    auto* locality = analyze->add_subcommand(
        "locality", "Kernel-neighbor separations under the conv flattening (index map only)");
    locality->add_option("--din", locality_args.d_in, "Conv input channels")->required();
    locality->add_option("--dout", locality_args.d_out, "Conv output channels")->required();
    locality->add_option("--k", locality_args.k, "Kernel size")->required();
    locality->add_option("--out", locality_args.out, "Also write the JSON report to a file");

    MergeArgs merge_args;
    auto* merge_cmd =
        app.add_subcommand("merge", "Write base + s * delta for a saved adapter bundle");
    merge_cmd->add_option("--base", merge_args.base_file, "FLT1 file with the base weight")
        ->required();
    merge_cmd->add_option("--adapter", merge_args.bundle_dir, "Adapter bundle directory")
        ->required();
    merge_args.scale_opt = merge_cmd->add_option(
        "--scale", merge_args.scale, "Override the bundle's stored scale");
    merge_cmd->add_option("--out", merge_args.out, "Output FLT1 path")->required();

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand(
        "sweep", "Run one recovery per rank or scale setting on a shared seeded target");
    sweep_args.cmd = sweep;
    sweep->add_option("--config", sweep_args.config_path,
                      "JSON config file whose keys are long option names; flags take "
                      "precedence over config values");
    sweep_args.layer.attach(sweep);
    sweep_args.seed.attach(sweep);
    sweep_args.training.attach(sweep);
    sweep->add_option("--mode", sweep_args.mode, "What the settings vary")
        ->check(CLI::IsMember({"rank", "scale"}));
    sweep->add_option("--values", sweep_args.values, "Settings, comma separated")
        ->delimiter(',');
    sweep->add_option("--lr-policy", sweep_args.lr_policy,
                      "Scale sweeps: fixed, inv-scale, or inv-scale-sq learning rate")
        ->capture_default_str();
    sweep->add_flag("--parallel", sweep_args.parallel, "Run settings on worker threads");
    sweep->add_option("--out", sweep_args.out, "Also write the summary CSV to a file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*paramcount) return run_paramcount(paramcount_args);
        if (*recover) return run_recover(recover_args);
        if (*gradcheck) return run_gradcheck(gradcheck_args);
        if (*amp) return run_analyze_amp(amp_args);
        if (*locality) return run_analyze_locality(locality_args);
        if (*merge_cmd) return run_merge(merge_args);
        if (*sweep) return run_sweep_cmd(sweep_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
