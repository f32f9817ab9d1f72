// End-to-end tests against the built CLI binary. The binary path arrives as
// the first program argument (wired up in CMake).

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <cmath>

#include "flora/adapters.hpp"
#include "flora/tensor_io.hpp"
#include "flora/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

// Runs the CLI inside `dir`, capturing stdout (stderr goes to a side file so
// diagnostics stay visible when a test fails).
RunResult run_cli(const fs::path& dir, const std::string& args,
                  const std::string& extra_env = "") {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = "cd '" + dir.string() + "' && " + extra_env + " '" + g_cli + "' " +
                            args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.stdout_text = flora::read_file(out);
    return result;
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("flora_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_CASE("paramcount reproduces the budget examples and validates flags") {
    TempDir dir;
    const RunResult conv = run_cli(
        dir.path, "paramcount --layer conv --din 64 --dout 64 --k 3 --r 4 --r3 2 --compare");
    CHECK(conv.exit_code == 0);
    CHECK(conv.stdout_text.find("588,1536,0.3828125") != std::string::npos);

    const RunResult linear =
        run_cli(dir.path, "paramcount --layer linear --d1 128 --d2 128 --r 8 --compare");
    CHECK(linear.exit_code == 0);
    CHECK(linear.stdout_text.find("2112,2048") != std::string::npos);

    CHECK(run_cli(dir.path, "paramcount --layer conv --din 64 --dout 64 --k 3 --r 0")
              .exit_code == 1);
    CHECK(run_cli(dir.path, "paramcount --layer linear --r 4").exit_code == 1);
}

TEST_CASE("recover: seeded run is byte-deterministic and honors --tol") {
    TempDir dir;
    const std::string flags =
        "recover --layer linear --d1 8 --d2 8 --r 2 --method flora --target-ranks 2,2 "
        "--steps 400 --seed 7 --out-csv run.csv --out-jsonl run.jsonl --out-bundle bundle";
    const RunResult first = run_cli(dir.path, flags);
    CHECK(first.exit_code == 0);
    const std::string csv1 = flora::read_file(dir.path / "run.csv");
    const std::string jsonl1 = flora::read_file(dir.path / "run.jsonl");
    const std::string manifest1 = flora::read_file(dir.path / "bundle" / "manifest.json");
    const std::string core1 = flora::read_file(dir.path / "bundle" / "core.flt");

    const RunResult second = run_cli(dir.path, flags);
    CHECK(second.exit_code == 0);
    CHECK(flora::read_file(dir.path / "run.csv") == csv1);
    CHECK(flora::read_file(dir.path / "run.jsonl") == jsonl1);
    CHECK(flora::read_file(dir.path / "bundle" / "manifest.json") == manifest1);
    CHECK(flora::read_file(dir.path / "bundle" / "core.flt") == core1);
    CHECK(second.stdout_text == first.stdout_text);

    // an unreachable tolerance flips the exit code but still writes outputs
    const RunResult strict = run_cli(dir.path, flags + " --tol 1e-30");
    CHECK(strict.exit_code == 1);
}

TEST_CASE("recover --steps 0 emits a single step-0 row with a zero update") {
    TempDir dir;
    const RunResult run = run_cli(
        dir.path,
        "recover --layer linear --d1 6 --d2 6 --r 2 --target-ranks 2,2 --steps 0 --seed 3 "
        "--out-csv zero.csv --out-bundle b0");
    CHECK(run.exit_code == 0);
    const auto records = flora::records_from_csv(flora::read_file(dir.path / "zero.csv"));
    REQUIRE(records.size() == 1);
    CHECK(records[0].step == 0);
    CHECK(records[0].delta_frob == 0.0);
    CHECK(records[0].amp_factor == 0.0);
}

TEST_CASE("recover picks up FLORA_SEED and fails without any seed") {
    TempDir dir;
    const std::string flags =
        "recover --layer linear --d1 6 --d2 6 --r 2 --target-ranks 2,2 --steps 50 "
        "--out-csv env.csv --out-bundle be";
    CHECK(run_cli(dir.path, flags).exit_code == 1);

    const RunResult via_env = run_cli(dir.path, flags, "FLORA_SEED=11");
    CHECK(via_env.exit_code == 0);
    const std::string env_csv = flora::read_file(dir.path / "env.csv");

    const RunResult via_flag = run_cli(dir.path, flags + " --seed 11");
    CHECK(via_flag.exit_code == 0);
    CHECK(flora::read_file(dir.path / "env.csv") == env_csv);
}

TEST_CASE("recover accepts an explicit FLT1 target and frozen weight") {
    TempDir dir;
    flora::Tensor target = flora::random_tucker_tensor({6, 6}, {2, 2}, 42);
    const double norm = flora::frobenius_norm(target);
    for (double& v : target.values()) v *= 4.0 / norm;
    const flora::Tensor frozen = oracle::gaussian_tensor({6, 6}, 405);
    flora::write_flt1(dir.path / "target.flt", target);
    flora::write_flt1(dir.path / "w0.flt", frozen);

    const RunResult run = run_cli(
        dir.path,
        "recover --layer linear --d1 6 --d2 6 --r 2 --target target.flt --frozen w0.flt "
        "--steps 3000 --seed 9 --tol 1e-3 --out-csv t.csv --out-bundle bt");
    CHECK(run.exit_code == 0);

    // reconstruct the bundle and check it actually recovered the file target
    const flora::LoadedBundle bundle = flora::load_adapter_bundle(dir.path / "bt");
    const auto& adapter = std::get<flora::TuckerAdapter>(bundle.adapter);
    const flora::Tensor delta = flora::reconstruct(adapter);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double r = adapter.scale() * delta[i] - target[i];
        num += r * r;
        den += target[i] * target[i];
    }
    CHECK(std::sqrt(num / den) <= 1e-3);

    // a target with the wrong shape names the file in the error
    flora::write_flt1(dir.path / "bad_target.flt", flora::Tensor({3, 3}));
    const RunResult mismatch = run_cli(
        dir.path,
        "recover --layer linear --d1 6 --d2 6 --r 2 --target bad_target.flt --steps 10 "
        "--seed 9 --out-csv x.csv --out-bundle bx");
    CHECK(mismatch.exit_code == 1);
}

TEST_CASE("analyze amp flattens 4-D conv tensors through the fixed reshape") {
    TempDir dir;
    const flora::Tensor delta = flora::random_tucker_tensor({3, 3, 3, 3}, {2, 2, 1, 1}, 500);
    const flora::Tensor frozen = oracle::gaussian_tensor({3, 3, 3, 3}, 501);
    flora::write_flt1(dir.path / "d.flt", delta);
    flora::write_flt1(dir.path / "w.flt", frozen);
    const RunResult run =
        run_cli(dir.path, "analyze amp --delta d.flt --frozen w.flt --rank 2");
    CHECK(run.exit_code == 0);
    CHECK(run.stdout_text.find("\"rank_used\": 2") != std::string::npos);
    CHECK(run.stdout_text.find("\"infinite\": false") != std::string::npos);
}

TEST_CASE("recover exits 2 on divergence") {
    TempDir dir;
    const RunResult run = run_cli(
        dir.path,
        "recover --layer linear --d1 6 --d2 6 --r 2 --target-ranks 2,2 --steps 500 --seed 5 "
        "--optimizer sgd --lr 1e8 --out-csv div.csv --out-bundle bd");
    CHECK(run.exit_code == 2);
}

TEST_CASE("recover accepts a JSON config file with flag precedence") {
    TempDir dir;
    {
        std::ofstream cfg(dir.path / "run.json");
        cfg << R"({"layer":"linear","d1":6,"d2":6,"r":2,"target-ranks":[2,2],)"
            << R"("steps":80,"seed":21,"out-csv":"cfg.csv","out-bundle":"bc"})";
    }
    const RunResult run = run_cli(dir.path, "recover --config run.json");
    CHECK(run.exit_code == 0);
    CHECK(fs::exists(dir.path / "cfg.csv"));
    const auto records = flora::records_from_csv(flora::read_file(dir.path / "cfg.csv"));
    CHECK(records.back().step == 80);

    // a flag overrides the config value
    const RunResult override_run =
        run_cli(dir.path, "recover --config run.json --steps 40 --out-csv cfg2.csv");
    CHECK(override_run.exit_code == 0);
    const auto records2 = flora::records_from_csv(flora::read_file(dir.path / "cfg2.csv"));
    CHECK(records2.back().step == 40);

    // unknown keys and invalid JSON are validation errors
    {
        std::ofstream bad(dir.path / "typo.json");
        bad << R"({"layer":"linear","d1":6,"d2":6,"stepz":80})";
    }
    CHECK(run_cli(dir.path, "recover --config typo.json").exit_code == 1);
    {
        std::ofstream bad(dir.path / "notjson.json");
        bad << "steps = 80";
    }
    CHECK(run_cli(dir.path, "recover --config notjson.json").exit_code == 1);
}

TEST_CASE("gradcheck: default grid passes, bad step fails, subset runs") {
    TempDir dir;
    const RunResult ok = run_cli(dir.path, "gradcheck");
    CHECK(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("[PASS] tucker-conv-layerfit") != std::string::npos);

    // cancellation-dominated step: failures are reported and exit is 1
    const RunResult tiny = run_cli(dir.path, "gradcheck --h 1e-10");
    CHECK(tiny.exit_code == 1);
    CHECK(tiny.stdout_text.find("[FAIL]") != std::string::npos);

    const RunResult subset = run_cli(dir.path, "gradcheck --only lora-conv");
    CHECK(subset.exit_code == 0);
    CHECK(subset.stdout_text.find("tucker-linear") == std::string::npos);

    CHECK(run_cli(dir.path, "gradcheck --only no-such-case").exit_code == 1);
}

TEST_CASE("analyze amp matches the diag example; bad files exit 1 with the file named") {
    TempDir dir;
    flora::write_flt1(dir.path / "w.flt", flora::Tensor({2, 2}, {3, 0, 0, 4}));
    const RunResult run =
        run_cli(dir.path, "analyze amp --delta w.flt --frozen w.flt --rank 1 --out amp.json");
    CHECK(run.exit_code == 0);
    CHECK(run.stdout_text.find("\"factor\": 1.25") != std::string::npos);
    CHECK(flora::read_file(dir.path / "amp.json") == run.stdout_text);

    {
        std::ofstream bad(dir.path / "bad.flt", std::ios::binary);
        bad << "JUNKJUNK";
    }
    const fs::path errfile = dir.path / "stderr.txt";
    const RunResult broken =
        run_cli(dir.path, "analyze amp --delta bad.flt --frozen w.flt --rank 1");
    CHECK(broken.exit_code == 1);
    CHECK(flora::read_file(errfile).find("bad.flt") != std::string::npos);

    // mismatched shapes name both files
    flora::write_flt1(dir.path / "w3.flt", flora::Tensor({3, 3}));
    const RunResult mismatch =
        run_cli(dir.path, "analyze amp --delta w.flt --frozen w3.flt --rank 1");
    CHECK(mismatch.exit_code == 1);
    const std::string message = flora::read_file(errfile);
    CHECK(message.find("w.flt") != std::string::npos);
    CHECK(message.find("w3.flt") != std::string::npos);
}

TEST_CASE("analyze locality: k=1 reports no pairs") {
    TempDir dir;
    const RunResult run = run_cli(dir.path, "analyze locality --din 4 --dout 4 --k 1");
    CHECK(run.exit_code == 0);
    CHECK(run.stdout_text.find("\"pair_count\": 0") != std::string::npos);
    CHECK(run.stdout_text.find("\"pairs\": []") != std::string::npos);
}

TEST_CASE("merge: scale 0 reproduces the base bit-exactly") {
    TempDir dir;
    const RunResult fit = run_cli(
        dir.path,
        "recover --layer conv --din 4 --dout 4 --k 3 --r 2 --r3 1 --target-ranks 2,2,1,1 "
        "--steps 200 --seed 13 --out-csv r.csv --out-bundle adapter");
    REQUIRE(fit.exit_code == 0);

    const flora::Tensor base = oracle::gaussian_tensor({4, 4, 3, 3}, 1717);
    flora::write_flt1(dir.path / "base.flt", base);

    const RunResult zero = run_cli(
        dir.path, "merge --base base.flt --adapter adapter --scale 0 --out merged0.flt");
    CHECK(zero.exit_code == 0);
    CHECK(flora::read_file(dir.path / "merged0.flt") ==
          flora::read_file(dir.path / "base.flt"));

    const RunResult merged =
        run_cli(dir.path, "merge --base base.flt --adapter adapter --out merged.flt");
    CHECK(merged.exit_code == 0);
    const flora::Tensor out = flora::read_flt1(dir.path / "merged.flt");
    CHECK(out.shape() == base.shape());

    // shape mismatch names the offending file
    flora::write_flt1(dir.path / "wrong.flt", flora::Tensor({2, 2}));
    const RunResult mismatch =
        run_cli(dir.path, "merge --base wrong.flt --adapter adapter --out x.flt");
    CHECK(mismatch.exit_code == 1);
    CHECK(flora::read_file(dir.path / "stderr.txt").find("wrong.flt") != std::string::npos);
}

TEST_CASE("sweep: rank mode shows the under-ranked floor; outputs are deterministic") {
    TempDir dir;
    const std::string base_flags =
        "sweep --mode rank --values 1,2 --layer linear --d1 8 --d2 8 --target-ranks 2,2 "
        "--steps 1200 --seed 7";
    const std::string flags = base_flags + " --out sweep.csv";
    const RunResult run = run_cli(dir.path, flags);
    CHECK(run.exit_code == 0);
    const std::string csv = flora::read_file(dir.path / "sweep.csv");
    CHECK(csv.substr(0, csv.find('\n')) ==
          "setting,status,final_error,param_count,final_delta_frob,final_amp_factor");

    // parse the two data rows: r=1 must be much worse than r=2
    std::vector<double> errors;
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
        const std::size_t end = csv.find('\n', pos);
        const std::string line = csv.substr(pos, end - pos);
        if (!line.empty()) {
            std::size_t a = line.find(',');
            std::size_t b = line.find(',', a + 1);
            std::size_t c = line.find(',', b + 1);
            errors.push_back(std::stod(line.substr(b + 1, c - b - 1)));
        }
        pos = end + 1;
    }
    REQUIRE(errors.size() == 2);
    CHECK(errors[0] > 10.0 * errors[1]);
    CHECK(errors[0] > 1e-2);

    const RunResult again = run_cli(dir.path, flags);
    CHECK(flora::read_file(dir.path / "sweep.csv") == csv);
    CHECK(again.stdout_text == run.stdout_text);

    const RunResult parallel = run_cli(dir.path, base_flags + " --parallel --out sweep_par.csv");
    CHECK(parallel.exit_code == 0);
    CHECK(flora::read_file(dir.path / "sweep_par.csv") == csv);
}

TEST_CASE("sweep: empty values list is a usage error") {
    TempDir dir;
    CHECK(run_cli(dir.path,
                  "sweep --mode rank --layer linear --d1 8 --d2 8 --target-ranks 2,2 --seed 7")
              .exit_code == 1);
    CHECK(run_cli(dir.path,
                  "sweep --mode rank --values --layer linear --d1 8 --d2 8 "
                  "--target-ranks 2,2 --seed 7")
              .exit_code == 1);
}

TEST_CASE("scale sweep with lr/s^2 and a core-only quadratic follows one trajectory") {
    TempDir dir;
    const std::string flags =
        "sweep --mode scale --values 0.5,1,2,4 --layer linear --d1 8 --d2 8 "
        "--target-ranks 2,2 --steps 400 --seed 17 --core-only --optimizer sgd --lr 0.05 "
        "--lr-policy inv-scale-sq --out scale.csv";
    const RunResult run = run_cli(dir.path, flags);
    CHECK(run.exit_code == 0);
    const std::string csv = flora::read_file(dir.path / "scale.csv");

    // final_error and final_delta_frob (of s * delta) agree across settings
    std::vector<double> errors, frobs;
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
        const std::size_t end = csv.find('\n', pos);
        const std::string line = csv.substr(pos, end - pos);
        if (!line.empty()) {
            std::vector<std::string> fields;
            std::size_t start = 0;
            while (true) {
                const std::size_t comma = line.find(',', start);
                fields.push_back(line.substr(start, comma - start));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            REQUIRE(fields.size() == 6);
            CHECK(fields[1] == "ok");
            errors.push_back(std::stod(fields[2]));
            frobs.push_back(std::stod(fields[4]));
        }
        pos = end + 1;
    }
    REQUIRE(errors.size() == 4);
    for (std::size_t i = 1; i < errors.size(); ++i) {
        CHECK(errors[i] == doctest::Approx(errors[0]).epsilon(1e-6));
        CHECK(frobs[i] == doctest::Approx(frobs[0]).epsilon(1e-6));
    }
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-flora-cli> [doctest args]\n", argv[0]);
        return 1;
    }
    g_cli = fs::absolute(argv[1]).string();

    doctest::Context context;
    context.applyCommandLine(argc - 1, argv + 1);
    return context.run();
}
