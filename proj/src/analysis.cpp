#include "flora/analysis.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "flora/numerics.hpp"
#include "flora/text.hpp"

namespace flora {

namespace {

void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

constexpr double kZeroDeltaThreshold = 1e-12;

}  // namespace

AmpReport amplification_factor(const Matrix& delta, const Matrix& frozen, std::size_t r) {
    check(delta.rows() == frozen.rows() && delta.cols() == frozen.cols(),
          "delta and frozen weight must have equal shapes");
    check(r >= 1 && r <= std::min(delta.rows(), delta.cols()), "rank out of range");

    AmpReport report;
    report.rank_used = r;
    report.delta_frob = frobenius_norm(delta);
    if (report.delta_frob < kZeroDeltaThreshold) {
        // singular subspaces of a zero update are undefined; report 0
        return report;
    }
    const auto [u, v] = top_r_singular_subspaces(delta, r);
    const Matrix projection = matmul(matmul(transpose(u), frozen), v);
    report.projection_frob = frobenius_norm(projection);
    report.factor = report.projection_frob > 0.0
                        ? report.delta_frob / report.projection_frob
                        : std::numeric_limits<double>::infinity();
    return report;
}

std::string amp_report_to_json(const AmpReport& report) {
    nlohmann::json j;
    j["delta_frob"] = report.delta_frob;
    j["projection_frob"] = report.projection_frob;
    if (std::isinf(report.factor)) {
        j["factor"] = nullptr;
        j["infinite"] = true;
    } else {
        j["factor"] = report.factor;
        j["infinite"] = false;
    }
    j["rank_used"] = report.rank_used;
    return j.dump(2) + "\n";
}

Matrix optimal_core(const Matrix& a, const Matrix& b, const Matrix& target) {
    check(target.rows() == a.rows(), "target rows must match a");
    check(target.cols() == b.rows(), "target cols must match b");
    // pinv(A) * target * pinv(B^T); pinv(B^T) = pinv(B)^T
    return matmul(matmul(pseudo_inverse(a), target), transpose(pseudo_inverse(b)));
}

LocalityReport locality_dispersion(std::size_t d_in, std::size_t d_out, std::size_t k) {
    check(d_in > 0 && d_out > 0 && k > 0, "extents must be positive");
    LocalityReport report;
    report.d_in = d_in;
    report.d_out = d_out;
    report.k = k;
    report.channel_row_stride = k;
    report.channel_col_stride = k;

    // matrix position of weight (ci, co, kr, kc): row = ci*k + kr, col = co*k + kc
    std::size_t total = 0;
    for (std::size_t ci = 0; ci < d_in; ++ci)
        for (std::size_t co = 0; co < d_out; ++co)
            for (std::size_t kr = 0; kr < k; ++kr)
                for (std::size_t kc = 0; kc < k; ++kc) {
                    const std::size_t row = ci * k + kr;
                    const std::size_t col = co * k + kc;
                    if (kr + 1 < k) {
                        const std::size_t row2 = ci * k + kr + 1;
                        LocalityPair p{ci, co, kr, kc, 0, row2 - row, 0};
                        total += p.separation();
                        report.pairs.push_back(p);
                    }
                    if (kc + 1 < k) {
                        const std::size_t col2 = co * k + kc + 1;
                        LocalityPair p{ci, co, kr, kc, 1, 0, col2 - col};
                        total += p.separation();
                        report.pairs.push_back(p);
                    }
                }
    for (const auto& p : report.pairs)
        report.max_separation = std::max(report.max_separation, p.separation());
    report.mean_separation =
        report.pairs.empty() ? 0.0 : static_cast<double>(total) / report.pairs.size();
    return report;
}

std::string locality_report_to_json(const LocalityReport& report) {
    nlohmann::json j;
    j["d_in"] = report.d_in;
    j["d_out"] = report.d_out;
    j["k"] = report.k;
    j["pair_count"] = report.pairs.size();
    j["max_separation"] = report.max_separation;
    j["mean_separation"] = report.mean_separation;
    j["channel_row_stride"] = report.channel_row_stride;
    j["channel_col_stride"] = report.channel_col_stride;
    auto pairs = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back({{"c_in", p.c_in},
                         {"c_out", p.c_out},
                         {"kr", p.kr},
                         {"kc", p.kc},
                         {"axis", p.axis},
                         {"row_sep", p.row_sep},
                         {"col_sep", p.col_sep}});
    }
    j["pairs"] = std::move(pairs);
    return j.dump(2) + "\n";
}

std::vector<BudgetRow> budget_table(const std::vector<LayerSpec>& specs,
                                    const std::vector<std::size_t>& rs,
                                    const std::vector<std::size_t>& r3s) {
    check(!specs.empty() && !rs.empty(), "budget table needs at least one spec and one rank");
    std::vector<BudgetRow> rows;
    for (const auto& spec : specs) {
        const std::vector<std::size_t> kernel_ranks =
            spec.kind == LayerKind::Conv ? (r3s.empty() ? std::vector<std::size_t>{1} : r3s)
                                         : std::vector<std::size_t>{0};
        for (std::size_t r : rs) {
            for (std::size_t r3 : kernel_ranks) {
                BudgetRow row;
                row.spec = spec;
                row.r = r;
                row.r3 = r3;
                row.flora_count = flora_param_count(spec, r, r, spec.kind == LayerKind::Conv
                                                                   ? r3
                                                                   : std::size_t{1});
                row.lora_count = lora_param_count(spec, r);
                row.ratio = static_cast<double>(row.flora_count) /
                            static_cast<double>(row.lora_count);
                rows.push_back(row);
            }
        }
    }
    return rows;
}

namespace {

std::string spec_to_string(const LayerSpec& spec) {
    std::ostringstream os;
    if (spec.kind == LayerKind::Linear)
        os << "linear " << spec.d1 << "x" << spec.d2;
    else
        os << "conv " << spec.d_in << "x" << spec.d_out << "x" << spec.k << "x" << spec.k;
    return os.str();
}

}  // namespace

std::string budget_table_to_csv(const std::vector<BudgetRow>& rows) {
    std::string out = "layer,r,r3,flora_params,lora_params,ratio\n";
    for (const auto& row : rows) {
        out += spec_to_string(row.spec);
        out += "," + std::to_string(row.r);
        out += "," + (row.spec.kind == LayerKind::Conv ? std::to_string(row.r3) : std::string());
        out += "," + std::to_string(row.flora_count);
        out += "," + std::to_string(row.lora_count);
        out += "," + format_double(row.ratio);
        out += "\n";
    }
    return out;
}

std::string budget_table_to_json(const std::vector<BudgetRow>& rows) {
    auto arr = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json j;
        j["layer"] = spec_to_string(row.spec);
        j["r"] = row.r;
        if (row.spec.kind == LayerKind::Conv) j["r3"] = row.r3;
        j["flora_params"] = row.flora_count;
        j["lora_params"] = row.lora_count;
        j["ratio"] = row.ratio;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

}  // namespace flora
