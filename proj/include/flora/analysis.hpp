#pragma once

#include <string>
#include <vector>

#include "flora/adapters.hpp"
#include "flora/tensor.hpp"

namespace flora {

/// Feature amplification factor |delta|_F / |U^T W V|_F with U, V the top-r
/// singular subspaces of delta. A zero delta (norm below 1e-12) reports
/// factor 0; a zero projection under a nonzero delta reports +infinity.
struct AmpReport {
    double delta_frob = 0.0;
    double projection_frob = 0.0;
    double factor = 0.0;
    std::size_t rank_used = 0;
};

AmpReport amplification_factor(const Matrix& delta, const Matrix& frozen, std::size_t r);

std::string amp_report_to_json(const AmpReport& report);

/// Least-squares core for fixed factors: the G minimizing
/// |A G B^T - target|_F, computed as pinv(A) * target * pinv(B^T).
Matrix optimal_core(const Matrix& a, const Matrix& b, const Matrix& target);

/// Row/column separation of one kernel-adjacent weight pair after the conv
/// flattening. Axis 0 pairs differ along the kernel-row axis, axis 1 along
/// the kernel-column axis.
struct LocalityPair {
    std::size_t c_in = 0, c_out = 0;
    std::size_t kr = 0, kc = 0;  // kernel position of the first element
    std::size_t axis = 0;
    std::size_t row_sep = 0, col_sep = 0;
    std::size_t separation() const { return row_sep + col_sep; }
};

struct LocalityReport {
    std::size_t d_in = 0, d_out = 0, k = 0;
    std::vector<LocalityPair> pairs;  // empty when k == 1
    std::size_t max_separation = 0;
    double mean_separation = 0.0;
    // distance between the same kernel position in adjacent channels
    std::size_t channel_row_stride = 0;
    std::size_t channel_col_stride = 0;
};

/// Pure index-map analysis of the fixed conv flattening; never looks at
/// tensor data.
LocalityReport locality_dispersion(std::size_t d_in, std::size_t d_out, std::size_t k);

std::string locality_report_to_json(const LocalityReport& report);

struct BudgetRow {
    LayerSpec spec;
    std::size_t r = 0;
    std::size_t r3 = 0;  // 0 for linear rows
    std::size_t flora_count = 0;
    std::size_t lora_count = 0;
    double ratio = 0.0;  // flora / lora
};

std::vector<BudgetRow> budget_table(const std::vector<LayerSpec>& specs,
                                    const std::vector<std::size_t>& rs,
                                    const std::vector<std::size_t>& r3s);

std::string budget_table_to_csv(const std::vector<BudgetRow>& rows);
std::string budget_table_to_json(const std::vector<BudgetRow>& rows);

}  // namespace flora
