#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "prunekit/model_graph.hpp"

namespace prunekit {

struct LayerCost {
    std::string layer;
    std::size_t in_h = 0, in_w = 0;  // spatial input size of the layer
    std::uint64_t params = 0;        // C_out * C_in * k * k
    std::uint64_t mults = 0;         // params * H * W
};

struct CostReport {
    std::vector<LayerCost> rows;  // conv layers only, in chain order
    std::uint64_t total_params = 0;
    std::uint64_t total_mults = 0;
};

/// Exact integer accounting; H,W come from symbolic shape propagation.
CostReport cost_model(const ModelGraph& g);

struct CostComparisonRow {
    std::string layer;
    std::size_t in_h = 0, in_w = 0;
    std::uint64_t base_params = 0, pruned_params = 0;
    double params_reduction = 0.0;  // percent, 2 decimals half-up
    std::uint64_t base_mults = 0, pruned_mults = 0;
    double mults_reduction = 0.0;
};

struct CostComparison {
    std::vector<CostComparisonRow> rows;
    std::uint64_t base_total_params = 0, pruned_total_params = 0;
    double params_reduction = 0.0;
    std::uint64_t base_total_mults = 0, pruned_total_mults = 0;
    double mults_reduction = 0.0;

    // Optional externally published totals to cross-check against; a
    // mismatch is flagged instead of silently adopted.
    std::optional<std::uint64_t> ref_base_params, ref_base_mults;
    std::optional<double> ref_params_reduction, ref_mults_reduction;
    bool ref_params_mismatch = false;
    bool ref_mults_mismatch = false;
    bool ref_params_reduction_mismatch = false;
    bool ref_mults_reduction_mismatch = false;
};

/// Requires identical layer-name sequences in both reports.
CostComparison compare_costs(const CostReport& baseline, const CostReport& pruned);

/// Compares computed overall figures against published ones (totals at
/// 3-significant-digit precision, reductions at 2 decimals) and sets the
/// mismatch flags.
void set_reference_totals(CostComparison& cmp, std::uint64_t ref_base_params,
                          std::uint64_t ref_base_mults, double ref_params_reduction,
                          double ref_mults_reduction);

/// "1.47e+07"-style 3-significant-digit rendering.
std::string format_sig3(std::uint64_t v);

/// Percent value rendered with exactly 2 decimals, half-up.
double round2_half_up(double percent);

void write_cost_csv(const CostComparison& cmp, std::ostream& os);
void write_cost_json(const CostComparison& cmp, std::ostream& os);

}  // namespace prunekit
