#include "prunekit/cost_report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>

#include <json.hpp>

#include "prunekit/errors.hpp"

namespace prunekit {

CostReport cost_model(const ModelGraph& g) {
    g.validate();
    CostReport report;
    Shape3 cur = g.input_dims();
    const auto shapes = g.propagate_shapes();
    const auto& layers = g.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.kind == LayerKind::conv) {
            LayerCost row;
            row.layer = l.name;
            row.in_h = cur[1];
            row.in_w = cur[2];
            row.params = static_cast<std::uint64_t>(l.out_channels) * l.in_channels *
                         l.kernel_size * l.kernel_size;
            row.mults = row.params * cur[1] * cur[2];
            report.total_params += row.params;
            report.total_mults += row.mults;
            report.rows.push_back(std::move(row));
        }
        cur = shapes[i];
    }
    return report;
}

double round2_half_up(double percent) {
    return std::floor(percent * 100.0 + 0.5) / 100.0;
}

namespace {

double reduction_pct(std::uint64_t base, std::uint64_t pruned) {
    if (base == 0) return 0.0;
    return round2_half_up(
        100.0 * (1.0 - static_cast<double>(pruned) / static_cast<double>(base)));
}

}  // namespace

CostComparison compare_costs(const CostReport& baseline, const CostReport& pruned) {
    if (baseline.rows.size() != pruned.rows.size()) {
        throw domain_error("compare_costs: reports have different layer counts");
    }
    CostComparison cmp;
    for (std::size_t i = 0; i < baseline.rows.size(); ++i) {
        const auto& b = baseline.rows[i];
        const auto& p = pruned.rows[i];
        if (b.layer != p.layer) {
            throw domain_error("compare_costs: layer name mismatch at row " +
                               std::to_string(i) + " ('" + b.layer + "' vs '" + p.layer +
                               "')");
        }
        CostComparisonRow row;
        row.layer = b.layer;
        row.in_h = b.in_h;
        row.in_w = b.in_w;
        row.base_params = b.params;
        row.pruned_params = p.params;
        row.params_reduction = reduction_pct(b.params, p.params);
        row.base_mults = b.mults;
        row.pruned_mults = p.mults;
        row.mults_reduction = reduction_pct(b.mults, p.mults);
        cmp.rows.push_back(std::move(row));
    }
    cmp.base_total_params = baseline.total_params;
    cmp.pruned_total_params = pruned.total_params;
    cmp.params_reduction = reduction_pct(baseline.total_params, pruned.total_params);
    cmp.base_total_mults = baseline.total_mults;
    cmp.pruned_total_mults = pruned.total_mults;
    cmp.mults_reduction = reduction_pct(baseline.total_mults, pruned.total_mults);
    return cmp;
}

void set_reference_totals(CostComparison& cmp, std::uint64_t ref_base_params,
                          std::uint64_t ref_base_mults, double ref_params_reduction,
                          double ref_mults_reduction) {
    cmp.ref_base_params = ref_base_params;
    cmp.ref_base_mults = ref_base_mults;
    cmp.ref_params_reduction = ref_params_reduction;
    cmp.ref_mults_reduction = ref_mults_reduction;
    cmp.ref_params_mismatch =
        format_sig3(cmp.base_total_params) != format_sig3(ref_base_params);
    cmp.ref_mults_mismatch =
        format_sig3(cmp.base_total_mults) != format_sig3(ref_base_mults);
    cmp.ref_params_reduction_mismatch =
        std::abs(cmp.params_reduction - ref_params_reduction) > 0.005;
    cmp.ref_mults_reduction_mismatch =
        std::abs(cmp.mults_reduction - ref_mults_reduction) > 0.005;
}

std::string format_sig3(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", static_cast<double>(v));
    return buf;
}

namespace {

std::string pct2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

void write_cost_csv(const CostComparison& cmp, std::ostream& os) {
    os << "layer,input_size,baseline_params,pruned_params,params_reduction,"
          "baseline_mults,pruned_mults,mults_reduction\n";
    for (const auto& r : cmp.rows) {
        os << r.layer << ',' << r.in_h << 'x' << r.in_w << ',' << r.base_params << ','
           << r.pruned_params << ',' << pct2(r.params_reduction) << ',' << r.base_mults
           << ',' << r.pruned_mults << ',' << pct2(r.mults_reduction) << '\n';
    }
    os << "overall,-," << cmp.base_total_params << ',' << cmp.pruned_total_params << ','
       << pct2(cmp.params_reduction) << ',' << cmp.base_total_mults << ','
       << cmp.pruned_total_mults << ',' << pct2(cmp.mults_reduction) << '\n';
    if (cmp.ref_base_params && cmp.ref_params_mismatch) {
        os << "# reference-discrepancy: published baseline params "
           << format_sig3(*cmp.ref_base_params) << " vs computed "
           << format_sig3(cmp.base_total_params) << '\n';
    }
    if (cmp.ref_base_mults && cmp.ref_mults_mismatch) {
        os << "# reference-discrepancy: published baseline mults "
           << format_sig3(*cmp.ref_base_mults) << " vs computed "
           << format_sig3(cmp.base_total_mults) << '\n';
    }
}

void write_cost_json(const CostComparison& cmp, std::ostream& os) {
    nlohmann::json doc;
    doc["rows"] = nlohmann::json::array();
    for (const auto& r : cmp.rows) {
        doc["rows"].push_back({{"layer", r.layer},
                               {"input_size", {r.in_h, r.in_w}},
                               {"baseline_params", r.base_params},
                               {"pruned_params", r.pruned_params},
                               {"params_reduction", r.params_reduction},
                               {"baseline_mults", r.base_mults},
                               {"pruned_mults", r.pruned_mults},
                               {"mults_reduction", r.mults_reduction}});
    }
    doc["overall"] = {{"baseline_params", cmp.base_total_params},
                      {"pruned_params", cmp.pruned_total_params},
                      {"params_reduction", cmp.params_reduction},
                      {"baseline_mults", cmp.base_total_mults},
                      {"pruned_mults", cmp.pruned_total_mults},
                      {"mults_reduction", cmp.mults_reduction}};
    if (cmp.ref_base_params) {
        doc["reference"] = {{"baseline_params", *cmp.ref_base_params},
                            {"baseline_mults", *cmp.ref_base_mults},
                            {"params_reduction", *cmp.ref_params_reduction},
                            {"mults_reduction", *cmp.ref_mults_reduction},
                            {"params_mismatch", cmp.ref_params_mismatch},
                            {"mults_mismatch", cmp.ref_mults_mismatch},
                            {"params_reduction_mismatch", cmp.ref_params_reduction_mismatch},
                            {"mults_reduction_mismatch", cmp.ref_mults_reduction_mismatch}};
    }
    os << doc.dump(2) << "\n";
}

}  // namespace prunekit
