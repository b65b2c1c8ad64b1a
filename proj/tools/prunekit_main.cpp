// Command-line front end: capture / importance / prune / report / eval
// plus a make-nin generator for the stock test architecture.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "prunekit/cost_report.hpp"
#include "prunekit/data_ingest.hpp"
#include "prunekit/errors.hpp"
#include "prunekit/model_graph.hpp"
#include "prunekit/nin.hpp"
#include "prunekit/prune_fold.hpp"
#include "prunekit/sparse_select.hpp"
#include "prunekit/version.hpp"

using nlohmann::json;
using namespace prunekit;

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Every run records its resolved parameters next to its primary output so
// reruns are reproducible (outputs are bit-identical modulo the timestamp).
void write_run_manifest(const std::string& out_path, const std::string& command,
                        json params) {
    json doc;
    doc["command"] = command;
    doc["params"] = std::move(params);
    doc["version"] = kVersion;
    doc["timestamp"] = iso_timestamp();
    std::ofstream os(out_path + ".manifest.json");
    if (!os) throw format_error(out_path + ".manifest.json: cannot open for writing");
    os << doc.dump(2) << "\n";
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw format_error(path + ": cannot open config");
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw format_error(path + ": " + e.what());
    }
}

// Config file supplies any flag not given on the command line.
template <typename T>
void merge(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
    if (opt->count() == 0 && cfg.contains(key)) value = cfg[key].get<T>();
}

std::vector<Tensor> preprocess_images(const std::vector<ImageRecord>& records,
                                      const std::string& mode, std::size_t zca_sample,
                                      float zca_epsilon_rel, std::uint64_t seed) {
    std::vector<Tensor> images;
    images.reserve(records.size());
    if (mode == "none") {
        for (const auto& r : records) images.push_back(r.pixels);
        return images;
    }
    for (const auto& r : records) images.push_back(gcn(r.pixels));
    if (mode == "gcn") return images;
    if (mode != "gcn-zca") {
        throw domain_error("unknown preprocess mode '" + mode + "'");
    }
    // fit the whitening on a seeded subsample of the normalized images
    const std::size_t m = std::min(zca_sample, images.size());
    std::vector<std::size_t> idx(images.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed ^ 0x5a5a5a5aULL);
    for (std::size_t i = 0; i < m; ++i) {
        std::swap(idx[i], idx[i + static_cast<std::size_t>(rng() % (idx.size() - i))]);
    }
    std::vector<Tensor> fit_set;
    fit_set.reserve(m);
    for (std::size_t i = 0; i < m; ++i) fit_set.push_back(images[idx[i]]);
    const ZcaTransform zca = fit_zca(fit_set, zca_epsilon_rel, /*relative=*/true);
    for (auto& img : images) img = apply_zca(zca, img);
    return images;
}

struct SolverFlags {
    float lambda_rel = 0.05f;
    float rho = 1.0f;
    int max_iters = 500;
    float tol_primal = 1e-5f;
    float tol_dual = 1e-5f;

    SolverConfig to_config() const {
        SolverConfig cfg;
        cfg.lambda_rel = lambda_rel;
        cfg.rho = rho;
        cfg.max_iters = max_iters;
        cfg.tol_primal = tol_primal;
        cfg.tol_dual = tol_dual;
        return cfg;
    }

    void add_to(CLI::App* sub) {
        sub->add_option("--lambda-rel", lambda_rel, "group penalty as fraction of the Gram row-norm max");
        sub->add_option("--rho", rho, "ADMM penalty");
        sub->add_option("--max-iters", max_iters, "iteration cap");
        sub->add_option("--tol-primal", tol_primal, "scaled primal residual tolerance");
        sub->add_option("--tol-dual", tol_dual, "scaled dual residual tolerance");
    }

    json to_json() const {
        return {{"lambda_rel", lambda_rel},
                {"rho", rho},
                {"max_iters", max_iters},
                {"tol_primal", tol_primal},
                {"tol_dual", tol_dual}};
    }
};

int run(int argc, char** argv) {
    CLI::App app{"channel pruning toolkit"};
    app.require_subcommand(1);

    // ---- capture ----
    auto* cap = app.add_subcommand("capture", "sample images and capture a layer's activations");
    std::string cap_model, cap_data, cap_layer, cap_out, cap_config;
    std::string cap_preprocess = "gcn-zca";
    std::size_t cap_n = 512, cap_zca_sample = 2000;
    std::uint64_t cap_seed = 42;
    float cap_zca_eps = 0.01f;
    auto* cap_model_o = cap->add_option("--model", cap_model, "model manifest path");
    auto* cap_data_o = cap->add_option("--data", cap_data, "dataset binary file");
    auto* cap_layer_o = cap->add_option("--layer", cap_layer, "conv block to capture");
    auto* cap_n_o = cap->add_option("--n", cap_n, "images to sample");
    auto* cap_seed_o = cap->add_option("--seed", cap_seed, "sampling seed");
    auto* cap_out_o = cap->add_option("--out", cap_out, "output .sst path");
    auto* cap_pre_o = cap->add_option("--preprocess", cap_preprocess, "none|gcn|gcn-zca");
    cap->add_option("--zca-sample", cap_zca_sample, "images used to fit the whitening");
    cap->add_option("--zca-epsilon-rel", cap_zca_eps, "whitening epsilon, relative to the mean eigenvalue");
    cap->add_option("--config", cap_config, "JSON config supplying missing flags");

    // ---- importance ----
    auto* imp = app.add_subcommand("importance", "rank channels of a captured data matrix");
    std::string imp_matrix, imp_out, imp_config;
    SolverFlags imp_solver;
    auto* imp_matrix_o = imp->add_option("--matrix", imp_matrix, "data matrix .sst");
    auto* imp_out_o = imp->add_option("--out-csv", imp_out, "output CSV path");
    imp_solver.add_to(imp);
    imp->add_option("--config", imp_config, "JSON config supplying missing flags");

    // ---- prune ----
    auto* prn = app.add_subcommand("prune", "prune a layer and fold the repair into its consumer");
    std::string prn_model, prn_matrix, prn_layer, prn_mode = "bottom";
    std::string prn_out_model, prn_out_json, prn_config;
    int prn_k = 0;
    SolverFlags prn_solver;
    auto* prn_model_o = prn->add_option("--model", prn_model, "model manifest path");
    auto* prn_matrix_o = prn->add_option("--matrix", prn_matrix, "data matrix .sst");
    auto* prn_layer_o = prn->add_option("--layer", prn_layer, "conv block to prune");
    auto* prn_k_o = prn->add_option("--k", prn_k, "channels to remove");
    auto* prn_mode_o = prn->add_option("--mode", prn_mode, "bottom|top");
    auto* prn_outm_o = prn->add_option("--out-model", prn_out_model, "pruned model manifest path");
    auto* prn_outj_o = prn->add_option("--out-json", prn_out_json, "summary JSON path");
    prn_solver.add_to(prn);
    prn->add_option("--config", prn_config, "JSON config supplying missing flags");

    // ---- report ----
    auto* rep = app.add_subcommand("report", "exact parameter/multiplication accounting");
    std::string rep_base, rep_pruned, rep_format = "csv", rep_out, rep_config;
    bool rep_nin_ref = false;
    auto* rep_base_o = rep->add_option("--baseline", rep_base, "baseline model manifest");
    auto* rep_pruned_o = rep->add_option("--pruned", rep_pruned, "pruned model manifest");
    auto* rep_fmt_o = rep->add_option("--format", rep_format, "csv|json");
    rep->add_option("--out", rep_out, "output path (default stdout)");
    rep->add_flag("--nin-reference", rep_nin_ref,
                  "cross-check overall rows against the published figures for the stock NIN-style model");
    rep->add_option("--config", rep_config, "JSON config supplying missing flags");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "classification accuracy over a dataset");
    std::string ev_model, ev_data, ev_preprocess = "gcn-zca", ev_config;
    std::size_t ev_limit = 0, ev_zca_sample = 2000;
    float ev_zca_eps = 0.01f;
    auto* ev_model_o = ev->add_option("--model", ev_model, "model manifest path");
    auto* ev_data_o = ev->add_option("--data", ev_data, "dataset binary file");
    auto* ev_pre_o = ev->add_option("--preprocess", ev_preprocess, "none|gcn|gcn-zca");
    ev->add_option("--limit", ev_limit, "evaluate only the first N records (0 = all)");
    ev->add_option("--zca-sample", ev_zca_sample, "images used to fit the whitening");
    ev->add_option("--zca-epsilon-rel", ev_zca_eps, "whitening epsilon, relative to the mean eigenvalue");
    ev->add_option("--config", ev_config, "JSON config supplying missing flags");

    // ---- make-nin ----
    auto* mk = app.add_subcommand("make-nin", "write the NIN-style test model (random weights)");
    std::string mk_out;
    std::uint64_t mk_seed = 42;
    mk->add_option("--out", mk_out, "output manifest path")->required();
    mk->add_option("--seed", mk_seed, "weight seed");

    app.parse(argc, argv);

    if (cap->parsed()) {
        const json cfg = load_config(cap_config);
        merge(cap_model_o, cfg, "model", cap_model);
        merge(cap_data_o, cfg, "data", cap_data);
        merge(cap_layer_o, cfg, "layer", cap_layer);
        merge(cap_n_o, cfg, "n", cap_n);
        merge(cap_seed_o, cfg, "seed", cap_seed);
        merge(cap_out_o, cfg, "out", cap_out);
        merge(cap_pre_o, cfg, "preprocess", cap_preprocess);
        if (cap_model.empty() || cap_data.empty() || cap_layer.empty() || cap_out.empty()) {
            throw domain_error("capture: --model, --data, --layer and --out are required");
        }
        const ModelGraph g = load_model(cap_model);
        const auto records = read_cifar100(cap_data);
        const auto images = preprocess_images(records, cap_preprocess, cap_zca_sample,
                                              cap_zca_eps, cap_seed);
        const DataMatrix dm = build_data_matrix(g, cap_layer, images, cap_n, cap_seed);
        save_data_matrix(cap_out, dm);
        write_run_manifest(cap_out, "capture",
                           {{"model", cap_model},
                            {"data", cap_data},
                            {"layer", cap_layer},
                            {"n", cap_n},
                            {"seed", cap_seed},
                            {"preprocess", cap_preprocess},
                            {"zca_sample", cap_zca_sample},
                            {"zca_epsilon_rel", cap_zca_eps},
                            {"out", cap_out}});
        std::cout << "captured " << dm.values.rows() << "x" << dm.values.cols() << " at '"
                  << cap_layer << "' -> " << cap_out << "\n";
    } else if (imp->parsed()) {
        const json cfg = load_config(imp_config);
        merge(imp_matrix_o, cfg, "matrix", imp_matrix);
        merge(imp_out_o, cfg, "out_csv", imp_out);
        if (imp_matrix.empty() || imp_out.empty()) {
            throw domain_error("importance: --matrix and --out-csv are required");
        }
        const DataMatrix dm = load_data_matrix(imp_matrix);
        const auto coeffs = solve_group_sparse(dm, imp_solver.to_config());
        const auto report = importance_report(coeffs, dm.layer);
        std::ofstream os(imp_out);
        if (!os) throw format_error(imp_out + ": cannot open for writing");
        write_importance_csv(report, os);
        json params = imp_solver.to_json();
        params["matrix"] = imp_matrix;
        params["out_csv"] = imp_out;
        params["seed"] = dm.seed;
        write_run_manifest(imp_out, "importance", params);
        std::cout << "importance for '" << dm.layer << "' (" << coeffs.iters_used
                  << " iters, " << (coeffs.converged ? "converged" : "iteration cap")
                  << ") -> " << imp_out << "\n";
    } else if (prn->parsed()) {
        const json cfg = load_config(prn_config);
        merge(prn_model_o, cfg, "model", prn_model);
        merge(prn_matrix_o, cfg, "matrix", prn_matrix);
        merge(prn_layer_o, cfg, "layer", prn_layer);
        merge(prn_k_o, cfg, "k", prn_k);
        merge(prn_mode_o, cfg, "mode", prn_mode);
        merge(prn_outm_o, cfg, "out_model", prn_out_model);
        merge(prn_outj_o, cfg, "out_json", prn_out_json);
        if (prn_model.empty() || prn_matrix.empty() || prn_layer.empty() ||
            prn_out_model.empty() || prn_out_json.empty()) {
            throw domain_error("prune: --model, --matrix, --layer, --out-model and "
                               "--out-json are required");
        }
        const ModelGraph g = load_model(prn_model);
        const DataMatrix dm = load_data_matrix(prn_matrix);
        const auto& spec_layer = g.layer(prn_layer);
        if (prn_k < 1 || prn_k >= spec_layer.out_channels) {
            throw domain_error("prune: --k must be in [1, " +
                               std::to_string(spec_layer.out_channels) + ")");
        }
        const auto coeffs = solve_group_sparse(dm, prn_solver.to_config());
        PruneSpec spec;
        spec.layer = prn_layer;
        spec.k = prn_k;
        spec.mode = prune_mode_from_string(prn_mode);
        spec.report = importance_report(coeffs, dm.layer);
        const PruneResult result = prune_layer(g, spec, dm);
        save_model(result.model, prn_out_model);
        std::ofstream js(prn_out_json);
        if (!js) throw format_error(prn_out_json + ": cannot open for writing");
        write_prune_summary_json(result, spec, prn_solver.lambda_rel, dm.seed, js);
        json params = prn_solver.to_json();
        params["model"] = prn_model;
        params["matrix"] = prn_matrix;
        params["layer"] = prn_layer;
        params["k"] = prn_k;
        params["mode"] = prn_mode;
        params["out_model"] = prn_out_model;
        params["out_json"] = prn_out_json;
        params["seed"] = dm.seed;
        write_run_manifest(prn_out_model, "prune", params);
        std::cout << "pruned '" << prn_layer << "' by " << prn_k << " (" << prn_mode
                  << "), recon_error " << result.recon_error << " -> " << prn_out_model
                  << "\n";
    } else if (rep->parsed()) {
        const json cfg = load_config(rep_config);
        merge(rep_base_o, cfg, "baseline", rep_base);
        merge(rep_pruned_o, cfg, "pruned", rep_pruned);
        merge(rep_fmt_o, cfg, "format", rep_format);
        if (rep_base.empty() || rep_pruned.empty()) {
            throw domain_error("report: --baseline and --pruned are required");
        }
        if (rep_format != "csv" && rep_format != "json") {
            throw domain_error("report: --format must be csv or json");
        }
        const CostReport base = cost_model(load_model(rep_base));
        const CostReport pruned = cost_model(load_model(rep_pruned));
        CostComparison cmp = compare_costs(base, pruned);
        if (rep_nin_ref) {
            set_reference_totals(cmp, kNinPublishedBaselineParams,
                                 kNinPublishedBaselineMults, kNinPublishedParamsReduction,
                                 kNinPublishedMultsReduction);
        }
        std::ofstream file;
        std::ostream* os = &std::cout;
        if (!rep_out.empty()) {
            file.open(rep_out);
            if (!file) throw format_error(rep_out + ": cannot open for writing");
            os = &file;
        }
        if (rep_format == "csv") {
            write_cost_csv(cmp, *os);
        } else {
            write_cost_json(cmp, *os);
        }
        if (!rep_out.empty()) {
            write_run_manifest(rep_out, "report",
                               {{"baseline", rep_base},
                                {"pruned", rep_pruned},
                                {"format", rep_format},
                                {"nin_reference", rep_nin_ref},
                                {"out", rep_out}});
        }
    } else if (ev->parsed()) {
        const json cfg = load_config(ev_config);
        merge(ev_model_o, cfg, "model", ev_model);
        merge(ev_data_o, cfg, "data", ev_data);
        merge(ev_pre_o, cfg, "preprocess", ev_preprocess);
        if (ev_model.empty() || ev_data.empty()) {
            throw domain_error("eval: --model and --data are required");
        }
        const ModelGraph g = load_model(ev_model);
        auto records = read_cifar100(ev_data);
        if (ev_limit > 0 && records.size() > ev_limit) records.resize(ev_limit);
        const auto images =
            preprocess_images(records, ev_preprocess, ev_zca_sample, ev_zca_eps, 42);
        std::vector<std::pair<Tensor, int>> dataset;
        dataset.reserve(images.size());
        for (std::size_t i = 0; i < images.size(); ++i) {
            dataset.emplace_back(images[i], records[i].fine_label);
        }
        const double acc = eval_classifier(g, dataset);
        std::cout << "accuracy " << acc << "\n";
    } else if (mk->parsed()) {
        const ModelGraph g = make_nin_style_graph(mk_seed);
        save_model(g, mk_out);
        write_run_manifest(mk_out, "make-nin", {{"out", mk_out}, {"seed", mk_seed}});
        std::cout << "wrote NIN-style model -> " << mk_out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ParseError& e) {
        CLI::App dummy;
        dummy.exit(e);  // prints the message / help
        return e.get_exit_code() == 0 ? 0 : 1;
    } catch (const format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const shape_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
