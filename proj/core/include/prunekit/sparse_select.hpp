#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "prunekit/data_ingest.hpp"
#include "prunekit/tensor.hpp"

namespace prunekit {

struct SolverConfig {
    float lambda_rel = 0.05f;  // fraction of lambda_ref (max Gram row norm)
    float lambda_abs = 0.0f;   // > 0 overrides lambda_rel with an absolute value
    float rho = 1.0f;
    int max_iters = 500;
    float tol_primal = 1e-5f;
    float tol_dual = 1e-5f;

    void check() const;
};

struct ReconstructionCoefficients {
    Matrix u;  // C x C, columns sum to 1
    std::vector<float> objective_trace;
    bool converged = false;
    int iters_used = 0;
};

/// ADMM for  min 1/2 ||D - D U||_F^2 + lambda * sum_i ||u^i||_2
///           s.t. 1^T U = 1^T
/// Works entirely on the Gram matrix D^T D (f64); the column-sum
/// constraint is enforced exactly inside the U-update's KKT system, the
/// Z-update is a row-wise group soft threshold.
ReconstructionCoefficients solve_group_sparse(const DataMatrix& d,
                                              const SolverConfig& cfg);

struct ImportanceReport {
    std::string layer;
    std::vector<float> factors;  // ||u^i||_2 per channel
    std::vector<int> ranking;    // descending factor, ties -> lower index first
};

ImportanceReport importance_report(const ReconstructionCoefficients& coeffs,
                                   const std::string& layer);

/// CSV: header "channel,factor,rank", one row per channel.
void write_importance_csv(const ImportanceReport& report, std::ostream& os);

}  // namespace prunekit
