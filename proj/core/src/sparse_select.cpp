#include "prunekit/sparse_select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prunekit/errors.hpp"

namespace prunekit {

void SolverConfig::check() const {
    if (lambda_abs <= 0.0f && (lambda_rel <= 0.0f || lambda_rel > 1.0f)) {
        throw domain_error("SolverConfig: lambda_rel must be in (0,1]");
    }
    if (rho <= 0.0f) throw domain_error("SolverConfig: rho must be > 0");
    if (max_iters < 1) throw domain_error("SolverConfig: max_iters must be >= 1");
    if (tol_primal <= 0.0f || tol_dual <= 0.0f) {
        throw domain_error("SolverConfig: tolerances must be > 0");
    }
}

namespace {

// dense f64 square-matrix helpers, row-major
using DVec = std::vector<double>;

void cholesky(DVec& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (d <= 0.0 || !std::isfinite(d)) {
            throw numeric_error("solve_group_sparse: KKT system not positive definite");
        }
        const double dj = std::sqrt(d);
        a[j * n + j] = dj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / dj;
        }
    }
}

// solves L L^T x = b in place
void chol_solve(const DVec& l, std::size_t n, double* x) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
        x[i] = s / l[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * x[k];
        x[i] = s / l[i * n + i];
    }
}

double frob(const DVec& m) {
    double s = 0.0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
}

}  // namespace

ReconstructionCoefficients solve_group_sparse(const DataMatrix& d,
                                              const SolverConfig& cfg) {
    cfg.check();
    const std::size_t rows = d.values.rows();
    const std::size_t c = d.values.cols();
    if (rows < c) {
        throw domain_error("solve_group_sparse: data matrix has fewer rows (" +
                           std::to_string(rows) + ") than channels (" +
                           std::to_string(c) + "); sample more images");
    }

    // Gram matrix, f64 accumulation; all iterations run in Gram form
    DVec g(c * c, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* row = d.values.data() + r * c;
        for (std::size_t i = 0; i < c; ++i) {
            const double vi = row[i];
            for (std::size_t j = i; j < c; ++j) g[i * c + j] += vi * row[j];
        }
    }
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < i; ++j) g[i * c + j] = g[j * c + i];

    double lambda_ref = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += g[i * c + j] * g[i * c + j];
        lambda_ref = std::max(lambda_ref, std::sqrt(s));
    }
    const double lambda =
        cfg.lambda_abs > 0.0f ? cfg.lambda_abs : cfg.lambda_rel * lambda_ref;
    const double rho = cfg.rho;

    double trace_g = 0.0;
    for (std::size_t i = 0; i < c; ++i) trace_g += g[i * c + i];

    // factor A = G + rho*I once
    DVec a = g;
    for (std::size_t i = 0; i < c; ++i) a[i * c + i] += rho;
    cholesky(a, c);

    // w = A^-1 1, s = 1^T w  (for the affine-constraint KKT correction)
    DVec w(c, 1.0);
    chol_solve(a, c, w.data());
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

    DVec u(c * c, 0.0), z(c * c, 0.0), y(c * c, 0.0);
    for (std::size_t i = 0; i < c; ++i) u[i * c + i] = z[i * c + i] = 1.0;

    ReconstructionCoefficients out;
    DVec b(c * c), col(c), zprev(c * c), gu(c * c);

    auto objective = [&](const DVec& uu) {
        // 1/2 (tr G - 2 tr(G U) + tr(U^T G U)) + lambda * sum_i ||u^i||
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < c; ++k) s += g[i * c + k] * uu[k * c + j];
                gu[i * c + j] = s;
            }
        }
        double tr_gu = 0.0, tr_ugu = 0.0;
        for (std::size_t i = 0; i < c; ++i) tr_gu += gu[i * c + i];
        for (std::size_t i = 0; i < c * c; ++i) tr_ugu += uu[i] * gu[i];
        double group = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += uu[i * c + j] * uu[i * c + j];
            group += std::sqrt(s);
        }
        return 0.5 * (trace_g - 2.0 * tr_gu + tr_ugu) + lambda * group;
    };

    bool converged = false;
    int iters = 0;
    for (int it = 0; it < cfg.max_iters; ++it) {
        iters = it + 1;

        // U-update: (G + rho I) U = G + rho (Z - Y) - 1 mu^T, 1^T U = 1^T
        for (std::size_t i = 0; i < c * c; ++i) b[i] = g[i] + rho * (z[i] - y[i]);
        for (std::size_t j = 0; j < c; ++j) {
            for (std::size_t i = 0; i < c; ++i) col[i] = b[i * c + j];
            chol_solve(a, c, col.data());
            double colsum = std::accumulate(col.begin(), col.end(), 0.0);
            const double mu = (colsum - 1.0) / wsum;
            for (std::size_t i = 0; i < c; ++i) u[i * c + j] = col[i] - mu * w[i];
        }

        // Z-update: row-wise group soft threshold of V = U + Y
        zprev = z;
        for (std::size_t i = 0; i < c; ++i) {
            double norm = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double v = u[i * c + j] + y[i * c + j];
                norm += v * v;
            }
            norm = std::sqrt(norm);
            const double shrink =
                norm > 0.0 ? std::max(0.0, 1.0 - (lambda / rho) / norm) : 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                z[i * c + j] = shrink * (u[i * c + j] + y[i * c + j]);
            }
        }

        // dual update
        for (std::size_t i = 0; i < c * c; ++i) y[i] += u[i] - z[i];

        const double obj = objective(u);
        if (!std::isfinite(obj)) {
            throw numeric_error("solve_group_sparse: diverged (non-finite objective); "
                                "try a different rho");
        }
        out.objective_trace.push_back(static_cast<float>(obj));

        // scaled residuals
        DVec r(c * c);
        for (std::size_t i = 0; i < c * c; ++i) r[i] = u[i] - z[i];
        double norm_u = frob(u), norm_z = frob(z), norm_y = frob(y);
        const double primal = frob(r) / std::max({norm_u, norm_z, 1e-12});
        DVec sdiff(c * c);
        for (std::size_t i = 0; i < c * c; ++i) sdiff[i] = rho * (z[i] - zprev[i]);
        const double dual = frob(sdiff) / std::max(rho * norm_y, 1e-12);
        if (primal < cfg.tol_primal && dual < cfg.tol_dual) {
            converged = true;
            break;
        }
    }

    out.converged = converged;
    out.iters_used = iters;
    out.u = Matrix(c, c);
    for (std::size_t i = 0; i < c * c; ++i) {
        if (!std::isfinite(u[i])) {
            throw numeric_error("solve_group_sparse: non-finite coefficients; "
                                "try a different rho");
        }
        out.u.data()[i] = static_cast<float>(u[i]);
    }
    return out;
}

ImportanceReport importance_report(const ReconstructionCoefficients& coeffs,
                                   const std::string& layer) {
    const std::size_t c = coeffs.u.rows();
    ImportanceReport rep;
    rep.layer = layer;
    rep.factors.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double v = coeffs.u(i, j);
            s += v * v;
        }
        rep.factors[i] = static_cast<float>(std::sqrt(s));
    }
    rep.ranking.resize(c);
    std::iota(rep.ranking.begin(), rep.ranking.end(), 0);
    std::stable_sort(rep.ranking.begin(), rep.ranking.end(), [&](int a, int b) {
        if (rep.factors[a] != rep.factors[b]) return rep.factors[a] > rep.factors[b];
        return a < b;
    });
    return rep;
}

void write_importance_csv(const ImportanceReport& report, std::ostream& os) {
    std::vector<int> rank_of(report.factors.size());
    for (std::size_t r = 0; r < report.ranking.size(); ++r) {
        rank_of[report.ranking[r]] = static_cast<int>(r);
    }
    os << "channel,factor,rank\n";
    for (std::size_t i = 0; i < report.factors.size(); ++i) {
        os << i << ',' << report.factors[i] << ',' << rank_of[i] << '\n';
    }
}

}  // namespace prunekit
