#include "fedara/metrics.h"

#include <cmath>

#include "fedara/error.h"
#include "fedara/rng.h"

namespace fedara {

double mag_discrepancy(const Matrix& global_delta, const std::vector<Matrix>& local_deltas) {
    FED_CHECK(!local_deltas.empty(), "mag_discrepancy needs at least one local model");
    double total = 0.0;
    for (const Matrix& local : local_deltas) {
        FED_CHECK(local.same_shape(global_delta), "mag_discrepancy shape mismatch");
        total += frobenius_norm(sub(global_delta, local));
    }
    return total;
}

double dir_discrepancy(const Matrix& global_delta, const std::vector<Matrix>& local_deltas) {
    FED_CHECK(!local_deltas.empty(), "dir_discrepancy needs at least one local model");
    double g_norm = frobenius_norm(global_delta);
    if (g_norm == 0.0) {
        throw UndefinedMetric("dir_discrepancy: global delta has zero norm");
    }
    double total = 0.0;
    for (const Matrix& local : local_deltas) {
        FED_CHECK(local.same_shape(global_delta), "dir_discrepancy shape mismatch");
        double l_norm = frobenius_norm(local);
        if (l_norm == 0.0) {
            throw UndefinedMetric("dir_discrepancy: local delta has zero norm");
        }
        total += frobenius_inner(global_delta, local) / (g_norm * l_norm);
    }
    return total / static_cast<double>(local_deltas.size());
}

void DriftParams::validate() const {
    FED_CHECK(d >= 1, "drift dimension must be positive");
    FED_CHECK(!r_values.empty(), "drift needs at least one rank");
    for (size_t r : r_values) {
        FED_CHECK(r >= 1, "drift ranks must be positive");
    }
    FED_CHECK(rho_b >= 0.0 && rho_b < tau_b, "need 0 <= rho_b < tau_b");
    FED_CHECK(rho_a >= 0.0 && rho_a < tau_a, "need 0 <= rho_a < tau_a");
    FED_CHECK(tau_e > 0.0, "tau_e must be positive");
    FED_CHECK(trials >= 100, "drift needs at least 100 trials");
}

double drift_closed_form(const DriftParams& params, DriftFlavor flavor, size_t r) {
    params.validate();
    double rd = static_cast<double>(r);
    if (flavor == DriftFlavor::kBA) {
        return rd * params.tau_b * params.tau_a + rd * (rd - 1.0) * params.rho_b * params.rho_a;
    }
    // independent e makes every cross term vanish exactly
    return rd * params.tau_e * params.tau_b * params.tau_a;
}

namespace {

double loglog_slope(const std::vector<double>& r, const std::vector<double>& means) {
    double n = static_cast<double>(r.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < r.size(); ++i) {
        double x = std::log(r[i]);
        double y = std::log(means[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

DriftReport drift_monte_carlo(const DriftParams& params) {
    params.validate();
    Rng rng = Rng(params.seed).fork("drift");

    size_t d = params.d;
    double sd_mu_b = std::sqrt(params.rho_b / static_cast<double>(d));
    double sd_res_b = std::sqrt((params.tau_b - params.rho_b) / static_cast<double>(d));
    double sd_mu_a = std::sqrt(params.rho_a / static_cast<double>(d));
    double sd_res_a = std::sqrt((params.tau_a - params.rho_a) / static_cast<double>(d));
    double sd_e = std::sqrt(params.tau_e);

    DriftReport report;
    std::vector<double> rs, means_ba, means_bea;
    for (size_t r : params.r_values) {
        double sum_ba = 0.0, sumsq_ba = 0.0;
        double sum_bea = 0.0, sumsq_bea = 0.0;
        std::vector<double> mu_b(d), mu_a(d);
        Matrix b(r, d), a(r, d);
        std::vector<double> e(r);
        for (size_t trial = 0; trial < params.trials; ++trial) {
            for (size_t j = 0; j < d; ++j) {
                mu_b[j] = sd_mu_b > 0.0 ? sd_mu_b * rng.next_gaussian() : 0.0;
                mu_a[j] = sd_mu_a > 0.0 ? sd_mu_a * rng.next_gaussian() : 0.0;
            }
            for (size_t i = 0; i < r; ++i) {
                for (size_t j = 0; j < d; ++j) {
                    b.at(i, j) = mu_b[j] + sd_res_b * rng.next_gaussian();
                    a.at(i, j) = mu_a[j] + sd_res_a * rng.next_gaussian();
                }
                e[i] = sd_e * rng.next_gaussian();
            }
            // ||DW||_F^2 = sum_ij <T_i, T_j> with <T_i, T_j> =
            // (b_i.b_j)(a_i.a_j), scaled by e_i e_j for the BEA flavor.
            double ba = 0.0, bea = 0.0;
            for (size_t i = 0; i < r; ++i) {
                for (size_t j = 0; j < r; ++j) {
                    double gb = 0.0, ga = 0.0;
                    for (size_t k = 0; k < d; ++k) {
                        gb += b.at(i, k) * b.at(j, k);
                        ga += a.at(i, k) * a.at(j, k);
                    }
                    double term = gb * ga;
                    ba += term;
                    bea += e[i] * e[j] * term;
                }
            }
            sum_ba += ba;
            sumsq_ba += ba * ba;
            sum_bea += bea;
            sumsq_bea += bea * bea;
        }
        double n = static_cast<double>(params.trials);
        double mean_ba = sum_ba / n;
        double mean_bea = sum_bea / n;
        double var_ba = (sumsq_ba / n - mean_ba * mean_ba) * n / (n - 1.0);
        double var_bea = (sumsq_bea / n - mean_bea * mean_bea) * n / (n - 1.0);
        report.rows.push_back({DriftFlavor::kBA, r, mean_ba, std::sqrt(var_ba / n),
                               drift_closed_form(params, DriftFlavor::kBA, r)});
        report.rows.push_back({DriftFlavor::kBEA, r, mean_bea, std::sqrt(var_bea / n),
                               drift_closed_form(params, DriftFlavor::kBEA, r)});
        rs.push_back(static_cast<double>(r));
        means_ba.push_back(mean_ba);
        means_bea.push_back(mean_bea);
    }
    if (rs.size() >= 2) {
        report.slope_ba = loglog_slope(rs, means_ba);
        report.slope_bea = loglog_slope(rs, means_bea);
    }
    return report;
}

}  // namespace fedara
