#pragma once

#include <cstdint>
#include <vector>

#include "fedara/matrix.h"

namespace fedara {

// Sum over clients of ||global - local||_F on one reconstructed delta.
double mag_discrepancy(const Matrix& global_delta, const std::vector<Matrix>& local_deltas);

// Mean cosine similarity between the global delta and each local delta.
// Throws UndefinedMetric when any operand has zero norm; callers report the
// value as missing, never as zero.
double dir_discrepancy(const Matrix& global_delta, const std::vector<Matrix>& local_deltas);

enum class DriftFlavor { kBA, kBEA };

// Parameters of the correlated-factor model: E[b_i . b_j] is tau_b on the
// diagonal and rho_b off it (same for a), and E[e_i^2] = tau_e with e_i
// sampled independently.
struct DriftParams {
    size_t d = 64;
    std::vector<size_t> r_values = {2, 4, 8, 16, 32};
    double tau_b = 1.0;
    double rho_b = 0.8;
    double tau_a = 1.0;
    double rho_a = 0.8;
    double tau_e = 1.0;
    size_t trials = 2000;
    uint64_t seed = 1;

    void validate() const;
};

struct DriftRow {
    DriftFlavor flavor;
    size_t r;
    double mc_mean;
    double std_error;
    double closed_form;
};

struct DriftReport {
    std::vector<DriftRow> rows;
    double slope_ba = 0.0;   // least-squares log-log slope of the MC means
    double slope_bea = 0.0;
};

// Exact expectation of ||Delta W||_F^2 under the sampling model:
// BA -> r tau_b tau_a + r(r-1) rho_b rho_a;  BEA -> r tau_e tau_b tau_a.
double drift_closed_form(const DriftParams& params, DriftFlavor flavor, size_t r);

// Monte Carlo estimate of E||Delta W||_F^2 for both flavors at every r.
// Factors are drawn as shared-mean-plus-residual Gaussians, which realizes
// the correlation model exactly, so the closed forms are exact targets.
DriftReport drift_monte_carlo(const DriftParams& params);

}  // namespace fedara
