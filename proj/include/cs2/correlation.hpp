#pragma once

#include <cstddef>
#include <vector>

#include "cs2/common.hpp"
#include "cs2/signals.hpp"

namespace cs2 {

// Symmetric Toeplitz sample correlation, stored by its first column (lags).
struct CorrelationMatrix {
    std::size_t order = 0;        // odd n
    std::vector<double> lags;     // r(0)..r(n-1)
    std::size_t sample_count = 0;

    double at(std::size_t i, std::size_t j) const {
        return lags[i > j ? i - j : j - i];
    }
};

// Deterministic lag autocorrelation of the TF coefficients, Phi(tau),
// stored for tau = 0..n-1 (symmetric in the lag).
struct PhiMatrix {
    std::size_t order = 0;
    std::vector<double> values;  // Phi(0)..Phi(n-1)
};

// Biased Toeplitz estimator: divisor N at every lag, which guarantees a
// positive semi-definite matrix (required by the inverse square root).
inline CorrelationMatrix estimate_correlation(const SignalBuffer& x,
                                              std::size_t n,
                                              std::size_t min_data_factor = 10) {
    x.validate("estimate_correlation");
    if (n % 2 == 0)
        fail(ErrorKind::Computation, "estimate_correlation",
             "filter order must be odd");
    const std::size_t N = x.size();
    if (n > N)
        fail(ErrorKind::Computation, "estimate_correlation",
             "filter order exceeds signal length");
    if (N < min_data_factor * n)
        fail(ErrorKind::Computation, "estimate_correlation",
             "signal shorter than " + std::to_string(min_data_factor) +
             "x the filter order; too little data for stable averaging");
    CorrelationMatrix R;
    R.order = n;
    R.sample_count = N;
    R.lags.resize(n);
    for (std::size_t tau = 0; tau < n; ++tau) {
        double acc = 0.0;
        for (std::size_t t = tau; t < N; ++t) acc += x[t] * x[t - tau];
        R.lags[tau] = acc / static_cast<double>(N);
    }
    return R;
}

inline PhiMatrix phi_from_tf(const TransferFunction& h, std::size_t order = 0) {
    h.validate();
    const std::size_t m = h.coefficients.size();
    const std::size_t n = order == 0 ? m : order;
    PhiMatrix phi;
    phi.order = n;
    phi.values.assign(n, 0.0);
    for (std::size_t tau = 0; tau < n && tau < m; ++tau) {
        double acc = 0.0;
        for (std::size_t i = tau; i < m; ++i)
            acc += h.coefficients[i] * h.coefficients[i - tau];
        phi.values[tau] = acc;
    }
    return phi;
}

// Mean power (1/N) sum x^2 == r(0); the power scale the whitening
// transform preserves.
inline double mean_power(const SignalBuffer& x) {
    x.validate("mean_power");
    double acc = 0.0;
    for (double v : x.samples) acc += v * v;
    return acc / static_cast<double>(x.size());
}

}  // namespace cs2
