#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cs2/common.hpp"
#include "cs2/correlation.hpp"

namespace cs2 {

constexpr double kDefaultEigenFloor = 1e-10;

struct WhiteningTransform {
    std::size_t order = 0;   // odd n
    Eigen::MatrixXd matrix;  // symmetric G
    double scale = 0.0;      // sqrt(r(0))
};

// Zero-phase FIR deconvolution filter: the central column of G.
struct DeconvFilter {
    std::vector<double> coefficients;  // n odd
    std::size_t center_index = 0;      // (n-1)/2

    void validate() const {
        if (coefficients.empty() || coefficients.size() % 2 == 0)
            fail(ErrorKind::Computation, "deconv_filter",
                 "filter length must be odd");
        bool any = false;
        for (double c : coefficients) {
            if (!std::isfinite(c))
                fail(ErrorKind::Computation, "deconv_filter",
                     "non-finite coefficient");
            if (c != 0.0) any = true;
        }
        if (!any)
            fail(ErrorKind::Computation, "deconv_filter",
                 "all coefficients are zero");
    }
};

// Symmetric inverse square root via spectral decomposition, with eigenvalues
// clamped from below at eigen_floor * lambda_max to regularize
// near-singular estimates.
inline Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& M,
                                        double eigen_floor = kDefaultEigenFloor) {
    if (M.rows() != M.cols() || M.rows() < 1)
        fail(ErrorKind::Computation, "inverse_sqrt_psd",
             "matrix must be square and non-empty");
    const double norm = M.cwiseAbs().maxCoeff();
    const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (norm > 0.0 && asym > 1e-10 * norm)
        fail(ErrorKind::Computation, "inverse_sqrt_psd",
             "matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success)
        fail(ErrorKind::Computation, "inverse_sqrt_psd",
             "eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues();
    const double lam_max = lam.maxCoeff();
    if (!(lam_max > 0.0))
        fail(ErrorKind::Computation, "inverse_sqrt_psd",
             "matrix not positive (degenerate signal)");
    const double floor_val = eigen_floor * lam_max;
    Eigen::VectorXd inv_sqrt(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        const double l = std::max(lam[i], floor_val);
        inv_sqrt[i] = 1.0 / std::sqrt(l);
    }
    return es.eigenvectors() * inv_sqrt.asDiagonal() *
           es.eigenvectors().transpose();
}

// G = sqrt(r(0)) * R^{-1/2}: maps the measured correlation to r(0) * I,
// preserving the measured power (Mahalanobis/ZCA family).
inline WhiteningTransform whitening_transform(const CorrelationMatrix& R,
                                              double eigen_floor = kDefaultEigenFloor) {
    if (R.order == 0 || R.lags.size() != R.order)
        fail(ErrorKind::Computation, "whitening_transform",
             "invalid correlation matrix");
    if (!(R.lags[0] > 0.0))
        fail(ErrorKind::Computation, "whitening_transform",
             "r(0) must be > 0 (degenerate signal)");
    const auto n = static_cast<Eigen::Index>(R.order);
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            M(i, j) = R.at(static_cast<std::size_t>(i),
                           static_cast<std::size_t>(j));
    WhiteningTransform G;
    G.order = R.order;
    G.scale = std::sqrt(R.lags[0]);
    G.matrix = G.scale * inverse_sqrt_psd(M, eigen_floor);
    return G;
}

// Central column of G: the zero-phase deconvolution filter.
// Centrosymmetry of symmetric Toeplitz matrices makes it palindromic.
inline DeconvFilter extract_filter(const WhiteningTransform& G) {
    if (G.order % 2 == 0 || G.order == 0)
        fail(ErrorKind::Computation, "extract_filter",
             "whitening order must be odd: no central column otherwise");
    DeconvFilter g;
    g.center_index = (G.order - 1) / 2;
    g.coefficients.resize(G.order);
    for (std::size_t i = 0; i < G.order; ++i)
        g.coefficients[i] = G.matrix(static_cast<Eigen::Index>(i),
                                     static_cast<Eigen::Index>(g.center_index));
    g.validate();
    return g;
}

// Causal FIR filtering followed by a left shift of (n-1)/2 samples to cancel
// the zero-phase filter's group delay; the uncovered tail is zero-padded.
inline SignalBuffer deconvolve(const DeconvFilter& g, const SignalBuffer& x) {
    g.validate();
    x.validate("deconvolve");
    const std::size_t n = g.coefficients.size();
    const std::size_t N = x.size();
    if (N < n)
        fail(ErrorKind::Computation, "deconvolve",
             "signal shorter than the filter");
    const std::size_t c = g.center_index;
    SignalBuffer y(std::vector<double>(N, 0.0), x.sample_rate);
    for (std::size_t t = 0; t + c < N; ++t) {
        const std::size_t tc = t + c;
        double acc = 0.0;
        const std::size_t imax = std::min(n - 1, tc);
        for (std::size_t i = 0; i <= imax; ++i)
            acc += g.coefficients[i] * x[tc - i];
        y[t] = acc;
    }
    return y;
}

}  // namespace cs2
