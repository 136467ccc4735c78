#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "cs2/common.hpp"
#include "cs2/fft.hpp"

namespace cs2 {

enum class Window { Hann, Rectangular };

// Welch-averaged magnitude spectrum of y^2 plus the per-frame phases needed
// for reconstruction.
struct SpectralEstimate {
    std::size_t frame_length = 0;  // L
    std::size_t hop = 0;
    Window window = Window::Hann;
    std::vector<double> amplitude;               // L bins, across-frame mean
    std::vector<std::vector<double>> frame_phases;  // per frame, L bins
    std::vector<std::size_t> frame_starts;
    std::size_t n_frames = 0;

    void validate(const std::string& stage) const {
        if (frame_length == 0 || amplitude.size() != frame_length)
            fail(ErrorKind::Computation, stage, "invalid spectral estimate");
        for (double a : amplitude)
            if (!(a >= 0.0) || !std::isfinite(a))
                fail(ErrorKind::Computation, stage,
                     "amplitude bins must be finite and non-negative");
    }
};

enum class BiasMode { KnownNoise, MinSubtraction };

struct EnvelopeEstimate {
    SignalBuffer q_hat;
    double sigma_w2_used = 0.0;
    BiasMode bias_mode = BiasMode::KnownNoise;
    double clipped_fraction = 0.0;  // samples where the radicand was < 0
};

// Median peak gate configuration. A bare above-the-median rule is margin = 0
// with both corrections off; the calibrated defaults below subtract the
// robust noise floor (median + margin * 1.4826 * MAD threshold, floor-
// corrected retained amplitudes) and undo Hann scalloping, without which the
// retained Rayleigh floor of the magnitude average swamps the envelope
// ripple (see tests/oracle/BASELINE.md).
struct GateConfig {
    double margin = 3.0;           // threshold = median + margin * MAD-sigma
    bool floor_correction = true;  // subtract the median from retained bins
    bool scallop_correction = true;
};

inline std::vector<double> make_window(Window w, std::size_t L) {
    std::vector<double> win(L, 1.0);
    if (w == Window::Hann)
        for (std::size_t t = 0; t < L; ++t)
            win[t] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(t) /
                                          static_cast<double>(L));
    return win;
}

// Welch periodogram of y^2: overlapping windowed frames, per-frame DFT,
// across-frame mean of magnitudes (realizing E{|F(y^2)|}), phases kept.
inline SpectralEstimate welch_average_amplitude(const SignalBuffer& y2,
                                                std::size_t L,
                                                double overlap_fraction = 0.5,
                                                Window window = Window::Hann) {
    y2.validate("welch_average_amplitude");
    const std::size_t N = y2.size();
    if (L > N)
        fail(ErrorKind::Computation, "welch_average_amplitude",
             "frame longer than signal");
    if (L < 16 || L % 2 != 0)
        fail(ErrorKind::Computation, "welch_average_amplitude",
             "frame length must be even and >= 16");
    if (!(overlap_fraction >= 0.0 && overlap_fraction <= 0.9))
        fail(ErrorKind::Computation, "welch_average_amplitude",
             "overlap_fraction must lie in [0, 0.9]");

    SpectralEstimate spec;
    spec.frame_length = L;
    spec.window = window;
    spec.hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(static_cast<double>(L) * (1.0 - overlap_fraction))));
    const std::vector<double> win = make_window(window, L);

    spec.amplitude.assign(L, 0.0);
    for (std::size_t s = 0; s + L <= N; s += spec.hop) {
        std::vector<cdouble> frame(L);
        for (std::size_t t = 0; t < L; ++t)
            frame[t] = cdouble(win[t] * y2[s + t], 0.0);
        fft(frame);
        std::vector<double> phase(L);
        for (std::size_t k = 0; k < L; ++k) {
            spec.amplitude[k] += std::abs(frame[k]);
            phase[k] = std::arg(frame[k]);
        }
        spec.frame_phases.push_back(std::move(phase));
        spec.frame_starts.push_back(s);
    }
    spec.n_frames = spec.frame_starts.size();
    const double inv = 1.0 / static_cast<double>(spec.n_frames);
    for (double& a : spec.amplitude) a *= inv;
    return spec;
}

namespace detail {

// Hann main-lobe amplitude response W(delta)/W(0) at fractional bin offset
// delta: sinc(delta) / (1 - delta^2).
inline double hann_coherent_gain(double delta) {
    const double ad = std::abs(delta);
    if (ad < 1e-9) return 1.0;
    if (std::abs(ad - 1.0) < 1e-9) return 0.5;
    const double s = std::sin(M_PI * delta) / (M_PI * delta);
    return s / (1.0 - delta * delta);
}

}  // namespace detail

// Retains the DC bin plus strict local maxima of the averaged amplitude that
// exceed median + margin * (1.4826 * MAD) over the non-DC bins; every other
// bin is zeroed. Retained bins keep their conjugate-symmetric partners.
// Plateau peaks take the leftmost bin. Idempotent.
inline SpectralEstimate gate_peaks_by_median(const SpectralEstimate& spec,
                                             const GateConfig& cfg = {}) {
    spec.validate("gate_peaks_by_median");
    const std::size_t L = spec.frame_length;
    SpectralEstimate out = spec;
    if (L < 2) return out;

    std::vector<double> body(spec.amplitude.begin() + 1, spec.amplitude.end());
    auto median_of = [](std::vector<double> v) {
        const std::size_t m = v.size() / 2;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m),
                         v.end());
        double hi = v[m];
        if (v.size() % 2 == 0) {
            std::nth_element(v.begin(),
                             v.begin() + static_cast<std::ptrdiff_t>(m) - 1,
                             v.end());
            return 0.5 * (hi + v[m - 1]);
        }
        return hi;
    };
    const double med = median_of(body);
    std::vector<double> dev(body.size());
    for (std::size_t i = 0; i < body.size(); ++i)
        dev[i] = std::abs(body[i] - med);
    const double mad_sigma = 1.4826 * median_of(dev);
    const double threshold = med + cfg.margin * mad_sigma;

    const auto& amp = spec.amplitude;
    std::vector<double> gated(L, 0.0);
    gated[0] = amp[0];
    const std::size_t half = L / 2;
    std::size_t k = 1;
    while (k <= half) {
        if (amp[k] > threshold) {
            std::size_t j = k;  // plateau -> leftmost bin represents it
            while (j < half && amp[j + 1] == amp[k]) ++j;
            const double right = amp[(j + 1) % L];
            if (amp[k] > amp[k - 1] && amp[k] > right) {
                double a = amp[k];
                if (cfg.floor_correction) a = std::max(a - med, 0.0);
                if (cfg.scallop_correction && k + 1 < L) {
                    const double am = std::max(amp[k - 1] - med, 0.0);
                    const double ap = std::max(amp[k + 1] - med, 0.0);
                    if (a + am + ap > 0.0) {
                        double d = (ap - am) / (2.0 * a + am + ap);
                        d = std::clamp(2.0 * d, -0.5, 0.5);
                        a /= std::max(detail::hann_coherent_gain(d), 0.5);
                    }
                }
                gated[k] = a;
                gated[(L - k) % L] = a;
            }
            k = j + 1;
        } else {
            ++k;
        }
    }
    out.amplitude = std::move(gated);
    return out;
}

// Per frame: combine the shared (gated) amplitude with that frame's own
// phase, inverse-transform, divide out the window's coherent gain, and
// overlap-add with window weighting. Tail samples beyond the last frame are
// tiled from it. With single_frame_phase, frame 0's segment is tiled across
// the whole output (the literal single-frame reading of the algorithm).
inline SignalBuffer reconstruct_power(const SpectralEstimate& spec,
                                      std::size_t n_samples,
                                      bool single_frame_phase = false) {
    spec.validate("reconstruct_power");
    const std::size_t L = spec.frame_length;
    if (n_samples < L)
        fail(ErrorKind::Computation, "reconstruct_power",
             "n_samples must be >= the frame length");
    if (spec.n_frames == 0 || spec.frame_phases.empty())
        fail(ErrorKind::Computation, "reconstruct_power",
             "spectral estimate holds no frames");

    const std::vector<double> win = make_window(spec.window, L);
    double win_sum = 0.0;
    for (double w : win) win_sum += w;
    const double gain = win_sum / static_cast<double>(L);

    auto synth = [&](std::size_t f) {
        std::vector<cdouble> bins(L);
        for (std::size_t k = 0; k < L; ++k) {
            const double ph = spec.frame_phases[f][k];
            bins[k] = spec.amplitude[k] * cdouble(std::cos(ph), std::sin(ph));
        }
        ifft(bins);
        std::vector<double> seg(L);
        for (std::size_t t = 0; t < L; ++t) seg[t] = bins[t].real() / gain;
        return seg;
    };

    SignalBuffer out(std::vector<double>(n_samples, 0.0));
    if (single_frame_phase) {
        const std::vector<double> seg = synth(0);
        for (std::size_t t = 0; t < n_samples; ++t) out[t] = seg[t % L];
        return out;
    }

    std::vector<double> wsum(n_samples, 0.0);
    std::vector<double> last_seg;
    std::size_t last_start = 0;
    for (std::size_t f = 0; f < spec.n_frames; ++f) {
        const std::size_t s = spec.frame_starts[f];
        const std::vector<double> seg = synth(f);
        const std::size_t end = std::min(s + L, n_samples);
        for (std::size_t t = s; t < end; ++t) {
            out[t] += win[t - s] * seg[t - s];
            wsum[t] += win[t - s];
        }
        last_seg = seg;
        last_start = s;
    }
    for (std::size_t t = 0; t < n_samples; ++t) {
        if (wsum[t] > 0.0)
            out[t] /= wsum[t];
        else  // beyond frame coverage: tile the last frame
            out[t] = last_seg[(t - last_start) % L];
    }
    return out;
}

// Final bias removal: subtract the known noise variance, or fall back to
// min-subtraction (biased) when it is unknown.
inline EnvelopeEstimate estimate_envelope(const SignalBuffer& power,
                                          std::optional<double> sigma_w2 = {}) {
    power.validate("estimate_envelope");
    if (sigma_w2 && *sigma_w2 < 0.0)
        fail(ErrorKind::Computation, "estimate_envelope",
             "sigma_w2 must be >= 0");
    EnvelopeEstimate est;
    double sub = 0.0;
    if (sigma_w2) {
        est.bias_mode = BiasMode::KnownNoise;
        sub = *sigma_w2;
    } else {
        est.bias_mode = BiasMode::MinSubtraction;
        sub = *std::min_element(power.samples.begin(), power.samples.end());
    }
    est.sigma_w2_used = sub;
    est.q_hat.sample_rate = power.sample_rate;
    est.q_hat.samples.resize(power.size());
    std::size_t clipped = 0;
    for (std::size_t t = 0; t < power.size(); ++t) {
        const double radicand = power[t] - sub;
        if (radicand < 0.0) {
            est.q_hat[t] = 0.0;
            ++clipped;
        } else {
            est.q_hat[t] = std::sqrt(radicand);
        }
    }
    est.clipped_fraction =
        static_cast<double>(clipped) / static_cast<double>(power.size());
    return est;
}

}  // namespace cs2
