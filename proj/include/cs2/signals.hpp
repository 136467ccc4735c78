#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "cs2/common.hpp"
#include "cs2/rng.hpp"

namespace cs2 {

// ---------------------------------------------------------------- types ---

struct EnvelopeComponent {
    double amplitude = 0.0;          // B_k >= 0
    double angular_frequency = 0.0;  // omega_k, radians/sample, in (-pi, pi)
    double phase = 0.0;              // phi_k, radians, in (-pi, pi)
};

struct EnvelopeSpec {
    std::vector<EnvelopeComponent> components;

    void validate(bool allow_negative = false) const {
        if (components.empty())
            fail(ErrorKind::Config, "envelope_spec",
                 "an envelope must contain at least one component");
        for (const auto& c : components) {
            if (!(c.amplitude >= 0.0))
                fail(ErrorKind::Config, "envelope_spec",
                     "component amplitude must be >= 0");
            if (!(c.angular_frequency > -M_PI && c.angular_frequency < M_PI))
                fail(ErrorKind::Config, "envelope_spec",
                     "angular frequency must lie in (-pi, pi)");
            if (!(c.phase > -M_PI && c.phase < M_PI))
                fail(ErrorKind::Config, "envelope_spec",
                     "phase must lie in (-pi, pi)");
            if (c.amplitude > 1.0 && !allow_negative)
                fail(ErrorKind::Config, "envelope_spec",
                     "component amplitude > 1 makes the envelope negative; "
                     "set allow_negative to override");
        }
    }
};

struct TransferFunction {
    std::vector<double> coefficients;          // h_0..h_{n-1}, n odd
    std::vector<std::complex<double>> poles;   // generation record, optional

    void validate() const {
        if (coefficients.empty())
            fail(ErrorKind::Config, "transfer_function",
                 "coefficient list is empty");
        bool any = false;
        for (double c : coefficients) {
            if (!std::isfinite(c))
                fail(ErrorKind::Config, "transfer_function",
                     "non-finite coefficient");
            if (c != 0.0) any = true;
        }
        if (!any)
            fail(ErrorKind::Config, "transfer_function",
                 "all coefficients are zero");
        for (const auto& p : poles)
            if (!(std::abs(p) < 1.0))
                fail(ErrorKind::Config, "transfer_function",
                     "pole outside the unit circle (non-invertible TF)");
    }
};

// How the snr_db -> sigma_w^2 conversion references the envelope.
//   Variance:   sigma_w^2 = var(q)        / 10^(snr/10)  (default; the AC
//               power of the envelope is the quantity the method recovers)
//   MeanSquare: sigma_w^2 = mean(q^2)     / 10^(snr/10)
enum class SnrReference { Variance, MeanSquare };

struct SimConfig {
    std::size_t n_samples = 24000;
    EnvelopeSpec envelope;                 // explicit components, or use
    std::size_t k_components = 0;          // ...random draw when > 0
    double b_min = 0.3, b_max = 1.0;       // random B_k range
    double omega_min = 0.01, omega_max = 0.2;  // random omega_k range
    std::size_t pole_count = 8;
    double pole_radius = 0.45;
    double snr_db = -5.0;
    SnrReference snr_reference = SnrReference::Variance;
    std::optional<double> sigma_w2_override;  // explicit noise variance
    double carrier_variance = 1.0;            // sigma_r^2
    std::uint64_t rng_seed = 1;
    double tf_truncation_energy = 0.9999;
    bool with_tf = true;
    bool allow_negative_envelope = false;

    void validate() const {
        if (n_samples < 1)
            fail(ErrorKind::Config, "sim_config", "n_samples must be >= 1");
        if (pole_count < 1)
            fail(ErrorKind::Config, "sim_config", "pole_count must be >= 1");
        if (!(carrier_variance > 0.0))
            fail(ErrorKind::Config, "sim_config",
                 "carrier_variance must be > 0");
        if (!(pole_radius > 0.0 && pole_radius < 1.0))
            fail(ErrorKind::Config, "sim_config",
                 "pole_radius must lie in (0,1)");
        if (!(tf_truncation_energy > 0.0 && tf_truncation_energy <= 1.0))
            fail(ErrorKind::Config, "sim_config",
                 "tf_truncation_energy must lie in (0,1]");
        if (sigma_w2_override && *sigma_w2_override < 0.0)
            fail(ErrorKind::Config, "sim_config", "sigma_w2 must be >= 0");
        if (envelope.components.empty() && k_components == 0)
            fail(ErrorKind::Config, "sim_config",
                 "either explicit envelope components or k_components "
                 "must be given");
    }
};

struct SimOutput {
    SignalBuffer x;       // measurement
    SignalBuffer q_true;  // ground-truth envelope
    TransferFunction tf;
    double sigma_w2 = 0.0;
    std::uint64_t rng_seed = 0;
};

// ----------------------------------------------------------- operations ---

// q[t] = sum_k (1 + B_k cos(omega_k t + phi_k)), t = 0..n-1.
inline SignalBuffer generate_envelope(const EnvelopeSpec& spec,
                                      std::size_t n_samples,
                                      bool allow_negative = false) {
    spec.validate(allow_negative);
    if (n_samples < 1)
        fail(ErrorKind::Config, "generate_envelope", "n_samples must be >= 1");
    SignalBuffer q(std::vector<double>(n_samples, 0.0));
    for (const auto& c : spec.components)
        for (std::size_t t = 0; t < n_samples; ++t)
            q[t] += 1.0 + c.amplitude *
                    std::cos(c.angular_frequency * static_cast<double>(t) +
                             c.phase);
    return q;
}

inline EnvelopeSpec random_envelope_spec(Rng& rng, std::size_t k,
                                         double b_min = 0.3,
                                         double b_max = 1.0,
                                         double omega_min = 0.01,
                                         double omega_max = 0.2) {
    EnvelopeSpec spec;
    spec.components.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        EnvelopeComponent c;
        c.amplitude = rng.uniform(b_min, b_max);
        c.angular_frequency = rng.uniform(omega_min, omega_max);
        c.phase = rng.uniform(-M_PI, M_PI);
        spec.components.push_back(c);
    }
    return spec;
}

// All-pole impulse response. Conjugate pole pairs at stratified random
// angles: one uniform draw per equal sector of (0, pi). Stratification keeps
// the angles uniformly distributed overall while ruling out near-coincident
// pairs, whose multiplied resonance no practical FIR whitening filter can
// invert. An odd pole count adds one real pole at +/-radius. The truncated
// response is padded to odd length and normalized to unit energy (the
// whitening transform preserves measured power, so the final noise
// subtraction assumes ||h|| = 1).
inline TransferFunction generate_transfer_function(std::size_t pole_count,
                                                   double pole_radius,
                                                   double truncation_energy,
                                                   Rng& rng) {
    if (!(pole_radius > 0.0 && pole_radius < 1.0))
        fail(ErrorKind::Config, "generate_transfer_function",
             "pole_radius must lie in (0,1): the TF must be invertible");
    if (!(truncation_energy > 0.0 && truncation_energy <= 1.0))
        fail(ErrorKind::Config, "generate_transfer_function",
             "truncation_energy must lie in (0,1]");
    if (pole_count < 1)
        fail(ErrorKind::Config, "generate_transfer_function",
             "pole_count must be >= 1");

    std::vector<std::complex<double>> poles;
    const std::size_t pairs = pole_count / 2;
    for (std::size_t i = 0; i < pairs; ++i) {
        const double lo = M_PI * static_cast<double>(i) /
                          static_cast<double>(pairs);
        const double hi = M_PI * static_cast<double>(i + 1) /
                          static_cast<double>(pairs);
        const double ang = rng.uniform(lo, hi);
        poles.emplace_back(pole_radius * std::cos(ang),
                           pole_radius * std::sin(ang));
    }
    const std::size_t n_conj = poles.size();
    for (std::size_t i = 0; i < n_conj; ++i)
        poles.push_back(std::conj(poles[i]));
    if (pole_count % 2 == 1)
        poles.emplace_back(rng.uniform() < 0.5 ? pole_radius : -pole_radius,
                           0.0);

    // Denominator polynomial prod (1 - p_i z^-1); coefficients are real.
    std::vector<std::complex<double>> a{{1.0, 0.0}};
    for (const auto& p : poles) {
        std::vector<std::complex<double>> next(a.size() + 1, {0.0, 0.0});
        for (std::size_t i = 0; i < a.size(); ++i) {
            next[i] += a[i];
            next[i + 1] -= a[i] * p;
        }
        a = std::move(next);
    }

    // Impulse response by recursion h[t] = -sum_i a_i h[t-i].
    std::vector<double> h{1.0};
    double peak = 1.0;
    const std::size_t guard = std::max<std::size_t>(5 * pole_count, 64);
    for (std::size_t t = 1; t < 200000; ++t) {
        double acc = 0.0;
        for (std::size_t i = 1; i < a.size() && i <= t; ++i)
            acc -= a[i].real() * h[t - i];
        h.push_back(acc);
        peak = std::max(peak, std::abs(acc));
        if (t > guard) {
            double recent = 0.0;
            const std::size_t lo = h.size() >= 50 ? h.size() - 50 : 0;
            for (std::size_t i = lo; i < h.size(); ++i)
                recent = std::max(recent, std::abs(h[i]));
            if (recent < 1e-14 * peak) break;
        }
    }

    // Truncate at the smallest length holding >= truncation_energy of the
    // total, pad to odd, normalize to unit energy.
    double total = 0.0;
    for (double v : h) total += v * v;
    double run = 0.0;
    std::size_t keep = h.size();
    for (std::size_t i = 0; i < h.size(); ++i) {
        run += h[i] * h[i];
        if (run >= truncation_energy * total) {
            keep = i + 1;
            break;
        }
    }
    h.resize(keep);
    if (h.size() % 2 == 0) h.push_back(0.0);
    double energy = 0.0;
    for (double v : h) energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= scale;

    TransferFunction tf;
    tf.coefficients = std::move(h);
    tf.poles = std::move(poles);
    tf.validate();
    return tf;
}

// Causal convolution with zero pre-history, same length as the input.
inline SignalBuffer apply_fir(const TransferFunction& h,
                              const SignalBuffer& s) {
    h.validate();
    s.validate("apply_fir");
    const std::size_t n = s.size();
    const std::size_t m = h.coefficients.size();
    SignalBuffer out(std::vector<double>(n, 0.0), s.sample_rate);
    for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0;
        const std::size_t imax = std::min(m - 1, t);
        for (std::size_t i = 0; i <= imax; ++i)
            acc += h.coefficients[i] * s[t - i];
        out[t] = acc;
    }
    return out;
}

inline double sigma_w2_for_snr(const SignalBuffer& q, double snr_db,
                               SnrReference ref) {
    double num = 0.0;
    if (ref == SnrReference::Variance) {
        num = variance(q.samples);
    } else {
        for (double v : q.samples) num += v * v;
        num /= static_cast<double>(q.size());
    }
    return num / std::pow(10.0, snr_db / 10.0);
}

// Substream tags for the master-seed derivation.
namespace seed_tag {
constexpr std::uint64_t envelope = 0x01;
constexpr std::uint64_t transfer = 0x02;
constexpr std::uint64_t carrier = 0x03;
constexpr std::uint64_t noise = 0x04;
}  // namespace seed_tag

inline SimOutput simulate_measurement(const SimConfig& config) {
    config.validate();

    EnvelopeSpec spec = config.envelope;
    if (spec.components.empty()) {
        Rng erng(derive_seed(config.rng_seed, seed_tag::envelope));
        spec = random_envelope_spec(erng, config.k_components, config.b_min,
                                    config.b_max, config.omega_min,
                                    config.omega_max);
    }
    SignalBuffer q = generate_envelope(spec, config.n_samples,
                                       config.allow_negative_envelope);

    const double sigma_w2 = config.sigma_w2_override
        ? *config.sigma_w2_override
        : sigma_w2_for_snr(q, config.snr_db, config.snr_reference);

    TransferFunction tf;
    if (config.with_tf) {
        Rng trng(derive_seed(config.rng_seed, seed_tag::transfer));
        tf = generate_transfer_function(config.pole_count, config.pole_radius,
                                        config.tf_truncation_energy, trng);
    } else {
        tf.coefficients = {1.0};
    }

    Rng crng(derive_seed(config.rng_seed, seed_tag::carrier));
    Rng wrng(derive_seed(config.rng_seed, seed_tag::noise));
    const double sr = std::sqrt(config.carrier_variance);
    const double sw = std::sqrt(sigma_w2);
    SignalBuffer y(std::vector<double>(config.n_samples, 0.0));
    for (std::size_t t = 0; t < config.n_samples; ++t)
        y[t] = q[t] * sr * crng.normal() + sw * wrng.normal();

    SimOutput out;
    out.x = apply_fir(tf, y);
    out.q_true = std::move(q);
    out.tf = std::move(tf);
    out.sigma_w2 = sigma_w2;
    out.rng_seed = config.rng_seed;
    return out;
}

}  // namespace cs2
