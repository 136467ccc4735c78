#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cs2 {

// Error taxonomy mirrored by the CLI's exit codes: usage/config problems map
// to exit 1, computation-stage failures to exit 2, file-system issues to 3.
enum class ErrorKind { Config, Computation, Io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message),
          kind_(kind), stage_(std::move(stage)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    ErrorKind kind_;
    std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& stage,
                              const std::string& message) {
    throw Error(kind, stage, message);
}

// Uniformly sampled real-valued time series; the universal signal carrier.
// sample_rate is metadata only -- every algorithm in the library is
// index-based.
struct SignalBuffer {
    std::vector<double> samples;
    double sample_rate = 1.0;

    SignalBuffer() = default;
    explicit SignalBuffer(std::vector<double> s, double rate = 1.0)
        : samples(std::move(s)), sample_rate(rate) {}

    std::size_t size() const noexcept { return samples.size(); }
    double& operator[](std::size_t i) { return samples[i]; }
    double operator[](std::size_t i) const { return samples[i]; }

    void validate(const std::string& stage) const {
        if (samples.empty())
            fail(ErrorKind::Computation, stage, "signal is empty");
        if (!(sample_rate > 0.0))
            fail(ErrorKind::Computation, stage, "sample_rate must be > 0");
        for (double v : samples)
            if (!std::isfinite(v))
                fail(ErrorKind::Computation, stage,
                     "signal contains a non-finite sample");
    }
};

inline double mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace cs2
