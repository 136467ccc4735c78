#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cs2/common.hpp"

namespace cs2 {

// ------------------------------------------------------------ .sig files ---
// Little-endian binary: magic "CS2S", u32 version, u64 sample count,
// f64 sample rate, then the samples as f64. Lossless and trivially
// parseable from any language.

constexpr std::uint32_t kSigFormatVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& os, T value) {
    std::array<unsigned char, sizeof(T)> buf;
    std::memcpy(buf.data(), &value, sizeof(T));
    // The build targets little-endian hosts; memcpy is the byte layout.
    os.write(reinterpret_cast<const char*>(buf.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& path) {
    std::array<unsigned char, sizeof(T)> buf;
    is.read(reinterpret_cast<char*>(buf.data()), sizeof(T));
    if (!is)
        fail(ErrorKind::Io, "read_signal", "truncated file: " + path);
    T value;
    std::memcpy(&value, buf.data(), sizeof(T));
    return value;
}

}  // namespace detail

inline void write_signal(const std::string& path, const SignalBuffer& sig) {
    sig.validate("write_signal");
    std::ofstream os(path, std::ios::binary);
    if (!os)
        fail(ErrorKind::Io, "write_signal", "cannot open for writing: " + path);
    os.write("CS2S", 4);
    detail::write_le<std::uint32_t>(os, kSigFormatVersion);
    detail::write_le<std::uint64_t>(os, sig.size());
    detail::write_le<double>(os, sig.sample_rate);
    for (double v : sig.samples) detail::write_le<double>(os, v);
    if (!os)
        fail(ErrorKind::Io, "write_signal", "write failed: " + path);
}

inline SignalBuffer read_signal(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        fail(ErrorKind::Io, "read_signal", "cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CS2S", 4) != 0)
        fail(ErrorKind::Io, "read_signal", "bad magic (not a .sig file): " + path);
    const auto version = detail::read_le<std::uint32_t>(is, path);
    if (version != kSigFormatVersion)
        fail(ErrorKind::Io, "read_signal",
             "unsupported format version " + std::to_string(version) + ": " +
             path);
    const auto count = detail::read_le<std::uint64_t>(is, path);
    SignalBuffer sig;
    sig.sample_rate = detail::read_le<double>(is, path);
    sig.samples.resize(count);
    for (std::uint64_t i = 0; i < count; ++i)
        sig.samples[i] = detail::read_le<double>(is, path);
    return sig;
}

// ------------------------------------------------------------------- CSV ---

// 17 significant digits: lossless decimal round-trip for binary64.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// RFC-4180 field quoting (only needed for headers containing separators).
inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path, std::ios::binary);  // binary: fixed \r\n newlines
    if (!os)
        fail(ErrorKind::Io, "write_csv", "cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(header[i]);
    }
    os << "\r\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << format_double(row[i]);
        }
        os << "\r\n";
    }
    if (!os)
        fail(ErrorKind::Io, "write_csv", "write failed: " + path);
}

// ------------------------------------------------------------- checksums ---

// FNV-1a 64-bit over the file bytes; cheap, deterministic, adequate for the
// manifest's reproducibility bookkeeping (not cryptographic).
inline std::string file_checksum(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        fail(ErrorKind::Io, "file_checksum", "cannot open: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        const std::streamsize n = is.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!is) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(h));
    return out;
}

// --------------------------------------------------------------- helpers ---

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        fail(ErrorKind::Io, "read_json", "cannot open: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, "read_json",
             "invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        fail(ErrorKind::Io, "write_file", "cannot open for writing: " + path);
    os << body;
    if (!os)
        fail(ErrorKind::Io, "write_file", "write failed: " + path);
}

}  // namespace cs2
