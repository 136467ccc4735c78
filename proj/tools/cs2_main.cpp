// cs2: simulate second-order cyclostationary measurements, blindly
// deconvolve them, estimate the modulation envelope, and run Monte Carlo
// SNR sweeps. See README.md for the config key reference.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cs2/common.hpp"
#include "cs2/correlation.hpp"
#include "cs2/envelope.hpp"
#include "cs2/io.hpp"
#include "cs2/metrics.hpp"
#include "cs2/signals.hpp"
#include "cs2/svg.hpp"
#include "cs2/whitening.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> sigma_w2;
    bool csv_export = false;
};

// ------------------------------------------------------------- config ------

// Flat JSON object; unknown keys are errors, not warnings, because a silent
// typo (e.g. "pole_raduis") would corrupt a whole Monte Carlo study.
void check_keys(const json& cfg, const std::set<std::string>& allowed) {
    if (!cfg.is_object())
        cs2::fail(cs2::ErrorKind::Config, "config",
                  "config file must hold a single flat JSON object");
    for (const auto& item : cfg.items()) {
        if (!allowed.count(item.key()))
            cs2::fail(cs2::ErrorKind::Config, "config",
                      "unknown config key: \"" + item.key() + "\"");
        if (item.value().is_object())
            cs2::fail(cs2::ErrorKind::Config, "config",
                      "config must be flat; key \"" + item.key() +
                      "\" holds a nested object");
    }
}

template <typename T>
T get_or(const json& cfg, const std::string& key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        cs2::fail(cs2::ErrorKind::Config, "config",
                  "config key \"" + key + "\" has the wrong type");
    }
}

std::string get_required_string(const json& cfg, const std::string& key) {
    if (!cfg.contains(key))
        cs2::fail(cs2::ErrorKind::Config, "config",
                  "missing required config key: \"" + key + "\"");
    return get_or<std::string>(cfg, key, "");
}

const std::set<std::string> kSimKeys = {
    "n_samples", "k_components", "b_min", "b_max", "omega_min", "omega_max",
    "pole_count", "pole_radius", "snr_db", "snr_reference", "sigma_w2",
    "carrier_variance", "seed", "tf_truncation_energy", "with_tf",
    "allow_negative_envelope", "sample_rate",
    "envelope_amplitudes", "envelope_frequencies", "envelope_phases"};

const std::set<std::string> kPipelineKeys = {
    "filter_order", "frame_length", "overlap_fraction", "window",
    "eigen_floor", "sigma_w2", "gating", "gate_margin",
    "gate_floor_correction", "gate_scallop_correction", "single_frame_phase",
    "min_data_factor", "x_path", "y_path", "q_true_path"};

const std::set<std::string> kSweepKeys = {
    "snr_grid", "runs_per_point", "k_min", "k_max", "p_min", "p_max",
    "paired"};

std::set<std::string> merge_keys(std::initializer_list<std::set<std::string>> sets) {
    std::set<std::string> out;
    for (const auto& s : sets) out.insert(s.begin(), s.end());
    return out;
}

cs2::SimConfig parse_sim_config(const json& cfg, const CliOptions& opt) {
    cs2::SimConfig sim;
    sim.n_samples = get_or<std::size_t>(cfg, "n_samples", sim.n_samples);
    sim.k_components = get_or<std::size_t>(cfg, "k_components", sim.k_components);
    sim.b_min = get_or<double>(cfg, "b_min", sim.b_min);
    sim.b_max = get_or<double>(cfg, "b_max", sim.b_max);
    sim.omega_min = get_or<double>(cfg, "omega_min", sim.omega_min);
    sim.omega_max = get_or<double>(cfg, "omega_max", sim.omega_max);
    sim.pole_count = get_or<std::size_t>(cfg, "pole_count", sim.pole_count);
    sim.pole_radius = get_or<double>(cfg, "pole_radius", sim.pole_radius);
    sim.snr_db = get_or<double>(cfg, "snr_db", sim.snr_db);
    sim.carrier_variance =
        get_or<double>(cfg, "carrier_variance", sim.carrier_variance);
    sim.rng_seed = get_or<std::uint64_t>(cfg, "seed", sim.rng_seed);
    sim.tf_truncation_energy =
        get_or<double>(cfg, "tf_truncation_energy", sim.tf_truncation_energy);
    sim.with_tf = get_or<bool>(cfg, "with_tf", sim.with_tf);
    sim.allow_negative_envelope = get_or<bool>(
        cfg, "allow_negative_envelope", sim.allow_negative_envelope);

    const std::string ref =
        get_or<std::string>(cfg, "snr_reference", "variance");
    if (ref == "variance") {
        sim.snr_reference = cs2::SnrReference::Variance;
    } else if (ref == "mean_square") {
        sim.snr_reference = cs2::SnrReference::MeanSquare;
    } else {
        cs2::fail(cs2::ErrorKind::Config, "config",
                  "snr_reference must be \"variance\" or \"mean_square\"");
    }

    if (cfg.contains("sigma_w2"))
        sim.sigma_w2_override = get_or<double>(cfg, "sigma_w2", 0.0);

    // Explicit envelope components via three parallel arrays.
    const auto amps = get_or<std::vector<double>>(cfg, "envelope_amplitudes", {});
    const auto freqs = get_or<std::vector<double>>(cfg, "envelope_frequencies", {});
    const auto phases = get_or<std::vector<double>>(cfg, "envelope_phases", {});
    if (!amps.empty() || !freqs.empty() || !phases.empty()) {
        if (amps.size() != freqs.size() ||
            (!phases.empty() && phases.size() != amps.size()))
            cs2::fail(cs2::ErrorKind::Config, "config",
                      "envelope_amplitudes/_frequencies/_phases must have "
                      "equal lengths");
        for (std::size_t i = 0; i < amps.size(); ++i)
            sim.envelope.components.push_back(
                {amps[i], freqs[i], phases.empty() ? 0.0 : phases[i]});
    }

    if (opt.seed) sim.rng_seed = *opt.seed;
    if (opt.sigma_w2) sim.sigma_w2_override = *opt.sigma_w2;
    return sim;
}

cs2::PipelineParams parse_pipeline_params(const json& cfg,
                                          const CliOptions& opt) {
    cs2::PipelineParams p;
    p.filter_order = get_or<std::size_t>(cfg, "filter_order", p.filter_order);
    p.frame_length = get_or<std::size_t>(cfg, "frame_length", p.frame_length);
    p.overlap_fraction =
        get_or<double>(cfg, "overlap_fraction", p.overlap_fraction);
    p.eigen_floor = get_or<double>(cfg, "eigen_floor", p.eigen_floor);
    p.gating = get_or<bool>(cfg, "gating", p.gating);
    p.gate.margin = get_or<double>(cfg, "gate_margin", p.gate.margin);
    p.gate.floor_correction =
        get_or<bool>(cfg, "gate_floor_correction", p.gate.floor_correction);
    p.gate.scallop_correction = get_or<bool>(cfg, "gate_scallop_correction",
                                             p.gate.scallop_correction);
    p.single_frame_phase =
        get_or<bool>(cfg, "single_frame_phase", p.single_frame_phase);
    p.min_data_factor =
        get_or<std::size_t>(cfg, "min_data_factor", p.min_data_factor);

    const std::string window = get_or<std::string>(cfg, "window", "hann");
    if (window == "hann") {
        p.window = cs2::Window::Hann;
    } else if (window == "rectangular") {
        p.window = cs2::Window::Rectangular;
    } else {
        cs2::fail(cs2::ErrorKind::Config, "config",
                  "window must be \"hann\" or \"rectangular\"");
    }

    if (cfg.contains("sigma_w2"))
        p.sigma_w2 = get_or<double>(cfg, "sigma_w2", 0.0);
    if (opt.sigma_w2) p.sigma_w2 = *opt.sigma_w2;
    return p;
}

// ------------------------------------------------------------- output ------

struct Emitter {
    fs::path dir;
    json manifest_files = json::array();
    bool csv_export = false;

    explicit Emitter(const CliOptions& opt) : dir(opt.out_dir),
                                              csv_export(opt.csv_export) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            cs2::fail(cs2::ErrorKind::Io, "output",
                      "cannot create output directory: " + dir.string());
    }

    std::string path(const std::string& name) const {
        return (dir / name).string();
    }

    void record(const std::string& role, const std::string& name) {
        manifest_files.push_back({{"role", role},
                                  {"path", name},
                                  {"checksum", cs2::file_checksum(path(name))}});
    }

    void signal(const std::string& role, const std::string& name,
                const cs2::SignalBuffer& sig) {
        cs2::write_signal(path(name), sig);
        record(role, name);
        if (csv_export) {
            const std::string csv_name =
                name.substr(0, name.rfind('.')) + ".csv";
            std::vector<std::vector<double>> rows;
            rows.reserve(sig.size());
            for (std::size_t t = 0; t < sig.size(); ++t)
                rows.push_back({static_cast<double>(t), sig[t]});
            cs2::write_csv(path(csv_name), {"index", "value"}, rows);
            record(role + "_csv", csv_name);
        }
    }

    void text(const std::string& role, const std::string& name,
              const std::string& body) {
        cs2::write_text_file(path(name), body);
        record(role, name);
    }

    void finish(const CliOptions& opt, double elapsed_ms) {
        json manifest;
        manifest["config_path"] = opt.config_path;
        manifest["command"] = opt.command;
        manifest["output_dir"] = opt.out_dir;
        manifest["emitted_files"] = manifest_files;
        manifest["timing_ms"] = elapsed_ms;
        cs2::write_text_file(path("manifest.json"), manifest.dump(2) + "\n");
    }
};

json params_to_json(const cs2::PipelineParams& p) {
    json j;
    j["filter_order"] = p.filter_order;
    j["frame_length"] = p.frame_length;
    j["overlap_fraction"] = p.overlap_fraction;
    j["window"] = p.window == cs2::Window::Hann ? "hann" : "rectangular";
    j["eigen_floor"] = p.eigen_floor;
    j["gating"] = p.gating;
    j["gate_margin"] = p.gate.margin;
    j["gate_floor_correction"] = p.gate.floor_correction;
    j["gate_scallop_correction"] = p.gate.scallop_correction;
    j["single_frame_phase"] = p.single_frame_phase;
    if (p.sigma_w2) j["sigma_w2"] = *p.sigma_w2;
    return j;
}

void write_filter_csv(Emitter& out, const cs2::DeconvFilter& g) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < g.coefficients.size(); ++i)
        rows.push_back({static_cast<double>(i), g.coefficients[i]});
    cs2::write_csv(out.path("g.csv"), {"tap", "coefficient"}, rows);
    out.record("deconvolution_filter", "g.csv");
}

void write_spectrum_csv(Emitter& out, const cs2::SpectralEstimate& spec) {
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < spec.frame_length; ++k)
        rows.push_back({static_cast<double>(k),
                        2.0 * M_PI * static_cast<double>(k) /
                            static_cast<double>(spec.frame_length),
                        spec.amplitude[k]});
    cs2::write_csv(out.path("spectrum.csv"),
                   {"bin", "angular_frequency", "amplitude"}, rows);
    out.record("gated_spectrum", "spectrum.csv");
}

json envelope_report(const cs2::EnvelopeEstimate& est,
                     const std::optional<double>& r2) {
    json rep;
    rep["bias_mode"] = est.bias_mode == cs2::BiasMode::KnownNoise
                           ? "KnownNoise"
                           : "MinSubtraction";
    rep["sigma_w2_used"] = est.sigma_w2_used;
    rep["clipped_fraction"] = est.clipped_fraction;
    rep["n_samples"] = est.q_hat.size();
    if (r2) rep["r_squared"] = *r2;
    return rep;
}

std::optional<double> maybe_r2(const json& cfg,
                               const cs2::SignalBuffer& q_hat) {
    if (!cfg.contains("q_true_path")) return std::nullopt;
    const cs2::SignalBuffer q_true =
        cs2::read_signal(get_required_string(cfg, "q_true_path"));
    return cs2::r_squared(q_true, q_hat);
}

// ----------------------------------------------------------- commands ------

void cmd_simulate(const json& cfg, const CliOptions& opt, Emitter& out) {
    check_keys(cfg, kSimKeys);
    cs2::SimConfig sim = parse_sim_config(cfg, opt);
    const double sample_rate = get_or<double>(cfg, "sample_rate", 1.0);
    cs2::SimOutput res = cs2::simulate_measurement(sim);
    res.x.sample_rate = sample_rate;
    res.q_true.sample_rate = sample_rate;

    out.signal("measurement", "x.sig", res.x);
    out.signal("ground_truth_envelope", "q_true.sig", res.q_true);

    std::vector<std::vector<double>> tf_rows;
    for (std::size_t i = 0; i < res.tf.coefficients.size(); ++i)
        tf_rows.push_back({static_cast<double>(i), res.tf.coefficients[i]});
    cs2::write_csv(out.path("tf.csv"), {"tap", "coefficient"}, tf_rows);
    out.record("transfer_function", "tf.csv");

    json meta;
    meta["n_samples"] = sim.n_samples;
    meta["k_components"] = sim.k_components;
    meta["b_min"] = sim.b_min;
    meta["b_max"] = sim.b_max;
    meta["omega_min"] = sim.omega_min;
    meta["omega_max"] = sim.omega_max;
    meta["pole_count"] = sim.pole_count;
    meta["pole_radius"] = sim.pole_radius;
    meta["snr_db"] = sim.snr_db;
    meta["snr_reference"] = sim.snr_reference == cs2::SnrReference::Variance
                                ? "variance"
                                : "mean_square";
    meta["carrier_variance"] = sim.carrier_variance;
    meta["seed"] = sim.rng_seed;
    meta["tf_truncation_energy"] = sim.tf_truncation_energy;
    meta["with_tf"] = sim.with_tf;
    meta["sample_rate"] = sample_rate;
    meta["sigma_w2"] = res.sigma_w2;
    meta["tf_length"] = res.tf.coefficients.size();
    out.text("metadata", "meta.json", meta.dump(2) + "\n");
}

void cmd_deconv(const json& cfg, const CliOptions& opt, Emitter& out) {
    check_keys(cfg, kPipelineKeys);
    const cs2::PipelineParams params = parse_pipeline_params(cfg, opt);
    params.validate();
    const cs2::SignalBuffer x =
        cs2::read_signal(get_required_string(cfg, "x_path"));
    const cs2::CorrelationMatrix R = cs2::estimate_correlation(
        x, params.filter_order, params.min_data_factor);
    const cs2::WhiteningTransform G =
        cs2::whitening_transform(R, params.eigen_floor);
    const cs2::DeconvFilter g = cs2::extract_filter(G);
    const cs2::SignalBuffer y = cs2::deconvolve(g, x);

    write_filter_csv(out, g);
    out.signal("deconvolved", "y.sig", y);
}

void cmd_envelope(const json& cfg, const CliOptions& opt, Emitter& out) {
    check_keys(cfg, kPipelineKeys);
    const cs2::PipelineParams params = parse_pipeline_params(cfg, opt);
    params.validate();
    const std::string in_path = cfg.contains("y_path")
                                    ? get_required_string(cfg, "y_path")
                                    : get_required_string(cfg, "x_path");
    const cs2::SignalBuffer y = cs2::read_signal(in_path);

    cs2::SignalBuffer y2(std::vector<double>(y.size()), y.sample_rate);
    for (std::size_t t = 0; t < y.size(); ++t) y2[t] = y[t] * y[t];
    cs2::SpectralEstimate spec = cs2::welch_average_amplitude(
        y2, params.frame_length, params.overlap_fraction, params.window);
    if (params.gating) spec = cs2::gate_peaks_by_median(spec, params.gate);
    const cs2::SignalBuffer power =
        cs2::reconstruct_power(spec, y.size(), params.single_frame_phase);
    const cs2::EnvelopeEstimate est =
        cs2::estimate_envelope(power, params.sigma_w2);

    out.signal("envelope_estimate", "q_hat.sig", est.q_hat);
    write_spectrum_csv(out, spec);
    json rep = envelope_report(est, maybe_r2(cfg, est.q_hat));
    rep["params"] = params_to_json(params);
    out.text("report", "report.json", rep.dump(2) + "\n");
}

void cmd_pipeline(const json& cfg, const CliOptions& opt, Emitter& out) {
    check_keys(cfg, kPipelineKeys);
    const cs2::PipelineParams params = parse_pipeline_params(cfg, opt);
    const cs2::SignalBuffer x =
        cs2::read_signal(get_required_string(cfg, "x_path"));
    const cs2::PipelineResult res = cs2::pipeline(x, params);

    write_filter_csv(out, res.filter);
    out.signal("envelope_estimate", "q_hat.sig", res.envelope.q_hat);
    write_spectrum_csv(out, res.gated_spectrum);
    json rep = envelope_report(res.envelope,
                               maybe_r2(cfg, res.envelope.q_hat));
    rep["params"] = params_to_json(params);
    out.text("report", "report.json", rep.dump(2) + "\n");
}

void cmd_sweep(const json& cfg, const CliOptions& opt, Emitter& out) {
    check_keys(cfg, merge_keys({kSimKeys, kPipelineKeys, kSweepKeys}));
    cs2::SimConfig base = parse_sim_config(cfg, opt);
    base.sigma_w2_override.reset();  // the sweep sets noise per grid point
    if (base.envelope.components.empty() && base.k_components == 0)
        base.k_components = 1;  // placeholder; redrawn per run

    cs2::SweepConfig sweep;
    sweep.snr_grid = get_or<std::vector<double>>(
        cfg, "snr_grid", {-20.0, -10.0, -5.0, 0.0, 10.0, 20.0});
    sweep.runs_per_point =
        get_or<std::size_t>(cfg, "runs_per_point", sweep.runs_per_point);
    sweep.k_min = get_or<std::size_t>(cfg, "k_min", sweep.k_min);
    sweep.k_max = get_or<std::size_t>(cfg, "k_max", sweep.k_max);
    sweep.p_min = get_or<std::size_t>(cfg, "p_min", sweep.p_min);
    sweep.p_max = get_or<std::size_t>(cfg, "p_max", sweep.p_max);
    sweep.paired = get_or<bool>(cfg, "paired", sweep.paired);

    cs2::PipelineParams params = parse_pipeline_params(cfg, opt);
    const std::uint64_t master_seed =
        opt.seed ? *opt.seed : get_or<std::uint64_t>(cfg, "seed", 1);

    const cs2::SweepResult res =
        cs2::run_sweep(base, sweep, params, master_seed);

    std::vector<std::vector<double>> rows;
    for (const auto& pt : res.grid)
        rows.push_back({pt.snr_db, static_cast<double>(pt.runs),
                        static_cast<double>(pt.failures), pt.r2_mean,
                        pt.r2_std});
    cs2::write_csv(out.path("sweep.csv"),
                   {"snr_db", "runs", "failures", "r2_mean", "r2_std"}, rows);
    out.record("sweep_results", "sweep.csv");
    out.text("sweep_plot", "sweep.svg", cs2::render_sweep_svg(res));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cs2: blind deconvolution and envelope estimation for "
                 "second-order cyclostationary signals"};
    app.require_subcommand(1);

    CliOptions opt;
    std::vector<CLI::App*> subs;
    for (const char* name :
         {"simulate", "deconv", "envelope", "pipeline", "sweep"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "JSON config file")
            ->required();
        sub->add_option("--out", opt.out_dir, "output directory")->required();
        sub->add_option("--seed", opt.seed, "override the RNG seed");
        sub->add_option("--sigma-w2", opt.sigma_w2,
                        "override the known noise variance");
        sub->add_flag("--csv", opt.csv_export,
                      "additionally export signals as CSV");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage errors -> exit code 1
    }
    opt.command = app.get_subcommands().front()->get_name();

    const auto t0 = std::chrono::steady_clock::now();
    try {
        const json cfg = cs2::read_json_file(opt.config_path);
        Emitter out(opt);
        if (opt.command == "simulate") {
            cmd_simulate(cfg, opt, out);
        } else if (opt.command == "deconv") {
            cmd_deconv(cfg, opt, out);
        } else if (opt.command == "envelope") {
            cmd_envelope(cfg, opt, out);
        } else if (opt.command == "pipeline") {
            cmd_pipeline(cfg, opt, out);
        } else {
            cmd_sweep(cfg, opt, out);
        }
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
        out.finish(opt, ms);
    } catch (const cs2::Error& e) {
        std::cerr << "cs2 " << opt.command << ": " << e.what() << "\n";
        switch (e.kind()) {
            case cs2::ErrorKind::Config: return 1;
            case cs2::ErrorKind::Computation: return 2;
            case cs2::ErrorKind::Io: return 3;
        }
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "cs2 " << opt.command << ": " << e.what() << "\n";
        return 2;
    }
    return 0;
}
