#include "spdc/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdc/analysis.hpp"
#include "spdc/config.hpp"

namespace spdc {

namespace {

unsigned default_threads()
{
    if (const char* env = std::getenv("SPDCSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return static_cast<unsigned>(n);
    }
    return 2;
}

// "4ns", "256ps", "1.5us", "0.5" (seconds) -> seconds
double parse_time(const std::string& text)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw CLI::ValidationError("expected a time value, got '" + text + "'");
    }
    std::string unit = text.substr(pos);
    if (unit.empty() || unit == "s")
        return v;
    if (unit == "ms")
        return v * 1e-3;
    if (unit == "us")
        return v * 1e-6;
    if (unit == "ns")
        return v * 1e-9;
    if (unit == "ps")
        return v * 1e-12;
    throw CLI::ValidationError("unknown time unit '" + unit + "'");
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open output file " + path);
    for (const auto& l : lines)
        f << l << '\n';
    if (!f)
        throw std::runtime_error("write failed: " + path);
}

std::string keys_footer(const std::set<std::string>& sections)
{
    std::string out = "Config keys read by this command (default, provenance):\n";
    for (const auto& k : config_registry()) {
        if (!sections.contains(k.section))
            continue;
        out += "  [";
        out += k.section;
        out += "] ";
        out += k.key;
        out += " = ";
        out += k.default_value;
        out += "  (";
        out += k.provenance;
        out += ": ";
        out += k.description;
        out += ")\n";
    }
    return out;
}

struct CommonArgs {
    std::string config_path;
    unsigned threads = default_threads();
};

SourceConfig load_config(const CommonArgs& common)
{
    if (common.config_path.empty())
        return SourceConfig::defaults();
    return SourceConfig::load(common.config_path);
}

const BiphotonSpectrum& pick_spectrum(const ResolvedModel& model, bool filtered)
{
    return filtered ? model.spectrum_filtered : model.spectrum_unfiltered;
}

void cmd_spectrum(const ResolvedModel& model, bool filtered, double max_detuning_hz,
                  const std::string& out)
{
    const SourceConfig& cfg = model.config;
    BiphotonSpectrum spec;
    if (max_detuning_hz == cfg.max_detuning_hz) {
        spec = pick_spectrum(model, filtered);
    } else {
        const auto pairs = enumerate_mode_pairs(cfg.signal_cavity, cfg.idler_cavity,
                                                cfg.envelope, max_detuning_hz);
        spec = filtered ? build_spectrum(pairs, cfg.signal_cavity, cfg.idler_cavity, cfg.etalon)
                        : build_spectrum(pairs, cfg.signal_cavity, cfg.idler_cavity);
    }
    std::vector<std::string> lines = {"center_hz,weight,signal_fwhm_hz,idler_fwhm_hz"};
    for (const auto& l : spec.lines)
        lines.push_back(fmt(l.center_detuning_hz) + "," + fmt(l.amplitude_weight) + "," +
                        fmt(l.signal_fwhm_hz) + "," + fmt(l.idler_fwhm_hz));
    write_lines(out, lines);
}

void cmd_profile(const ResolvedModel& model, bool filtered, bool jitter, const std::string& out)
{
    const CorrelationProfile& p =
        jitter ? (filtered ? model.profile_filtered_jittered : model.profile_unfiltered_jittered)
               : (filtered ? model.profile_filtered : model.profile_unfiltered);
    std::vector<std::string> lines = {"tau_ns,density_per_s"};
    lines.reserve(p.density.size() + 1);
    for (std::size_t i = 0; i < p.density.size(); ++i)
        lines.push_back(fmt(p.grid.tau(i) * 1e9) + "," + fmt(p.density[i]));
    write_lines(out, lines);
}

void cmd_g2(const ResolvedModel& model, bool filtered, bool jitter, double bin_s, double span_s,
            double pairs, const std::string& out)
{
    const CorrelationProfile& p =
        jitter ? (filtered ? model.profile_filtered_jittered : model.profile_unfiltered_jittered)
               : (filtered ? model.profile_filtered : model.profile_unfiltered);
    const BinnedHistogram hist = bin_histogram(p, bin_s, pairs, -span_s, span_s);
    std::vector<std::string> lines = {"tau_ns,counts"};
    lines.reserve(hist.bin_centers_s.size() + 1);
    for (std::size_t i = 0; i < hist.bin_centers_s.size(); ++i)
        lines.push_back(fmt(hist.bin_centers_s[i] * 1e9) + "," + fmt(hist.expected_counts[i]));
    write_lines(out, lines);
}

// The sweep is the model curve of the measured decay: the estimator is
// efficiency-canceling, so the ideal accidental floor (no darks) applies.
// Dark counts still drive the simulated and analyzed streams.
SourceRateModel sweep_model(const ResolvedModel& model)
{
    SourceRateModel m = model.rates;
    m.dark_signal_hz = 0.0;
    m.dark_idler_hz = 0.0;
    return m;
}

void cmd_gsweep(const ResolvedModel& model, const std::vector<double>& powers,
                const std::string& out)
{
    if (powers.empty())
        throw CLI::ValidationError("gsweep: empty power list");
    const auto sweep =
        g2_power_sweep(sweep_model(model), model.calibration_profile, model.counting, powers);
    std::vector<std::string> lines = {"pump_mw,g2_zero,coincidence_rate_per_s"};
    for (const auto& [p, g2] : sweep)
        lines.push_back(fmt(p) + "," + fmt(g2) + "," +
                        fmt(coincidence_rate(model.rates, model.profile_filtered_jittered,
                                             model.counting, p)));
    write_lines(out, lines);
}

BiphotonSpectrum classical_reference(const SourceConfig& cfg)
{
    BiphotonSpectrum spec;
    spec.lines.push_back({0.0, cfg.michelson_laser_linewidth_hz,
                          cfg.michelson_laser_linewidth_hz, 1.0});
    spec.total_norm = line_density_integral(spec.lines.front());
    return spec;
}

void cmd_michelson(const ResolvedModel& model, bool filtered, bool classical, double max_path_m,
                   double step_m, const std::string& out)
{
    const BiphotonSpectrum spec =
        classical ? classical_reference(model.config) : pick_spectrum(model, filtered);
    const auto curve = michelson_curve(spec, max_path_m, step_m);
    std::vector<std::string> lines = {"path_m,visibility"};
    for (const auto& [x, v] : curve)
        lines.push_back(fmt(x) + "," + fmt(v));
    write_lines(out, lines);
}

void cmd_simulate(const ResolvedModel& model, double duration_s, double pump_mw,
                  std::uint64_t seed, bool filtered, bool chunked, const std::string& out,
                  unsigned threads)
{
    SimConfig sim = model.sim_config(duration_s, pump_mw, seed, filtered);
    sim.chunked_output = chunked;
    if (chunked) {
        simulate_to_file(sim, out, threads);
    } else {
        const TimeTagStream stream = simulate(sim, threads);
        write_tags(stream, out);
    }
}

void cmd_analyze(const ResolvedModel& model, const std::string& tags_path, double bin_s,
                 double span_s, double duration_s, const std::string& report,
                 const std::string& hist_out, unsigned threads)
{
    TimeTagStream stream = read_tags(tags_path);
    stream.duration_s = duration_s;  // 0 = derive from the observed span
    const RunSummary summary = analyze_run(stream, bin_s, -span_s, span_s,
                                           model.pair_jitter_fwhm_s(),
                                           model.analysis_options(), threads);
    const std::string text = format_summary(summary);
    std::cout << text;
    if (!report.empty())
        write_lines(report, {text});
    if (!hist_out.empty()) {
        const auto [signal, idler] = split_channels(stream);
        const Correlogram corr = cross_correlogram(signal, idler, bin_s, -span_s, span_s,
                                                   threads, stream.duration_s);
        std::vector<std::string> lines = {"tau_ns,counts"};
        for (std::size_t i = 0; i < corr.counts.size(); ++i)
            lines.push_back(fmt(corr.bin_center_s(i) * 1e9) + "," +
                            std::to_string(corr.counts[i]));
        write_lines(hist_out, lines);
    }
}

void reproduce_fig2(const ResolvedModel& model, const std::filesystem::path& dir,
                    std::uint64_t seed, unsigned threads)
{
    const SourceConfig& cfg = model.config;
    const TimeTagStream stream = simulate(
        model.sim_config(cfg.fig2_duration_s, cfg.fig2_pump_mw, seed, cfg.etalon_default_on),
        threads);
    const auto [signal, idler] = split_channels(stream);
    const Correlogram corr =
        cross_correlogram(signal, idler, model.counting.bin_width_s, -cfg.tau_span_s,
                          cfg.tau_span_s, threads, stream.duration_s);
    std::vector<std::string> lines = {"tau_ns,counts"};
    for (std::size_t i = 0; i < corr.counts.size(); ++i)
        lines.push_back(fmt(corr.bin_center_s(i) * 1e9) + "," + std::to_string(corr.counts[i]));
    write_lines((dir / "fig2_histogram.csv").string(), lines);

    const RunSummary summary = analyze_run(stream, model.counting.bin_width_s, -cfg.tau_span_s,
                                           cfg.tau_span_s, model.pair_jitter_fwhm_s(),
                                           model.analysis_options(), threads);
    write_lines((dir / "fig2_report.txt").string(), {format_summary(summary)});
    std::cout << format_summary(summary);
}

void reproduce_fig3(const ResolvedModel& model, const std::filesystem::path& dir)
{
    const auto sweep = g2_power_sweep(sweep_model(model), model.calibration_profile,
                                      model.counting, model.config.fig3_powers_mw);
    std::vector<std::string> lines = {"pump_mw,g2_zero,coincidence_rate_per_s"};
    for (const auto& [p, g2] : sweep)
        lines.push_back(fmt(p) + "," + fmt(g2) + "," +
                        fmt(coincidence_rate(model.rates, model.profile_filtered_jittered,
                                             model.counting, p)));
    write_lines((dir / "fig3_sweep.csv").string(), lines);
    std::cout << "inverse_power_slope = " << fmt(inverse_power_slope(sweep)) << '\n';
}

void reproduce_fig4(const ResolvedModel& model, const std::filesystem::path& dir,
                    std::uint64_t seed, unsigned threads)
{
    const SourceConfig& cfg = model.config;
    for (const bool filtered : {false, true}) {
        const TimeTagStream stream = simulate(
            model.sim_config(cfg.fig4_duration_s, cfg.fig4_pump_mw, seed, filtered), threads);
        const auto [signal, idler] = split_channels(stream);
        const Correlogram corr =
            cross_correlogram(signal, idler, cfg.comb_bin_width_s, -cfg.tau_span_s,
                              cfg.tau_span_s, threads, stream.duration_s);
        std::vector<std::string> lines = {"tau_ns,counts"};
        for (std::size_t i = 0; i < corr.counts.size(); ++i)
            lines.push_back(fmt(corr.bin_center_s(i) * 1e9) + "," +
                            std::to_string(corr.counts[i]));
        const char* name = filtered ? "fig4_filtered.csv" : "fig4_unfiltered.csv";
        write_lines((dir / name).string(), lines);
        try {
            const double period = comb_period(corr, model.analysis_options());
            std::cout << (filtered ? "filtered" : "unfiltered")
                      << "_comb_period_ps = " << fmt(period * 1e12) << '\n';
        } catch (const NoCombDetected&) {
            std::cout << (filtered ? "filtered" : "unfiltered") << "_comb_period_ps = none\n";
        }
    }
}

void reproduce_fig5(const ResolvedModel& model, const std::filesystem::path& dir)
{
    const SourceConfig& cfg = model.config;
    struct Case {
        const char* name;
        BiphotonSpectrum spec;
    };
    const std::vector<Case> cases = {
        {"fig5_classical.csv", classical_reference(cfg)},
        {"fig5_unfiltered.csv", model.spectrum_unfiltered},
        {"fig5_filtered.csv", model.spectrum_filtered},
    };
    for (const auto& c : cases) {
        const auto curve = michelson_curve(c.spec, cfg.michelson_max_path_m, cfg.michelson_step_m);
        std::vector<std::string> lines = {"path_m,visibility"};
        double mean = 0.0;
        for (const auto& [x, v] : curve) {
            lines.push_back(fmt(x) + "," + fmt(v));
            mean += v;
        }
        write_lines((dir / c.name).string(), lines);
        std::cout << c.name << " mean_visibility = "
                  << fmt(mean / static_cast<double>(curve.size())) << '\n';
    }
}

void reproduce_brightness(const ResolvedModel& model)
{
    const SourceConfig& cfg = model.config;
    const double rate = coincidence_rate(model.rates, model.profile_filtered_jittered,
                                         model.counting, cfg.pair_rate_anchor_pump_mw);
    const double mean_bw_mhz =
        0.5 * (cfg.signal_cavity.fwhm_hz + cfg.idler_cavity.fwhm_hz) / 1e6;
    const double b = spectral_brightness(rate, cfg.pair_rate_anchor_pump_mw, mean_bw_mhz);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", b);
    std::cout << "coincidence_rate_per_s = " << fmt(rate) << '\n';
    std::cout << "brightness_per_s_per_mhz_per_mw = " << buf << '\n';
}

int dispatch(int argc, const char* const* argv)
{
    CLI::App app{"Simulator and analysis toolkit for a narrow-band cavity-enhanced "
                 "photon-pair source"};
    app.require_subcommand(1);

    CommonArgs common;
    app.add_option("--config", common.config_path, "Configuration file (sectioned key=value)");
    app.add_option("--threads", common.threads,
                   "Worker cap (default: SPDCSIM_THREADS or 2)");

    // spectrum
    auto* sp = app.add_subcommand("spectrum", "Write the mode-line spectrum as CSV");
    std::string sp_out = "spectrum.csv";
    std::string sp_etalon = "off";
    double sp_maxdet = -1.0;
    sp->add_option("--out", sp_out, "Output CSV path");
    sp->add_option("--etalon", sp_etalon, "on|off")->check(CLI::IsMember({"on", "off"}));
    sp->add_option("--max-detuning", sp_maxdet, "Enumeration span in Hz (default: grid value)");
    sp->footer(keys_footer({"signal_cavity", "idler_cavity", "phase_matching", "etalon", "grid"}));

    // profile
    auto* pr = app.add_subcommand("profile", "Write the continuous G2 delay density as CSV");
    std::string pr_out = "profile.csv";
    std::string pr_etalon = "off";
    std::string pr_jitter = "on";
    pr->add_option("--out", pr_out, "Output CSV path");
    pr->add_option("--etalon", pr_etalon, "on|off")->check(CLI::IsMember({"on", "off"}));
    pr->add_option("--jitter", pr_jitter, "on|off: convolve detector jitter")
        ->check(CLI::IsMember({"on", "off"}));
    pr->footer(keys_footer({"signal_cavity", "idler_cavity", "phase_matching", "etalon", "grid",
                            "detector"}));

    // g2 histogram
    auto* g2c = app.add_subcommand("g2", "Write the expected coincidence histogram as CSV");
    std::string g2_out = "g2.csv";
    std::string g2_etalon = "off";
    std::string g2_jitter = "on";
    std::string g2_bin = "4ns";
    std::string g2_span = "400ns";
    double g2_pairs = -1.0;
    g2c->add_option("--out", g2_out, "Output CSV path");
    g2c->add_option("--bin", g2_bin, "Bin width (e.g. 4ns, 256ps)");
    g2c->add_option("--span", g2_span, "Histogram half-span");
    g2c->add_option("--pairs", g2_pairs,
                    "Total detected pairs (default: calibrated rate x integration time)");
    g2c->add_option("--etalon", g2_etalon, "on|off")->check(CLI::IsMember({"on", "off"}));
    g2c->add_option("--jitter", g2_jitter, "on|off")->check(CLI::IsMember({"on", "off"}));
    g2c->footer(keys_footer({"signal_cavity", "idler_cavity", "phase_matching", "etalon", "grid",
                             "detector", "rates", "calibration", "analysis"}));

    // gsweep
    auto* gs = app.add_subcommand("gsweep", "g2(0) and coincidence rate versus pump power");
    std::string gs_out = "gsweep.csv";
    std::vector<double> gs_powers;
    gs->add_option("--out", gs_out, "Output CSV path");
    gs->add_option("--powers", gs_powers, "Pump powers in mW")->delimiter(',');
    gs->footer(keys_footer({"rates", "calibration", "analysis"}));

    // michelson
    auto* mi = app.add_subcommand("michelson", "Visibility versus optical path difference");
    std::string mi_out = "michelson.csv";
    std::string mi_filtered = "on";
    bool mi_classical = false;
    double mi_maxpath = -1.0;
    double mi_step = -1.0;
    mi->add_option("--out", mi_out, "Output CSV path");
    mi->add_option("--filtered", mi_filtered, "on|off: etalon in the idler arm")
        ->check(CLI::IsMember({"on", "off"}));
    mi->add_flag("--classical", mi_classical, "Use the classical laser reference line");
    mi->add_option("--max-path", mi_maxpath, "Scan extent in m");
    mi->add_option("--step", mi_step, "Scan step in m");
    mi->footer(keys_footer({"signal_cavity", "idler_cavity", "phase_matching", "etalon",
                            "michelson"}));

    // simulate
    auto* si = app.add_subcommand("simulate", "Generate a detector time-tag stream");
    std::string si_out = "tags.ttg";
    double si_duration = 1.0;
    double si_pump = 1.0;
    std::uint64_t si_seed = 0;
    bool si_seed_set = false;
    std::string si_etalon = "off";
    bool si_chunked = false;
    si->add_option("--out", si_out, "Output tag file (.ttg binary or .csv)");
    si->add_option("--duration", si_duration, "Run length in seconds")->required();
    si->add_option("--pump", si_pump, "Pump power in mW")->required();
    si->add_option("--seed", si_seed, "RNG seed (default: config seed)")
        ->each([&](const std::string&) { si_seed_set = true; });
    si->add_option("--etalon", si_etalon, "on|off")->check(CLI::IsMember({"on", "off"}));
    si->add_flag("--chunked", si_chunked, "Stream slices straight to disk");
    si->footer(keys_footer({"signal_cavity", "idler_cavity", "phase_matching", "etalon", "grid",
                            "rates", "calibration", "detector", "chopper", "reproduce"}));

    // analyze
    auto* an = app.add_subcommand("analyze", "Analyze a time-tag stream");
    std::string an_tags;
    std::string an_bin = "4ns";
    std::string an_span = "400ns";
    double an_duration = 0.0;
    std::string an_report;
    std::string an_hist;
    an->add_option("tags", an_tags, "Tag file (.ttg or .csv)")->required();
    an->add_option("--bin", an_bin, "Bin width (e.g. 4ns, 256ps)");
    an->add_option("--span", an_span, "Correlogram half-span");
    an->add_option("--duration", an_duration, "Wall time in s (default: observed span)");
    an->add_option("--report", an_report, "Write the summary to this file");
    an->add_option("--hist", an_hist, "Write the correlogram CSV to this file");
    an->footer(keys_footer({"analysis", "detector"}));

    // reproduce
    auto* re = app.add_subcommand("reproduce", "Recreate the headline measurements as CSV");
    std::string re_what;
    std::string re_dir = ".";
    std::uint64_t re_seed = 0;
    bool re_seed_set = false;
    re->add_option("what", re_what, "fig2|fig3|fig4|fig5|brightness")->required();
    re->add_option("--out-dir", re_dir, "Output directory");
    re->add_option("--seed", re_seed, "RNG seed (default: config seed)")
        ->each([&](const std::string&) { re_seed_set = true; });
    re->footer(keys_footer({"signal_cavity", "idler_cavity", "phase_matching", "etalon", "grid",
                            "rates", "calibration", "detector", "chopper", "analysis",
                            "michelson", "reproduce"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const SourceConfig cfg = load_config(common);
    const ResolvedModel model = resolve_model(cfg);

    if (*sp) {
        cmd_spectrum(model, sp_etalon == "on",
                     sp_maxdet < 0.0 ? cfg.max_detuning_hz : sp_maxdet, sp_out);
    } else if (*pr) {
        cmd_profile(model, pr_etalon == "on", pr_jitter == "on", pr_out);
    } else if (*g2c) {
        double pairs = g2_pairs;
        if (pairs < 0.0) {
            const double survival =
                g2_etalon == "on" ? model.rates.single_mode_fraction : 1.0;
            pairs = model.rates.duty_cycle * model.rates.eta_signal * model.rates.eta_idler *
                    survival * model.rates.pair_rate_per_mw * cfg.fig2_pump_mw *
                    model.counting.integration_time_s;
        }
        cmd_g2(model, g2_etalon == "on", g2_jitter == "on", parse_time(g2_bin),
               parse_time(g2_span), pairs, g2_out);
    } else if (*gs) {
        cmd_gsweep(model, gs_powers, gs_out);
    } else if (*mi) {
        cmd_michelson(model, mi_filtered == "on", mi_classical,
                      mi_maxpath < 0.0 ? cfg.michelson_max_path_m : mi_maxpath,
                      mi_step < 0.0 ? cfg.michelson_step_m : mi_step, mi_out);
    } else if (*si) {
        cmd_simulate(model, si_duration, si_pump, si_seed_set ? si_seed : cfg.seed,
                     si_etalon == "on", si_chunked, si_out, common.threads);
    } else if (*an) {
        cmd_analyze(model, an_tags, parse_time(an_bin), parse_time(an_span), an_duration,
                    an_report, an_hist, common.threads);
    } else if (*re) {
        const std::filesystem::path dir(re_dir);
        std::filesystem::create_directories(dir);
        const std::uint64_t seed = re_seed_set ? re_seed : cfg.seed;
        if (re_what == "fig2")
            reproduce_fig2(model, dir, seed, common.threads);
        else if (re_what == "fig3")
            reproduce_fig3(model, dir);
        else if (re_what == "fig4")
            reproduce_fig4(model, dir, seed, common.threads);
        else if (re_what == "fig5")
            reproduce_fig5(model, dir);
        else if (re_what == "brightness")
            reproduce_brightness(model);
        else
            throw CLI::ValidationError("unknown figure '" + re_what + "'");
    }
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv)
{
    try {
        return dispatch(argc, argv);
    } catch (const CLI::ParseError&) {
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const TagFileError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const StreamTooLarge& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}

} // namespace spdc
