#include "spdc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace spdc {

namespace {

// section, key, default, provenance, description
const std::vector<ConfigKey> kRegistry = {
    {"signal_cavity", "fsr_hz", "800e6", "measured", "signal (935 nm) cavity free spectral range"},
    {"signal_cavity", "fwhm_hz", "4e6", "measured", "signal cavity linewidth"},
    {"signal_cavity", "peak_transmission", "1.0", "assumed", "on-resonance transmission"},
    {"signal_cavity", "comb_offset_hz", "0", "measured", "lock offset of the nearest mode"},
    {"idler_cavity", "fsr_hz", "802e6", "assumed", "idler (880 nm) cavity FSR; mismatch vs signal sets the Vernier cluster"},
    {"idler_cavity", "fwhm_hz", "5e6", "measured", "idler cavity linewidth"},
    {"idler_cavity", "peak_transmission", "1.0", "assumed", "on-resonance transmission"},
    {"idler_cavity", "comb_offset_hz", "0", "measured", "lock offset of the nearest mode"},
    {"phase_matching", "fwhm_hz", "120e9", "measured", "phase-matching envelope width"},
    {"phase_matching", "shape", "sinc_squared", "assumed", "sinc_squared or gaussian"},
    {"etalon", "fsr_hz", "8.4e9", "measured", "etalon free spectral range"},
    {"etalon", "fwhm_hz", "120e6", "measured", "etalon bandwidth"},
    {"etalon", "center_offset_hz", "0", "measured", "etalon lock offset"},
    {"etalon", "default_on", "false", "assumed", "insert the etalon unless a command says otherwise"},
    {"rates", "pair_rate_per_mw", "auto", "assumed", "generated pairs/s/mW in open windows; auto = calibrate from the g2 anchor"},
    {"rates", "eta_signal", "0.06", "assumed", "signal-arm detection efficiency"},
    {"rates", "eta_idler", "0.06", "assumed", "idler-arm detection efficiency"},
    {"rates", "dark_signal_hz", "200", "assumed", "signal detector dark rate"},
    {"rates", "dark_idler_hz", "200", "assumed", "idler detector dark rate"},
    {"rates", "duty_cycle", "0.333333333333", "measured", "chopper duty cycle"},
    {"rates", "single_mode_fraction", "auto", "assumed", "filtered pair survival; auto = calibrate from the rate anchor"},
    {"calibration", "g2_anchor", "88", "measured", "g2(0) at the anchor pump power"},
    {"calibration", "g2_anchor_pump_mw", "1.0", "measured", "pump power of the g2 anchor"},
    {"calibration", "pair_rate_anchor_hz", "20", "measured", "detected filtered pair rate at the rate anchor"},
    {"calibration", "pair_rate_anchor_pump_mw", "0.9", "measured", "pump power of the rate anchor"},
    {"detector", "jitter_fwhm_s", "350e-12", "measured", "per-detector timing resolution (FWHM)"},
    {"chopper", "frequency_hz", "1000", "assumed", "chopper frequency"},
    {"chopper", "open_fraction", "0.333333333333", "measured", "fraction of each period the source emits"},
    {"grid", "tau_span_s", "400e-9", "assumed", "half-span of the delay grid"},
    {"grid", "tau_step_s", "16e-12", "assumed", "delay grid step"},
    {"grid", "max_detuning_hz", "6e9", "assumed", "mode-enumeration span for time-domain work (16 ps grid resolves up to 6.25 GHz)"},
    {"analysis", "bin_width_s", "4e-9", "measured", "coincidence histogram bin size"},
    {"analysis", "comb_bin_width_s", "256e-12", "measured", "fine bin size for the comb view"},
    {"analysis", "accidental_min_s", "200e-9", "measured", "accidental region lower edge"},
    {"analysis", "accidental_max_s", "250e-9", "measured", "accidental region upper edge"},
    {"analysis", "integration_time_s", "1200", "measured", "default integration time"},
    {"michelson", "wavelength_m", "880e-9", "measured", "interferometer wavelength (idler arm)"},
    {"michelson", "laser_linewidth_hz", "100e3", "assumed", "classical reference linewidth"},
    {"michelson", "max_path_m", "0.5", "assumed", "test-region extent"},
    {"michelson", "step_m", "0.002", "assumed", "path-difference step"},
    {"reproduce", "fig2_duration_s", "1200", "measured", "integration time of the coarse-bin run"},
    {"reproduce", "fig2_pump_mw", "0.8", "measured", "pump power of the coarse-bin run"},
    {"reproduce", "fig4_duration_s", "10", "assumed", "integration time of the fine-bin comb run"},
    {"reproduce", "fig4_pump_mw", "0.8", "assumed", "pump power of the fine-bin comb run"},
    {"reproduce", "fig3_powers_mw", "0.05,0.1,0.2,0.4,0.6,0.8,1.0,1.4,2.0", "assumed", "pump powers of the g2 sweep"},
    {"reproduce", "seed", "12345", "assumed", "default simulation seed"},
};

std::string trim(const std::string& s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& v, int line)
{
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(line, "expected a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, int line)
{
    if (v == "true" || v == "on" || v == "1")
        return true;
    if (v == "false" || v == "off" || v == "0")
        return false;
    throw ConfigError(line, "expected true/false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& v, int line)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_double(trim(item), line));
    return out;
}

bool known_key(const std::string& section, const std::string& key)
{
    return std::any_of(kRegistry.begin(), kRegistry.end(), [&](const ConfigKey& k) {
        return section == k.section && key == k.key;
    });
}

void apply(SourceConfig& c, const std::string& sec, const std::string& key,
           const std::string& value, int line)
{
    if (!known_key(sec, key))
        throw ConfigError(line, "unknown key '" + sec + "." + key + "'");

    auto num = [&] { return parse_double(value, line); };
    if (sec == "signal_cavity" || sec == "idler_cavity") {
        CavityParams& cav = sec == "signal_cavity" ? c.signal_cavity : c.idler_cavity;
        if (key == "fsr_hz")
            cav.fsr_hz = num();
        else if (key == "fwhm_hz")
            cav.fwhm_hz = num();
        else if (key == "peak_transmission")
            cav.peak_transmission = num();
        else if (key == "comb_offset_hz")
            cav.comb_offset_hz = num();
    } else if (sec == "phase_matching") {
        if (key == "fwhm_hz")
            c.envelope.fwhm_hz = num();
        else if (key == "shape") {
            if (value == "sinc_squared")
                c.envelope.shape = EnvelopeShape::sinc_squared;
            else if (value == "gaussian")
                c.envelope.shape = EnvelopeShape::gaussian;
            else
                throw ConfigError(line, "shape must be sinc_squared or gaussian");
        }
    } else if (sec == "etalon") {
        if (key == "fsr_hz")
            c.etalon.fsr_hz = num();
        else if (key == "fwhm_hz")
            c.etalon.fwhm_hz = num();
        else if (key == "center_offset_hz")
            c.etalon.center_offset_hz = num();
        else if (key == "default_on")
            c.etalon_default_on = parse_bool(value, line);
    } else if (sec == "rates") {
        if (key == "pair_rate_per_mw") {
            if (value == "auto") {
                c.pair_rate_auto = true;
            } else {
                c.pair_rate_auto = false;
                c.rates.pair_rate_per_mw = num();
            }
        } else if (key == "eta_signal")
            c.rates.eta_signal = num();
        else if (key == "eta_idler")
            c.rates.eta_idler = num();
        else if (key == "dark_signal_hz")
            c.rates.dark_signal_hz = num();
        else if (key == "dark_idler_hz")
            c.rates.dark_idler_hz = num();
        else if (key == "duty_cycle")
            c.rates.duty_cycle = num();
        else if (key == "single_mode_fraction") {
            if (value == "auto") {
                c.single_mode_fraction_auto = true;
            } else {
                c.single_mode_fraction_auto = false;
                c.rates.single_mode_fraction = num();
            }
        }
    } else if (sec == "calibration") {
        if (key == "g2_anchor")
            c.g2_anchor = num();
        else if (key == "g2_anchor_pump_mw")
            c.g2_anchor_pump_mw = num();
        else if (key == "pair_rate_anchor_hz")
            c.pair_rate_anchor_hz = num();
        else if (key == "pair_rate_anchor_pump_mw")
            c.pair_rate_anchor_pump_mw = num();
    } else if (sec == "detector") {
        if (key == "jitter_fwhm_s")
            c.detector_jitter_fwhm_s = num();
    } else if (sec == "chopper") {
        if (key == "frequency_hz")
            c.chopper.frequency_hz = num();
        else if (key == "open_fraction")
            c.chopper.open_fraction = num();
    } else if (sec == "grid") {
        if (key == "tau_span_s")
            c.tau_span_s = num();
        else if (key == "tau_step_s")
            c.tau_step_s = num();
        else if (key == "max_detuning_hz")
            c.max_detuning_hz = num();
    } else if (sec == "analysis") {
        if (key == "bin_width_s")
            c.counting.bin_width_s = num();
        else if (key == "comb_bin_width_s")
            c.comb_bin_width_s = num();
        else if (key == "accidental_min_s")
            c.counting.accidental_min_s = num();
        else if (key == "accidental_max_s")
            c.counting.accidental_max_s = num();
        else if (key == "integration_time_s")
            c.counting.integration_time_s = num();
    } else if (sec == "michelson") {
        if (key == "wavelength_m")
            c.michelson_wavelength_m = num();
        else if (key == "laser_linewidth_hz")
            c.michelson_laser_linewidth_hz = num();
        else if (key == "max_path_m")
            c.michelson_max_path_m = num();
        else if (key == "step_m")
            c.michelson_step_m = num();
    } else if (sec == "reproduce") {
        if (key == "fig2_duration_s")
            c.fig2_duration_s = num();
        else if (key == "fig2_pump_mw")
            c.fig2_pump_mw = num();
        else if (key == "fig4_duration_s")
            c.fig4_duration_s = num();
        else if (key == "fig4_pump_mw")
            c.fig4_pump_mw = num();
        else if (key == "fig3_powers_mw")
            c.fig3_powers_mw = parse_double_list(value, line);
        else if (key == "seed") {
            const double s = num();
            if (s < 0 || s != std::floor(s))
                throw ConfigError(line, "seed must be a nonnegative integer");
            c.seed = static_cast<std::uint64_t>(s);
        }
    }
}

} // namespace

const std::vector<ConfigKey>& config_registry()
{
    return kRegistry;
}

SourceConfig SourceConfig::parse(const std::string& text)
{
    SourceConfig c = defaults();
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find_first_of("#;");
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            const bool known = std::any_of(kRegistry.begin(), kRegistry.end(),
                                           [&](const ConfigKey& k) { return section == k.section; });
            if (!known)
                throw ConfigError(line, "unknown section '" + section + "'");
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "expected key = value");
        if (section.empty())
            throw ConfigError(line, "key outside any section");
        apply(c, section, trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line);
    }
    return c;
}

SourceConfig SourceConfig::load(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError(0, "cannot open config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::string default_config_text()
{
    std::ostringstream os;
    os << "# Narrow-band cavity-enhanced SPDC pair source: model parameters.\n";
    os << "# Each value is tagged 'measured' (a setup value of the modeled source)\n";
    os << "# or 'assumed' (a modeling choice that the source leaves open).\n";
    std::string section;
    for (const auto& k : kRegistry) {
        if (section != k.section) {
            section = k.section;
            os << "\n[" << section << "]\n";
        }
        os << k.key << " = " << k.default_value << "   # " << k.provenance << ": "
           << k.description << "\n";
    }
    return os.str();
}

AnalysisOptions ResolvedModel::analysis_options() const
{
    AnalysisOptions opts;
    opts.accidental_min_s = counting.accidental_min_s;
    opts.accidental_max_s = counting.accidental_max_s;
    return opts;
}

SimConfig ResolvedModel::sim_config(double duration_s, double pump_mw, std::uint64_t seed,
                                    bool filtered) const
{
    SimConfig sim;
    sim.duration_s = duration_s;
    sim.pump_mw = pump_mw;
    sim.model = rates;
    sim.profile = filtered ? profile_filtered : profile_unfiltered;
    sim.jitter_fwhm_s = config.detector_jitter_fwhm_s;
    sim.chopper = config.chopper;
    sim.rng_seed = seed;
    sim.filtered = filtered;
    return sim;
}

ResolvedModel resolve_model(const SourceConfig& config)
{
    config.signal_cavity.validate();
    config.idler_cavity.validate();
    config.envelope.validate();
    config.etalon.validate();
    config.chopper.validate();

    ResolvedModel m;
    m.config = config;
    m.counting = config.counting;
    m.counting.validate();

    const auto pairs = enumerate_mode_pairs(config.signal_cavity, config.idler_cavity,
                                            config.envelope, config.max_detuning_hz);
    m.spectrum_unfiltered = build_spectrum(pairs, config.signal_cavity, config.idler_cavity);
    m.spectrum_filtered =
        build_spectrum(pairs, config.signal_cavity, config.idler_cavity, config.etalon);

    const TauGrid grid = TauGrid::symmetric(config.tau_span_s, config.tau_step_s);
    const double jitter_pair = pair_jitter_fwhm(config.detector_jitter_fwhm_s);

    m.profile_unfiltered = g2_profile(biphoton_wavepacket(m.spectrum_unfiltered, grid));
    m.profile_filtered = g2_profile(biphoton_wavepacket(m.spectrum_filtered, grid));
    m.profile_unfiltered_jittered = convolve_jitter(m.profile_unfiltered, jitter_pair);
    m.profile_filtered_jittered = convolve_jitter(m.profile_filtered, jitter_pair);

    // Calibration profile: the bare doubly resonant line.
    const std::vector<ModePair> central = {
        {0, config.signal_cavity.comb_offset_hz, 0.0, 1.0}};
    const BiphotonSpectrum single =
        build_spectrum(central, config.signal_cavity, config.idler_cavity);
    m.calibration_profile =
        convolve_jitter(g2_profile(biphoton_wavepacket(single, grid)), jitter_pair);

    m.rates = config.rates;
    if (config.pair_rate_auto)
        m.rates.pair_rate_per_mw = calibrate_pair_rate(
            m.calibration_profile, m.counting.bin_width_s, config.g2_anchor,
            config.g2_anchor_pump_mw);
    if (config.single_mode_fraction_auto)
        m.rates.single_mode_fraction = calibrate_single_mode_fraction(
            m.rates, config.pair_rate_anchor_hz, config.pair_rate_anchor_pump_mw);
    m.rates.validate();
    return m;
}

} // namespace spdc
