//
// Source configuration: a sectioned key=value file holding every model
// parameter, each with a documented default and a provenance tag (measured
// setup value vs assumed). Unknown keys are rejected with line numbers.
// resolve_model() turns a configuration into ready-to-use spectra, profiles,
// and a calibrated rate model.
//

#ifndef SPDC_CONFIG_HPP
#define SPDC_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spdc/analysis.hpp"
#include "spdc/correlation.hpp"
#include "spdc/rates.hpp"
#include "spdc/spectral.hpp"
#include "spdc/timetag.hpp"

namespace spdc {

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int line_no, const std::string& what)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what
                                         : what),
          line(line_no)
    {
    }
};

struct ConfigKey {
    const char* section;
    const char* key;
    const char* default_value;
    const char* provenance;   // "measured" or "assumed"
    const char* description;
};

const std::vector<ConfigKey>& config_registry();

struct SourceConfig {
    CavityParams signal_cavity{800e6, 4e6, 1.0, 0.0};
    CavityParams idler_cavity{802e6, 5e6, 1.0, 0.0};
    PhaseMatchEnvelope envelope{120e9, EnvelopeShape::sinc_squared};
    EtalonParams etalon{8.4e9, 120e6, 0.0};
    bool etalon_default_on = false;

    SourceRateModel rates{0.0, 0.06, 0.06, 200.0, 200.0, 1.0 / 3.0, 1.0};
    bool pair_rate_auto = true;
    bool single_mode_fraction_auto = true;
    double g2_anchor = 88.0;
    double g2_anchor_pump_mw = 1.0;
    double pair_rate_anchor_hz = 20.0;
    double pair_rate_anchor_pump_mw = 0.9;

    double detector_jitter_fwhm_s = 350e-12;
    ChopperConfig chopper{1000.0, 1.0 / 3.0};

    double tau_span_s = 400e-9;
    double tau_step_s = 16e-12;
    double max_detuning_hz = 6e9;

    CountingConfig counting{4e-9, 200e-9, 250e-9, 1200.0};
    double comb_bin_width_s = 256e-12;

    double michelson_wavelength_m = 880e-9;
    double michelson_laser_linewidth_hz = 100e3;
    double michelson_max_path_m = 0.5;
    double michelson_step_m = 0.002;

    double fig2_duration_s = 1200.0;
    double fig2_pump_mw = 0.8;
    double fig4_duration_s = 10.0;
    double fig4_pump_mw = 0.8;
    std::vector<double> fig3_powers_mw = {0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.4, 2.0};
    std::uint64_t seed = 12345;

    static SourceConfig defaults() { return {}; }
    static SourceConfig load(const std::string& path);
    static SourceConfig parse(const std::string& text);
};

// Text of the shipped default configuration (paper_defaults.cfg).
std::string default_config_text();

// Everything the subcommands consume, derived once from a configuration:
// mode spectra with and without the etalon, their delay profiles (raw for
// simulation, jitter-convolved for measurement-side predictions), and the
// calibrated rate model.
struct ResolvedModel {
    SourceConfig config;
    BiphotonSpectrum spectrum_unfiltered;
    BiphotonSpectrum spectrum_filtered;
    CorrelationProfile profile_unfiltered;
    CorrelationProfile profile_filtered;
    CorrelationProfile profile_unfiltered_jittered;
    CorrelationProfile profile_filtered_jittered;
    CorrelationProfile calibration_profile;   // single line, jitter-convolved
    SourceRateModel rates;                    // calibrated
    CountingConfig counting;

    double pair_jitter_fwhm_s() const { return pair_jitter_fwhm(config.detector_jitter_fwhm_s); }
    AnalysisOptions analysis_options() const;
    SimConfig sim_config(double duration_s, double pump_mw, std::uint64_t seed,
                         bool filtered) const;
};

ResolvedModel resolve_model(const SourceConfig& config);

} // namespace spdc

#endif
