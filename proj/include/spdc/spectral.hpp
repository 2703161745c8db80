//
// Frequency-domain model of a doubly resonant, doubly filtered SPDC source:
// Fabry-Perot mode combs for the two conjoined cavities, phase-matching
// envelope, Vernier enumeration of doubly resonant mode pairs, and the
// etalon filter. All detunings live on a single axis (the signal detuning
// from its locked frequency); the CW pump pins the idler to the mirror
// frequency.
//

#ifndef SPDC_SPECTRAL_HPP
#define SPDC_SPECTRAL_HPP

#include <optional>
#include <vector>

namespace spdc {

struct CavityParams {
    double fsr_hz = 0.0;
    double fwhm_hz = 0.0;
    double peak_transmission = 1.0;
    double comb_offset_hz = 0.0;   // detuning of the nearest resonance from the locked frequency

    double finesse() const { return fsr_hz / fwhm_hz; }
    void validate() const;         // throws std::invalid_argument
};

struct EtalonParams {
    double fsr_hz = 0.0;
    double fwhm_hz = 0.0;
    double center_offset_hz = 0.0;

    double finesse() const { return fsr_hz / fwhm_hz; }
    void validate() const;
};

enum class EnvelopeShape { sinc_squared, gaussian };

struct PhaseMatchEnvelope {
    double fwhm_hz = 0.0;
    EnvelopeShape shape = EnvelopeShape::sinc_squared;

    void validate() const;
};

// One doubly resonant signal/idler mode pair. signal_detuning = m * FSR_s
// (plus comb offsets); idler_mismatch is the residual detuning of the
// energy-conserving idler partner from the nearest idler-cavity resonance,
// wrapped into (-FSR_i/2, FSR_i/2].
struct ModePair {
    int index = 0;
    double signal_detuning_hz = 0.0;
    double idler_mismatch_hz = 0.0;
    double joint_weight = 0.0;
};

// Lorentzian line of the joint spectrum. amplitude_weight is the raw filter
// product in [0,1]; total_norm below carries the normalization.
struct SpectralLine {
    double center_detuning_hz = 0.0;
    double signal_fwhm_hz = 0.0;
    double idler_fwhm_hz = 0.0;
    double amplitude_weight = 0.0;
};

// Joint spectral density as a weighted list of Lorentzian lines.
// total_norm = sum of per-line integrated temporal densities, so
// |Psi(tau)|^2 / total_norm integrates to 1 (up to inter-line cross terms
// of order (linewidth/line spacing)^2).
struct BiphotonSpectrum {
    std::vector<SpectralLine> lines;
    double total_norm = 0.0;

    double max_abs_detuning_hz() const;
};

// Airy intensity transmission, peak/(1 + (2F/pi)^2 sin^2(pi*Omega/FSR)),
// F = FSR/FWHM. Periodic in the FSR; equals peak/2 at half the FWHM off
// resonance (to the finesse>~10 accuracy of the coefficient-finesse form).
double cavity_transmission(const CavityParams& params, double detuning_hz);
double etalon_transmission(const EtalonParams& params, double detuning_hz);

// Effective mirror amplitude factor r with pi*sqrt(r)/(1-r) = finesse.
double mirror_amplitude_factor(double finesse);

// Phase-matching envelope, 1 at zero detuning, 1/2 at +-fwhm/2.
double phase_matching_envelope(const PhaseMatchEnvelope& env, double detuning_hz);

// Integrated temporal density carried by one line of unit amplitude weight:
// (w_s + w_i) / (2 pi w_s w_i) seconds.
double line_density_integral(const SpectralLine& line);

// All mode pairs with |signal detuning| <= max_detuning_hz, sorted by index.
// joint_weight = peak_s * peak_i * envelope(signal detuning) * idler-line
// Lorentzian response at the Vernier mismatch.
std::vector<ModePair> enumerate_mode_pairs(const CavityParams& signal,
                                           const CavityParams& idler,
                                           const PhaseMatchEnvelope& env,
                                           double max_detuning_hz,
                                           double hard_cap_hz = 200e9);

// Assemble the line spectrum from surviving mode pairs, applying the etalon
// on the idler side when present and pruning lines below prune_threshold
// relative to the strongest line.
BiphotonSpectrum build_spectrum(const std::vector<ModePair>& pairs,
                                const CavityParams& signal,
                                const CavityParams& idler,
                                const std::optional<EtalonParams>& etalon = std::nullopt,
                                double prune_threshold = 1e-6);

} // namespace spdc

#endif
