#include "spdc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdc {

namespace {

// Argument where sinc^2 falls to one half: sin(x)/x = 1/sqrt(2).
constexpr double kSincHalfArg = 1.3915573782515105;

double airy(double finesse, double peak, double fsr_hz, double offset_hz, double detuning_hz)
{
    const double coeff = 2.0 * finesse / std::numbers::pi;
    const double s = std::sin(std::numbers::pi * (detuning_hz - offset_hz) / fsr_hz);
    return peak / (1.0 + coeff * coeff * s * s);
}

// Wrap x into (-period/2, period/2].
double wrap_half(double x, double period)
{
    double y = std::remainder(x, period);
    if (y <= -0.5 * period)
        y += period;
    return y;
}

} // namespace

void CavityParams::validate() const
{
    if (!(fsr_hz > 0.0))
        throw std::invalid_argument("cavity: fsr must be positive");
    if (!(fwhm_hz > 0.0) || fwhm_hz >= fsr_hz)
        throw std::invalid_argument("cavity: fwhm must be in (0, fsr)");
    if (!(peak_transmission > 0.0) || peak_transmission > 1.0)
        throw std::invalid_argument("cavity: peak transmission must be in (0, 1]");
}

void EtalonParams::validate() const
{
    if (!(fsr_hz > 0.0))
        throw std::invalid_argument("etalon: fsr must be positive");
    if (!(fwhm_hz > 0.0) || fwhm_hz >= fsr_hz)
        throw std::invalid_argument("etalon: fwhm must be in (0, fsr)");
}

void PhaseMatchEnvelope::validate() const
{
    if (!(fwhm_hz > 0.0))
        throw std::invalid_argument("phase-matching envelope: fwhm must be positive");
}

double cavity_transmission(const CavityParams& params, double detuning_hz)
{
    params.validate();
    return airy(params.finesse(), params.peak_transmission, params.fsr_hz,
                params.comb_offset_hz, detuning_hz);
}

double etalon_transmission(const EtalonParams& params, double detuning_hz)
{
    params.validate();
    return airy(params.finesse(), 1.0, params.fsr_hz, params.center_offset_hz, detuning_hz);
}

double mirror_amplitude_factor(double finesse)
{
    if (!(finesse > 1.0))
        throw std::invalid_argument("mirror_amplitude_factor: finesse must exceed 1");
    // pi*sqrt(r)/(1-r) = F is quadratic in sqrt(r).
    const double x = (-std::numbers::pi + std::sqrt(std::numbers::pi * std::numbers::pi +
                                                    4.0 * finesse * finesse)) /
                     (2.0 * finesse);
    return x * x;
}

double phase_matching_envelope(const PhaseMatchEnvelope& env, double detuning_hz)
{
    env.validate();
    const double half = 0.5 * env.fwhm_hz;
    if (env.shape == EnvelopeShape::gaussian)
        return std::exp(-std::numbers::ln2 * (detuning_hz / half) * (detuning_hz / half));
    const double x = kSincHalfArg * detuning_hz / half;
    if (std::abs(x) < 1e-9)
        return 1.0 - x * x / 3.0;
    const double s = std::sin(x) / x;
    return s * s;
}

double line_density_integral(const SpectralLine& line)
{
    return (line.signal_fwhm_hz + line.idler_fwhm_hz) /
           (2.0 * std::numbers::pi * line.signal_fwhm_hz * line.idler_fwhm_hz);
}

double BiphotonSpectrum::max_abs_detuning_hz() const
{
    double m = 0.0;
    for (const auto& l : lines)
        m = std::max(m, std::abs(l.center_detuning_hz));
    return m;
}

std::vector<ModePair> enumerate_mode_pairs(const CavityParams& signal,
                                           const CavityParams& idler,
                                           const PhaseMatchEnvelope& env,
                                           double max_detuning_hz,
                                           double hard_cap_hz)
{
    signal.validate();
    idler.validate();
    env.validate();
    if (!(max_detuning_hz >= 0.0) || max_detuning_hz > hard_cap_hz)
        throw std::invalid_argument("enumerate_mode_pairs: max detuning outside [0, hard cap]");

    const int m_max = static_cast<int>(std::floor(
        (max_detuning_hz - std::abs(signal.comb_offset_hz)) / signal.fsr_hz));
    const double peaks = signal.peak_transmission * idler.peak_transmission;

    std::vector<ModePair> out;
    out.reserve(2 * std::max(m_max, 0) + 1);
    for (int m = -m_max; m <= m_max; ++m) {
        ModePair p;
        p.index = m;
        p.signal_detuning_hz = signal.comb_offset_hz + m * signal.fsr_hz;
        // Energy conservation places the idler at minus the signal detuning;
        // wrap its distance to the nearest idler resonance. Reduces to
        // wrap(m*(FSR_s - FSR_i)) for zero comb offsets.
        p.idler_mismatch_hz = wrap_half(
            signal.comb_offset_hz + idler.comb_offset_hz + m * (signal.fsr_hz - idler.fsr_hz),
            idler.fsr_hz);
        const double x = 2.0 * p.idler_mismatch_hz / idler.fwhm_hz;
        p.joint_weight = peaks * phase_matching_envelope(env, p.signal_detuning_hz) /
                         (1.0 + x * x);
        out.push_back(p);
    }
    return out;
}

BiphotonSpectrum build_spectrum(const std::vector<ModePair>& pairs,
                                const CavityParams& signal,
                                const CavityParams& idler,
                                const std::optional<EtalonParams>& etalon,
                                double prune_threshold)
{
    if (pairs.empty())
        throw std::invalid_argument("build_spectrum: no mode pairs");
    signal.validate();
    idler.validate();

    BiphotonSpectrum spec;
    spec.lines.reserve(pairs.size());
    for (const auto& p : pairs) {
        SpectralLine line;
        line.center_detuning_hz = p.signal_detuning_hz;
        line.signal_fwhm_hz = signal.fwhm_hz;
        line.idler_fwhm_hz = idler.fwhm_hz;
        line.amplitude_weight = p.joint_weight;
        if (etalon)
            line.amplitude_weight *= etalon_transmission(*etalon, -p.signal_detuning_hz);
        spec.lines.push_back(line);
    }

    double wmax = 0.0;
    for (const auto& l : spec.lines)
        wmax = std::max(wmax, l.amplitude_weight);
    std::erase_if(spec.lines, [&](const SpectralLine& l) {
        return l.amplitude_weight < prune_threshold * wmax || l.amplitude_weight <= 0.0;
    });
    if (spec.lines.empty())
        throw std::runtime_error("build_spectrum: empty spectrum");

    spec.total_norm = 0.0;
    for (const auto& l : spec.lines)
        spec.total_norm += l.amplitude_weight * l.amplitude_weight * line_density_integral(l);
    return spec;
}

} // namespace spdc
