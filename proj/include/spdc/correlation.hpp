//
// Time-domain side of the model: biphoton wavepacket Psi(tau) from the line
// spectrum (analytic per-line transform, plus an independent dense-grid DFT
// backend used as an internal oracle), the G2 correlation profile, detector
// jitter convolution, histogram binning, comb metrics, and Michelson
// first-order-coherence visibility.
//
// Sign convention: tau = t_idler - t_signal. The positive-tau side decays
// with the idler linewidth, the negative side with the signal linewidth.
//

#ifndef SPDC_CORRELATION_HPP
#define SPDC_CORRELATION_HPP

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "spdc/spectral.hpp"

namespace spdc {

// Uniform tau grid, tau(i) = tau_min + i*step.
struct TauGrid {
    double tau_min_s = 0.0;
    double step_s = 0.0;
    std::size_t n = 0;

    double tau(std::size_t i) const { return tau_min_s + static_cast<double>(i) * step_s; }
    double tau_max_s() const { return tau(n ? n - 1 : 0); }
    static TauGrid symmetric(double span_s, double step_s);
    void validate() const;
};

struct Wavepacket {
    TauGrid grid;
    std::vector<std::complex<double>> amplitude;
};

struct CorrelationProfile {
    TauGrid grid;
    std::vector<double> density;    // probability density per second, unit integral
    double normalization = 0.0;     // integral divided out of |Psi|^2
};

struct BinnedHistogram {
    double bin_width_s = 0.0;
    std::vector<double> bin_centers_s;
    std::vector<double> expected_counts;
    double total_pairs = 0.0;
};

struct DftOptions {
    double resolution_divisor = 64.0;  // frequency step = min linewidth / divisor
    double tail_span_hz = 24e9;        // quadrature span beyond the extreme lines
    unsigned threads = 1;
};

// Analytic wavepacket: Psi(tau) = sum_l w_l psi_l(tau) exp(-i 2 pi f_l tau)
// with psi_l the two-sided exponential (amplitude rates pi*idler width for
// tau>0, pi*signal width for tau<0). Throws if the grid cannot resolve the
// fastest line beat (step > 1/(10 max|f_l|)) or spans less than +-5
// coherence times of the narrowest line.
Wavepacket biphoton_wavepacket(const BiphotonSpectrum& spectrum, const TauGrid& grid);

// Same quantity via Simpson quadrature of the analytic line spectrum over a
// dense frequency grid; independent of the time-domain formula.
Wavepacket biphoton_wavepacket_dft(const BiphotonSpectrum& spectrum, const TauGrid& grid,
                                   const DftOptions& opts = {});

// max_i |a-b| / max_i |a|
double max_relative_deviation(const Wavepacket& a, const Wavepacket& b);

// Analytic integral of |Psi|^2 over all tau, including inter-line cross
// terms (Parseval partner of the grid integral).
double spectral_norm(const BiphotonSpectrum& spectrum);

// density = |Psi|^2 normalized to unit trapezoidal integral.
CorrelationProfile g2_profile(const Wavepacket& psi);

double pair_jitter_fwhm(double per_detector_fwhm_s);  // sqrt(2) * per-detector

// Gaussian convolution with the given FWHM; preserves the integral.
CorrelationProfile convolve_jitter(const CorrelationProfile& profile, double jitter_fwhm_s);

// Trapezoidal CDF of the profile on its grid (CDF[0] = 0, CDF[n-1] = 1).
std::vector<double> profile_cdf(const CorrelationProfile& profile);

// Probability mass in [a, b], linear interpolation between grid points.
double profile_mass(const CorrelationProfile& profile, double a_s, double b_s);

// Expected counts per bin: total_pairs * mass of each bin. Bins are centered
// on integer multiples of bin_width within [range_min, range_max].
BinnedHistogram bin_histogram(const CorrelationProfile& profile, double bin_width_s,
                              double total_pairs, double range_min_s, double range_max_s);

// Mean (max-min)/(max+min) over adjacent local extrema inside the window.
// A window with no extrema (monotone profile) reports zero depth; a window
// holding fewer than two modulation periods throws.
double comb_modulation_depth(const CorrelationProfile& profile, double window_min_s,
                             double window_max_s);

// |sum_l wbar_l exp(-pi w_i |tau|) exp(-i 2 pi f_l tau)| at tau = dL/c, with
// intensity weights wbar of the idler-arm spectrum. 1 at zero path difference.
double michelson_visibility(const BiphotonSpectrum& spectrum, double path_difference_m);

std::vector<std::pair<double, double>> michelson_curve(const BiphotonSpectrum& spectrum,
                                                       double max_path_m, double step_m);

} // namespace spdc

#endif
