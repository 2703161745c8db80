//
// Measurement-side analysis of time-tag streams: cross-correlograms via a
// two-pointer sorted sliding window (never O(N^2)), two-sided exponential
// bandwidth fits, the peak-over-accidentals g2(0) estimator, comb-period
// extraction, the summed coincidence-rate metric, Michelson fringe fits,
// and bootstrap uncertainties.
//

#ifndef SPDC_ANALYSIS_HPP
#define SPDC_ANALYSIS_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spdc/timetag.hpp"

namespace spdc {

struct Correlogram {
    double bin_width_s = 0.0;
    double tau_min_s = 0.0;
    double tau_max_s = 0.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_signal = 0;
    std::uint64_t n_idler = 0;
    double wall_time_s = 0.0;

    double bin_center_s(std::size_t i) const
    {
        return tau_min_s + (static_cast<double>(i) + 0.5) * bin_width_s;
    }
    std::size_t zero_bin() const;
};

struct AnalysisOptions {
    double accidental_min_s = 200e-9;
    double accidental_max_s = 250e-9;
    bool bin_averaged_peak = false;    // average the 3 central bins instead of the single peak bin
    double min_peak_snr = 10.0;
    double coherence_multiples = 4.0;  // upper fit-window edge in 1/(2 pi dnu) units
    int floor_leak_iterations = 2;     // correct the accidental floor for true-coincidence leakage
    int envelope_window_bins = 16;
    double comb_peak_significance = 5.0;
};

// counts[k] = #{(s,i) : tau_min + k*bin <= t_i - t_s < tau_min + (k+1)*bin}.
// Streams must be sorted (throws, no silent sort). wall_time_s = 0 means
// "derive from the observed span".
Correlogram cross_correlogram(std::span<const std::uint64_t> signal_ps,
                              std::span<const std::uint64_t> idler_ps, double bin_width_s,
                              double tau_min_s, double tau_max_s, unsigned threads = 1,
                              double wall_time_s = 0.0);

struct BandwidthFit {
    double delta_nu_left_hz = 0.0;    // tau < 0 side (signal photon)
    double delta_nu_right_hz = 0.0;   // tau > 0 side (idler photon)
    double window_left_s[2] = {0.0, 0.0};   // |tau| range used
    double window_right_s[2] = {0.0, 0.0};
    double floor_per_bin = 0.0;
    double residual_rms = 0.0;
};

// Weighted least squares of log(counts - floor) against tau on each side.
// jitter_fwhm_s is the pair (coincidence-curve) jitter; the window starts
// beyond 3x that value.
BandwidthFit fit_bandwidths(const Correlogram& corr, double jitter_fwhm_s,
                            const AnalysisOptions& opts = {});

// Peak bin over the mean accidental-region bin, no background subtraction.
double g2_zero_estimate(const Correlogram& corr, const AnalysisOptions& opts = {});

struct NoCombDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Period of the dominant comb component of the background-subtracted,
// envelope-normalized histogram. Throws NoCombDetected when no spectral
// peak clears comb_peak_significance times the noise floor.
double comb_period(const Correlogram& corr, const AnalysisOptions& opts = {});

// (sum of all bins - floor * nbins) / wall time.
double coincidence_rate_metric(const Correlogram& corr, const AnalysisOptions& opts = {});

struct FringeScan {
    double path_difference_m = 0.0;
    std::vector<std::pair<double, double>> samples;  // (scan position m, counts)
};

struct FringePoint {
    double path_difference_m = 0.0;
    double visibility = 0.0;
    bool ok = false;
};

// Sinusoid fit (linear in {1, cos, sin} at the known wavelength) per scan;
// V = contrast of the fit. Failed fits are flagged, not fatal.
std::vector<FringePoint> fringe_visibility(const std::vector<FringeScan>& scans,
                                           double wavelength_m);

struct BootstrapOptions {
    int n_resamples = 200;
    int n_slices = 50;
    std::uint64_t seed = 7;
};

struct BootstrapInterval {
    double value = 0.0;   // estimate on the full data
    double sigma = 0.0;   // bootstrap standard deviation
};

struct BootstrapSummary {
    BootstrapInterval delta_nu_left;
    BootstrapInterval delta_nu_right;
    BootstrapInterval g2_zero;
};

// Resamples time slices of the signal stream (with the idler window overlap
// handled exactly) and recomputes the estimators per resample.
BootstrapSummary bootstrap_estimates(std::span<const std::uint64_t> signal_ps,
                                     std::span<const std::uint64_t> idler_ps,
                                     double bin_width_s, double tau_min_s, double tau_max_s,
                                     double jitter_fwhm_s, const AnalysisOptions& opts = {},
                                     const BootstrapOptions& bopts = {});

struct RunSummary {
    double g2_zero = 0.0;
    double delta_nu_left_hz = 0.0;
    double delta_nu_right_hz = 0.0;
    bool bandwidth_fit_ok = false;
    double comb_period_ps = 0.0;
    bool comb_detected = false;
    double coincidence_rate_hz = 0.0;
};

RunSummary analyze_run(const TimeTagStream& stream, double bin_width_s, double tau_min_s,
                       double tau_max_s, double jitter_fwhm_s, const AnalysisOptions& opts = {},
                       unsigned threads = 1);

std::string format_summary(const RunSummary& summary);

} // namespace spdc

#endif
