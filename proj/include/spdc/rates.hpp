//
// Calibrated counting statistics: singles and coincidence rates versus pump
// power, the normalized zero-delay cross-correlation g2(0), the summed
// coincidence-rate metric, and spectral brightness.
//
// Rate conventions: pair_rate_per_mw is the generated pair rate while the
// chopper is open; time-averaged detected rates pick up one duty-cycle
// factor. g2(0) compares the true-coincidence peak bin against the
// accidental floor accumulated over the same open windows, so duty, bin
// width, and (for zero darks) both detection efficiencies cancel.
//

#ifndef SPDC_RATES_HPP
#define SPDC_RATES_HPP

#include <utility>
#include <vector>

#include "spdc/correlation.hpp"

namespace spdc {

struct SourceRateModel {
    double pair_rate_per_mw = 0.0;   // generated pairs/s/mW during open windows, all modes
    double eta_signal = 1.0;
    double eta_idler = 1.0;
    double dark_signal_hz = 0.0;
    double dark_idler_hz = 0.0;
    double duty_cycle = 1.0;
    double single_mode_fraction = 1.0;

    void validate() const;
};

struct CountingConfig {
    double bin_width_s = 4e-9;
    double accidental_min_s = 200e-9;
    double accidental_max_s = 250e-9;
    double integration_time_s = 1200.0;

    void validate() const;
};

// Time-averaged detected singles rates (R_s, R_i) = duty * eta * R * P + dark.
std::pair<double, double> singles_rates(const SourceRateModel& model, double pump_mw);

// Bin-averaged peak density: probability mass of the bin centered on tau=0
// divided by the bin width.
double peak_bin_density(const CorrelationProfile& profile, double bin_width_s);

// Analytic g2(0): 1 + true peak-bin counts over accidental counts per bin,
// both per unit open time. Reduces to 1 + pbar(0)/(R*P) for zero darks.
double g2_zero(const SourceRateModel& model, const CorrelationProfile& profile,
               const CountingConfig& cfg, double pump_mw);

std::vector<std::pair<double, double>> g2_power_sweep(const SourceRateModel& model,
                                                      const CorrelationProfile& profile,
                                                      const CountingConfig& cfg,
                                                      const std::vector<double>& powers_mw);

// Least-squares slope of log(g2-1) versus log(P). Throws on fewer than two
// usable points.
double inverse_power_slope(const std::vector<std::pair<double, double>>& sweep);

// Background-subtracted detected pair rate (counts/s, time-averaged):
// duty * eta_s * eta_i * single_mode_fraction * R * P.
double coincidence_rate(const SourceRateModel& model, const CorrelationProfile& profile,
                        const CountingConfig& cfg, double pump_mw);

// rate / (pump power * bandwidth), per s per MHz per mW.
double spectral_brightness(double rate_hz, double pump_mw, double bandwidth_mhz);

// Invert the g2 anchor for the generated pair rate:
// R = pbar(0) / ((g2_anchor - 1) * pump_anchor).
double calibrate_pair_rate(const CorrelationProfile& profile, double bin_width_s,
                           double g2_anchor = 88.0, double pump_anchor_mw = 1.0);

// Choose the single-mode fraction so the detected filtered pair rate matches
// the anchor (20/s at 0.9 mW by default).
double calibrate_single_mode_fraction(const SourceRateModel& model, double rate_anchor_hz = 20.0,
                                      double pump_anchor_mw = 0.9);

// Expected measured correlogram: per-bin counts = true pair mass + accidental
// floor, accumulated over duty-gated open time. Mirrors what the Monte Carlo
// simulator plus histogram analysis produce on average. single_mode_fraction
// here means the idler-arm survival in effect for the run: pass 1 when the
// etalon is out.
BinnedHistogram predicted_histogram(const SourceRateModel& model,
                                    const CorrelationProfile& profile,
                                    const CountingConfig& cfg, double pump_mw,
                                    double duration_s, double range_min_s, double range_max_s);

// Expectation of the measured estimator peak / mean(accidental bins),
// including the residual true-coincidence leakage into the accidental
// region that the no-subtraction estimator inherits.
double predicted_g2_estimate(const SourceRateModel& model, const CorrelationProfile& profile,
                             const CountingConfig& cfg, double pump_mw);

} // namespace spdc

#endif
