#include "spdc/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spdc {

void SourceRateModel::validate() const
{
    if (pair_rate_per_mw < 0.0 || dark_signal_hz < 0.0 || dark_idler_hz < 0.0)
        throw std::invalid_argument("rate model: rates must be nonnegative");
    if (!(eta_signal > 0.0) || eta_signal > 1.0 || !(eta_idler > 0.0) || eta_idler > 1.0)
        throw std::invalid_argument("rate model: efficiencies must be in (0, 1]");
    if (!(duty_cycle > 0.0) || duty_cycle > 1.0)
        throw std::invalid_argument("rate model: duty cycle must be in (0, 1]");
    if (!(single_mode_fraction > 0.0) || single_mode_fraction > 1.0)
        throw std::invalid_argument("rate model: single-mode fraction must be in (0, 1]");
}

void CountingConfig::validate() const
{
    if (!(bin_width_s > 0.0))
        throw std::invalid_argument("counting config: bin width must be positive");
    if (!(accidental_max_s > accidental_min_s) || accidental_min_s <= 0.0)
        throw std::invalid_argument("counting config: bad accidental window");
    if (!(integration_time_s > 0.0))
        throw std::invalid_argument("counting config: integration time must be positive");
}

std::pair<double, double> singles_rates(const SourceRateModel& model, double pump_mw)
{
    model.validate();
    if (pump_mw < 0.0)
        throw std::invalid_argument("singles_rates: negative pump power");
    const double generated = model.pair_rate_per_mw * pump_mw;
    return {model.duty_cycle * model.eta_signal * generated + model.dark_signal_hz,
            model.duty_cycle * model.eta_idler * generated + model.dark_idler_hz};
}

double peak_bin_density(const CorrelationProfile& profile, double bin_width_s)
{
    return profile_mass(profile, -0.5 * bin_width_s, 0.5 * bin_width_s) / bin_width_s;
}

namespace {

// True peak-bin counts and accidental counts per bin, each per unit open
// time. Their ratio is the g2(0) excess.
std::pair<double, double> peak_and_floor(const SourceRateModel& model,
                                         const CorrelationProfile& profile,
                                         const CountingConfig& cfg, double pump_mw)
{
    const double generated = model.pair_rate_per_mw * pump_mw;
    const double r_signal = model.eta_signal * generated + model.dark_signal_hz;
    const double r_idler = model.eta_idler * generated + model.dark_idler_hz;
    const double pbar = peak_bin_density(profile, cfg.bin_width_s);
    const double true_peak =
        model.eta_signal * model.eta_idler * generated * pbar * cfg.bin_width_s;
    const double floor = r_signal * r_idler * cfg.bin_width_s;
    return {true_peak, floor};
}

} // namespace

double g2_zero(const SourceRateModel& model, const CorrelationProfile& profile,
               const CountingConfig& cfg, double pump_mw)
{
    model.validate();
    cfg.validate();
    if (pump_mw < 0.0)
        throw std::invalid_argument("g2_zero: negative pump power");
    const auto [true_peak, floor] = peak_and_floor(model, profile, cfg, pump_mw);
    if (!(floor > 0.0))
        throw std::runtime_error("g2_zero: undefined g2 (no accidentals: zero pump and darks)");
    return 1.0 + true_peak / floor;
}

std::vector<std::pair<double, double>> g2_power_sweep(const SourceRateModel& model,
                                                      const CorrelationProfile& profile,
                                                      const CountingConfig& cfg,
                                                      const std::vector<double>& powers_mw)
{
    std::vector<std::pair<double, double>> out;
    out.reserve(powers_mw.size());
    for (double p : powers_mw) {
        if (!(p > 0.0))
            throw std::invalid_argument("g2_power_sweep: powers must be positive");
        out.emplace_back(p, g2_zero(model, profile, cfg, p));
    }
    return out;
}

double inverse_power_slope(const std::vector<std::pair<double, double>>& sweep)
{
    std::vector<std::pair<double, double>> pts;
    for (const auto& [p, g2] : sweep)
        if (g2 > 1.0)
            pts.emplace_back(std::log(p), std::log(g2 - 1.0));
    if (pts.size() < 2)
        throw std::runtime_error("inverse_power_slope: need at least two usable points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double denom = n * sxx - sx * sx;
    if (!(std::abs(denom) > 0.0))
        throw std::runtime_error("inverse_power_slope: degenerate power set");
    return (n * sxy - sx * sy) / denom;
}

double coincidence_rate(const SourceRateModel& model, const CorrelationProfile& profile,
                        const CountingConfig& cfg, double pump_mw)
{
    model.validate();
    cfg.validate();
    (void)profile;  // histogram range covers the full delay mass
    if (pump_mw < 0.0)
        throw std::invalid_argument("coincidence_rate: negative pump power");
    return model.duty_cycle * model.eta_signal * model.eta_idler *
           model.single_mode_fraction * model.pair_rate_per_mw * pump_mw;
}

double spectral_brightness(double rate_hz, double pump_mw, double bandwidth_mhz)
{
    if (rate_hz < 0.0 || !(pump_mw > 0.0) || !(bandwidth_mhz > 0.0))
        throw std::invalid_argument("spectral_brightness: bad inputs");
    return rate_hz / (pump_mw * bandwidth_mhz);
}

double calibrate_pair_rate(const CorrelationProfile& profile, double bin_width_s,
                           double g2_anchor, double pump_anchor_mw)
{
    if (!(g2_anchor > 1.0) || !(pump_anchor_mw > 0.0))
        throw std::invalid_argument("calibrate_pair_rate: bad anchor");
    return peak_bin_density(profile, bin_width_s) / ((g2_anchor - 1.0) * pump_anchor_mw);
}

double calibrate_single_mode_fraction(const SourceRateModel& model, double rate_anchor_hz,
                                      double pump_anchor_mw)
{
    if (!(rate_anchor_hz > 0.0) || !(pump_anchor_mw > 0.0))
        throw std::invalid_argument("calibrate_single_mode_fraction: bad anchor");
    const double detected_all_modes = model.duty_cycle * model.eta_signal * model.eta_idler *
                                      model.pair_rate_per_mw * pump_anchor_mw;
    if (!(detected_all_modes > 0.0))
        throw std::invalid_argument("calibrate_single_mode_fraction: zero detected rate");
    return std::min(1.0, rate_anchor_hz / detected_all_modes);
}

BinnedHistogram predicted_histogram(const SourceRateModel& model,
                                    const CorrelationProfile& profile,
                                    const CountingConfig& cfg, double pump_mw,
                                    double duration_s, double range_min_s, double range_max_s)
{
    model.validate();
    cfg.validate();
    const double open_time = model.duty_cycle * duration_s;
    const double generated = model.pair_rate_per_mw * pump_mw;
    const double true_pairs = model.eta_signal * model.eta_idler * model.single_mode_fraction *
                              generated * open_time;
    const double r_signal = model.eta_signal * generated + model.dark_signal_hz;
    const double r_idler =
        model.eta_idler * model.single_mode_fraction * generated + model.dark_idler_hz;
    const double floor_per_bin = r_signal * r_idler * cfg.bin_width_s * open_time;

    BinnedHistogram hist =
        bin_histogram(profile, cfg.bin_width_s, true_pairs, range_min_s, range_max_s);
    for (auto& c : hist.expected_counts)
        c += floor_per_bin;
    return hist;
}

double predicted_g2_estimate(const SourceRateModel& model, const CorrelationProfile& profile,
                             const CountingConfig& cfg, double pump_mw)
{
    const double range = std::max(cfg.accidental_max_s * 1.2, 300e-9);
    BinnedHistogram hist =
        predicted_histogram(model, profile, cfg, pump_mw, 1.0, -range, range);
    double peak = 0.0;
    double acc = 0.0;
    std::size_t n_acc = 0;
    for (std::size_t i = 0; i < hist.bin_centers_s.size(); ++i) {
        const double t = hist.bin_centers_s[i];
        if (std::abs(t) < 0.5 * hist.bin_width_s)
            peak = hist.expected_counts[i];
        if (t >= cfg.accidental_min_s && t <= cfg.accidental_max_s) {
            acc += hist.expected_counts[i];
            ++n_acc;
        }
    }
    if (n_acc == 0 || !(acc > 0.0))
        throw std::runtime_error("predicted_g2_estimate: empty accidental region");
    return peak / (acc / static_cast<double>(n_acc));
}

} // namespace spdc
