#include "spdc/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace spdc {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double trapezoid(const std::vector<double>& y, double h)
{
    if (y.size() < 2)
        return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        s += y[i];
    return s * h;
}

void check_spectrum(const BiphotonSpectrum& spectrum)
{
    if (spectrum.lines.empty())
        throw std::invalid_argument("wavepacket: empty spectrum");
    for (const auto& l : spectrum.lines)
        if (!(l.signal_fwhm_hz > 0.0) || !(l.idler_fwhm_hz > 0.0) || l.amplitude_weight < 0.0)
            throw std::invalid_argument("wavepacket: invalid spectral line");
}

double min_linewidth(const BiphotonSpectrum& spectrum)
{
    double w = std::numeric_limits<double>::max();
    for (const auto& l : spectrum.lines)
        w = std::min({w, l.signal_fwhm_hz, l.idler_fwhm_hz});
    return w;
}

void check_grid_against(const BiphotonSpectrum& spectrum, const TauGrid& grid)
{
    grid.validate();
    const double fmax = spectrum.max_abs_detuning_hz();
    if (fmax > 0.0 && grid.step_s > 1.0 / (10.0 * fmax))
        throw std::invalid_argument("wavepacket: grid too coarse for the line detunings");
    const double coherence = 1.0 / (kTwoPi * min_linewidth(spectrum));
    if (grid.tau_min_s > -5.0 * coherence || grid.tau_max_s() < 5.0 * coherence)
        throw std::invalid_argument("wavepacket: grid spans less than +-5 coherence times");
}

} // namespace

TauGrid TauGrid::symmetric(double span_s, double step_s)
{
    TauGrid g;
    const auto half = static_cast<std::size_t>(std::llround(span_s / step_s));
    g.step_s = step_s;
    g.tau_min_s = -static_cast<double>(half) * step_s;
    g.n = 2 * half + 1;
    return g;
}

void TauGrid::validate() const
{
    if (n < 2 || !(step_s > 0.0))
        throw std::invalid_argument("tau grid: need at least two points and positive step");
}

Wavepacket biphoton_wavepacket(const BiphotonSpectrum& spectrum, const TauGrid& grid)
{
    check_spectrum(spectrum);
    check_grid_against(spectrum, grid);

    Wavepacket out;
    out.grid = grid;
    out.amplitude.assign(grid.n, {0.0, 0.0});
    for (const auto& l : spectrum.lines) {
        const double rate_pos = std::numbers::pi * l.idler_fwhm_hz;
        const double rate_neg = std::numbers::pi * l.signal_fwhm_hz;
        const double w = l.amplitude_weight;
        const double f = l.center_detuning_hz;
        for (std::size_t i = 0; i < grid.n; ++i) {
            const double tau = grid.tau(i);
            const double envelope = tau >= 0.0 ? std::exp(-rate_pos * tau)
                                               : std::exp(rate_neg * tau);
            const double phase = -kTwoPi * f * tau;
            out.amplitude[i] += w * envelope * std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    return out;
}

Wavepacket biphoton_wavepacket_dft(const BiphotonSpectrum& spectrum, const TauGrid& grid,
                                   const DftOptions& opts)
{
    check_spectrum(spectrum);
    check_grid_against(spectrum, grid);

    double flo = std::numeric_limits<double>::max();
    double fhi = std::numeric_limits<double>::lowest();
    for (const auto& l : spectrum.lines) {
        flo = std::min(flo, l.center_detuning_hz);
        fhi = std::max(fhi, l.center_detuning_hz);
    }
    flo -= opts.tail_span_hz;
    fhi += opts.tail_span_hz;
    const double dnu = min_linewidth(spectrum) / opts.resolution_divisor;
    std::size_t nfreq = static_cast<std::size_t>(std::ceil((fhi - flo) / dnu)) + 1;
    if (nfreq % 2 == 0)
        ++nfreq;  // Simpson needs an odd point count

    // Spectral amplitude Phi(nu) = sum_l w_l [1/(a_l - i 2 pi (nu-f_l))
    //                                       + 1/(b_l + i 2 pi (nu-f_l))]
    std::vector<std::complex<double>> phi(nfreq);
    for (std::size_t j = 0; j < nfreq; ++j) {
        const double nu = flo + static_cast<double>(j) * dnu;
        std::complex<double> acc{0.0, 0.0};
        for (const auto& l : spectrum.lines) {
            const double a = std::numbers::pi * l.idler_fwhm_hz;
            const double b = std::numbers::pi * l.signal_fwhm_hz;
            const double u = kTwoPi * (nu - l.center_detuning_hz);
            acc += l.amplitude_weight *
                   (1.0 / std::complex<double>(a, -u) + 1.0 / std::complex<double>(b, u));
        }
        // Simpson weights 1,4,2,...,2,4,1 folded in once.
        const double w = (j == 0 || j + 1 == nfreq) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        phi[j] = acc * (w * dnu / 3.0);
    }

    Wavepacket out;
    out.grid = grid;
    out.amplitude.assign(grid.n, {0.0, 0.0});

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double tau = grid.tau(i);
            // Psi(tau) = integral Phi(nu) exp(-i 2 pi nu tau) dnu via a
            // phase-step recurrence, renormalized periodically.
            const double phase0 = -kTwoPi * flo * tau;
            const double dphase = -kTwoPi * dnu * tau;
            std::complex<double> rot(std::cos(phase0), std::sin(phase0));
            const std::complex<double> step(std::cos(dphase), std::sin(dphase));
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t j = 0; j < nfreq; ++j) {
                acc += phi[j] * rot;
                rot *= step;
                if ((j & 0xfff) == 0xfff) {
                    const double phase = phase0 + dphase * static_cast<double>(j + 1);
                    rot = {std::cos(phase), std::sin(phase)};
                }
            }
            out.amplitude[i] = acc;
        }
    };

    const unsigned nthreads = std::max(1u, opts.threads);
    if (nthreads == 1 || grid.n < 2 * nthreads) {
        worker(0, grid.n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (grid.n + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(grid.n, begin + chunk);
            if (begin < end)
                pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool)
            th.join();
    }
    return out;
}

double max_relative_deviation(const Wavepacket& a, const Wavepacket& b)
{
    if (a.amplitude.size() != b.amplitude.size())
        throw std::invalid_argument("max_relative_deviation: size mismatch");
    double dev = 0.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < a.amplitude.size(); ++i) {
        dev = std::max(dev, std::abs(a.amplitude[i] - b.amplitude[i]));
        peak = std::max(peak, std::abs(a.amplitude[i]));
    }
    return peak > 0.0 ? dev / peak : dev;
}

double spectral_norm(const BiphotonSpectrum& spectrum)
{
    check_spectrum(spectrum);
    // integral psi_l psi_m* exp(-i 2 pi (f_l - f_m) tau) dtau, split at 0.
    std::complex<double> total{0.0, 0.0};
    for (const auto& l : spectrum.lines) {
        for (const auto& m : spectrum.lines) {
            const double a = std::numbers::pi * (l.idler_fwhm_hz + m.idler_fwhm_hz);
            const double b = std::numbers::pi * (l.signal_fwhm_hz + m.signal_fwhm_hz);
            const double d = kTwoPi * (l.center_detuning_hz - m.center_detuning_hz);
            total += l.amplitude_weight * m.amplitude_weight *
                     (1.0 / std::complex<double>(a, d) + 1.0 / std::complex<double>(b, -d));
        }
    }
    return total.real();
}

CorrelationProfile g2_profile(const Wavepacket& psi)
{
    psi.grid.validate();
    CorrelationProfile out;
    out.grid = psi.grid;
    out.density.resize(psi.amplitude.size());
    for (std::size_t i = 0; i < psi.amplitude.size(); ++i)
        out.density[i] = std::norm(psi.amplitude[i]);
    const double integral = trapezoid(out.density, psi.grid.step_s);
    if (!(integral > 0.0))
        throw std::invalid_argument("g2_profile: zero-energy wavepacket");
    for (auto& d : out.density)
        d /= integral;
    out.normalization = integral;
    return out;
}

double pair_jitter_fwhm(double per_detector_fwhm_s)
{
    return std::numbers::sqrt2 * per_detector_fwhm_s;
}

CorrelationProfile convolve_jitter(const CorrelationProfile& profile, double jitter_fwhm_s)
{
    if (jitter_fwhm_s < 0.0)
        throw std::invalid_argument("convolve_jitter: negative jitter");
    if (jitter_fwhm_s == 0.0)
        return profile;

    const double sigma = jitter_fwhm_s / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    const double h = profile.grid.step_s;
    const auto halfk = static_cast<std::size_t>(std::ceil(5.0 * sigma / h));
    std::vector<double> kernel(2 * halfk + 1);
    double ksum = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k) {
        const double x = (static_cast<double>(k) - static_cast<double>(halfk)) * h;
        kernel[k] = std::exp(-0.5 * (x / sigma) * (x / sigma));
        ksum += kernel[k];
    }
    for (auto& k : kernel)
        k /= ksum;

    CorrelationProfile out;
    out.grid = profile.grid;
    out.normalization = profile.normalization;
    out.density.assign(profile.density.size(), 0.0);
    const auto n = static_cast<std::ptrdiff_t>(profile.density.size());
    const auto hk = static_cast<std::ptrdiff_t>(halfk);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const std::ptrdiff_t jlo = std::max<std::ptrdiff_t>(0, i - hk);
        const std::ptrdiff_t jhi = std::min<std::ptrdiff_t>(n - 1, i + hk);
        for (std::ptrdiff_t j = jlo; j <= jhi; ++j)
            acc += profile.density[static_cast<std::size_t>(j)] *
                   kernel[static_cast<std::size_t>(i - j + hk)];
        out.density[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

std::vector<double> profile_cdf(const CorrelationProfile& profile)
{
    std::vector<double> cdf(profile.density.size(), 0.0);
    for (std::size_t i = 1; i < cdf.size(); ++i)
        cdf[i] = cdf[i - 1] +
                 0.5 * (profile.density[i] + profile.density[i - 1]) * profile.grid.step_s;
    return cdf;
}

namespace {

double cdf_at(const CorrelationProfile& profile, const std::vector<double>& cdf, double t)
{
    const TauGrid& g = profile.grid;
    if (t <= g.tau_min_s)
        return 0.0;
    if (t >= g.tau_max_s())
        return cdf.back();
    const double x = (t - g.tau_min_s) / g.step_s;
    const auto i = static_cast<std::size_t>(x);
    const double frac = x - static_cast<double>(i);
    // integral of the linearly interpolated density over the partial cell
    const double d0 = profile.density[i];
    const double d1 = profile.density[i + 1];
    const double partial = g.step_s * frac * (d0 + 0.5 * frac * (d1 - d0));
    return cdf[i] + partial;
}

} // namespace

double profile_mass(const CorrelationProfile& profile, double a_s, double b_s)
{
    const auto cdf = profile_cdf(profile);
    return cdf_at(profile, cdf, b_s) - cdf_at(profile, cdf, a_s);
}

BinnedHistogram bin_histogram(const CorrelationProfile& profile, double bin_width_s,
                              double total_pairs, double range_min_s, double range_max_s)
{
    if (!(bin_width_s > 0.0))
        throw std::invalid_argument("bin_histogram: bin width must be positive");
    if (!(range_max_s > range_min_s))
        throw std::invalid_argument("bin_histogram: empty range");

    // Bin centers on integer multiples of the bin width.
    const auto k_lo = static_cast<long long>(std::ceil((range_min_s + 0.5 * bin_width_s) / bin_width_s - 1e-9));
    const auto k_hi = static_cast<long long>(std::floor((range_max_s - 0.5 * bin_width_s) / bin_width_s + 1e-9));
    if (k_hi < k_lo)
        throw std::invalid_argument("bin_histogram: range narrower than one bin");

    const auto cdf = profile_cdf(profile);
    BinnedHistogram out;
    out.bin_width_s = bin_width_s;
    out.total_pairs = total_pairs;
    out.bin_centers_s.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    out.expected_counts.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    double left = cdf_at(profile, cdf, (static_cast<double>(k_lo) - 0.5) * bin_width_s);
    for (long long k = k_lo; k <= k_hi; ++k) {
        const double right = cdf_at(profile, cdf, (static_cast<double>(k) + 0.5) * bin_width_s);
        out.bin_centers_s.push_back(static_cast<double>(k) * bin_width_s);
        out.expected_counts.push_back(total_pairs * (right - left));
        left = right;
    }
    return out;
}

double comb_modulation_depth(const CorrelationProfile& profile, double window_min_s,
                             double window_max_s)
{
    const TauGrid& g = profile.grid;
    if (window_min_s < g.tau_min_s || window_max_s > g.tau_max_s() || window_min_s >= window_max_s)
        throw std::invalid_argument("comb_modulation_depth: window outside grid");

    const auto i_lo = static_cast<std::size_t>(std::ceil((window_min_s - g.tau_min_s) / g.step_s));
    const auto i_hi = static_cast<std::size_t>(std::floor((window_max_s - g.tau_min_s) / g.step_s));

    std::vector<double> extrema;
    int n_max = 0;
    int n_min = 0;
    for (std::size_t i = std::max<std::size_t>(i_lo, 1) + 1; i + 1 <= i_hi; ++i) {
        const double prev = profile.density[i - 1];
        const double cur = profile.density[i];
        const double next = profile.density[i + 1];
        if (cur > prev && cur >= next) {
            extrema.push_back(cur);
            ++n_max;
        } else if (cur < prev && cur <= next) {
            extrema.push_back(cur);
            ++n_min;
        }
    }
    if (extrema.empty())
        return 0.0;  // monotone within the window: no modulation
    if (n_max < 2 || n_min < 2)
        throw std::invalid_argument("comb_modulation_depth: window holds fewer than two periods");

    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i + 1 < extrema.size(); ++i) {
        const double hi = std::max(extrema[i], extrema[i + 1]);
        const double lo = std::min(extrema[i], extrema[i + 1]);
        if (hi + lo > 0.0) {
            acc += (hi - lo) / (hi + lo);
            ++pairs;
        }
    }
    return pairs ? acc / static_cast<double>(pairs) : 0.0;
}

double michelson_visibility(const BiphotonSpectrum& spectrum, double path_difference_m)
{
    check_spectrum(spectrum);
    if (path_difference_m < 0.0)
        throw std::invalid_argument("michelson_visibility: negative path difference");

    const double tau = path_difference_m / kSpeedOfLight;
    std::complex<double> sum{0.0, 0.0};
    double wsum = 0.0;
    for (const auto& l : spectrum.lines) {
        const double wbar = l.amplitude_weight * l.amplitude_weight * line_density_integral(l);
        const double phase = -kTwoPi * l.center_detuning_hz * tau;
        sum += wbar * std::exp(-std::numbers::pi * l.idler_fwhm_hz * tau) *
               std::complex<double>(std::cos(phase), std::sin(phase));
        wsum += wbar;
    }
    if (!(wsum > 0.0))
        throw std::invalid_argument("michelson_visibility: zero-weight spectrum");
    return std::abs(sum) / wsum;
}

std::vector<std::pair<double, double>> michelson_curve(const BiphotonSpectrum& spectrum,
                                                       double max_path_m, double step_m)
{
    if (!(step_m > 0.0) || max_path_m < 0.0)
        throw std::invalid_argument("michelson_curve: bad scan range");
    std::vector<std::pair<double, double>> out;
    const auto n = static_cast<std::size_t>(std::floor(max_path_m / step_m + 1e-9)) + 1;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) * step_m;
        out.emplace_back(x, michelson_visibility(spectrum, x));
    }
    return out;
}

} // namespace spdc
