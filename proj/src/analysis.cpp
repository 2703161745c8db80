#include "spdc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace spdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_sorted(std::span<const std::uint64_t> ts, const char* which)
{
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (ts[i] < ts[i - 1])
            throw std::invalid_argument(std::string("cross_correlogram: ") + which +
                                        " stream not sorted");
}

struct BinningPs {
    std::int64_t bin_ps = 0;
    std::int64_t tau_min_ps = 0;
    std::size_t n_bins = 0;
};

BinningPs make_binning(double bin_width_s, double tau_min_s, double tau_max_s)
{
    BinningPs b;
    b.bin_ps = std::llround(bin_width_s * 1e12);
    if (b.bin_ps <= 0)
        throw std::invalid_argument("cross_correlogram: bin width below 1 ps");
    if (!(tau_max_s > tau_min_s))
        throw std::invalid_argument("cross_correlogram: empty range");
    b.tau_min_ps = std::llround(tau_min_s * 1e12);
    const std::int64_t span = std::llround(tau_max_s * 1e12) - b.tau_min_ps;
    b.n_bins = static_cast<std::size_t>((span + b.bin_ps - 1) / b.bin_ps);
    if (b.n_bins == 0)
        throw std::invalid_argument("cross_correlogram: range narrower than one bin");
    return b;
}

// Two-pointer pass over a contiguous block of signal tags.
void correlate_block(std::span<const std::uint64_t> signal, std::span<const std::uint64_t> idler,
                     const BinningPs& b, std::vector<std::uint64_t>& counts)
{
    const std::int64_t tau_max_ps = b.tau_min_ps + b.bin_ps * static_cast<std::int64_t>(b.n_bins);
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (const std::uint64_t s_u : signal) {
        const auto s = static_cast<std::int64_t>(s_u);
        while (lo < idler.size() && static_cast<std::int64_t>(idler[lo]) < s + b.tau_min_ps)
            ++lo;
        if (hi < lo)
            hi = lo;
        while (hi < idler.size() && static_cast<std::int64_t>(idler[hi]) < s + tau_max_ps)
            ++hi;
        for (std::size_t j = lo; j < hi; ++j) {
            const std::int64_t dt = static_cast<std::int64_t>(idler[j]) - s;
            ++counts[static_cast<std::size_t>((dt - b.tau_min_ps) / b.bin_ps)];
        }
    }
}

} // namespace

std::size_t Correlogram::zero_bin() const
{
    // bin whose interval contains tau = 0
    const double x = -tau_min_s / bin_width_s;
    auto i = static_cast<std::ptrdiff_t>(std::floor(x));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(counts.size()) - 1);
    return static_cast<std::size_t>(i);
}

Correlogram cross_correlogram(std::span<const std::uint64_t> signal_ps,
                              std::span<const std::uint64_t> idler_ps, double bin_width_s,
                              double tau_min_s, double tau_max_s, unsigned threads,
                              double wall_time_s)
{
    check_sorted(signal_ps, "signal");
    check_sorted(idler_ps, "idler");
    const BinningPs b = make_binning(bin_width_s, tau_min_s, tau_max_s);

    Correlogram out;
    out.bin_width_s = static_cast<double>(b.bin_ps) * 1e-12;
    out.tau_min_s = static_cast<double>(b.tau_min_ps) * 1e-12;
    out.tau_max_s = out.tau_min_s + out.bin_width_s * static_cast<double>(b.n_bins);
    out.counts.assign(b.n_bins, 0);
    out.n_signal = signal_ps.size();
    out.n_idler = idler_ps.size();

    const unsigned nthreads = std::max(1u, threads);
    if (nthreads == 1 || signal_ps.size() < 4 * nthreads) {
        correlate_block(signal_ps, idler_ps, b, out.counts);
    } else {
        // contiguous signal shards, exact-add merge
        std::vector<std::vector<std::uint64_t>> partial(nthreads,
                                                        std::vector<std::uint64_t>(b.n_bins, 0));
        std::vector<std::thread> pool;
        const std::size_t chunk = (signal_ps.size() + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            const std::size_t begin = std::min(signal_ps.size(), t * chunk);
            const std::size_t end = std::min(signal_ps.size(), begin + chunk);
            if (begin >= end)
                continue;
            pool.emplace_back([&, begin, end, t] {
                correlate_block(signal_ps.subspan(begin, end - begin), idler_ps, b, partial[t]);
            });
        }
        for (auto& th : pool)
            th.join();
        for (const auto& p : partial)
            for (std::size_t i = 0; i < b.n_bins; ++i)
                out.counts[i] += p[i];
    }

    if (wall_time_s > 0.0) {
        out.wall_time_s = wall_time_s;
    } else {
        std::uint64_t first = std::numeric_limits<std::uint64_t>::max();
        std::uint64_t last = 0;
        if (!signal_ps.empty()) {
            first = std::min(first, signal_ps.front());
            last = std::max(last, signal_ps.back());
        }
        if (!idler_ps.empty()) {
            first = std::min(first, idler_ps.front());
            last = std::max(last, idler_ps.back());
        }
        out.wall_time_s = last > first ? static_cast<double>(last - first) * 1e-12 : 0.0;
    }
    return out;
}

namespace {

struct AccidentalRegion {
    double mean = 0.0;
    std::size_t n_bins = 0;
};

AccidentalRegion accidental_floor(const Correlogram& corr, const AnalysisOptions& opts)
{
    AccidentalRegion r;
    double sum = 0.0;
    for (std::size_t i = 0; i < corr.counts.size(); ++i) {
        const double t = corr.bin_center_s(i);
        if (t >= opts.accidental_min_s && t <= opts.accidental_max_s) {
            sum += static_cast<double>(corr.counts[i]);
            ++r.n_bins;
        }
    }
    if (r.n_bins > 0)
        r.mean = sum / static_cast<double>(r.n_bins);
    return r;
}

struct SideFit {
    double delta_nu = 0.0;
    double amplitude_log = 0.0;   // log of counts excess extrapolated to tau=0
    double window[2] = {0.0, 0.0};
    double residual_rms = 0.0;
};

// Weighted LS of log(counts - floor) vs |tau| over [wmin, wmax] on one side.
SideFit fit_side(const Correlogram& corr, bool positive, double floor, double wmin, double wmax)
{
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> ws;
    for (std::size_t i = 0; i < corr.counts.size(); ++i) {
        const double t = corr.bin_center_s(i);
        const double at = std::abs(t);
        if ((positive && t <= 0.0) || (!positive && t >= 0.0))
            continue;
        if (at < wmin || at > wmax)
            continue;
        const double n = static_cast<double>(corr.counts[i]);
        const double excess = n - floor;
        if (excess <= 0.0)
            continue;  // auto-shrink: unusable bin
        xs.push_back(at);
        ys.push_back(std::log(excess));
        ws.push_back(excess * excess / std::max(n, 1.0));
    }
    if (xs.size() < 5)
        throw std::runtime_error("fit_bandwidths: fewer than 5 usable bins on one side");

    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += ws[i];
        sx += ws[i] * xs[i];
        sy += ws[i] * ys[i];
        sxx += ws[i] * xs[i] * xs[i];
        sxy += ws[i] * xs[i] * ys[i];
    }
    const double denom = sw * sxx - sx * sx;
    if (!(std::abs(denom) > 0.0))
        throw std::runtime_error("fit_bandwidths: degenerate fit window");
    const double slope = (sw * sxy - sx * sy) / denom;   // expected negative
    const double intercept = (sy - slope * sx) / sw;

    SideFit f;
    f.delta_nu = -slope / kTwoPi;
    f.amplitude_log = intercept;
    f.window[0] = wmin;
    f.window[1] = wmax;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (intercept + slope * xs[i]);
        rss += r * r;
    }
    f.residual_rms = std::sqrt(rss / static_cast<double>(xs.size()));
    if (!(f.delta_nu > 0.0))
        throw std::runtime_error("fit_bandwidths: non-decaying side");
    return f;
}

} // namespace

BandwidthFit fit_bandwidths(const Correlogram& corr, double jitter_fwhm_s,
                            const AnalysisOptions& opts)
{
    const AccidentalRegion acc = accidental_floor(corr, opts);
    if (acc.n_bins == 0)
        throw std::runtime_error("fit_bandwidths: accidental region not covered");

    const double peak = static_cast<double>(corr.counts[corr.zero_bin()]);
    if (peak <= opts.min_peak_snr * std::max(acc.mean, 1.0))
        throw std::runtime_error("fit_bandwidths: peak SNR below threshold");

    const double wmin = std::max(3.0 * jitter_fwhm_s, 0.75 * corr.bin_width_s);
    double floor = acc.mean;
    SideFit left;
    SideFit right;
    for (int pass = 0; pass <= opts.floor_leak_iterations; ++pass) {
        // crude window first, then refit inside coherence_multiples/(2 pi dnu)
        double wmax_r = opts.accidental_min_s;
        double wmax_l = opts.accidental_min_s;
        if (pass > 0) {
            wmax_r = std::min(wmax_r, opts.coherence_multiples / (kTwoPi * right.delta_nu));
            wmax_l = std::min(wmax_l, opts.coherence_multiples / (kTwoPi * left.delta_nu));
        }
        right = fit_side(corr, true, floor, wmin, wmax_r);
        left = fit_side(corr, false, floor, wmin, wmax_l);

        // Residual true coincidences bias the accidental mean upward; remove
        // the leakage predicted by the current right-side fit.
        double leak = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < corr.counts.size(); ++i) {
            const double t = corr.bin_center_s(i);
            if (t >= opts.accidental_min_s && t <= opts.accidental_max_s) {
                leak += std::exp(right.amplitude_log - kTwoPi * right.delta_nu * t);
                ++n;
            }
        }
        if (n > 0)
            floor = std::max(acc.mean - leak / static_cast<double>(n), 0.0);
    }

    BandwidthFit out;
    out.delta_nu_left_hz = left.delta_nu;
    out.delta_nu_right_hz = right.delta_nu;
    out.window_left_s[0] = left.window[0];
    out.window_left_s[1] = left.window[1];
    out.window_right_s[0] = right.window[0];
    out.window_right_s[1] = right.window[1];
    out.floor_per_bin = floor;
    out.residual_rms = std::max(left.residual_rms, right.residual_rms);
    return out;
}

double g2_zero_estimate(const Correlogram& corr, const AnalysisOptions& opts)
{
    const AccidentalRegion acc = accidental_floor(corr, opts);
    if (acc.n_bins == 0 || !(acc.mean > 0.0))
        throw std::runtime_error("g2_zero_estimate: empty accidental region");
    if (corr.tau_max_s < opts.accidental_max_s)
        throw std::runtime_error("g2_zero_estimate: range does not cover the accidental region");

    const std::size_t z = corr.zero_bin();
    double peak = static_cast<double>(corr.counts[z]);
    if (opts.bin_averaged_peak) {
        double sum = 0.0;
        int n = 0;
        for (std::ptrdiff_t k = -1; k <= 1; ++k) {
            const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(z) + k;
            if (i >= 0 && i < static_cast<std::ptrdiff_t>(corr.counts.size())) {
                sum += static_cast<double>(corr.counts[static_cast<std::size_t>(i)]);
                ++n;
            }
        }
        peak = sum / n;
    }
    return peak / acc.mean;
}

double comb_period(const Correlogram& corr, const AnalysisOptions& opts)
{
    const AccidentalRegion acc = accidental_floor(corr, opts);
    const double floor = acc.n_bins > 0 ? acc.mean : 0.0;

    // envelope over the background-subtracted histogram
    const std::size_t n = corr.counts.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = static_cast<double>(corr.counts[i]) - floor;
    const int w = std::max(1, opts.envelope_window_bins);
    std::vector<double> env(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto lo = static_cast<std::size_t>(
            std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - w));
        const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(w));
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j)
            s += y[j];
        env[i] = s / static_cast<double>(hi - lo + 1);
    }

    double env_peak = 0.0;
    for (const double e : env)
        env_peak = std::max(env_peak, e);
    if (!(env_peak > 0.0))
        throw NoCombDetected("comb_period: no signal above the accidental floor");

    // largest contiguous significant block around the zero bin
    const double env_cut = env_peak / 20.0;
    const std::size_t z = corr.zero_bin();
    std::size_t lo = z;
    std::size_t hi = z;
    while (lo > 0 && env[lo - 1] > env_cut)
        --lo;
    while (hi + 1 < n && env[hi + 1] > env_cut)
        ++hi;
    const std::size_t m = hi - lo + 1;
    if (m < 16)
        throw NoCombDetected("comb_period: signal region too short");

    // Refine the envelope inside the block with a window matched to the
    // block length, so a coarsely binned decay (few bins per coherence
    // time) is tracked instead of leaking into the low-frequency residual.
    const int w2 = std::clamp(static_cast<int>(m / 24), 2, w);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t a =
            lo + i >= lo + static_cast<std::size_t>(w2) ? lo + i - static_cast<std::size_t>(w2)
                                                        : lo;
        const std::size_t b = std::min(hi, lo + i + static_cast<std::size_t>(w2));
        double s = 0.0;
        for (std::size_t j = a; j <= b; ++j)
            s += y[j];
        env[lo + i] = s / static_cast<double>(b - a + 1);
    }

    // residual from the envelope, normalized by the Poisson scale so the
    // noise floor is flat across the block
    std::vector<double> z_norm(m);
    for (std::size_t i = 0; i < m; ++i)
        z_norm[i] = (y[lo + i] - env[lo + i]) /
                    std::sqrt(std::max(env[lo + i] + floor, 1.0));

    // Welch-averaged periodogram: segment averaging tames the exponential
    // tail of single-bin powers, so the significance cut applies to the
    // floor rather than to max-of-many-draws statistics. Periods below four
    // bins are outside what this binning resolves.
    const std::size_t n_seg = std::max<std::size_t>(2, std::min<std::size_t>(4, m / 12));
    const std::size_t seg_len = m / n_seg;
    const double seg_span = static_cast<double>(seg_len) * corr.bin_width_s;
    std::vector<double> power;
    std::vector<double> freq;
    for (std::size_t j = 1; j <= seg_len / 2; ++j) {
        const double f = static_cast<double>(j) / seg_span;
        if (f > 1.0 / (4.0 * corr.bin_width_s))
            break;
        double avg = 0.0;
        for (std::size_t s = 0; s < n_seg; ++s) {
            std::complex<double> acc_c{0.0, 0.0};
            for (std::size_t i = 0; i < seg_len; ++i) {
                const double phase = -kTwoPi * f * (static_cast<double>(i) * corr.bin_width_s);
                acc_c += z_norm[s * seg_len + i] *
                         std::complex<double>(std::cos(phase), std::sin(phase));
            }
            avg += std::norm(acc_c);
        }
        freq.push_back(f);
        power.push_back(avg / static_cast<double>(n_seg));
    }
    if (power.size() < 6)
        throw NoCombDetected("comb_period: too few spectral bins");

    std::size_t jmax = 0;
    for (std::size_t j = 1; j < power.size(); ++j)
        if (power[j] > power[jmax])
            jmax = j;

    std::vector<double> sorted = power;
    std::sort(sorted.begin(), sorted.end());
    const double noise = sorted[sorted.size() / 2];
    if (!(noise > 0.0) || power[jmax] < opts.comb_peak_significance * noise)
        throw NoCombDetected("comb_period: no comb detected");

    // parabolic refinement on the averaged power peak
    double f_peak = freq[jmax];
    if (jmax > 0 && jmax + 1 < power.size()) {
        const double pm = power[jmax - 1];
        const double p0 = power[jmax];
        const double pp = power[jmax + 1];
        const double denom = pm - 2.0 * p0 + pp;
        if (std::abs(denom) > 0.0) {
            const double shift = 0.5 * (pm - pp) / denom;
            f_peak += shift / seg_span;
        }
    }
    return 1.0 / f_peak;
}

double coincidence_rate_metric(const Correlogram& corr, const AnalysisOptions& opts)
{
    const AccidentalRegion acc = accidental_floor(corr, opts);
    if (acc.n_bins == 0)
        throw std::runtime_error("coincidence_rate_metric: accidental region not covered");
    if (!(corr.wall_time_s > 0.0))
        throw std::runtime_error("coincidence_rate_metric: unknown wall time");
    double total = 0.0;
    for (const auto c : corr.counts)
        total += static_cast<double>(c);
    return (total - acc.mean * static_cast<double>(corr.counts.size())) / corr.wall_time_s;
}

std::vector<FringePoint> fringe_visibility(const std::vector<FringeScan>& scans,
                                           double wavelength_m)
{
    if (!(wavelength_m > 0.0))
        throw std::invalid_argument("fringe_visibility: bad wavelength");
    std::vector<FringePoint> out;
    out.reserve(scans.size());
    for (const auto& scan : scans) {
        FringePoint pt;
        pt.path_difference_m = scan.path_difference_m;
        double xmin = 0.0;
        double xmax = 0.0;
        if (!scan.samples.empty()) {
            xmin = xmax = scan.samples.front().first;
            for (const auto& [x, c] : scan.samples) {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
            }
        }
        if (scan.samples.size() < 4 || xmax - xmin < wavelength_m) {
            out.push_back(pt);  // spans less than one fringe: flagged
            continue;
        }
        // least squares on {1, cos kx, sin kx}
        const double k = kTwoPi / wavelength_m;
        double a[3][3] = {};
        double b[3] = {};
        for (const auto& [x, c] : scan.samples) {
            const double basis[3] = {1.0, std::cos(k * x), std::sin(k * x)};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j)
                    a[i][j] += basis[i] * basis[j];
                b[i] += basis[i] * c;
            }
        }
        // 3x3 Gaussian elimination with partial pivoting
        double m[3][4];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j)
                m[i][j] = a[i][j];
            m[i][3] = b[i];
        }
        bool singular = false;
        for (int col = 0; col < 3 && !singular; ++col) {
            int piv = col;
            for (int r = col + 1; r < 3; ++r)
                if (std::abs(m[r][col]) > std::abs(m[piv][col]))
                    piv = r;
            if (std::abs(m[piv][col]) < 1e-12) {
                singular = true;
                break;
            }
            std::swap(m[piv], m[col]);
            for (int r = 0; r < 3; ++r) {
                if (r == col)
                    continue;
                const double f = m[r][col] / m[col][col];
                for (int cc = col; cc < 4; ++cc)
                    m[r][cc] -= f * m[col][cc];
            }
        }
        if (!singular) {
            const double a0 = m[0][3] / m[0][0];
            const double ac = m[1][3] / m[1][1];
            const double as = m[2][3] / m[2][2];
            if (a0 > 0.0) {
                pt.visibility = std::hypot(ac, as) / a0;
                pt.ok = true;
            }
        }
        out.push_back(pt);
    }
    return out;
}

BootstrapSummary bootstrap_estimates(std::span<const std::uint64_t> signal_ps,
                                     std::span<const std::uint64_t> idler_ps,
                                     double bin_width_s, double tau_min_s, double tau_max_s,
                                     double jitter_fwhm_s, const AnalysisOptions& opts,
                                     const BootstrapOptions& bopts)
{
    if (signal_ps.empty() || idler_ps.empty())
        throw std::invalid_argument("bootstrap_estimates: empty stream");
    const int n_slices = std::max(2, bopts.n_slices);

    // Per-slice correlograms over signal-time slices; their sum is exactly
    // the full correlogram.
    const std::uint64_t t0 = std::min(signal_ps.front(), idler_ps.front());
    const std::uint64_t t1 = std::max(signal_ps.back(), idler_ps.back()) + 1;
    const std::uint64_t slice_span = (t1 - t0 + n_slices - 1) / n_slices;

    std::vector<Correlogram> parts;
    parts.reserve(static_cast<std::size_t>(n_slices));
    std::size_t begin = 0;
    for (int s = 0; s < n_slices; ++s) {
        const std::uint64_t edge = t0 + slice_span * static_cast<std::uint64_t>(s + 1);
        std::size_t end = begin;
        while (end < signal_ps.size() && signal_ps[end] < edge)
            ++end;
        parts.push_back(cross_correlogram(signal_ps.subspan(begin, end - begin), idler_ps,
                                          bin_width_s, tau_min_s, tau_max_s, 1, 1.0));
        begin = end;
    }

    const double wall = static_cast<double>(t1 - t0) * 1e-12;
    auto combined = [&](const std::vector<int>& mult) {
        Correlogram c = parts.front();
        std::fill(c.counts.begin(), c.counts.end(), 0);
        for (int s = 0; s < n_slices; ++s) {
            if (mult[static_cast<std::size_t>(s)] == 0)
                continue;
            const auto m = static_cast<std::uint64_t>(mult[static_cast<std::size_t>(s)]);
            for (std::size_t i = 0; i < c.counts.size(); ++i)
                c.counts[i] += m * parts[static_cast<std::size_t>(s)].counts[i];
        }
        c.wall_time_s = wall;
        return c;
    };

    std::vector<int> identity(static_cast<std::size_t>(n_slices), 1);
    const Correlogram full = combined(identity);
    const BandwidthFit base_fit = fit_bandwidths(full, jitter_fwhm_s, opts);
    const double base_g2 = g2_zero_estimate(full, opts);

    std::mt19937_64 eng(bopts.seed);
    std::vector<double> dl;
    std::vector<double> dr;
    std::vector<double> g2s;
    for (int r = 0; r < bopts.n_resamples; ++r) {
        std::vector<int> mult(static_cast<std::size_t>(n_slices), 0);
        for (int k = 0; k < n_slices; ++k)
            ++mult[static_cast<std::size_t>(eng() % static_cast<std::uint64_t>(n_slices))];
        const Correlogram c = combined(mult);
        try {
            const BandwidthFit f = fit_bandwidths(c, jitter_fwhm_s, opts);
            dl.push_back(f.delta_nu_left_hz);
            dr.push_back(f.delta_nu_right_hz);
            g2s.push_back(g2_zero_estimate(c, opts));
        } catch (const std::runtime_error&) {
            // resample too thin for a fit; skip
        }
    }
    if (g2s.size() < 8)
        throw std::runtime_error("bootstrap_estimates: too few successful resamples");

    auto sigma_of = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (const double x : v)
            mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (const double x : v)
            var += (x - mean) * (x - mean);
        return std::sqrt(var / static_cast<double>(v.size() - 1));
    };

    BootstrapSummary out;
    out.delta_nu_left = {base_fit.delta_nu_left_hz, sigma_of(dl)};
    out.delta_nu_right = {base_fit.delta_nu_right_hz, sigma_of(dr)};
    out.g2_zero = {base_g2, sigma_of(g2s)};
    return out;
}

RunSummary analyze_run(const TimeTagStream& stream, double bin_width_s, double tau_min_s,
                       double tau_max_s, double jitter_fwhm_s, const AnalysisOptions& opts,
                       unsigned threads)
{
    const auto [signal, idler] = split_channels(stream);
    const Correlogram corr = cross_correlogram(signal, idler, bin_width_s, tau_min_s, tau_max_s,
                                               threads, stream.duration_s);
    RunSummary out;
    out.g2_zero = g2_zero_estimate(corr, opts);
    try {
        const BandwidthFit fit = fit_bandwidths(corr, jitter_fwhm_s, opts);
        out.delta_nu_left_hz = fit.delta_nu_left_hz;
        out.delta_nu_right_hz = fit.delta_nu_right_hz;
        out.bandwidth_fit_ok = true;
    } catch (const std::runtime_error&) {
        out.bandwidth_fit_ok = false;  // e.g. uncorrelated input, peak below SNR
    }
    out.coincidence_rate_hz = coincidence_rate_metric(corr, opts);
    try {
        out.comb_period_ps = comb_period(corr, opts) * 1e12;
        out.comb_detected = true;
    } catch (const NoCombDetected&) {
        out.comb_detected = false;
        out.comb_period_ps = 0.0;
    }
    return out;
}

std::string format_summary(const RunSummary& s)
{
    std::ostringstream os;
    os.precision(6);
    os << "g2_zero = " << s.g2_zero << '\n';
    if (s.bandwidth_fit_ok) {
        os << "delta_nu_left_hz = " << s.delta_nu_left_hz << '\n';
        os << "delta_nu_right_hz = " << s.delta_nu_right_hz << '\n';
    } else {
        os << "delta_nu_left_hz = none\n";
        os << "delta_nu_right_hz = none\n";
    }
    if (s.comb_detected)
        os << "comb_period_ps = " << s.comb_period_ps << '\n';
    else
        os << "comb_period_ps = none\n";
    os << "coincidence_rate_hz = " << s.coincidence_rate_hz << '\n';
    return os.str();
}

} // namespace spdc
