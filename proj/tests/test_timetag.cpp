#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spdc/config.hpp"
#include "spdc/timetag.hpp"

using namespace spdc;

namespace {

const ResolvedModel& model()
{
    static const ResolvedModel m = resolve_model(SourceConfig::defaults());
    return m;
}

// narrow triangular delay profile centered at zero, for degenerate tests;
// the 0.01 ps spread never moves a 1 ps quantized timestamp
CorrelationProfile delta_profile()
{
    CorrelationProfile p;
    p.grid = TauGrid::symmetric(1e-13, 1e-14);
    p.density.assign(p.grid.n, 0.0);
    p.density[(p.grid.n - 1) / 2] = 1.0;
    double mass = 0.0;
    for (std::size_t i = 1; i < p.grid.n; ++i)
        mass += 0.5 * (p.density[i] + p.density[i - 1]) * p.grid.step_s;
    for (auto& d : p.density)
        d /= mass;
    p.normalization = 1.0;
    return p;
}

SimConfig base_config()
{
    SimConfig cfg;
    cfg.duration_s = 2.0;
    cfg.pump_mw = 1.0;
    cfg.model = model().rates;
    cfg.profile = model().profile_unfiltered;
    cfg.jitter_fwhm_s = 350e-12;
    cfg.chopper = {1000.0, 1.0 / 3.0};
    cfg.rng_seed = 42;
    return cfg;
}

std::filesystem::path temp_file(const char* name)
{
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("fixed seed reproduces the stream bit for bit, for any worker count")
{
    const SimConfig cfg = base_config();
    const TimeTagStream a = simulate(cfg, 1);
    const TimeTagStream b = simulate(cfg, 1);
    REQUIRE(a.tags.size() == b.tags.size());
    CHECK(a.tags == b.tags);

    const TimeTagStream c = simulate(cfg, 4);
    CHECK(a.tags == c.tags);

    SimConfig reseeded = cfg;
    reseeded.rng_seed = 43;
    const TimeTagStream d = simulate(reseeded, 1);
    CHECK(a.tags != d.tags);
}

TEST_CASE("degenerate pairs: unit efficiency, no darks, zero delay, no jitter")
{
    SimConfig cfg = base_config();
    cfg.duration_s = 0.5;
    cfg.model.eta_signal = 1.0;
    cfg.model.eta_idler = 1.0;
    cfg.model.dark_signal_hz = 0.0;
    cfg.model.dark_idler_hz = 0.0;
    cfg.model.pair_rate_per_mw = 20000.0;
    cfg.profile = delta_profile();
    cfg.jitter_fwhm_s = 0.0;

    const TimeTagStream s = simulate(cfg);
    REQUIRE(!s.tags.empty());
    std::size_t n_signal = 0;
    std::size_t n_idler = 0;
    for (const auto& t : s.tags)
        (t.channel == 0 ? n_signal : n_idler)++;
    CHECK(n_signal == n_idler);

    // pairwise equal timestamps: tags come in (signal, idler) twins. The
    // 0.01 ps sampler cell can straddle a rounding boundary, so a 1 ps
    // record-resolution difference is allowed for the occasional pair.
    std::size_t off_by_one = 0;
    for (std::size_t i = 0; i + 1 < s.tags.size(); i += 2) {
        const std::uint64_t a = s.tags[i].timestamp_ps;
        const std::uint64_t b = s.tags[i + 1].timestamp_ps;
        CHECK((b >= a ? b - a : a - b) <= 1);
        if (a != b)
            ++off_by_one;
        CHECK(s.tags[i].channel != s.tags[i + 1].channel);
    }
    CHECK(off_by_one < s.tags.size() / 20);
}

TEST_CASE("channel counts follow Poisson statistics across seeds")
{
    SimConfig cfg = base_config();
    cfg.duration_s = 4.0;
    cfg.chopper.open_fraction = 1.0;  // plain homogeneous process
    cfg.model.dark_signal_hz = 0.0;
    cfg.model.dark_idler_hz = 0.0;
    cfg.model.eta_signal = 1.0;
    cfg.model.eta_idler = 1.0;
    cfg.model.pair_rate_per_mw = 5000.0;
    cfg.profile = delta_profile();

    for (const std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        cfg.rng_seed = seed;
        const TimeTagStream s = simulate(cfg);
        std::size_t n_signal = 0;
        for (const auto& t : s.tags)
            if (t.channel == 0)
                ++n_signal;
        const double lam = 5000.0 * 4.0;
        CHECK(std::abs(static_cast<double>(n_signal) - lam) < 4.0 * std::sqrt(lam));
    }
}

TEST_CASE("delay histogram of simulated pairs follows the profile (chi-squared)")
{
    SimConfig cfg = base_config();
    cfg.duration_s = 40.0;
    cfg.chopper.open_fraction = 1.0;
    cfg.model.eta_signal = 1.0;
    cfg.model.eta_idler = 1.0;
    cfg.model.dark_signal_hz = 0.0;
    cfg.model.dark_idler_hz = 0.0;
    cfg.model.pair_rate_per_mw = 4000.0;  // 1.6e5 pairs, gaps >> delays
    cfg.jitter_fwhm_s = 0.0;
    cfg.rng_seed = 7;

    const TimeTagStream s = simulate(cfg);
    std::vector<double> delays;
    std::vector<std::uint64_t> signal_ts;
    std::vector<std::uint64_t> idler_ts;
    for (const auto& t : s.tags)
        (t.channel == 0 ? signal_ts : idler_ts).push_back(t.timestamp_ps);
    REQUIRE(signal_ts.size() == idler_ts.size());
    REQUIRE(signal_ts.size() > 100000);
    delays.reserve(signal_ts.size());
    for (std::size_t i = 0; i < signal_ts.size(); ++i)
        delays.push_back((static_cast<double>(idler_ts[i]) -
                          static_cast<double>(signal_ts[i])) * 1e-12);

    // bins of 1.024 ns aligned with the 16 ps profile grid
    const double bin = 1.024e-9;
    const double lo = -64e-9;
    const double hi = 64e-9;
    const auto nbins = static_cast<std::size_t>((hi - lo) / bin);
    std::vector<double> observed(nbins, 0.0);
    for (const double d : delays) {
        if (d >= lo && d < hi)
            observed[static_cast<std::size_t>((d - lo) / bin)] += 1.0;
    }
    const double n = static_cast<double>(delays.size());
    double chi2 = 0.0;
    std::size_t dof = 0;
    for (std::size_t k = 0; k < nbins; ++k) {
        const double expect = n * profile_mass(cfg.profile, lo + k * bin, lo + (k + 1) * bin);
        if (expect < 10.0)
            continue;
        chi2 += (observed[k] - expect) * (observed[k] - expect) / expect;
        ++dof;
    }
    REQUIRE(dof > 50);
    CHECK(chi2 / static_cast<double>(dof) > 0.7);
    CHECK(chi2 / static_cast<double>(dof) < 1.3);
}

TEST_CASE("count rates scale linearly with pump power")
{
    SimConfig cfg = base_config();
    cfg.duration_s = 5.0;
    cfg.model.dark_signal_hz = 0.0;
    cfg.model.dark_idler_hz = 0.0;

    for (const std::uint64_t seed : {11ull, 12ull, 13ull}) {
        cfg.rng_seed = seed;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (const double p : {0.2, 0.4, 0.8, 1.6, 2.0}) {
            cfg.pump_mw = p;
            const TimeTagStream s = simulate(cfg);
            sx += std::log(p);
            sy += std::log(static_cast<double>(s.tags.size()));
            sxx += std::log(p) * std::log(p);
            sxy += std::log(p) * std::log(static_cast<double>(s.tags.size()));
            ++n;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(slope == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("no tags inside chopper-closed windows")
{
    const SimConfig cfg = base_config();
    const TimeTagStream s = simulate(cfg);
    REQUIRE(!s.tags.empty());
    for (const auto& t : s.tags) {
        const double ts = static_cast<double>(t.timestamp_ps) * 1e-12;
        CHECK(cfg.chopper.is_open(ts));
        CHECK(ts < cfg.duration_s);
    }
}

TEST_CASE("filtered runs thin idler singles but keep the signal arm")
{
    SimConfig cfg = base_config();
    cfg.duration_s = 5.0;
    cfg.model.dark_signal_hz = 0.0;
    cfg.model.dark_idler_hz = 0.0;
    cfg.profile = model().profile_filtered;
    cfg.filtered = true;

    const TimeTagStream s = simulate(cfg);
    std::size_t n_signal = 0;
    std::size_t n_idler = 0;
    for (const auto& t : s.tags)
        (t.channel == 0 ? n_signal : n_idler)++;

    const double open = cfg.duration_s * cfg.chopper.open_fraction;
    const double gen = cfg.model.pair_rate_per_mw * cfg.pump_mw;
    const double exp_signal = open * cfg.model.eta_signal * gen;
    const double exp_idler = open * cfg.model.eta_idler * gen * cfg.model.single_mode_fraction;
    CHECK(std::abs(static_cast<double>(n_signal) - exp_signal) < 5.0 * std::sqrt(exp_signal));
    CHECK(std::abs(static_cast<double>(n_idler) - exp_idler) < 5.0 * std::sqrt(exp_idler));
}

TEST_CASE("oversize streams are rejected unless chunked output is requested")
{
    SimConfig cfg = base_config();
    cfg.max_expected_tags = 100.0;
    try {
        static_cast<void>(simulate(cfg));
        FAIL("expected stream-too-large rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("stream too large") != std::string::npos);
    }
    cfg.chunked_output = true;
    const auto path = temp_file("spdc_tags_guard.ttg");
    CHECK_NOTHROW(simulate_to_file(cfg, path.string()));
}

TEST_CASE("binary round trip, empty file, and error taxonomy")
{
    SimConfig cfg = base_config();
    cfg.duration_s = 0.3;
    const TimeTagStream s = simulate(cfg);
    const auto path = temp_file("spdc_tags_test.ttg");

    write_tags(s, path.string());
    const TimeTagStream r = read_tags(path.string());
    CHECK(r.tags == s.tags);

    // empty stream: 16-byte header only
    const auto empty_path = temp_file("spdc_tags_empty.ttg");
    write_tags({}, empty_path.string());
    CHECK(std::filesystem::file_size(empty_path) == 16);
    CHECK(read_tags(empty_path.string()).tags.empty());

    // corrupted magic
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    try {
        read_tags(path.string());
        FAIL("expected bad magic");
    } catch (const TagFileError& e) {
        CHECK(e.code == TagFileError::Code::bad_magic);
    }

    // bad version
    write_tags(s, path.string());
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const char v2[2] = {2, 0};
        f.write(v2, 2);
    }
    try {
        read_tags(path.string());
        FAIL("expected bad version");
    } catch (const TagFileError& e) {
        CHECK(e.code == TagFileError::Code::bad_version);
    }

    // truncated record
    write_tags(s, path.string());
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
    try {
        read_tags(path.string());
        FAIL("expected truncation");
    } catch (const TagFileError& e) {
        CHECK(e.code == TagFileError::Code::truncated_record);
    }

    // unsorted records
    TimeTagStream bad = s;
    std::swap(bad.tags.front(), bad.tags.back());
    CHECK_THROWS_AS(write_tags(bad, path.string()), std::invalid_argument);
    write_tags(s, path.string());
    {
        // swap the first two timestamps on disk
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        char rec1[9];
        char rec2[9];
        f.seekg(16);
        f.read(rec1, 9);
        f.read(rec2, 9);
        f.seekp(16);
        f.write(rec2, 9);
        f.write(rec1, 9);
    }
    try {
        read_tags(path.string());
        FAIL("expected unsorted");
    } catch (const TagFileError& e) {
        CHECK(e.code == TagFileError::Code::unsorted);
    }
}

TEST_CASE("CSV round trip")
{
    SimConfig cfg = base_config();
    cfg.duration_s = 0.2;
    const TimeTagStream s = simulate(cfg);
    const auto path = temp_file("spdc_tags_test.csv");
    write_tags(s, path.string());
    const TimeTagStream r = read_tags(path.string());
    CHECK(r.tags == s.tags);
}

TEST_CASE("chunked file output equals the in-memory stream")
{
    SimConfig cfg = base_config();
    cfg.duration_s = 3.0;
    const TimeTagStream mem = simulate(cfg);
    const auto path = temp_file("spdc_tags_chunked.ttg");
    simulate_to_file(cfg, path.string());
    const TimeTagStream disk = read_tags(path.string());
    CHECK(disk.tags == mem.tags);
}

TEST_CASE("delay sampler rejects a non-monotone table and inverts the CDF")
{
    const DelaySampler sampler(model().profile_unfiltered);
    double prev = -1e9;
    for (double u = 0.001; u < 1.0; u += 0.0007) {
        const double d = sampler.sample(u);
        CHECK(d >= prev - 1e-15);
        prev = d;
    }
    // median of the 4/5 MHz two-sided exponential: ln(0.9)/(2 pi * 4 MHz)
    CHECK(sampler.sample(0.5) == doctest::Approx(-4.19e-9).epsilon(0.15));

    CorrelationProfile bad = model().profile_unfiltered;
    bad.density[bad.density.size() / 2] = -1e9;  // force a CDF decrease
    CHECK_THROWS_AS(DelaySampler{bad}, std::logic_error);
}
