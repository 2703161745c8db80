#include "spdc/timetag.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace spdc {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic draws on top of the standardized mt19937_64 sequence; the
// distribution transforms are spelled out here so streams do not depend on
// the standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log1p(-u01()) / rate; }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = u01();
        while (u1 <= 0.0)
            u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

bool tag_less(const TimeTag& a, const TimeTag& b)
{
    return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps
                                            : a.channel < b.channel;
}

constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 9;
constexpr char kMagic[4] = {'T', 'T', 'G', '1'};
constexpr std::uint16_t kVersion = 1;

void put_u16(unsigned char* p, std::uint16_t v)
{
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>(v >> 8);
}

void put_u64(unsigned char* p, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
}

std::uint16_t get_u16(const unsigned char* p)
{
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u64(const unsigned char* p)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

void ChopperConfig::validate() const
{
    if (!(frequency_hz > 0.0))
        throw std::invalid_argument("chopper: frequency must be positive");
    if (!(open_fraction > 0.0) || open_fraction > 1.0)
        throw std::invalid_argument("chopper: open fraction must be in (0, 1]");
}

bool ChopperConfig::is_open(double t_s) const
{
    const double period = 1.0 / frequency_hz;
    const double rel = t_s - std::floor(t_s / period) * period;
    return rel < open_fraction * period;
}

double SimConfig::expected_tags() const
{
    const double generated = model.pair_rate_per_mw * pump_mw;
    const double survival = filtered ? model.single_mode_fraction : 1.0;
    const double open = chopper.open_fraction;
    const double per_open_second = generated * survival * (model.eta_signal + model.eta_idler) +
                                   generated * (1.0 - survival) * model.eta_signal +
                                   model.dark_signal_hz + model.dark_idler_hz;
    return duration_s * open * per_open_second;
}

DelaySampler::DelaySampler(const CorrelationProfile& profile) : grid_(profile.grid)
{
    cdf_ = profile_cdf(profile);
    for (std::size_t i = 1; i < cdf_.size(); ++i)
        if (cdf_[i] < cdf_[i - 1])
            throw std::logic_error("delay sampler: CDF table not monotone");
    if (!(cdf_.back() > 0.0))
        throw std::invalid_argument("delay sampler: zero-mass profile");
    for (auto& c : cdf_)
        c /= cdf_.back();
}

double DelaySampler::sample(double u01) const
{
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u01);
    if (it == cdf_.begin())
        return grid_.tau_min_s;
    if (it == cdf_.end())
        return grid_.tau_max_s();
    const auto i = static_cast<std::size_t>(it - cdf_.begin()) - 1;
    const double lo = cdf_[i];
    const double hi = cdf_[i + 1];
    const double frac = hi > lo ? (u01 - lo) / (hi - lo) : 0.0;
    return grid_.tau(i) + frac * grid_.step_s;
}

namespace {

struct SliceContext {
    const SimConfig* cfg;
    const DelaySampler* sampler;
    double sigma_jitter;
    double pair_rate;            // surviving pairs, open-window rate
    double unpaired_signal_rate; // pre-efficiency, open-window rate
};

// Quantize, then keep only tags inside [0, duration) and an open window.
void emit(const SliceContext& ctx, std::vector<TimeTag>& out, double t_s, Channel ch)
{
    const double ts = static_cast<double>(std::llround(t_s * 1e12)) * 1e-12;
    if (ts < 0.0 || ts >= ctx.cfg->duration_s || !ctx.cfg->chopper.is_open(ts))
        return;
    out.push_back({static_cast<std::uint64_t>(std::llround(t_s * 1e12)),
                   static_cast<std::uint8_t>(ch)});
}

// All tags whose emission falls inside [t0, t1).
std::vector<TimeTag> generate_slice(const SliceContext& ctx, std::uint64_t slice_index,
                                    double t0, double t1)
{
    Rng rng(splitmix64(ctx.cfg->rng_seed ^ splitmix64(slice_index + 1)));
    std::vector<TimeTag> out;
    const double expected =
        (t1 - t0) * ctx.cfg->chopper.open_fraction *
        (ctx.pair_rate * 2.0 + ctx.unpaired_signal_rate + ctx.cfg->model.dark_signal_hz +
         ctx.cfg->model.dark_idler_hz);
    out.reserve(static_cast<std::size_t>(expected * 1.2) + 16);

    const double period = 1.0 / ctx.cfg->chopper.frequency_hz;
    const double open_len = ctx.cfg->chopper.open_fraction * period;
    const auto k0 = static_cast<long long>(std::floor(t0 / period));
    const auto k1 = static_cast<long long>(std::ceil(t1 / period));

    const SourceRateModel& model = ctx.cfg->model;
    for (long long k = k0; k < k1; ++k) {
        const double wlo = std::max(t0, static_cast<double>(k) * period);
        const double whi = std::min({t1, static_cast<double>(k) * period + open_len,
                                     ctx.cfg->duration_s});
        if (whi <= wlo)
            continue;

        // true pairs
        if (ctx.pair_rate > 0.0) {
            double t = wlo + rng.exponential(ctx.pair_rate);
            while (t < whi) {
                const double delay = ctx.sampler->sample(rng.u01());
                const bool keep_signal = rng.u01() < model.eta_signal;
                const bool keep_idler = rng.u01() < model.eta_idler;
                if (keep_signal)
                    emit(ctx, out, t + ctx.sigma_jitter * rng.normal(), Channel::signal);
                if (keep_idler)
                    emit(ctx, out, t + delay + ctx.sigma_jitter * rng.normal(), Channel::idler);
                t += rng.exponential(ctx.pair_rate);
            }
        }

        // signal-arm photons whose idler partner was filtered out
        if (ctx.unpaired_signal_rate > 0.0) {
            double t = wlo + rng.exponential(ctx.unpaired_signal_rate);
            while (t < whi) {
                if (rng.u01() < model.eta_signal)
                    emit(ctx, out, t + ctx.sigma_jitter * rng.normal(), Channel::signal);
                t += rng.exponential(ctx.unpaired_signal_rate);
            }
        }

        // dark counts, open windows only
        for (Channel ch : {Channel::signal, Channel::idler}) {
            const double rate =
                ch == Channel::signal ? model.dark_signal_hz : model.dark_idler_hz;
            if (rate <= 0.0)
                continue;
            double t = wlo + rng.exponential(rate);
            while (t < whi) {
                emit(ctx, out, t, ch);
                t += rng.exponential(rate);
            }
        }
    }
    std::sort(out.begin(), out.end(), tag_less);
    return out;
}

SliceContext make_context(const SimConfig& cfg, const DelaySampler& sampler)
{
    cfg.model.validate();
    cfg.chopper.validate();
    if (!(cfg.duration_s > 0.0) || !(cfg.slice_s > 0.0))
        throw std::invalid_argument("simulate: duration and slice length must be positive");
    if (cfg.jitter_fwhm_s < 0.0 || cfg.pump_mw < 0.0)
        throw std::invalid_argument("simulate: negative jitter or pump");

    SliceContext ctx;
    ctx.cfg = &cfg;
    ctx.sampler = &sampler;
    ctx.sigma_jitter = cfg.jitter_fwhm_s / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    const double generated = cfg.model.pair_rate_per_mw * cfg.pump_mw;
    const double survival = cfg.filtered ? cfg.model.single_mode_fraction : 1.0;
    ctx.pair_rate = generated * survival;
    ctx.unpaired_signal_rate = generated * (1.0 - survival);
    return ctx;
}

std::uint64_t slice_count(const SimConfig& cfg)
{
    return static_cast<std::uint64_t>(std::ceil(cfg.duration_s / cfg.slice_s - 1e-12));
}

} // namespace

TimeTagStream simulate(const SimConfig& cfg, unsigned threads)
{
    if (cfg.expected_tags() > cfg.max_expected_tags && !cfg.chunked_output)
        throw StreamTooLarge("simulate: stream too large (set the chunked-output flag)");

    const DelaySampler sampler(cfg.profile);
    const SliceContext ctx = make_context(cfg, sampler);
    const std::uint64_t n_slices = slice_count(cfg);

    std::vector<std::vector<TimeTag>> parts(n_slices);
    const unsigned nthreads = std::max(1u, threads);
    if (nthreads == 1) {
        for (std::uint64_t s = 0; s < n_slices; ++s)
            parts[s] = generate_slice(ctx, s, static_cast<double>(s) * cfg.slice_s,
                                      std::min(cfg.duration_s,
                                               static_cast<double>(s + 1) * cfg.slice_s));
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::uint64_t> next{0};
        for (unsigned t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (std::uint64_t s = next.fetch_add(1); s < n_slices; s = next.fetch_add(1))
                    parts[s] = generate_slice(ctx, s, static_cast<double>(s) * cfg.slice_s,
                                              std::min(cfg.duration_s,
                                                       static_cast<double>(s + 1) * cfg.slice_s));
            });
        for (auto& th : pool)
            th.join();
    }

    TimeTagStream stream;
    stream.duration_s = cfg.duration_s;
    std::size_t total = 0;
    for (const auto& p : parts)
        total += p.size();
    stream.tags.reserve(total);
    for (auto& p : parts) {
        stream.tags.insert(stream.tags.end(), p.begin(), p.end());
        p.clear();
        p.shrink_to_fit();
    }
    std::sort(stream.tags.begin(), stream.tags.end(), tag_less);
    return stream;
}

void simulate_to_file(const SimConfig& cfg, const std::string& path, unsigned threads)
{
    (void)threads;  // slices are written in order; generation is the cheap part
    const DelaySampler sampler(cfg.profile);
    const SliceContext ctx = make_context(cfg, sampler);
    const std::uint64_t n_slices = slice_count(cfg);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw TagFileError(TagFileError::Code::io, "cannot open " + path);
    unsigned char header[kHeaderBytes] = {};
    std::memcpy(header, kMagic, 4);
    put_u16(header + 4, kVersion);
    put_u16(header + 6, 2);
    f.write(reinterpret_cast<const char*>(header), kHeaderBytes);

    // Tags may trail their slice by the profile span plus jitter; hold that
    // margin back until the next slice is merged so output stays sorted.
    const double margin_s = std::max(std::abs(cfg.profile.grid.tau_min_s),
                                     cfg.profile.grid.tau_max_s()) +
                            10.0 * cfg.jitter_fwhm_s + 1e-9;
    const auto margin_ps = static_cast<std::uint64_t>(margin_s * 1e12);

    std::vector<TimeTag> pending;
    auto flush_before = [&](std::uint64_t limit_ps) {
        std::size_t n = 0;
        unsigned char rec[kRecordBytes];
        while (n < pending.size() && pending[n].timestamp_ps < limit_ps) {
            put_u64(rec, pending[n].timestamp_ps);
            rec[8] = pending[n].channel;
            f.write(reinterpret_cast<const char*>(rec), kRecordBytes);
            ++n;
        }
        pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(n));
    };

    for (std::uint64_t s = 0; s < n_slices; ++s) {
        const double t1 = std::min(cfg.duration_s, static_cast<double>(s + 1) * cfg.slice_s);
        auto part = generate_slice(ctx, s, static_cast<double>(s) * cfg.slice_s, t1);
        pending.insert(pending.end(), part.begin(), part.end());
        std::sort(pending.begin(), pending.end(), tag_less);
        const auto t1_ps = static_cast<std::uint64_t>(std::llround(t1 * 1e12));
        flush_before(t1_ps > margin_ps ? t1_ps - margin_ps : 0);
    }
    flush_before(std::numeric_limits<std::uint64_t>::max());
    if (!f)
        throw TagFileError(TagFileError::Code::io, "write failed: " + path);
}

void write_tags(const TimeTagStream& stream, const std::string& path)
{
    for (std::size_t i = 1; i < stream.tags.size(); ++i)
        if (stream.tags[i].timestamp_ps < stream.tags[i - 1].timestamp_ps)
            throw std::invalid_argument("write_tags: stream not sorted");

    if (ends_with(path, ".csv")) {
        std::ofstream f(path, std::ios::trunc);
        if (!f)
            throw TagFileError(TagFileError::Code::io, "cannot open " + path);
        f << "timestamp_ps,channel\n";
        for (const auto& t : stream.tags)
            f << t.timestamp_ps << ',' << static_cast<unsigned>(t.channel) << '\n';
        if (!f)
            throw TagFileError(TagFileError::Code::io, "write failed: " + path);
        return;
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw TagFileError(TagFileError::Code::io, "cannot open " + path);
    unsigned char header[kHeaderBytes] = {};
    std::memcpy(header, kMagic, 4);
    put_u16(header + 4, kVersion);
    put_u16(header + 6, 2);
    f.write(reinterpret_cast<const char*>(header), kHeaderBytes);
    std::vector<unsigned char> buf;
    buf.reserve(kRecordBytes * std::min<std::size_t>(stream.tags.size(), 1 << 16));
    for (const auto& t : stream.tags) {
        unsigned char rec[kRecordBytes];
        put_u64(rec, t.timestamp_ps);
        rec[8] = t.channel;
        buf.insert(buf.end(), rec, rec + kRecordBytes);
        if (buf.size() >= (1 << 20)) {
            f.write(reinterpret_cast<const char*>(buf.data()),
                    static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    if (!buf.empty())
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
    if (!f)
        throw TagFileError(TagFileError::Code::io, "write failed: " + path);
}

namespace {

TimeTagStream read_tags_csv(std::ifstream& f, const std::string& path)
{
    TimeTagStream stream;
    std::string line;
    if (!std::getline(f, line) || line.rfind("timestamp_ps,channel", 0) != 0)
        throw TagFileError(TagFileError::Code::bad_magic, path + ": not a tag CSV");
    std::uint64_t prev = 0;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::uint64_t ts = 0;
        unsigned ch = 0;
        if (std::sscanf(line.c_str(), "%llu,%u",
                        reinterpret_cast<unsigned long long*>(&ts), &ch) != 2)
            throw TagFileError(TagFileError::Code::truncated_record,
                               path + ": malformed record at line " + std::to_string(lineno));
        if (ch > 1)
            throw TagFileError(TagFileError::Code::bad_channel,
                               path + ": channel id out of range at line " +
                                   std::to_string(lineno));
        if (!stream.tags.empty() && ts < prev)
            throw TagFileError(TagFileError::Code::unsorted,
                               path + ": timestamps not sorted at line " + std::to_string(lineno));
        prev = ts;
        stream.tags.push_back({ts, static_cast<std::uint8_t>(ch)});
    }
    return stream;
}

} // namespace

TimeTagStream read_tags(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw TagFileError(TagFileError::Code::io, "cannot open " + path);

    char magic[4] = {};
    f.read(magic, 4);
    if (f.gcount() < 4)
        throw TagFileError(TagFileError::Code::bad_magic, path + ": file shorter than the magic");
    if (std::memcmp(magic, "time", 4) == 0 || std::memcmp(magic, kMagic, 4) != 0) {
        f.clear();
        f.seekg(0);
        if (std::memcmp(magic, "time", 4) == 0) {
            std::ifstream ft(path);
            return read_tags_csv(ft, path);
        }
        throw TagFileError(TagFileError::Code::bad_magic, path + ": bad magic");
    }

    unsigned char rest[kHeaderBytes - 4];
    f.read(reinterpret_cast<char*>(rest), sizeof(rest));
    if (f.gcount() < static_cast<std::streamsize>(sizeof(rest)))
        throw TagFileError(TagFileError::Code::truncated_record, path + ": truncated header");
    if (get_u16(rest) != kVersion)
        throw TagFileError(TagFileError::Code::bad_version, path + ": unsupported version");
    if (get_u16(rest + 2) != 2)
        throw TagFileError(TagFileError::Code::bad_version, path + ": unsupported channel count");

    TimeTagStream stream;
    std::vector<unsigned char> buf(kRecordBytes * 4096);
    std::uint64_t prev = 0;
    bool first = true;
    for (;;) {
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(f.gcount());
        if (got == 0)
            break;
        if (got % kRecordBytes != 0)
            throw TagFileError(TagFileError::Code::truncated_record, path + ": truncated record");
        for (std::size_t off = 0; off < got; off += kRecordBytes) {
            TimeTag t;
            t.timestamp_ps = get_u64(buf.data() + off);
            t.channel = buf[off + 8];
            if (t.channel > 1)
                throw TagFileError(TagFileError::Code::bad_channel,
                                   path + ": channel id out of range");
            if (!first && t.timestamp_ps < prev)
                throw TagFileError(TagFileError::Code::unsorted,
                                   path + ": timestamps not sorted");
            prev = t.timestamp_ps;
            first = false;
            stream.tags.push_back(t);
        }
        if (f.eof())
            break;
    }
    return stream;
}

std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>
split_channels(const TimeTagStream& stream)
{
    std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>> out;
    for (const auto& t : stream.tags) {
        if (t.channel == static_cast<std::uint8_t>(Channel::signal))
            out.first.push_back(t.timestamp_ps);
        else
            out.second.push_back(t.timestamp_ps);
    }
    return out;
}

} // namespace spdc
