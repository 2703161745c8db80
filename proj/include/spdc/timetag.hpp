//
// Monte Carlo generation of detector time-tag streams from the calibrated
// source model, and the TTG1 tag-file format (binary and CSV).
//
// Generation works in fixed 1 s time slices with per-slice RNG streams
// derived from (seed, slice index), so the merged output is byte-identical
// for any worker count or chunking. All tags land inside chopper-open
// windows; timestamps are quantized to 1 ps.
//

#ifndef SPDC_TIMETAG_HPP
#define SPDC_TIMETAG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdc/correlation.hpp"
#include "spdc/rates.hpp"

namespace spdc {

enum class Channel : std::uint8_t { signal = 0, idler = 1 };

struct TimeTag {
    std::uint64_t timestamp_ps = 0;
    std::uint8_t channel = 0;

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

struct TimeTagStream {
    std::vector<TimeTag> tags;
    double duration_s = 0.0;   // 0 when unknown (e.g. read from file)
};

struct ChopperConfig {
    double frequency_hz = 1000.0;
    double open_fraction = 1.0 / 3.0;

    void validate() const;
    // true if the quantized time lies inside an open window
    bool is_open(double t_s) const;
};

struct SimConfig {
    double duration_s = 1.0;
    double pump_mw = 1.0;
    SourceRateModel model;
    CorrelationProfile profile;        // pair delay density, before detector jitter
    double jitter_fwhm_s = 350e-12;    // per detector
    ChopperConfig chopper;
    std::uint64_t rng_seed = 1;
    bool filtered = false;             // idler-arm etalon in: pairs survive with
                                       // probability single_mode_fraction, lost
                                       // pairs still produce signal-arm singles
    double max_expected_tags = 1e9;
    bool chunked_output = false;
    double slice_s = 1.0;

    double expected_tags() const;
};

struct StreamTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

TimeTagStream simulate(const SimConfig& cfg, unsigned threads = 1);

// Streams slices straight to a TTG1 file; required when the expected tag
// count exceeds max_expected_tags.
void simulate_to_file(const SimConfig& cfg, const std::string& path, unsigned threads = 1);

struct TagFileError : std::runtime_error {
    enum class Code { bad_magic, bad_version, truncated_record, unsorted, bad_channel, io };
    Code code;
    TagFileError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
};

// TTG1 binary layout: magic "TTG1", u16 LE version (=1), u16 LE channel
// count (=2), 8 reserved bytes; then 9-byte records (u64 LE picosecond
// timestamp, u8 channel), sorted by timestamp. ".csv" paths use
// "timestamp_ps,channel" text instead.
void write_tags(const TimeTagStream& stream, const std::string& path);
TimeTagStream read_tags(const std::string& path);

// Per-channel timestamp arrays (analysis-side view of a stream).
std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>
split_channels(const TimeTagStream& stream);

// Deterministic delay sampler: inverse CDF over the profile grid with
// linear interpolation; construction asserts the table is monotone.
class DelaySampler {
public:
    explicit DelaySampler(const CorrelationProfile& profile);
    double sample(double u01) const;

private:
    TauGrid grid_;
    std::vector<double> cdf_;
};

} // namespace spdc

#endif
