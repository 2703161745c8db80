#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spdc/spectral.hpp"

using namespace spdc;

namespace {

const CavityParams kSignal{800e6, 4e6, 1.0, 0.0};
const CavityParams kIdler{802e6, 5e6, 1.0, 0.0};
const PhaseMatchEnvelope kEnvelope{120e9, EnvelopeShape::sinc_squared};
const EtalonParams kEtalon{8.4e9, 120e6, 0.0};

// Direct Airy evaluation, written out independently of the library.
double airy_oracle(double fsr, double fwhm, double detuning)
{
    const double finesse = fsr / fwhm;
    const double s = std::sin(std::numbers::pi * detuning / fsr);
    return 1.0 / (1.0 + std::pow(2.0 * finesse / std::numbers::pi * s, 2));
}

} // namespace

TEST_CASE("cavity transmission hits resonance, periodicity, and half maximum")
{
    CHECK(cavity_transmission(kSignal, 0.0) == doctest::Approx(1.0));
    CHECK(cavity_transmission(kSignal, 800e6) == doctest::Approx(1.0).epsilon(1e-9));

    // brute-force scan oracle locating the half-maximum point
    double best = 0.0;
    double best_err = 1e9;
    for (double w = 1.9e6; w <= 2.1e6; w += 100.0) {
        const double err = std::abs(airy_oracle(800e6, 4e6, w) - 0.5);
        if (err < best_err) {
            best_err = err;
            best = w;
        }
    }
    CHECK(best == doctest::Approx(2e6).epsilon(1e-2));
    CHECK(cavity_transmission(kSignal, 2e6) == doctest::Approx(0.5).epsilon(2e-3));
}

TEST_CASE("cavity transmission: FSR periodicity and bounds over random detunings")
{
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> uni(-10e9, 10e9);
    for (int i = 0; i < 300; ++i) {
        const double w = uni(eng);
        const double t = cavity_transmission(kSignal, w);
        CHECK(t >= 0.0);
        CHECK(t <= 1.0 + 1e-12);
        const double t_shift = cavity_transmission(kSignal, w + 17.0 * kSignal.fsr_hz);
        CHECK(t_shift == doctest::Approx(t).epsilon(1e-9));
    }
}

TEST_CASE("cavity transmission rejects fwhm >= fsr")
{
    CavityParams bad = kSignal;
    bad.fwhm_hz = 900e6;
    CHECK_THROWS_AS(cavity_transmission(bad, 0.0), std::invalid_argument);
}

TEST_CASE("mirror amplitude factor solves pi sqrt(r)/(1-r) = finesse")
{
    // bisection oracle
    double lo = 0.5;
    double hi = 1.0 - 1e-12;
    auto f = [](double r) { return std::numbers::pi * std::sqrt(r) / (1.0 - r) - 200.0; };
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    const double r = mirror_amplitude_factor(200.0);
    CHECK(r == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
    CHECK(r == doctest::Approx(0.9844).epsilon(1e-4));
    // consistency with the mirror pair R=97% output, R>=99.8% input
    CHECK(std::abs(r - std::sqrt(0.97 * 0.998)) < 7e-4);
}

TEST_CASE("phase-matching envelope: unity at center, half at +-fwhm/2, small far out")
{
    CHECK(phase_matching_envelope(kEnvelope, 0.0) == doctest::Approx(1.0));
    CHECK(phase_matching_envelope(kEnvelope, 60e9) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(phase_matching_envelope(kEnvelope, -60e9) == doctest::Approx(0.5).epsilon(1e-6));
    const double far = phase_matching_envelope(kEnvelope, 600e9);
    CHECK(far < 0.02);
    CHECK(far == doctest::Approx(0.0049147).epsilon(1e-3));

    const PhaseMatchEnvelope gauss{120e9, EnvelopeShape::gaussian};
    CHECK(phase_matching_envelope(gauss, 0.0) == doctest::Approx(1.0));
    CHECK(phase_matching_envelope(gauss, 60e9) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("etalon transmission: resonances and neighbor-mode suppression")
{
    CHECK(etalon_transmission(kEtalon, 0.0) == doctest::Approx(1.0));
    CHECK(etalon_transmission(kEtalon, 8.4e9) == doctest::Approx(1.0).epsilon(1e-9));
    // direct Airy oracle with finesse 8400/120 = 70
    const double oracle = airy_oracle(8.4e9, 120e6, 800e6);
    CHECK(etalon_transmission(kEtalon, 800e6) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(oracle == doctest::Approx(0.0057625).epsilon(1e-4));
    CHECK(oracle < 0.01);
}

TEST_CASE("mode pairs: degenerate FSRs give zero mismatch everywhere")
{
    const auto pairs = enumerate_mode_pairs(kSignal, {800e6, 5e6, 1.0, 0.0}, kEnvelope, 10e9);
    REQUIRE(pairs.size() == 25);
    for (const auto& p : pairs) {
        CHECK(p.idler_mismatch_hz == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(p.joint_weight ==
              doctest::Approx(phase_matching_envelope(kEnvelope, p.signal_detuning_hz)));
    }
}

TEST_CASE("mode pairs: Vernier mismatch and Lorentzian suppression at m = 1")
{
    const auto pairs = enumerate_mode_pairs(kSignal, kIdler, kEnvelope, 1e9);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].index == -1);
    CHECK(pairs[1].index == 0);
    CHECK(pairs[2].index == 1);
    CHECK(pairs[1].joint_weight == doctest::Approx(1.0));

    const ModePair& m1 = pairs[2];
    CHECK(std::abs(m1.idler_mismatch_hz) == doctest::Approx(2e6));
    // hand-evaluable Lorentzian oracle: 1/(1+(2*2/5)^2)
    const double lorentz = 1.0 / (1.0 + std::pow(2.0 * 2e6 / 5e6, 2));
    CHECK(lorentz == doctest::Approx(0.6097561).epsilon(1e-6));
    CHECK(m1.joint_weight ==
          doctest::Approx(lorentz * phase_matching_envelope(kEnvelope, 800e6)).epsilon(1e-9));
}

TEST_CASE("mode pairs: next Vernier cluster sits near 320 GHz and is cut at 120 GHz")
{
    // brute-force mismatch scan over m
    int best_m = 0;
    double best = 1e18;
    for (int m = 5; m <= 500; ++m) {
        const double mis = std::abs(std::remainder(m * (800e6 - 802e6), 802e6));
        if (mis < best) {
            best = mis;
            best_m = m;
        }
    }
    CHECK(best_m == 401);
    CHECK(best_m * 800e6 == doctest::Approx(320.8e9));

    const auto pairs = enumerate_mode_pairs(kSignal, kIdler, kEnvelope, 120e9);
    CHECK(pairs.size() == 301);
    for (const auto& p : pairs)
        CHECK(std::abs(p.signal_detuning_hz) <= 120e9);
}

TEST_CASE("mode pairs: swapped arguments mirror the mismatch")
{
    std::mt19937_64 eng(202);
    std::uniform_real_distribution<double> fsr(700e6, 900e6);
    for (int rep = 0; rep < 100; ++rep) {
        CavityParams a{fsr(eng), 4e6, 1.0, 0.0};
        CavityParams b{fsr(eng), 5e6, 1.0, 0.0};
        const auto ab = enumerate_mode_pairs(a, b, kEnvelope, 20e9);
        const auto ba = enumerate_mode_pairs(b, a, kEnvelope, 20e9);
        const int mb = ba.back().index;
        const double half = 0.5 * std::min(a.fsr_hz, b.fsr_hz);
        for (const auto& p : ab) {
            CHECK(p.idler_mismatch_hz > -0.5 * b.fsr_hz - 1e-3);
            CHECK(p.idler_mismatch_hz <= 0.5 * b.fsr_hz + 1e-3);
            if (std::abs(p.index) > mb)
                continue;
            // the mirror identity is exact while neither direction wraps
            if (std::abs(p.index * (a.fsr_hz - b.fsr_hz)) >= half)
                continue;
            const ModePair& q = ba[static_cast<std::size_t>(p.index + mb)];
            REQUIRE(q.index == p.index);
            CHECK(p.idler_mismatch_hz ==
                  doctest::Approx(-q.idler_mismatch_hz)
                      .epsilon(1e-6)
                      .scale(std::abs(p.idler_mismatch_hz) + 1.0));
        }
    }
}

TEST_CASE("mode pairs: hard cap on the enumeration span")
{
    CHECK_THROWS_AS(enumerate_mode_pairs(kSignal, kIdler, kEnvelope, 250e9),
                    std::invalid_argument);
    CHECK_NOTHROW(enumerate_mode_pairs(kSignal, kIdler, kEnvelope, 250e9, 300e9));
}

TEST_CASE("build_spectrum: single central pair")
{
    const std::vector<ModePair> pairs = {{0, 0.0, 0.0, 1.0}};
    const auto spec = build_spectrum(pairs, kSignal, kIdler);
    REQUIRE(spec.lines.size() == 1);
    CHECK(spec.lines[0].center_detuning_hz == 0.0);
    CHECK(spec.lines[0].amplitude_weight == doctest::Approx(1.0));
    CHECK(spec.lines[0].signal_fwhm_hz == doctest::Approx(4e6));
    CHECK(spec.lines[0].idler_fwhm_hz == doctest::Approx(5e6));
    // closed-form integral (w_s + w_i) / (2 pi w_s w_i)
    CHECK(spec.total_norm == doctest::Approx(9e6 / (2.0 * std::numbers::pi * 20e12)));
}

TEST_CASE("build_spectrum: etalon keeps only the central line strong")
{
    const auto pairs = enumerate_mode_pairs(kSignal, kIdler, kEnvelope, 120e9);
    REQUIRE(pairs.size() == 301);
    const auto spec = build_spectrum(pairs, kSignal, kIdler, kEtalon);

    int strong = 0;
    for (const auto& l : spec.lines) {
        if (l.amplitude_weight > 0.5) {
            ++strong;
            CHECK(l.center_detuning_hz == doctest::Approx(0.0));
        }
    }
    CHECK(strong == 1);

    // line-by-line application of the independent Airy oracle
    const auto unfiltered = build_spectrum(pairs, kSignal, kIdler);
    for (const auto& l : spec.lines) {
        for (const auto& u : unfiltered.lines) {
            if (u.center_detuning_hz == l.center_detuning_hz) {
                const double eta = airy_oracle(8.4e9, 120e6, -l.center_detuning_hz);
                CHECK(l.amplitude_weight ==
                      doctest::Approx(u.amplitude_weight * eta).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("build_spectrum: weights never exceed the envelope")
{
    const auto pairs = enumerate_mode_pairs(kSignal, kIdler, kEnvelope, 60e9);
    const auto spec = build_spectrum(pairs, kSignal, kIdler);
    for (const auto& l : spec.lines)
        CHECK(l.amplitude_weight <=
              phase_matching_envelope(kEnvelope, l.center_detuning_hz) + 1e-12);
}

TEST_CASE("build_spectrum: norm ratio equals the summed etalon suppression")
{
    const auto pairs = enumerate_mode_pairs(kSignal, kIdler, kEnvelope, 12e9);
    const auto plain = build_spectrum(pairs, kSignal, kIdler);
    const auto filtered = build_spectrum(pairs, kSignal, kIdler, kEtalon);

    // summation oracle over the unpruned pair list
    double num = 0.0;
    double den = 0.0;
    for (const auto& p : pairs) {
        const SpectralLine l{p.signal_detuning_hz, 4e6, 5e6, p.joint_weight};
        const double integral = line_density_integral(l);
        const double eta = airy_oracle(8.4e9, 120e6, -p.signal_detuning_hz);
        den += p.joint_weight * p.joint_weight * integral;
        num += std::pow(p.joint_weight * eta, 2) * integral;
    }
    CHECK(filtered.total_norm / plain.total_norm == doctest::Approx(num / den).epsilon(1e-6));
}

TEST_CASE("build_spectrum: prune-threshold stability of the norm")
{
    const auto pairs = enumerate_mode_pairs(kSignal, kIdler, kEnvelope, 120e9);
    const auto loose = build_spectrum(pairs, kSignal, kIdler, std::nullopt, 1e-6);
    const auto tight = build_spectrum(pairs, kSignal, kIdler, std::nullopt, 1e-8);
    CHECK(std::abs(tight.total_norm - loose.total_norm) / tight.total_norm < 1e-4);
}

TEST_CASE("build_spectrum error paths")
{
    CHECK_THROWS_AS(build_spectrum({}, kSignal, kIdler), std::invalid_argument);
    const std::vector<ModePair> dead = {{0, 0.0, 0.0, 0.0}, {1, 800e6, 0.0, 0.0}};
    CHECK_THROWS_AS(build_spectrum(dead, kSignal, kIdler), std::runtime_error);
}
