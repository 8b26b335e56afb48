#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mollow/bloch.hpp"
#include "mollow/correlations.hpp"
#include "mollow/quantum_jump.hpp"
#include "test_support.hpp"

using namespace mollow;
using namespace mollow::test;

namespace {

/// Closed-form g2 averaged over a histogram bin.
double bin_average_g2(const EmitterParams& e, const DriveParams& d, double center, double width)
{
    constexpr int n = 41;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = center - 0.5 * width + width * (i + 0.5) / n;
        sum += g2_value(e.gamma1(), e.gamma2(), d.rabi, t);
    }
    return sum / n;
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("mollow_test_" + name);
}

} // namespace

TEST_CASE("undriven emitter emits nothing")
{
    const auto s = simulate_stream(device_emitter(), DriveParams::from_ghz(0.0), 1000.0, 1.0, 1);
    CHECK(s.tags.empty());
    CHECK(s.total_duration == 1000.0);
    CHECK_THROWS_AS(correlate(s, {}), EmptyStream);
}

TEST_CASE("streams are deterministic in the seed")
{
    const auto drive = DriveParams::from_ghz(4.0);
    const auto a = simulate_stream(device_emitter(), drive, 200.0, 0.5, 42);
    const auto b = simulate_stream(device_emitter(), drive, 200.0, 0.5, 42);
    const auto c = simulate_stream(device_emitter(), drive, 200.0, 0.5, 43);
    CHECK(a.tags == b.tags);
    CHECK(a.tags != c.tags);
    TrajectoryOptions opt;
    opt.segments = 4;
    const auto s1 = simulate_stream(device_emitter(), drive, 200.0, 1.0, 7, opt);
    const auto s2 = simulate_stream(device_emitter(), drive, 200.0, 1.0, 7, opt);
    CHECK(s1.tags == s2.tags);
    CHECK(std::is_sorted(s1.tags.begin(), s1.tags.end()));
    CHECK(s1.tags.back() <= 200.0);
}

TEST_CASE("invalid simulation inputs")
{
    const auto drive = DriveParams::from_ghz(4.0);
    CHECK_THROWS_AS(simulate_stream(device_emitter(), drive, 0.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_stream(device_emitter(), drive, 10.0, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_stream(device_emitter(), drive, 10.0, 1.5, 1), std::invalid_argument);
    CorrelogramConfig bad;
    bad.max_tau = 5.0 * bad.bin_width;
    const auto p = poisson_stream(1.0, 100.0, 1);
    CHECK_THROWS_AS(correlate(p, bad), std::invalid_argument);
}

TEST_CASE("emission rate matches the steady-state population")
{
    for (double rabi_ghz : {1.0, 4.0}) {
        for (double detuning_ghz : {0.0, 3.0}) {
            const auto e = device_emitter();
            const auto d = DriveParams::from_ghz(rabi_ghz, detuning_ghz);
            const double duration = 20000.0;
            const double eff = 0.5;
            const auto s = simulate_stream(e, d, duration, eff, 99);
            const double expected = steady_state(e, d).excited_population * e.gamma1() * eff * duration;
            const double n = static_cast<double>(s.tags.size());
            CAPTURE(rabi_ghz);
            CAPTURE(detuning_ghz);
            CHECK(std::abs(n - expected) < 3.0 * std::sqrt(expected));
        }
    }
}

TEST_CASE("simulated g2 follows the closed form")
{
    const auto e = device_emitter();
    const auto d = DriveParams::from_ghz(4.0);
    const auto s = simulate_stream(e, d, 200000.0, 1.0, 2024);
    CorrelogramConfig cfg;
    const auto hist = correlate_counts(s, cfg);
    const auto g2 = normalize(hist, Normalization::Baseline);
    const double baseline = static_cast<double>(hist.n_a) * static_cast<double>(hist.n_b)
                            * cfg.bin_width / hist.duration;
    double worst = 0.0;
    for (std::size_t k = 0; k < g2.taus.size(); ++k) {
        const double expect = bin_average_g2(e, d, g2.taus[k], cfg.bin_width);
        const double sigma = std::sqrt(std::max(expect, 1e-3) * baseline) / baseline;
        worst = std::max(worst, std::abs(g2.values[k] - expect) / sigma);
    }
    CHECK(worst < 5.0);
    CHECK(g2.values[static_cast<std::size_t>(hist.half_bins)] < 0.1);
}

TEST_CASE("Poisson streams are uncorrelated")
{
    CorrelogramConfig cfg;
    cfg.bin_width = 1.0;
    cfg.max_tau = 50.0;
    const auto a = poisson_stream(0.05, 2e6, 5);
    const auto b = poisson_stream(0.05, 2e6, 6);
    for (const auto& trace : {correlate(a, cfg), correlate(a, b, cfg)}) {
        // baseline ~ 5000 pairs per bin: 1.4% shot noise
        double mean = 0.0;
        for (double v : trace.values) {
            CHECK(std::abs(v - 1.0) < 0.075);
            mean += v;
        }
        CHECK(mean / static_cast<double>(trace.values.size()) == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("segment histograms merge exactly")
{
    const auto d = DriveParams::from_ghz(4.0);
    const auto a = simulate_stream(device_emitter(), d, 300.0, 1.0, 11);
    const auto b = simulate_stream(device_emitter(), d, 300.0, 1.0, 12);
    CorrelogramConfig cfg;
    cfg.max_tau = 2.0;
    cfg.threads = 3;
    auto merged = correlate_counts(a, cfg);
    merged.merge(correlate_counts(b, cfg)).merge(boundary_counts(a, b, cfg));
    const auto whole = correlate_counts(concatenate(a, b), cfg);
    CHECK(merged.counts == whole.counts);
    CHECK(merged.n_a == whole.n_a);
    CHECK(merged.duration == doctest::Approx(whole.duration));
    cfg.threads = 1;
    CHECK(correlate_counts(concatenate(a, b), cfg).counts == whole.counts);
}

TEST_CASE("auto-correlation is symmetric and excludes self pairs")
{
    const PhotonStream s{{0.0, 0.004, 1.0}, 2.0, 0};
    CorrelogramConfig cfg;
    cfg.bin_width = 0.01;
    cfg.max_tau = 0.1;
    const auto h = correlate_counts(s, cfg);
    const auto zero = static_cast<std::size_t>(h.half_bins);
    CHECK(h.counts[zero] == 2);  // +-4 ps, both ordered pairs
    std::int64_t total = 0;
    for (auto c : h.counts)
        total += c;
    CHECK(total == 2);
}

TEST_CASE("blinking gate")
{
    const auto p = poisson_stream(0.001, 2e9, 77);
    SUBCASE("always bright is the identity")
    {
        const BlinkingModel on{0.0, 1.0, 0.0};
        CHECK(blinking_modulated_stream(p, on, 3).tags == p.tags);
    }
    SUBCASE("duty cycle scales the rate and bunches short delays")
    {
        const BlinkingModel model{0.34, 1.0, 0.0};
        REQUIRE(model.duty_bright() == doctest::Approx(0.746).epsilon(1e-3));
        const auto g = blinking_modulated_stream(p, model, 3);
        const double kept = static_cast<double>(g.tags.size()) / static_cast<double>(p.tags.size());
        CHECK(kept == doctest::Approx(0.746).epsilon(0.05));
        CorrelogramConfig cfg;
        cfg.bin_width = 100.0;
        cfg.max_tau = 2000.0;
        const auto trace = correlate(g, cfg);
        double mean = 0.0;
        for (double v : trace.values)
            mean += v;
        mean /= static_cast<double>(trace.values.size());
        CHECK(mean == doctest::Approx(1.0 / kept).epsilon(0.02));
        CHECK(mean == doctest::Approx(1.34).epsilon(0.06));
    }
}

TEST_CASE("tag files round-trip")
{
    const auto s = simulate_stream(device_emitter(), DriveParams::from_ghz(4.0), 100.0, 1.0, 5);
    REQUIRE_FALSE(s.tags.empty());
    for (const char* name : {"tags.bin", "tags.csv"}) {
        const auto path = temp_file(name);
        if (std::string(name).ends_with(".csv"))
            write_tags_csv(path, s);
        else
            write_tags_binary(path, s);
        const auto back = read_tags(path);
        REQUIRE(back.tags.size() == s.tags.size());
        CHECK(back.total_duration == doctest::Approx(s.total_duration));
        CHECK(max_abs_diff(back.tags, s.tags) <= 0.0005 + 1e-12);
        std::filesystem::remove(path);
    }
}

TEST_CASE("malformed tag files are rejected with a line number")
{
    const auto path = temp_file("bad.csv");
    {
        std::ofstream out(path);
        out << "# duration_ps=1000\ntag_ps\n10\nabc\n";
    }
    try {
        read_tags(path);
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":4") != std::string::npos);
    }
    {
        std::ofstream out(path);
        out << "30\n10\n";
    }
    CHECK_THROWS_AS(read_tags(path), std::runtime_error);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_tags(temp_file("missing.bin")), std::runtime_error);
}
