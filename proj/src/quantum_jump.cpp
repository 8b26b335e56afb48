#include "mollow/quantum_jump.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "mollow/errors.hpp"
#include "mollow/rng.hpp"
#include "mollow/units.hpp"

namespace mollow {

namespace {

using Complex = std::complex<double>;
using Spinor = std::array<Complex, 2>; // (excited, ground)

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm2(const Spinor& s) { return std::norm(s[0]) + std::norm(s[1]); }

// Conditional (no-photon) evolution under
// H_eff = [[-D/2 - i G1/2, W/2], [W/2, D/2]] = -i G1/4 + K with K^2 = lambda^2.
class NoJumpPropagator {
public:
    NoJumpPropagator(double gamma1, double rabi, double detuning)
        : gamma1_(gamma1), half_rabi_(0.5 * rabi), a_(-0.5 * detuning, -0.25 * gamma1)
    {
        lambda_ = std::sqrt(a_ * a_ + half_rabi_ * half_rabi_);
    }

    Spinor operator()(const Spinor& psi, double t) const
    {
        const Spinor k{a_ * psi[0] + half_rabi_ * psi[1], half_rabi_ * psi[0] - a_ * psi[1]};
        const Complex lt = lambda_ * t;
        const double damp = -0.25 * gamma1_ * t;
        if (std::abs(lt) < 1.0) {
            const Complex c = std::cos(lt);
            const Complex sinc = std::abs(lt) < 1e-4 ? t * (1.0 - lt * lt / 6.0) : std::sin(lt) / lambda_;
            const Complex mi_sinc = Complex(0.0, -1.0) * sinc;
            const double e = std::exp(damp);
            return {e * (c * psi[0] + mi_sinc * k[0]), e * (c * psi[1] + mi_sinc * k[1])};
        }
        // eigen-decomposed form; both exponents have non-positive real part
        const Complex i_lt = Complex(0.0, 1.0) * lt;
        const Complex ep = 0.5 * std::exp(damp - i_lt);
        const Complex em = 0.5 * std::exp(damp + i_lt);
        Spinor out;
        for (int n = 0; n < 2; ++n) {
            const Complex kl = k[n] / lambda_;
            out[n] = ep * (psi[n] + kl) + em * (psi[n] - kl);
        }
        return out;
    }

    /// d|psi|^2/dt = -G1 |psi_e|^2
    double norm_rate(const Spinor& psi) const { return -gamma1_ * std::norm(psi[0]); }

private:
    double gamma1_;
    double half_rabi_;
    Complex a_;
    Complex lambda_;
};

// Time t with |U(t) psi0|^2 = r (r < |psi0|^2); +inf when the norm never
// falls that far. Safeguarded Newton on a doubling bracket.
double waiting_time(const NoJumpPropagator& U, const Spinor& psi0, double r, double step)
{
    double lo = 0.0, hi = step;
    Spinor psi_hi = U(psi0, hi);
    while (norm2(psi_hi) > r) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e15)
            return kInf;
        psi_hi = U(psi0, hi);
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const Spinor psi = U(psi0, t);
        const double f = norm2(psi) - r;
        if (f > 0.0)
            lo = t;
        else
            hi = t;
        if (std::abs(f) <= 1e-15 * r || hi - lo <= 1e-15 * hi)
            break;
        const double d = U.norm_rate(psi);
        double next = d < 0.0 ? t - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        t = next;
    }
    return t;
}

// Survival table from the ground state: after every photon the emitter is
// in |g>, so the waiting time is drawn by inverting this table and polishing
// with Newton steps on the exact propagator.
class GroundWaitingTime {
public:
    GroundWaitingTime(const NoJumpPropagator& U, double t1, double rabi, double detuning)
        : U_(U)
    {
        const double generalized = std::hypot(rabi, detuning);
        step_ = std::min(t1, 1.0 / std::max(generalized, 1e-12)) / 64.0;
        constexpr std::size_t kMaxNodes = 1u << 18;
        const Spinor ground{Complex(0.0), Complex(1.0)};
        survival_.push_back(1.0);
        rate_.push_back(0.0);
        end_state_ = ground;
        for (std::size_t k = 1; k < kMaxNodes; ++k) {
            const Spinor psi = U_(ground, step_ * static_cast<double>(k));
            survival_.push_back(norm2(psi));
            rate_.push_back(U_.norm_rate(psi));
            end_state_ = psi;
            if (survival_.back() < 1e-14)
                break;
        }
    }

    double operator()(double r) const
    {
        if (r < survival_.back()) {
            const double t_end = step_ * static_cast<double>(survival_.size() - 1);
            return t_end + waiting_time(U_, end_state_, r, 8.0 * step_);
        }
        // survival_ is non-increasing: first node with S <= r
        const auto it = std::partition_point(survival_.begin(), survival_.end(),
                                             [r](double s) { return s > r; });
        const auto k1 = static_cast<std::size_t>(it - survival_.begin());
        const std::size_t k0 = k1 - 1;
        double lo = step_ * static_cast<double>(k0), hi = step_ * static_cast<double>(k1);

        // cubic Hermite inverse guess
        double t = lo;
        {
            const double s0 = survival_[k0], s1 = survival_[k1];
            const double d0 = rate_[k0] * step_, d1 = rate_[k1] * step_;
            double x = (s0 - s1) > 0.0 ? (s0 - r) / (s0 - s1) : 0.5;
            for (int n = 0; n < 3; ++n) {
                const double x2 = x * x, x3 = x2 * x;
                const double h = (2 * x3 - 3 * x2 + 1) * s0 + (x3 - 2 * x2 + x) * d0
                    + (-2 * x3 + 3 * x2) * s1 + (x3 - x2) * d1;
                const double dh = (6 * x2 - 6 * x) * s0 + (3 * x2 - 4 * x + 1) * d0
                    + (-6 * x2 + 6 * x) * s1 + (3 * x2 - 2 * x) * d1;
                if (dh >= 0.0)
                    break;
                x = std::clamp(x - (h - r) / dh, 0.0, 1.0);
            }
            t = lo + x * step_;
        }
        const Spinor ground{Complex(0.0), Complex(1.0)};
        for (int n = 0; n < 50; ++n) {
            const Spinor psi = U_(ground, t);
            const double f = norm2(psi) - r;
            if (f > 0.0)
                lo = t;
            else
                hi = t;
            if (std::abs(f) <= 1e-14 * r || hi - lo <= 1e-15 * hi)
                break;
            const double d = U_.norm_rate(psi);
            double next = d < 0.0 ? t - f / d : 0.5 * (lo + hi);
            if (!(next >= lo && next <= hi))
                next = 0.5 * (lo + hi);
            t = next;
        }
        return t;
    }

    double step() const { return step_; }

private:
    const NoJumpPropagator& U_;
    double step_ = 0.0;
    std::vector<double> survival_;
    std::vector<double> rate_;
    Spinor end_state_;
};

void simulate_segment(const NoJumpPropagator& U, const GroundWaitingTime& ground_wait,
                      double dephasing_rate, double efficiency, double start, double end,
                      double burn_in, CounterRng rng, std::vector<double>& tags)
{
    const Spinor ground{Complex(0.0), Complex(1.0)};
    Spinor psi = ground;
    bool in_ground = true;
    double t = start - burn_in;
    while (true) {
        const double r = rng.uniform();
        const double t_photon = in_ground ? ground_wait(r)
                                          : waiting_time(U, psi, r, 8.0 * ground_wait.step());
        const double t_phase = dephasing_rate > 0.0 ? rng.exponential(dephasing_rate) : kInf;
        if (t_photon == kInf && t_phase == kInf)
            break;
        if (t_photon <= t_phase) {
            t += t_photon;
            if (t >= end)
                break;
            const bool detected = efficiency >= 1.0 || rng.uniform() < efficiency;
            if (detected && t >= start)
                tags.push_back(t);
            psi = ground;
            in_ground = true;
        } else {
            t += t_phase;
            if (t >= end)
                break;
            psi = U(psi, t_phase);
            psi[0] = -psi[0]; // sigma_z
            const double n = std::sqrt(norm2(psi));
            psi[0] /= n;
            psi[1] /= n;
            in_ground = false;
        }
    }
}

unsigned worker_count(unsigned requested, std::size_t work)
{
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (work < 100000)
        n = 1;
    return n;
}

int half_bins_of(const CorrelogramConfig& cfg)
{
    return static_cast<int>(std::lround(cfg.max_tau / cfg.bin_width));
}

Correlogram empty_histogram(const CorrelogramConfig& cfg)
{
    Correlogram h;
    h.bin_width = cfg.bin_width;
    h.half_bins = half_bins_of(cfg);
    h.counts.assign(static_cast<std::size_t>(2 * h.half_bins + 1), 0);
    return h;
}

// Ordered auto pairs for start tags in [i0, i1); partners may lie anywhere after.
void auto_pairs(const std::vector<double>& tags, std::size_t i0, std::size_t i1, double w, int K,
                std::vector<std::int64_t>& counts)
{
    const double inv_w = 1.0 / w;
    const double reach = (K + 0.5) * w;
    const std::size_t n = tags.size();
    std::int64_t* c = counts.data() + K;
    for (std::size_t i = i0; i < i1; ++i) {
        const double ti = tags[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = tags[j] - ti;
            if (d >= reach)
                break;
            const int k = static_cast<int>(d * inv_w + 0.5);
            if (k <= K) {
                ++c[k];
                ++c[-k];
            }
        }
    }
}

void cross_pairs(const std::vector<double>& a, const std::vector<double>& b, std::size_t i0,
                 std::size_t i1, double shift_b, double w, int K, std::vector<std::int64_t>& counts)
{
    const double inv_w = 1.0 / w;
    const double reach = (K + 0.5) * w;
    std::int64_t* c = counts.data() + K;
    if (i0 >= i1)
        return;
    auto lo = static_cast<std::size_t>(
        std::lower_bound(b.begin(), b.end(), a[i0] - reach - shift_b) - b.begin());
    for (std::size_t i = i0; i < i1; ++i) {
        const double ti = a[i];
        while (lo < b.size() && b[lo] + shift_b - ti < -reach)
            ++lo;
        for (std::size_t j = lo; j < b.size(); ++j) {
            const double d = b[j] + shift_b - ti;
            if (d >= reach)
                break;
            const int k = static_cast<int>(std::floor(d * inv_w + 0.5));
            if (k >= -K && k <= K)
                ++c[k];
        }
    }
}

template <class Work>
void run_chunked(std::size_t n, unsigned threads, std::vector<std::int64_t>& counts, Work work)
{
    if (threads <= 1) {
        work(0, n, counts);
        return;
    }
    std::vector<std::vector<std::int64_t>> partial(threads, std::vector<std::int64_t>(counts.size(), 0));
    std::vector<std::thread> pool;
    for (unsigned p = 0; p < threads; ++p) {
        const std::size_t i0 = n * p / threads, i1 = n * (p + 1) / threads;
        pool.emplace_back([&, p, i0, i1] { work(i0, i1, partial[p]); });
    }
    for (auto& th : pool)
        th.join();
    for (const auto& part : partial)
        for (std::size_t k = 0; k < counts.size(); ++k)
            counts[k] += part[k];
}

void put_u32(std::ostream& os, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b)
        os.put(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_u64(std::ostream& os, std::uint64_t v)
{
    for (int b = 0; b < 8; ++b)
        os.put(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_le(const unsigned char* p, int bytes)
{
    std::uint64_t v = 0;
    for (int b = bytes - 1; b >= 0; --b)
        v = (v << 8) | p[b];
    return v;
}

std::uint64_t to_ps_tag(double t_ns)
{
    return static_cast<std::uint64_t>(std::llround(t_ns / units::ps));
}

constexpr char kMagic[4] = {'Q', 'J', 'M', 'C'};
constexpr std::uint32_t kVersion = 1;

} // namespace

void validate(const PhotonStream& stream)
{
    if (!(stream.total_duration >= 0.0))
        throw std::invalid_argument("stream duration must be >= 0");
    if (!std::is_sorted(stream.tags.begin(), stream.tags.end()))
        throw std::invalid_argument("stream tags must be sorted ascending");
    if (!stream.tags.empty()
        && (stream.tags.front() < 0.0 || stream.tags.back() > stream.total_duration))
        throw std::invalid_argument("stream tags must lie within [0, duration]");
}

PhotonStream simulate_stream(const EmitterParams& emitter, const DriveParams& drive,
                             double duration, double efficiency, std::uint64_t seed,
                             const TrajectoryOptions& opt)
{
    validate(emitter);
    validate(drive);
    if (!(duration > 0.0))
        throw std::invalid_argument("duration must be > 0");
    if (!(efficiency > 0.0) || efficiency > 1.0)
        throw std::invalid_argument("efficiency must lie in (0, 1]");
    if (opt.segments == 0 || opt.burn_in_t1 < 0.0)
        throw std::invalid_argument("trajectory options: segments >= 1, burn_in >= 0");

    PhotonStream out;
    out.total_duration = duration;
    out.seed = seed;
    if (drive.rabi == 0.0)
        return out;

    const NoJumpPropagator U(emitter.gamma1(), drive.rabi, drive.detuning);
    const GroundWaitingTime ground_wait(U, emitter.t1, drive.rabi, drive.detuning);
    const double dephasing_rate = 0.5 * std::max(0.0, emitter.pure_dephasing());
    const CounterRng root(seed);
    for (unsigned s = 0; s < opt.segments; ++s) {
        const double start = duration * s / opt.segments;
        const double end = duration * (s + 1) / opt.segments;
        simulate_segment(U, ground_wait, dephasing_rate, efficiency, start, end,
                         opt.burn_in_t1 * emitter.t1, root.split(s), out.tags);
    }
    return out;
}

void validate(const CorrelogramConfig& cfg)
{
    if (!(cfg.bin_width > 0.0))
        throw std::invalid_argument("correlogram bin_width must be > 0");
    if (!(cfg.max_tau >= 10.0 * cfg.bin_width * (1.0 - 1e-12)))
        throw std::invalid_argument("correlogram max_tau must be >= 10 * bin_width");
}

std::vector<double> Correlogram::taus() const
{
    std::vector<double> t(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k)
        t[k] = (static_cast<double>(k) - half_bins) * bin_width;
    return t;
}

Correlogram& Correlogram::merge(const Correlogram& other)
{
    if (other.half_bins != half_bins || other.bin_width != bin_width)
        throw std::invalid_argument("cannot merge correlograms with different binning");
    for (std::size_t k = 0; k < counts.size(); ++k)
        counts[k] += other.counts[k];
    n_a += other.n_a;
    n_b += other.n_b;
    duration += other.duration;
    return *this;
}

Correlogram correlate_counts(const PhotonStream& stream, const CorrelogramConfig& cfg)
{
    validate(cfg);
    if (stream.tags.empty())
        throw EmptyStream("cannot correlate an empty stream");
    Correlogram h = empty_histogram(cfg);
    h.n_a = h.n_b = stream.tags.size();
    h.duration = stream.total_duration;
    const auto& tags = stream.tags;
    run_chunked(tags.size(), worker_count(cfg.threads, tags.size()), h.counts,
                [&](std::size_t i0, std::size_t i1, std::vector<std::int64_t>& c) {
                    auto_pairs(tags, i0, i1, h.bin_width, h.half_bins, c);
                });
    return h;
}

Correlogram correlate_counts(const PhotonStream& a, const PhotonStream& b,
                             const CorrelogramConfig& cfg)
{
    validate(cfg);
    if (a.tags.empty() || b.tags.empty())
        throw EmptyStream("cannot correlate an empty stream");
    Correlogram h = empty_histogram(cfg);
    h.n_a = a.tags.size();
    h.n_b = b.tags.size();
    h.duration = std::max(a.total_duration, b.total_duration);
    run_chunked(a.tags.size(), worker_count(cfg.threads, a.tags.size()), h.counts,
                [&](std::size_t i0, std::size_t i1, std::vector<std::int64_t>& c) {
                    cross_pairs(a.tags, b.tags, i0, i1, 0.0, h.bin_width, h.half_bins, c);
                });
    return h;
}

Correlogram boundary_counts(const PhotonStream& earlier, const PhotonStream& later,
                            const CorrelogramConfig& cfg)
{
    validate(cfg);
    Correlogram h = empty_histogram(cfg);
    if (earlier.tags.empty() || later.tags.empty())
        return h;
    const double reach = (h.half_bins + 0.5) * h.bin_width;
    const double junction = earlier.total_duration;
    const auto first = static_cast<std::size_t>(
        std::lower_bound(earlier.tags.begin(), earlier.tags.end(), junction - reach)
        - earlier.tags.begin());
    std::vector<std::int64_t> one_sided(h.counts.size(), 0);
    cross_pairs(earlier.tags, later.tags, first, earlier.tags.size(), junction, h.bin_width,
                h.half_bins, one_sided);
    // each straddling pair appears once at +tau and once at -tau in the auto histogram
    for (int k = -h.half_bins; k <= h.half_bins; ++k) {
        const auto n = one_sided[static_cast<std::size_t>(k + h.half_bins)];
        h.counts[static_cast<std::size_t>(k + h.half_bins)] += n;
        h.counts[static_cast<std::size_t>(-k + h.half_bins)] += n;
    }
    return h;
}

PhotonStream concatenate(const PhotonStream& earlier, const PhotonStream& later)
{
    PhotonStream out = earlier;
    out.tags.reserve(earlier.tags.size() + later.tags.size());
    for (double t : later.tags)
        out.tags.push_back(t + earlier.total_duration);
    out.total_duration = earlier.total_duration + later.total_duration;
    return out;
}

CorrelationTrace normalize(const Correlogram& hist, Normalization normalization)
{
    CorrelationTrace trace;
    trace.taus = hist.taus();
    trace.values.resize(hist.counts.size());
    double scale = 1.0;
    if (normalization == Normalization::Baseline) {
        if (!(hist.duration > 0.0) || hist.n_a == 0 || hist.n_b == 0)
            throw EmptyStream("baseline normalization needs tags and a duration");
        scale = hist.duration
            / (static_cast<double>(hist.n_a) * static_cast<double>(hist.n_b) * hist.bin_width);
    }
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
        trace.values[k] = scale * static_cast<double>(hist.counts[k]);
    return trace;
}

CorrelationTrace correlate(const PhotonStream& stream, const CorrelogramConfig& cfg)
{
    auto t = normalize(correlate_counts(stream, cfg), cfg.normalization);
    t.kind = CorrelationKind::G2;
    return t;
}

CorrelationTrace correlate(const PhotonStream& a, const PhotonStream& b,
                           const CorrelogramConfig& cfg)
{
    auto t = normalize(correlate_counts(a, b, cfg), cfg.normalization);
    t.kind = CorrelationKind::Cross;
    return t;
}

PhotonStream blinking_modulated_stream(const PhotonStream& stream, const BlinkingModel& blinking,
                                       std::uint64_t seed)
{
    validate(stream);
    validate(blinking);
    const double to_off = blinking.rate_on_to_off / units::ms;
    const double to_on = blinking.rate_off_to_on / units::ms;
    CounterRng rng(seed);
    PhotonStream out;
    out.total_duration = stream.total_duration;
    out.seed = stream.seed;
    out.tags.reserve(stream.tags.size());
    bool bright = rng.uniform() < blinking.duty_bright();
    double next_switch = bright ? (to_off > 0.0 ? rng.exponential(to_off) : kInf)
                                : rng.exponential(to_on);
    for (double t : stream.tags) {
        while (next_switch <= t) {
            bright = !bright;
            const double rate = bright ? to_off : to_on;
            next_switch = rate > 0.0 ? next_switch + rng.exponential(rate) : kInf;
        }
        if (bright)
            out.tags.push_back(t);
    }
    return out;
}

PhotonStream poisson_stream(double rate, double duration, std::uint64_t seed)
{
    if (!(rate > 0.0) || !(duration > 0.0))
        throw std::invalid_argument("poisson stream needs rate > 0 and duration > 0");
    CounterRng rng(seed);
    PhotonStream out;
    out.total_duration = duration;
    out.seed = seed;
    out.tags.reserve(static_cast<std::size_t>(rate * duration * 1.01) + 16);
    for (double t = rng.exponential(rate); t < duration; t += rng.exponential(rate))
        out.tags.push_back(t);
    return out;
}

void write_tags_binary(const std::filesystem::path& path, const PhotonStream& stream)
{
    validate(stream);
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u64(os, to_ps_tag(stream.total_duration));
    put_u64(os, stream.tags.size());
    for (double t : stream.tags)
        put_u64(os, to_ps_tag(t));
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

void write_tags_csv(const std::filesystem::path& path, const PhotonStream& stream)
{
    validate(stream);
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << "# photon arrival times, integer picoseconds\n";
    os << "# duration_ps=" << to_ps_tag(stream.total_duration) << "\n";
    os << "# seed=" << stream.seed << "\n";
    os << "tag_ps\n";
    for (double t : stream.tags)
        os << to_ps_tag(t) << '\n';
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

PhotonStream read_tags(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open tag file " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    PhotonStream out;

    if (bytes.size() >= 4 && std::equal(kMagic, kMagic + 4, bytes.begin())) {
        if (bytes.size() < 24)
            throw std::runtime_error(path.string() + ": truncated tag header");
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
        const auto version = static_cast<std::uint32_t>(get_le(p + 4, 4));
        if (version != kVersion)
            throw std::runtime_error(path.string() + ": unsupported tag file version "
                                     + std::to_string(version));
        out.total_duration = static_cast<double>(get_le(p + 8, 8)) * units::ps;
        const std::uint64_t count = get_le(p + 16, 8);
        if (bytes.size() != 24 + 8 * count)
            throw std::runtime_error(path.string() + ": tag count does not match file size");
        out.tags.resize(count);
        for (std::uint64_t i = 0; i < count; ++i)
            out.tags[i] = static_cast<double>(get_le(p + 24 + 8 * i, 8)) * units::ps;
    } else {
        std::optional<double> duration;
        std::size_t line_no = 0, start = 0;
        bool header_seen = false;
        while (start <= bytes.size()) {
            std::size_t stop = bytes.find('\n', start);
            if (stop == std::string::npos)
                stop = bytes.size();
            std::string_view line(bytes.data() + start, stop - start);
            start = stop + 1;
            ++line_no;
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
                line.remove_suffix(1);
            while (!line.empty() && (line.front() == ' ' || line.front() == '\t'))
                line.remove_prefix(1);
            if (line.empty())
                continue;
            if (line.front() == '#') {
                const auto key = line.find("duration_ps=");
                if (key != std::string_view::npos) {
                    std::uint64_t v = 0;
                    const auto s = line.substr(key + 12);
                    if (std::from_chars(s.data(), s.data() + s.size(), v).ec == std::errc())
                        duration = static_cast<double>(v) * units::ps;
                }
                continue;
            }
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
            if (ec != std::errc() || ptr != line.data() + line.size()) {
                if (!header_seen && out.tags.empty()) {
                    header_seen = true;
                    continue;
                }
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no)
                                         + ": expected an integer ps tag, got '"
                                         + std::string(line) + "'");
            }
            out.tags.push_back(static_cast<double>(v) * units::ps);
        }
        out.total_duration = duration ? *duration : (out.tags.empty() ? 0.0 : out.tags.back());
    }
    if (!std::is_sorted(out.tags.begin(), out.tags.end()))
        throw std::runtime_error(path.string() + ": tags are not sorted");
    validate(out);
    return out;
}

} // namespace mollow
