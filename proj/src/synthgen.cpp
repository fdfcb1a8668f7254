#include "lcc/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "lcc/errors.hpp"
#include "lcc/random.hpp"

namespace lcc {

namespace {

constexpr double kSurveyStart = 59580.0;
constexpr int kMinMeasurements = 30;
constexpr int kMaxMeasurements = 300;
constexpr int kPeriodGridSamples = 20;
constexpr int kPeriodGridCycles = 8;

const std::array<std::vector<int>, kClassCount> kOriginalIdsByClass = {{
    {42, 52, 62, 67, 90},
    {6, 64, 65},
    {15, 95},
    {16, 53, 92},
    {88},
}};

class ObjectSampler {
public:
    explicit ObjectSampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

private:
    Rng rng_;
};

double softplus(double y) { return y > 30.0 ? y : std::log1p(std::exp(y)); }

/// Clean (noise-free) signal of one object, relative to its baseline.
struct Archetype {
    int cls = 0;
    double amplitude = 0.0;
    double t0 = 0.0;  // event centre, days from the first sample
    double width = 0.0;
    double rise = 0.0;
    double fall = 0.0;
    double period = 0.0;
    double phase = 0.0;

    double operator()(double t) const {
        const double x = t - t0;
        switch (cls) {
            case 0: return amplitude * std::exp(-x / fall - softplus(-x / rise));
            case 1:
            case 2: return amplitude * std::exp(-0.5 * (x / width) * (x / width));
            case 3: return amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
            default: return 0.0;  // random walk is stateful; see generate_object
        }
    }
};

void check_periodicity(const Archetype& a) {
    std::vector<double> grid(kPeriodGridSamples * kPeriodGridCycles);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = a(a.period * static_cast<double>(i) / kPeriodGridSamples);
    }
    const int lag = dominant_autocorrelation_lag(grid);
    if (std::abs(lag - kPeriodGridSamples) > 1) {
        throw std::logic_error("synthetic periodic signal lost its period");
    }
}

LightCurve generate_object(int cls, std::int64_t object_id, std::uint64_t seed) {
    ObjectSampler s(seed);
    LightCurve lc;
    lc.object_id = object_id;
    const auto& ids = kOriginalIdsByClass[static_cast<std::size_t>(cls)];
    lc.original_class = ids[static_cast<std::size_t>(s.integer(0, static_cast<int>(ids.size()) - 1))];
    lc.generalized_class = cls;

    const double start = kSurveyStart + s.uniform(0.0, 365.0);
    const double span = s.uniform(300.0, 900.0);
    const int n = s.integer(kMinMeasurements, kMaxMeasurements);

    Archetype a;
    a.cls = cls;
    a.amplitude = s.log_uniform(60.0, 400.0);
    a.t0 = s.uniform(0.15, 0.7) * span;
    switch (cls) {
        case 0:
            a.rise = s.uniform(1.5, 8.0);
            a.fall = s.uniform(8.0, 30.0);
            break;
        case 1: a.width = s.uniform(0.7, 2.5); break;
        case 2: a.width = s.uniform(50.0, 110.0); break;
        case 3:
            a.period = s.log_uniform(0.2, 100.0);
            a.phase = s.uniform(0.0, 2.0 * std::numbers::pi);
            a.amplitude *= s.uniform(0.3, 1.0);
            check_periodicity(a);
            break;
        default: break;
    }

    // Background cadence across the whole span plus one dense cluster, which
    // transients place near their peak.
    const bool transient = cls <= 2;
    const double cluster_centre = transient ? a.t0 + s.uniform(-3.0, 10.0) : s.uniform(0.0, span);
    const double cluster_half_width = s.uniform(5.0, 20.0);
    const int clustered = static_cast<int>(std::round(n * s.uniform(0.2, 0.4)));
    std::vector<double> times(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        times[static_cast<std::size_t>(i)] =
            i < clustered ? std::clamp(cluster_centre + s.uniform(-cluster_half_width, cluster_half_width), 0.0, span)
                          : s.uniform(0.0, span);
    }
    std::sort(times.begin(), times.end());

    const double baseline = s.uniform(-30.0, 30.0);
    const double noise = s.log_uniform(1.0, 6.0);
    std::array<double, kPassbandCount> band_gain{};
    for (auto& g : band_gain) g = s.uniform(0.85, 1.1);

    const double walk_step = a.amplitude * s.uniform(0.02, 0.06);
    double walk = s.uniform(-0.5, 0.5) * a.amplitude;
    double previous_t = times.front();
    lc.measurements.reserve(times.size());
    for (double t : times) {
        double signal = a(t);
        if (cls == 4) {
            walk += walk_step * std::sqrt(t - previous_t) * s.normal();
            walk = std::clamp(walk, -a.amplitude, a.amplitude);
            previous_t = t;
            signal = walk;
        }
        Measurement m;
        m.time = start + t;
        m.passband = s.integer(0, kPassbandCount - 1);
        m.flux_err = noise * s.uniform(0.8, 1.25);
        m.flux = baseline + band_gain[static_cast<std::size_t>(m.passband)] * signal + m.flux_err * s.normal();
        m.detected = std::abs(m.flux - baseline) > 3.0 * m.flux_err;
        lc.measurements.push_back(m);
    }
    return lc;
}

}  // namespace

int dominant_autocorrelation_lag(std::span<const double> series) {
    const auto n = series.size();
    if (n < 4) return 0;
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    auto acf = [&](std::size_t lag) {
        double sum = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) sum += (series[i] - mean) * (series[i + lag] - mean);
        return sum / static_cast<double>(n);
    };
    std::size_t lag = 1;
    while (lag < n / 2 && acf(lag) > 0.0) ++lag;
    if (lag >= n / 2) return 0;
    std::size_t best = lag;
    double best_value = acf(lag);
    for (; lag < n / 2; ++lag) {
        const double v = acf(lag);
        if (v > best_value) {
            best_value = v;
            best = lag;
        }
    }
    return static_cast<int>(best);
}

Dataset generate_dataset(int n_per_class, std::uint64_t seed) {
    if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
    std::vector<LightCurve> curves;
    curves.reserve(static_cast<std::size_t>(n_per_class) * kClassCount);
    for (int i = 0; i < n_per_class * kClassCount; ++i) {
        const int cls = i % kClassCount;
        // Redraw (with a fresh derived seed) until the object has a detection.
        for (std::uint64_t attempt = 0;; ++attempt) {
            const auto object_seed = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(i)), attempt);
            LightCurve lc = generate_object(cls, i + 1, object_seed);
            const bool any_detection = std::any_of(lc.measurements.begin(), lc.measurements.end(),
                                                   [](const Measurement& m) { return m.detected; });
            if (any_detection) {
                curves.push_back(std::move(lc));
                break;
            }
        }
    }
    return Dataset::from_curves(std::move(curves));
}

}  // namespace lcc
