#pragma once

// Evaluation math: accuracy, stratified K-fold, Student-t intervals,
// SNR degradation ratio, low-BER filtering and a small timing helper.

#include <jamsentry/error.hpp>
#include <jamsentry/iq.hpp>
#include <jamsentry/rng.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace jamsentry::eval {

using iq::Label;

struct ConfusionCounts {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }

    void add(Label truth, Label predicted) {
        if (truth == Label::Jam)
            ++(predicted == Label::Jam ? tp : fn);
        else
            ++(predicted == Label::Jam ? fp : tn);
    }
};

inline double accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) throw DataError("accuracy of an empty confusion matrix");
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified K-fold. Indices are shuffled once; then each class in turn is
/// dealt round-robin onto the folds with one counter shared by both classes,
/// so fold sizes differ by at most one and per-class counts by at most one.
inline std::vector<Fold> kfold_split(std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ParameterError("K-fold needs K >= 2");
    if (labels.size() < k)
        throw DataError("K-fold with K=" + std::to_string(k) + " needs at least K items, got " +
                        std::to_string(labels.size()));
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng(seed, 0xf0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::size_t> fold_of(labels.size());
    std::size_t counter = 0;
    for (Label cls : {Label::NoJam, Label::Jam})
        for (std::size_t i : order)
            if (labels[i] == cls) fold_of[i] = counter++ % k;

    std::vector<Fold> folds(k);
    for (std::size_t i : order)
        for (std::size_t f = 0; f < k; ++f) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
    return folds;
}

/// Two-sided Student-t quantile t_{1-alpha/2, df}.
inline double t_quantile(double confidence, double df) {
    if (!(df > 0.0)) throw ParameterError("t quantile needs df > 0");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ParameterError("confidence must be in (0, 1)");
    const boost::math::students_t dist(df);
    return boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return lo <= v && v <= hi; }
    bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

/// mean +- t_{0.975, K-1} * s / sqrt(K)
inline Interval ci95(std::span<const double> values) {
    if (values.size() < 2) throw DataError("confidence interval needs at least two values");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double half = t_quantile(0.95, n - 1.0) * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return {mean - half, mean + half};
}

// ---------------------------------------------------------------------------
// SNR degradation ratio

enum class SnrEstimator {
    Auto,         ///< bookkeeping when both recordings carry powers, else moments
    Bookkeeping,  ///< exact powers recorded by the generator
    Moments,      ///< M2M4 estimator on the samples
};

/// M2M4 estimate assuming a constant-modulus signal in complex Gaussian
/// noise: S = sqrt(2 M2^2 - M4), N = M2 - S.
inline double snr_m2m4(std::span<const iq::IQSample> x, double signal_kurtosis = 1.0) {
    if (x.empty()) throw EmptyInputError("SNR estimate of an empty recording");
    double m2 = 0.0, m4 = 0.0;
    for (const auto& s : x) {
        const double p = std::norm(s);
        m2 += p;
        m4 += p * p;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    const double s2 = (m4 - 2.0 * m2 * m2) / (signal_kurtosis - 2.0);
    const double sig = s2 > 0.0 ? std::sqrt(s2) : 0.0;
    const double noise = m2 - sig;
    if (noise <= 0.0) return std::numeric_limits<double>::infinity();
    return sig / noise;
}

inline double estimate_snr(const iq::IQRecording& rec, SnrEstimator est) {
    if (est == SnrEstimator::Bookkeeping) {
        if (!rec.powers) throw DataError("recording has no generator power bookkeeping");
        return rec.powers->snr();
    }
    return snr_m2m4(rec.samples);
}

inline double snr_dr(const iq::IQRecording& jam, const iq::IQRecording& nojam, SnrEstimator est = SnrEstimator::Auto) {
    if (jam.samples.empty() || nojam.samples.empty()) throw EmptyInputError("SNR_DR of an empty recording");
    if (est == SnrEstimator::Auto)
        est = jam.powers && nojam.powers ? SnrEstimator::Bookkeeping : SnrEstimator::Moments;
    const double ref = estimate_snr(nojam, est);
    if (!(ref > 0.0)) throw DataError("no-jam SNR estimate is zero");
    if (std::isinf(ref)) return std::isinf(estimate_snr(jam, est)) ? 1.0 : 0.0;
    return estimate_snr(jam, est) / ref;
}

// ---------------------------------------------------------------------------

inline constexpr double kLowBerLimit = 0.01;

/// Keeps chunks whose measured SER is below the limit, in order. Chunks
/// without an SER measurement cannot qualify and are dropped.
inline std::vector<iq::IQChunk> low_ber_filter(std::span<const iq::IQChunk> chunks, double limit = kLowBerLimit) {
    std::vector<iq::IQChunk> out;
    for (const auto& c : chunks)
        if (c.ser && *c.ser < limit) out.push_back(c);
    return out;
}

/// Median wall-clock time of `reps` calls, in milliseconds.
template <typename F>
double median_ms(std::size_t reps, F&& f) {
    if (reps == 0) throw ParameterError("timing needs at least one repetition");
    std::vector<double> ms(reps);
    for (auto& m : ms) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        m = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    std::sort(ms.begin(), ms.end());
    return reps % 2 ? ms[reps / 2] : 0.5 * (ms[reps / 2 - 1] + ms[reps / 2]);
}

inline constexpr std::size_t kTimingReps = 20;

}  // namespace jamsentry::eval
