#include <jamsentry/evalkit.hpp>
#include <jamsentry/linksim.hpp>

#include <catch_amalgamated.hpp>

#include "oracles.hpp"

#include <set>

using namespace jamsentry;
using namespace jamsentry::eval;

TEST_CASE("accuracy from confusion counts") {
    ConfusionCounts c{3, 2, 1, 4};
    CHECK(accuracy(c) == 0.5);
    ConfusionCounts flipped{c.fn, c.fp, c.tn, c.tp};
    CHECK(accuracy(flipped) == Catch::Approx(1.0 - accuracy(c)));
    CHECK_THROWS_AS(accuracy(ConfusionCounts{}), DataError);

    ConfusionCounts d;
    d.add(Label::Jam, Label::Jam);
    d.add(Label::Jam, Label::NoJam);
    d.add(Label::NoJam, Label::NoJam);
    d.add(Label::NoJam, Label::Jam);
    CHECK(d.tp == 1);
    CHECK(d.fn == 1);
    CHECK(d.tn == 1);
    CHECK(d.fp == 1);
}

TEST_CASE("stratified K-fold") {
    std::vector<Label> labels;
    for (int k = 0; k < 23; ++k) labels.push_back(Label::NoJam);
    for (int k = 0; k < 17; ++k) labels.push_back(Label::Jam);
    const auto folds = kfold_split(labels, 5, 42);
    REQUIRE(folds.size() == 5);

    std::multiset<std::size_t> seen;
    for (const auto& f : folds) {
        CHECK(f.train.size() + f.test.size() == labels.size());
        std::set<std::size_t> tr(f.train.begin(), f.train.end());
        for (auto i : f.test) {
            CHECK(tr.count(i) == 0);
            seen.insert(i);
        }
        CHECK(f.test.size() >= 8);
        CHECK(f.test.size() <= 8);
        const auto jams = std::count_if(f.test.begin(), f.test.end(), [&](auto i) { return labels[i] == Label::Jam; });
        CHECK(jams >= 3);
        CHECK(jams <= 4);
    }
    CHECK(seen.size() == labels.size());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == labels.size());

    const auto again = kfold_split(labels, 5, 42);
    for (std::size_t f = 0; f < 5; ++f) CHECK(again[f].test == folds[f].test);
    CHECK(kfold_split(labels, 5, 43)[0].test != folds[0].test);

    CHECK_THROWS_AS(kfold_split(labels, 1, 1), ParameterError);
    CHECK_THROWS_AS(kfold_split(std::vector<Label>(3, Label::Jam), 5, 1), DataError);
}

TEST_CASE("t quantiles match the reference table") {
    for (std::size_t df = 1; df <= oracle::kT975.size(); ++df)
        CHECK(std::abs(t_quantile(0.95, static_cast<double>(df)) - oracle::kT975[df - 1]) < 1e-6);
    CHECK_THROWS_AS(t_quantile(0.95, 0.0), ParameterError);
    CHECK_THROWS_AS(t_quantile(1.0, 3.0), ParameterError);
}

TEST_CASE("95% confidence interval") {
    const std::vector<double> same{0.9, 0.9, 0.9, 0.9, 0.9};
    const auto a = ci95(same);
    CHECK(a.lo == Catch::Approx(0.9));
    CHECK(a.hi == Catch::Approx(0.9));

    const std::vector<double> v{0.9, 1.0, 0.95, 0.85, 1.0};
    const auto [mean, sd] = oracle::mean_std(v);
    const double half = oracle::kT975[3] * sd / std::sqrt(5.0);
    const auto b = ci95(v);
    CHECK(b.lo == Catch::Approx(mean - half).epsilon(1e-9));
    CHECK(b.hi == Catch::Approx(mean + half).epsilon(1e-9));
    CHECK(b.contains(mean));
    CHECK(b.overlaps(Interval{b.hi, b.hi + 1}));
    CHECK_FALSE(b.overlaps(Interval{b.hi + 0.01, b.hi + 1}));
    CHECK_THROWS_AS(ci95(std::vector<double>{1.0}), DataError);
}

TEST_CASE("SNR degradation ratio") {
    linksim::ScenarioConfig cfg;
    cfg.snr_db = 15;
    cfg.jsr_db = -5;
    const auto clean = linksim::run_link(cfg, 48 * 500, false, 1, 2, 3).received;
    const auto jammed = linksim::run_link(cfg, 48 * 500, true, 1, 2, 3).received;
    CHECK(snr_dr(clean, clean) == 1.0);

    // bookkeeping oracle: S/(N+J) over S/N = N / (N + J) with J/S and N/S from the dB settings
    const double n = std::pow(10.0, -15.0 / 10), j = std::pow(10.0, -5.0 / 10);
    CHECK(snr_dr(jammed, clean, SnrEstimator::Bookkeeping) == Catch::Approx(n / (n + j)).epsilon(1e-9));

    // moments estimator only needs to agree roughly for a constant-modulus signal
    auto rng = make_rng(5);
    std::vector<iq::IQSample> sym(200'000);
    std::normal_distribution<double> g(0.0, std::sqrt(0.1 / 2));
    for (auto& s : sym) s = iq::IQSample{rng() & 1 ? 1.0 : -1.0, 0.0} + iq::IQSample{g(rng), g(rng)};
    CHECK(snr_m2m4(sym) == Catch::Approx(10.0).epsilon(0.05));

    iq::IQRecording empty;
    CHECK_THROWS_AS(snr_dr(empty, clean), EmptyInputError);
    iq::IQRecording no_book = clean;
    no_book.powers.reset();
    CHECK_THROWS_AS(snr_dr(no_book, clean, SnrEstimator::Bookkeeping), DataError);
}

TEST_CASE("low-BER filter") {
    std::vector<iq::IQChunk> chunks(4);
    chunks[0].ser = 0.0;
    chunks[1].ser = 0.01;
    chunks[2].ser = 0.2;
    chunks[3].ser = std::nullopt;
    chunks[0].label = Label::Jam;
    const auto kept = low_ber_filter(chunks);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].label == Label::Jam);
    CHECK(low_ber_filter(chunks, 0.5).size() == 3);
}

TEST_CASE("median timing") {
    int calls = 0;
    const double ms = median_ms(5, [&] { ++calls; });
    CHECK(calls == 5);
    CHECK(ms >= 0.0);
    CHECK_THROWS_AS(median_ms(0, [] {}), ParameterError);
}
