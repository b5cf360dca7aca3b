// Acceptance suite. `acceptance N` runs criterion N, no argument runs all.
// Each criterion prints one PASS/FAIL line and must finish inside its
// runtime budget.

#include <jamsentry/autoencoder.hpp>
#include <jamsentry/cnn.hpp>
#include <jamsentry/evalkit.hpp>
#include <jamsentry/experiment.hpp>
#include <jamsentry/imaging.hpp>
#include <jamsentry/linksim.hpp>
#include <jamsentry/presets.hpp>

#include <json.hpp>

#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace jamsentry;
namespace fs = std::filesystem;
using detectors::AEModel;
using imaging::GrayImage;
using iq::Label;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

void progress(const std::string& s) { std::cerr << "  .. " << s << "\n"; }

GrayImage random_image(std::size_t w, std::size_t h, Rng& rng, Label l = Label::NoJam) {
    GrayImage img;
    img.width = w;
    img.height = h;
    img.label = l;
    img.pixels.resize(w * h);
    img.raw_counts.resize(w * h);
    for (std::size_t k = 0; k < w * h; ++k) {
        img.raw_counts[k] = static_cast<std::uint32_t>(rng() % 50);
        img.pixels[k] = uniform01(rng);
    }
    return img;
}

std::vector<GrayImage> images_of(std::span<const iq::IQChunk> chunks, const iq::NormalizationStats& stats) {
    std::vector<GrayImage> out;
    out.reserve(chunks.size());
    for (const auto& c : chunks) out.push_back(imaging::histogram_image(iq::normalize(c, stats)));
    return out;
}

// ---------------------------------------------------------------------------

Outcome threshold_exactness() {
    Outcome o;
    auto rng = make_rng(101);
    std::uniform_int_distribution<std::size_t> len(1, 300);
    std::lognormal_distribution<double> mse(-6.0, 1.5);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> v(len(rng));
        for (auto& x : v) x = mse(rng);
        const double mult = t % 2 ? 3.5 : 1.0 + uniform01(rng) * 4.0;
        const auto [mean, sd] = oracle::mean_std(v);
        const double ref = mean + mult * sd;
        worst = std::max(worst, std::abs(detectors::compute_threshold(v, mult) - ref) / ref);
    }
    o.require(worst < 1e-12, "relative error " + sci(worst) + " >= 1e-12");
    o.note("max relative error " + sci(worst));
    return o;
}

Outcome histogram_conservation() {
    Outcome o;
    auto rng = make_rng(202);
    std::uniform_int_distribution<std::size_t> len(1, 20'000);
    std::size_t total_dropped = 0;
    for (int t = 0; t < 1000; ++t) {
        const double sigma = 0.2 + 1.5 * uniform01(rng);
        std::normal_distribution<double> g(0.0, sigma);
        std::vector<iq::IQSample> s(len(rng));
        for (auto& x : s) x = {g(rng), g(rng)};
        const auto a = imaging::histogram_image(s, 224, 224);
        if (a.total_counts() + a.dropped != s.size()) {
            o.require(false, "conservation on chunk " + std::to_string(t));
            break;
        }
        std::shuffle(s.begin(), s.end(), rng);
        const auto b = imaging::histogram_image(s, 224, 224);
        if (a.raw_counts != b.raw_counts || a.pixels != b.pixels || a.dropped != b.dropped) {
            o.require(false, "permutation invariance on chunk " + std::to_string(t));
            break;
        }
        total_dropped += a.dropped;
    }
    o.note("1000 chunks, " + std::to_string(total_dropped) + " samples out of range");
    return o;
}

Outcome modulator_correctness() {
    Outcome o;
    auto rng = make_rng(303);
    const linksim::OfdmParams ofdm;
    for (auto s : linksim::kAllSchemes) {
        const auto bits = linksim::random_bits(10'000, rng);
        auto back = linksim::demodulate(linksim::modulate(bits, s, ofdm), s, ofdm);
        bool pad_zero = true;
        for (std::size_t k = bits.size(); k < back.size(); ++k) pad_zero &= back[k] == 0;
        back.resize(bits.size());
        o.require(back == bits && pad_zero, std::string(linksim::to_string(s)) + " round trip");
    }
    linksim::ScenarioConfig cfg;
    cfg.jammer = linksim::Jammer::none();
    const std::size_t n = 100'000;
    for (double snr : {2.0, 6.0, 10.0}) {
        cfg.snr_db = snr;
        const double ser = linksim::run_link(cfg, n, false, mix_seed(303, 1), mix_seed(303, 2), 0).ser();
        const double p = oracle::bpsk_ofdm_ser(snr, 64, 48);
        const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
        o.require(std::abs(ser - p) < 3 * se, "SER at " + fmt(snr, 0) + " dB outside 3 standard errors");
        o.note(fmt(snr, 0) + " dB: SER " + fmt(ser, 6) + " vs " + fmt(p, 6) + " +- " + fmt(3 * se, 6));
    }
    return o;
}

Outcome gradient_checks() {
    Outcome o;
    {
        auto m = detectors::make_ae(3, 2, 2);
        auto rng = make_rng(404);
        for (auto* v : {&m.w1, &m.b1, &m.w2, &m.b2})
            for (auto& x : *v) x = uniform01(rng) - 0.5;
        m.sparsity_weight = 0.5;
        m.sparsity_target = 0.05;
        m.l2_weight = 0.01;
        std::vector<GrayImage> imgs;
        for (int k = 0; k < 5; ++k) imgs.push_back(random_image(3, 2, rng));
        std::vector<std::span<const double>> batch;
        for (const auto& i : imgs) batch.emplace_back(i.pixels);
        detectors::AEGradient g;
        const auto terms = detectors::ae_loss(m, batch, &g);
        o.require(terms.sparsity > 0 && terms.weight_decay > 0, "AE loss includes KL and L2 terms");
        std::vector<double*> p;
        std::vector<double> a;
        for (auto [w, d] : {std::pair{&m.w1, &g.w1}, {&m.b1, &g.b1}, {&m.w2, &g.w2}, {&m.b2, &g.b2}})
            for (std::size_t k = 0; k < w->size(); ++k) {
                p.push_back(&(*w)[k]);
                a.push_back((*d)[k]);
            }
        const double err =
            oracle::max_rel_grad_error(p, a, [&] { return detectors::ae_loss(m, batch, nullptr).total(); });
        o.require(err < 1e-4, "AE gradient error " + sci(err));
        o.note("AE max rel err " + sci(err));
    }
    {
        auto m = detectors::make_cnn(8, 8, {8, 16, 32}, 405);
        auto rng = make_rng(406);
        for (auto& c : m.conv)
            for (auto& b : c.b) b = 0.05 * (uniform01(rng) + 0.1);
        std::vector<GrayImage> imgs{random_image(8, 8, rng, Label::NoJam), random_image(8, 8, rng, Label::Jam),
                                    random_image(8, 8, rng, Label::Jam), random_image(8, 8, rng, Label::NoJam)};
        std::vector<const GrayImage*> batch;
        for (const auto& i : imgs) batch.push_back(&i);
        detectors::CNNModel g;
        detectors::cnn_loss(m, batch, &g);
        std::vector<double*> p;
        std::vector<double> a;
        auto add = [&](std::vector<double>& w, std::vector<double>& d) {
            for (std::size_t k = 0; k < w.size(); ++k) {
                p.push_back(&w[k]);
                a.push_back(d[k]);
            }
        };
        for (std::size_t l = 0; l < 3; ++l) {
            add(m.conv[l].w, g.conv[l].w);
            add(m.conv[l].b, g.conv[l].b);
        }
        add(m.fc_w, g.fc_w);
        add(m.fc_b, g.fc_b);
        const double err =
            oracle::max_rel_grad_error(p, a, [&] { return detectors::cnn_loss(m, batch, nullptr); }, 1e-6);
        o.require(err < 1e-3, "CNN gradient error " + sci(err));
        o.note("CNN max rel err " + sci(err));
    }
    return o;
}

// The base scenario of the synthetic reproductions: BPSK, 15 dB, AWGN jammer at 0 dB.
linksim::ScenarioConfig base_scenario() {
    linksim::ScenarioConfig cfg;
    cfg.name = "acceptance";
    cfg.scheme = linksim::ModScheme::BPSK;
    cfg.snr_db = 15;
    cfg.jsr_db = 0;
    cfg.jammer = linksim::Jammer::awgn();
    cfg.seed = 505;
    return cfg;
}

Outcome separation() {
    Outcome o;
    const auto ds = linksim::gen_dataset(base_scenario(), 10'000, 200);
    std::vector<iq::IQChunk> nojam, jam;
    for (const auto& c : ds.chunks) (c.label == Label::Jam ? jam : nojam).push_back(c);
    const std::span<const iq::IQChunk> train_chunks(nojam.data(), 150);
    const auto stats = iq::compute_normalization(train_chunks);
    const auto train = images_of(train_chunks, stats);
    const auto test_nojam = images_of(std::span<const iq::IQChunk>(nojam).subspan(150, 50), stats);
    const auto test_jam = images_of(std::span<const iq::IQChunk>(jam).subspan(0, 50), stats);

    detectors::AEHyper hp;
    hp.seed = 505;
    const auto m = detectors::ae_train(train, hp);
    double mse_nojam = 0, mse_jam = 0;
    eval::ConfusionCounts cm;
    for (const auto& img : test_nojam) {
        const auto v = detectors::ae_detect(m, img);
        mse_nojam += v.score / 50;
        cm.add(Label::NoJam, v.label);
    }
    for (const auto& img : test_jam) {
        const auto v = detectors::ae_detect(m, img);
        mse_jam += v.score / 50;
        cm.add(Label::Jam, v.label);
    }
    const double acc = eval::accuracy(cm);
    o.require(mse_jam > mse_nojam, "Jam mean MSE above NoJam mean MSE");
    o.require(acc >= 0.95, "accuracy " + fmt(acc) + " < 0.95");
    o.note("mean MSE NoJam " + fmt(mse_nojam * 1e6, 3) + "e-6, Jam " + fmt(mse_jam * 1e6, 3) + "e-6, tau " +
           fmt(m.threshold * 1e6, 3) + "e-6, accuracy " + fmt(acc));
    return o;
}

Outcome cnn_parity() {
    Outcome o;
    const std::size_t n = 5000;
    auto cfg = base_scenario();
    cfg.seed = 606;
    const auto ds = linksim::gen_dataset(cfg, n, 125);
    std::vector<iq::IQChunk> nojam, jam;
    for (const auto& c : ds.chunks) (c.label == Label::Jam ? jam : nojam).push_back(c);
    const auto stats = iq::compute_normalization(std::span<const iq::IQChunk>(nojam.data(), 75));
    std::vector<iq::IQChunk> train_chunks(nojam.begin(), nojam.begin() + 75);
    train_chunks.insert(train_chunks.end(), jam.begin(), jam.begin() + 75);
    const auto train = images_of(train_chunks, stats);

    detectors::CnnHyper hp;
    hp.seed = 606;
    progress("training CNN on 75+75 images");
    const auto m = detectors::cnn_train(train, hp);
    eval::ConfusionCounts cm;
    for (std::size_t k = 75; k < 125; ++k) {
        cm.add(Label::NoJam, detectors::cnn_detect(m, imaging::histogram_image(iq::normalize(nojam[k], stats))).label);
        cm.add(Label::Jam, detectors::cnn_detect(m, imaging::histogram_image(iq::normalize(jam[k], stats))).label);
    }
    const double cnn_acc = eval::accuracy(cm);
    o.require(cnn_acc >= 0.95, "CNN accuracy " + fmt(cnn_acc) + " < 0.95");

    // AE at the same setting: 5-fold cross-validation, 75 NoJam training images.
    eval::ExperimentSpec spec;
    spec.scenario = cfg;
    spec.detector = eval::Detector::AE;
    spec.samples_per_image = n;
    spec.train_size = 75;
    eval::RunOptions opt;
    opt.timings = false;
    opt.progress = progress;
    progress("AE 5-fold at the same setting");
    const auto ae = eval::evaluate(spec, opt);
    o.require(cnn_acc >= ae.mean_accuracy || ae.ci95.contains(cnn_acc),
              "CNN below AE mean and outside its CI");
    o.note("CNN " + fmt(cnn_acc) + ", AE " + fmt(ae.mean_accuracy) + " CI [" + fmt(ae.ci95.lo) + ", " +
           fmt(ae.ci95.hi) + "]");
    return o;
}

eval::ExperimentReport run_preset(const std::string& name) {
    eval::RunOptions opt;
    opt.timings = false;
    opt.progress = progress;
    return eval::run_experiment(presets::spec(name), opt);
}

std::string summary(const eval::ExperimentReport& r) {
    std::string s = r.name + " {";
    for (std::size_t i = 0; i < r.rows.size(); ++i)
        s += (i ? ", " : "") + r.rows[i].value + ": " + fmt(r.rows[i].mean_accuracy) + " [" +
             fmt(r.rows[i].ci95.lo, 3) + "," + fmt(r.rows[i].ci95.hi, 3) + "]";
    return s + "}";
}

Outcome trends() {
    Outcome o;
    constexpr double kSweepBudget = 20 * 60;
    auto timed = [&](const std::string& name) {
        const auto t0 = std::chrono::steady_clock::now();
        auto r = run_preset(name);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(s <= kSweepBudget, name + " took " + fmt(s, 0) + " s > 20 min");
        o.note(summary(r) + " in " + fmt(s, 0) + " s");
        return r;
    };

    const auto e1 = timed("exp1");
    for (std::size_t i = 1; i < e1.rows.size(); ++i)
        o.require(e1.rows[i].mean_accuracy >= e1.rows[i - 1].mean_accuracy,
                  "(a) accuracy drops from " + e1.rows[i - 1].value + " to " + e1.rows[i].value);

    const auto e4 = timed("exp4");
    for (std::size_t i = 0; i < e4.rows.size(); ++i)
        for (std::size_t j = i + 1; j < e4.rows.size(); ++j)
            o.require(e4.rows[i].ci95.overlaps(e4.rows[j].ci95),
                      "(b) JOR " + e4.rows[i].value + " and " + e4.rows[j].value + " CIs disjoint");

    const auto e6 = timed("exp6");
    for (const auto& r : e6.rows) o.require(r.mean_accuracy >= 0.9, "(c) " + r.value + " accuracy < 0.9");

    const auto e9 = timed("exp9");
    for (const auto& r : e9.rows) o.require(r.mean_accuracy >= 0.9, "(d) " + r.value + " accuracy < 0.9");
    return o;
}

Outcome augmentation_suite() {
    Outcome o;
    auto rng = make_rng(808);
    using imaging::Augment;
    for (int t = 0; t < 50; ++t) {
        const auto img = random_image(224, 224, rng);
        for (auto a : {Augment::Rot180, Augment::FlipLR, Augment::FlipUD}) {
            const auto once = imaging::augment(img, a);
            const auto twice = imaging::augment(once, a);
            if (twice.pixels != img.pixels || twice.raw_counts != img.raw_counts)
                o.require(false, std::string(imaging::to_string(a)) + " applied twice is not the identity");
            auto p0 = img.pixels, p1 = once.pixels;
            std::sort(p0.begin(), p0.end());
            std::sort(p1.begin(), p1.end());
            if (p0 != p1) o.require(false, std::string(imaging::to_string(a)) + " changes the pixel multiset");
        }
        for (auto a : {Augment::Contrast, Augment::Brightness})
            for (double param : {0.05, imaging::default_param(a), 3.0}) {
                const auto out = imaging::augment(img, a, param);
                for (double p : out.pixels)
                    if (!(p >= 0.0 && p <= 1.0)) {
                        o.require(false, std::string(imaging::to_string(a)) + " leaves [0,1]");
                        break;
                    }
            }
    }
    o.note("50 random 224x224 images");
    return o;
}

Outcome evaluation_math() {
    Outcome o;
    // K-fold: exact partitions across sizes, class mixes and K
    auto rng = make_rng(909);
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 2 + rng() % 9;
        const std::size_t n = k + rng() % 200;
        std::vector<Label> labels(n);
        for (auto& l : labels) l = rng() % 3 ? Label::NoJam : Label::Jam;
        const auto folds = eval::kfold_split(labels, k, rng());
        std::vector<int> hits(n, 0);
        bool ok = folds.size() == k;
        for (const auto& f : folds) {
            ok &= f.train.size() + f.test.size() == n;
            std::set<std::size_t> tr(f.train.begin(), f.train.end());
            ok &= tr.size() == f.train.size();
            for (auto i : f.test) {
                ok &= !tr.count(i);
                ++hits[i];
            }
        }
        for (int h : hits) ok &= h == 1;
        if (!ok) {
            o.require(false, "K-fold partition (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
            break;
        }
    }
    // t quantiles and CI half-widths against the table
    double worst_t = 0.0, worst_ci = 0.0;
    for (std::size_t df = 1; df <= 30; ++df) {
        worst_t = std::max(worst_t, std::abs(eval::t_quantile(0.95, static_cast<double>(df)) - oracle::kT975[df - 1]));
        std::vector<double> v(df + 1);
        for (auto& x : v) x = 0.8 + 0.2 * uniform01(rng);
        const auto ci = eval::ci95(v);
        const auto [mean, sd] = oracle::mean_std(v);
        const double half = oracle::kT975[df - 1] * sd / std::sqrt(static_cast<double>(v.size()));
        worst_ci = std::max({worst_ci, std::abs(ci.lo - (mean - half)), std::abs(ci.hi - (mean + half))});
    }
    o.require(worst_t < 1e-6, "t quantile error " + sci(worst_t));
    o.require(worst_ci < 1e-6, "CI bound error " + sci(worst_ci));
    // accuracy on every confusion matrix with entries 0..6
    std::size_t mats = 0;
    for (std::size_t tp = 0; tp <= 6; ++tp)
        for (std::size_t tn = 0; tn <= 6; ++tn)
            for (std::size_t fp = 0; fp <= 6; ++fp)
                for (std::size_t fn = 0; fn <= 6; ++fn) {
                    const std::size_t total = tp + tn + fp + fn;
                    if (total == 0) continue;
                    ++mats;
                    const double acc = eval::accuracy({tp, tn, fp, fn});
                    // exact: the double nearest to the rational (tp+tn)/total
                    if (acc != static_cast<double>(tp + tn) / static_cast<double>(total) ||
                        acc * static_cast<double>(total) != static_cast<double>(tp + tn))
                        o.require(false, "accuracy of (" + std::to_string(tp) + "," + std::to_string(tn) + "," +
                                             std::to_string(fp) + "," + std::to_string(fn) + ")");
                }
    o.note("t err " + sci(worst_t) + ", CI err " + sci(worst_ci) + ", " +
           std::to_string(mats) + " confusion matrices");
    return o;
}

#ifdef JAMSENTRY_CLI
int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + JAMSENTRY_CLI + "\" " + args;
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / "jamsentry_acceptance" / name;
    fs::remove_all(d);
    fs::create_directories(d.parent_path());
    return d;
}

Outcome overhead() {
    Outcome o;
    const auto d = scratch_dir("bench");
    const int rc = run_cli("bench --samples-per-image 100000 --out \"" + d.string() + "\" > /dev/null");
    o.require(rc == 0, "bench exit code " + std::to_string(rc));
    if (rc != 0) return o;
    const auto j = nlohmann::json::parse(slurp(d / "bench.json"));
    const double gen = j.at("image_gen_ms").get<double>(), ae = j.at("ae_infer_ms_per_image").get<double>(),
                 cnn = j.at("cnn_infer_ms_per_image").get<double>();
    o.require(j.at("samples_per_image").get<std::size_t>() == 100'000, "image generation timed on 1e5 samples");
    o.require(cnn > ae, "AE inference not faster than CNN");
    o.note("image " + fmt(gen, 2) + " ms, AE " + fmt(ae, 3) + " ms, CNN " + fmt(cnn, 3) + " ms, ratio " +
           fmt(cnn / ae, 1));
    return o;
}

Outcome reproducibility() {
    // Every preset through the CLI twice, second run with a different
    // thread count. Scale is reduced; the code path is the full one.
    Outcome o;
    const std::string scale =
        "--samples-per-image 1000 --train-size 8 --set side=32 --set ae_epochs=10 --set cnn_epochs=2 --set folds=3";
    for (auto name : presets::names()) {
        const auto a = scratch_dir(std::string(name) + "_a"), b = scratch_dir(std::string(name) + "_b");
        const std::string base = "eval --preset " + std::string(name) + " --seed 11 " + scale;
        const int ra = run_cli(base + " --out \"" + a.string() + "\" > /dev/null");
        const int rb = run_cli(base + " --threads 3 --out \"" + b.string() + "\" > /dev/null");
        o.require(ra == 0 && rb == 0, std::string(name) + " exit codes " + std::to_string(ra) + "/" + std::to_string(rb));
        const auto ca = slurp(a / "report.csv"), cb = slurp(b / "report.csv");
        o.require(!ca.empty() && ca == cb, std::string(name) + " CSV reports differ");
    }
    // one full-scale preset row at the library level
    auto spec = presets::spec("exp6").with("jammer", "deceptive");
    eval::RunOptions opt;
    opt.timings = false;
    const auto r1 = eval::to_csv(eval::run_experiment(spec, opt));
    const auto r2 = eval::to_csv(eval::run_experiment(spec, opt));
    o.require(r1 == r2, "exp6 deceptive full-scale CSV differs");
    o.note(std::to_string(presets::names().size()) + " presets at reduced scale plus exp6/deceptive at full scale");
    return o;
}
#endif

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> all{
        {1, "threshold exactness", 1, threshold_exactness},
        {2, "histogram conservation", 10, histogram_conservation},
        {3, "modulator correctness", 30, modulator_correctness},
        {4, "gradient checks", 30, gradient_checks},
        {5, "AE separation", 600, separation},
        {6, "CNN parity", 900, cnn_parity},
        {7, "trend reproductions", 4 * 20 * 60, trends},
        {8, "augmentation suite", 5, augmentation_suite},
        {9, "evaluation math", 5, evaluation_math},
#ifdef JAMSENTRY_CLI
        {10, "overhead analogue", 120, overhead},
        {11, "reproducibility", 1800, reproducibility},
#endif
    };
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);
    bool any = false, ok = true;
    for (const auto& c : all) {
        if (only && c.id != only) continue;
        any = true;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(s <= c.budget_s, "runtime over budget");
        std::cout << "criterion " << c.id << " [" << c.title << "]: " << (o.pass ? "PASS" : "FAIL") << " ("
                  << fmt(s, 2) << " s / " << fmt(c.budget_s, 0) << " s) " << o.detail << std::endl;
        ok &= o.pass;
    }
    if (!any) {
        std::cerr << "unknown criterion " << only << "\n";
        return 2;
    }
    return ok ? 0 : 1;
}
