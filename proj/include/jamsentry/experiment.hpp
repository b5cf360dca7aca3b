#pragma once

// Experiment runner: scenario -> dataset -> images -> K-fold train/test,
// plus the CSV / JSON / SVG report writers.

#include <jamsentry/autoencoder.hpp>
#include <jamsentry/cnn.hpp>
#include <jamsentry/evalkit.hpp>
#include <jamsentry/imaging.hpp>
#include <jamsentry/kvconfig.hpp>
#include <jamsentry/linksim.hpp>

#include <json.hpp>

#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace jamsentry::eval {

enum class Detector { AE, CNN };
enum class ImagingMode { Proposed, Legacy };

inline std::string_view to_string(Detector d) { return d == Detector::AE ? "ae" : "cnn"; }
inline std::string_view to_string(ImagingMode m) { return m == ImagingMode::Proposed ? "proposed" : "legacy"; }

inline Detector detector_from_string(std::string_view s) {
    if (s == "ae") return Detector::AE;
    if (s == "cnn") return Detector::CNN;
    throw ParameterError("unknown detector '" + std::string(s) + "' (expected ae|cnn)");
}

inline ImagingMode imaging_from_string(std::string_view s) {
    if (s == "proposed") return ImagingMode::Proposed;
    if (s == "legacy") return ImagingMode::Legacy;
    throw ParameterError("unknown imaging mode '" + std::string(s) + "' (expected proposed|legacy)");
}

inline constexpr std::size_t kDefaultTrainSize = 150;

namespace detail {

/// Shortest text that reads back to the same double.
inline std::string num(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::size_t positive(const KeyValues& kv, const std::string& key, std::size_t fallback) {
    const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v <= 0) throw ParameterError(key + " must be > 0");
    return static_cast<std::size_t>(v);
}

inline bool flag(const KeyValues& kv, const std::string& key) {
    const auto v = kv.get(key, "false");
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw FormatError("key '" + key + "': expected true or false");
}

}  // namespace detail

struct ExperimentSpec {
    linksim::ScenarioConfig scenario;
    Detector detector = Detector::AE;
    ImagingMode imaging = ImagingMode::Proposed;
    std::size_t side = imaging::kDefaultSide;
    std::size_t samples_per_image = 10'000;
    std::size_t train_size = kDefaultTrainSize;  ///< AE: NoJam images; CNN: both classes together
    std::size_t folds = 5;
    std::vector<imaging::Augment> augment;  ///< each adds one transformed copy of every training image
    bool require_weak = false;
    bool low_ber = false;
    detectors::AEHyper ae;
    detectors::CnnHyper cnn;
    std::string sweep;  ///< key varied across report rows; empty for one row
    std::vector<std::string> values;

    /// Images generated per class so that the training split of every fold
    /// holds about train_size usable images.
    std::size_t images_per_class() const {
        const std::size_t per_class = detector == Detector::AE ? train_size : (train_size + 1) / 2;
        return (per_class * folds + folds - 2) / (folds - 1);
    }

    static const std::set<std::string>& known_keys() {
        static const std::set<std::string> keys{
            "name", "scheme", "n_subcarriers", "n_data_subcarriers", "cp_len", "snr_db", "jsr_db", "jammer",
            "deceptive_scheme", "jor", "duration_samples", "seed", "detector", "imaging", "side",
            "samples_per_image", "train_size", "folds", "augment", "require_weak", "low_ber", "threshold_mult",
            "ae_hidden", "ae_epochs", "ae_learning_rate", "sparsity_target", "sparsity_weight", "l2_weight",
            "cnn_epochs", "cnn_learning_rate", "batch", "sweep", "values"};
        return keys;
    }

    static ExperimentSpec from_kv(const KeyValues& kv) {
        for (const auto& [k, v] : kv.entries())
            if (!known_keys().count(k)) throw FormatError("unknown key '" + k + "'");
        ExperimentSpec s;
        s.scenario = linksim::ScenarioConfig::from_kv(kv);
        s.detector = detector_from_string(kv.get("detector", "ae"));
        s.imaging = imaging_from_string(kv.get("imaging", "proposed"));
        s.side = detail::positive(kv, "side", s.side);
        if (s.side < 4) throw ParameterError("side must be >= 4");
        s.samples_per_image = detail::positive(kv, "samples_per_image", s.samples_per_image);
        s.train_size = detail::positive(kv, "train_size", s.train_size);
        s.folds = detail::positive(kv, "folds", s.folds);
        if (s.folds < 2) throw ParameterError("folds must be >= 2");
        for (const auto& a : kv.get_strings("augment"))
            if (a != "none") s.augment.push_back(imaging::augment_from_string(a));
        s.require_weak = detail::flag(kv, "require_weak");
        s.low_ber = detail::flag(kv, "low_ber");
        s.ae.threshold_mult = kv.get_double("threshold_mult", s.ae.threshold_mult);
        s.ae.hidden = detail::positive(kv, "ae_hidden", s.ae.hidden);
        s.ae.epochs = detail::positive(kv, "ae_epochs", s.ae.epochs);
        s.ae.learning_rate = kv.get_double("ae_learning_rate", s.ae.learning_rate);
        s.ae.sparsity_target = kv.get_double("sparsity_target", s.ae.sparsity_target);
        s.ae.sparsity_weight = kv.get_double("sparsity_weight", s.ae.sparsity_weight);
        s.ae.l2_weight = kv.get_double("l2_weight", s.ae.l2_weight);
        s.cnn.epochs = detail::positive(kv, "cnn_epochs", s.cnn.epochs);
        s.cnn.learning_rate = kv.get_double("cnn_learning_rate", s.cnn.learning_rate);
        s.ae.batch = s.cnn.batch = detail::positive(kv, "batch", s.ae.batch);
        if (!(s.ae.sparsity_target > 0.0 && s.ae.sparsity_target < 1.0))
            throw ParameterError("sparsity_target must be in (0, 1)");
        s.sweep = kv.get("sweep", "");
        s.values = kv.get_strings("values");
        if (!s.sweep.empty()) {
            if (!known_keys().count(s.sweep) || s.sweep == "sweep" || s.sweep == "values")
                throw FormatError("cannot sweep over '" + s.sweep + "'");
            if (s.values.empty()) throw FormatError("sweep '" + s.sweep + "' has no values");
        }
        if (s.samples_per_image < 2) throw ParameterError("samples_per_image must be >= 2");
        return s;
    }

    KeyValues to_kv() const {
        using detail::num;
        KeyValues kv;
        scenario.to_kv(kv);
        kv.set("detector", std::string(to_string(detector)));
        kv.set("imaging", std::string(to_string(imaging)));
        kv.set("side", std::to_string(side));
        kv.set("samples_per_image", std::to_string(samples_per_image));
        kv.set("train_size", std::to_string(train_size));
        kv.set("folds", std::to_string(folds));
        std::string aug;
        for (auto a : augment) aug += (aug.empty() ? "" : ",") + std::string(imaging::to_string(a));
        kv.set("augment", aug.empty() ? "none" : aug);
        kv.set("require_weak", require_weak ? "true" : "false");
        kv.set("low_ber", low_ber ? "true" : "false");
        kv.set("threshold_mult", num(ae.threshold_mult));
        kv.set("ae_hidden", std::to_string(ae.hidden));
        kv.set("ae_epochs", std::to_string(ae.epochs));
        kv.set("ae_learning_rate", num(ae.learning_rate));
        kv.set("sparsity_target", num(ae.sparsity_target));
        kv.set("sparsity_weight", num(ae.sparsity_weight));
        kv.set("l2_weight", num(ae.l2_weight));
        kv.set("cnn_epochs", std::to_string(cnn.epochs));
        kv.set("cnn_learning_rate", num(cnn.learning_rate));
        kv.set("batch", std::to_string(ae.batch));
        if (!sweep.empty()) {
            kv.set("sweep", sweep);
            std::string vals;
            for (const auto& v : values) vals += (vals.empty() ? "" : ",") + v;
            kv.set("values", vals);
        }
        return kv;
    }

    /// Copy with one key replaced, re-validated; the sweep is dropped.
    ExperimentSpec with(const std::string& key, const std::string& value) const {
        auto kv = to_kv();
        kv.set(key, value);
        kv.set("sweep", "");
        kv.set("values", "");
        return from_kv(kv);
    }
};

struct Timings {
    double image_gen_ms = 0.0;        ///< one image from one chunk, normalization included
    double infer_ms_per_image = 0.0;  ///< one detector decision
};

struct EvalReport {
    std::string value;  ///< sweep value, empty without a sweep
    std::vector<double> per_fold_accuracy;
    double mean_accuracy = 0.0;
    Interval ci95;
    std::optional<double> snr_dr;
    Timings timings;
    std::size_t model_bytes = 0;
    std::size_t images_per_class = 0;
};

struct ExperimentReport {
    std::string name;
    std::string sweep;
    KeyValues config;
    std::vector<EvalReport> rows;
};

struct RunOptions {
    unsigned threads = 1;
    bool timings = true;
    std::function<void(const std::string&)> progress;
};

namespace detail {

struct FoldResult {
    double accuracy = 0.0;
    std::size_t model_bytes = 0;
    Timings timings;
};

inline imaging::AxisLimits limits_for(const ExperimentSpec& s) {
    return s.imaging == ImagingMode::Proposed ? imaging::kProposedLimits : imaging::legacy_limits(s.scenario.scheme);
}

inline FoldResult run_fold(const ExperimentSpec& spec, const std::vector<iq::IQChunk>& chunks, const Fold& fold,
                           std::size_t fold_index, bool timings) {
    const bool proposed = spec.imaging == ImagingMode::Proposed;
    const auto limits = limits_for(spec);

    // Normalization statistics come from the NoJam chunks of the training split only.
    iq::NormalizationStats stats;
    if (proposed) {
        std::vector<iq::IQChunk> ref;
        for (auto i : fold.train)
            if (chunks[i].label == Label::NoJam) ref.push_back(chunks[i]);
        stats = iq::compute_normalization(std::span<const iq::IQChunk>(ref));
    }
    auto make_image = [&](const iq::IQChunk& c) {
        return imaging::histogram_image(proposed ? iq::normalize(c, stats) : c, spec.side, spec.side, limits);
    };

    std::vector<std::size_t> picked;
    if (spec.detector == Detector::AE) {
        for (auto i : fold.train)
            if (chunks[i].label == Label::NoJam && picked.size() < spec.train_size) picked.push_back(i);
    } else {
        const std::size_t per_class = (spec.train_size + 1) / 2;
        std::size_t nj = 0, j = 0;
        for (auto i : fold.train) {
            auto& n = chunks[i].label == Label::Jam ? j : nj;
            if (n < per_class) {
                picked.push_back(i);
                ++n;
            }
        }
    }
    std::vector<imaging::GrayImage> train;
    for (auto i : picked) train.push_back(make_image(chunks[i]));
    const std::size_t base = train.size();
    for (auto a : spec.augment)
        for (std::size_t k = 0; k < base; ++k) train.push_back(imaging::augment(train[k], a));

    const std::uint64_t model_seed = mix_seed(spec.scenario.seed, 0x100 + fold_index);
    std::function<detectors::Verdict(const imaging::GrayImage&)> detect;
    FoldResult out;
    if (spec.detector == Detector::AE) {
        auto hyper = spec.ae;
        hyper.seed = model_seed;
        auto model = std::make_shared<detectors::AEModel>(detectors::ae_train(train, hyper));
        out.model_bytes = detectors::serialize(*model).size();
        detect = [model](const imaging::GrayImage& img) { return detectors::ae_detect(*model, img); };
    } else {
        auto hyper = spec.cnn;
        hyper.seed = model_seed;
        auto model = std::make_shared<detectors::CNNModel>(detectors::cnn_train(train, hyper));
        out.model_bytes = detectors::serialize(*model).size();
        detect = [model](const imaging::GrayImage& img) { return detectors::cnn_detect(*model, img); };
    }
    train.clear();

    ConfusionCounts cm;
    for (auto i : fold.test) cm.add(chunks[i].label, detect(make_image(chunks[i])).label);
    out.accuracy = accuracy(cm);

    if (timings) {
        const auto& probe = chunks[fold.test.front()];
        out.timings.image_gen_ms = median_ms(kTimingReps, [&] { (void)make_image(probe); });
        const auto img = make_image(probe);
        out.timings.infer_ms_per_image = median_ms(kTimingReps, [&] { (void)detect(img); });
    }
    return out;
}

/// Drops trailing chunks of the larger class so both classes have equal counts.
inline void balance(std::vector<iq::IQChunk>& chunks) {
    std::size_t nj = 0, j = 0;
    for (const auto& c : chunks) ++(c.label == Label::Jam ? j : nj);
    std::size_t keep_nj = std::min(nj, j), keep_j = keep_nj;
    std::vector<iq::IQChunk> out;
    for (auto& c : chunks) {
        auto& left = c.label == Label::Jam ? keep_j : keep_nj;
        if (left > 0) {
            --left;
            out.push_back(std::move(c));
        }
    }
    chunks = std::move(out);
}

}  // namespace detail

/// One K-fold evaluation of a single (non-swept) configuration.
inline EvalReport evaluate(const ExperimentSpec& spec, const RunOptions& opt = {}) {
    const std::size_t per_class = spec.images_per_class();
    auto ds = linksim::gen_dataset(spec.scenario, spec.samples_per_image, per_class, spec.require_weak);
    EvalReport rep;
    rep.images_per_class = per_class;
    rep.snr_dr = snr_dr(ds.jam_stream, ds.nojam_stream);

    std::vector<iq::IQChunk> chunks = std::move(ds.chunks);
    if (spec.low_ber) {
        chunks = low_ber_filter(chunks);
        if (spec.detector == Detector::CNN) detail::balance(chunks);
    }
    std::vector<Label> labels;
    for (const auto& c : chunks) labels.push_back(c.label);
    const auto folds = kfold_split(labels, spec.folds, mix_seed(spec.scenario.seed, 0xf01d));

    std::vector<detail::FoldResult> results(folds.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    auto worker = [&] {
        for (std::size_t f; (f = next.fetch_add(1)) < folds.size();) {
            try {
                results[f] = detail::run_fold(spec, chunks, folds[f], f, opt.timings && f == 0);
                if (opt.progress) opt.progress("fold " + std::to_string(f + 1) + "/" + std::to_string(folds.size()) +
                                               " accuracy " + detail::num(results[f].accuracy));
            } catch (...) {
                std::lock_guard lk(err_mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(folds.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);

    for (const auto& r : results) rep.per_fold_accuracy.push_back(r.accuracy);
    rep.mean_accuracy = std::accumulate(rep.per_fold_accuracy.begin(), rep.per_fold_accuracy.end(), 0.0) /
                        static_cast<double>(results.size());
    rep.ci95 = ci95(rep.per_fold_accuracy);
    rep.model_bytes = results.front().model_bytes;
    rep.timings = results.front().timings;
    return rep;
}

/// Runs every sweep value (or the single configuration). Pure in (spec, seed).
inline ExperimentReport run_experiment(const ExperimentSpec& spec, const RunOptions& opt = {}) {
    ExperimentReport out;
    out.name = spec.scenario.name;
    out.sweep = spec.sweep;
    out.config = spec.to_kv();
    if (spec.sweep.empty()) {
        out.rows.push_back(evaluate(spec, opt));
        return out;
    }
    for (const auto& v : spec.values) {
        if (opt.progress) opt.progress(spec.sweep + " = " + v);
        auto row = evaluate(spec.with(spec.sweep, v), opt);
        row.value = v;
        out.rows.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report writers. The CSV leaves out wall-clock timings so that reruns are
// byte-identical; the JSON summary carries them.

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string to_csv(const ExperimentReport& r) {
    std::string out = "experiment,sweep,value,fold,accuracy,ci_lo,ci_hi,snr_dr\n";
    for (const auto& row : r.rows) {
        const std::string prefix = r.name + "," + r.sweep + "," + row.value + ",";
        for (std::size_t f = 0; f < row.per_fold_accuracy.size(); ++f)
            out += prefix + std::to_string(f + 1) + "," + fixed6(row.per_fold_accuracy[f]) + ",,,\n";
        out += prefix + "mean," + fixed6(row.mean_accuracy) + "," + fixed6(row.ci95.lo) + "," + fixed6(row.ci95.hi) +
               "," + (row.snr_dr ? fixed6(*row.snr_dr) : "") + "\n";
    }
    return out;
}

inline nlohmann::json to_json(const ExperimentReport& r) {
    nlohmann::json j;
    j["experiment"] = r.name;
    j["sweep"] = r.sweep;
    j["config"] = r.config.entries();
    j["rows"] = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json jr;
        jr["value"] = row.value;
        jr["per_fold_accuracy"] = row.per_fold_accuracy;
        jr["mean_accuracy"] = row.mean_accuracy;
        jr["ci95"] = {row.ci95.lo, row.ci95.hi};
        jr["snr_dr"] = row.snr_dr ? nlohmann::json(*row.snr_dr) : nlohmann::json(nullptr);
        jr["timings"] = {{"image_gen_ms", row.timings.image_gen_ms},
                         {"infer_ms_per_image", row.timings.infer_ms_per_image}};
        jr["model_bytes"] = row.model_bytes;
        jr["images_per_class"] = row.images_per_class;
        j["rows"].push_back(std::move(jr));
    }
    return j;
}

/// Accuracy against the sweep value, with 95% CI whiskers.
inline std::string to_svg(const ExperimentReport& r) {
    constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 60;
    const std::size_t n = r.rows.size();
    auto x_of = [&](std::size_t i) { return L + (W - L - R) * (n == 1 ? 0.5 : static_cast<double>(i) / (n - 1)); };
    auto y_of = [&](double a) { return T + (H - T - B) * (1.0 - std::clamp(a, 0.0, 1.0)); };
    auto f = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" font-family=\"sans-serif\" "
                    "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + f(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + r.name + "</text>\n";
    for (int k = 0; k <= 5; ++k) {
        const double a = k / 5.0, y = y_of(a);
        s += "<line x1=\"" + f(L) + "\" y1=\"" + f(y) + "\" x2=\"" + f(W - R) + "\" y2=\"" + f(y) +
             "\" stroke=\"#ddd\"/>\n";
        s += "<text x=\"" + f(L - 8) + "\" y=\"" + f(y + 4) + "\" text-anchor=\"end\">" + f(a) + "</text>\n";
    }
    s += "<text x=\"18\" y=\"" + f(H / 2) + "\" transform=\"rotate(-90 18 " + f(H / 2) +
         ")\" text-anchor=\"middle\">accuracy</text>\n";
    s += "<text x=\"" + f(W / 2) + "\" y=\"" + f(H - 14) + "\" text-anchor=\"middle\">" +
         (r.sweep.empty() ? std::string("configuration") : r.sweep) + "</text>\n";
    std::string path;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = r.rows[i];
        const double x = x_of(i);
        s += "<line x1=\"" + f(x) + "\" y1=\"" + f(y_of(row.ci95.lo)) + "\" x2=\"" + f(x) + "\" y2=\"" +
             f(y_of(row.ci95.hi)) + "\" stroke=\"#1f77b4\"/>\n";
        for (double a : {row.ci95.lo, row.ci95.hi})
            s += "<line x1=\"" + f(x - 5) + "\" y1=\"" + f(y_of(a)) + "\" x2=\"" + f(x + 5) + "\" y2=\"" + f(y_of(a)) +
                 "\" stroke=\"#1f77b4\"/>\n";
        s += "<circle cx=\"" + f(x) + "\" cy=\"" + f(y_of(row.mean_accuracy)) + "\" r=\"4\" fill=\"#1f77b4\"/>\n";
        s += "<text x=\"" + f(x) + "\" y=\"" + f(H - B + 18) + "\" text-anchor=\"middle\">" +
             (row.value.empty() ? r.name : row.value) + "</text>\n";
        path += (i ? " L " : "M ") + f(x) + " " + f(y_of(row.mean_accuracy));
    }
    if (n > 1) s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#1f77b4\"/>\n";
    s += "</svg>\n";
    return s;
}

/// Reads a report back from its JSON summary (used to re-plot).
inline ExperimentReport from_json(const nlohmann::json& j) {
    ExperimentReport r;
    r.name = j.at("experiment").get<std::string>();
    r.sweep = j.at("sweep").get<std::string>();
    for (const auto& [k, v] : j.at("config").items()) r.config.set(k, v.get<std::string>());
    for (const auto& jr : j.at("rows")) {
        EvalReport row;
        row.value = jr.at("value").get<std::string>();
        row.per_fold_accuracy = jr.at("per_fold_accuracy").get<std::vector<double>>();
        row.mean_accuracy = jr.at("mean_accuracy").get<double>();
        row.ci95 = {jr.at("ci95").at(0).get<double>(), jr.at("ci95").at(1).get<double>()};
        if (!jr.at("snr_dr").is_null()) row.snr_dr = jr.at("snr_dr").get<double>();
        row.timings.image_gen_ms = jr.at("timings").at("image_gen_ms").get<double>();
        row.timings.infer_ms_per_image = jr.at("timings").at("infer_ms_per_image").get<double>();
        row.model_bytes = jr.at("model_bytes").get<std::size_t>();
        row.images_per_class = jr.at("images_per_class").get<std::size_t>();
        r.rows.push_back(std::move(row));
    }
    return r;
}

}  // namespace jamsentry::eval
