// jamsentry command-line front end.
//
// Exit codes: 0 ok, 1 usage, 2 data/format error, 3 scenario rejected.

#include <jamsentry/autoencoder.hpp>
#include <jamsentry/cnn.hpp>
#include <jamsentry/evalkit.hpp>
#include <jamsentry/experiment.hpp>
#include <jamsentry/imaging.hpp>
#include <jamsentry/iq.hpp>
#include <jamsentry/linksim.hpp>
#include <jamsentry/presets.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace jamsentry;
using nlohmann::json;

namespace {

constexpr double kExportFullScale = 8.0;  // soft symbols stay well inside int16 range

struct UsageError : Error {
    using Error::Error;
};

std::string sha256_hex(const fs::path& path) {
    const auto bytes = iq::read_bytes(path);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 failed for " + path.string());
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("short write to " + path.string());
}

/// Output directory plus the list of files written into it.
class OutDir {
public:
    explicit OutDir(const std::string& dir) : root_(dir) {
        if (dir.empty()) throw UsageError("--out must not be empty");
        fs::create_directories(root_);
    }

    fs::path path(const std::string& name) {
        record(name);
        return root_ / name;
    }

    void record(const std::string& name) { artifacts_.push_back(name); }

    void text(const std::string& name, const std::string& content) { write_text(path(name), content); }

    /// manifest.json: command, seed, config and SHA-256 of every artifact.
    void manifest(const std::string& command, std::optional<std::uint64_t> seed, const KeyValues* config,
                  const json& extra = json::object()) {
        json j;
        j["tool"] = "jamsentry";
        j["command"] = command;
        if (seed) j["seed"] = *seed;
        if (config) j["config"] = config->entries();
        json art = json::object();
        for (const auto& a : artifacts_) art[a] = sha256_hex(root_ / a);
        j["artifacts"] = art;
        for (const auto& [k, v] : extra.items()) j[k] = v;
        write_text(root_ / "manifest.json", j.dump(2) + "\n");
    }

private:
    fs::path root_;
    std::vector<std::string> artifacts_;
};

std::string default_out() {
    const char* env = std::getenv("JAMSENTRY_OUT");
    return env && *env ? env : "out";
}

// Scenario/experiment flags shared by gen and eval.
struct ScenarioFlags {
    std::string preset, config, manifest;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples_per_image, train_size;
    std::optional<std::string> scheme, jammer, detector, imaging;
    std::optional<double> snr_db, jsr_db, jor, threshold_mult;
    std::vector<std::string> set;

    void add(CLI::App* app) {
        app->add_option("--preset", preset, "built-in preset (" + join(presets::names()) + ")");
        app->add_option("--config", config, "key = value experiment file")->check(CLI::ExistingFile);
        app->add_option("--from-manifest", manifest, "re-run the configuration stored in a manifest.json")
            ->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "master seed");
        app->add_option("--samples-per-image", samples_per_image, "IQ samples per image");
        app->add_option("--scheme", scheme, "bpsk|qpsk|qam16|qam64");
        app->add_option("--snr-db", snr_db, "link SNR in dB");
        app->add_option("--jsr-db", jsr_db, "jammer-to-signal ratio in dB");
        app->add_option("--jammer", jammer, "none|awgn|deceptive");
        app->add_option("--jor", jor, "jammer oversampling ratio");
        app->add_option("--threshold-mult", threshold_mult, "autoencoder threshold multiplier (default 3.5)");
        app->add_option("--train-size", train_size, "training images (AE: NoJam; CNN: both classes)");
        app->add_option("--detector", detector, "ae|cnn");
        app->add_option("--imaging", imaging, "proposed|legacy");
        app->add_option("--set", set, "extra key=value override (repeatable)");
    }

    static std::string join(const std::vector<std::string_view>& v) {
        std::string s;
        for (auto x : v) s += (s.empty() ? "" : ", ") + std::string(x);
        return s;
    }

    KeyValues resolve() const {
        const int sources = !preset.empty() + !config.empty() + !manifest.empty();
        if (sources > 1) throw UsageError("use only one of --preset, --config, --from-manifest");
        KeyValues kv;
        if (!preset.empty()) kv = presets::load(preset);
        if (!config.empty()) kv = KeyValues::load(config);
        if (!manifest.empty()) {
            std::ifstream is(manifest);
            json j;
            try {
                j = json::parse(is);
                for (const auto& [k, v] : j.at("config").items()) kv.set(k, v.get<std::string>());
            } catch (const json::exception& e) {
                throw FormatError("bad manifest " + manifest + ": " + e.what());
            }
        }
        std::vector<std::string> overridden;
        auto put = [&](const char* key, const auto& v) {
            if (!v) return;
            overridden.push_back(key);
            if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>)
                kv.set(key, *v);
            else if constexpr (std::is_floating_point_v<std::decay_t<decltype(*v)>>)
                kv.set(key, eval::detail::num(*v));
            else
                kv.set(key, std::to_string(*v));
        };
        put("seed", seed);
        put("samples_per_image", samples_per_image);
        put("train_size", train_size);
        put("scheme", scheme);
        put("jammer", jammer);
        put("detector", detector);
        put("imaging", imaging);
        put("snr_db", snr_db);
        put("jsr_db", jsr_db);
        put("jor", jor);
        put("threshold_mult", threshold_mult);
        for (const auto& s : set) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
            kv.set(s.substr(0, eq), s.substr(eq + 1));
            overridden.push_back(s.substr(0, eq));
        }
        // An explicit value for the swept key turns the sweep into a single run.
        const auto swept = kv.get("sweep", "");
        if (!swept.empty() && std::find(overridden.begin(), overridden.end(), swept) != overridden.end()) {
            kv.set("sweep", "");
            kv.set("values", "");
        }
        return kv;
    }

    /// Parses and validates before any work; bad values are usage errors.
    eval::ExperimentSpec spec(KeyValues& kv) const {
        try {
            kv = resolve();
            auto s = eval::ExperimentSpec::from_kv(kv);
            kv = s.to_kv();
            return s;
        } catch (const UsageError&) {
            throw;
        } catch (const ParameterError& e) {
            throw UsageError(e.what());
        } catch (const FormatError& e) {
            if (!manifest.empty() || !config.empty()) throw;
            throw UsageError(e.what());
        }
    }
};

void log(const std::string& s) { std::cerr << s << '\n'; }

// ---------------------------------------------------------------------------

int cmd_gen(const ScenarioFlags& flags, const std::string& out_dir, std::optional<std::size_t> images) {
    KeyValues kv;
    auto spec = flags.spec(kv);
    if (!spec.sweep.empty()) spec = spec.with("sweep", "");
    const std::size_t per_class = images ? *images : spec.images_per_class();
    if (per_class == 0) throw UsageError("--images must be > 0");
    OutDir out(out_dir);
    const auto ds = linksim::gen_dataset(spec.scenario, spec.samples_per_image, per_class, spec.require_weak);

    for (const auto* rec : {&ds.nojam_stream, &ds.jam_stream}) {
        const std::string name = std::string(iq::to_string(rec->label)) + ".fc16";
        const auto path = out.path(name);
        iq::write_fc16(*rec, path, kExportFullScale);
        iq::write_sidecar(path, {rec->sample_rate_sps, rec->label, spec.scenario.name, kExportFullScale});
        out.record(iq::sidecar_path(name).string());
    }
    std::string chunks = "index,label,ser\n";
    for (std::size_t i = 0; i < ds.chunks.size(); ++i)
        chunks += std::to_string(i) + "," + std::string(iq::to_string(ds.chunks[i].label)) + "," +
                  eval::fixed6(ds.chunks[i].ser.value_or(0.0)) + "\n";
    out.text("chunks.csv", chunks);
    out.text("scenario.cfg", kv.dump());
    const double dr = eval::snr_dr(ds.jam_stream, ds.nojam_stream);
    out.manifest("gen", spec.scenario.seed, &kv,
                 {{"images_per_class", per_class}, {"samples_per_image", spec.samples_per_image}, {"snr_dr", dr}});
    std::cout << "wrote " << 2 * per_class << " chunks of " << spec.samples_per_image << " samples to " << out_dir
              << " (SNR_DR " << dr << ")\n";
    return 0;
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::optional<std::string>& label,
               std::optional<double> rate, const std::string& out_dir) {
    if (inputs.empty()) throw UsageError("ingest needs at least one --input");
    std::optional<iq::Label> forced;
    if (label) {
        try {
            forced = iq::label_from_string(*label);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    if (rate && !(*rate > 0.0)) throw UsageError("--sample-rate must be > 0");
    OutDir out(out_dir);
    json summary = json::array();
    for (const auto& in : inputs) {
        auto meta = iq::read_sidecar(in).value_or(iq::RecordingMeta{});
        if (forced) meta.label = *forced;
        if (rate) meta.sample_rate_sps = *rate;
        const auto rec = iq::read_fc16(in, meta);
        iq::validate(rec);
        const auto name = fs::path(in).filename().string();
        const auto path = out.path(name);
        if (!fs::exists(path) || !fs::equivalent(in, path)) fs::copy_file(in, path, fs::copy_options::overwrite_existing);
        iq::write_sidecar(path, meta);
        out.record(iq::sidecar_path(name).string());
        const double snr = eval::snr_m2m4(rec.samples);
        summary.push_back({{"file", name},
                           {"samples", rec.samples.size()},
                           {"duration_s", iq::chunk_duration_s(rec.samples.size(), rec.sample_rate_sps)},
                           {"label", iq::to_string(rec.label)},
                           {"snr_m2m4_db", snr > 0.0 ? 10.0 * std::log10(snr) : -999.0}});
        std::cout << name << ": " << rec.samples.size() << " samples, " << iq::to_string(rec.label) << "\n";
    }
    out.text("ingest.json", summary.dump(2) + "\n");
    out.manifest("ingest", std::nullopt, nullptr);
    return 0;
}

int cmd_imageize(const std::vector<std::string>& inputs, std::size_t n, std::size_t side, const std::string& mode,
                 const std::optional<std::string>& scheme, const std::optional<std::string>& stats_in,
                 std::size_t png, const std::string& out_dir) {
    if (inputs.empty()) throw UsageError("imageize needs at least one --input");
    if (n < 2) throw UsageError("--samples-per-image must be >= 2");
    if (side < 2) throw UsageError("--side must be >= 2");
    eval::ImagingMode im;
    imaging::AxisLimits limits = imaging::kProposedLimits;
    try {
        im = eval::imaging_from_string(mode);
        if (im == eval::ImagingMode::Legacy) {
            if (!scheme) throw UsageError("legacy imaging needs --scheme");
            limits = imaging::legacy_limits(linksim::scheme_from_string(*scheme));
        }
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }

    std::vector<iq::IQRecording> recs;
    for (const auto& in : inputs) recs.push_back(iq::read_fc16(in));
    std::vector<iq::IQChunk> chunks;
    for (const auto& r : recs)
        for (auto& c : iq::chunk(r, n)) chunks.push_back(std::move(c));
    if (chunks.empty()) throw EmptyInputError("recordings are shorter than one image");

    OutDir out(out_dir);
    iq::NormalizationStats stats{1.0, 1.0};
    if (im == eval::ImagingMode::Proposed) {
        if (stats_in) {
            std::ifstream is(*stats_in);
            if (!is) throw IoError("cannot open " + *stats_in);
            try {
                const auto j = json::parse(is);
                stats = {j.at("i_max").get<double>(), j.at("q_max").get<double>()};
            } catch (const json::exception& e) {
                throw FormatError("bad stats file: " + std::string(e.what()));
            }
        } else {
            std::vector<iq::IQChunk> ref;
            for (const auto& c : chunks)
                if (c.label == iq::Label::NoJam) ref.push_back(c);
            stats = iq::compute_normalization(std::span<const iq::IQChunk>(ref.empty() ? chunks : ref));
        }
        out.text("normalization.json", json{{"i_max", stats.i_max}, {"q_max", stats.q_max}}.dump(2) + "\n");
    }
    std::vector<imaging::GrayImage> images;
    std::size_t dropped = 0;
    std::map<iq::Label, std::size_t> exported;
    for (const auto& c : chunks) {
        auto img = imaging::histogram_image(im == eval::ImagingMode::Proposed ? iq::normalize(c, stats) : c, side, side,
                                            limits);
        dropped += img.dropped;
        if (exported[img.label] < png) {
            const auto name = std::string(iq::to_string(img.label)) + "_" + std::to_string(exported[img.label]++) + ".png";
            imaging::export_png(img, out.path(name));
        }
        images.push_back(std::move(img));
    }
    imaging::save_cache(images, out.path("images.jsimg"));
    out.manifest("imageize", std::nullopt, nullptr,
                 {{"samples_per_image", n}, {"side", side}, {"imaging", mode}, {"images", images.size()}});
    std::cout << images.size() << " images (" << dropped << " samples outside the axis limits)\n";
    return 0;
}

std::vector<imaging::GrayImage> take(std::vector<imaging::GrayImage> all, std::optional<std::size_t> limit,
                                     bool nojam_only) {
    std::vector<imaging::GrayImage> out;
    std::map<iq::Label, std::size_t> count;
    for (auto& img : all) {
        if (nojam_only && img.label != iq::Label::NoJam) continue;
        const std::size_t cap = !limit ? SIZE_MAX : nojam_only ? *limit : (*limit + 1) / 2;
        if (count[img.label]++ < cap) out.push_back(std::move(img));
    }
    return out;
}

int cmd_train_ae(const std::string& images, std::optional<std::size_t> train_size, detectors::AEHyper hyper,
                 const std::string& out_dir) {
    auto set = take(imaging::load_cache(images), train_size, true);
    OutDir out(out_dir);
    std::vector<detectors::AETrainLogEntry> log_entries;
    const auto model = detectors::ae_train(set, hyper, &log_entries);
    detectors::save_model(model, out.path("model.aem"));
    std::string csv = "epoch,loss,mean_mse\n";
    for (const auto& e : log_entries)
        csv += std::to_string(e.epoch) + "," + eval::detail::num(e.loss) + "," + eval::detail::num(e.mean_mse) + "\n";
    out.text("train_log.csv", csv);
    out.manifest("train-ae", hyper.seed, nullptr, {{"images", set.size()}, {"threshold", model.threshold}});
    std::cout << "trained on " << set.size() << " NoJam images, threshold " << model.threshold << "\n";
    return 0;
}

int cmd_train_cnn(const std::string& images, std::optional<std::size_t> train_size, detectors::CnnHyper hyper,
                  const std::string& out_dir) {
    auto set = take(imaging::load_cache(images), train_size, false);
    OutDir out(out_dir);
    std::vector<detectors::CnnTrainLogEntry> log_entries;
    const auto model = detectors::cnn_train(set, hyper, &log_entries);
    detectors::save_model(model, out.path("model.cnm"));
    std::string csv = "epoch,loss\n";
    for (const auto& e : log_entries) csv += std::to_string(e.epoch) + "," + eval::detail::num(e.loss) + "\n";
    out.text("train_log.csv", csv);
    out.manifest("train-cnn", hyper.seed, nullptr, {{"images", set.size()}});
    std::cout << "trained on " << set.size() << " images, final loss " << log_entries.back().loss << "\n";
    return 0;
}

int cmd_detect(const std::string& model_path, const std::string& images, std::optional<double> mult,
               const std::string& out_dir) {
    const auto bytes = binio::read_file(model_path);
    const std::string magic(bytes.begin(), bytes.begin() + std::min<std::size_t>(8, bytes.size()));
    std::function<detectors::Verdict(const imaging::GrayImage&)> detect;
    if (magic == detectors::kAeMagic) {
        auto m = std::make_shared<detectors::AEModel>(detectors::deserialize_ae(bytes));
        if (mult) m->threshold = m->mse_train_mean + *mult * m->mse_train_std;
        detect = [m](const imaging::GrayImage& img) { return detectors::ae_detect(*m, img); };
    } else if (magic == detectors::kCnnMagic) {
        if (mult) throw UsageError("--threshold-mult applies to autoencoder models only");
        auto m = std::make_shared<detectors::CNNModel>(detectors::deserialize_cnn(bytes));
        detect = [m](const imaging::GrayImage& img) { return detectors::cnn_detect(*m, img); };
    } else {
        throw FormatError(model_path + " is not a jamsentry model");
    }
    const auto set = imaging::load_cache(images);
    OutDir out(out_dir);
    eval::ConfusionCounts cm;
    std::string csv = "index,truth,verdict,score\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto v = detect(set[i]);
        cm.add(set[i].label, v.label);
        csv += std::to_string(i) + "," + std::string(iq::to_string(set[i].label)) + "," +
               std::string(iq::to_string(v.label)) + "," + eval::detail::num(v.score) + "\n";
    }
    out.text("verdicts.csv", csv);
    const double acc = eval::accuracy(cm);
    out.manifest("detect", std::nullopt, nullptr,
                 {{"accuracy", acc}, {"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}});
    std::cout << "accuracy " << acc << " (tp " << cm.tp << ", tn " << cm.tn << ", fp " << cm.fp << ", fn " << cm.fn
              << ")\n";
    return 0;
}

int cmd_eval(const ScenarioFlags& flags, unsigned threads, const std::string& out_dir) {
    KeyValues kv;
    const auto spec = flags.spec(kv);
    if (threads == 0) throw UsageError("--threads must be >= 1");
    OutDir out(out_dir);
    eval::RunOptions opt;
    opt.threads = threads;
    opt.progress = log;
    const auto report = eval::run_experiment(spec, opt);
    const auto csv = eval::to_csv(report);
    out.text("report.csv", csv);
    out.text("report.json", eval::to_json(report).dump(2) + "\n");
    out.text("report.svg", eval::to_svg(report));
    out.manifest("eval", spec.scenario.seed, &kv);
    std::cout << csv;
    return 0;
}

int cmd_bench(std::size_t n, std::size_t side, std::uint64_t seed, const std::string& out_dir) {
    if (n < 2) throw UsageError("--samples-per-image must be >= 2");
    if (side < 4) throw UsageError("--side must be >= 4");
    linksim::ScenarioConfig cfg;
    cfg.seed = seed;
    const auto ds = linksim::gen_dataset(cfg, n, 1);
    const auto& chunk = ds.chunks.back();
    const auto stats = iq::compute_normalization(std::span<const iq::IQChunk>(&ds.chunks.front(), 1));
    const double gen_ms = eval::median_ms(eval::kTimingReps, [&] {
        (void)imaging::histogram_image(iq::normalize(chunk, stats), side, side);
    });
    const auto img = imaging::histogram_image(iq::normalize(chunk, stats), side, side);

    auto ae = detectors::make_ae(side, side, 16);
    ae.fitted = true;
    auto cnn = detectors::make_cnn(side, side, {}, seed);
    const double ae_ms = eval::median_ms(eval::kTimingReps, [&] { (void)detectors::ae_detect(ae, img); });
    const double cnn_ms = eval::median_ms(eval::kTimingReps, [&] { (void)detectors::cnn_detect(cnn, img); });

    OutDir out(out_dir);
    const json j{{"samples_per_image", n},
                 {"side", side},
                 {"repetitions", eval::kTimingReps},
                 {"image_gen_ms", gen_ms},
                 {"ae_infer_ms_per_image", ae_ms},
                 {"cnn_infer_ms_per_image", cnn_ms},
                 {"cnn_over_ae", cnn_ms / ae_ms},
                 {"ae_model_bytes", detectors::serialize(ae).size()},
                 {"cnn_model_bytes", detectors::serialize(cnn).size()}};
    out.text("bench.json", j.dump(2) + "\n");
    out.manifest("bench", seed, nullptr);
    std::cout << "image_gen_ms " << gen_ms << " (" << n << " samples)\n"
              << "ae_infer_ms_per_image " << ae_ms << "\n"
              << "cnn_infer_ms_per_image " << cnn_ms << "\n"
              << "cnn_over_ae " << cnn_ms / ae_ms << "\n";
    return 0;
}

int cmd_export_plots(const std::string& report_path, const std::string& out_dir) {
    std::ifstream is(report_path);
    if (!is) throw IoError("cannot open " + report_path);
    eval::ExperimentReport report;
    try {
        report = eval::from_json(json::parse(is));
    } catch (const json::exception& e) {
        throw FormatError("bad report " + report_path + ": " + e.what());
    }
    OutDir out(out_dir);
    out.text("report.svg", eval::to_svg(report));
    out.manifest("export-plots", std::nullopt, nullptr);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jamming detection from IQ constellation images"};
    app.require_subcommand(1);
    std::string out = default_out();
    unsigned threads = 1;
    auto add_out = [&](CLI::App* c) { c->add_option("--out", out, "output directory (env JAMSENTRY_OUT)"); };

    ScenarioFlags gen_flags, eval_flags;
    std::optional<std::size_t> gen_images;
    auto* gen = app.add_subcommand("gen", "simulate a NoJam/Jam capture pair");
    gen_flags.add(gen);
    gen->add_option("--images", gen_images, "images per class (default: what the experiment needs)");
    add_out(gen);

    std::vector<std::string> inputs;
    std::optional<std::string> label, scheme, stats;
    std::optional<double> rate, mult;
    auto* ingest = app.add_subcommand("ingest", "import fc16 captures");
    ingest->add_option("--input", inputs, "fc16 file (repeatable)")->check(CLI::ExistingFile);
    ingest->add_option("--label", label, "jam|nojam");
    ingest->add_option("--sample-rate", rate, "samples per second");
    add_out(ingest);

    std::size_t n = 10'000, side = imaging::kDefaultSide, png = 2;
    std::string mode = "proposed";
    auto* imageize = app.add_subcommand("imageize", "turn captures into histogram images");
    imageize->add_option("--input", inputs, "fc16 file (repeatable)")->check(CLI::ExistingFile);
    imageize->add_option("--samples-per-image", n, "IQ samples per image");
    imageize->add_option("--side", side, "image side in pixels");
    imageize->add_option("--imaging", mode, "proposed|legacy");
    imageize->add_option("--scheme", scheme, "modulation, for legacy axis limits");
    imageize->add_option("--stats", stats, "reuse normalization.json")->check(CLI::ExistingFile);
    imageize->add_option("--png", png, "PNG previews per class");
    add_out(imageize);

    std::string images, model;
    std::optional<std::size_t> train_size, epochs;
    std::uint64_t seed = 1;
    detectors::AEHyper ae;
    auto* train_ae = app.add_subcommand("train-ae", "train the sparse autoencoder on NoJam images");
    train_ae->add_option("--images", images, "image cache")->required()->check(CLI::ExistingFile);
    train_ae->add_option("--train-size", train_size, "use at most this many NoJam images");
    train_ae->add_option("--threshold-mult", ae.threshold_mult, "threshold multiplier (default 3.5)");
    train_ae->add_option("--sparsity-target", ae.sparsity_target, "target hidden activation");
    train_ae->add_option("--epochs", epochs, "training epochs (default 250)");
    train_ae->add_option("--seed", seed, "seed");
    add_out(train_ae);

    detectors::CnnHyper cnn;
    auto* train_cnn = app.add_subcommand("train-cnn", "train the CNN on labelled images");
    train_cnn->add_option("--images", images, "image cache")->required()->check(CLI::ExistingFile);
    train_cnn->add_option("--train-size", train_size, "use at most this many images, split evenly");
    train_cnn->add_option("--epochs", epochs, "training epochs (default 30)");
    train_cnn->add_option("--seed", seed, "seed");
    add_out(train_cnn);

    auto* detect = app.add_subcommand("detect", "classify images with a trained model");
    detect->add_option("--model", model, "model.aem or model.cnm")->required()->check(CLI::ExistingFile);
    detect->add_option("--images", images, "image cache")->required()->check(CLI::ExistingFile);
    detect->add_option("--threshold-mult", mult, "override the autoencoder threshold multiplier");
    add_out(detect);

    auto* evalc = app.add_subcommand("eval", "K-fold evaluation of a preset or configuration");
    eval_flags.add(evalc);
    evalc->add_option("--threads", threads, "parallel folds (results do not depend on it)");
    add_out(evalc);

    auto* bench = app.add_subcommand("bench", "time image generation and inference");
    std::size_t bench_n = 100'000;
    bench->add_option("--samples-per-image", bench_n, "IQ samples per image");
    bench->add_option("--side", side, "image side in pixels");
    bench->add_option("--seed", seed, "seed");
    add_out(bench);

    std::string report;
    auto* plots = app.add_subcommand("export-plots", "render report.json as SVG");
    plots->add_option("--report", report, "report.json")->required()->check(CLI::ExistingFile);
    add_out(plots);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_flags, out, gen_images);
        if (ingest->parsed()) return cmd_ingest(inputs, label, rate, out);
        if (imageize->parsed()) return cmd_imageize(inputs, n, side, mode, scheme, stats, png, out);
        if (train_ae->parsed()) {
            ae.seed = seed;
            if (epochs) ae.epochs = *epochs;
            if (ae.epochs == 0) throw UsageError("--epochs must be > 0");
            if (!(ae.sparsity_target > 0.0 && ae.sparsity_target < 1.0))
                throw UsageError("--sparsity-target must be in (0, 1)");
            return cmd_train_ae(images, train_size, ae, out);
        }
        if (train_cnn->parsed()) {
            cnn.seed = seed;
            if (epochs) cnn.epochs = *epochs;
            if (cnn.epochs == 0) throw UsageError("--epochs must be > 0");
            return cmd_train_cnn(images, train_size, cnn, out);
        }
        if (detect->parsed()) return cmd_detect(model, images, mult, out);
        if (evalc->parsed()) return cmd_eval(eval_flags, threads, out);
        if (bench->parsed()) return cmd_bench(bench_n, side, seed, out);
        if (plots->parsed()) return cmd_export_plots(report, out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const ScenarioRejected& e) {
        std::cerr << "scenario rejected: " << e.what() << "\n";
        return 3;
    } catch (const ParameterError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
