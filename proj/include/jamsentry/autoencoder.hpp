#pragma once

// Sparse autoencoder anomaly detector: logsig encoder with K hidden units,
// linear decoder back to J = P*Q pixels, reconstruction-MSE threshold
// tau = mean + 3.5 * std over the training set.

#include <jamsentry/binio.hpp>
#include <jamsentry/error.hpp>
#include <jamsentry/imaging.hpp>
#include <jamsentry/rng.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace jamsentry::detectors {

using imaging::GrayImage;
using iq::Label;

struct Verdict {
    Label label = Label::NoJam;
    /// AE: reconstruction MSE. CNN: jam-class probability.
    double score = 0.0;
};

inline constexpr double kDefaultThresholdMult = 3.5;

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and sample standard deviation (n - 1 denominator; a singleton has std 0).
inline MeanStd mean_sample_std(std::span<const double> v) {
    if (v.empty()) throw DataError("mean/std of an empty sequence");
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

/// mean + mult * sample std (n - 1 denominator; a singleton has std 0).
inline double compute_threshold(std::span<const double> mses, double mult = kDefaultThresholdMult) {
    if (mses.empty()) throw DataError("cannot compute a threshold from an empty MSE list");
    const auto [mean, sd] = mean_sample_std(mses);
    return mean + mult * sd;
}

struct AEHyper {
    std::size_t hidden = 16;
    double sparsity_weight = 0.5;   // beta
    double sparsity_target = 0.05;  // rho
    double l2_weight = 0.01;        // lambda
    std::size_t epochs = 250;
    std::size_t batch = 35;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double threshold_mult = kDefaultThresholdMult;
    std::uint64_t seed = 1;
};

struct AEModel {
    std::size_t width = 0, height = 0;  ///< image shape the model was fit on
    std::size_t input_dim = 0;          ///< J
    std::size_t hidden_dim = 0;         ///< K
    /// Encoder weights, stored input-major: w1[i * K + k] connects pixel i to unit k.
    std::vector<double> w1, b1;
    /// Decoder weights, w2[j * K + k] connects unit k to output pixel j.
    std::vector<double> w2, b2;
    double sparsity_weight = 0.5;
    double sparsity_target = 0.05;
    double l2_weight = 0.01;
    double threshold_mult = kDefaultThresholdMult;
    double threshold = 0.0;  ///< tau
    double mse_train_mean = 0.0;
    double mse_train_std = 0.0;
    bool fitted = false;

    std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

inline double logsig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Zero weights and biases of the given shape.
inline AEModel make_ae(std::size_t width, std::size_t height, std::size_t hidden) {
    AEModel m;
    m.width = width;
    m.height = height;
    m.input_dim = width * height;
    m.hidden_dim = hidden;
    if (hidden == 0 || hidden >= m.input_dim) throw ParameterError("hidden size must be in [1, J)");
    m.w1.assign(m.input_dim * hidden, 0.0);
    m.b1.assign(hidden, 0.0);
    m.w2.assign(m.input_dim * hidden, 0.0);
    m.b2.assign(m.input_dim, 0.0);
    return m;
}

struct AEForward {
    std::vector<double> hidden;
    std::vector<double> reconstruction;
    double mse = 0.0;
};

namespace detail {

inline void encode(const AEModel& m, std::span<const double> x, std::span<double> h) {
    const std::size_t K = m.hidden_dim;
    std::copy(m.b1.begin(), m.b1.end(), h.begin());
    for (std::size_t i = 0; i < m.input_dim; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* w = &m.w1[i * K];
        for (std::size_t k = 0; k < K; ++k) h[k] += w[k] * xi;
    }
    for (auto& v : h) v = logsig(v);
}

inline void decode(const AEModel& m, std::span<const double> h, std::span<double> out) {
    const std::size_t K = m.hidden_dim;
    for (std::size_t j = 0; j < m.input_dim; ++j) {
        const double* w = &m.w2[j * K];
        double acc = m.b2[j];
        for (std::size_t k = 0; k < K; ++k) acc += w[k] * h[k];
        out[j] = acc;
    }
}

}  // namespace detail

/// h = logsig(W1 x + b1); x_hat = W2 h + b2; mse = mean over J of (x_hat - x)^2.
inline AEForward ae_forward(const AEModel& m, std::span<const double> x) {
    if (x.size() != m.input_dim)
        throw ShapeError("input has " + std::to_string(x.size()) + " values, model expects " +
                         std::to_string(m.input_dim));
    AEForward f;
    f.hidden.resize(m.hidden_dim);
    f.reconstruction.resize(m.input_dim);
    detail::encode(m, x, f.hidden);
    detail::decode(m, f.hidden, f.reconstruction);
    double ss = 0.0;
    for (std::size_t j = 0; j < m.input_dim; ++j) {
        const double e = f.reconstruction[j] - x[j];
        ss += e * e;
    }
    f.mse = ss / static_cast<double>(m.input_dim);
    return f;
}

inline AEForward ae_forward(const AEModel& m, const GrayImage& img) {
    if (m.width != 0 && (img.width != m.width || img.height != m.height))
        throw ShapeError("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                         ", model expects " + std::to_string(m.width) + "x" + std::to_string(m.height));
    return ae_forward(m, img.pixels);
}

/// Jam iff mse > tau; mse == tau is NoJam.
inline Verdict ae_detect(const AEModel& m, const GrayImage& img) {
    if (!m.fitted) throw StateError("autoencoder has not been fitted");
    const double mse = ae_forward(m, img).mse;
    return {mse > m.threshold ? Label::Jam : Label::NoJam, mse};
}

// ---------------------------------------------------------------------------
// Training objective
//
//   L = (1/B) sum_n ||x_hat_n - x_n||^2
//       + beta * sum_k KL(rho || rho_hat_k) + lambda * (||W1||^2 + ||W2||^2)
//
// where rho_hat_k is the batch-mean activation of hidden unit k. The data
// term sums squared error over pixels and averages over images.

struct AEGradient {
    std::vector<double> w1, b1, w2, b2;
};

struct AELossTerms {
    double reconstruction = 0.0;  ///< (1/B) sum of squared errors
    double sparsity = 0.0;        ///< beta * KL
    double weight_decay = 0.0;    ///< lambda * ||W||^2
    double mean_mse = 0.0;        ///< mean per-pixel MSE over the batch

    double total() const { return reconstruction + sparsity + weight_decay; }
};

namespace detail {

inline double kl_bernoulli(double rho, double rho_hat) {
    return rho * std::log(rho / rho_hat) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
}

inline double clamp_rate(double r) { return std::clamp(r, 1e-12, 1.0 - 1e-12); }

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace detail

/// Loss of the batch and, when `grad` is non-null, its gradient w.r.t. all
/// parameters. The decoder is processed in row blocks small enough that the
/// block's reconstruction error stays in cache while it feeds the loss and
/// both gradient products. The encoder only visits non-zero pixels
/// (histogram images are sparse).
inline AELossTerms ae_loss(const AEModel& m, std::span<const std::span<const double>> batch, AEGradient* grad) {
    const std::size_t J = m.input_dim, K = m.hidden_dim, B = batch.size();
    if (B == 0) throw DataError("empty batch");
    for (const auto& x : batch)
        if (x.size() != J) throw ShapeError("batch item has wrong dimension");
    const auto Ji = static_cast<Eigen::Index>(J), Ki = static_cast<Eigen::Index>(K),
               Bi = static_cast<Eigen::Index>(B);
    const double inv_b = 1.0 / static_cast<double>(B);
    const double l2 = 2.0 * m.l2_weight;

    Eigen::MatrixXd H(Ki, Bi);  // column n = hidden activations of image n
    for (std::size_t n = 0; n < B; ++n) detail::encode(m, batch[n], {H.col(static_cast<Eigen::Index>(n)).data(), K});

    const Eigen::Map<const detail::RowMajor> W2(m.w2.data(), Ji, Ki);
    const Eigen::Map<const Eigen::VectorXd> b2(m.b2.data(), Ji);
    Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(Ki, Bi);
    if (grad) {
        grad->w2.resize(m.w2.size());
        grad->b2.resize(J);
    }
    double sq = 0.0, wsq = 0.0;
    constexpr Eigen::Index kBlock = 256;
    Eigen::MatrixXd E(kBlock, Bi);
    for (Eigen::Index j0 = 0; j0 < Ji; j0 += kBlock) {
        const Eigen::Index nb = std::min(kBlock, Ji - j0);
        auto e = E.topRows(nb);
        const auto w = W2.middleRows(j0, nb);
        e.noalias() = w * H;
        e.colwise() += b2.segment(j0, nb);
        for (std::size_t n = 0; n < B; ++n) {
            const double* x = batch[n].data() + j0;
            auto col = e.col(static_cast<Eigen::Index>(n));
            for (Eigen::Index j = 0; j < nb; ++j) col[j] -= x[j];
        }
        sq += e.squaredNorm();
        wsq += w.squaredNorm();
        if (!grad) continue;
        e *= 2.0 * inv_b;  // d(loss)/d(x_hat)
        auto gw = Eigen::Map<detail::RowMajor>(grad->w2.data(), Ji, Ki).middleRows(j0, nb);
        gw.noalias() = e * H.transpose();
        gw += l2 * w;
        Eigen::Map<Eigen::VectorXd>(grad->b2.data(), Ji).segment(j0, nb) = e.rowwise().sum();
        dH.noalias() += w.transpose() * e;
    }

    AELossTerms terms;
    terms.reconstruction = sq * inv_b;
    terms.mean_mse = terms.reconstruction / static_cast<double>(J);
    const Eigen::VectorXd rho_hat = H.rowwise().mean();
    const double rho = m.sparsity_target, beta = m.sparsity_weight;
    for (std::size_t k = 0; k < K; ++k)
        terms.sparsity += beta * detail::kl_bernoulli(rho, detail::clamp_rate(rho_hat[static_cast<Eigen::Index>(k)]));

    if (!grad) {
        for (double v : m.w1) wsq += v * v;
        terms.weight_decay = m.l2_weight * wsq;
        return terms;
    }
    grad->w1.resize(m.w1.size());
    for (std::size_t p = 0; p < m.w1.size(); ++p) {
        wsq += m.w1[p] * m.w1[p];
        grad->w1[p] = l2 * m.w1[p];
    }
    terms.weight_decay = m.l2_weight * wsq;

    grad->b1.assign(K, 0.0);
    std::vector<double> dkl(K), d(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double r = detail::clamp_rate(rho_hat[static_cast<Eigen::Index>(k)]);
        dkl[k] = beta * (-rho / r + (1.0 - rho) / (1.0 - r)) * inv_b;
    }
    for (std::size_t n = 0; n < B; ++n) {
        const auto col = static_cast<Eigen::Index>(n);
        for (std::size_t k = 0; k < K; ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            const double h = H(ki, col);
            d[k] = (dH(ki, col) + dkl[k]) * h * (1.0 - h);
            grad->b1[k] += d[k];
        }
        const auto x = batch[n];
        for (std::size_t i = 0; i < J; ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            double* gw = &grad->w1[i * K];
            for (std::size_t k = 0; k < K; ++k) gw[k] += d[k] * xi;
        }
    }
    return terms;
}

struct AETrainLogEntry {
    std::size_t epoch = 0;
    double loss = 0.0;
    double mean_mse = 0.0;
};

namespace detail {

inline void momentum_step(std::vector<double>& p, std::vector<double>& v, const std::vector<double>& g, double lr,
                          double mu) {
    for (std::size_t k = 0; k < p.size(); ++k) {
        v[k] = mu * v[k] - lr * g[k];
        p[k] += v[k];
    }
}

inline void check_training_set(std::span<const GrayImage> images) {
    if (images.size() < 2) throw DataError("training needs at least 2 images, got " + std::to_string(images.size()));
    for (const auto& img : images)
        if (img.width != images.front().width || img.height != images.front().height)
            throw ShapeError("training images have mixed dimensions");
}

}  // namespace detail

/// Fits the autoencoder on NoJam images with mini-batch gradient descent
/// with momentum, then sets tau from the training-set reconstruction MSEs.
/// Deterministic for a given seed.
inline AEModel ae_train(std::span<const GrayImage> images, const AEHyper& hyper,
                        std::vector<AETrainLogEntry>* log = nullptr) {
    detail::check_training_set(images);
    if (hyper.batch == 0) throw ParameterError("batch size must be > 0");
    if (!(hyper.sparsity_target > 0.0 && hyper.sparsity_target < 1.0))
        throw ParameterError("sparsity target must be in (0, 1)");
    auto m = make_ae(images.front().width, images.front().height, hyper.hidden);
    m.sparsity_weight = hyper.sparsity_weight;
    m.sparsity_target = hyper.sparsity_target;
    m.l2_weight = hyper.l2_weight;
    m.threshold_mult = hyper.threshold_mult;

    auto rng = make_rng(hyper.seed, 0xae);
    const double r = std::sqrt(6.0 / static_cast<double>(m.input_dim + m.hidden_dim + 1));
    for (auto& w : m.w1) w = (2.0 * uniform01(rng) - 1.0) * r;
    for (auto& w : m.w2) w = (2.0 * uniform01(rng) - 1.0) * r;

    AEGradient vel{std::vector<double>(m.w1.size()), std::vector<double>(m.b1.size()),
                   std::vector<double>(m.w2.size()), std::vector<double>(m.b2.size())};
    AEGradient grad;
    std::vector<std::size_t> order(images.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::span<const double>> batch;
    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0, mse_sum = 0.0;
        for (std::size_t at = 0; at < order.size(); at += hyper.batch) {
            batch.clear();
            for (std::size_t k = at; k < std::min(order.size(), at + hyper.batch); ++k)
                batch.emplace_back(images[order[k]].pixels);
            const auto terms = ae_loss(m, batch, &grad);
            if (!std::isfinite(terms.total())) throw DataError("autoencoder training diverged");
            loss_sum += terms.total() * static_cast<double>(batch.size());
            mse_sum += terms.mean_mse * static_cast<double>(batch.size());
            detail::momentum_step(m.w1, vel.w1, grad.w1, hyper.learning_rate, hyper.momentum);
            detail::momentum_step(m.b1, vel.b1, grad.b1, hyper.learning_rate, hyper.momentum);
            detail::momentum_step(m.w2, vel.w2, grad.w2, hyper.learning_rate, hyper.momentum);
            detail::momentum_step(m.b2, vel.b2, grad.b2, hyper.learning_rate, hyper.momentum);
        }
        if (log) {
            const double n = static_cast<double>(images.size());
            log->push_back({epoch, loss_sum / n, mse_sum / n});
        }
    }

    std::vector<double> mses;
    mses.reserve(images.size());
    for (const auto& img : images) mses.push_back(ae_forward(m, img).mse);
    const auto stats = mean_sample_std(mses);
    m.mse_train_mean = stats.mean;
    m.mse_train_std = stats.std;
    m.threshold = compute_threshold(mses, m.threshold_mult);
    m.fitted = true;
    return m;
}

// ---------------------------------------------------------------------------
// .aem container: "JSAEMODL", u32 version, u32 P, u32 Q, u64 J, u64 K,
// f64 beta, rho, lambda, mult, tau, mse_mean, mse_std, u8 fitted, then
// W1, b1, W2, b2 as flat little-endian f64 arrays.

inline constexpr std::string_view kAeMagic = "JSAEMODL";
inline constexpr std::uint32_t kAeVersion = 1;

inline std::vector<std::uint8_t> serialize(const AEModel& m) {
    binio::Writer w;
    w.magic(kAeMagic);
    w.le(kAeVersion);
    w.le(static_cast<std::uint32_t>(m.width));
    w.le(static_cast<std::uint32_t>(m.height));
    w.le(static_cast<std::uint64_t>(m.input_dim));
    w.le(static_cast<std::uint64_t>(m.hidden_dim));
    for (double v : {m.sparsity_weight, m.sparsity_target, m.l2_weight, m.threshold_mult, m.threshold,
                     m.mse_train_mean, m.mse_train_std})
        w.le(v);
    w.le(static_cast<std::uint8_t>(m.fitted ? 1 : 0));
    w.f64s(m.w1);
    w.f64s(m.b1);
    w.f64s(m.w2);
    w.f64s(m.b2);
    return w.data();
}

inline AEModel deserialize_ae(std::vector<std::uint8_t> bytes) {
    binio::Reader r(std::move(bytes));
    r.expect_magic(kAeMagic);
    if (const auto v = r.le<std::uint32_t>(); v != kAeVersion)
        throw FormatError("unsupported autoencoder model version " + std::to_string(v));
    AEModel m;
    m.width = r.le<std::uint32_t>();
    m.height = r.le<std::uint32_t>();
    m.input_dim = r.le<std::uint64_t>();
    m.hidden_dim = r.le<std::uint64_t>();
    if (m.input_dim != m.width * m.height || m.hidden_dim == 0 || m.hidden_dim >= m.input_dim)
        throw FormatError("inconsistent autoencoder dimensions");
    m.sparsity_weight = r.le<double>();
    m.sparsity_target = r.le<double>();
    m.l2_weight = r.le<double>();
    m.threshold_mult = r.le<double>();
    m.threshold = r.le<double>();
    m.mse_train_mean = r.le<double>();
    m.mse_train_std = r.le<double>();
    m.fitted = r.le<std::uint8_t>() != 0;
    const auto JK = m.input_dim * m.hidden_dim;
    if (r.remaining() != 8 * (2 * JK + m.hidden_dim + m.input_dim)) throw FormatError("truncated file");
    m.w1 = r.f64s(JK);
    m.b1 = r.f64s(m.hidden_dim);
    m.w2 = r.f64s(JK);
    m.b2 = r.f64s(m.input_dim);
    return m;
}

inline void save_model(const AEModel& m, const std::filesystem::path& path) {
    const auto bytes = serialize(m);
    iq::write_bytes(path, bytes);
}

inline AEModel load_ae_model(const std::filesystem::path& path) {
    return deserialize_ae(binio::read_file(path));
}

}  // namespace jamsentry::detectors
