#pragma once

// Compact binary CNN:
//   conv3x3(1->c1) relu maxpool2 -> conv3x3(c1->c2) relu maxpool2
//   -> conv3x3(c2->c3) relu global-avg-pool -> fc(c3->2)
// trained from scratch with softmax cross-entropy. Convolutions use zero
// padding of 1 ("same" output size).

#include <jamsentry/autoencoder.hpp>
#include <jamsentry/binio.hpp>
#include <jamsentry/error.hpp>
#include <jamsentry/imaging.hpp>
#include <jamsentry/rng.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace jamsentry::detectors {

struct CnnArch {
    std::size_t c1 = 8, c2 = 16, c3 = 32;
};

struct CnnHyper {
    std::size_t epochs = 30;
    std::size_t batch = 35;
    double learning_rate = 0.003;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    CnnArch arch;
};

struct ConvLayer {
    std::size_t in_c = 0, out_c = 0;
    std::vector<double> w;  ///< [out_c][in_c][3][3]
    std::vector<double> b;  ///< [out_c]
};

struct CNNModel {
    std::size_t width = 0, height = 0;
    std::array<ConvLayer, 3> conv;
    std::vector<double> fc_w;  ///< [2][c3]
    std::vector<double> fc_b;  ///< [2]

    std::size_t parameter_count() const {
        std::size_t n = fc_w.size() + fc_b.size();
        for (const auto& c : conv) n += c.w.size() + c.b.size();
        return n;
    }
};

/// Class order of the output scores.
inline constexpr std::size_t kNoJamClass = 0, kJamClass = 1;

struct Tensor {
    std::size_t c = 0, h = 0, w = 0;
    std::vector<double> d;

    Tensor() = default;
    Tensor(std::size_t c_, std::size_t h_, std::size_t w_) : c(c_), h(h_), w(w_), d(c_ * h_ * w_, 0.0) {}
    double* plane(std::size_t ch) { return d.data() + ch * h * w; }
    const double* plane(std::size_t ch) const { return d.data() + ch * h * w; }
};

namespace cnn_detail {

/// Copy of `in` with a one-pixel zero border.
inline Tensor pad1(const Tensor& in) {
    Tensor p(in.c, in.h + 2, in.w + 2);
    for (std::size_t ch = 0; ch < in.c; ++ch)
        for (std::size_t y = 0; y < in.h; ++y)
            std::copy_n(in.plane(ch) + y * in.w, in.w, p.plane(ch) + (y + 1) * p.w + 1);
    return p;
}

inline Tensor conv_forward(const ConvLayer& L, const Tensor& padded, std::size_t h, std::size_t w) {
    Tensor out(L.out_c, h, w);
    for (std::size_t oc = 0; oc < L.out_c; ++oc) {
        double* o = out.plane(oc);
        std::fill(o, o + h * w, L.b[oc]);
        for (std::size_t ic = 0; ic < L.in_c; ++ic) {
            const double* src = padded.plane(ic);
            for (std::size_t ky = 0; ky < 3; ++ky)
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    const double wt = L.w[((oc * L.in_c + ic) * 3 + ky) * 3 + kx];
                    for (std::size_t y = 0; y < h; ++y) {
                        const double* s = src + (y + ky) * padded.w + kx;
                        double* d = o + y * w;
                        for (std::size_t x = 0; x < w; ++x) d[x] += wt * s[x];
                    }
                }
        }
    }
    return out;
}

/// Accumulates dW, db and (optionally) the gradient w.r.t. the padded input.
inline void conv_backward(const ConvLayer& L, const Tensor& padded, const Tensor& dout, ConvLayer& grad,
                          Tensor* dpadded) {
    const std::size_t h = dout.h, w = dout.w;
    for (std::size_t oc = 0; oc < L.out_c; ++oc) {
        const double* g = dout.plane(oc);
        grad.b[oc] += std::accumulate(g, g + h * w, 0.0);
        for (std::size_t ic = 0; ic < L.in_c; ++ic) {
            const double* src = padded.plane(ic);
            for (std::size_t ky = 0; ky < 3; ++ky)
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    const std::size_t wi = ((oc * L.in_c + ic) * 3 + ky) * 3 + kx;
                    double acc = 0.0;
                    for (std::size_t y = 0; y < h; ++y) {
                        const double* s = src + (y + ky) * padded.w + kx;
                        const double* gg = g + y * w;
                        for (std::size_t x = 0; x < w; ++x) acc += gg[x] * s[x];
                    }
                    grad.w[wi] += acc;
                    if (dpadded) {
                        const double wt = L.w[wi];
                        double* dp = dpadded->plane(ic);
                        for (std::size_t y = 0; y < h; ++y) {
                            double* d = dp + (y + ky) * padded.w + kx;
                            const double* gg = g + y * w;
                            for (std::size_t x = 0; x < w; ++x) d[x] += wt * gg[x];
                        }
                    }
                }
        }
    }
}

inline void relu_inplace(Tensor& t) {
    for (auto& v : t.d) v = v > 0.0 ? v : 0.0;
}

/// 2x2 stride-2 max pool (odd trailing row/column dropped); records argmax.
inline Tensor maxpool(const Tensor& in, std::vector<std::uint32_t>& argmax) {
    Tensor out(in.c, in.h / 2, in.w / 2);
    argmax.assign(out.d.size(), 0);
    std::size_t at = 0;
    for (std::size_t ch = 0; ch < in.c; ++ch) {
        const double* p = in.plane(ch);
        for (std::size_t y = 0; y < out.h; ++y)
            for (std::size_t x = 0; x < out.w; ++x, ++at) {
                std::size_t best = (2 * y) * in.w + 2 * x;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t k = (2 * y + dy) * in.w + 2 * x + dx;
                        if (p[k] > p[best]) best = k;
                    }
                out.d[at] = p[best];
                argmax[at] = static_cast<std::uint32_t>(ch * in.h * in.w + best);
            }
    }
    return out;
}

inline Tensor unpool_relu(const Tensor& dpooled, const std::vector<std::uint32_t>& argmax, const Tensor& act) {
    Tensor d(act.c, act.h, act.w);
    for (std::size_t k = 0; k < dpooled.d.size(); ++k)
        if (act.d[argmax[k]] > 0.0) d.d[argmax[k]] += dpooled.d[k];
    return d;
}

inline Tensor unpad1(const Tensor& p) {
    Tensor t(p.c, p.h - 2, p.w - 2);
    for (std::size_t ch = 0; ch < t.c; ++ch)
        for (std::size_t y = 0; y < t.h; ++y) std::copy_n(p.plane(ch) + (y + 1) * p.w + 1, t.w, t.plane(ch) + y * t.w);
    return t;
}

}  // namespace cnn_detail

/// Intermediate activations kept for backpropagation.
struct CnnTrace {
    Tensor in_p, a1, p1_p, a2, p2_p, a3;
    std::vector<std::uint32_t> arg1, arg2;
    std::vector<double> pooled;  ///< global-average-pooled features
    std::array<double, 2> logits{};
};

inline void check_cnn_input(const CNNModel& m, std::size_t w, std::size_t h) {
    if (w != m.width || h != m.height)
        throw ShapeError("image is " + std::to_string(w) + "x" + std::to_string(h) + ", model expects " +
                         std::to_string(m.width) + "x" + std::to_string(m.height));
}

inline std::array<double, 2> cnn_forward(const CNNModel& m, const GrayImage& img, CnnTrace* trace = nullptr) {
    using namespace cnn_detail;
    check_cnn_input(m, img.width, img.height);
    CnnTrace local;
    CnnTrace& t = trace ? *trace : local;
    Tensor in(1, img.height, img.width);
    std::copy(img.pixels.begin(), img.pixels.end(), in.d.begin());
    t.in_p = pad1(in);
    t.a1 = conv_forward(m.conv[0], t.in_p, in.h, in.w);
    relu_inplace(t.a1);
    t.p1_p = pad1(maxpool(t.a1, t.arg1));
    t.a2 = conv_forward(m.conv[1], t.p1_p, t.p1_p.h - 2, t.p1_p.w - 2);
    relu_inplace(t.a2);
    t.p2_p = pad1(maxpool(t.a2, t.arg2));
    t.a3 = conv_forward(m.conv[2], t.p2_p, t.p2_p.h - 2, t.p2_p.w - 2);
    relu_inplace(t.a3);
    const std::size_t C = t.a3.c, HW = t.a3.h * t.a3.w;
    t.pooled.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c)
        t.pooled[c] = std::accumulate(t.a3.plane(c), t.a3.plane(c) + HW, 0.0) / static_cast<double>(HW);
    for (std::size_t o = 0; o < 2; ++o) {
        double z = m.fc_b[o];
        for (std::size_t c = 0; c < C; ++c) z += m.fc_w[o * C + c] * t.pooled[c];
        t.logits[o] = z;
    }
    return t.logits;
}

/// Numerically stable two-class softmax.
inline std::array<double, 2> softmax2(std::array<double, 2> s) {
    const double mx = std::max(s[0], s[1]);
    const double e0 = std::exp(s[0] - mx), e1 = std::exp(s[1] - mx);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

/// Decision from raw scores: Jam iff its probability is strictly larger.
inline Verdict verdict_from_scores(std::array<double, 2> scores) {
    const auto p = softmax2(scores);
    return {p[kJamClass] > p[kNoJamClass] ? Label::Jam : Label::NoJam, p[kJamClass]};
}

inline Verdict cnn_detect(const CNNModel& m, const GrayImage& img) { return verdict_from_scores(cnn_forward(m, img)); }

/// Gradient of the mean cross-entropy over a batch, laid out like the model.
inline double cnn_loss(const CNNModel& m, std::span<const GrayImage* const> batch, CNNModel* grad) {
    using namespace cnn_detail;
    if (batch.empty()) throw DataError("empty batch");
    if (grad) {
        *grad = m;
        for (auto& c : grad->conv) {
            std::fill(c.w.begin(), c.w.end(), 0.0);
            std::fill(c.b.begin(), c.b.end(), 0.0);
        }
        std::fill(grad->fc_w.begin(), grad->fc_w.end(), 0.0);
        std::fill(grad->fc_b.begin(), grad->fc_b.end(), 0.0);
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    CnnTrace t;
    for (const GrayImage* img : batch) {
        const auto logits = cnn_forward(m, *img, &t);
        const auto p = softmax2(logits);
        const std::size_t y = img->label == Label::Jam ? kJamClass : kNoJamClass;
        loss -= std::log(std::max(p[y], 1e-300)) * inv_b;
        if (!grad) continue;

        const std::size_t C = t.pooled.size();
        std::array<double, 2> dz{p[0] * inv_b, p[1] * inv_b};
        dz[y] -= inv_b;
        std::vector<double> dpool(C, 0.0);
        for (std::size_t o = 0; o < 2; ++o) {
            grad->fc_b[o] += dz[o];
            for (std::size_t c = 0; c < C; ++c) {
                grad->fc_w[o * C + c] += dz[o] * t.pooled[c];
                dpool[c] += dz[o] * m.fc_w[o * C + c];
            }
        }
        Tensor d3(t.a3.c, t.a3.h, t.a3.w);
        const double inv_hw = 1.0 / static_cast<double>(t.a3.h * t.a3.w);
        for (std::size_t c = 0; c < C; ++c) {
            const double* a = t.a3.plane(c);
            double* d = d3.plane(c);
            for (std::size_t k = 0; k < t.a3.h * t.a3.w; ++k) d[k] = a[k] > 0.0 ? dpool[c] * inv_hw : 0.0;
        }
        Tensor dp2_p(t.p2_p.c, t.p2_p.h, t.p2_p.w);
        conv_backward(m.conv[2], t.p2_p, d3, grad->conv[2], &dp2_p);
        const Tensor d2 = unpool_relu(unpad1(dp2_p), t.arg2, t.a2);
        Tensor dp1_p(t.p1_p.c, t.p1_p.h, t.p1_p.w);
        conv_backward(m.conv[1], t.p1_p, d2, grad->conv[1], &dp1_p);
        const Tensor d1 = unpool_relu(unpad1(dp1_p), t.arg1, t.a1);
        conv_backward(m.conv[0], t.in_p, d1, grad->conv[0], nullptr);
    }
    return loss;
}

inline CNNModel make_cnn(std::size_t width, std::size_t height, const CnnArch& arch, std::uint64_t seed) {
    if (width < 4 || height < 4) throw ParameterError("CNN input must be at least 4x4");
    CNNModel m;
    m.width = width;
    m.height = height;
    auto rng = make_rng(seed, 0xc0);
    const std::array<std::size_t, 4> ch{1, arch.c1, arch.c2, arch.c3};
    for (std::size_t l = 0; l < 3; ++l) {
        auto& c = m.conv[l];
        c.in_c = ch[l];
        c.out_c = ch[l + 1];
        c.w.resize(c.out_c * c.in_c * 9);
        c.b.assign(c.out_c, 0.0);
        std::normal_distribution<double> g(0.0, std::sqrt(2.0 / static_cast<double>(c.in_c * 9)));
        for (auto& w : c.w) w = g(rng);
    }
    m.fc_w.resize(2 * arch.c3);
    m.fc_b.assign(2, 0.0);
    std::normal_distribution<double> g(0.0, std::sqrt(1.0 / static_cast<double>(arch.c3)));
    for (auto& w : m.fc_w) w = g(rng);
    return m;
}

struct CnnTrainLogEntry {
    std::size_t epoch = 0;
    double loss = 0.0;
};

namespace cnn_detail {

template <typename F>
void for_each_param(CNNModel& a, const CNNModel& b, CNNModel& c, F&& f) {
    for (std::size_t l = 0; l < 3; ++l) {
        f(a.conv[l].w, b.conv[l].w, c.conv[l].w);
        f(a.conv[l].b, b.conv[l].b, c.conv[l].b);
    }
    f(a.fc_w, b.fc_w, c.fc_w);
    f(a.fc_b, b.fc_b, c.fc_b);
}

}  // namespace cnn_detail

/// Mini-batch gradient descent with momentum on softmax cross-entropy.
/// Needs both classes, balanced within +-1.
inline CNNModel cnn_train(std::span<const GrayImage> images, const CnnHyper& hyper,
                          std::vector<CnnTrainLogEntry>* log = nullptr) {
    detail::check_training_set(images);
    const auto jam = static_cast<std::size_t>(
        std::count_if(images.begin(), images.end(), [](const auto& i) { return i.label == Label::Jam; }));
    const auto nojam = images.size() - jam;
    if (jam == 0 || nojam == 0) throw DataError("CNN training needs both Jam and NoJam images");
    if ((jam > nojam ? jam - nojam : nojam - jam) > 1)
        throw DataError("CNN training classes are unbalanced (" + std::to_string(nojam) + " NoJam vs " +
                        std::to_string(jam) + " Jam)");
    if (hyper.batch == 0) throw ParameterError("batch size must be > 0");

    auto m = make_cnn(images.front().width, images.front().height, hyper.arch, hyper.seed);
    CNNModel vel = m, grad;
    for (auto& c : vel.conv) {
        std::fill(c.w.begin(), c.w.end(), 0.0);
        std::fill(c.b.begin(), c.b.end(), 0.0);
    }
    std::fill(vel.fc_w.begin(), vel.fc_w.end(), 0.0);
    std::fill(vel.fc_b.begin(), vel.fc_b.end(), 0.0);

    auto rng = make_rng(hyper.seed, 0xc1);
    std::vector<std::size_t> order(images.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<const GrayImage*> batch;
    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t at = 0; at < order.size(); at += hyper.batch) {
            batch.clear();
            for (std::size_t k = at; k < std::min(order.size(), at + hyper.batch); ++k) batch.push_back(&images[order[k]]);
            const double loss = cnn_loss(m, batch, &grad);
            if (!std::isfinite(loss)) throw DataError("CNN training diverged");
            loss_sum += loss * static_cast<double>(batch.size());
            cnn_detail::for_each_param(m, grad, vel, [&](std::vector<double>& p, const std::vector<double>& g,
                                                         std::vector<double>& v) {
                detail::momentum_step(p, v, g, hyper.learning_rate, hyper.momentum);
            });
        }
        if (log) log->push_back({epoch, loss_sum / static_cast<double>(images.size())});
    }
    return m;
}

// ---------------------------------------------------------------------------
// .cnm container: "JSCNNMDL", u32 version, u32 P, u32 Q, u32 c1, c2, c3,
// then per conv layer w, b and finally fc_w, fc_b as flat f64 arrays.

inline constexpr std::string_view kCnnMagic = "JSCNNMDL";
inline constexpr std::uint32_t kCnnVersion = 1;

inline std::vector<std::uint8_t> serialize(const CNNModel& m) {
    binio::Writer w;
    w.magic(kCnnMagic);
    w.le(kCnnVersion);
    w.le(static_cast<std::uint32_t>(m.width));
    w.le(static_cast<std::uint32_t>(m.height));
    for (const auto& c : m.conv) w.le(static_cast<std::uint32_t>(c.out_c));
    for (const auto& c : m.conv) {
        w.f64s(c.w);
        w.f64s(c.b);
    }
    w.f64s(m.fc_w);
    w.f64s(m.fc_b);
    return w.data();
}

inline CNNModel deserialize_cnn(std::vector<std::uint8_t> bytes) {
    binio::Reader r(std::move(bytes));
    r.expect_magic(kCnnMagic);
    if (const auto v = r.le<std::uint32_t>(); v != kCnnVersion)
        throw FormatError("unsupported CNN model version " + std::to_string(v));
    CNNModel m;
    m.width = r.le<std::uint32_t>();
    m.height = r.le<std::uint32_t>();
    std::array<std::size_t, 4> ch{1, 0, 0, 0};
    for (std::size_t l = 1; l < 4; ++l) {
        ch[l] = r.le<std::uint32_t>();
        if (ch[l] == 0 || ch[l] > 4096) throw FormatError("bad CNN channel count");
    }
    for (std::size_t l = 0; l < 3; ++l) {
        auto& c = m.conv[l];
        c.in_c = ch[l];
        c.out_c = ch[l + 1];
        c.w = r.f64s(c.out_c * c.in_c * 9);
        c.b = r.f64s(c.out_c);
    }
    m.fc_w = r.f64s(2 * ch[3]);
    m.fc_b = r.f64s(2);
    if (!r.at_end()) throw FormatError("trailing bytes in CNN model");
    return m;
}

inline void save_model(const CNNModel& m, const std::filesystem::path& path) {
    const auto bytes = serialize(m);
    iq::write_bytes(path, bytes);
}

inline CNNModel load_cnn_model(const std::filesystem::path& path) {
    return deserialize_cnn(binio::read_file(path));
}

}  // namespace jamsentry::detectors
