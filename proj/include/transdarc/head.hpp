#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "transdarc/binary_io.hpp"
#include "transdarc/error.hpp"
#include "transdarc/rng.hpp"

namespace transdarc {

/// Attention-gated classification head.
///
///   hidden = relu(x W1 + b1)          W1: dim x h
///   gate   = sigmoid(hidden W2 + b2)  W2: h x dim
///   logits = (gate * x) Wc + bc       Wc: dim x n_classes
///
/// All matrices are stored "input x output", row-major, inside one flat
/// buffer so that optimizers and finite-difference checks can treat the
/// parameters as a single vector.
class HeadParams {
public:
    struct Layout {
        std::size_t dim = 0, hidden = 0, n_classes = 0;

        std::size_t w1() const { return 0; }
        std::size_t b1() const { return w1() + dim * hidden; }
        std::size_t w2() const { return b1() + hidden; }
        std::size_t b2() const { return w2() + hidden * dim; }
        std::size_t wc() const { return b2() + dim; }
        std::size_t bc() const { return wc() + dim * n_classes; }
        std::size_t total() const { return bc() + n_classes; }
    };

    HeadParams() = default;
    HeadParams(std::size_t dim, std::size_t hidden, std::size_t n_classes)
        : layout_{dim, hidden, n_classes}, values_(layout_.total(), 0.0) {
        if (dim == 0 || hidden == 0 || n_classes == 0)
            throw ValidationError("head shape must be positive (dim " + std::to_string(dim) + ", hidden " +
                                  std::to_string(hidden) + ", classes " + std::to_string(n_classes) + ")");
    }

    std::size_t dim() const noexcept { return layout_.dim; }
    std::size_t hidden() const noexcept { return layout_.hidden; }
    std::size_t n_classes() const noexcept { return layout_.n_classes; }
    const Layout& layout() const noexcept { return layout_; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<double> attn_w1() { return seg(layout_.w1(), layout_.dim * layout_.hidden); }
    std::span<double> attn_b1() { return seg(layout_.b1(), layout_.hidden); }
    std::span<double> attn_w2() { return seg(layout_.w2(), layout_.hidden * layout_.dim); }
    std::span<double> attn_b2() { return seg(layout_.b2(), layout_.dim); }
    std::span<double> cls_w() { return seg(layout_.wc(), layout_.dim * layout_.n_classes); }
    std::span<double> cls_b() { return seg(layout_.bc(), layout_.n_classes); }
    std::span<const double> attn_w1() const { return seg(layout_.w1(), layout_.dim * layout_.hidden); }
    std::span<const double> attn_b1() const { return seg(layout_.b1(), layout_.hidden); }
    std::span<const double> attn_w2() const { return seg(layout_.w2(), layout_.hidden * layout_.dim); }
    std::span<const double> attn_b2() const { return seg(layout_.b2(), layout_.dim); }
    std::span<const double> cls_w() const { return seg(layout_.wc(), layout_.dim * layout_.n_classes); }
    std::span<const double> cls_b() const { return seg(layout_.bc(), layout_.n_classes); }

    /// True for weight-matrix entries, false for biases. Weight decay only
    /// touches the former.
    std::vector<bool> weight_mask() const {
        std::vector<bool> mask(values_.size(), false);
        auto mark = [&](std::size_t off, std::size_t n) { std::fill_n(mask.begin() + off, n, true); };
        mark(layout_.w1(), layout_.dim * layout_.hidden);
        mark(layout_.w2(), layout_.hidden * layout_.dim);
        mark(layout_.wc(), layout_.dim * layout_.n_classes);
        return mask;
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    /// Rounds every parameter through 32-bit float, matching a save/load trip.
    void round_to_f32() {
        for (auto& v : values_) v = static_cast<double>(static_cast<float>(v));
    }

    bool operator==(const HeadParams& o) const {
        return layout_.dim == o.layout_.dim && layout_.hidden == o.layout_.hidden &&
               layout_.n_classes == o.layout_.n_classes && values_ == o.values_;
    }

private:
    std::span<double> seg(std::size_t off, std::size_t n) { return {values_.data() + off, n}; }
    std::span<const double> seg(std::size_t off, std::size_t n) const { return {values_.data() + off, n}; }

    Layout layout_;
    std::vector<double> values_;
};

inline std::size_t default_hidden_width(std::size_t dim) { return std::max<std::size_t>(1, dim / 2); }

/// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
inline HeadParams init_head(std::size_t dim, std::size_t hidden, std::size_t n_classes, std::uint64_t seed) {
    HeadParams p(dim, hidden, n_classes);
    Rng rng = derive_rng(seed, {tag(StreamTag::HeadInit)});
    auto fill = [&](std::span<double> w, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& v : w) v = u(rng);
    };
    fill(p.attn_w1(), dim);
    fill(p.attn_w2(), hidden);
    fill(p.cls_w(), dim);
    return p;
}

/// Activations of one forward pass, kept for the backward pass.
struct ForwardTrace {
    std::vector<double> pre_hidden;
    std::vector<double> hidden;
    std::vector<double> gate;
    std::vector<double> gated;
    std::vector<double> logits;
};

namespace detail {

// Clamped so the gate stays strictly inside (0, 1) even where the exact
// value rounds to 0 or 1.
inline double sigmoid(double z) {
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    double s;
    if (z >= 0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    return std::clamp(s, lo, hi);
}

template <typename T>
void forward_into(const HeadParams& p, std::span<const T> x, ForwardTrace& t) {
    const std::size_t d = p.dim(), h = p.hidden(), c = p.n_classes();
    const auto w1 = p.attn_w1(), b1 = p.attn_b1(), w2 = p.attn_w2(), b2 = p.attn_b2(), wc = p.cls_w(),
               bc = p.cls_b();
    t.pre_hidden.assign(b1.begin(), b1.end());
    for (std::size_t i = 0; i < d; ++i) {
        const double xi = x[i];
        const double* row = w1.data() + i * h;
        for (std::size_t j = 0; j < h; ++j) t.pre_hidden[j] += xi * row[j];
    }
    t.hidden.resize(h);
    for (std::size_t j = 0; j < h; ++j) t.hidden[j] = t.pre_hidden[j] > 0.0 ? t.pre_hidden[j] : 0.0;

    std::vector<double>& z2 = t.gate;
    z2.assign(b2.begin(), b2.end());
    for (std::size_t j = 0; j < h; ++j) {
        const double r = t.hidden[j];
        if (r == 0.0) continue;
        const double* row = w2.data() + j * d;
        for (std::size_t i = 0; i < d; ++i) z2[i] += r * row[i];
    }
    t.gated.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        t.gate[i] = sigmoid(z2[i]);
        t.gated[i] = t.gate[i] * static_cast<double>(x[i]);
    }
    t.logits.assign(bc.begin(), bc.end());
    for (std::size_t i = 0; i < d; ++i) {
        const double g = t.gated[i];
        const double* row = wc.data() + i * c;
        for (std::size_t k = 0; k < c; ++k) t.logits[k] += g * row[k];
    }
}

template <typename T>
void check_input(const HeadParams& p, std::span<const T> x) {
    if (x.size() != p.dim())
        throw ValidationError("input has " + std::to_string(x.size()) + " channels, head expects " +
                              std::to_string(p.dim()));
    for (auto v : x)
        if (!std::isfinite(v)) throw ValidationError("non-finite value in head input");
}

/// -log softmax(logits)[label], computed with the max-shift.
inline double cross_entropy(std::span<const double> logits, std::size_t label, std::vector<double>* probs = nullptr) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto z : logits) sum += std::exp(z - m);
    const double log_z = m + std::log(sum);
    if (probs) {
        probs->resize(logits.size());
        for (std::size_t k = 0; k < logits.size(); ++k) (*probs)[k] = std::exp(logits[k] - log_z);
    }
    return log_z - logits[label];
}

}  // namespace detail

struct ForwardResult {
    std::vector<double> logits;
    std::vector<double> gate;
};

template <typename T>
ForwardResult forward(const HeadParams& p, std::span<const T> x) {
    detail::check_input(p, x);
    ForwardTrace t;
    detail::forward_into(p, x, t);
    return {std::move(t.logits), std::move(t.gate)};
}

inline ForwardResult forward(const HeadParams& p, const std::vector<double>& x) {
    return forward(p, std::span<const double>(x));
}

/// Mean softmax cross-entropy over a batch and its exact gradient.
struct LossAndGrad {
    double loss = 0.0;
    HeadParams grad;
};

namespace detail {

// Adds the gradient of `scale * loss(x, label)` into `g` and returns the
// unscaled loss.
template <typename T>
double accumulate_sample_grad(const HeadParams& p, std::span<const T> x, std::size_t label, double scale,
                              HeadParams& g, ForwardTrace& t, std::vector<double>& probs,
                              std::vector<double>& scratch_d) {
    const std::size_t d = p.dim(), h = p.hidden(), c = p.n_classes();
    forward_into(p, x, t);
    const double loss = cross_entropy(t.logits, label, &probs);

    // dL/dlogits = softmax - onehot
    probs[label] -= 1.0;
    for (auto& v : probs) v *= scale;

    auto gwc = g.cls_w(), gbc = g.cls_b(), gw2 = g.attn_w2(), gb2 = g.attn_b2(), gw1 = g.attn_w1(),
         gb1 = g.attn_b1();
    const auto wc = p.cls_w(), w2 = p.attn_w2();

    for (std::size_t k = 0; k < c; ++k) gbc[k] += probs[k];
    // dz2 (pre-sigmoid gate) per input channel
    std::vector<double>& dz2 = scratch_d;
    dz2.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double gi = t.gated[i];
        const double* wrow = wc.data() + i * c;
        double* grow = gwc.data() + i * c;
        double dgated = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            grow[k] += gi * probs[k];
            dgated += wrow[k] * probs[k];
        }
        const double a = t.gate[i];
        dz2[i] = dgated * static_cast<double>(x[i]) * a * (1.0 - a);
        gb2[i] += dz2[i];
    }
    for (std::size_t j = 0; j < h; ++j) {
        const double r = t.hidden[j];
        const double* wrow = w2.data() + j * d;
        double* grow = gw2.data() + j * d;
        double dr = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            grow[i] += r * dz2[i];
            dr += wrow[i] * dz2[i];
        }
        const double dz1 = t.pre_hidden[j] > 0.0 ? dr : 0.0;
        if (dz1 == 0.0) continue;
        gb1[j] += dz1;
        for (std::size_t i = 0; i < d; ++i) gw1[i * h + j] += static_cast<double>(x[i]) * dz1;
    }
    return loss;
}

}  // namespace detail

/// `x` holds labels.size() rows of p.dim() values, row-major.
template <typename T>
LossAndGrad loss_and_grad(const HeadParams& p, std::span<const T> x, std::span<const std::uint32_t> labels) {
    if (labels.empty()) throw ValidationError("loss_and_grad: empty batch");
    if (x.size() != labels.size() * p.dim())
        throw ValidationError("loss_and_grad: batch holds " + std::to_string(x.size()) + " values, expected " +
                              std::to_string(labels.size()) + " x " + std::to_string(p.dim()));
    for (auto l : labels)
        if (l >= p.n_classes())
            throw ValidationError("label " + std::to_string(l) + " out of range for " +
                                  std::to_string(p.n_classes()) + " classes");
    LossAndGrad out{0.0, HeadParams(p.dim(), p.hidden(), p.n_classes())};
    ForwardTrace t;
    std::vector<double> probs, scratch;
    const double scale = 1.0 / static_cast<double>(labels.size());
    for (std::size_t b = 0; b < labels.size(); ++b)
        out.loss += detail::accumulate_sample_grad(p, x.subspan(b * p.dim(), p.dim()), labels[b], scale, out.grad, t,
                                                   probs, scratch);
    out.loss *= scale;
    return out;
}

inline LossAndGrad loss_and_grad(const HeadParams& p, const std::vector<double>& x,
                                 const std::vector<std::uint32_t>& labels) {
    return loss_and_grad(p, std::span<const double>(x), std::span<const std::uint32_t>(labels));
}

/// Per-sample cross-entropy, no gradient.
template <typename T>
double sample_loss(const HeadParams& p, std::span<const T> x, std::uint32_t label) {
    ForwardTrace t;
    detail::forward_into(p, x, t);
    return detail::cross_entropy(t.logits, label);
}

// ---------------------------------------------------------------------------
// DARCH1: "DARCH1" | u32 version=1 | u32 dim | u32 h | u32 n_classes
//   | attn_w1 | attn_b1 | attn_w2 | attn_b2 | cls_w | cls_b   (f32 LE)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDarchMagic = "DARCH1";
inline constexpr std::uint32_t kDarchVersion = 1;

inline std::string encode_head(const HeadParams& p) {
    if (!p.all_finite()) throw ValidationError("head parameters contain non-finite values");
    io::ByteWriter w;
    w.bytes(kDarchMagic);
    w.u32(kDarchVersion);
    w.u32(static_cast<std::uint32_t>(p.dim()));
    w.u32(static_cast<std::uint32_t>(p.hidden()));
    w.u32(static_cast<std::uint32_t>(p.n_classes()));
    for (double v : p.values()) w.f32(static_cast<float>(v));
    return w.buffer();
}

inline HeadParams decode_head(std::string_view bytes, const std::string& what = "DARCH1 data") {
    io::ByteReader r(bytes, what);
    if (bytes.size() < kDarchMagic.size() || r.bytes(kDarchMagic.size()) != kDarchMagic)
        throw FormatError(what + ": bad magic (expected \"DARCH1\")");
    const auto version = r.u32();
    if (version != kDarchVersion) throw FormatError(what + ": unsupported version " + std::to_string(version));
    const auto dim = r.u32(), hidden = r.u32(), n_classes = r.u32();
    if (dim == 0 || hidden == 0 || n_classes == 0) throw FormatError(what + ": zero-sized head shape");
    r.need(HeadParams::Layout{dim, hidden, n_classes}.total() * 4);
    HeadParams p(dim, hidden, n_classes);
    for (auto& v : p.values()) v = r.f32();
    if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after parameters");
    if (!p.all_finite()) throw ValidationError(what + ": non-finite parameter");
    return p;
}

inline void save_head(const HeadParams& p, const std::filesystem::path& path) { io::write_file(path, encode_head(p)); }

inline HeadParams load_head(const std::filesystem::path& path) {
    return decode_head(io::read_file(path), path.string());
}

}  // namespace transdarc
