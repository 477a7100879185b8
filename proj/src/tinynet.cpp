#include "softarm/tinynet.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "softarm/errors.hpp"
#include "softarm/parallel.hpp"
#include "softarm/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model/dataset file formats assume a little-endian host");

namespace softarm::tinynet {

namespace {

// Per-stage tensor geometry.
struct Stage {
    int in_ch, out_ch, h, w, pool, ph, pw;
};
constexpr std::array<Stage, 3> kStages{{
    {3, 4, 120, 160, 5, 24, 32},
    {4, 8, 24, 32, 4, 6, 8},
    {8, 16, 6, 8, 2, 3, 4},
}};

std::array<LayerView, 5> build_layout() {
    std::array<LayerView, 5> layers{};
    std::size_t off = 0;
    for (int s = 0; s < 3; ++s) {
        LayerView& l = layers[s];
        l.role = LayerView::Role::kConv;
        l.out_n = kStages[s].out_ch;
        l.in_n = kStages[s].in_ch;
        l.kh = l.kw = 3;
        l.w_offset = off;
        l.w_size = static_cast<std::size_t>(l.out_n) * l.in_n * 9;
        off += l.w_size;
        l.b_offset = off;
        l.b_size = l.out_n;
        off += l.b_size;
    }
    const std::array<std::array<int, 2>, 2> dense_dims{{{NetworkSpec::kHidden, NetworkSpec::kFlat},
                                                        {NetworkSpec::kOut, NetworkSpec::kHidden}}};
    for (int d = 0; d < 2; ++d) {
        LayerView& l = layers[3 + d];
        l.role = LayerView::Role::kDense;
        l.out_n = dense_dims[d][0];
        l.in_n = dense_dims[d][1];
        l.kh = l.kw = 0;
        l.w_offset = off;
        l.w_size = static_cast<std::size_t>(l.out_n) * l.in_n;
        off += l.w_size;
        l.b_offset = off;
        l.b_size = l.out_n;
        off += l.b_size;
    }
    if (off != NetworkSpec::kParamCount) throw std::logic_error("parameter layout broken");
    return layers;
}

const std::array<LayerView, 5>& layout() {
    static const std::array<LayerView, 5> layers = build_layout();
    return layers;
}

void zero_pad_copy(const double* in, int ch, int h, int w, double* pad) {
    const int pw = w + 2;
    std::fill(pad, pad + static_cast<std::size_t>(ch) * (h + 2) * pw, 0.0);
    for (int c = 0; c < ch; ++c) {
        for (int y = 0; y < h; ++y) {
            std::memcpy(pad + (static_cast<std::size_t>(c) * (h + 2) + y + 1) * pw + 1,
                        in + (static_cast<std::size_t>(c) * h + y) * w,
                        static_cast<std::size_t>(w) * sizeof(double));
        }
    }
}

// Direct 3x3 convolution over a zero-padded input, accumulating rows so the
// innermost loop is a contiguous fused multiply-add over x.
void conv3x3_forward(const double* pad, int in_ch, int h, int w, const double* wgt,
                     const double* bias, int out_ch, double* out) {
    const int pw = w + 2;
    for (int oc = 0; oc < out_ch; ++oc) {
        double* o = out + static_cast<std::size_t>(oc) * h * w;
        std::fill(o, o + static_cast<std::size_t>(h) * w, bias[oc]);
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* pin = pad + static_cast<std::size_t>(ic) * (h + 2) * pw;
            const double* wk = wgt + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            for (int y = 0; y < h; ++y) {
                double* orow = o + static_cast<std::size_t>(y) * w;
                for (int ky = 0; ky < 3; ++ky) {
                    const double* prow = pin + static_cast<std::size_t>(y + ky) * pw;
                    const double w0 = wk[ky * 3 + 0];
                    const double w1 = wk[ky * 3 + 1];
                    const double w2 = wk[ky * 3 + 2];
                    for (int x = 0; x < w; ++x) {
                        orow[x] += w0 * prow[x] + w1 * prow[x + 1] + w2 * prow[x + 2];
                    }
                }
            }
        }
    }
}

// dW, db and (optionally) the padded-input gradient.
void conv3x3_backward(const double* pad, const double* d_out, int in_ch, int out_ch, int h,
                      int w, const double* wgt, double* d_w, double* d_b, double* d_pad) {
    const int pw = w + 2;
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* dco = d_out + static_cast<std::size_t>(oc) * h * w;
        double acc_b = 0.0;
        for (int i = 0; i < h * w; ++i) acc_b += dco[i];
        d_b[oc] += acc_b;
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* pin = pad + static_cast<std::size_t>(ic) * (h + 2) * pw;
            double* dwk = d_w + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double acc = 0.0;
                    for (int y = 0; y < h; ++y) {
                        const double* prow = pin + static_cast<std::size_t>(y + ky) * pw + kx;
                        const double* drow = dco + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) acc += prow[x] * drow[x];
                    }
                    dwk[ky * 3 + kx] += acc;
                }
            }
            if (d_pad != nullptr) {
                const double* wk = wgt + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
                double* dpin = d_pad + static_cast<std::size_t>(ic) * (h + 2) * pw;
                for (int y = 0; y < h; ++y) {
                    const double* drow = dco + static_cast<std::size_t>(y) * w;
                    for (int ky = 0; ky < 3; ++ky) {
                        double* dprow = dpin + static_cast<std::size_t>(y + ky) * pw;
                        const double w0 = wk[ky * 3 + 0];
                        const double w1 = wk[ky * 3 + 1];
                        const double w2 = wk[ky * 3 + 2];
                        for (int x = 0; x < w; ++x) {
                            const double d = drow[x];
                            dprow[x] += w0 * d;
                            dprow[x + 1] += w1 * d;
                            dprow[x + 2] += w2 * d;
                        }
                    }
                }
            }
        }
    }
}

void relu_inplace(double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

// Non-overlapping max pool; arg records the flat source index of the max,
// first occurrence in row-major window order on ties.
void maxpool_forward(const double* in, int ch, int h, int w, int k, double* out, int* arg) {
    const int ph = h / k;
    const int pw = w / k;
    for (int c = 0; c < ch; ++c) {
        const double* cin = in + static_cast<std::size_t>(c) * h * w;
        for (int py = 0; py < ph; ++py) {
            for (int px = 0; px < pw; ++px) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = 0;
                for (int ky = 0; ky < k; ++ky) {
                    const int y = py * k + ky;
                    for (int kx = 0; kx < k; ++kx) {
                        const int idx = y * w + px * k + kx;
                        if (cin[idx] > best) {
                            best = cin[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t oidx =
                    (static_cast<std::size_t>(c) * ph + py) * pw + px;
                out[oidx] = best;
                arg[oidx] = c * h * w + best_idx;
            }
        }
    }
}

void dense_forward(const double* x, int in_n, const double* wgt, const double* bias,
                   int out_n, double* y) {
    for (int o = 0; o < out_n; ++o) {
        const double* wrow = wgt + static_cast<std::size_t>(o) * in_n;
        double acc = bias[o];
        for (int i = 0; i < in_n; ++i) acc += wrow[i] * x[i];
        y[o] = acc;
    }
}

std::size_t conv_out_size(int s) {
    return static_cast<std::size_t>(kStages[s].out_ch) * kStages[s].h * kStages[s].w;
}
std::size_t pool_out_size(int s) {
    return static_cast<std::size_t>(kStages[s].out_ch) * kStages[s].ph * kStages[s].pw;
}
std::size_t padded_size(int s) {
    return static_cast<std::size_t>(kStages[s].in_ch) * (kStages[s].h + 2) * (kStages[s].w + 2);
}

}  // namespace

Network::Network() : params_(NetworkSpec::kParamCount, 0.0) {
    static_assert(NetworkSpec::kInH % 5 == 0 && NetworkSpec::kInW % 5 == 0);
    static_assert((NetworkSpec::kInH / 5) % 4 == 0 && (NetworkSpec::kInW / 5) % 4 == 0);
    static_assert((NetworkSpec::kInH / 20) % 2 == 0 && (NetworkSpec::kInW / 20) % 2 == 0);
}

const std::array<LayerView, 5>& Network::layers() { return layout(); }

std::span<const double> Network::weights(int layer) const {
    const LayerView& l = layout()[layer];
    return {params_.data() + l.w_offset, l.w_size};
}

std::span<const double> Network::biases(int layer) const {
    const LayerView& l = layout()[layer];
    return {params_.data() + l.b_offset, l.b_size};
}

Network Network::random_init(std::uint64_t seed) {
    Network net;
    for (const LayerView& l : layout()) {
        const int fan_in = l.role == LayerView::Role::kConv ? l.in_n * l.kh * l.kw : l.in_n;
        const double bound = std::sqrt(1.0 / fan_in);
        for (std::size_t i = l.w_offset; i < l.w_offset + l.w_size; ++i) {
            net.params_[i] = bound * (2.0 * u64_to_unit(hash_combine(seed, i)) - 1.0);
        }
        for (std::size_t i = l.b_offset; i < l.b_offset + l.b_size; ++i) {
            net.params_[i] = bound * (2.0 * u64_to_unit(hash_combine(seed, i)) - 1.0);
        }
    }
    return net;
}

Workspace::Workspace() {
    input.resize(NetworkSpec::kInputSize);
    for (int s = 0; s < 3; ++s) {
        padded[s].resize(padded_size(s));
        conv_out[s].resize(conv_out_size(s));
        pool_out[s].resize(pool_out_size(s));
        pool_arg[s].resize(pool_out_size(s));
        d_conv[s].resize(conv_out_size(s));
        d_pool[s].resize(pool_out_size(s));
    }
    d_padded[0].resize(padded_size(1));
    d_padded[1].resize(padded_size(2));
    hidden.resize(NetworkSpec::kHidden);
    d_hidden.resize(NetworkSpec::kHidden);
}

std::array<double, 2> forward(const Network& net, std::span<const double> input,
                              Workspace& ws) {
    if (input.size() != NetworkSpec::kInputSize) {
        throw DimensionError("forward: input must be 3x120x160, got " +
                             std::to_string(input.size()) + " values");
    }
    if (input.data() != ws.input.data()) {
        std::copy(input.begin(), input.end(), ws.input.begin());
    }
    const auto& layers = layout();
    const double* stage_in = ws.input.data();
    for (int s = 0; s < 3; ++s) {
        const Stage& st = kStages[s];
        zero_pad_copy(stage_in, st.in_ch, st.h, st.w, ws.padded[s].data());
        conv3x3_forward(ws.padded[s].data(), st.in_ch, st.h, st.w,
                        net.params().data() + layers[s].w_offset,
                        net.params().data() + layers[s].b_offset, st.out_ch,
                        ws.conv_out[s].data());
        relu_inplace(ws.conv_out[s].data(), ws.conv_out[s].size());
        maxpool_forward(ws.conv_out[s].data(), st.out_ch, st.h, st.w, st.pool,
                        ws.pool_out[s].data(), ws.pool_arg[s].data());
        stage_in = ws.pool_out[s].data();
    }
    dense_forward(ws.pool_out[2].data(), NetworkSpec::kFlat,
                  net.params().data() + layers[3].w_offset,
                  net.params().data() + layers[3].b_offset, NetworkSpec::kHidden,
                  ws.hidden.data());
    relu_inplace(ws.hidden.data(), ws.hidden.size());
    std::array<double, 2> out{};
    dense_forward(ws.hidden.data(), NetworkSpec::kHidden,
                  net.params().data() + layers[4].w_offset,
                  net.params().data() + layers[4].b_offset, NetworkSpec::kOut, out.data());
    ws.out = out;
    return out;
}

std::array<double, 2> forward(const Network& net, std::span<const float> input,
                              Workspace& ws) {
    if (input.size() != NetworkSpec::kInputSize) {
        throw DimensionError("forward: input must be 3x120x160, got " +
                             std::to_string(input.size()) + " values");
    }
    for (std::size_t i = 0; i < input.size(); ++i) ws.input[i] = input[i];
    return forward(net, ws.input, ws);
}

void backward_sample(const Network& net, const std::array<double, 2>& target,
                     Workspace& ws, std::span<double> grad) {
    if (grad.size() != NetworkSpec::kParamCount) {
        throw DimensionError("backward_sample: gradient buffer size mismatch");
    }
    const auto& layers = layout();
    const double* params = net.params().data();

    // d(sum of squared errors over the two outputs)/d(out)
    std::array<double, 2> d_out{2.0 * (ws.out[0] - target[0]), 2.0 * (ws.out[1] - target[1])};

    // dense2
    {
        const LayerView& l = layers[4];
        double* dw = grad.data() + l.w_offset;
        double* db = grad.data() + l.b_offset;
        std::fill(ws.d_hidden.begin(), ws.d_hidden.end(), 0.0);
        for (int o = 0; o < l.out_n; ++o) {
            db[o] += d_out[o];
            const double* wrow = params + l.w_offset + static_cast<std::size_t>(o) * l.in_n;
            double* dwrow = dw + static_cast<std::size_t>(o) * l.in_n;
            for (int i = 0; i < l.in_n; ++i) {
                dwrow[i] += d_out[o] * ws.hidden[i];
                ws.d_hidden[i] += wrow[i] * d_out[o];
            }
        }
    }
    for (int i = 0; i < NetworkSpec::kHidden; ++i) {
        if (!(ws.hidden[i] > 0.0)) ws.d_hidden[i] = 0.0;
    }

    // dense1
    {
        const LayerView& l = layers[3];
        double* dw = grad.data() + l.w_offset;
        double* db = grad.data() + l.b_offset;
        std::fill(ws.d_pool[2].begin(), ws.d_pool[2].end(), 0.0);
        for (int o = 0; o < l.out_n; ++o) {
            const double d = ws.d_hidden[o];
            db[o] += d;
            const double* wrow = params + l.w_offset + static_cast<std::size_t>(o) * l.in_n;
            double* dwrow = dw + static_cast<std::size_t>(o) * l.in_n;
            const double* x = ws.pool_out[2].data();
            double* dx = ws.d_pool[2].data();
            for (int i = 0; i < l.in_n; ++i) {
                dwrow[i] += d * x[i];
                dx[i] += wrow[i] * d;
            }
        }
    }

    // conv stages, last to first
    for (int s = 2; s >= 0; --s) {
        const Stage& st = kStages[s];
        // unpool into the full-resolution gradient, then gate by ReLU
        std::fill(ws.d_conv[s].begin(), ws.d_conv[s].end(), 0.0);
        for (std::size_t i = 0; i < ws.d_pool[s].size(); ++i) {
            ws.d_conv[s][ws.pool_arg[s][i]] += ws.d_pool[s][i];
        }
        for (std::size_t i = 0; i < ws.d_conv[s].size(); ++i) {
            if (!(ws.conv_out[s][i] > 0.0)) ws.d_conv[s][i] = 0.0;
        }
        const bool need_input_grad = s > 0;
        double* d_pad = nullptr;
        if (need_input_grad) {
            auto& buf = ws.d_padded[s - 1];
            std::fill(buf.begin(), buf.end(), 0.0);
            d_pad = buf.data();
        }
        conv3x3_backward(ws.padded[s].data(), ws.d_conv[s].data(), st.in_ch, st.out_ch, st.h,
                         st.w, params + layers[s].w_offset, grad.data() + layers[s].w_offset,
                         grad.data() + layers[s].b_offset, d_pad);
        if (need_input_grad) {
            // un-pad into the previous stage's pool-output gradient
            const int pw = st.w + 2;
            double* dst = ws.d_pool[s - 1].data();
            const double* src = ws.d_padded[s - 1].data();
            for (int c = 0; c < st.in_ch; ++c) {
                for (int y = 0; y < st.h; ++y) {
                    const double* row =
                        src + (static_cast<std::size_t>(c) * (st.h + 2) + y + 1) * pw + 1;
                    double* drow = dst + (static_cast<std::size_t>(c) * st.h + y) * st.w;
                    for (int x = 0; x < st.w; ++x) drow[x] = row[x];
                }
            }
        }
    }
}

OptimizerState::OptimizerState(double lr_)
    : lr(lr_), m(NetworkSpec::kParamCount, 0.0), v(NetworkSpec::kParamCount, 0.0) {}

void adamw_step(OptimizerState& opt, Network& net, std::span<const double> grad) {
    if (grad.size() != NetworkSpec::kParamCount) {
        throw DimensionError("adamw_step: gradient size mismatch");
    }
    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    double* theta = net.params().data();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
        opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        const double m_hat = opt.m[i] / bc1;
        const double v_hat = opt.v[i] / bc2;
        theta[i] -= opt.lr * (m_hat / (std::sqrt(v_hat) + opt.eps) + opt.weight_decay * theta[i]);
    }
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be > 0");
    if (batch < 1) throw ConfigError("TrainConfig: batch must be >= 1");
    if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
}

std::vector<EpochStats> train(Network& net, const SampleSource& data, const SampleSource* val,
                              const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n = data.size();
    if (n == 0) throw EmptyDatasetError("train: dataset is empty");

    const int threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
    OptimizerState opt(cfg.lr);
    opt.beta1 = cfg.beta1;
    opt.beta2 = cfg.beta2;
    opt.eps = cfg.eps;
    opt.weight_decay = cfg.weight_decay;

    std::vector<Workspace> slots(threads);
    const std::size_t batch_cap = std::min<std::size_t>(cfg.batch, n);
    std::vector<std::vector<double>> grad_rows(batch_cap,
                                               std::vector<double>(NetworkSpec::kParamCount));
    std::vector<double> sample_sq(batch_cap);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<EpochStats> history;
    history.reserve(cfg.epochs);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        deterministic_shuffle(order, hash_combine(cfg.shuffle_seed, epoch));
        double epoch_sq = 0.0;
        for (std::size_t start = 0; start < n; start += batch_cap) {
            const std::size_t b_n = std::min(batch_cap, n - start);
            parallel_for_slotted(0, b_n, threads, [&](std::size_t slot, std::size_t b) {
                Workspace& ws = slots[slot];
                const std::size_t idx = order[start + b];
                data.fill_input(idx, ws.input);
                const auto pred = forward(net, std::span<const double>(ws.input), ws);
                const auto tgt = data.label(idx);
                const double e0 = pred[0] - tgt[0];
                const double e1 = pred[1] - tgt[1];
                sample_sq[b] = e0 * e0 + e1 * e1;
                std::fill(grad_rows[b].begin(), grad_rows[b].end(), 0.0);
                backward_sample(net, tgt, ws, grad_rows[b]);
            });
            // fixed-order pairwise reduction over the sample gradients
            for (std::size_t stride = 1; stride < b_n; stride *= 2) {
                for (std::size_t i = 0; i + stride < b_n; i += 2 * stride) {
                    double* dst = grad_rows[i].data();
                    const double* src = grad_rows[i + stride].data();
                    for (std::size_t j = 0; j < NetworkSpec::kParamCount; ++j) dst[j] += src[j];
                }
            }
            const double scale = 1.0 / (2.0 * static_cast<double>(b_n));
            for (double& g : grad_rows[0]) g *= scale;
            adamw_step(opt, net, grad_rows[0]);
            for (std::size_t b = 0; b < b_n; ++b) epoch_sq += sample_sq[b];
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_mse = epoch_sq / (2.0 * static_cast<double>(n));
        stats.val_mse = val != nullptr ? evaluate_mse(net, *val, threads)
                                       : std::numeric_limits<double>::quiet_NaN();
        history.push_back(stats);
    }
    return history;
}

double evaluate_mse(const Network& net, const SampleSource& data, int threads) {
    const std::size_t n = data.size();
    if (n == 0) throw EmptyDatasetError("evaluate_mse: dataset is empty");
    if (threads <= 0) threads = default_thread_count();
    std::vector<Workspace> slots(threads);
    std::vector<double> sq(n);
    parallel_for_slotted(0, n, threads, [&](std::size_t slot, std::size_t i) {
        Workspace& ws = slots[slot];
        data.fill_input(i, ws.input);
        const auto pred = forward(net, std::span<const double>(ws.input), ws);
        const auto tgt = data.label(i);
        const double e0 = pred[0] - tgt[0];
        const double e1 = pred[1] - tgt[1];
        sq[i] = e0 * e0 + e1 * e1;
    });
    double total = 0.0;
    for (double s : sq) total += s;
    return total / (2.0 * static_cast<double>(n));
}

namespace {

constexpr char kMagic[4] = {'S', 'A', 'N', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

void append_bytes(std::vector<std::uint8_t>& buf, const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    buf.insert(buf.end(), p, p + n);
}

template <typename T>
void append_scalar(std::vector<std::uint8_t>& buf, T v) {
    append_bytes(buf, &v, sizeof(T));
}

class Cursor {
public:
    Cursor(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::size_t offset() const { return off_; }

    void read(void* dst, std::size_t n, const char* what) {
        if (off_ + n > size_) {
            throw FormatError(std::string("model file truncated while reading ") + what, off_);
        }
        std::memcpy(dst, data_ + off_, n);
        off_ += n;
    }

    template <typename T>
    T read_scalar(const char* what) {
        T v;
        read(&v, sizeof(T), what);
        return v;
    }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t off_ = 0;
};

}  // namespace

void save(const Network& net, const std::string& path) {
    std::vector<std::uint8_t> buf;
    buf.reserve(NetworkSpec::kParamCount * sizeof(double) + 128);
    append_bytes(buf, kMagic, 4);
    append_scalar<std::uint32_t>(buf, kFormatVersion);
    append_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(layout().size()));
    for (const LayerView& l : layout()) {
        append_scalar<std::uint8_t>(buf, static_cast<std::uint8_t>(l.role));
        if (l.role == LayerView::Role::kConv) {
            append_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(l.out_n));
            append_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(l.in_n));
            append_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(l.kh));
            append_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(l.kw));
        } else {
            append_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(l.out_n));
            append_scalar<std::uint32_t>(buf, static_cast<std::uint32_t>(l.in_n));
        }
        append_bytes(buf, net.params().data() + l.w_offset, l.w_size * sizeof(double));
        append_bytes(buf, net.params().data() + l.b_offset, l.b_size * sizeof(double));
    }
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    append_scalar<std::uint32_t>(buf, crc);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save: cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("save: short write to " + path);
}

Network load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load: cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());

    Cursor cur(buf.data(), buf.size());
    char magic[4];
    cur.read(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad magic, expected \"SANN\"", 0);
    }
    const auto version = cur.read_scalar<std::uint32_t>("version");
    if (version != kFormatVersion) {
        throw FormatError("unsupported model format version " + std::to_string(version), 4);
    }
    const auto layer_count = cur.read_scalar<std::uint32_t>("layer count");
    if (layer_count != layout().size()) {
        throw FormatError("expected " + std::to_string(layout().size()) + " layers, found " +
                              std::to_string(layer_count),
                          8);
    }

    Network net;
    std::span<double> params{net.params()};
    for (const LayerView& l : layout()) {
        const std::size_t role_off = cur.offset();
        const auto role = cur.read_scalar<std::uint8_t>("layer role");
        if (role != static_cast<std::uint8_t>(l.role)) {
            throw FormatError("layer role mismatch", role_off);
        }
        const std::size_t dims_off = cur.offset();
        if (l.role == LayerView::Role::kConv) {
            const auto out_n = cur.read_scalar<std::uint32_t>("conv dims");
            const auto in_n = cur.read_scalar<std::uint32_t>("conv dims");
            const auto kh = cur.read_scalar<std::uint32_t>("conv dims");
            const auto kw = cur.read_scalar<std::uint32_t>("conv dims");
            if (out_n != static_cast<std::uint32_t>(l.out_n) ||
                in_n != static_cast<std::uint32_t>(l.in_n) || kh != 3 || kw != 3) {
                throw FormatError("conv layer dimensions do not match the fixed architecture",
                                  dims_off);
            }
        } else {
            const auto out_n = cur.read_scalar<std::uint32_t>("dense dims");
            const auto in_n = cur.read_scalar<std::uint32_t>("dense dims");
            if (out_n != static_cast<std::uint32_t>(l.out_n) ||
                in_n != static_cast<std::uint32_t>(l.in_n)) {
                throw FormatError("dense layer dimensions do not match the fixed architecture",
                                  dims_off);
            }
        }
        cur.read(params.data() + l.w_offset, l.w_size * sizeof(double), "weights");
        cur.read(params.data() + l.b_offset, l.b_size * sizeof(double), "biases");
    }
    const std::size_t crc_off = cur.offset();
    const auto stored_crc = cur.read_scalar<std::uint32_t>("CRC32 trailer");
    const std::uint32_t actual_crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(crc_off)));
    if (stored_crc != actual_crc) {
        throw FormatError("CRC32 mismatch, payload is corrupted", crc_off);
    }
    if (cur.offset() != buf.size()) {
        throw FormatError("trailing bytes after CRC32", cur.offset());
    }
    for (double p : params) {
        if (!std::isfinite(p)) throw FormatError("non-finite parameter value", crc_off);
    }
    return net;
}

}  // namespace softarm::tinynet
