#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace softarm::tinynet {

// Fixed architecture: 3x120x160 input, three conv(k3, s1, p1) + ReLU +
// max-pool blocks with channels (4, 8, 16) and pool sizes (5, 4, 2), then
// dense 192->40 -> ReLU -> dense 40->2. 9378 parameters total.
struct NetworkSpec {
    static constexpr int kInCh = 3;
    static constexpr int kInH = 120;
    static constexpr int kInW = 160;
    static constexpr std::array<int, 3> kConvCh{4, 8, 16};
    static constexpr std::array<int, 3> kPool{5, 4, 2};
    static constexpr int kFlat = 192;
    static constexpr int kHidden = 40;
    static constexpr int kOut = 2;
    static constexpr int kParamCount = 9378;

    static constexpr std::size_t kInputSize =
        static_cast<std::size_t>(kInCh) * kInH * kInW;
};

// Parameter layout inside the flat vector, in serialization order.
struct LayerView {
    enum class Role : std::uint8_t { kConv = 0, kDense = 1 };
    Role role;
    int out_n;   // output channels / neurons
    int in_n;    // input channels / neurons
    int kh, kw;  // conv only
    std::size_t w_offset;
    std::size_t w_size;
    std::size_t b_offset;
    std::size_t b_size;

    std::size_t param_count() const { return w_size + b_size; }
};

// The regression network: a flat parameter vector plus the fixed layout.
class Network {
public:
    Network();  // zero-initialized parameters

    static Network random_init(std::uint64_t seed);  // fan-in-scaled uniform

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    static const std::array<LayerView, 5>& layers();
    static std::size_t param_count() { return NetworkSpec::kParamCount; }

    std::span<const double> weights(int layer) const;
    std::span<const double> biases(int layer) const;

private:
    std::vector<double> params_;
};

// Scratch tensors for one forward/backward pass; reuse across calls.
struct Workspace {
    Workspace();

    std::vector<double> input;                 // 3x120x160
    std::array<std::vector<double>, 3> padded; // zero-padded conv inputs
    std::array<std::vector<double>, 3> conv_out;  // post-ReLU, full res
    std::array<std::vector<double>, 3> pool_out;
    std::array<std::vector<int>, 3> pool_arg;  // argmax into conv_out
    std::vector<double> hidden;                // post-ReLU
    std::array<double, 2> out{};

    // backward scratch
    std::vector<double> d_hidden;
    std::array<std::vector<double>, 3> d_conv;  // pre-ReLU grads, full res
    std::array<std::vector<double>, 3> d_pool;  // grads at pool outputs
    std::array<std::vector<double>, 2> d_padded;  // padded-input grads, conv2/conv3
};

// Forward pass. Input is a normalized 3x120x160 stack in [-1, 1]; returns
// (alpha, beta) in degrees. Throws DimensionError on wrong input size.
std::array<double, 2> forward(const Network& net, std::span<const double> input,
                              Workspace& ws);
std::array<double, 2> forward(const Network& net, std::span<const float> input,
                              Workspace& ws);

// Gradient of the squared error summed over the two outputs for the sample
// held in ws (call forward first). Accumulates into grad (size 9378). The
// caller divides by (batch * 2) to get mean-squared-error gradients.
void backward_sample(const Network& net, const std::array<double, 2>& target,
                     Workspace& ws, std::span<double> grad);

struct OptimizerState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    std::uint64_t step = 0;
    std::vector<double> m;  // first moments
    std::vector<double> v;  // second moments

    explicit OptimizerState(double lr_ = 1e-3);
};

// Decoupled weight decay update:
//   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
void adamw_step(OptimizerState& opt, Network& net, std::span<const double> grad);

// Anything that can hand out normalized inputs and degree labels.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual void fill_input(std::size_t index, std::span<double> dst) const = 0;
    virtual std::array<double, 2> label(std::size_t index) const = 0;
};

struct TrainConfig {
    double lr = 1e-3;
    int batch = 128;
    int epochs = 100;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t shuffle_seed = 1;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0;  // deg^2, mean over samples and both axes
    double val_mse = 0.0;    // NaN when no validation set
};

// Seeded-shuffle epoch loop over mini-batches (last partial batch included).
// Per-sample gradients are reduced pairwise in sample order, so the result is
// independent of the thread count. val may be null.
std::vector<EpochStats> train(Network& net, const SampleSource& data,
                              const SampleSource* val, const TrainConfig& cfg);

// Mean squared error of the network over a whole source (deg^2).
double evaluate_mse(const Network& net, const SampleSource& data, int threads = 0);

// Model file I/O; round-trips are bit-exact. Format: magic "SANN", version,
// layer count, per-layer role/dims/weights/biases (float64), CRC32 trailer.
void save(const Network& net, const std::string& path);
Network load(const std::string& path);

}  // namespace softarm::tinynet
