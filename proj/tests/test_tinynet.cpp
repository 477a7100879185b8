#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "softarm/errors.hpp"
#include "softarm/rng.hpp"
#include "softarm/tinynet.hpp"

using namespace softarm;
using namespace softarm::tinynet;

namespace {

std::vector<double> random_input(std::uint64_t seed) {
    std::vector<double> in(NetworkSpec::kInputSize);
    for (std::size_t i = 0; i < in.size(); ++i) {
        in[i] = 2.0 * u64_to_unit(hash_combine(seed, i)) - 1.0;
    }
    return in;
}

double batch_loss(const Network& net, const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::array<double, 2>>& targets, Workspace& ws) {
    double sq = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto pred = forward(net, std::span<const double>(inputs[i]), ws);
        const double e0 = pred[0] - targets[i][0];
        const double e1 = pred[1] - targets[i][1];
        sq += e0 * e0 + e1 * e1;
    }
    return sq / (2.0 * static_cast<double>(inputs.size()));
}

std::vector<double> analytic_grad(const Network& net,
                                  const std::vector<std::vector<double>>& inputs,
                                  const std::vector<std::array<double, 2>>& targets,
                                  Workspace& ws) {
    std::vector<double> grad(NetworkSpec::kParamCount, 0.0);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        forward(net, std::span<const double>(inputs[i]), ws);
        backward_sample(net, targets[i], ws, grad);
    }
    const double scale = 1.0 / (2.0 * static_cast<double>(inputs.size()));
    for (double& g : grad) g *= scale;
    return grad;
}

// Frames that smoothly and strongly encode the labels, for train() oracles
// that should not depend on the renderer.
class SyntheticSource final : public SampleSource {
public:
    SyntheticSource(std::size_t n, std::uint64_t seed) : n_(n) {
        labels_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels_[i] = {50.0 * u64_to_unit(hash_combine(seed, 2 * i)) - 25.0,
                          50.0 * u64_to_unit(hash_combine(seed, 2 * i + 1)) - 25.0};
        }
    }

    std::size_t size() const override { return n_; }

    void fill_input(std::size_t index, std::span<double> dst) const override {
        const double a_n = labels_[index][0] / 30.0;
        const double b_n = labels_[index][1] / 30.0;
        std::size_t j = 0;
        for (int c = 0; c < NetworkSpec::kInCh; ++c) {
            for (int y = 0; y < NetworkSpec::kInH; ++y) {
                const double gy = std::sin(2.0 * M_PI * y / NetworkSpec::kInH + c);
                for (int x = 0; x < NetworkSpec::kInW; ++x) {
                    const double gx = std::cos(2.0 * M_PI * x / NetworkSpec::kInW + 0.7 * c);
                    dst[j++] = std::clamp(a_n * gy + b_n * gx + 0.1 * gy * gx, -1.0, 1.0);
                }
            }
        }
    }

    std::array<double, 2> label(std::size_t index) const override { return labels_[index]; }

private:
    std::size_t n_;
    std::vector<std::array<double, 2>> labels_;
};

}  // namespace

TEST_CASE("parameter count matches the fixed architecture") {
    CHECK(Network::param_count() == 9378);
    const auto& layers = Network::layers();
    CHECK(layers[0].param_count() == 112);   // 4*(3*3*3) + 4
    CHECK(layers[1].param_count() == 296);   // 8*(4*3*3) + 8
    CHECK(layers[2].param_count() == 1168);  // 16*(8*3*3) + 16
    CHECK(layers[3].param_count() == 7720);  // 192*40 + 40
    CHECK(layers[4].param_count() == 82);    // 40*2 + 2
    std::size_t total = 0;
    for (const auto& l : layers) total += l.param_count();
    CHECK(total == 9378);
}

TEST_CASE("intermediate feature map sizes") {
    Workspace ws;
    CHECK(ws.pool_out[0].size() == 4u * 24 * 32);
    CHECK(ws.pool_out[1].size() == 8u * 6 * 8);
    CHECK(ws.pool_out[2].size() == 16u * 3 * 4);
    CHECK(ws.pool_out[2].size() == static_cast<std::size_t>(NetworkSpec::kFlat));
}

TEST_CASE("zero network maps every input to zero output") {
    Network net;
    Workspace ws;
    const auto in = random_input(1);
    const auto out = forward(net, std::span<const double>(in), ws);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("forward rejects wrong input sizes") {
    Network net;
    Workspace ws;
    std::vector<double> wrong(100);
    CHECK_THROWS_AS(forward(net, std::span<const double>(wrong), ws), DimensionError);
}

TEST_CASE("forward is deterministic") {
    const Network net = Network::random_init(77);
    Workspace ws1, ws2;
    const auto in = random_input(2);
    const auto a = forward(net, std::span<const double>(in), ws1);
    const auto b = forward(net, std::span<const double>(in), ws2);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

TEST_CASE("gradients match central finite differences") {
    const std::uint64_t seed = 2718;
    Network net = Network::random_init(seed);
    Workspace ws;

    std::vector<std::vector<double>> inputs;
    std::vector<std::array<double, 2>> targets;
    for (int i = 0; i < 2; ++i) {
        inputs.push_back(random_input(hash_combine(seed, 100 + i)));
        targets.push_back({60.0 * u64_to_unit(hash_combine(seed, 200 + i)) - 30.0,
                           60.0 * u64_to_unit(hash_combine(seed, 300 + i)) - 30.0});
    }
    const auto grad = analytic_grad(net, inputs, targets, ws);

    const double h = 1e-5;
    double max_rel = 0.0;
    auto check_index = [&](std::size_t idx) {
        double* theta = net.params().data();
        const double saved = theta[idx];
        theta[idx] = saved + h;
        const double lp = batch_loss(net, inputs, targets, ws);
        theta[idx] = saved - h;
        const double lm = batch_loss(net, inputs, targets, ws);
        theta[idx] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel =
            std::fabs(grad[idx] - fd) / std::max({std::fabs(grad[idx]), std::fabs(fd), 1e-2});
        max_rel = std::max(max_rel, rel);
        REQUIRE(rel < 1e-4);
    };

    // every bias plus a spread of weights from each tensor
    for (const auto& l : Network::layers()) {
        for (std::size_t i = 0; i < l.b_size; ++i) check_index(l.b_offset + i);
        const std::size_t step = std::max<std::size_t>(1, l.w_size / 20);
        for (std::size_t i = 0; i < l.w_size; i += step) check_index(l.w_offset + i);
    }
    MESSAGE("max relative error: ", max_rel);
}

TEST_CASE("zero input, zero target, zero parameters give zero gradients") {
    Network net;
    Workspace ws;
    std::vector<double> in(NetworkSpec::kInputSize, 0.0);
    forward(net, std::span<const double>(in), ws);
    std::vector<double> grad(NetworkSpec::kParamCount, 0.0);
    backward_sample(net, {0.0, 0.0}, ws, grad);
    for (double g : grad) REQUIRE(g == 0.0);
}

TEST_CASE("doubling the residual doubles every gradient") {
    const Network net = Network::random_init(5);
    Workspace ws;
    const auto in = random_input(6);
    const auto pred = forward(net, std::span<const double>(in), ws);

    const std::array<double, 2> t1{pred[0] - 1.5, pred[1] + 2.5};
    const std::array<double, 2> t2{pred[0] - 3.0, pred[1] + 5.0};
    std::vector<double> g1(NetworkSpec::kParamCount, 0.0), g2(NetworkSpec::kParamCount, 0.0);
    forward(net, std::span<const double>(in), ws);
    backward_sample(net, t1, ws, g1);
    forward(net, std::span<const double>(in), ws);
    backward_sample(net, t2, ws, g2);
    for (std::size_t i = 0; i < g1.size(); ++i) {
        REQUIRE(g2[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-12));
    }
}

TEST_CASE("adamw closed-form behaviors") {
    SUBCASE("zero gradient and zero weight decay leave parameters unchanged") {
        Network net = Network::random_init(9);
        const std::vector<double> before(net.params().begin(), net.params().end());
        OptimizerState opt(1e-3);
        opt.weight_decay = 0.0;
        const std::vector<double> zero(NetworkSpec::kParamCount, 0.0);
        adamw_step(opt, net, zero);
        for (std::size_t i = 0; i < before.size(); ++i) REQUIRE(net.params()[i] == before[i]);
    }
    SUBCASE("first step moves by -lr * g / (|g| + eps)") {
        Network net;
        OptimizerState opt(1e-3);
        opt.weight_decay = 0.0;
        std::vector<double> grad(NetworkSpec::kParamCount);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            grad[i] = (i % 3 == 0 ? 1.0 : -0.5) * (1.0 + static_cast<double>(i % 7));
        }
        adamw_step(opt, net, grad);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double expect = -opt.lr * grad[i] / (std::fabs(grad[i]) + opt.eps);
            REQUIRE(net.params()[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("pure weight decay is geometric") {
        Network net = Network::random_init(10);
        const std::vector<double> before(net.params().begin(), net.params().end());
        OptimizerState opt(1e-2);
        opt.weight_decay = 0.1;
        const std::vector<double> zero(NetworkSpec::kParamCount, 0.0);
        const int k = 5;
        for (int i = 0; i < k; ++i) adamw_step(opt, net, zero);
        const double factor = std::pow(1.0 - opt.lr * opt.weight_decay, k);
        for (std::size_t i = 0; i < before.size(); ++i) {
            REQUIRE(net.params()[i] == doctest::Approx(before[i] * factor).epsilon(1e-12));
        }
    }
}

TEST_CASE("train memorizes a small set and is reproducible") {
    const SyntheticSource data(128, 424242);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch = 128;
    cfg.shuffle_seed = 31337;

    Network net = Network::random_init(cfg.shuffle_seed);
    const auto history = train(net, data, nullptr, cfg);
    REQUIRE(history.size() == 200);
    const double first = history.front().train_mse;
    const double last = history.back().train_mse;
    MESSAGE("memorization loss: ", first, " -> ", last);
    CHECK(last * 10.0 <= first);

    Network net2 = Network::random_init(cfg.shuffle_seed);
    const auto history2 = train(net2, data, nullptr, cfg);
    REQUIRE(history2.size() == history.size());
    for (std::size_t i = 0; i < history.size(); ++i) {
        REQUIRE(history2[i].train_mse == history[i].train_mse);
    }
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        REQUIRE(net.params()[i] == net2.params()[i]);
    }
}

TEST_CASE("training is thread-count invariant") {
    const SyntheticSource data(12, 777);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch = 5;  // exercises a partial final batch
    cfg.shuffle_seed = 99;

    cfg.threads = 1;
    Network a = Network::random_init(1);
    const auto ha = train(a, data, nullptr, cfg);
    cfg.threads = 2;
    Network b = Network::random_init(1);
    const auto hb = train(b, data, nullptr, cfg);
    for (std::size_t i = 0; i < ha.size(); ++i) REQUIRE(ha[i].train_mse == hb[i].train_mse);
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        REQUIRE(a.params()[i] == b.params()[i]);
    }
}

TEST_CASE("empty dataset is rejected") {
    const SyntheticSource data(0, 1);
    Network net;
    TrainConfig cfg;
    CHECK_THROWS_AS(train(net, data, nullptr, cfg), EmptyDatasetError);
}

TEST_CASE("model file round trip") {
    const Network net = Network::random_init(4711);
    const std::string path = "tinynet_roundtrip.sann";
    save(net, path);
    const Network back = load(path);
    Workspace ws1, ws2;
    for (int i = 0; i < 100; ++i) {
        const auto in = random_input(9000 + i);
        const auto a = forward(net, std::span<const double>(in), ws1);
        const auto b = forward(back, std::span<const double>(in), ws2);
        REQUIRE(a[0] == b[0]);
        REQUIRE(a[1] == b[1]);
    }
    std::remove(path.c_str());
}

TEST_CASE("model loader rejects malformed files") {
    const Network net = Network::random_init(1);
    const std::string path = "tinynet_corrupt.sann";
    save(net, path);

    SUBCASE("truncation") {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        std::vector<unsigned char> buf(4096);
        const std::size_t n = std::fread(buf.data(), 1, buf.size(), f);
        std::fclose(f);
        f = std::fopen(path.c_str(), "wb");
        std::fwrite(buf.data(), 1, n / 2, f);
        std::fclose(f);
        CHECK_THROWS_AS(load(path), FormatError);
    }
    SUBCASE("wrong magic names the expected one") {
        std::FILE* f = std::fopen(path.c_str(), "rb+");
        std::fputc('X', f);
        std::fclose(f);
        try {
            load(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("SANN") != std::string::npos);
            CHECK(e.offset() == 0);
        }
    }
    SUBCASE("flipped payload byte fails the CRC") {
        std::FILE* f = std::fopen(path.c_str(), "rb+");
        std::fseek(f, 200, SEEK_SET);
        const int c = std::fgetc(f);
        std::fseek(f, 200, SEEK_SET);
        std::fputc(c ^ 0xff, f);
        std::fclose(f);
        CHECK_THROWS_AS(load(path), FormatError);
    }
    std::remove(path.c_str());
}

TEST_CASE("single forward pass stays within the 30 Hz budget") {
    const Network net = Network::random_init(8);
    Workspace ws;
    const auto in = random_input(12);
    for (int i = 0; i < 3; ++i) forward(net, std::span<const double>(in), ws);

    std::vector<double> ms(50);
    for (double& m : ms) {
        const auto t0 = std::chrono::steady_clock::now();
        forward(net, std::span<const double>(in), ws);
        const auto t1 = std::chrono::steady_clock::now();
        m = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    std::nth_element(ms.begin(), ms.begin() + ms.size() / 2, ms.end());
    const double median = ms[ms.size() / 2];
    MESSAGE("median forward latency: ", median, " ms");
    CHECK(median < 33.0);
}
