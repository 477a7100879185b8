#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softarm/tinynet.hpp"

namespace softarm::dataset {

inline constexpr int kChannels = 3;
inline constexpr int kHeight = 120;
inline constexpr int kWidth = 160;
inline constexpr std::size_t kPixelsPerSample =
    static_cast<std::size_t>(kChannels) * kHeight * kWidth;
// pixels (u8) + label (2x f32) + timestamp (f64)
inline constexpr std::size_t kSampleBytes = kPixelsPerSample + 2 * 4 + 8;

// Storage quantization: frames live on disk as u8, training sees [-1, 1].
inline std::uint8_t quantize_pixel(double v) {
    const long q = std::lround((v + 1.0) * 127.5);
    return static_cast<std::uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q));
}
inline double normalize_pixel(std::uint8_t p) { return p / 127.5 - 1.0; }

// Streaming writer for the "SASD" container. The sample count is declared up
// front so the header never needs patching and the CRC32 runs alongside the
// writes. finish() must be called; it fails if the count does not match.
class DatasetWriter {
public:
    DatasetWriter(const std::string& path, std::uint64_t sample_count, std::uint64_t seed,
                  const std::string& metadata);
    ~DatasetWriter();

    DatasetWriter(const DatasetWriter&) = delete;
    DatasetWriter& operator=(const DatasetWriter&) = delete;

    void append(std::span<const std::uint8_t> pixels, float alpha_deg, float beta_deg,
                double timestamp_s);
    void finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// In-memory dataset; pixels stay u8 and are normalized on access.
class Dataset final : public tinynet::SampleSource {
public:
    static Dataset load(const std::string& path);

    std::size_t size() const override { return count_; }
    void fill_input(std::size_t index, std::span<double> dst) const override;
    std::array<double, 2> label(std::size_t index) const override;
    double timestamp(std::size_t index) const;
    std::span<const std::uint8_t> pixels(std::size_t index) const;

    std::uint64_t seed() const { return seed_; }
    const std::string& metadata() const { return metadata_; }

private:
    std::size_t count_ = 0;
    std::uint64_t seed_ = 0;
    std::string metadata_;
    std::vector<std::uint8_t> pixels_;
    std::vector<float> labels_;
    std::vector<double> timestamps_;
};

// Index subset of a dataset, usable wherever a SampleSource is expected.
class SplitView final : public tinynet::SampleSource {
public:
    SplitView(const Dataset& base, std::vector<std::size_t> indices)
        : base_(&base), indices_(std::move(indices)) {}

    std::size_t size() const override { return indices_.size(); }
    void fill_input(std::size_t index, std::span<double> dst) const override {
        base_->fill_input(indices_.at(index), dst);
    }
    std::array<double, 2> label(std::size_t index) const override {
        return base_->label(indices_.at(index));
    }
    const std::vector<std::size_t>& indices() const { return indices_; }

private:
    const Dataset* base_;
    std::vector<std::size_t> indices_;
};

// Seeded random partition into round(fraction * n) training samples and the
// rest; disjoint and exhaustive by construction.
std::pair<SplitView, SplitView> split(const Dataset& data, double train_fraction,
                                      std::uint64_t seed);

// One telemetry row of a closed-loop run, logged at the logging rate.
struct LogRow {
    double t = 0.0;
    double alpha_gt = 0.0, beta_gt = 0.0;
    double alpha_pred = 0.0, beta_pred = 0.0;
    double alpha_sp = 0.0, beta_sp = 0.0;
    double p_a = 0.0, p_b = 0.0, p_c = 0.0;
    double u_alpha = 0.0, u_beta = 0.0;
};

// CSV with a fixed header; a prediction-vs-truth RMSE summary is appended as
// a trailing comment line (omitted for an empty log).
void export_csv(const std::vector<LogRow>& rows, const std::string& path);

}  // namespace softarm::dataset
