#include "softarm/dataset.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "softarm/errors.hpp"
#include "softarm/rng.hpp"

namespace softarm::dataset {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'S', 'D'};
constexpr std::uint32_t kFormatVersion = 1;

struct CrcStream {
    std::ofstream file;
    std::uint32_t crc = 0;
    std::uint64_t written = 0;

    void write(const void* data, std::size_t n) {
        file.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        crc = static_cast<std::uint32_t>(
            crc32(crc, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
        written += n;
    }

    template <typename T>
    void write_scalar(T v) {
        write(&v, sizeof(T));
    }
};

}  // namespace

struct DatasetWriter::Impl {
    CrcStream out;
    std::string path;
    std::uint64_t declared = 0;
    std::uint64_t appended = 0;
    bool finished = false;
};

DatasetWriter::DatasetWriter(const std::string& path, std::uint64_t sample_count,
                             std::uint64_t seed, const std::string& metadata)
    : impl_(std::make_unique<Impl>()) {
    impl_->path = path;
    impl_->declared = sample_count;
    impl_->out.file.open(path, std::ios::binary | std::ios::trunc);
    if (!impl_->out.file) throw IoError("DatasetWriter: cannot open " + path + " for writing");

    impl_->out.write(kMagic, 4);
    impl_->out.write_scalar<std::uint32_t>(kFormatVersion);
    impl_->out.write_scalar<std::uint64_t>(sample_count);
    impl_->out.write_scalar<std::uint32_t>(kChannels);
    impl_->out.write_scalar<std::uint32_t>(kHeight);
    impl_->out.write_scalar<std::uint32_t>(kWidth);
    impl_->out.write_scalar<std::uint64_t>(seed);
    impl_->out.write_scalar<std::uint32_t>(static_cast<std::uint32_t>(metadata.size()));
    impl_->out.write(metadata.data(), metadata.size());
}

DatasetWriter::~DatasetWriter() = default;

void DatasetWriter::append(std::span<const std::uint8_t> pixels, float alpha_deg,
                           float beta_deg, double timestamp_s) {
    if (impl_->finished) throw IoError("DatasetWriter: append after finish");
    if (pixels.size() != kPixelsPerSample) {
        throw DimensionError("DatasetWriter: sample must have " +
                             std::to_string(kPixelsPerSample) + " pixels");
    }
    if (std::fabs(alpha_deg) > 45.0f || std::fabs(beta_deg) > 45.0f) {
        throw DomainError("DatasetWriter: label outside [-45, 45] deg");
    }
    if (impl_->appended == impl_->declared) {
        throw IoError("DatasetWriter: more samples appended than declared");
    }
    impl_->out.write(pixels.data(), pixels.size());
    impl_->out.write_scalar<float>(alpha_deg);
    impl_->out.write_scalar<float>(beta_deg);
    impl_->out.write_scalar<double>(timestamp_s);
    impl_->appended += 1;
}

void DatasetWriter::finish() {
    if (impl_->finished) return;
    if (impl_->appended != impl_->declared) {
        throw IoError("DatasetWriter: declared " + std::to_string(impl_->declared) +
                      " samples but appended " + std::to_string(impl_->appended));
    }
    impl_->out.file.write(reinterpret_cast<const char*>(&impl_->out.crc), sizeof(std::uint32_t));
    impl_->out.file.flush();
    if (!impl_->out.file) throw IoError("DatasetWriter: write failure on " + impl_->path);
    impl_->out.file.close();
    impl_->finished = true;
}

Dataset Dataset::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("Dataset::load: cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());

    std::size_t off = 0;
    auto need = [&](std::size_t n, const char* what) {
        if (off + n > buf.size()) {
            throw FormatError(std::string("dataset file truncated while reading ") + what, off);
        }
    };
    auto read_bytes = [&](void* dst, std::size_t n, const char* what) {
        need(n, what);
        std::memcpy(dst, buf.data() + off, n);
        off += n;
    };

    char magic[4];
    read_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad magic, expected \"SASD\"", 0);
    }
    std::uint32_t version = 0;
    read_bytes(&version, 4, "version");
    if (version != kFormatVersion) {
        throw FormatError("unsupported dataset format version " + std::to_string(version), 4);
    }
    std::uint64_t count = 0;
    read_bytes(&count, 8, "sample count");
    std::uint32_t ch = 0, h = 0, w = 0;
    const std::size_t dims_off = off;
    read_bytes(&ch, 4, "channels");
    read_bytes(&h, 4, "height");
    read_bytes(&w, 4, "width");
    if (ch != kChannels || h != kHeight || w != kWidth) {
        throw FormatError("dataset dims must be 3x120x160", dims_off);
    }
    std::uint64_t seed = 0;
    read_bytes(&seed, 8, "seed");
    std::uint32_t meta_len = 0;
    read_bytes(&meta_len, 4, "metadata length");
    need(meta_len, "metadata");
    std::string metadata(reinterpret_cast<const char*>(buf.data() + off), meta_len);
    off += meta_len;

    const std::size_t payload_end = off + count * kSampleBytes;
    if (payload_end + 4 != buf.size()) {
        throw FormatError("dataset size does not match header (want " +
                              std::to_string(payload_end + 4) + " bytes, have " +
                              std::to_string(buf.size()) + ")",
                          off);
    }
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, buf.data() + payload_end, 4);
    const std::uint32_t actual_crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(payload_end)));
    if (stored_crc != actual_crc) {
        throw FormatError("CRC32 mismatch, dataset is corrupted", payload_end);
    }

    Dataset ds;
    ds.count_ = count;
    ds.seed_ = seed;
    ds.metadata_ = std::move(metadata);
    ds.pixels_.resize(count * kPixelsPerSample);
    ds.labels_.resize(count * 2);
    ds.timestamps_.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        read_bytes(ds.pixels_.data() + i * kPixelsPerSample, kPixelsPerSample, "pixels");
        read_bytes(ds.labels_.data() + i * 2, 8, "label");
        read_bytes(&ds.timestamps_[i], 8, "timestamp");
    }
    return ds;
}

void Dataset::fill_input(std::size_t index, std::span<double> dst) const {
    if (index >= count_) throw DomainError("Dataset: sample index out of range");
    if (dst.size() != kPixelsPerSample) {
        throw DimensionError("Dataset::fill_input: destination must hold " +
                             std::to_string(kPixelsPerSample) + " values");
    }
    const std::uint8_t* src = pixels_.data() + index * kPixelsPerSample;
    for (std::size_t i = 0; i < kPixelsPerSample; ++i) dst[i] = normalize_pixel(src[i]);
}

std::array<double, 2> Dataset::label(std::size_t index) const {
    if (index >= count_) throw DomainError("Dataset: sample index out of range");
    return {static_cast<double>(labels_[index * 2]), static_cast<double>(labels_[index * 2 + 1])};
}

double Dataset::timestamp(std::size_t index) const {
    if (index >= count_) throw DomainError("Dataset: sample index out of range");
    return timestamps_[index];
}

std::span<const std::uint8_t> Dataset::pixels(std::size_t index) const {
    if (index >= count_) throw DomainError("Dataset: sample index out of range");
    return {pixels_.data() + index * kPixelsPerSample, kPixelsPerSample};
}

std::pair<SplitView, SplitView> split(const Dataset& data, double train_fraction,
                                      std::uint64_t seed) {
    if (data.size() == 0) throw EmptyDatasetError("split: dataset is empty");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("split: train_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    deterministic_shuffle(order, seed);
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> val_idx(order.begin() + n_train, order.end());
    return {SplitView(data, std::move(train_idx)), SplitView(data, std::move(val_idx))};
}

void export_csv(const std::vector<LogRow>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("export_csv: cannot open " + path + " for writing");
    f << "time,alpha_gt,beta_gt,alpha_pred,beta_pred,alpha_sp,beta_sp,"
         "p_a,p_b,p_c,u_alpha,u_beta\n";
    char line[512];
    double sq_a = 0.0, sq_b = 0.0;
    for (const LogRow& r : rows) {
        std::snprintf(line, sizeof(line),
                      "%.6f,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                      r.t, r.alpha_gt, r.beta_gt, r.alpha_pred, r.beta_pred, r.alpha_sp,
                      r.beta_sp, r.p_a, r.p_b, r.p_c, r.u_alpha, r.u_beta);
        f << line;
        sq_a += (r.alpha_pred - r.alpha_gt) * (r.alpha_pred - r.alpha_gt);
        sq_b += (r.beta_pred - r.beta_gt) * (r.beta_pred - r.beta_gt);
    }
    if (!rows.empty()) {
        const double n = static_cast<double>(rows.size());
        std::snprintf(line, sizeof(line),
                      "# rmse_alpha_deg=%.6f rmse_beta_deg=%.6f rmse_combined_deg=%.6f\n",
                      std::sqrt(sq_a / n), std::sqrt(sq_b / n),
                      std::sqrt((sq_a + sq_b) / (2.0 * n)));
        f << line;
    }
    if (!f) throw IoError("export_csv: write failure on " + path);
}

}  // namespace softarm::dataset
