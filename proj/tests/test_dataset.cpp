#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "softarm/dataset.hpp"
#include "softarm/errors.hpp"
#include "softarm/rng.hpp"

using namespace softarm;
using namespace softarm::dataset;

namespace {

std::vector<std::uint8_t> random_pixels(std::uint64_t seed) {
    std::vector<std::uint8_t> px(kPixelsPerSample);
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = static_cast<std::uint8_t>(hash_combine(seed, i) & 0xff);
    }
    return px;
}

void write_test_dataset(const std::string& path, int n, std::uint64_t seed) {
    DatasetWriter w(path, static_cast<std::uint64_t>(n), seed, "unit test");
    for (int i = 0; i < n; ++i) {
        const auto px = random_pixels(hash_combine(seed, static_cast<std::uint64_t>(i)));
        w.append(px, static_cast<float>(i % 31) - 15.0f, 15.0f - static_cast<float>(i % 29),
                 0.1 * i);
    }
    w.finish();
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("pixel normalization endpoints and quantization round trip") {
    CHECK(normalize_pixel(0) == -1.0);
    CHECK(normalize_pixel(255) == 1.0);
    CHECK(normalize_pixel(128) == doctest::Approx(128.0 / 127.5 - 1.0).epsilon(1e-15));
    for (int p = 0; p < 256; ++p) {
        REQUIRE(quantize_pixel(normalize_pixel(static_cast<std::uint8_t>(p))) == p);
    }
}

TEST_CASE("dataset write/load round trip") {
    const std::string path = "ds_roundtrip.sasd";
    write_test_dataset(path, 7, 1234);
    const Dataset ds = Dataset::load(path);
    REQUIRE(ds.size() == 7);
    CHECK(ds.seed() == 1234);
    CHECK(ds.metadata() == "unit test");
    for (int i = 0; i < 7; ++i) {
        const auto expect = random_pixels(hash_combine(1234, static_cast<std::uint64_t>(i)));
        const auto got = ds.pixels(static_cast<std::size_t>(i));
        REQUIRE(std::equal(expect.begin(), expect.end(), got.begin()));
        const auto l = ds.label(static_cast<std::size_t>(i));
        REQUIRE(l[0] == static_cast<float>(i % 31) - 15.0f);
        REQUIRE(l[1] == 15.0f - static_cast<float>(i % 29));
        REQUIRE(ds.timestamp(static_cast<std::size_t>(i)) == 0.1 * i);
    }
    // normalization contract on access
    std::vector<double> input(kPixelsPerSample);
    ds.fill_input(0, input);
    const auto px = ds.pixels(0);
    for (std::size_t i = 0; i < 100; ++i) {
        REQUIRE(input[i] == normalize_pixel(px[i]));
    }
    std::remove(path.c_str());
}

TEST_CASE("dataset files are byte-identical across writes") {
    write_test_dataset("ds_a.sasd", 5, 99);
    write_test_dataset("ds_b.sasd", 5, 99);
    CHECK(slurp("ds_a.sasd") == slurp("ds_b.sasd"));
    std::remove("ds_a.sasd");
    std::remove("ds_b.sasd");
}

TEST_CASE("writer rejects out-of-range labels and count mismatches") {
    SUBCASE("label bound") {
        DatasetWriter w("ds_bad.sasd", 1, 0, "");
        CHECK_THROWS_AS(w.append(random_pixels(1), 50.0f, 0.0f, 0.0), DomainError);
    }
    SUBCASE("count mismatch") {
        DatasetWriter w("ds_bad.sasd", 2, 0, "");
        w.append(random_pixels(1), 0.0f, 0.0f, 0.0);
        CHECK_THROWS_AS(w.finish(), IoError);
    }
    std::remove("ds_bad.sasd");
}

TEST_CASE("loader rejects malformed dataset files") {
    const std::string path = "ds_corrupt.sasd";
    write_test_dataset(path, 3, 5);

    SUBCASE("bad magic reports offset zero") {
        std::FILE* f = std::fopen(path.c_str(), "rb+");
        std::fputc('Z', f);
        std::fclose(f);
        try {
            Dataset::load(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() == 0);
            CHECK(std::string(e.what()).find("SASD") != std::string::npos);
        }
    }
    SUBCASE("truncation") {
        const auto bytes = slurp(path);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        f.close();
        CHECK_THROWS_AS(Dataset::load(path), FormatError);
    }
    SUBCASE("flipped pixel fails the CRC") {
        std::FILE* f = std::fopen(path.c_str(), "rb+");
        std::fseek(f, 60, SEEK_SET);
        const int c = std::fgetc(f);
        std::fseek(f, 60, SEEK_SET);
        std::fputc(c ^ 0x01, f);
        std::fclose(f);
        try {
            Dataset::load(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("CRC") != std::string::npos);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("split is a seeded partition") {
    const std::string path = "ds_split.sasd";
    write_test_dataset(path, 100, 7);
    const Dataset ds = Dataset::load(path);

    const auto [train, val] = split(ds, 0.8, 42);
    CHECK(train.size() == 80);
    CHECK(val.size() == 20);

    std::set<std::size_t> all(train.indices().begin(), train.indices().end());
    for (std::size_t i : val.indices()) {
        REQUIRE(all.insert(i).second);  // disjoint
    }
    REQUIRE(all.size() == ds.size());  // exhaustive

    const auto [train2, val2] = split(ds, 0.8, 42);
    CHECK(train.indices() == train2.indices());
    const auto [train3, val3] = split(ds, 0.8, 43);
    CHECK(train.indices() != train3.indices());

    CHECK_THROWS_AS(split(ds, 0.0, 1), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("csv export") {
    SUBCASE("empty log writes only the header") {
        export_csv({}, "log_empty.csv");
        std::ifstream f("log_empty.csv");
        std::string line;
        REQUIRE(std::getline(f, line));
        CHECK(line ==
              "time,alpha_gt,beta_gt,alpha_pred,beta_pred,alpha_sp,beta_sp,"
              "p_a,p_b,p_c,u_alpha,u_beta");
        CHECK_FALSE(std::getline(f, line));
        std::remove("log_empty.csv");
    }
    SUBCASE("identical prediction and truth give zero RMSE") {
        std::vector<LogRow> rows(3);
        for (int i = 0; i < 3; ++i) {
            rows[i].t = i;
            rows[i].alpha_gt = rows[i].alpha_pred = 5.0 + i;
            rows[i].beta_gt = rows[i].beta_pred = -2.0;
        }
        export_csv(rows, "log_zero.csv");
        const auto text = slurp("log_zero.csv");
        const std::string s(text.begin(), text.end());
        CHECK(s.find("# rmse_alpha_deg=0.000000 rmse_beta_deg=0.000000 "
                      "rmse_combined_deg=0.000000") != std::string::npos);
        std::remove("log_zero.csv");
    }
    SUBCASE("a constant one-degree offset gives RMSE exactly 1") {
        std::vector<LogRow> rows(4);
        for (int i = 0; i < 4; ++i) {
            rows[i].alpha_gt = i;
            rows[i].alpha_pred = i + 1.0;
            rows[i].beta_gt = -i;
            rows[i].beta_pred = -i + 1.0;
        }
        export_csv(rows, "log_bias.csv");
        const auto text = slurp("log_bias.csv");
        const std::string s(text.begin(), text.end());
        CHECK(s.find("rmse_combined_deg=1.000000") != std::string::npos);
        std::remove("log_bias.csv");
    }
}
