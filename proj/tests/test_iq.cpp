#include <jamsentry/iq.hpp>
#include <jamsentry/kvconfig.hpp>
#include <jamsentry/rng.hpp>

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>

using namespace jamsentry;
using namespace jamsentry::iq;
using Catch::Approx;

namespace {

std::filesystem::path tmp_dir() {
    auto d = std::filesystem::temp_directory_path() / "jamsentry_test_iq";
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("fc16 decode of a known word pair") {
    const std::vector<std::uint8_t> bytes{0x00, 0x40, 0x00, 0xC0};
    const auto s = decode_fc16(bytes);
    REQUIRE(s.size() == 1);
    CHECK(s[0].real() == 0.5);
    CHECK(s[0].imag() == -0.5);
}

TEST_CASE("fc16 errors") {
    CHECK_THROWS_AS(decode_fc16(std::vector<std::uint8_t>{}), EmptyInputError);
    CHECK_THROWS_AS(decode_fc16(std::vector<std::uint8_t>{1, 2, 3}), FormatError);
    CHECK_THROWS_AS(decode_fc16(std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6}), FormatError);
}

TEST_CASE("fc16 encode and saturation") {
    const std::vector<IQSample> s{{0.5, -0.5}};
    CHECK(encode_fc16(s) == std::vector<std::uint8_t>{0x00, 0x40, 0x00, 0xC0});
    const std::vector<IQSample> big{{2.0, 0.0}, {-2.0, 0.0}};
    const auto b = encode_fc16(big);
    CHECK(b[0] == 0xFF);
    CHECK(b[1] == 0x7F);
    CHECK(b[4] == 0x00);
    CHECK(b[5] == 0x80);
}

TEST_CASE("fc16 byte round trip over random buffers") {
    auto rng = make_rng(42);
    std::uniform_int_distribution<int> byte(0, 255);
    for (std::size_t len : {4u, 8u, 4000u}) {
        std::vector<std::uint8_t> buf(len);
        for (auto& b : buf) b = static_cast<std::uint8_t>(byte(rng));
        CHECK(encode_fc16(decode_fc16(buf)) == buf);
    }
    const auto path = tmp_dir() / "rt.fc16";
    std::vector<std::uint8_t> buf(8);
    for (auto& b : buf) b = static_cast<std::uint8_t>(byte(rng));
    write_bytes(path, buf);
    const auto rec = read_fc16(path);
    CHECK(rec.samples.size() == 2);
    write_fc16(rec, path);
    CHECK(read_bytes(path) == buf);
}

TEST_CASE("sidecar metadata round trip") {
    const auto path = tmp_dir() / "cap.fc16";
    IQRecording rec;
    rec.samples = {{0.25, -0.125}, {1.5, 0.0}};
    write_fc16(rec, path, 4.0);
    write_sidecar(path, {2e6, Label::Jam, "unit", 4.0});
    CHECK(sidecar_path(path).filename() == "cap.meta.json");
    const auto back = read_fc16(path);
    CHECK(back.label == Label::Jam);
    CHECK(back.sample_rate_sps == 2e6);
    CHECK(back.samples[0] == IQSample(0.25, -0.125));
    CHECK(back.samples[1] == IQSample(1.5, 0.0));
    // explicit metadata wins over the sidecar
    const auto forced = read_fc16(path, RecordingMeta{1e6, Label::NoJam, "", 1.0});
    CHECK(forced.label == Label::NoJam);
    CHECK(forced.samples[1].real() == 0.375);
}

TEST_CASE("read_fc16 of a missing file is an I/O error") {
    CHECK_THROWS_AS(read_fc16(tmp_dir() / "does_not_exist.fc16"), IoError);
}

TEST_CASE("normalization stats") {
    IQRecording rec;
    rec.samples = {{1, 2}, {-3, 0.5}};
    const std::vector<IQRecording> recs{rec};
    const auto st = compute_normalization(recs);
    CHECK(st.i_max == 3);
    CHECK(st.q_max == 2);

    IQRecording deg;
    deg.samples = {{0, 1}};
    CHECK_THROWS_AS(compute_normalization(std::vector<IQRecording>{deg}), DataError);
    CHECK_THROWS_AS(compute_normalization(std::vector<IQRecording>{}), EmptyInputError);
}

TEST_CASE("normalize maps the dataset onto the unit box") {
    IQRecording r;
    r.samples = {{3, 2}, {0, 0}, {-1.5, 1}};
    const auto st = compute_normalization(std::vector<IQRecording>{r});
    const auto n = normalize(r, st);
    CHECK(n.samples[0] == IQSample(1, 1));
    CHECK(n.samples[1] == IQSample(0, 0));

    auto rng = make_rng(3);
    std::normal_distribution<double> g(0, 5);
    IQRecording big;
    for (int k = 0; k < 1000; ++k) big.samples.emplace_back(g(rng), g(rng));
    const auto nb = normalize(big, compute_normalization(std::vector<IQRecording>{big}));
    const auto again = compute_normalization(std::vector<IQRecording>{nb});
    CHECK(again.i_max == 1.0);
    CHECK(again.q_max == 1.0);
}

TEST_CASE("chunking drops the remainder and keeps order and label") {
    IQRecording r;
    for (int k = 0; k < 10; ++k) r.samples.emplace_back(k, -k);
    r.label = Label::Jam;
    const auto c = chunk(r, 3);
    REQUIRE(c.size() == 3);
    std::vector<IQSample> cat;
    for (const auto& ch : c) {
        CHECK(ch.n() == 3);
        CHECK(ch.label == Label::Jam);
        cat.insert(cat.end(), ch.samples.begin(), ch.samples.end());
    }
    CHECK(cat == std::vector<IQSample>(r.samples.begin(), r.samples.begin() + 9));
    CHECK_THROWS_AS(chunk(r, 0), ParameterError);
}

TEST_CASE("one 1e5-sample chunk at 5 Msps spans 0.02 s") {
    CHECK(chunk_duration_s(100'000, 5e6) == Approx(0.02).epsilon(1e-15));
}

TEST_CASE("recording validation") {
    IQRecording r;
    CHECK_THROWS_AS(validate(r), EmptyInputError);
    r.samples = {{0.1, 0.2}};
    r.sample_rate_sps = 0;
    CHECK_THROWS(validate(r));
    r.sample_rate_sps = 1e6;
    r.samples.push_back({std::nan(""), 0});
    CHECK_THROWS(validate(r));
}

TEST_CASE("key-value config parsing") {
    const auto kv = KeyValues::parse("# comment\nname = exp\nx = 1.5 # trailing\nlist = 1, 2,3\nneg = -inf\n");
    CHECK(kv.get("name", "") == "exp");
    CHECK(kv.get_double("x", 0) == 1.5);
    CHECK(kv.get_list("list") == std::vector<double>{1, 2, 3});
    CHECK(std::isinf(kv.get_double("neg", 0)));
    CHECK(kv.get_int("missing", 7) == 7);
    CHECK_THROWS_AS(KeyValues::parse("no equals sign"), FormatError);
    CHECK_THROWS_AS(kv.get_int("x", 0), FormatError);
}
