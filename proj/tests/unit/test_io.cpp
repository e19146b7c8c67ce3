#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "dmt/engine.hpp"
#include "dmt/error.hpp"
#include "dmt/idx.hpp"
#include "dmt/model_io.hpp"
#include "dmt/pnm.hpp"
#include "support.hpp"

using namespace dmt;
using dmt::testing::Rng;

namespace {

Model small_model(Rng& rng) {
  return Model({1, 6, 6}, {testing::random_conv(2, 1, 3, 1, 1, rng), ReLU{}, MaxPool{2, 2}, AvgPool{1, 1}, Flatten{},
                           testing::random_dense(3, 18, rng)});
}

ModelIoErrc code_of(const std::string& bytes) {
  try {
    parse_model(bytes);
  } catch (const ModelIoError& e) {
    return e.code();
  }
  FAIL("parse succeeded");
  return ModelIoErrc::Io;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dmt_unit_" + name);
}

}  // namespace

TEST_CASE("container round trip is exact") {
  Rng rng(10);
  const Model m = small_model(rng);
  const std::string bytes = serialize_model(m);
  const Model back = parse_model(bytes);
  CHECK(serialize_model(back) == bytes);
  const Tensor x = testing::random_tensor({1, 6, 6}, rng);
  CHECK(logits(m, x) == logits(back, x));
  const auto path = temp_path("roundtrip.dmtm");
  save_model(m, path);
  CHECK(serialize_model(load_model(path)) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("container errors carry their cause") {
  Rng rng(11);
  const std::string good = serialize_model(small_model(rng));
  CHECK(code_of("") == ModelIoErrc::BadHeader);
  CHECK(code_of(replace(good, "dmt-model 1", "dmt-modal 1")) == ModelIoErrc::BadHeader);
  CHECK(code_of(replace(good, "dmt-model 1", "dmt-model 2")) == ModelIoErrc::UnsupportedVersion);
  CHECK(code_of(replace(good, "endian little", "endian big")) == ModelIoErrc::UnsupportedVersion);
  CHECK(code_of(replace(good, "\nrelu\n", "\ngelu\n")) == ModelIoErrc::UnknownLayer);
  CHECK(code_of(replace(good, "blob 0 weight 2 1 3 3", "blob 0 weight 2 1 3 2")) == ModelIoErrc::ShapeMismatch);
  CHECK(code_of(replace(good, "dense 3 18", "dense 3 17")) == ModelIoErrc::ShapeMismatch);
  CHECK(code_of(good.substr(0, good.size() - 1)) == ModelIoErrc::TruncatedBlob);
  CHECK(code_of(good + "x") == ModelIoErrc::TrailingBytes);
  CHECK(code_of(replace(good, "layers 6", "layers 0")) == ModelIoErrc::EmptyModel);

  std::string nan = good;
  const float q = std::nanf("");
  std::memcpy(nan.data() + nan.size() - 4, &q, 4);
  CHECK(code_of(nan) == ModelIoErrc::NonFinite);

  try {
    load_model(temp_path("does-not-exist.dmtm"));
    FAIL("expected ModelIoError");
  } catch (const ModelIoError& e) {
    CHECK(e.code() == ModelIoErrc::Io);
    CHECK(e.category() == ErrorCategory::Data);
  }
}

TEST_CASE("fuzzed containers fail with ModelIoError only") {
  Rng rng(12);
  const std::string good = serialize_model(small_model(rng));
  const std::size_t manifest = good.find("end\n") + 4;
  std::uniform_int_distribution<int> byte(0, 255);
  int rejected = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string bad = good;
    const int edits = 1 + trial % 4;
    for (int e = 0; e < edits; ++e) {
      const std::size_t at = std::uniform_int_distribution<std::size_t>(0, manifest - 1)(rng);
      switch (trial % 3) {
        case 0: bad[at] = static_cast<char>(byte(rng)); break;
        case 1: bad.erase(at, 1); break;
        default: bad.insert(at, 1, "0123456789 \n"[byte(rng) % 12]); break;
      }
    }
    try {
      parse_model(bad);
    } catch (const ModelIoError&) {
      ++rejected;
    }
    // Anything else escaping (or a crash) fails the test.
  }
  CHECK(rejected > 1000);
}

TEST_CASE("hostile dimensions are rejected before allocation") {
  const std::string bytes =
      "dmt-model 1\nendian little\ninput 1 4 4\nlayers 2\nflatten\ndense 16000000 16\nblobs 2\n"
      "blob 1 weight 16000000 16\nblob 1 bias 16000000\nend\n";
  CHECK_THROWS_AS(parse_model(bytes), ModelIoError);
}

TEST_CASE("exported fixtures reproduce their golden logits") {
  const auto images = load_idx_images(testing::fixture("golden-images.idx"));
  REQUIRE(images.size() >= 20);
  for (const char* name : {"lenet1", "lenet5", "lenet5-maxpool"}) {
    CAPTURE(name);
    const Model m = load_model(testing::fixture(std::string(name) + ".dmtm"));
    const auto golden = load_idx_floats(testing::fixture(std::string(name) + "-golden-logits.idx"));
    REQUIRE(golden.size() == images.size());
    float worst = 0.0f;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Tensor l = logits(m, images[i].pixels);
      REQUIRE(l.size() == golden[i].size());
      for (std::size_t k = 0; k < l.size(); ++k) worst = std::max(worst, std::abs(l[k] - golden[i][k]));
    }
    CHECK(worst <= 1e-4f);
  }
}

TEST_CASE("exported fixtures meet the accuracy floor") {
  const auto test = load_idx_dataset(testing::fixture("mnist-test-images.idx"), testing::fixture("mnist-test-labels.idx"));
  REQUIRE(test.size() == 1000);
  for (const char* name : {"lenet1", "lenet5", "lenet5-maxpool"}) {
    CAPTURE(name);
    const Model m = load_model(testing::fixture(std::string(name) + ".dmtm"));
    std::size_t correct = 0;
    for (const auto& r : test) correct += predict(m, r.pixels).label == *r.label ? 1 : 0;
    CHECK(static_cast<double>(correct) / test.size() >= 0.94);
  }
}

TEST_CASE("IDX images and labels round trip") {
  Rng rng(13);
  std::vector<ImageRecord> records;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 5; ++i) {
    Tensor t({1, 3, 4});
    for (auto& v : t.values()) v = static_cast<float>(std::uniform_int_distribution<int>(0, 255)(rng)) / 255.0f;
    records.push_back({t, "", std::nullopt});
    labels.push_back(static_cast<std::size_t>(i * 2));
  }
  const auto back = parse_idx_images(serialize_idx_images(records), "mem");
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(back[i].pixels == records[i].pixels);
  CHECK(parse_idx_labels(serialize_idx_labels(labels)) == labels);
  CHECK(serialize_idx_images(back) == serialize_idx_images(records));
}

TEST_CASE("IDX parse errors") {
  std::vector<ImageRecord> one{{Tensor({1, 2, 2}, 0.5f), "", std::nullopt}};
  const std::string good = serialize_idx_images(one);
  CHECK_THROWS_AS(parse_idx_images(good.substr(0, good.size() - 1), "t"), DataError);
  CHECK_THROWS_AS(parse_idx_images(good + "z", "t"), DataError);
  std::string wrong = good;
  wrong[3] = 0x01;  // label magic
  CHECK_THROWS_AS(parse_idx_images(wrong, "t"), DataError);
  CHECK_THROWS_AS(parse_idx_labels(good), DataError);
  CHECK_THROWS_AS(parse_idx_images("", "t"), DataError);
  CHECK_THROWS_AS(load_idx_images(temp_path("missing.idx")), DataError);

  const auto images = temp_path("imgs.idx"), labels = temp_path("labels.idx");
  save_idx_images(one, images);
  save_idx_labels({1, 2}, labels);
  CHECK_THROWS_AS(load_idx_dataset(images, labels), DataError);
  std::filesystem::remove(images);
  std::filesystem::remove(labels);
}

TEST_CASE("fuzzed IDX headers fail with DataError only") {
  Rng rng(14);
  std::vector<ImageRecord> two{{Tensor({1, 3, 3}, 0.2f), "", std::nullopt}, {Tensor({1, 3, 3}, 0.7f), "", std::nullopt}};
  const std::string good = serialize_idx_images(two);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string bad = good;
    bad[std::uniform_int_distribution<std::size_t>(0, 15)(rng)] = static_cast<char>(rng());
    try {
      parse_idx_images(bad, "fuzz");
    } catch (const DataError&) {
    }
  }
}

TEST_CASE("PGM and PPM round trip") {
  Rng rng(15);
  for (std::size_t c : {1u, 3u}) {
    Tensor t({c, 5, 7});
    for (auto& v : t.values()) v = static_cast<float>(std::uniform_int_distribution<int>(0, 255)(rng)) / 255.0f;
    const std::string bytes = c == 1 ? serialize_pgm(t) : serialize_ppm(t);
    const Tensor back = parse_pnm(bytes);
    CHECK(back == t);
    CHECK((c == 1 ? serialize_pgm(back) : serialize_ppm(back)) == bytes);
  }
  const Tensor commented = parse_pgm(std::string("P5\n# made by hand\n2 1\n255\n") + '\x00' + '\xff');
  CHECK(commented.shape() == Shape{1, 1, 2});
  CHECK(commented[1] == 1.0f);
}

TEST_CASE("PNM parse errors") {
  CHECK_THROWS_AS(parse_pnm("P2\n1 1\n255\n0"), DataError);
  CHECK_THROWS_AS(parse_pgm("P5\n2 2\n255\n\x01\x02"), DataError);
  CHECK_THROWS_AS(parse_pgm("P5\n1 1\n65535\n\x01\x02"), DataError);
  CHECK_THROWS_AS(parse_ppm("P5\n1 1\n255\n\x01"), DataError);
  CHECK_THROWS_AS(parse_pgm("P5\n0 1\n255\n"), DataError);
  CHECK_THROWS_AS(load_pnm(temp_path("missing.pgm")), DataError);
}
