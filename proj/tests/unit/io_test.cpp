/* Copyright 2026 The OmniPT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <fstream>
#include <random>

#include "common/image.hpp"
#include "doctest.h"
#include "io/archive.hpp"
#include "support/temp_dir.hpp"

using namespace omnipt;
using omnipt::testing::TempDir;

namespace {

Archive sample_archive(DType dtype) {
  Archive a;
  a.kind = "test";
  a.dtype = dtype;
  a.set_meta("step", "12");
  a.arrays.push_back({"w", {2, 3}, {1.5, -2.25, 3, 4, 5, 6.125}});
  a.arrays.push_back({"b", {3}, {0.1, 0.2, 0.3}});
  return a;
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("archives round-trip at both precisions") {
    TempDir dir("archive");
    for (auto dtype : {DType::kF32, DType::kF64}) {
      const auto path = dir.path() / "a.bin";
      write_archive(path, sample_archive(dtype));
      const auto back = read_archive(path);
      CHECK(back.kind == "test");
      CHECK(back.dtype == dtype);
      CHECK(back.meta_value("step") == "12");
      REQUIRE(back.find("w") != nullptr);
      CHECK(back.find("w")->shape == Shape{2, 3});
      CHECK(back.find("w")->values[5] == 6.125);
      const double b0 = back.find("b")->values[0];
      CHECK(b0 == (dtype == DType::kF64 ? 0.1 : static_cast<double>(0.1f)));
      CHECK(back.find("missing") == nullptr);
      CHECK_THROWS_AS(back.meta_value("nope"), ParseError);
    }
  }

  TEST_CASE("damaged archives are rejected") {
    TempDir dir("archive-bad");
    const auto path = dir.path() / "a.bin";
    write_archive(path, sample_archive(DType::kF64));
    const auto good = read_bytes(path);

    auto bytes = good;
    bytes[0] = 'X';
    write_bytes(path, bytes);
    CHECK_THROWS_AS(read_archive(path), ParseError);

    bytes = good;
    bytes.pop_back();
    write_bytes(path, bytes);
    CHECK_THROWS_AS(read_archive(path), ParseError);

    bytes = good;
    bytes.push_back(0);
    write_bytes(path, bytes);
    CHECK_THROWS_AS(read_archive(path), ParseError);

    bytes = good;
    bytes.resize(12);
    write_bytes(path, bytes);
    CHECK_THROWS_AS(read_archive(path), ParseError);

    CHECK_THROWS_AS(read_archive(dir.path() / "absent.bin"), IoError);
  }

  TEST_CASE("inconsistent archives are not written") {
    TempDir dir("archive-write");
    auto a = sample_archive(DType::kF32);
    a.arrays[0].values.pop_back();
    CHECK_THROWS_AS(write_archive(dir.path() / "x.bin", a), DimensionError);
    CHECK_FALSE(std::filesystem::exists(dir.path() / "x.bin"));
    auto b = sample_archive(DType::kF32);
    b.set_meta("bad key", "1");
    CHECK_THROWS_AS(write_archive(dir.path() / "y.bin", b), ValidationError);
  }

  TEST_CASE("parameter loading is all-or-nothing") {
    std::mt19937_64 rng(1);
    ParameterSet<double> src;
    src.add_normal("a", {2, 2}, rng);
    src.add_normal("b", {3}, rng);
    Archive archive;
    store_parameters(src, archive, "model.");
    CHECK(archive.find("model.a") != nullptr);

    ParameterSet<double> dst;
    auto a = dst.add_zeros("a", {2, 2});
    auto b = dst.add_zeros("b", {3});
    load_parameters(dst, archive, "model.");
    CHECK(a.at(3) == src.get("a").at(3));
    CHECK(b.at(2) == src.get("b").at(2));

    ParameterSet<double> wider;
    auto wa = wider.add_zeros("a", {2, 2});
    wider.add_zeros("b", {4});
    CHECK_THROWS_AS(load_parameters(wider, archive, "model."), DimensionError);
    CHECK(wa.at(0) == 0.0);  // nothing was overwritten

    ParameterSet<double> extra;
    auto ea = extra.add_zeros("a", {2, 2});
    extra.add_zeros("c", {1});
    try {
      load_parameters(extra, archive, "model.");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("'c'") != std::string::npos);
    }
    CHECK(ea.at(0) == 0.0);
  }

  TEST_CASE("8-bit pixel conversion rounds and clamps") {
    Image img(1);
    img.pixels = {0.0f, 0.5f, 1.2f};
    const auto bytes = to_bytes(img);
    CHECK(bytes == std::vector<std::uint8_t>{0, 128, 255});
    const auto back = from_bytes(1, bytes);
    CHECK(back.pixels[1] == doctest::Approx(128.0 / 255.0));
    CHECK_THROWS_AS(from_bytes(2, bytes), DimensionError);
  }

  TEST_CASE("PNG output has a valid signature and header") {
    TempDir dir("png");
    Image img(4);
    img.at(1, 2, 0) = 1.0f;
    const auto path = dir.path() / "x.png";
    write_png(path, img);
    const auto bytes = read_bytes(path);
    REQUIRE(bytes.size() > 33);
    const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    for (int i = 0; i < 8; ++i) CHECK(static_cast<unsigned char>(bytes[i]) == sig[i]);
    CHECK(std::string(bytes.begin() + 12, bytes.begin() + 16) == "IHDR");
    CHECK(static_cast<unsigned char>(bytes[19]) == 4);  // width, big-endian
    CHECK(std::string(bytes.end() - 8, bytes.end() - 4) == "IEND");
    CHECK_THROWS_AS(write_png(dir.path() / "nodir" / "x.png", img), IoError);
  }
}
