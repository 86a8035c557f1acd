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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "omnipt/omnipt.h"
#include "support/temp_dir.hpp"

namespace {

struct Config {
  omnipt_config* ptr = nullptr;
  Config() { REQUIRE(omnipt_config_new(&ptr) == OMNIPT_OK); }
  ~Config() { omnipt_config_free(ptr); }
  void set(const std::string& assignment) {
    INFO(assignment << ": " << omnipt_last_error());
    REQUIRE(omnipt_config_set(ptr, assignment.c_str()) == OMNIPT_OK);
  }
  std::string get(const char* key) const {
    std::size_t needed = 0;
    omnipt_config_get(ptr, key, nullptr, 0, &needed);
    std::string value(needed, '\0');
    REQUIRE(omnipt_config_get(ptr, key, value.data(), value.size(), &needed) == OMNIPT_OK);
    value.resize(needed - 1);
    return value;
  }
};

void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

// A model small enough to train for a few steps inside a unit test.
void make_tiny(Config& c, const std::filesystem::path& root) {
  for (const std::string s :
       {"run.name=tiny", "data.train_count=32", "data.heldout_count=12", "model.d_h=16", "model.n_heads=2",
        "model.n_layers=1", "model.decoder_layers=1", "model.ffn_mult=2", "codec.hidden=32", "codec.epochs=1",
        "codec.images=16", "train.batch=4", "train.max_steps=4", "train.eval_every=2", "train.eval_samples=4",
        "train.checkpoint_every=2", "eval.pool=8", "eval.probe_train=16", "eval.probe_epochs=3",
        "eval.wer_samples=4", "eval.caption_samples=4"}) {
    c.set(s);
  }
  c.set("run.root=" + (root / "runs").string());
  c.set("data.root=" + (root / "data").string());
}

}  // namespace

TEST_CASE("status names and version are available") {
  CHECK(std::string(omnipt_version()).size() > 0);
  CHECK(std::string(omnipt_status_name(OMNIPT_OK)) == "ok");
  CHECK(std::string(omnipt_status_name(OMNIPT_ERR_CONFIG)) == "config error");
}

TEST_CASE("null arguments are rejected with an argument error") {
  CHECK(omnipt_config_new(nullptr) == OMNIPT_ERR_ARGUMENT);
  CHECK(omnipt_config_set(nullptr, "a=b") == OMNIPT_ERR_ARGUMENT);
  CHECK(std::string(omnipt_last_error()).size() > 0);
  omnipt_config_free(nullptr);
  omnipt_model_free(nullptr);
}

TEST_CASE("config values round-trip and bad keys fail as config errors") {
  Config c;
  CHECK(c.get("train.max_steps") == "2000");
  c.set("max_steps=10");
  CHECK(c.get("train.max_steps") == "10");
  CHECK(omnipt_config_set(c.ptr, "no.such_key=1") == OMNIPT_ERR_CONFIG);
  CHECK(std::string(omnipt_last_error()).find("no.such_key") != std::string::npos);
  std::size_t needed = 0;
  CHECK(omnipt_config_get(c.ptr, "no.such_key", nullptr, 0, &needed) == OMNIPT_ERR_CONFIG);

  char small[2];
  CHECK(omnipt_config_get(c.ptr, "run.name", small, sizeof small, &needed) == OMNIPT_ERR_ARGUMENT);
  CHECK(needed == 5);

  c.set("train.lr=abc");
  CHECK(omnipt_config_validate(c.ptr) != OMNIPT_OK);
}

TEST_CASE("config files load and a missing file is an io error") {
  omnipt::testing::TempDir dir("capi-cfg");
  const auto path = dir.path() / "run.cfg";
  std::ofstream(path) << "# comment\nrun.name = from_file\ntrain.lr = 1/1000\n";
  Config c;
  REQUIRE(omnipt_config_load_file(c.ptr, path.c_str()) == OMNIPT_OK);
  CHECK(c.get("run.name") == "from_file");
  CHECK(omnipt_config_validate(c.ptr) == OMNIPT_OK);
  CHECK(omnipt_config_load_file(c.ptr, (dir.path() / "absent.cfg").c_str()) == OMNIPT_ERR_IO);
}

TEST_CASE("the whole pipeline runs through the C interface") {
  omnipt::testing::TempDir dir("capi-run");
  Config c;
  make_tiny(c, dir.path());
  REQUIRE(omnipt_config_validate(c.ptr) == OMNIPT_OK);

  std::vector<std::string> lines;
  REQUIRE(omnipt_gen_data(c.ptr) == OMNIPT_OK);
  double mse = -1.0;
  REQUIRE(omnipt_codec_train(c.ptr, collect, &lines, &mse) == OMNIPT_OK);
  CHECK(mse >= 0.0);
  CHECK(std::filesystem::exists(dir.path() / "data" / "codec.bin"));

  int steps = 0;
  lines.clear();
  INFO(std::string(omnipt_last_error()));
  REQUIRE(omnipt_pretrain(c.ptr, nullptr, collect, &lines, &steps) == OMNIPT_OK);
  CHECK(steps == 4);
  REQUIRE(lines.size() >= 4);
  CHECK(lines.front().rfind("step=1 ", 0) == 0);
  const auto run = dir.path() / "runs" / "tiny";
  const auto ckpt = run / "ckpt-final.bin";
  REQUIRE(std::filesystem::exists(ckpt));

  // Resuming a finished run has nothing left to do.
  REQUIRE(omnipt_pretrain(c.ptr, ckpt.c_str(), collect, &lines, &steps) == OMNIPT_OK);

  const auto report = run / "eval" / "all.txt";
  REQUIRE(omnipt_evaluate(c.ptr, ckpt.c_str(), "all", report.c_str(), collect, &lines) == OMNIPT_OK);
  CHECK(std::filesystem::file_size(report) > 0);
  CHECK(omnipt_evaluate(c.ptr, ckpt.c_str(), "bogus", report.c_str(), nullptr, nullptr) == OMNIPT_ERR_ARGUMENT);

  omnipt_model* model = nullptr;
  REQUIRE(omnipt_model_load(ckpt.c_str(), &model) == OMNIPT_OK);
  std::size_t needed = 0;
  char text[256];
  CHECK(omnipt_generate_text(model, 0, "audio+image", 1, 1.0, 0, text, sizeof text, &needed) == OMNIPT_OK);
  CHECK(needed >= 1);
  CHECK(omnipt_generate_text(model, 0, "smell", 1, 1.0, 0, text, sizeof text, &needed) == OMNIPT_ERR_VALIDATION);
  CHECK(omnipt_generate_text(model, 100000, "image", 1, 1.0, 0, text, sizeof text, &needed) != OMNIPT_OK);
  const auto png = run / "samples" / "x.png";
  CHECK(omnipt_generate_image(model, "a red circle .", 3, 1.0, 5, png.c_str()) == OMNIPT_OK);
  std::ifstream in(png, std::ios::binary);
  char magic[8] = {};
  in.read(magic, 8);
  CHECK(std::string(magic + 1, 3) == "PNG");
  omnipt_model_free(model);

  CHECK(omnipt_model_load((dir.path() / "missing.bin").c_str(), &model) == OMNIPT_ERR_IO);
}
