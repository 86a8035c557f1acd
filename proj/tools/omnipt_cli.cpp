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

// Command-line front end. Talks to the library only through omnipt.h.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "omnipt/omnipt.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

struct ConfigHandle {
  omnipt_config* ptr = nullptr;
  ~ConfigHandle() { omnipt_config_free(ptr); }
};

struct ModelHandle {
  omnipt_model* ptr = nullptr;
  ~ModelHandle() { omnipt_model_free(ptr); }
};

class UsageFailure {
 public:
  explicit UsageFailure(std::string message) : message_(std::move(message)) {}
  const std::string& message() const { return message_; }

 private:
  std::string message_;
};

class RunFailure {
 public:
  RunFailure(omnipt_status status, std::string message) : status_(status), message_(std::move(message)) {}
  omnipt_status status() const { return status_; }
  const std::string& message() const { return message_; }

 private:
  omnipt_status status_;
  std::string message_;
};

void check(omnipt_status status) {
  if (status != OMNIPT_OK) throw RunFailure(status, omnipt_last_error());
}

// Config problems (missing file, unknown key, bad value) are usage errors.
void load_config(const Common& common, ConfigHandle& config) {
  check(omnipt_config_new(&config.ptr));
  auto usage = [](omnipt_status status) {
    if (status != OMNIPT_OK) throw UsageFailure(omnipt_last_error());
  };
  usage(omnipt_config_load_file(config.ptr, common.config_path.c_str()));
  for (const auto& assignment : common.overrides) usage(omnipt_config_set(config.ptr, assignment.c_str()));
  usage(omnipt_config_validate(config.ptr));
}

std::string get(const ConfigHandle& config, const char* key) {
  std::size_t needed = 0;
  omnipt_config_get(config.ptr, key, nullptr, 0, &needed);
  if (needed == 0) check(omnipt_config_get(config.ptr, key, nullptr, 0, &needed));
  std::string value(needed, '\0');
  check(omnipt_config_get(config.ptr, key, value.data(), value.size(), &needed));
  value.resize(needed - 1);
  return value;
}

std::string run_dir(const ConfigHandle& config) {
  return get(config, "run.root") + "/" + get(config, "run.name");
}

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

void add_common(CLI::App* command, Common& common) {
  command->add_option("-c,--config", common.config_path, "Configuration file (key = value lines)")->required();
  command->add_option("-s,--set", common.overrides, "Override one key, e.g. --set train.max_steps=10")
      ->take_all()
      ->allow_extra_args(false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Omni-perception pretraining on synthetic text-image-audio triplets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(omnipt_version()));

  Common common;
  auto* gen_data = app.add_subcommand("gen-data", "Generate the synthetic dataset under data.root");
  auto* codec_train = app.add_subcommand("codec-train", "Train the image codec and save it to codec.path");
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the model; writes runs/<name>/");
  std::string resume;
  pretrain->add_option("--resume", resume, "Continue from this checkpoint");

  std::string checkpoint;
  std::string report;
  auto* eval_retrieval = app.add_subcommand("eval-retrieval", "Cross-modal retrieval R@1/5/10");
  auto* eval_probe = app.add_subcommand("eval-probe", "Linear-probe mAP per input modality set");
  auto* eval_wer = app.add_subcommand("eval-wer", "Transcription WER and caption exact match");
  for (auto* command : {eval_retrieval, eval_probe, eval_wer}) {
    command->add_option("--checkpoint", checkpoint, "Default: runs/<name>/ckpt-final.bin");
    command->add_option("--out", report, "Report file; default: runs/<name>/eval-<suite>.txt");
  }

  int top_k = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::size_t record = 0;
  std::string inputs = "image";
  std::string text;
  std::string out;
  auto* generate_text = app.add_subcommand("generate-text", "Describe a held-out record from chosen modalities");
  generate_text->add_option("--record", record, "Held-out record index");
  generate_text->add_option("--inputs", inputs, "Modalities joined by '+': text, image, audio");
  auto* generate_image = app.add_subcommand("generate-image", "Render an image from a caption");
  generate_image->add_option("--text", text, "Caption, e.g. \"a red circle .\"")->required();
  generate_image->add_option("--out", out, "PNG path; default: runs/<name>/samples/image-<seed>.png");
  for (auto* command : {generate_text, generate_image}) {
    command->add_option("--checkpoint", checkpoint, "Default: runs/<name>/ckpt-final.bin");
    command->add_option("--top-k", top_k, "Sample among the k most likely tokens (1 = greedy)");
    command->add_option("--temperature", temperature, "Softmax temperature");
    command->add_option("--seed", seed, "Sampling seed");
  }
  for (auto* command : app.get_subcommands({})) add_common(command, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n\n%s", e.what(), app.help().c_str());
    return kExitUsage;
  }

  try {
    ConfigHandle config;
    load_config(common, config);
    const auto dir = run_dir(config);
    const auto default_checkpoint = dir + "/ckpt-final.bin";
    const std::string ckpt = checkpoint.empty() ? default_checkpoint : checkpoint;

    if (gen_data->parsed()) {
      check(omnipt_gen_data(config.ptr));
      std::printf("wrote dataset to %s\n", get(config, "data.root").c_str());
    } else if (codec_train->parsed()) {
      double mse = 0.0;
      check(omnipt_codec_train(config.ptr, print_line, nullptr, &mse));
    } else if (pretrain->parsed()) {
      int steps = 0;
      check(omnipt_pretrain(config.ptr, resume.empty() ? nullptr : resume.c_str(), print_line, nullptr, &steps));
      std::printf("finished after %d steps; checkpoint %s\n", steps, default_checkpoint.c_str());
    } else if (eval_retrieval->parsed() || eval_probe->parsed() || eval_wer->parsed()) {
      const char* suite = eval_retrieval->parsed() ? "retrieval" : eval_probe->parsed() ? "probe" : "wer";
      const std::string path = report.empty() ? dir + "/eval-" + suite + ".txt" : report;
      check(omnipt_evaluate(config.ptr, ckpt.c_str(), suite, path.c_str(), print_line, nullptr));
    } else if (generate_text->parsed()) {
      ModelHandle model;
      check(omnipt_model_load(ckpt.c_str(), &model.ptr));
      std::size_t needed = 0;
      std::string buffer(256, '\0');
      auto status = omnipt_generate_text(model.ptr, record, inputs.c_str(), top_k, temperature, seed,
                                         buffer.data(), buffer.size(), &needed);
      if (status == OMNIPT_ERR_ARGUMENT && needed > buffer.size()) {
        buffer.assign(needed, '\0');
        status = omnipt_generate_text(model.ptr, record, inputs.c_str(), top_k, temperature, seed,
                                      buffer.data(), buffer.size(), &needed);
      }
      check(status);
      buffer.resize(needed - 1);
      std::printf("%s\n", buffer.c_str());
    } else if (generate_image->parsed()) {
      ModelHandle model;
      check(omnipt_model_load(ckpt.c_str(), &model.ptr));
      const std::string path = out.empty() ? dir + "/samples/image-" + std::to_string(seed) + ".png" : out;
      check(omnipt_generate_image(model.ptr, text.c_str(), top_k, temperature, seed, path.c_str()));
      std::printf("wrote %s\n", path.c_str());
    }
  } catch (const UsageFailure& e) {
    std::fprintf(stderr, "error: %s\n\n%s", e.message().c_str(), app.help().c_str());
    return kExitUsage;
  } catch (const RunFailure& e) {
    std::fprintf(stderr, "error (%s): %s\n", omnipt_status_name(e.status()), e.message().c_str());
    return kExitFailure;
  }
  return 0;
}
