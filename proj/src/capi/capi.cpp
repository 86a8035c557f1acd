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

#include "omnipt/omnipt.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <variant>

#include "common/image.hpp"
#include "data/dataset.hpp"
#include "eval/evaluation.hpp"
#include "trainer/trainer.hpp"

struct omnipt_config {
  omnipt::ConfigMap map;
};

struct omnipt_model {
  std::variant<omnipt::OptModel<float>, omnipt::OptModel<double>> model;
  omnipt::RunConfig config;
  omnipt::Vocabulary vocab;
};

namespace {

thread_local std::string g_last_error;

omnipt_status fail(omnipt_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
omnipt_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return OMNIPT_OK;
  } catch (const omnipt::ValidationError& e) {
    return fail(OMNIPT_ERR_VALIDATION, e.what());
  } catch (const omnipt::ContractError& e) {
    return fail(OMNIPT_ERR_CONTRACT, e.what());
  } catch (const omnipt::DimensionError& e) {
    return fail(OMNIPT_ERR_DIMENSION, e.what());
  } catch (const omnipt::NumericError& e) {
    return fail(OMNIPT_ERR_NUMERIC, e.what());
  } catch (const omnipt::ParseError& e) {
    return fail(OMNIPT_ERR_PARSE, e.what());
  } catch (const omnipt::IoError& e) {
    return fail(OMNIPT_ERR_IO, e.what());
  } catch (const omnipt::ConfigError& e) {
    return fail(OMNIPT_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(OMNIPT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(OMNIPT_ERR_INTERNAL, "unknown exception");
  }
}

omnipt_status copy_out(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (buffer == nullptr || capacity < text.size() + 1) {
    return fail(OMNIPT_ERR_ARGUMENT, "buffer too small: need " + std::to_string(text.size() + 1) + " bytes");
  }
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  return OMNIPT_OK;
}

void emit(omnipt_line_callback progress, void* user, const std::string& line) {
  if (progress) progress(line.c_str(), user);
}

template <typename T>
double train_codec(const omnipt::RunConfig& cfg, omnipt_line_callback progress, void* user) {
  using namespace omnipt;
  const DatasetLayout layout{cfg.data_root};
  const auto train = read_dataset(layout.train());
  const auto heldout = read_dataset(layout.heldout());
  std::vector<Image> images;
  for (std::size_t i = 0; i < train.size() && images.size() < static_cast<std::size_t>(cfg.codec_images); ++i) {
    images.push_back(train[i].image);
  }
  std::vector<Image> held;
  for (const auto& r : heldout) held.push_back(r.image);

  auto codec = ImageCodec<T>::create(cfg.codec);
  const auto result = codec_train(codec, std::span<const Image>(images), cfg.codec_epochs);
  char line[160];
  for (const auto& e : result.epochs) {
    std::snprintf(line, sizeof line, "epoch=%d mse=%.17g tau=%.17g", e.epoch, e.train_mse, e.temperature);
    emit(progress, user, line);
  }
  if (result.diverged) emit(progress, user, result.message);
  const double mse = reconstruction_mse(codec, std::span<const Image>(held));
  std::snprintf(line, sizeof line, "heldout_mse=%.17g usage=%.17g", mse,
                codebook_usage(codec, std::span<const Image>(images)));
  emit(progress, user, line);
  save_codec(codec, cfg.codec_path);
  if (result.diverged) throw NumericError(result.message);
  return mse;
}

template <typename T>
int run_pretrain(const omnipt::RunConfig& cfg, const char* resume, omnipt_line_callback progress, void* user) {
  omnipt::PretrainOptions options;
  if (resume) options.resume_from = std::filesystem::path(resume);
  options.on_step = [&](const omnipt::StepRecord& r) { emit(progress, user, omnipt::format_step(r)); };
  return omnipt::pretrain<T>(cfg, options).steps;
}

template <typename T>
std::string run_evaluate(const omnipt::RunConfig& cfg, const std::filesystem::path& checkpoint,
                         const std::string& suite) {
  using namespace omnipt;
  const auto model = load_model<T>(checkpoint);
  const DatasetLayout layout{cfg.data_root};
  const auto heldout = read_dataset(layout.heldout());
  std::vector<MetricReport> reports;
  auto append = [&](std::vector<MetricReport> more) {
    reports.insert(reports.end(), more.begin(), more.end());
  };
  if (suite == "retrieval" || suite == "all") append(evaluate_retrieval_suite(model, heldout, cfg.eval));
  if (suite == "probe" || suite == "all") {
    append(evaluate_probe_suite(model, read_dataset(layout.train()), heldout, cfg.eval));
  }
  if (suite == "wer" || suite == "all") {
    append(evaluate_text_suite(model, heldout, Vocabulary::load(layout.vocab()), cfg.eval));
  }
  return format_report(reports);
}

omnipt::ModalitySet parse_inputs(const std::string& text) {
  omnipt::ModalitySet set;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('+', start), text.size());
    const auto part = text.substr(start, end - start);
    if (part == "text") {
      set.text = true;
    } else if (part == "image") {
      set.vision = true;
    } else if (part == "audio") {
      set.audio = true;
    } else {
      throw omnipt::ValidationError("inputs: unknown modality '" + part + "' (text, image, audio joined by '+')");
    }
    start = end + 1;
  }
  return set;
}

omnipt::GenerationParams generation(const omnipt_model* handle, int top_k, double temperature, uint64_t seed) {
  auto gen = handle->config.generation;
  gen.top_k = top_k;
  gen.temperature = temperature;
  gen.seed = seed;
  return gen;
}

}  // namespace

extern "C" {

const char* omnipt_version(void) { return "1.0.0"; }

const char* omnipt_status_name(omnipt_status status) {
  switch (status) {
    case OMNIPT_OK: return "ok";
    case OMNIPT_ERR_VALIDATION: return "validation error";
    case OMNIPT_ERR_CONTRACT: return "contract error";
    case OMNIPT_ERR_DIMENSION: return "dimension error";
    case OMNIPT_ERR_NUMERIC: return "numeric error";
    case OMNIPT_ERR_PARSE: return "parse error";
    case OMNIPT_ERR_IO: return "io error";
    case OMNIPT_ERR_CONFIG: return "config error";
    case OMNIPT_ERR_ARGUMENT: return "argument error";
    case OMNIPT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* omnipt_last_error(void) { return g_last_error.c_str(); }

omnipt_status omnipt_config_new(omnipt_config** out) {
  if (!out) return fail(OMNIPT_ERR_ARGUMENT, "config_new: null output");
  return guarded([&] { *out = new omnipt_config(); });
}

void omnipt_config_free(omnipt_config* config) { delete config; }

omnipt_status omnipt_config_load_file(omnipt_config* config, const char* path) {
  if (!config || !path) return fail(OMNIPT_ERR_ARGUMENT, "config_load_file: null argument");
  return guarded([&] { config->map.merge_file(path); });
}

omnipt_status omnipt_config_set(omnipt_config* config, const char* assignment) {
  if (!config || !assignment) return fail(OMNIPT_ERR_ARGUMENT, "config_set: null argument");
  return guarded([&] { config->map.set_override(assignment); });
}

omnipt_status omnipt_config_get(const omnipt_config* config, const char* key, char* buffer, size_t capacity,
                                size_t* needed) {
  if (!config || !key) return fail(OMNIPT_ERR_ARGUMENT, "config_get: null argument");
  std::string value;
  const auto status = guarded([&] { value = config->map.raw(key); });
  if (status != OMNIPT_OK) return status;
  return copy_out(value, buffer, capacity, needed);
}

omnipt_status omnipt_config_validate(const omnipt_config* config) {
  if (!config) return fail(OMNIPT_ERR_ARGUMENT, "config_validate: null config");
  return guarded([&] { (void)omnipt::RunConfig::from(config->map); });
}

omnipt_status omnipt_gen_data(const omnipt_config* config) {
  if (!config) return fail(OMNIPT_ERR_ARGUMENT, "gen_data: null config");
  return guarded([&] {
    const auto cfg = omnipt::RunConfig::from(config->map);
    omnipt::generate_dataset(cfg.data_root, cfg.synth, cfg.train_count, cfg.heldout_count);
  });
}

omnipt_status omnipt_codec_train(const omnipt_config* config, omnipt_line_callback progress, void* user,
                                 double* heldout_mse) {
  if (!config) return fail(OMNIPT_ERR_ARGUMENT, "codec_train: null config");
  return guarded([&] {
    const auto cfg = omnipt::RunConfig::from(config->map);
    const double mse = cfg.precision == omnipt::DType::kF64 ? train_codec<double>(cfg, progress, user)
                                                            : train_codec<float>(cfg, progress, user);
    if (heldout_mse) *heldout_mse = mse;
  });
}

omnipt_status omnipt_pretrain(const omnipt_config* config, const char* resume_checkpoint,
                              omnipt_line_callback progress, void* user, int* steps_run) {
  if (!config) return fail(OMNIPT_ERR_ARGUMENT, "pretrain: null config");
  return guarded([&] {
    const auto cfg = omnipt::RunConfig::from(config->map);
    const int steps = cfg.precision == omnipt::DType::kF64
                          ? run_pretrain<double>(cfg, resume_checkpoint, progress, user)
                          : run_pretrain<float>(cfg, resume_checkpoint, progress, user);
    if (steps_run) *steps_run = steps;
  });
}

omnipt_status omnipt_evaluate(const omnipt_config* config, const char* checkpoint, const char* suite,
                              const char* report_path, omnipt_line_callback progress, void* user) {
  if (!config || !checkpoint || !suite || !report_path) {
    return fail(OMNIPT_ERR_ARGUMENT, "evaluate: null argument");
  }
  const std::string which = suite;
  if (which != "retrieval" && which != "probe" && which != "wer" && which != "all") {
    return fail(OMNIPT_ERR_ARGUMENT, "evaluate: unknown suite '" + which + "'");
  }
  return guarded([&] {
    const auto cfg = omnipt::RunConfig::from(config->map);
    const auto dtype = omnipt::read_archive(checkpoint).dtype;
    const auto report = dtype == omnipt::DType::kF64 ? run_evaluate<double>(cfg, checkpoint, which)
                                                     : run_evaluate<float>(cfg, checkpoint, which);
    const std::filesystem::path out(report_path);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream file(out, std::ios::binary);
    file << report;
    if (!file) throw omnipt::IoError("cannot write report " + out.string());
    std::size_t start = 0;
    while (start < report.size()) {
      const auto end = report.find('\n', start);
      emit(progress, user, report.substr(start, end - start));
      start = end + 1;
    }
  });
}

omnipt_status omnipt_model_load(const char* checkpoint, omnipt_model** out) {
  if (!checkpoint || !out) return fail(OMNIPT_ERR_ARGUMENT, "model_load: null argument");
  return guarded([&] {
    const auto dtype = omnipt::read_archive(checkpoint).dtype;
    omnipt::RunConfig cfg;
    auto handle = dtype == omnipt::DType::kF64
                      ? new omnipt_model{omnipt::load_model<double>(checkpoint, &cfg), {}, {}}
                      : new omnipt_model{omnipt::load_model<float>(checkpoint, &cfg), {}, {}};
    handle->config = cfg;
    try {
      handle->vocab = omnipt::Vocabulary::load(omnipt::DatasetLayout{cfg.data_root}.vocab());
    } catch (...) {
      delete handle;
      throw;
    }
    *out = handle;
  });
}

void omnipt_model_free(omnipt_model* model) { delete model; }

omnipt_status omnipt_generate_text(const omnipt_model* model, size_t record, const char* inputs, int top_k,
                                   double temperature, uint64_t seed, char* buffer, size_t capacity,
                                   size_t* needed) {
  if (!model || !inputs) return fail(OMNIPT_ERR_ARGUMENT, "generate_text: null argument");
  std::string text;
  const auto status = guarded([&] {
    const auto modalities = parse_inputs(inputs);
    const auto heldout = omnipt::read_dataset(omnipt::DatasetLayout{model->config.data_root}.heldout());
    if (record >= heldout.size()) {
      throw omnipt::ValidationError("generate_text: record " + std::to_string(record) + " outside the " +
                                    std::to_string(heldout.size()) + " held-out records");
    }
    const auto gen = generation(model, top_k, temperature, seed);
    const auto ids = std::visit(
        [&](const auto& m) { return omnipt::describe(m, heldout[record], modalities, gen); }, model->model);
    text = omnipt::detokenize(std::span<const int>(ids), model->vocab);
  });
  if (status != OMNIPT_OK) return status;
  return copy_out(text, buffer, capacity, needed);
}

omnipt_status omnipt_generate_image(const omnipt_model* model, const char* text, int top_k, double temperature,
                                    uint64_t seed, const char* png_path) {
  if (!model || !text || !png_path) return fail(OMNIPT_ERR_ARGUMENT, "generate_image: null argument");
  return guarded([&] {
    const auto tokens = omnipt::tokenize(text, model->vocab).ids;
    const auto gen = generation(model, top_k, temperature, seed);
    const auto codes =
        std::visit([&](const auto& m) { return omnipt::imagine(m, std::span<const int>(tokens), gen); },
                   model->model);
    const auto codec = omnipt::load_codec<float>(model->config.codec_path);
    const std::filesystem::path out(png_path);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    omnipt::write_png(out, omnipt::decode_from_codes(codec, codes));
  });
}

}  // extern "C"
