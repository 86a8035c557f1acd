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

#ifndef OMNIPT_OMNIPT_H_
#define OMNIPT_OMNIPT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define OMNIPT_API __attribute__((visibility("default")))
#else
#define OMNIPT_API
#endif

typedef enum omnipt_status {
  OMNIPT_OK = 0,
  OMNIPT_ERR_VALIDATION = 1,
  OMNIPT_ERR_CONTRACT = 2,
  OMNIPT_ERR_DIMENSION = 3,
  OMNIPT_ERR_NUMERIC = 4,
  OMNIPT_ERR_PARSE = 5,
  OMNIPT_ERR_IO = 6,
  OMNIPT_ERR_CONFIG = 7,
  OMNIPT_ERR_ARGUMENT = 8,
  OMNIPT_ERR_INTERNAL = 9
} omnipt_status;

typedef struct omnipt_config omnipt_config;
typedef struct omnipt_model omnipt_model;

// Line-oriented progress sink; `line` is valid only during the call.
typedef void (*omnipt_line_callback)(const char* line, void* user);

OMNIPT_API const char* omnipt_version(void);
OMNIPT_API const char* omnipt_status_name(omnipt_status status);
// Message of the last failed call on this thread ("" if none).
OMNIPT_API const char* omnipt_last_error(void);

// A configuration starts from the desk defaults.
OMNIPT_API omnipt_status omnipt_config_new(omnipt_config** out);
OMNIPT_API void omnipt_config_free(omnipt_config* config);
OMNIPT_API omnipt_status omnipt_config_load_file(omnipt_config* config, const char* path);
// "key=value"; a bare key such as "max_steps" selects the unique dotted key ending in it.
OMNIPT_API omnipt_status omnipt_config_set(omnipt_config* config, const char* assignment);
// Copies the value with a terminating NUL when it fits; `needed` receives the
// buffer size required (including the NUL).
OMNIPT_API omnipt_status omnipt_config_get(const omnipt_config* config, const char* key, char* buffer,
                                           size_t capacity, size_t* needed);
// Parses every value; fails on the first invalid or inconsistent one.
OMNIPT_API omnipt_status omnipt_config_validate(const omnipt_config* config);

// Writes <data.root>/{train,heldout}.jsonl, vocab.txt and meta.
OMNIPT_API omnipt_status omnipt_gen_data(const omnipt_config* config);

// Trains the image codec on the first codec.images training images and saves
// it to codec.path. Reports one line per epoch and the held-out error.
OMNIPT_API omnipt_status omnipt_codec_train(const omnipt_config* config, omnipt_line_callback progress,
                                            void* user, double* heldout_mse);

// Main pretraining. `resume_checkpoint` may be NULL. Every metrics line is
// passed to `progress`.
OMNIPT_API omnipt_status omnipt_pretrain(const omnipt_config* config, const char* resume_checkpoint,
                                         omnipt_line_callback progress, void* user, int* steps_run);

// suite: "retrieval", "probe", "wer" or "all". Evaluates `checkpoint` on the
// configured held-out split and writes the report file ("task metric value n
// seed" per line).
OMNIPT_API omnipt_status omnipt_evaluate(const omnipt_config* config, const char* checkpoint, const char* suite,
                                         const char* report_path, omnipt_line_callback progress, void* user);

OMNIPT_API omnipt_status omnipt_model_load(const char* checkpoint, omnipt_model** out);
OMNIPT_API void omnipt_model_free(omnipt_model* model);

// Text from held-out record `record` given the input modalities
// ("image", "audio", "audio+image", ...).
OMNIPT_API omnipt_status omnipt_generate_text(const omnipt_model* model, size_t record, const char* inputs,
                                              int top_k, double temperature, uint64_t seed, char* buffer,
                                              size_t capacity, size_t* needed);

// Text-to-image: encodes `text` alone, samples a code grid and renders it
// with the model's codec into an 8-bit PNG of side image_size.
OMNIPT_API omnipt_status omnipt_generate_image(const omnipt_model* model, const char* text, int top_k,
                                               double temperature, uint64_t seed, const char* png_path);

#ifdef __cplusplus
}
#endif

#endif  // OMNIPT_OMNIPT_H_
