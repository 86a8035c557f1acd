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

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "common/image.hpp"
#include "frontends/embedders.hpp"
#include "frontends/vocabulary.hpp"

namespace omnipt {

inline constexpr int kShapeCount = 4;
inline constexpr int kColorCount = 8;
inline constexpr int kSceneClasses = kShapeCount * kColorCount;
inline constexpr int kMaxObjects = 4;

extern const std::array<const char*, kShapeCount> kShapeNames;
extern const std::array<const char*, kColorCount> kColorNames;

struct SceneObject {
  int shape = 0;
  int color = 0;
  int cell = 0;  // row-major index on the layout grid
  int class_id() const { return shape * kColorCount + color; }
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

// Objects are kept sorted by cell so captions and regions follow reading order.
struct Scene {
  std::vector<SceneObject> objects;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct SynthConfig {
  int image_size = 32;
  int layout_grid = 4;
  int d_v = 64;
  int d_a = 32;
  int frames_per_word = 2;
  double region_noise = 0.05;
  double audio_noise = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fixed per-dataset signatures: one unit vector per scene class (region
// features) and one per vocabulary word (audio frames).
struct SignatureBank {
  std::vector<std::vector<float>> classes;  // kSceneClasses x d_v
  std::vector<std::vector<float>> words;    // vocab size x d_a

  static SignatureBank create(const SynthConfig& config, const Vocabulary& vocab);
};

struct TripletRecord {
  std::uint64_t record_id = 0;
  Scene scene;
  std::string caption;
  std::vector<int> token_ids;
  Image image;
  RegionSet regions;
  AudioTokens audio;
  std::vector<std::string> transcript;

  // Distinct scene classes, ascending.
  std::vector<int> classes() const;
  friend bool operator==(const TripletRecord&, const TripletRecord&) = default;
};

// Reserved tokens, then "a", "and", ".", the colors and the shapes.
Vocabulary synth_vocabulary();

// 1..4 objects (uniform count) on distinct cells; shape and color uniform.
Scene generate_scene(std::mt19937_64& rng, int layout_grid = 4);

// "a red circle and a blue square ."
std::string scene_caption(const Scene& scene);

Image render_scene(const Scene& scene, const SynthConfig& config, std::mt19937_64& rng);

TripletRecord realize(std::uint64_t record_id, const Scene& scene, const SynthConfig& config,
                      const SignatureBank& bank, const Vocabulary& vocab, std::mt19937_64& rng);

// Deterministic in (config.seed, record_id) alone.
TripletRecord generate_record(std::uint64_t record_id, const SynthConfig& config,
                              const SignatureBank& bank, const Vocabulary& vocab);

std::mt19937_64 record_stream(std::uint64_t master_seed, std::uint64_t record_id);

}  // namespace omnipt
