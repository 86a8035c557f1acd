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

#include "data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace omnipt {

const std::array<const char*, kShapeCount> kShapeNames = {"circle", "square", "triangle", "cross"};
const std::array<const char*, kColorCount> kColorNames = {"red",  "green",   "blue",  "yellow",
                                                          "cyan", "magenta", "white", "orange"};

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, kColorCount> kPalette = {{{230, 25, 25},
                                                                           {25, 200, 25},
                                                                           {40, 60, 230},
                                                                           {230, 220, 30},
                                                                           {30, 210, 220},
                                                                           {210, 40, 210},
                                                                           {240, 240, 240},
                                                                           {240, 140, 20}}};

std::vector<float> unit_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

bool shape_covers(int shape, int size, int x, int y) {
  const double c = (size - 1) / 2.0;
  switch (shape) {
    case 0: {  // circle
      const double r = size / 2.0;
      return (x - c) * (x - c) + (y - c) * (y - c) <= r * r - 0.5;
    }
    case 1:  // square
      return true;
    case 2:  // triangle, apex up
      return std::abs(x - c) <= (y + 1) / 2.0;
    default: {  // cross
      const double half = std::max(0.5, size / 6.0);
      return std::abs(x - c) <= half || std::abs(y - c) <= half;
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (layout_grid <= 0 || image_size <= 0 || image_size % layout_grid != 0) {
    throw ConfigError("synth: image_size must be a positive multiple of layout_grid");
  }
  if (image_size / layout_grid < 4) throw ConfigError("synth: layout cells must be at least 4 px");
  if (layout_grid * layout_grid < kMaxObjects) throw ConfigError("synth: layout grid too small");
  if (d_v <= 0 || d_a <= 0 || frames_per_word <= 0) {
    throw ConfigError("synth: d_v, d_a, frames_per_word must be positive");
  }
  if (region_noise < 0 || audio_noise < 0) throw ConfigError("synth: noise scales must be >= 0");
}

std::mt19937_64 record_stream(std::uint64_t master_seed, std::uint64_t record_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(record_id), static_cast<std::uint32_t>(record_id >> 32)};
  return std::mt19937_64(seq);
}

SignatureBank SignatureBank::create(const SynthConfig& config, const Vocabulary& vocab) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32), 0x5167u};
  std::mt19937_64 rng(seq);
  SignatureBank bank;
  for (int c = 0; c < kSceneClasses; ++c) bank.classes.push_back(unit_vector(config.d_v, rng));
  for (int w = 0; w < vocab.size(); ++w) bank.words.push_back(unit_vector(config.d_a, rng));
  return bank;
}

std::vector<int> TripletRecord::classes() const {
  std::vector<int> out;
  for (const auto& o : scene.objects) out.push_back(o.class_id());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Vocabulary synth_vocabulary() {
  std::vector<std::string> words{"a", "and", "."};
  for (const char* c : kColorNames) words.emplace_back(c);
  for (const char* s : kShapeNames) words.emplace_back(s);
  return Vocabulary(words);
}

Scene generate_scene(std::mt19937_64& rng, int layout_grid) {
  const int cells = layout_grid * layout_grid;
  if (cells < kMaxObjects) throw ValidationError("generate_scene: layout grid too small");
  const int count = std::uniform_int_distribution<int>(1, kMaxObjects)(rng);
  std::vector<int> pool(static_cast<std::size_t>(cells));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < count; ++i) {
    const int j = std::uniform_int_distribution<int>(i, cells - 1)(rng);
    std::swap(pool[i], pool[j]);
  }
  std::uniform_int_distribution<int> shape(0, kShapeCount - 1);
  std::uniform_int_distribution<int> color(0, kColorCount - 1);
  Scene scene;
  for (int i = 0; i < count; ++i) {
    SceneObject o;
    o.cell = pool[i];
    o.shape = shape(rng);
    o.color = color(rng);
    scene.objects.push_back(o);
  }
  std::sort(scene.objects.begin(), scene.objects.end(),
            [](const SceneObject& a, const SceneObject& b) { return a.cell < b.cell; });
  return scene;
}

std::string scene_caption(const Scene& scene) {
  std::string out;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (i) out += " and ";
    out += "a ";
    out += kColorNames[scene.objects[i].color];
    out += ' ';
    out += kShapeNames[scene.objects[i].shape];
  }
  out += " .";
  return out;
}

Image render_scene(const Scene& scene, const SynthConfig& config, std::mt19937_64& rng) {
  config.validate();
  Image image(config.image_size);
  const int cell = config.image_size / config.layout_grid;
  const int side = cell * 3 / 4;
  std::uniform_int_distribution<int> jitter(0, cell - side);
  for (const auto& o : scene.objects) {
    const int x0 = (o.cell % config.layout_grid) * cell + jitter(rng);
    const int y0 = (o.cell / config.layout_grid) * cell + jitter(rng);
    const auto& rgb = kPalette[static_cast<std::size_t>(o.color)];
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        if (!shape_covers(o.shape, side, x, y)) continue;
        for (int c = 0; c < kImageChannels; ++c) image.at(y0 + y, x0 + x, c) = rgb[c] / 255.0f;
      }
    }
  }
  return image;
}

namespace {

// Bounding box of the non-black pixels inside one layout cell.
std::array<float, kLocationWidth> cell_box(const Image& image, int cell_index, int layout_grid) {
  const int cell = image.size / layout_grid;
  const int cx = (cell_index % layout_grid) * cell;
  const int cy = (cell_index / layout_grid) * cell;
  int x1 = image.size, y1 = image.size, x2 = -1, y2 = -1;
  for (int y = cy; y < cy + cell; ++y) {
    for (int x = cx; x < cx + cell; ++x) {
      if (image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2) > 0.0f) {
        x1 = std::min(x1, x);
        y1 = std::min(y1, y);
        x2 = std::max(x2, x);
        y2 = std::max(y2, y);
      }
    }
  }
  if (x2 < 0) throw ContractError("cell_box: object rendered no pixels");
  const auto s = static_cast<float>(image.size);
  return location_feature(x1 / s, y1 / s, (x2 + 1) / s, (y2 + 1) / s);
}

void add_noisy_row(FeatureMatrix& m, std::size_t row, std::span<const float> base, double sigma,
                   std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  auto dst = m.row(row);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(base[i] + (sigma > 0 ? noise(rng) : 0.0));
  }
}

}  // namespace

TripletRecord realize(std::uint64_t record_id, const Scene& scene, const SynthConfig& config,
                      const SignatureBank& bank, const Vocabulary& vocab, std::mt19937_64& rng) {
  if (scene.objects.empty() || scene.objects.size() > static_cast<std::size_t>(kMaxObjects)) {
    throw ValidationError("realize: scene must hold 1..4 objects");
  }
  TripletRecord rec;
  rec.record_id = record_id;
  rec.scene = scene;
  rec.caption = scene_caption(scene);
  rec.token_ids = tokenize(rec.caption, vocab).ids;
  rec.transcript = split_words(rec.caption);
  rec.image = render_scene(scene, config, rng);

  const std::size_t k = scene.objects.size() + 1;
  rec.regions.features = FeatureMatrix(k, static_cast<std::size_t>(config.d_v));
  rec.regions.locations = FeatureMatrix(k, kLocationWidth);
  std::vector<float> whole(static_cast<std::size_t>(config.d_v), 0.0f);
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    const auto& sig = bank.classes[static_cast<std::size_t>(o.class_id())];
    add_noisy_row(rec.regions.features, i, sig, config.region_noise, rng);
    const auto box = cell_box(rec.image, o.cell, config.layout_grid);
    std::copy(box.begin(), box.end(), rec.regions.locations.row(i).begin());
    rec.regions.pseudo_labels.push_back(o.class_id());
    for (std::size_t d = 0; d < whole.size(); ++d) whole[d] += sig[d] / static_cast<float>(scene.objects.size());
  }
  add_noisy_row(rec.regions.features, k - 1, whole, config.region_noise, rng);
  const auto full = location_feature(0.0f, 0.0f, 1.0f, 1.0f);
  std::copy(full.begin(), full.end(), rec.regions.locations.row(k - 1).begin());
  rec.regions.pseudo_labels.push_back(scene.objects.front().class_id());

  const auto fpw = static_cast<std::size_t>(config.frames_per_word);
  rec.audio.features = FeatureMatrix(rec.transcript.size() * fpw, static_cast<std::size_t>(config.d_a));
  for (std::size_t w = 0; w < rec.transcript.size(); ++w) {
    const auto& sig = bank.words.at(static_cast<std::size_t>(vocab.id(rec.transcript[w])));
    for (std::size_t f = 0; f < fpw; ++f) add_noisy_row(rec.audio.features, w * fpw + f, sig, config.audio_noise, rng);
  }
  return rec;
}

TripletRecord generate_record(std::uint64_t record_id, const SynthConfig& config,
                              const SignatureBank& bank, const Vocabulary& vocab) {
  auto rng = record_stream(config.seed, record_id);
  const Scene scene = generate_scene(rng, config.layout_grid);
  return realize(record_id, scene, config, bank, vocab, rng);
}

}  // namespace omnipt
