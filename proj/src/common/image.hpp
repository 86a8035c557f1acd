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

#include <cstdint>
#include <filesystem>
#include <vector>

namespace omnipt {

inline constexpr int kImageChannels = 3;

// Square RGB image, row-major HWC, values in [0, 1].
struct Image {
  int size = 0;
  std::vector<float> pixels;

  Image() = default;
  explicit Image(int side) : size(side), pixels(static_cast<std::size_t>(side) * side * kImageChannels, 0.0f) {}
  float& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * size + x) * kImageChannels + c];
  }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * size + x) * kImageChannels + c];
  }
  friend bool operator==(const Image&, const Image&) = default;
};

// Pixels rounded to 8 bits.
std::vector<std::uint8_t> to_bytes(const Image& image);
Image from_bytes(int size, const std::vector<std::uint8_t>& bytes);

// 8-bit RGB PNG.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace omnipt
