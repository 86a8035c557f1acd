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
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "data/synth.hpp"

namespace omnipt {

// One JSON object per line, then a trailer line {"eof":{"records":N}}.
// A file without a matching trailer is rejected as truncated.
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::filesystem::path& path);
  ~DatasetWriter();
  void write(const TripletRecord& record);
  // Writes the trailer and closes the file. Called by the destructor if needed.
  void finish();
  std::size_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t count_ = 0;
  bool finished_ = false;
};

// Streams records one line at a time.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);
  // False after the trailer has been read and checked.
  bool next(TripletRecord& record);
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::size_t count_ = 0;
  bool done_ = false;
};

std::string record_to_json(const TripletRecord& record);
// `where` prefixes parse error messages.
TripletRecord record_from_json(const std::string& line, const std::string& where);

void write_dataset(std::span<const TripletRecord> records, const std::filesystem::path& path);
std::vector<TripletRecord> read_dataset(const std::filesystem::path& path);

struct DatasetLayout {
  std::filesystem::path root;
  std::filesystem::path train() const { return root / "train.jsonl"; }
  std::filesystem::path heldout() const { return root / "heldout.jsonl"; }
  std::filesystem::path vocab() const { return root / "vocab.txt"; }
  std::filesystem::path meta() const { return root / "meta"; }
};

struct DatasetMeta {
  SynthConfig synth;
  std::size_t train_count = 0;
  std::size_t heldout_count = 0;
};

// Train ids are 0..train-1, held-out ids follow, so the splits are disjoint.
void generate_dataset(const std::filesystem::path& root, const SynthConfig& config,
                      std::size_t train_count, std::size_t heldout_count);
DatasetMeta read_meta(const std::filesystem::path& path);

}  // namespace omnipt
