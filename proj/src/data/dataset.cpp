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

#include "data/dataset.hpp"

#include <json.hpp>

#include <sstream>

namespace omnipt {

using nlohmann::json;

namespace {

json matrix_json(const FeatureMatrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"values", m.values}};
}

FeatureMatrix matrix_from(const json& j) {
  FeatureMatrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.values = j.at("values").get<std::vector<float>>();
  if (m.values.size() != m.rows * m.cols) {
    throw ParseError("matrix holds " + std::to_string(m.values.size()) + " values, expected " +
                     std::to_string(m.rows * m.cols));
  }
  return m;
}

}  // namespace

std::string record_to_json(const TripletRecord& r) {
  json objects = json::array();
  for (const auto& o : r.scene.objects) objects.push_back({o.shape, o.color, o.cell});
  json j{{"id", r.record_id},
         {"objects", objects},
         {"caption", r.caption},
         {"tokens", r.token_ids},
         {"image", {{"size", r.image.size}, {"rgb8", to_bytes(r.image)}}},
         {"regions",
          {{"features", matrix_json(r.regions.features)},
           {"locations", matrix_json(r.regions.locations)},
           {"pseudo_labels", r.regions.pseudo_labels}}},
         {"audio", matrix_json(r.audio.features)},
         {"transcript", r.transcript}};
  return j.dump();
}

TripletRecord record_from_json(const std::string& line, const std::string& where) {
  try {
    const json j = json::parse(line);
    TripletRecord r;
    r.record_id = j.at("id").get<std::uint64_t>();
    for (const auto& o : j.at("objects")) {
      SceneObject so{o.at(0).get<int>(), o.at(1).get<int>(), o.at(2).get<int>()};
      if (so.shape < 0 || so.shape >= kShapeCount || so.color < 0 || so.color >= kColorCount) {
        throw ParseError("object shape/color out of range");
      }
      r.scene.objects.push_back(so);
    }
    r.caption = j.at("caption").get<std::string>();
    r.token_ids = j.at("tokens").get<std::vector<int>>();
    const auto& img = j.at("image");
    r.image = from_bytes(img.at("size").get<int>(), img.at("rgb8").get<std::vector<std::uint8_t>>());
    const auto& reg = j.at("regions");
    r.regions.features = matrix_from(reg.at("features"));
    r.regions.locations = matrix_from(reg.at("locations"));
    r.regions.pseudo_labels = reg.at("pseudo_labels").get<std::vector<int>>();
    if (r.regions.locations.rows != r.regions.features.rows ||
        r.regions.pseudo_labels.size() != r.regions.features.rows) {
      throw ParseError("region features, locations and labels disagree in count");
    }
    r.audio.features = matrix_from(j.at("audio"));
    r.transcript = j.at("transcript").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

DatasetWriter::~DatasetWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void DatasetWriter::write(const TripletRecord& record) {
  if (finished_) throw ContractError("DatasetWriter: write after finish");
  out_ << record_to_json(record) << '\n';
  ++count_;
}

void DatasetWriter::finish() {
  if (finished_) return;
  finished_ = true;
  out_ << json{{"eof", {{"records", count_}}}}.dump() << '\n';
  out_.close();
  if (!out_) throw IoError("write failed for " + path_.string());
}

DatasetReader::DatasetReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw IoError("cannot open dataset " + path.string());
}

bool DatasetReader::next(TripletRecord& record) {
  if (done_) return false;
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    const std::string where = path_.string() + ":" + std::to_string(line_);
    if (line.empty()) throw ParseError(where + ": empty line");
    if (line.rfind("{\"eof\"", 0) == 0) {
      std::size_t declared = 0;
      try {
        declared = json::parse(line).at("eof").at("records").get<std::size_t>();
      } catch (const json::exception& e) {
        throw ParseError(where + ": bad trailer: " + e.what());
      }
      if (declared != count_) {
        throw ParseError(where + ": trailer declares " + std::to_string(declared) + " records, read " +
                         std::to_string(count_));
      }
      std::string rest;
      if (std::getline(in_, rest)) throw ParseError(path_.string() + ": content after trailer");
      done_ = true;
      return false;
    }
    record = record_from_json(line, where);
    ++count_;
    return true;
  }
  throw ParseError(path_.string() + ":" + std::to_string(line_ + 1) +
                   ": truncated file (missing trailer after " + std::to_string(count_) + " records)");
}

void write_dataset(std::span<const TripletRecord> records, const std::filesystem::path& path) {
  DatasetWriter writer(path);
  for (const auto& r : records) writer.write(r);
  writer.finish();
}

std::vector<TripletRecord> read_dataset(const std::filesystem::path& path) {
  DatasetReader reader(path);
  std::vector<TripletRecord> out;
  TripletRecord r;
  while (reader.next(r)) out.push_back(std::move(r));
  return out;
}

void generate_dataset(const std::filesystem::path& root, const SynthConfig& config,
                      std::size_t train_count, std::size_t heldout_count) {
  config.validate();
  std::filesystem::create_directories(root);
  const DatasetLayout layout{root};
  const auto vocab = synth_vocabulary();
  const auto bank = SignatureBank::create(config, vocab);
  vocab.save(layout.vocab());
  {
    DatasetWriter writer(layout.train());
    for (std::size_t i = 0; i < train_count; ++i) writer.write(generate_record(i, config, bank, vocab));
    writer.finish();
  }
  {
    DatasetWriter writer(layout.heldout());
    for (std::size_t i = 0; i < heldout_count; ++i) {
      writer.write(generate_record(train_count + i, config, bank, vocab));
    }
    writer.finish();
  }
  std::ofstream meta(layout.meta(), std::ios::trunc);
  meta << "seed=" << config.seed << '\n'
       << "image_size=" << config.image_size << '\n'
       << "layout_grid=" << config.layout_grid << '\n'
       << "d_v=" << config.d_v << '\n'
       << "d_a=" << config.d_a << '\n'
       << "frames_per_word=" << config.frames_per_word << '\n'
       << "region_noise=" << config.region_noise << '\n'
       << "audio_noise=" << config.audio_noise << '\n'
       << "train_count=" << train_count << '\n'
       << "heldout_count=" << heldout_count << '\n';
  if (!meta) throw IoError("cannot write " + layout.meta().string());
}

DatasetMeta read_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset meta " + path.string());
  DatasetMeta meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ParseError(where + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "seed") meta.synth.seed = std::stoull(value);
      else if (key == "image_size") meta.synth.image_size = std::stoi(value);
      else if (key == "layout_grid") meta.synth.layout_grid = std::stoi(value);
      else if (key == "d_v") meta.synth.d_v = std::stoi(value);
      else if (key == "d_a") meta.synth.d_a = std::stoi(value);
      else if (key == "frames_per_word") meta.synth.frames_per_word = std::stoi(value);
      else if (key == "region_noise") meta.synth.region_noise = std::stod(value);
      else if (key == "audio_noise") meta.synth.audio_noise = std::stod(value);
      else if (key == "train_count") meta.train_count = std::stoull(value);
      else if (key == "heldout_count") meta.heldout_count = std::stoull(value);
      else throw ParseError(where + ": unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ParseError(where + ": bad value for '" + key + "'");
    }
  }
  return meta;
}

}  // namespace omnipt
