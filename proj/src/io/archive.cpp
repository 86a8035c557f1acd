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

#include "io/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace omnipt {

namespace {

constexpr char kMagic[8] = {'O', 'M', 'N', 'I', 'P', 'T', 'A', 'R'};
constexpr std::uint64_t kMaxHeaderBytes = 64u << 20;

static_assert(std::endian::native == std::endian::little,
              "archive I/O assumes a little-endian host");

std::string render_header(const Archive& a) {
  std::ostringstream out;
  out << "version " << kArchiveVersion << '\n';
  out << "dtype " << dtype_name(a.dtype) << '\n';
  out << "kind " << (a.kind.empty() ? "-" : a.kind) << '\n';
  for (const auto& [key, value] : a.meta) {
    if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw ValidationError("archive: metadata '" + key + "' contains whitespace or newlines");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  for (const auto& arr : a.arrays) {
    if (arr.name.empty() || arr.name.find_first_of(" \n") != std::string::npos) {
      throw ValidationError("archive: bad array name '" + arr.name + "'");
    }
    if (shape_numel(arr.shape) != arr.values.size()) {
      throw DimensionError("archive: array '" + arr.name + "' shape " + shape_str(arr.shape) +
                           " does not hold " + std::to_string(arr.values.size()) + " values");
    }
    out << "array " << arr.name;
    for (auto d : arr.shape) out << ' ' << d;
    out << '\n';
  }
  return out.str();
}

}  // namespace

const char* dtype_name(DType dtype) { return dtype == DType::kF64 ? "f64" : "f32"; }

DType parse_dtype(const std::string& name) {
  if (name == "f32" || name == "float32") return DType::kF32;
  if (name == "f64" || name == "float64") return DType::kF64;
  throw ParseError("unknown dtype '" + name + "'");
}

void Archive::set_meta(const std::string& key, std::string value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  meta.emplace_back(key, std::move(value));
}

bool Archive::has_meta(const std::string& key) const {
  for (const auto& kv : meta) {
    if (kv.first == key) return true;
  }
  return false;
}

const std::string& Archive::meta_value(const std::string& key) const {
  for (const auto& kv : meta) {
    if (kv.first == key) return kv.second;
  }
  throw ParseError("archive: missing metadata '" + key + "'");
}

const ArchiveArray* Archive::find(const std::string& name) const {
  for (const auto& arr : arrays) {
    if (arr.name == name) return &arr;
  }
  return nullptr;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  const std::string header = render_header(archive);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t length = header.size();
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& arr : archive.arrays) {
      if (archive.dtype == DType::kF64) {
        out.write(reinterpret_cast<const char*>(arr.values.data()),
                  static_cast<std::streamsize>(arr.values.size() * sizeof(double)));
      } else {
        std::vector<float> narrow(arr.values.begin(), arr.values.end());
        out.write(reinterpret_cast<const char*>(narrow.data()),
                  static_cast<std::streamsize>(narrow.size() * sizeof(float)));
      }
    }
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive " + path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);

  char magic[sizeof kMagic];
  std::uint64_t header_length = 0;
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ParseError(path.string() + ": not an archive (bad magic)");
  }
  if (!in.read(reinterpret_cast<char*>(&header_length), sizeof header_length) ||
      header_length > kMaxHeaderBytes || 16 + header_length > file_size) {
    throw ParseError(path.string() + ": corrupt header length");
  }
  std::string header(header_length, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_length));

  Archive archive;
  bool have_version = false, have_dtype = false;
  std::istringstream lines(header);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto where = path.string() + ": header line " + std::to_string(line_no);
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "version") {
      int version = 0;
      if (!(fields >> version) || version != kArchiveVersion) {
        throw ParseError(where + ": unsupported version");
      }
      have_version = true;
    } else if (tag == "dtype") {
      std::string name;
      fields >> name;
      archive.dtype = parse_dtype(name);
      have_dtype = true;
    } else if (tag == "kind") {
      fields >> archive.kind;
    } else if (tag == "meta") {
      std::string key;
      fields >> key;
      std::string value;
      std::getline(fields, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      archive.meta.emplace_back(key, value);
    } else if (tag == "array") {
      ArchiveArray arr;
      if (!(fields >> arr.name)) throw ParseError(where + ": array without a name");
      std::size_t d = 0;
      while (fields >> d) {
        if (d == 0) throw ParseError(where + ": zero extent for '" + arr.name + "'");
        arr.shape.push_back(d);
      }
      if (!fields.eof() || arr.shape.empty()) {
        throw ParseError(where + ": bad shape for '" + arr.name + "'");
      }
      archive.arrays.push_back(std::move(arr));
    } else {
      throw ParseError(where + ": unknown entry '" + tag + "'");
    }
  }
  if (!have_version || !have_dtype) throw ParseError(path.string() + ": header lacks version/dtype");

  const std::size_t width = archive.dtype == DType::kF64 ? 8 : 4;
  std::uint64_t payload = 0;
  for (const auto& arr : archive.arrays) payload += shape_numel(arr.shape) * width;
  if (16 + header_length + payload != file_size) {
    throw ParseError(path.string() + ": payload is " + std::to_string(file_size - 16 - header_length) +
                     " bytes, header describes " + std::to_string(payload));
  }
  for (auto& arr : archive.arrays) {
    const auto n = shape_numel(arr.shape);
    arr.values.resize(n);
    if (archive.dtype == DType::kF64) {
      in.read(reinterpret_cast<char*>(arr.values.data()), static_cast<std::streamsize>(n * 8));
    } else {
      std::vector<float> narrow(n);
      in.read(reinterpret_cast<char*>(narrow.data()), static_cast<std::streamsize>(n * 4));
      std::copy(narrow.begin(), narrow.end(), arr.values.begin());
    }
  }
  if (!in) throw ParseError(path.string() + ": truncated payload");
  return archive;
}

template <typename T>
void store_parameters(const ParameterSet<T>& params, Archive& archive, const std::string& prefix) {
  for (const auto& p : params.list()) {
    ArchiveArray arr;
    arr.name = prefix + p.name;
    arr.shape = p.tensor.shape();
    arr.values.assign(p.tensor.data().begin(), p.tensor.data().end());
    archive.arrays.push_back(std::move(arr));
  }
}

template <typename T>
void load_parameters(ParameterSet<T>& params, const Archive& archive, const std::string& prefix) {
  std::vector<const ArchiveArray*> sources;
  for (const auto& p : params.list()) {
    const auto* arr = archive.find(prefix + p.name);
    if (arr == nullptr) throw ParseError("checkpoint lacks parameter '" + p.name + "'");
    if (arr->shape != p.tensor.shape()) {
      throw DimensionError("parameter '" + p.name + "': checkpoint shape " + shape_str(arr->shape) +
                           " != model shape " + shape_str(p.tensor.shape()));
    }
    sources.push_back(arr);
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto dst = params.list()[i].tensor.data_mut();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<T>(sources[i]->values[j]);
  }
}

template void store_parameters(const ParameterSet<float>&, Archive&, const std::string&);
template void store_parameters(const ParameterSet<double>&, Archive&, const std::string&);
template void load_parameters(ParameterSet<float>&, const Archive&, const std::string&);
template void load_parameters(ParameterSet<double>&, const Archive&, const std::string&);

}  // namespace omnipt
