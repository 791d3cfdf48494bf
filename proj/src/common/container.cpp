/*
 * Copyright (c) 2026, The canopy authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "common/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "common/error.hpp"

namespace canopy {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::kF32; }
template <>
constexpr DType dtype_of<double>() { return DType::kF64; }
template <>
constexpr DType dtype_of<std::int32_t>() { return DType::kI32; }
template <>
constexpr DType dtype_of<std::uint8_t>() { return DType::kU8; }

DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::kF32;
  if (s == "f64") return DType::kF64;
  if (s == "i32") return DType::kI32;
  if (s == "u8") return DType::kU8;
  fail(ErrorKind::kData, "unknown array dtype '", s, "'");
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

std::string dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kF32: return "f32";
    case DType::kF64: return "f64";
    case DType::kI32: return "i32";
    case DType::kU8: return "u8";
  }
  return "?";
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kF64: return 8;
    case DType::kU8: return 1;
    default: return 4;
  }
}

std::size_t ContainerArray::count() const { return bytes.size() / dtype_size(dtype); }

template <typename T>
ContainerArray ContainerArray::from(std::string name, std::vector<std::size_t> shape, std::span<const T> values) {
  require(product(shape) == values.size(), "array ", name, ": shape does not match ", values.size(), " values");
  ContainerArray a;
  a.name = std::move(name);
  a.dtype = dtype_of<T>();
  a.shape = std::move(shape);
  a.bytes.resize(values.size_bytes());
  if (!values.empty()) std::memcpy(a.bytes.data(), values.data(), values.size_bytes());
  return a;
}

template <typename T>
std::vector<T> ContainerArray::as() const {
  if (dtype != dtype_of<T>()) fail(ErrorKind::kData, "array ", name, " has dtype ", dtype_name(dtype));
  std::vector<T> out(bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

template ContainerArray ContainerArray::from<float>(std::string, std::vector<std::size_t>, std::span<const float>);
template ContainerArray ContainerArray::from<double>(std::string, std::vector<std::size_t>, std::span<const double>);
template ContainerArray ContainerArray::from<std::int32_t>(std::string, std::vector<std::size_t>,
                                                           std::span<const std::int32_t>);
template std::vector<float> ContainerArray::as<float>() const;
template std::vector<double> ContainerArray::as<double>() const;
template std::vector<std::int32_t> ContainerArray::as<std::int32_t>() const;
template ContainerArray ContainerArray::from<std::uint8_t>(std::string, std::vector<std::size_t>,
                                                           std::span<const std::uint8_t>);
template std::vector<std::uint8_t> ContainerArray::as<std::uint8_t>() const;

const ContainerArray* Container::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

const ContainerArray& Container::get(const std::string& name) const {
  const auto* a = find(name);
  if (!a) fail(ErrorKind::kData, "container is missing array '", name, "'");
  return *a;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  require(c.magic.size() == 8, "container magic must be 8 bytes");
  nlohmann::json header;
  header["metadata"] = c.metadata;
  header["arrays"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : c.arrays) {
    header["arrays"].push_back({{"name", a.name},
                                {"dtype", dtype_name(a.dtype)},
                                {"shape", a.shape},
                                {"offset", offset},
                                {"count", a.count()}});
    offset += a.bytes.size();
  }
  const std::string text = header.dump();
  const std::uint64_t len = text.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot open ", path.string(), " for writing");
  out.write(c.magic.data(), 8);
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : c.arrays)
    out.write(reinterpret_cast<const char*>(a.bytes.data()), static_cast<std::streamsize>(a.bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed for ", path.string());
}

Container read_container(const std::filesystem::path& path, const std::string& expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open ", path.string());
  const auto file_size = std::filesystem::file_size(path);

  Container c;
  c.magic.resize(8);
  std::uint64_t len = 0;
  in.read(c.magic.data(), 8);
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || 16 + len > file_size) fail(ErrorKind::kData, path.string(), ": truncated container header");
  if (!expected_magic.empty() && c.magic != expected_magic)
    fail(ErrorKind::kData, path.string(), ": expected a ", expected_magic, " container, found '", c.magic, "'");

  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    c.metadata = header.value("metadata", nlohmann::json::object());
    const std::uint64_t payload = 16 + len;
    for (const auto& entry : header.at("arrays")) {
      ContainerArray a;
      a.name = entry.at("name").get<std::string>();
      a.dtype = parse_dtype(entry.at("dtype").get<std::string>());
      a.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto count = entry.at("count").get<std::uint64_t>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      if (count != product(a.shape)) fail(ErrorKind::kData, path.string(), ": array ", a.name, " count/shape mismatch");
      const std::uint64_t nbytes = count * dtype_size(a.dtype);
      if (payload + offset + nbytes > file_size)
        fail(ErrorKind::kData, path.string(), ": array ", a.name, " runs past end of file");
      a.bytes.resize(nbytes);
      in.seekg(static_cast<std::streamoff>(payload + offset));
      in.read(reinterpret_cast<char*>(a.bytes.data()), static_cast<std::streamsize>(nbytes));
      if (!in) fail(ErrorKind::kIo, path.string(), ": read failed for array ", a.name);
      c.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, path.string(), ": malformed container header: ", e.what());
  }
  return c;
}

}  // namespace canopy
