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

// Binary container shared by checkpoints, patches and grids:
//
//   8 bytes   magic, e.g. "CNPYCKPT"
//   8 bytes   header length L, unsigned little-endian
//   L bytes   UTF-8 JSON header
//   payload   raw little-endian array data
//
// The header holds {"arrays": [{"name", "dtype", "shape", "offset", "count"}],
// "metadata": {...}}. Offsets are relative to the start of the payload.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace canopy {

enum class DType { kF32, kF64, kI32, kU8 };

std::string dtype_name(DType dtype);
std::size_t dtype_size(DType dtype);

struct ContainerArray {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::size_t> shape;
  std::vector<unsigned char> bytes;

  std::size_t count() const;

  template <typename T>
  static ContainerArray from(std::string name, std::vector<std::size_t> shape, std::span<const T> values);

  template <typename T>
  std::vector<T> as() const;
};

struct Container {
  std::string magic;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ContainerArray> arrays;

  const ContainerArray* find(const std::string& name) const;
  // Throws a data error naming the file when the array is absent.
  const ContainerArray& get(const std::string& name) const;
};

inline constexpr const char* kCheckpointMagic = "CNPYCKPT";
inline constexpr const char* kPatchMagic = "CNPYPTCH";
inline constexpr const char* kGridMagic = "CNPYGRID";

void write_container(const std::filesystem::path& path, const Container& c);
// An empty `expected_magic` accepts any magic.
Container read_container(const std::filesystem::path& path, const std::string& expected_magic = "");

}  // namespace canopy
