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

#include "nn/checkpoint.hpp"

#include <cstdio>

#include "common/error.hpp"

namespace canopy::nn {

namespace {

bool has_prefix(const std::string& name, const std::vector<std::string>& prefixes) {
  for (const auto& p : prefixes)
    if (name.rfind(p, 0) == 0) return true;
  return false;
}

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;
  void feed(const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  }
};

}  // namespace

void append_parameters(Container& c, const ParameterStore<float>& store, const std::string& prefix) {
  for (const auto& p : store.all())
    c.arrays.push_back(ContainerArray::from<float>(prefix + p.name, p.tensor.shape(), p.tensor.values()));
}

void restore_parameters(const Container& c, ParameterStore<float>& store, const std::string& prefix) {
  for (auto& p : store.all()) {
    const auto* a = c.find(prefix + p.name);
    if (!a) fail(ErrorKind::kData, "checkpoint is missing parameter ", p.name);
    if (a->shape != p.tensor.shape())
      fail(ErrorKind::kData, "checkpoint parameter ", p.name, " has shape ", shape_str(a->shape), ", model expects ",
           shape_str(p.tensor.shape()));
    const auto values = a->as<float>();
    std::copy(values.begin(), values.end(), p.tensor.mutable_values().begin());
  }
}

std::uint64_t parameter_checksum(const ParameterStore<float>& store, const std::vector<std::string>& prefixes,
                                 bool exclude_prefixes) {
  Fnv1a f;
  for (const auto& p : store.all()) {
    if (!prefixes.empty() && has_prefix(p.name, prefixes) == exclude_prefixes) continue;
    f.feed(p.name.data(), p.name.size());
    for (auto d : p.tensor.shape()) {
      const std::uint64_t d64 = d;
      f.feed(&d64, sizeof(d64));
    }
    f.feed(p.tensor.data(), p.tensor.numel() * sizeof(float));
  }
  return f.h;
}

std::string checksum_hex(std::uint64_t checksum) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(checksum));
  return buf;
}

}  // namespace canopy::nn
