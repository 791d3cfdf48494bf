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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common/container.hpp"
#include "nn/parameters.hpp"

namespace canopy::nn {

// Appends one f32 array per parameter, named after the parameter.
void append_parameters(Container& c, const ParameterStore<float>& store, const std::string& prefix = "");

// Copies arrays named prefix+parameter into the store. Every parameter must be
// present with a matching shape; extra arrays are ignored.
void restore_parameters(const Container& c, ParameterStore<float>& store, const std::string& prefix = "");

// FNV-1a over names, shapes and raw value bytes of the selected parameters, in
// registration order. An empty prefix list selects everything.
std::uint64_t parameter_checksum(const ParameterStore<float>& store, const std::vector<std::string>& prefixes = {},
                                 bool exclude_prefixes = false);

std::string checksum_hex(std::uint64_t checksum);

}  // namespace canopy::nn
