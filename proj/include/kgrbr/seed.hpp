/*
 * Copyright 2026 The kgrbr Authors
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

#ifndef KGRBR_SEED_HPP_
#define KGRBR_SEED_HPP_

#include <cstdint>
#include <string_view>

#include "kgrbr/types.hpp"

namespace kgrbr {

/// Derives the seed of a named stochastic component from the run's master
/// seed: splitmix64(master ^ fnv1a64(component)). Components in use:
///   "embedding.init", "embedding.sampling".
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view component)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : component) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(master ^ h);
}

} // namespace kgrbr

#endif // KGRBR_SEED_HPP_
