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

#ifndef KGRBR_TYPES_HPP_
#define KGRBR_TYPES_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>

namespace kgrbr {

struct EntityId {
  std::uint32_t value = 0;
  auto operator<=>(const EntityId&) const = default;
};

struct RelationId {
  std::uint32_t value = 0;
  auto operator<=>(const RelationId&) const = default;
};

/// A single fact (head, relation, tail) in dictionary-encoded form.
struct Triplet {
  EntityId h;
  RelationId r;
  EntityId t;
  auto operator<=>(const Triplet&) const = default;
};

inline std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct TripletHash {
  std::size_t operator()(const Triplet& x) const noexcept {
    std::uint64_t k = (std::uint64_t{x.h.value} << 32) | x.t.value;
    return static_cast<std::size_t>(mix64(k ^ mix64(x.r.value)));
  }
};

} // namespace kgrbr

#endif // KGRBR_TYPES_HPP_
