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

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "kgrbr/embedding.hpp"
#include "kgrbr/error.hpp"
#include "kgrbr/format.hpp"

// Layout: "EMRB" | version u32 | kind u8 | k u32 | |E| u32 | |R| u32 |
// norm_order u8 | entity matrix | relation matrix | [normal matrix]
// Integers and f64 values little-endian; matrices row-major.

namespace kgrbr {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'R', 'B'};

template <typename T>
void put_le(std::ostream& out, T value)
{
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in)
{
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw FormatError("truncated model file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

void put_matrix(std::ostream& out, const std::vector<double>& m)
{
  for (const double x : m)
    put_le(out, std::bit_cast<std::uint64_t>(x));
}

void get_matrix(std::istream& in, std::vector<double>& m)
{
  for (auto& x : m)
    x = std::bit_cast<double>(get_le<std::uint64_t>(in));
}

} // namespace

void save_model(const EmbeddingModel& model, std::ostream& out)
{
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kModelFormatVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(model.kind()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_entities()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_relations()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(model.norm_order()));
  put_matrix(out, model.entity_data());
  put_matrix(out, model.relation_data());
  if (model.kind() == ModelKind::TransH)
    put_matrix(out, model.normal_data());
  if (!out)
    throw IoError("failed writing model");
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  save_model(model, out);
}

EmbeddingModel load_model(std::istream& in)
{
  char magic[4];
  if (!in.read(magic, sizeof magic))
    throw FormatError("truncated model file");
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw FormatError("not a model file (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kModelFormatVersion)
    throw FormatError("unsupported model format version "
                      + std::to_string(version));
  const auto kind = get_le<std::uint8_t>(in);
  if (kind > static_cast<std::uint8_t>(ModelKind::TransH))
    throw FormatError("unknown model kind " + std::to_string(kind));
  const auto dim = get_le<std::uint32_t>(in);
  const auto n_entities = get_le<std::uint32_t>(in);
  const auto n_relations = get_le<std::uint32_t>(in);
  const auto norm = get_le<std::uint8_t>(in);
  if (dim == 0 || (norm != 1 && norm != 2))
    throw FormatError("corrupt model header");

  EmbeddingModel m(static_cast<ModelKind>(kind), dim, n_entities, n_relations,
                   norm);
  get_matrix(in, m.entity_data());
  get_matrix(in, m.relation_data());
  if (m.kind() == ModelKind::TransH)
    get_matrix(in, m.normal_data());
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after model data");
  return m;
}

EmbeddingModel load_model(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return load_model(in);
}

EmbeddingModel load_model(const std::filesystem::path& path,
                          const KnowledgeGraph& g)
{
  auto m = load_model(path);
  m.check_compatible(g);
  return m;
}

void export_tsv(const EmbeddingModel& model, std::ostream& out)
{
  auto dump = [&out](const char* tag, std::size_t rows, auto row_of) {
    for (std::uint32_t i = 0; i < rows; ++i) {
      out << tag << '\t' << i;
      for (const double x : row_of(i))
        out << '\t' << format_double(x);
      out << '\n';
    }
  };
  dump("entity", model.num_entities(),
       [&](std::uint32_t i) { return model.entity(EntityId{i}); });
  dump("relation", model.num_relations(),
       [&](std::uint32_t i) { return model.relation_vector(RelationId{i}); });
  if (model.kind() == ModelKind::TransH)
    dump("normal", model.num_relations(),
         [&](std::uint32_t i) { return model.normal(RelationId{i}); });
}

} // namespace kgrbr
