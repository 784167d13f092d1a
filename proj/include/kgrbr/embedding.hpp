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

#ifndef KGRBR_EMBEDDING_HPP_
#define KGRBR_EMBEDDING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "kgrbr/graph.hpp"
#include "kgrbr/types.hpp"

namespace kgrbr {

enum class ModelKind : std::uint8_t { TransE = 0, TransH = 1 };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

enum class NegativeSampling { Uniform, Bernoulli };

NegativeSampling parse_negative_sampling(std::string_view name);

struct TrainConfig {
  ModelKind kind = ModelKind::TransE;
  std::size_t dim = 100;
  double learning_rate = 0.001;
  double margin = 1.0;
  std::size_t epochs = 1000;
  std::size_t batch_size = 100;
  int norm_order = 2;
  NegativeSampling neg_sampling = NegativeSampling::Uniform;
  std::uint64_t seed = 0;

  /// Throws ConfigError on dim == 0, non-positive rate/margin, bad norm.
  void validate() const;
};

/// L1 or L2 norm of v.
double vector_norm(std::span<const double> v, int order);

/// Translation-based embedding: entity vectors, relation translation vectors
/// and (TransH) unit hyperplane normals, each of dimension k, stored
/// row-major.
class EmbeddingModel {
public:
  EmbeddingModel(ModelKind kind, std::size_t dim, std::size_t n_entities,
                 std::size_t n_relations, int norm_order = 2);

  ModelKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t num_entities() const { return n_entities_; }
  std::size_t num_relations() const { return n_relations_; }
  int norm_order() const { return norm_order_; }

  std::span<const double> entity(EntityId e) const { return row(entities_, e.value); }
  std::span<double> entity(EntityId e) { return row(entities_, e.value); }

  /// The additive translation of r: v_r for TransE, d_r for TransH.
  std::span<const double> relation_vector(RelationId r) const { return row(relations_, r.value); }
  std::span<double> relation_vector(RelationId r) { return row(relations_, r.value); }

  /// Hyperplane normal w_r. Only valid for TransH.
  std::span<const double> normal(RelationId r) const;
  std::span<double> normal(RelationId r);

  const std::vector<double>& entity_data() const { return entities_; }
  const std::vector<double>& relation_data() const { return relations_; }
  const std::vector<double>& normal_data() const { return normals_; }
  std::vector<double>& entity_data() { return entities_; }
  std::vector<double>& relation_data() { return relations_; }
  std::vector<double>& normal_data() { return normals_; }

  /// ||h + r - t|| (TransE) or the same on hyperplane projections (TransH).
  double score_raw(EntityId h, RelationId r, EntityId t) const;
  double score_raw(const Triplet& x) const { return score_raw(x.h, x.r, x.t); }

  /// 1 for train facts, otherwise score_raw / k + 1.
  double triplet_score(const KnowledgeGraph& g, const Triplet& x) const;

  /// Throws DimensionError unless entity/relation counts equal the graph's.
  void check_compatible(const KnowledgeGraph& g) const;

  bool operator==(const EmbeddingModel&) const = default;

private:
  std::span<const double> row(const std::vector<double>& m, std::uint32_t i) const
  {
    return {m.data() + std::size_t{i} * dim_, dim_};
  }
  std::span<double> row(std::vector<double>& m, std::uint32_t i)
  {
    return {m.data() + std::size_t{i} * dim_, dim_};
  }

  ModelKind kind_;
  std::size_t dim_;
  std::size_t n_entities_;
  std::size_t n_relations_;
  int norm_order_;
  std::vector<double> entities_;
  std::vector<double> relations_;
  std::vector<double> normals_;
};

/// Sparse parameter gradient: a list of (block, row, k values) slots.
/// Rows may repeat; slots are summed when applied.
class Gradient {
public:
  enum class Block : std::uint8_t { Entity, Relation, Normal };

  explicit Gradient(std::size_t dim) : dim_(dim) {}

  /// Appends a zeroed slot and returns its index. Adding a slot invalidates
  /// spans previously returned by values().
  std::size_t add(Block block, std::uint32_t row);
  void clear();

  std::size_t size() const { return slots_.size(); }
  Block block(std::size_t i) const { return slots_[i].block; }
  std::uint32_t row(std::size_t i) const { return slots_[i].row; }
  std::span<const double> values(std::size_t i) const
  {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> values(std::size_t i)
  {
    return {values_.data() + i * dim_, dim_};
  }

  /// param += scale * gradient for every slot.
  void apply(EmbeddingModel& model, double scale) const;

private:
  struct Slot {
    Block block;
    std::uint32_t row;
  };
  std::size_t dim_;
  std::vector<Slot> slots_;
  std::vector<double> values_;
};

/// Margin ranking loss max(0, margin + s(pos) - s(neg)). When the hinge is
/// active and grad is non-null, appends d loss / d params to grad.
double hinge_loss(const EmbeddingModel& model, const Triplet& pos,
                  const Triplet& neg, double margin, Gradient* grad);

struct TrainResult {
  EmbeddingModel model;
  std::vector<double> epoch_loss; ///< mean hinge loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// SGD on the margin ranking loss with one filtered negative per positive.
/// Deterministic for a fixed cfg.seed. Throws ConfigError on an empty train
/// split or invalid config.
TrainResult train(const KnowledgeGraph& g, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Initial parameters used by train(); exposed for epochs == 0 runs and tests.
EmbeddingModel initialize_model(const KnowledgeGraph& g, const TrainConfig& cfg);

/// Binary little-endian model file, magic "EMRB".
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const EmbeddingModel& model, std::ostream& out);
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(std::istream& in);
EmbeddingModel load_model(const std::filesystem::path& path);
/// Loads and checks the model against g's dictionaries.
EmbeddingModel load_model(const std::filesystem::path& path,
                          const KnowledgeGraph& g);

/// One line per vector: "<entity|relation|normal>\t<id>\t<c0>\t<c1>...".
void export_tsv(const EmbeddingModel& model, std::ostream& out);

} // namespace kgrbr

#endif // KGRBR_EMBEDDING_HPP_
