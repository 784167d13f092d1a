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

#include "kgrbr/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "kgrbr/error.hpp"
#include "kgrbr/seed.hpp"

namespace kgrbr {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void normalize(std::span<double> v)
{
  const double n = vector_norm(v, 2);
  if (n > 0)
    for (auto& x : v)
      x /= n;
}

/// Residual v = proj(h) + r - proj(t) of a triplet; proj is the identity for
/// TransE and the hyperplane projection for TransH.
void residual(const EmbeddingModel& m, const Triplet& x, std::span<double> out)
{
  const auto h = m.entity(x.h);
  const auto t = m.entity(x.t);
  const auto r = m.relation_vector(x.r);
  const std::size_t k = m.dim();
  if (m.kind() == ModelKind::TransE) {
    for (std::size_t i = 0; i < k; ++i)
      out[i] = h[i] + r[i] - t[i];
    return;
  }
  const auto w = m.normal(x.r);
  double we = 0;
  for (std::size_t i = 0; i < k; ++i)
    we += w[i] * (h[i] - t[i]);
  for (std::size_t i = 0; i < k; ++i)
    out[i] = h[i] - t[i] - we * w[i] + r[i];
}

/// d||v|| / dv.
void norm_gradient(std::span<const double> v, int order, std::span<double> out)
{
  if (order == 1) {
    for (std::size_t i = 0; i < v.size(); ++i)
      out[i] = v[i] > 0 ? 1.0 : (v[i] < 0 ? -1.0 : 0.0);
    return;
  }
  const double n = vector_norm(v, 2);
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = n > 0 ? v[i] / n : 0.0;
}

/// Adds sign * d s(x) / d params to grad.
void accumulate_score_gradient(const EmbeddingModel& m, const Triplet& x,
                               double sign, Gradient& grad)
{
  const std::size_t k = m.dim();
  std::vector<double> v(k), u(k);
  residual(m, x, v);
  norm_gradient(v, m.norm_order(), u);

  const bool transh = m.kind() == ModelKind::TransH;
  const std::size_t first = grad.add(Gradient::Block::Entity, x.h.value);
  grad.add(Gradient::Block::Entity, x.t.value);
  grad.add(Gradient::Block::Relation, x.r.value);
  if (transh)
    grad.add(Gradient::Block::Normal, x.r.value);
  auto gh = grad.values(first);
  auto gt = grad.values(first + 1);
  auto gr = grad.values(first + 2);

  if (!transh) {
    for (std::size_t i = 0; i < k; ++i) {
      gh[i] = sign * u[i];
      gt[i] = -sign * u[i];
      gr[i] = sign * u[i];
    }
    return;
  }

  const auto w = m.normal(x.r);
  const auto h = m.entity(x.h);
  const auto t = m.entity(x.t);
  double wu = dot(w, u);
  double we = 0;
  for (std::size_t i = 0; i < k; ++i)
    we += w[i] * (h[i] - t[i]);
  auto gw = grad.values(first + 3);
  for (std::size_t i = 0; i < k; ++i) {
    const double proj = u[i] - wu * w[i];
    gh[i] = sign * proj;
    gt[i] = -sign * proj;
    gr[i] = sign * u[i];
    gw[i] = -sign * ((h[i] - t[i]) * wu + we * u[i]);
  }
}

} // namespace

ModelKind parse_model_kind(std::string_view name)
{
  if (name == "transe")
    return ModelKind::TransE;
  if (name == "transh")
    return ModelKind::TransH;
  throw ConfigError("unknown model kind: " + std::string(name));
}

std::string_view to_string(ModelKind kind)
{
  return kind == ModelKind::TransE ? "transe" : "transh";
}

NegativeSampling parse_negative_sampling(std::string_view name)
{
  if (name == "uniform")
    return NegativeSampling::Uniform;
  if (name == "bernoulli")
    return NegativeSampling::Bernoulli;
  throw ConfigError("unknown negative sampling scheme: " + std::string(name));
}

void TrainConfig::validate() const
{
  if (dim < 1)
    throw ConfigError("embedding dimension must be >= 1");
  if (!(learning_rate > 0))
    throw ConfigError("learning rate must be positive");
  if (!(margin > 0))
    throw ConfigError("margin must be positive");
  if (batch_size < 1)
    throw ConfigError("batch size must be >= 1");
  if (norm_order != 1 && norm_order != 2)
    throw ConfigError("norm order must be 1 or 2");
}

double vector_norm(std::span<const double> v, int order)
{
  double acc = 0;
  if (order == 1) {
    for (const double x : v)
      acc += std::abs(x);
    return acc;
  }
  for (const double x : v)
    acc += x * x;
  return std::sqrt(acc);
}

EmbeddingModel::EmbeddingModel(ModelKind kind, std::size_t dim,
                               std::size_t n_entities, std::size_t n_relations,
                               int norm_order)
: kind_(kind), dim_(dim), n_entities_(n_entities), n_relations_(n_relations),
  norm_order_(norm_order), entities_(n_entities * dim, 0.0),
  relations_(n_relations * dim, 0.0)
{
  if (dim < 1)
    throw ConfigError("embedding dimension must be >= 1");
  if (norm_order != 1 && norm_order != 2)
    throw ConfigError("norm order must be 1 or 2");
  if (kind == ModelKind::TransH)
    normals_.assign(n_relations * dim, 0.0);
}

std::span<const double> EmbeddingModel::normal(RelationId r) const
{
  if (kind_ != ModelKind::TransH)
    throw ConfigError("hyperplane normals exist only for TransH");
  return row(normals_, r.value);
}

std::span<double> EmbeddingModel::normal(RelationId r)
{
  if (kind_ != ModelKind::TransH)
    throw ConfigError("hyperplane normals exist only for TransH");
  return row(normals_, r.value);
}

double EmbeddingModel::score_raw(EntityId h, RelationId r, EntityId t) const
{
  double buf[64];
  std::vector<double> heap;
  std::span<double> v;
  if (dim_ <= 64) {
    v = std::span<double>(buf, dim_);
  } else {
    heap.resize(dim_);
    v = heap;
  }
  residual(*this, Triplet{h, r, t}, v);
  return vector_norm(v, norm_order_);
}

double EmbeddingModel::triplet_score(const KnowledgeGraph& g, const Triplet& x) const
{
  if (g.contains(x))
    return 1.0;
  return score_raw(x) / static_cast<double>(dim_) + 1.0;
}

void EmbeddingModel::check_compatible(const KnowledgeGraph& g) const
{
  if (n_entities_ != g.num_entities() || n_relations_ != g.num_relations())
    throw DimensionError(
        "model covers " + std::to_string(n_entities_) + " entities / "
        + std::to_string(n_relations_) + " relations, graph has "
        + std::to_string(g.num_entities()) + " / "
        + std::to_string(g.num_relations()));
}

std::size_t Gradient::add(Block block, std::uint32_t row)
{
  slots_.push_back({block, row});
  values_.resize(values_.size() + dim_, 0.0);
  return slots_.size() - 1;
}

void Gradient::clear()
{
  slots_.clear();
  values_.clear();
}

void Gradient::apply(EmbeddingModel& model, double scale) const
{
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    std::span<double> dst;
    switch (slots_[i].block) {
    case Block::Entity: dst = model.entity(EntityId{slots_[i].row}); break;
    case Block::Relation: dst = model.relation_vector(RelationId{slots_[i].row}); break;
    case Block::Normal: dst = model.normal(RelationId{slots_[i].row}); break;
    }
    const auto g = values(i);
    for (std::size_t j = 0; j < dim_; ++j)
      dst[j] += scale * g[j];
  }
}

double hinge_loss(const EmbeddingModel& model, const Triplet& pos,
                  const Triplet& neg, double margin, Gradient* grad)
{
  const double loss = margin + model.score_raw(pos) - model.score_raw(neg);
  if (loss <= 0)
    return 0.0;
  if (grad) {
    accumulate_score_gradient(model, pos, +1.0, *grad);
    accumulate_score_gradient(model, neg, -1.0, *grad);
  }
  return loss;
}

EmbeddingModel initialize_model(const KnowledgeGraph& g, const TrainConfig& cfg)
{
  cfg.validate();
  EmbeddingModel m(cfg.kind, cfg.dim, g.num_entities(), g.num_relations(),
                   cfg.norm_order);
  std::mt19937_64 rng(derive_seed(cfg.seed, "embedding.init"));
  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  std::uniform_real_distribution<double> unif(-bound, bound);

  for (auto& x : m.entity_data())
    x = unif(rng);
  for (auto& x : m.relation_data())
    x = unif(rng);
  if (cfg.kind == ModelKind::TransH)
    for (auto& x : m.normal_data())
      x = unif(rng);

  for (std::uint32_t r = 0; r < m.num_relations(); ++r) {
    if (cfg.kind == ModelKind::TransE)
      normalize(m.relation_vector(RelationId{r}));
    else
      normalize(m.normal(RelationId{r}));
  }
  for (std::uint32_t e = 0; e < m.num_entities(); ++e)
    normalize(m.entity(EntityId{e}));
  return m;
}

namespace {

/// Per-epoch constraint projection: unit entity vectors for TransE; for TransH
/// entity norms capped at 1, unit normals, translations orthogonal to normals.
void apply_constraints(EmbeddingModel& m)
{
  for (std::uint32_t e = 0; e < m.num_entities(); ++e) {
    auto v = m.entity(EntityId{e});
    if (m.kind() == ModelKind::TransE) {
      normalize(v);
    } else {
      const double n = vector_norm(v, 2);
      if (n > 1.0)
        for (auto& x : v)
          x /= n;
    }
  }
  if (m.kind() != ModelKind::TransH)
    return;
  for (std::uint32_t r = 0; r < m.num_relations(); ++r) {
    auto w = m.normal(RelationId{r});
    normalize(w);
    auto d = m.relation_vector(RelationId{r});
    const double wd = dot(w, d);
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] -= wd * w[i];
  }
}

struct BernoulliStats {
  std::vector<double> head_prob; ///< P(corrupt head) per relation
};

BernoulliStats bernoulli_stats(const KnowledgeGraph& g)
{
  const std::size_t nr = g.num_relations();
  std::vector<std::unordered_map<std::uint32_t, std::size_t>> tails_per_head(nr),
      heads_per_tail(nr);
  for (const auto& x : g.train_unique()) {
    ++tails_per_head[x.r.value][x.h.value];
    ++heads_per_tail[x.r.value][x.t.value];
  }
  BernoulliStats s;
  s.head_prob.assign(nr, 0.5);
  for (std::size_t r = 0; r < nr; ++r) {
    if (tails_per_head[r].empty())
      continue;
    auto mean = [](const auto& m) {
      double sum = 0;
      for (const auto& [k, n] : m)
        sum += static_cast<double>(n);
      return sum / static_cast<double>(m.size());
    };
    const double tph = mean(tails_per_head[r]);
    const double hpt = mean(heads_per_tail[r]);
    s.head_prob[r] = tph / (tph + hpt);
  }
  return s;
}

} // namespace

TrainResult train(const KnowledgeGraph& g, const TrainConfig& cfg,
                  const EpochCallback& on_epoch)
{
  cfg.validate();
  if (g.train().empty())
    throw ConfigError("cannot train on an empty train split");

  TrainResult result{initialize_model(g, cfg), {}};
  EmbeddingModel& m = result.model;
  result.epoch_loss.reserve(cfg.epochs);

  const auto& positives = g.train_unique();
  const auto n_entities = static_cast<std::uint32_t>(g.num_entities());
  std::mt19937_64 rng(derive_seed(cfg.seed, "embedding.sampling"));
  std::uniform_int_distribution<std::uint32_t> pick_entity(0, n_entities - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const BernoulliStats bern = cfg.neg_sampling == NegativeSampling::Bernoulli
                                  ? bernoulli_stats(g)
                                  : BernoulliStats{};

  std::vector<std::size_t> order(positives.size());
  Gradient grad(cfg.dim);
  constexpr int kMaxCorruptionTries = 64;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      grad.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const Triplet& pos = positives[order[i]];
        const double p_head = cfg.neg_sampling == NegativeSampling::Bernoulli
                                  ? bern.head_prob[pos.r.value]
                                  : 0.5;
        const bool corrupt_head = coin(rng) < p_head;
        Triplet neg = pos;
        bool found = false;
        for (int attempt = 0; attempt < kMaxCorruptionTries && !found; ++attempt) {
          neg = pos;
          (corrupt_head ? neg.h : neg.t) = EntityId{pick_entity(rng)};
          found = neg != pos && !g.contains(neg);
        }
        if (!found)
          continue;
        loss_sum += hinge_loss(m, pos, neg, cfg.margin, &grad);
      }
      grad.apply(m, -cfg.learning_rate);
      if (m.kind() == ModelKind::TransH) {
        for (std::size_t i = 0; i < grad.size(); ++i)
          if (grad.block(i) == Gradient::Block::Normal)
            normalize(m.normal(RelationId{grad.row(i)}));
      }
    }
    apply_constraints(m);

    const double mean = loss_sum / static_cast<double>(positives.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch)
      on_epoch(epoch, mean);
  }
  return result;
}

} // namespace kgrbr
