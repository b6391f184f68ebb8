#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "videokit/core/tensor.hpp"
#include "videokit/models/module.hpp"

// Per-step math for contrastive and bootstrap self-supervised objectives.
// Everything runs in double precision.
namespace videokit::ssl {

// Rows of `z` (B x D) are embeddings; `normalized` claims unit L2 rows.
struct EmbeddingBatch {
  TensorD z;
  bool normalized = false;
};

inline constexpr double kNormTolerance = 1e-5;

// Returns a copy with unit L2 rows (zero rows stay zero).
EmbeddingBatch l2_normalize(const TensorD& z);

// Throws NormError when a row is off unit norm by more than kNormTolerance.
void check_normalized(const TensorD& z);

// Mean cross-entropy of `logits` rows (rows x cols) against the column index
// in `positive`; entries where `mask` is true are excluded from the softmax.
double masked_cross_entropy(const TensorD& logits, const std::vector<std::int64_t>& positive,
                            const std::vector<bool>& mask = {});

// Symmetric in-batch contrastive loss: 2B anchors, each with one positive
// and 2B - 2 negatives, over cosine similarities divided by temperature.
double info_nce_loss(const EmbeddingBatch& z1, const EmbeddingBatch& z2, double temperature);

// One-directional queue variant: query i's positive is key i, negatives are
// the rows of `negatives` (K x D, may be empty).
double moco_info_nce_loss(const EmbeddingBatch& query, const EmbeddingBatch& key,
                          const TensorD& negatives, double temperature);

// mean_i (2 - 2 cos(p_i, z_i)). Inputs need not be normalized.
double byol_loss(const TensorD& predicted, const TensorD& target);

// target <- m * target + (1 - m) * online for every named array.
// Throws KeyError on mismatched names, ShapeError on mismatched shapes,
// ConfigError when m is outside [0, 1].
template <typename T>
void momentum_update(const std::map<std::string, BasicTensor<T>>& online,
                     std::map<std::string, BasicTensor<T>>& target, double m);

// Same rule over the learnable parameters of two modules of equal structure.
void momentum_update(const models::Module& online, models::Module& target, double m);

// Fixed-capacity FIFO ring of K rows of width D.
class FeatureQueue {
 public:
  FeatureQueue(std::int64_t capacity, std::int64_t dim);

  // Overwrites the oldest rows. Throws ConfigError when B > K and ShapeError
  // on a width mismatch.
  FeatureQueue& enqueue(const TensorD& batch);

  std::int64_t capacity() const noexcept { return capacity_; }
  std::int64_t dim() const noexcept { return dim_; }
  std::int64_t filled() const noexcept { return filled_; }
  std::int64_t head() const noexcept { return head_; }

  // Copy of the filled rows, oldest first.
  TensorD snapshot() const;

 private:
  std::int64_t capacity_;
  std::int64_t dim_;
  std::int64_t head_ = 0;  // next row to write
  std::int64_t filled_ = 0;
  TensorD buffer_;
};

FeatureQueue queue_enqueue(FeatureQueue q, const TensorD& batch);

}  // namespace videokit::ssl
