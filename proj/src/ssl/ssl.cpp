#include "videokit/ssl/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace videokit::ssl {

namespace {

void check_matrix(const TensorD& z, const char* what) {
  if (z.rank() != 2) throw ShapeError(std::string(what) + " must be B x D, got " + shape_to_string(z.shape()));
}

double row_dot(const TensorD& a, std::int64_t i, const TensorD& b, std::int64_t j) {
  const auto D = a.dim(1);
  const double* x = a.data() + i * D;
  const double* y = b.data() + j * D;
  double s = 0.0;
  for (std::int64_t k = 0; k < D; ++k) s += x[k] * y[k];
  return s;
}

const TensorD& checked(const EmbeddingBatch& e, const char* what) {
  check_matrix(e.z, what);
  check_normalized(e.z);
  return e.z;
}

void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("temperature must be > 0");
}

}  // namespace

EmbeddingBatch l2_normalize(const TensorD& z) {
  check_matrix(z, "embeddings");
  EmbeddingBatch out{z, true};
  const auto B = z.dim(0);
  const auto D = z.dim(1);
  for (std::int64_t i = 0; i < B; ++i) {
    const double n = std::sqrt(row_dot(z, i, z, i));
    if (n == 0.0) continue;
    for (std::int64_t k = 0; k < D; ++k) out.z.data()[i * D + k] /= n;
  }
  return out;
}

void check_normalized(const TensorD& z) {
  check_matrix(z, "embeddings");
  for (std::int64_t i = 0; i < z.dim(0); ++i) {
    const double n = std::sqrt(row_dot(z, i, z, i));
    if (std::abs(n - 1.0) > kNormTolerance) {
      throw NormError("embedding row " + std::to_string(i) + " has L2 norm " + std::to_string(n));
    }
  }
}

double masked_cross_entropy(const TensorD& logits, const std::vector<std::int64_t>& positive,
                            const std::vector<bool>& mask) {
  check_matrix(logits, "logits");
  const auto R = logits.dim(0);
  const auto C = logits.dim(1);
  if (static_cast<std::int64_t>(positive.size()) != R) throw ShapeError("one positive per row required");
  if (!mask.empty() && static_cast<std::int64_t>(mask.size()) != R * C) throw ShapeError("mask size mismatch");
  double total = 0.0;
  for (std::int64_t r = 0; r < R; ++r) {
    const double* row = logits.data() + r * C;
    const auto masked = [&](std::int64_t c) { return !mask.empty() && mask[static_cast<std::size_t>(r * C + c)]; };
    double hi = -std::numeric_limits<double>::infinity();
    for (std::int64_t c = 0; c < C; ++c) {
      if (!masked(c)) hi = std::max(hi, row[c]);
    }
    double sum = 0.0;
    for (std::int64_t c = 0; c < C; ++c) {
      if (!masked(c)) sum += std::exp(row[c] - hi);
    }
    const auto p = positive[static_cast<std::size_t>(r)];
    if (p < 0 || p >= C || masked(p)) throw ConfigError("positive column is masked or out of range");
    total += std::log(sum) + hi - row[p];
  }
  return total / static_cast<double>(R);
}

double info_nce_loss(const EmbeddingBatch& e1, const EmbeddingBatch& e2, double temperature) {
  check_temperature(temperature);
  const auto& z1 = checked(e1, "z1");
  const auto& z2 = checked(e2, "z2");
  if (z1.shape() != z2.shape()) throw ShapeError("z1 and z2 must have the same shape");
  const auto B = z1.dim(0);
  if (B < 2) throw ConfigError("info_nce_loss needs a batch of at least 2");
  const auto D = z1.dim(1);

  // Stack [z1; z2] so anchor i pairs with (i + B) mod 2B.
  TensorD z({2 * B, D});
  std::copy(z1.values().begin(), z1.values().end(), z.data());
  std::copy(z2.values().begin(), z2.values().end(), z.data() + B * D);
  const auto N = 2 * B;
  TensorD logits({N, N});
  std::vector<bool> mask(static_cast<std::size_t>(N * N), false);
  std::vector<std::int64_t> positive(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    for (std::int64_t j = 0; j < N; ++j) logits.data()[i * N + j] = row_dot(z, i, z, j) / temperature;
    mask[static_cast<std::size_t>(i * N + i)] = true;
    positive[static_cast<std::size_t>(i)] = (i + B) % N;
  }
  return masked_cross_entropy(logits, positive, mask);
}

double moco_info_nce_loss(const EmbeddingBatch& eq, const EmbeddingBatch& ek, const TensorD& negatives,
                          double temperature) {
  check_temperature(temperature);
  const auto& q = checked(eq, "query");
  const auto& k = checked(ek, "key");
  if (q.shape() != k.shape()) throw ShapeError("query and key must have the same shape");
  const auto B = q.dim(0);
  const auto D = q.dim(1);
  std::int64_t K = 0;
  if (!negatives.empty()) {
    check_matrix(negatives, "negatives");
    if (negatives.dim(1) != D) throw ShapeError("negatives width must match the embeddings");
    K = negatives.dim(0);
  }
  TensorD logits({B, 1 + K});
  for (std::int64_t i = 0; i < B; ++i) {
    logits.data()[i * (1 + K)] = row_dot(q, i, k, i) / temperature;
    for (std::int64_t j = 0; j < K; ++j) logits.data()[i * (1 + K) + 1 + j] = row_dot(q, i, negatives, j) / temperature;
  }
  return masked_cross_entropy(logits, std::vector<std::int64_t>(static_cast<std::size_t>(B), 0));
}

double byol_loss(const TensorD& p, const TensorD& z) {
  check_matrix(p, "predicted");
  if (p.shape() != z.shape()) throw ShapeError("predicted and target must have the same shape");
  const auto B = p.dim(0);
  if (B < 1) throw ConfigError("byol_loss needs a non-empty batch");
  double total = 0.0;
  for (std::int64_t i = 0; i < B; ++i) {
    const double denom = std::sqrt(row_dot(p, i, p, i) * row_dot(z, i, z, i));
    const double cos = denom > 0.0 ? row_dot(p, i, z, i) / denom : 0.0;
    total += 2.0 - 2.0 * cos;
  }
  return total / static_cast<double>(B);
}

template <typename T>
void momentum_update(const std::map<std::string, BasicTensor<T>>& online,
                     std::map<std::string, BasicTensor<T>>& target, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("momentum must lie in [0, 1]");
  if (online.size() != target.size()) throw KeyError("online and target parameter sets differ in size");
  for (const auto& [name, src] : online) {
    auto it = target.find(name);
    if (it == target.end()) throw KeyError("target has no parameter '" + name + "'");
    if (it->second.shape() != src.shape()) throw ShapeError("shape mismatch for '" + name + "'");
  }
  for (const auto& [name, src] : online) {
    auto& dst = target.at(name);
    for (std::int64_t i = 0; i < src.numel(); ++i) {
      auto& t = dst[static_cast<std::size_t>(i)];
      t = static_cast<T>(m * static_cast<double>(t) + (1.0 - m) * static_cast<double>(src[static_cast<std::size_t>(i)]));
    }
  }
}

template void momentum_update<float>(const std::map<std::string, Tensor>&, std::map<std::string, Tensor>&, double);
template void momentum_update<double>(const std::map<std::string, TensorD>&, std::map<std::string, TensorD>&, double);

void momentum_update(const models::Module& online, models::Module& target, double m) {
  std::map<std::string, Tensor> src;
  for (const auto& [name, p] : models::named_parameters(online)) {
    if (p->learnable) src.emplace(name, p->value);
  }
  std::map<std::string, Tensor> dst;
  for (const auto& [name, p] : models::named_parameters(target)) {
    if (p->learnable) dst.emplace(name, p->value);
  }
  momentum_update(src, dst, m);
  for (auto& [name, p] : models::named_parameters_mut(target)) {
    if (p->learnable) p->value = std::move(dst.at(name));
  }
}

FeatureQueue::FeatureQueue(std::int64_t capacity, std::int64_t dim) : capacity_(capacity), dim_(dim) {
  if (capacity < 1 || dim < 1) throw ConfigError("queue capacity and width must be >= 1");
  buffer_ = TensorD({capacity, dim});
}

FeatureQueue& FeatureQueue::enqueue(const TensorD& batch) {
  check_matrix(batch, "batch");
  if (batch.dim(1) != dim_) throw ShapeError("batch width does not match the queue");
  const auto B = batch.dim(0);
  if (B > capacity_) throw ConfigError("batch of " + std::to_string(B) + " exceeds queue capacity " + std::to_string(capacity_));
  for (std::int64_t i = 0; i < B; ++i) {
    std::copy_n(batch.data() + i * dim_, dim_, buffer_.data() + head_ * dim_);
    head_ = (head_ + 1) % capacity_;
  }
  filled_ = std::min(capacity_, filled_ + B);
  return *this;
}

TensorD FeatureQueue::snapshot() const {
  TensorD out({filled_, dim_});
  const auto start = (head_ - filled_ + capacity_) % capacity_;
  for (std::int64_t i = 0; i < filled_; ++i) {
    std::copy_n(buffer_.data() + ((start + i) % capacity_) * dim_, dim_, out.data() + i * dim_);
  }
  return out;
}

FeatureQueue queue_enqueue(FeatureQueue q, const TensorD& batch) {
  q.enqueue(batch);
  return q;
}

}  // namespace videokit::ssl
