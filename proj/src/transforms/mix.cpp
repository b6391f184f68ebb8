#include "videokit/transforms/mix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace videokit::transforms {

namespace {

void check_batch(const Tensor& batch, const Tensor& labels) {
  if (batch.rank() != 5) throw ShapeError("mixing expects a (B, C, T, H, W) batch");
  if (labels.rank() != 2 || labels.dim(0) != batch.dim(0)) throw ShapeError("labels must be (B, K)");
  if (batch.dim(0) < 2) throw ConfigError("mixing needs a batch of at least 2");
}

void check_permutation(const std::vector<std::int64_t>& perm, std::int64_t b) {
  if (static_cast<std::int64_t>(perm.size()) != b) throw ConfigError("permutation length must equal the batch size");
  std::vector<bool> seen(static_cast<std::size_t>(b), false);
  for (auto p : perm) {
    if (p < 0 || p >= b || seen[static_cast<std::size_t>(p)]) throw ConfigError("invalid permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }
}

Tensor mix_labels(const Tensor& labels, double lambda, const std::vector<std::int64_t>& perm) {
  Tensor out(labels.shape());
  const auto K = labels.dim(1);
  for (std::int64_t i = 0; i < labels.dim(0); ++i) {
    const float* a = labels.data() + i * K;
    const float* b = labels.data() + perm[static_cast<std::size_t>(i)] * K;
    for (std::int64_t k = 0; k < K; ++k) {
      out.data()[i * K + k] = static_cast<float>(lambda * a[k] + (1.0 - lambda) * b[k]);
    }
  }
  return out;
}

}  // namespace

Tensor one_hot(std::span<const std::int64_t> labels, std::int64_t num_classes, float smoothing) {
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (smoothing < 0.0f || smoothing >= 1.0f) throw ConfigError("smoothing must lie in [0, 1)");
  const auto B = static_cast<std::int64_t>(labels.size());
  const float off = smoothing / static_cast<float>(num_classes);
  Tensor out({B, num_classes}, off);
  for (std::int64_t i = 0; i < B; ++i) {
    const auto l = labels[static_cast<std::size_t>(i)];
    if (l < 0 || l >= num_classes) throw ConfigError("label " + std::to_string(l) + " out of range");
    out.data()[i * num_classes + l] += 1.0f - smoothing;
  }
  return out;
}

double sample_beta(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw ConfigError("beta parameter must be > 0");
  std::gamma_distribution<double> g(alpha, 1.0);
  const double x = g(rng);
  const double y = g(rng);
  return x + y > 0.0 ? x / (x + y) : 0.5;
}

std::vector<double> sample_dirichlet(double alpha, std::int64_t k, Rng& rng) {
  if (!(alpha > 0.0)) throw ConfigError("dirichlet parameter must be > 0");
  if (k < 1) throw ConfigError("dirichlet needs at least one component");
  std::gamma_distribution<double> g(alpha, 1.0);
  std::vector<double> w(static_cast<std::size_t>(k));
  for (auto& x : w) x = g(rng);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x = s > 0.0 ? x / s : 1.0 / static_cast<double>(k);
  return w;
}

std::vector<std::int64_t> sample_permutation(std::int64_t b, Rng& rng) {
  std::vector<std::int64_t> p(static_cast<std::size_t>(b));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

MixResult mixup_with(const Tensor& batch, const Tensor& labels, double lambda,
                     const std::vector<std::int64_t>& perm) {
  check_batch(batch, labels);
  check_permutation(perm, batch.dim(0));
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  MixResult r;
  r.lambda = lambda;
  r.permutation = perm;
  r.batch = Tensor(batch.shape());
  const auto per = batch.numel() / batch.dim(0);
  for (std::int64_t i = 0; i < batch.dim(0); ++i) {
    const float* a = batch.data() + i * per;
    const float* b = batch.data() + perm[static_cast<std::size_t>(i)] * per;
    float* o = r.batch.data() + i * per;
    for (std::int64_t k = 0; k < per; ++k) o[k] = static_cast<float>(lambda * a[k] + (1.0 - lambda) * b[k]);
  }
  r.labels = mix_labels(labels, lambda, perm);
  return r;
}

MixResult mixup(const Tensor& batch, const Tensor& labels, double alpha, Rng& rng) {
  check_batch(batch, labels);
  const double lambda = sample_beta(alpha, rng);
  return mixup_with(batch, labels, lambda, sample_permutation(batch.dim(0), rng));
}

CutBox sample_cut_box(std::int64_t h, std::int64_t w, double lambda, Rng& rng) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  const double ratio = std::sqrt(1.0 - lambda);
  const auto ch = static_cast<std::int64_t>(static_cast<double>(h) * ratio);
  const auto cw = static_cast<std::int64_t>(static_cast<double>(w) * ratio);
  const auto cy = std::uniform_int_distribution<std::int64_t>(0, h - 1)(rng);
  const auto cx = std::uniform_int_distribution<std::int64_t>(0, w - 1)(rng);
  const auto y0 = std::clamp<std::int64_t>(cy - ch / 2, 0, h);
  const auto y1 = std::clamp<std::int64_t>(cy + ch / 2, 0, h);
  const auto x0 = std::clamp<std::int64_t>(cx - cw / 2, 0, w);
  const auto x1 = std::clamp<std::int64_t>(cx + cw / 2, 0, w);
  return CutBox{y0, x0, y1 - y0, x1 - x0};
}

MixResult cutmix_with(const Tensor& batch, const Tensor& labels, const CutBox& box,
                      const std::vector<std::int64_t>& perm) {
  check_batch(batch, labels);
  check_permutation(perm, batch.dim(0));
  const auto d = clip_dims(batch);
  if (box.top < 0 || box.left < 0 || box.h < 0 || box.w < 0 || box.top + box.h > d.h || box.left + box.w > d.w) {
    throw ConfigError("cut box outside the frame");
  }
  MixResult r;
  r.permutation = perm;
  r.box = box;
  r.lambda = 1.0 - static_cast<double>(box.area()) / static_cast<double>(d.h * d.w);
  r.batch = batch;
  const auto per = batch.numel() / d.batch;
  const auto plane = d.h * d.w;
  for (std::int64_t i = 0; i < d.batch; ++i) {
    const float* src = batch.data() + perm[static_cast<std::size_t>(i)] * per;
    float* dst = r.batch.data() + i * per;
    for (std::int64_t ct = 0; ct < d.c * d.t; ++ct) {
      for (std::int64_t y = box.top; y < box.top + box.h; ++y) {
        const auto off = ct * plane + y * d.w + box.left;
        std::copy_n(src + off, box.w, dst + off);
      }
    }
  }
  r.labels = mix_labels(labels, r.lambda, perm);
  return r;
}

MixResult cutmix(const Tensor& batch, const Tensor& labels, double alpha, Rng& rng) {
  check_batch(batch, labels);
  const auto d = clip_dims(batch);
  const double lambda = sample_beta(alpha, rng);
  const auto box = sample_cut_box(d.h, d.w, lambda, rng);
  return cutmix_with(batch, labels, box, sample_permutation(d.batch, rng));
}

}  // namespace videokit::transforms
