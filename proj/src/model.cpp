#include "edsgd/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "edsgd/error.hpp"
#include "edsgd/rng.hpp"

namespace edsgd {

namespace {

// Softmax in place; returns log-sum-exp.
double softmax(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double &v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double &v : z)
    v /= sum;
  return top + std::log(sum);
}

} // namespace

double Model::loss_grad(std::span<const double> params, const Dataset &data,
                        std::span<const std::size_t> batch, Params &grad) const {
  if (batch.empty())
    throw DataError("loss_grad: empty batch");
  grad.assign(parameter_count(), 0.0);
  std::vector<double> z(class_count());
  double total = 0.0;
  for (std::size_t id : batch) {
    const auto x = data.sample(id);
    logits(params, x, z);
    const double y_logit = z[static_cast<std::size_t>(data.labels[id])];
    const double lse = softmax(z);
    total += lse - y_logit;
    z[static_cast<std::size_t>(data.labels[id])] -= 1.0;
    backprop(params, x, z, grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double &g : grad)
    g *= inv;
  return total * inv + regularizer(params, grad);
}

double Model::loss(std::span<const double> params, const Dataset &data) const {
  if (data.size() == 0)
    throw DataError("loss: empty dataset");
  std::vector<double> z(class_count());
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    logits(params, data.sample(i), z);
    const double y_logit = z[static_cast<std::size_t>(data.labels[i])];
    total += softmax(z) - y_logit;
  }
  Params scratch(parameter_count(), 0.0);
  return total / static_cast<double>(data.size()) + regularizer(params, scratch);
}

int Model::predict(std::span<const double> params, std::span<const double> x) const {
  std::vector<double> z(class_count());
  logits(params, x, z);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double Model::accuracy(std::span<const double> params, const Dataset &data) const {
  if (data.size() == 0)
    return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    hits += predict(params, data.sample(i)) == data.labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

void LogisticModel::logits(std::span<const double> params, std::span<const double> x,
                           std::span<double> out) const {
  const double *bias = params.data() + classes_ * dim_;
  for (std::size_t c = 0; c < classes_; ++c) {
    const double *w = params.data() + c * dim_;
    double s = bias[c];
    for (std::size_t d = 0; d < dim_; ++d)
      s += w[d] * x[d];
    out[c] = s;
  }
}

void LogisticModel::backprop(std::span<const double>, std::span<const double> x,
                             std::span<const double> dlogits, std::span<double> grad) const {
  double *gbias = grad.data() + classes_ * dim_;
  for (std::size_t c = 0; c < classes_; ++c) {
    double *gw = grad.data() + c * dim_;
    for (std::size_t d = 0; d < dim_; ++d)
      gw[d] += dlogits[c] * x[d];
    gbias[c] += dlogits[c];
  }
}

double LogisticModel::regularizer(std::span<const double> params, std::span<double> grad) const {
  if (l2_ == 0.0)
    return 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < classes_ * dim_; ++k) {
    sq += params[k] * params[k];
    grad[k] += l2_ * params[k];
  }
  return 0.5 * l2_ * sq;
}

Params MlpModel::initial_params(std::uint64_t seed) const {
  Params p(parameter_count(), 0.0);
  Rng rng(seed, Stream::Init);
  const double r1 = std::sqrt(6.0 / static_cast<double>(dim_ + hidden_));
  const double r2 = std::sqrt(6.0 / static_cast<double>(hidden_ + classes_));
  for (std::size_t k = 0; k < hidden_ * dim_; ++k)
    p[k] = r1 * (2.0 * rng.uniform() - 1.0);
  const std::size_t w2 = hidden_ * (dim_ + 1);
  for (std::size_t k = 0; k < classes_ * hidden_; ++k)
    p[w2 + k] = r2 * (2.0 * rng.uniform() - 1.0);
  return p;
}

void MlpModel::hidden_activations(std::span<const double> params, std::span<const double> x,
                                  std::span<double> h) const {
  const double *b1 = params.data() + hidden_ * dim_;
  for (std::size_t u = 0; u < hidden_; ++u) {
    const double *w = params.data() + u * dim_;
    double s = b1[u];
    for (std::size_t d = 0; d < dim_; ++d)
      s += w[d] * x[d];
    h[u] = std::tanh(s);
  }
}

void MlpModel::logits(std::span<const double> params, std::span<const double> x,
                      std::span<double> out) const {
  std::vector<double> h(hidden_);
  hidden_activations(params, x, h);
  const double *w2 = params.data() + hidden_ * (dim_ + 1);
  const double *b2 = w2 + classes_ * hidden_;
  for (std::size_t c = 0; c < classes_; ++c) {
    double s = b2[c];
    for (std::size_t u = 0; u < hidden_; ++u)
      s += w2[c * hidden_ + u] * h[u];
    out[c] = s;
  }
}

void MlpModel::backprop(std::span<const double> params, std::span<const double> x,
                        std::span<const double> dlogits, std::span<double> grad) const {
  std::vector<double> h(hidden_);
  hidden_activations(params, x, h);
  const std::size_t off_w2 = hidden_ * (dim_ + 1);
  const std::size_t off_b2 = off_w2 + classes_ * hidden_;
  const double *w2 = params.data() + off_w2;

  std::vector<double> dh(hidden_, 0.0);
  for (std::size_t c = 0; c < classes_; ++c) {
    for (std::size_t u = 0; u < hidden_; ++u) {
      grad[off_w2 + c * hidden_ + u] += dlogits[c] * h[u];
      dh[u] += dlogits[c] * w2[c * hidden_ + u];
    }
    grad[off_b2 + c] += dlogits[c];
  }
  const std::size_t off_b1 = hidden_ * dim_;
  for (std::size_t u = 0; u < hidden_; ++u) {
    const double dpre = dh[u] * (1.0 - h[u] * h[u]);
    for (std::size_t d = 0; d < dim_; ++d)
      grad[u * dim_ + d] += dpre * x[d];
    grad[off_b1 + u] += dpre;
  }
}

double MlpModel::regularizer(std::span<const double> params, std::span<double> grad) const {
  if (l2_ == 0.0)
    return 0.0;
  double sq = 0.0;
  auto penalise = [&](std::size_t begin, std::size_t count) {
    for (std::size_t k = begin; k < begin + count; ++k) {
      sq += params[k] * params[k];
      grad[k] += l2_ * params[k];
    }
  };
  penalise(0, hidden_ * dim_);
  penalise(hidden_ * (dim_ + 1), classes_ * hidden_);
  return 0.5 * l2_ * sq;
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "logistic")
    return ModelKind::Logistic;
  if (text == "mlp")
    return ModelKind::Mlp;
  throw ConfigError(fmt::format("unknown model '{}' (expected logistic|mlp)", text));
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Logistic ? "logistic" : "mlp"; }

std::unique_ptr<Model> make_model(ModelKind kind, std::size_t classes, std::size_t dim, double l2,
                                  std::size_t hidden) {
  if (kind == ModelKind::Logistic)
    return std::make_unique<LogisticModel>(classes, dim, l2);
  return std::make_unique<MlpModel>(classes, dim, hidden, l2);
}

} // namespace edsgd
