#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "edsgd/dataset.hpp"

namespace edsgd {

/// Flat parameter vector x in R^d; each model documents its layout.
using Params = std::vector<double>;

/// Differentiable classifier trained with softmax cross-entropy plus an L2
/// penalty (lambda / 2) * ||weights||^2 on weight matrices (not biases).
class Model {
public:
  virtual ~Model() = default;

  virtual std::size_t parameter_count() const = 0;
  virtual Params initial_params(std::uint64_t seed) const = 0;

  /// Mean cross-entropy over `batch` plus the penalty; writes the exact
  /// gradient into `grad` (resized). Throws DataError on an empty batch.
  double loss_grad(std::span<const double> params, const Dataset &data,
                   std::span<const std::size_t> batch, Params &grad) const;

  /// Penalty value; adds its gradient into `grad`.
  virtual double regularizer(std::span<const double> params, std::span<double> grad) const = 0;

  /// Loss over every sample (no gradient).
  double loss(std::span<const double> params, const Dataset &data) const;
  double accuracy(std::span<const double> params, const Dataset &data) const;
  int predict(std::span<const double> params, std::span<const double> x) const;

protected:
  /// Writes class logits for one sample.
  virtual void logits(std::span<const double> params, std::span<const double> x,
                      std::span<double> out) const = 0;
  /// Accumulates the gradient of the per-sample loss given dloss/dlogits.
  virtual void backprop(std::span<const double> params, std::span<const double> x,
                        std::span<const double> dlogits, std::span<double> grad) const = 0;
  virtual std::size_t class_count() const = 0;
};

/// Multinomial logistic regression. Layout: weights (classes x dim,
/// row-major) followed by biases (classes). Zero initialisation.
class LogisticModel final : public Model {
public:
  LogisticModel(std::size_t classes, std::size_t dim, double l2 = 0.0)
      : classes_(classes), dim_(dim), l2_(l2) {}

  std::size_t parameter_count() const override { return classes_ * (dim_ + 1); }
  Params initial_params(std::uint64_t) const override { return Params(parameter_count(), 0.0); }
  double regularizer(std::span<const double> params, std::span<double> grad) const override;

protected:
  void logits(std::span<const double> params, std::span<const double> x,
              std::span<double> out) const override;
  void backprop(std::span<const double> params, std::span<const double> x,
                std::span<const double> dlogits, std::span<double> grad) const override;
  std::size_t class_count() const override { return classes_; }

private:
  std::size_t classes_;
  std::size_t dim_;
  double l2_;
};

/// One hidden tanh layer. Layout: W1 (hidden x dim), b1 (hidden),
/// W2 (classes x hidden), b2 (classes). Seeded Glorot-uniform weights.
class MlpModel final : public Model {
public:
  MlpModel(std::size_t classes, std::size_t dim, std::size_t hidden, double l2 = 0.0)
      : classes_(classes), dim_(dim), hidden_(hidden), l2_(l2) {}

  std::size_t parameter_count() const override {
    return hidden_ * (dim_ + 1) + classes_ * (hidden_ + 1);
  }
  Params initial_params(std::uint64_t seed) const override;
  double regularizer(std::span<const double> params, std::span<double> grad) const override;

protected:
  void logits(std::span<const double> params, std::span<const double> x,
              std::span<double> out) const override;
  void backprop(std::span<const double> params, std::span<const double> x,
                std::span<const double> dlogits, std::span<double> grad) const override;
  std::size_t class_count() const override { return classes_; }

private:
  void hidden_activations(std::span<const double> params, std::span<const double> x,
                          std::span<double> h) const;

  std::size_t classes_;
  std::size_t dim_;
  std::size_t hidden_;
  double l2_;
};

enum class ModelKind { Logistic, Mlp };

ModelKind parse_model_kind(std::string_view text);
std::string_view to_string(ModelKind kind);

std::unique_ptr<Model> make_model(ModelKind kind, std::size_t classes, std::size_t dim,
                                  double l2, std::size_t hidden = 32);

} // namespace edsgd
