#pragma once

#include <cstddef>
#include <optional>

#include <json.hpp>

#include "edsgd/matrix.hpp"

namespace edsgd {

/// W = I - alpha * L_hat for one activation pattern.
struct MixingMatrix {
  Matrix weights;
  double alpha = 0.0;
  std::optional<std::size_t> pattern_round;
};

/// Throws NumericError if `lhat` is asymmetric or has a nonzero row sum
/// (beyond 1e-9, scaled by its norm) or alpha is not positive.
MixingMatrix mixing_matrix(const Matrix &lhat, double alpha);

/// rho(W - J), the largest |eigenvalue| off the consensus direction.
double deviation_norm(const Matrix &w);

/// lambda_max(I - 2 alpha E[L] + alpha^2 E[L^T L] - J).
double expected_objective(const Matrix &expected_l, const Matrix &expected_gram, double alpha);

struct SpectralReport {
  double alpha = 0.0;
  /// s* = expected_objective at alpha.
  double objective = 0.0;
  /// rho(I - alpha E[L] - J) for the expected mixing matrix.
  double deviation = 0.0;
  double spectral_gap = 0.0;
  bool convergent = false;
  double alpha_max = 0.0;
};

inline constexpr double kAlphaTolerance = 1e-6;

/// Minimises expected_objective over alpha in (0, alpha_max] by ternary
/// search (the objective is convex in alpha). alpha_max defaults to
/// 2 / lambda_max(E[L]). Throws NumericError when E[L] = 0.
SpectralReport optimize_alpha(const Matrix &expected_l, const Matrix &expected_gram,
                              std::optional<double> alpha_max = std::nullopt,
                              double tolerance = kAlphaTolerance);

void to_json(nlohmann::json &j, const SpectralReport &r);

} // namespace edsgd
