#include "edsgd/mixing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "edsgd/error.hpp"

namespace edsgd {

MixingMatrix mixing_matrix(const Matrix &lhat, double alpha) {
  if (!(alpha > 0.0))
    throw NumericError(fmt::format("mixing parameter alpha must be positive (got {})", alpha));
  const double tol = 1e-9 * std::max(1.0, lhat.frobenius_norm());
  if (lhat.asymmetry() > tol)
    throw NumericError("mixing_matrix: Laplacian is not symmetric");
  if (lhat.max_abs_row_sum() > tol)
    throw NumericError("mixing_matrix: Laplacian has a nonzero row sum");
  return MixingMatrix{Matrix::identity(lhat.order()) - lhat * alpha, alpha, std::nullopt};
}

double deviation_norm(const Matrix &w) {
  const auto eig = symmetric_eigenvalues(w - Matrix::averaging(w.order()));
  if (eig.empty())
    return 0.0;
  return std::max(std::abs(eig.front()), std::abs(eig.back()));
}

double expected_objective(const Matrix &expected_l, const Matrix &expected_gram, double alpha) {
  if (expected_l.order() != expected_gram.order())
    throw NumericError("expected_objective: dimension mismatch");
  const std::size_t n = expected_l.order();
  Matrix m = Matrix::identity(n) - Matrix::averaging(n);
  m -= expected_l * (2.0 * alpha);
  m += expected_gram * (alpha * alpha);
  return symmetric_eigenvalues(m).back();
}

SpectralReport optimize_alpha(const Matrix &expected_l, const Matrix &expected_gram,
                              std::optional<double> alpha_max, double tolerance) {
  const auto eig = symmetric_eigenvalues(expected_l);
  const double lmax = eig.empty() ? 0.0 : eig.back();
  if (!(lmax > 1e-12))
    throw NumericError("optimize_alpha: expected Laplacian is zero, no communication to optimise");
  const double hi_limit = alpha_max.value_or(2.0 / lmax);
  if (!(hi_limit > 0.0))
    throw NumericError("optimize_alpha: search interval is empty");

  auto f = [&](double a) { return expected_objective(expected_l, expected_gram, a); };
  double lo = 0.0, hi = hi_limit;
  // Stop well below the requested alpha tolerance.
  const double stop = std::min(tolerance, 1e-6) * 1e-3;
  while (hi - lo > stop) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2))
      hi = m2;
    else
      lo = m1;
  }

  SpectralReport r;
  r.alpha = 0.5 * (lo + hi);
  r.objective = f(r.alpha);
  r.alpha_max = hi_limit;
  const std::size_t n = expected_l.order();
  r.deviation = deviation_norm(Matrix::identity(n) - expected_l * r.alpha);
  r.spectral_gap = 1.0 - r.deviation;
  r.convergent = r.objective < 1.0;
  return r;
}

void to_json(nlohmann::json &j, const SpectralReport &r) {
  j = nlohmann::json{{"alpha", r.alpha},
                     {"objective", r.objective},
                     {"deviation", r.deviation},
                     {"spectral_gap", r.spectral_gap},
                     {"convergent", r.convergent},
                     {"alpha_max", r.alpha_max}};
}

} // namespace edsgd
