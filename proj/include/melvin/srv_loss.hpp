// Copyright 2026 The melvin-surrogate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Hierarchical Poisson-Binomial likelihood for Schmidt rank vectors:
//   n ~ Poisson(lambda), m | n ~ Binomial(n, p), k | m ~ Binomial(m, q).
// The marginals of m and k are Poisson(p lambda) and Poisson(p q lambda), so
// the point predictions are their means (lambda, p lambda, p q lambda).

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "melvin/errors.hpp"
#include "melvin/labeler.hpp"

namespace melvin {

/// Offset of the positive link and clamp margin of the logistic links.
inline constexpr double kLinkEpsilon = 1e-6;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
Scalar logistic(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// ln(1 + e^x), overflow-free.
template <typename Scalar>
Scalar softplus(Scalar x) {
  return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

/// a * log(y), with the convention 0 * log(y) = 0 for any y.
template <typename Scalar>
Scalar xlogy(Scalar a, Scalar y) {
  return a == Scalar(0) ? Scalar(0) : a * std::log(y);
}

template <typename Scalar>
struct SrvParams {
  Scalar lambda{1};
  Scalar p{0.5};
  Scalar q{0.5};
  Vector3<Scalar> raw = Vector3<Scalar>::Zero();

  /// Maps unconstrained network outputs through the links.
  static SrvParams from_raw(const Vector3<Scalar>& raw) {
    const Scalar eps(kLinkEpsilon);
    SrvParams out;
    out.raw = raw;
    out.lambda = softplus(raw(0)) + eps;
    out.p = std::clamp(logistic(raw(1)), eps, Scalar(1) - eps);
    out.q = std::clamp(logistic(raw(2)), eps, Scalar(1) - eps);
    return out;
  }
};

template <typename Scalar>
struct SrvPrediction {
  Scalar n_hat{};
  Scalar m_hat{};
  Scalar k_hat{};

  Vector3<Scalar> vector() const { return {n_hat, m_hat, k_hat}; }
};

template <typename Scalar>
SrvPrediction<Scalar> predict(Scalar lambda, Scalar p, Scalar q) {
  return {lambda, p * lambda, p * q * lambda};
}

template <typename Scalar>
SrvPrediction<Scalar> predict(const SrvParams<Scalar>& params) {
  return predict(params.lambda, params.p, params.q);
}

/// n log(lambda) - lambda + m log p + (n-m) log(1-p) + k log q + (m-k) log(1-q).
/// Terms with a zero coefficient contribute exactly zero.
template <typename Scalar>
Scalar log_likelihood(Scalar lambda, Scalar p, Scalar q, const SrvLabel& y) {
  const Scalar n(y.n), m(y.m), k(y.k);
  return xlogy(n, lambda) - lambda + xlogy(m, p) + xlogy(n - m, Scalar(1) - p) + xlogy(k, q) +
         xlogy(m - k, Scalar(1) - q);
}

template <typename Scalar>
Scalar log_likelihood(const SrvParams<Scalar>& params, const SrvLabel& y) {
  return log_likelihood(params.lambda, params.p, params.q, y);
}

/// Gradient of log_likelihood with respect to (lambda, p, q).
template <typename Scalar>
Vector3<Scalar> log_likelihood_gradient(Scalar lambda, Scalar p, Scalar q, const SrvLabel& y) {
  const Scalar n(y.n), m(y.m), k(y.k);
  Vector3<Scalar> g;
  g(0) = n / lambda - Scalar(1);
  g(1) = (m == Scalar(0) ? Scalar(0) : m / p) - (n == m ? Scalar(0) : (n - m) / (Scalar(1) - p));
  g(2) = (k == Scalar(0) ? Scalar(0) : k / q) - (m == k ? Scalar(0) : (m - k) / (Scalar(1) - q));
  return g;
}

/// Gradient of log_likelihood with respect to the raw pre-link outputs. Zero
/// through a clamped logistic.
template <typename Scalar>
Vector3<Scalar> log_likelihood_raw_gradient(const SrvParams<Scalar>& params, const SrvLabel& y) {
  const Vector3<Scalar> g = log_likelihood_gradient(params.lambda, params.p, params.q, y);
  const Scalar eps(kLinkEpsilon);
  Vector3<Scalar> out;
  out(0) = g(0) * logistic(params.raw(0));
  const auto logistic_slope = [&](Scalar x) {
    const Scalar s = logistic(x);
    return (s < eps || s > Scalar(1) - eps) ? Scalar(0) : s * (Scalar(1) - s);
  };
  out(1) = g(1) * logistic_slope(params.raw(1));
  out(2) = g(2) * logistic_slope(params.raw(2));
  return out;
}

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline double log_binomial(int n, int k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

inline double poisson_pmf(double rate, int k) {
  if (k < 0) return 0.0;
  if (rate == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(k * std::log(rate) - rate - log_factorial(k));
}

/// Joint pmf of (n, m, k); zero when m > n or k > m.
inline double joint_pmf(double lambda, double p, double q, int n, int m, int k) {
  if (n < 0 || m < 0 || k < 0) throw StructuralError("joint_pmf takes non-negative counts");
  if (m > n || k > m) return 0.0;
  const double log_f = xlogy<double>(n, lambda) - lambda - log_factorial(n) + log_binomial(n, m) +
                       xlogy<double>(m, p) + xlogy<double>(n - m, 1.0 - p) + log_binomial(m, k) +
                       xlogy<double>(k, q) + xlogy<double>(m - k, 1.0 - q);
  return std::exp(log_f);
}

/// Marginal of m: Poisson(p lambda).
inline double marginal_pmf_m(double lambda, double p, int m) { return poisson_pmf(p * lambda, m); }

/// Marginal of k: Poisson(p q lambda).
inline double marginal_pmf_k(double lambda, double p, double q, int k) {
  return poisson_pmf(p * q * lambda, k);
}

}  // namespace melvin
