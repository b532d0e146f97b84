// Copyright 2026 The catchdec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Probability-distribution primitives over a token vocabulary.
//
// Logits and distributions are dense Eigen column vectors. All routines are
// templated on the scalar through Eigen::MatrixBase, so they accept any dense
// expression (`softmax(alpha * z - v)` evaluates lazily into one temporary).
// The rest of the library instantiates them with double. Logarithms are
// natural, so divergences are in nats and the Jensen-Shannon divergence lies in
// [0, ln 2].

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <type_traits>
#include <variant>

#include "catchdec/errors.hpp"

namespace catchdec {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using LogitVector = Vector<double>;
using ProbDist = Vector<double>;
using TokenId = std::int64_t;

inline constexpr double kLn2 = std::numbers::ln2;

namespace detail {

inline void require_length(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                      " vs " + std::to_string(b) + ")");
  }
}

}  // namespace detail

/// Throws DomainError naming the first non-finite entry.
template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& values, const char* what = "logits") {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values(i))) {
      throw DomainError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

/// Numerically stable softmax (max-subtracted). Rejects empty or non-finite
/// input.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> x = logits;
  if (x.size() == 0) throw DomainError("softmax: empty logit vector");
  require_finite(x);
  Vector<Scalar> e = (x.array() - x.maxCoeff()).exp().matrix();
  return e / e.sum();
}

/// Checks that `dist` is a probability vector within `tol` of unit mass.
template <typename Derived>
void require_distribution(const Eigen::MatrixBase<Derived>& dist, double tol = 1e-9) {
  if (dist.size() == 0) throw DomainError("distribution is empty");
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    const auto v = dist(i);
    if (!std::isfinite(v) || v < 0 || v > 1) {
      throw DomainError("distribution: invalid probability at index " + std::to_string(i));
    }
  }
  if (std::abs(dist.sum() - 1) > tol) throw DomainError("distribution does not sum to 1");
}

/// KL(p || q) in nats with the 0 * log(0 / q) = 0 convention. A positive p(i)
/// against q(i) = 0 is an absolute-continuity violation and throws.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  detail::require_length(p.size(), q.size(), "kl_divergence");
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0) continue;
    if (q(i) <= 0) {
      throw DomainError("kl_divergence: q is zero where p is positive at index " +
                        std::to_string(i));
    }
    sum += p(i) * std::log(p(i) / q(i));
  }
  return sum < 0 ? Scalar(0) : sum;
}

/// Jensen-Shannon divergence: KL(p||m)/2 + KL(q||m)/2 with m = (p + q)/2.
/// Symmetric, total, and bounded by ln 2.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar js_divergence(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  detail::require_length(p.size(), q.size(), "js_divergence");
  // m dominates both p and q, so the positive-mass terms never divide by zero.
  const auto m = ((p.array() + q.array()) / Scalar(2)).eval();
  const auto half_kl = [&m](const auto& a) {
    return (a > Scalar(0)).select(a * (a / m).log(), Scalar(0)).sum();
  };
  const Scalar jsd = (half_kl(p.array()) + half_kl(q.array())) / Scalar(2);
  if (jsd < 0) return Scalar(0);
  return jsd > Scalar(kLn2) ? Scalar(kLn2) : jsd;
}

/// Lowest-index maximum.
template <typename Derived>
TokenId argmax(const Eigen::MatrixBase<Derived>& values) {
  if (values.size() == 0) throw DomainError("argmax: empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return static_cast<TokenId>(best);
}

struct Greedy {};

struct Categorical {
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

using SamplingStrategy = std::variant<Greedy, Categorical>;

/// Draws tokens from distributions. Categorical draws consume one 64-bit word
/// of a mt19937_64 stream per call, so a sampler replays exactly given the same
/// seed and call sequence.
class TokenSampler {
 public:
  explicit TokenSampler(SamplingStrategy strategy) : strategy_(strategy) {
    if (const auto* c = std::get_if<Categorical>(&strategy_)) {
      if (!(c->temperature > 0) || !std::isfinite(c->temperature)) {
        throw DomainError("categorical sampling needs temperature > 0 (use greedy instead)");
      }
      engine_.seed(c->seed);
    }
  }

  const SamplingStrategy& strategy() const { return strategy_; }

  template <typename Derived>
  TokenId operator()(const Eigen::MatrixBase<Derived>& dist) {
    require_distribution(dist);
    const auto* c = std::get_if<Categorical>(&strategy_);
    if (c == nullptr) return argmax(dist);

    // p^(1/T), renormalised; zero-probability tokens stay unreachable.
    const ProbDist p = dist.template cast<double>();
    ProbDist w = p;
    if (c->temperature != 1.0) {
      const double peak = std::log(p.maxCoeff());
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        w(i) = p(i) > 0 ? std::exp((std::log(p(i)) - peak) / c->temperature) : 0.0;
      }
    }
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53 * w.sum();
    double acc = 0;
    TokenId last_positive = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w(i) <= 0) continue;
      last_positive = static_cast<TokenId>(i);
      acc += w(i);
      if (u < acc) return last_positive;
    }
    return last_positive;
  }

 private:
  SamplingStrategy strategy_;
  std::mt19937_64 engine_;
};

/// One-shot sampling. Categorical draws start from a freshly seeded stream, so
/// repeated calls with the same arguments agree.
template <typename Derived>
TokenId sample_token(const Eigen::MatrixBase<Derived>& dist, const SamplingStrategy& strategy) {
  TokenSampler sampler(strategy);
  return sampler(dist);
}

}  // namespace catchdec
