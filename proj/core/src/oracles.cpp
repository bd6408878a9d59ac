/*
 * Copyright 2026 The Aegis Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "aegis/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aegis/error.hpp"

namespace aegis {

DistanceSet::DistanceSet(std::size_t n, unsigned bit_width)
    : n_(n),
      bit_width_(bit_width),
      d2_(n * (n > 0 ? n - 1 : 0) / 2, 0),
      present_(d2_.size(), false) {}

std::size_t DistanceSet::Index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  if (j >= n_ || i == j) {
    throw Error(ErrorCode::kDimensionMismatch,
                "distance index (" + std::to_string(i) + ", " +
                    std::to_string(j) + ") out of range for n=" +
                    std::to_string(n_));
  }
  // Row-major upper triangle.
  return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
}

void DistanceSet::Set(std::size_t i, std::size_t j, std::uint64_t d2) {
  const std::size_t k = Index(i, j);
  d2_[k] = Ring(bit_width_).Reduce(d2);
  present_[k] = true;
}

std::uint64_t DistanceSet::At(std::size_t i, std::size_t j) const {
  if (i == j && i < n_) return 0;
  const std::size_t k = Index(i, j);
  if (!present_[k]) {
    throw Error(ErrorCode::kDimensionMismatch,
                "distance (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") missing");
  }
  return d2_[k];
}

std::int64_t DistanceSet::SignedAt(std::size_t i, std::size_t j) const {
  return Ring(bit_width_).ToSigned(At(i, j));
}

bool DistanceSet::Complete() const {
  return std::all_of(present_.begin(), present_.end(), [](bool b) { return b; });
}

DistanceSet DistanceSet::Scaled(std::uint64_t factor) const {
  DistanceSet out = *this;
  const Ring ring(bit_width_);
  for (auto& v : out.d2_) v = ring.Mul(v, factor);
  return out;
}

DistanceSet PlainDistances(std::span<const RingVector> xs) {
  const unsigned bits = xs.empty() ? 64 : xs.front().bit_width;
  const Ring ring(bits);
  DistanceSet d(xs.size(), bits);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      std::uint64_t acc = 0;
      for (std::size_t k = 0; k < xs[i].size(); ++k) {
        const std::uint64_t delta = ring.Sub(xs[i].elems[k], xs[j].elems[k]);
        acc = ring.Add(acc, ring.Mul(delta, delta));
      }
      d.Set(i, j, acc);
    }
  }
  return d;
}

std::vector<std::size_t> WeightVector::Selected() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != 0) out.push_back(i);
  }
  return out;
}

std::vector<__int128> MultiKrumScores(const DistanceSet& d, std::size_t f) {
  const std::size_t n = d.n();
  if (n < f + 3) {
    throw Error(ErrorCode::kTooFewWorkers,
                "Multi-Krum needs n >= f + 3 (n=" + std::to_string(n) +
                    ", f=" + std::to_string(f) + ")");
  }
  const std::size_t neighbours = n - f - 2;
  std::vector<__int128> scores(n, 0);
  std::vector<std::int64_t> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(d.SignedAt(i, j));
    }
    std::partial_sort(row.begin(), row.begin() + neighbours, row.end());
    for (std::size_t k = 0; k < neighbours; ++k) scores[i] += row[k];
  }
  return scores;
}

WeightVector MultiKrum(const DistanceSet& d, std::size_t f, std::size_t m) {
  const std::vector<__int128> scores = MultiKrumScores(d, f);
  const std::size_t n = d.n();
  if (m < 1 || m > n - f) {
    throw Error(ErrorCode::kInvalidConfig,
                "Multi-Krum needs 1 <= m <= n - f (m=" + std::to_string(m) +
                    ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] < scores[b];
                   });
  WeightVector w{std::vector<std::uint64_t>(n, 0)};
  for (std::size_t k = 0; k < m; ++k) w.p[order[k]] = 1;
  return w;
}

ByzSgdParams ByzSgdParams::FromReal(double t_a, double t_b, double nu,
                                    const RingConfig& cfg) {
  const int f = static_cast<int>(cfg.frac_bits);
  auto to_u64 = [](long double v) {
    return static_cast<std::uint64_t>(std::llround(v));
  };
  const long double tb = std::ldexp(static_cast<long double>(t_b), f);
  const long double nv = std::ldexp(static_cast<long double>(nu), f);
  return {to_u64(std::ldexp(static_cast<long double>(t_a), 2 * f)),
          to_u64(tb * tb), to_u64(nv * nv)};
}

namespace {

// Lowest index i with |{j : d(j, i) <= radius_sq}| > m / 2.
std::size_t MajorityCandidate(const DistanceSet& d, __int128 radius_sq,
                              const char* what) {
  const std::size_t m = d.n();
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t close = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (static_cast<__int128>(d.SignedAt(j, i)) <= radius_sq) ++close;
    }
    if (2 * close > m) return i;
  }
  throw Error(ErrorCode::kNoMedianCandidate,
              std::string("no worker has a strict majority within the ") +
                  what + " radius");
}

}  // namespace

WeightVector ByzantineSgdSelect(std::span<const std::uint64_t> a,
                                const DistanceSet& dist_b,
                                const DistanceSet& dist_g,
                                const ByzSgdParams& params,
                                std::span<const std::size_t> good_set,
                                unsigned bit_width) {
  const std::size_t m = a.size();
  if (m == 0 || good_set.empty()) {
    throw Error(ErrorCode::kTooFewWorkers, "ByzantineSGD needs workers");
  }
  if (dist_b.n() != m || dist_g.n() != m) {
    throw Error(ErrorCode::kDimensionMismatch,
                "distance sets do not cover every worker");
  }
  const Ring ring(bit_width);
  std::vector<std::int64_t> sorted;
  sorted.reserve(m);
  for (std::uint64_t v : a) sorted.push_back(ring.ToSigned(v));
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t a_med = sorted[(m - 1) / 2];

  const std::size_t b_med =
      MajorityCandidate(dist_b, static_cast<__int128>(params.t_b_sq), "T_B");
  const std::size_t g_med = MajorityCandidate(
      dist_g, 4 * static_cast<__int128>(params.nu_sq), "2nu");

  WeightVector w{std::vector<std::uint64_t>(m, 0)};
  for (std::size_t i : good_set) {
    if (i >= m) {
      throw Error(ErrorCode::kDimensionMismatch, "good-set index out of range");
    }
    __int128 dev = static_cast<__int128>(ring.ToSigned(a[i])) - a_med;
    if (dev < 0) dev = -dev;
    const bool a_ok = dev <= static_cast<__int128>(params.t_a);
    const bool b_ok = static_cast<__int128>(dist_b.SignedAt(i, b_med)) <=
                      static_cast<__int128>(params.t_b_sq);
    const bool g_ok = static_cast<__int128>(dist_g.SignedAt(i, g_med)) <=
                      16 * static_cast<__int128>(params.nu_sq);
    if (a_ok && b_ok && g_ok) w.p[i] = 1;
  }
  return w;
}

WeightVector MeanWeights(std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::kTooFewWorkers, "mean over zero workers");
  }
  return WeightVector{std::vector<std::uint64_t>(n, 1)};
}

const char* RuleName(const AggregationRule& rule) {
  switch (rule.index()) {
    case 0: return "mean";
    case 1: return "multikrum";
    default: return "byzsgd";
  }
}

bool IsRobust(const AggregationRule& rule) {
  return !std::holds_alternative<MeanRule>(rule);
}

namespace {

RingVector WeightedSum(std::span<const RingVector> xs, const WeightVector& w) {
  const Ring ring = xs.front().ring();
  RingVector z = RingVector::Zeros(xs.front().bit_width, xs.front().scale,
                                   xs.front().size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t k = 0; k < z.size(); ++k) {
      z.elems[k] = ring.Add(z.elems[k], ring.Mul(w.p[i], xs[i].elems[k]));
    }
  }
  return z;
}

std::uint64_t InnerProduct(const RingVector& x, const RingVector& y) {
  const Ring ring = x.ring();
  std::uint64_t acc = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc = ring.Add(acc, ring.Mul(x.elems[k], y.elems[k]));
  }
  return acc;
}

}  // namespace

ReferenceResult ReferenceRobustAggregate(std::span<const RingVector> xs,
                                         const AggregationRule& rule,
                                         ByzSgdPlainState* state,
                                         const RingVector* model_delta) {
  if (xs.empty()) {
    throw Error(ErrorCode::kTooFewWorkers, "no inputs to aggregate");
  }
  const std::size_t n = xs.size();
  ReferenceResult out;
  if (std::holds_alternative<MeanRule>(rule)) {
    out.p = MeanWeights(n);
  } else if (const auto* mk = std::get_if<MultiKrumRule>(&rule)) {
    out.p = MultiKrum(PlainDistances(xs), mk->f, mk->m);
  } else {
    const auto& params = std::get<ByzSgdRule>(rule).params;
    if (state == nullptr || model_delta == nullptr) {
      throw Error(ErrorCode::kInvalidConfig,
                  "ByzantineSGD reference needs state and model delta");
    }
    const unsigned bits = xs.front().bit_width;
    const Ring ring(bits);
    if (state->a_old.empty()) {
      state->a_old.assign(n, 0);
      state->b_old.assign(n, RingVector::Zeros(bits, 1, xs.front().size()));
    }
    std::vector<std::uint64_t> a(n);
    std::vector<RingVector> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = ring.Add(InnerProduct(xs[i], *model_delta), state->a_old[i]);
      b[i] = Add(xs[i], state->b_old[i]);
    }
    std::vector<std::size_t> good(n);
    std::iota(good.begin(), good.end(), std::size_t{0});
    try {
      out.p = ByzantineSgdSelect(a, PlainDistances(b), PlainDistances(xs),
                                 params, good, bits);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoMedianCandidate) throw;
      throw Error(ErrorCode::kOracleAbort, e.what());
    }
    if (out.p.Count() < 2) {
      throw Error(ErrorCode::kOracleAbort,
                  "ByzantineSGD kept fewer than two workers");
    }
    state->a_old = std::move(a);
    state->b_old = std::move(b);
  }
  out.z = WeightedSum(xs, out.p);
  return out;
}

}  // namespace aegis
