// Copyright 2026 storymine authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "storymine/common.hpp"

namespace storymine {

// Deterministic random source. The engine is std::mt19937_64, whose output
// stream is pinned by the C++ standard, and every mapping from raw 64-bit
// words to values is spelled out here rather than delegated to the standard
// distributions (which are implementation-defined). Given a seed, shuffles,
// dropout masks, and weight draws reproduce bit-for-bit on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1): top 53 bits of one engine word, scaled by 2^-53.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Uniform integer in [0, n) by rejection, so every value is equally likely.
  int uniform_int(int n) {
    if (n <= 0) throw NumericError("uniform_int: n must be positive");
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  // Fisher-Yates, iterating from the back.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Inverted-dropout mask: each slot is 0 with probability `rate`, otherwise
  // 1/(1-rate). rate == 0 yields all ones without consuming the stream.
  std::vector<double> dropout_mask(int n, double rate) {
    if (rate < 0.0 || rate >= 1.0)
      throw NumericError("dropout rate must be in [0, 1)");
    std::vector<double> mask(static_cast<size_t>(n), 1.0);
    if (rate == 0.0) return mask;
    const double keep = 1.0 / (1.0 - rate);
    for (auto& m : mask) m = uniform01() < rate ? 0.0 : keep;
    return mask;
  }

  std::vector<double> uniform_vector(int n, double lo, double hi) {
    std::vector<double> v(static_cast<size_t>(n));
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace storymine
