// Copyright 2026 The boundedplay Authors.
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

#ifndef BOUNDEDPLAY_RNG_HPP_
#define BOUNDEDPLAY_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace boundedplay {

// Stable 64-bit hash of a (master seed, session, match, slot) tuple. The
// value depends only on its inputs, never on execution order or platform.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view session,
                          std::string_view match, std::string_view slot);

/// Named, seeded source of uniform draws in [0, 1). Agents never own one;
/// the orchestrator hands them draws.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_RNG_HPP_
