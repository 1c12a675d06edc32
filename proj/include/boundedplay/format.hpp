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

#ifndef BOUNDEDPLAY_FORMAT_HPP_
#define BOUNDEDPLAY_FORMAT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace boundedplay {

// Fixed-point rendering used by every report and log; never prints "-0".
std::string fixed(double value, int places);

// Integral payoffs print without decimals, others with six places.
std::string format_points(double value);

inline constexpr int kProbabilityPlaces = 6;
inline constexpr int kStatisticPlaces = 9;

std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_FORMAT_HPP_
