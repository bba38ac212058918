// Copyright 2026 The Vocalscope Authors
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

#include "vocalscope/resampler.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace vocalscope {

std::vector<double> resample(std::span<const double> input, double from_rate_hz,
                             double to_rate_hz, const ResamplerOptions& options) {
  if (!(from_rate_hz > 0.0) || !(to_rate_hz > 0.0)) {
    throw std::invalid_argument("sample rates must be positive");
  }
  if (from_rate_hz == to_rate_hz) return {input.begin(), input.end()};

  const double ratio = to_rate_hz / from_rate_hz;
  // Cutoff in cycles per input sample.
  const double cutoff = 0.5 * options.rolloff * std::min(1.0, ratio);
  const double reach = options.half_width / (2.0 * cutoff);
  // Kaiser window tabulated over |r| in [0, 1].
  constexpr std::size_t kTable = 4096;
  std::vector<double> kaiser(kTable + 2);
  const double norm = std::cyl_bessel_i(0.0, options.kaiser_beta);
  for (std::size_t i = 0; i <= kTable; ++i) {
    const double r = static_cast<double>(i) / kTable;
    kaiser[i] = std::cyl_bessel_i(0.0, options.kaiser_beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
  }
  kaiser[kTable + 1] = 0.0;
  const auto out_len = static_cast<std::size_t>(std::llround(input.size() * ratio));
  const auto in_len = static_cast<long long>(input.size());

  std::vector<double> out(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) / ratio;
    const auto first = static_cast<long long>(std::ceil(t - reach));
    const auto last = static_cast<long long>(std::floor(t + reach));
    double acc = 0.0;
    for (long long k = std::max(first, 0LL); k <= std::min(last, in_len - 1); ++k) {
      const double d = t - static_cast<double>(k);
      const double r = d / reach;
      if (std::abs(r) >= 1.0) continue;
      const double arg = std::numbers::pi * 2.0 * cutoff * d;
      const double sinc = arg == 0.0 ? 1.0 : std::sin(arg) / arg;
      const double pos = std::abs(r) * kTable;
      const auto j = static_cast<std::size_t>(pos);
      const double window = kaiser[j] + (pos - static_cast<double>(j)) * (kaiser[j + 1] - kaiser[j]);
      acc += input[static_cast<std::size_t>(k)] * 2.0 * cutoff * sinc * window;
    }
    out[m] = acc;
  }
  return out;
}

}  // namespace vocalscope
