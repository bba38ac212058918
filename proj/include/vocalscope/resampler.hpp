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

#pragma once

#include <span>
#include <vector>

namespace vocalscope {

struct ResamplerOptions {
  /// Zero crossings of the sinc kernel on each side.
  int half_width = 32;
  double kaiser_beta = 8.6;
  /// Passband edge relative to the lower Nyquist frequency.
  double rolloff = 0.95;
};

/// Kaiser-windowed sinc interpolation. Output length is
/// round(input length * to / from).
std::vector<double> resample(std::span<const double> input, double from_rate_hz,
                             double to_rate_hz, const ResamplerOptions& options = {});

}  // namespace vocalscope
