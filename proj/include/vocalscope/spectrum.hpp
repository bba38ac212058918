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

// Short-window power spectrum on a 1/24-octave grid.

#include <memory>
#include <span>
#include <vector>

namespace vocalscope {

struct SpectrumSpec {
  int fft_size = 2048;
  double f_lo_hz = 50.0;
  double f_hi_hz = 8000.0;
  int per_octave = 24;
  double sample_rate_hz = 44100.0;
  double floor_db = -120.0;
};

/// Hann-windowed FFT of the most recent fft_size samples. A full-scale sine
/// centered on an FFT bin reads 0 dB. Bands without an FFT bin take the
/// power interpolated at their center frequency.
class SpectrumAnalyzer {
 public:
  explicit SpectrumAnalyzer(const SpectrumSpec& spec = {});
  ~SpectrumAnalyzer();
  SpectrumAnalyzer(const SpectrumAnalyzer&) = delete;
  SpectrumAnalyzer& operator=(const SpectrumAnalyzer&) = delete;

  /// Band centers in Hz (geometric mean of the band edges).
  const std::vector<double>& band_centers() const { return centers_; }
  std::size_t band_count() const { return centers_.size(); }
  const SpectrumSpec& spec() const { return spec_; }

  /// frame.size() must equal fft_size.
  std::vector<double> power_db(std::span<const double> frame);
  /// Power per FFT bin (0 .. fft_size/2), same scaling.
  std::vector<double> bin_power(std::span<const double> frame);

 private:
  struct Plan;
  SpectrumSpec spec_;
  std::vector<double> window_;
  std::vector<double> edges_;
  std::vector<double> centers_;
  std::unique_ptr<Plan> plan_;
};

}  // namespace vocalscope
