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

#include <doctest.h>

#include <cmath>
#include <complex>

#include "support.hpp"
#include "vocalscope/spectrum.hpp"

using namespace vocalscope;

TEST_SUITE("spectrum") {

TEST_CASE("band layout") {
  SpectrumAnalyzer s;
  CHECK(s.band_count() == 176);
  CHECK(s.band_centers().front() == doctest::Approx(50.0 * std::exp2(1.0 / 48.0)));
  CHECK(s.band_centers().back() < 8000.0);
  CHECK_THROWS_AS(SpectrumAnalyzer(SpectrumSpec{.fft_size = 1000, .f_lo_hz = 50.0, .f_hi_hz = 30000.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(s.power_db(std::vector<double>(100, 0.0)), std::invalid_argument);
}

TEST_CASE("bin power matches a direct DFT") {
  SpectrumAnalyzer s;
  const auto x = testing::white_noise(2048.0 / testing::kFs, 0.2, 11);
  REQUIRE(x.size() == 2048);
  const auto p = s.bin_power(x);
  const double n = 2048.0;
  double gain = 0.0;
  std::vector<double> w(2048);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    gain += w[i];
  }
  for (std::size_t k : {0u, 3u, 100u, 511u, 1024u}) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += w[i] * x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i) / n);
    }
    CHECK(p[k] == doctest::Approx(std::norm(acc * 2.0 / gain)).epsilon(1e-9));
  }
}

TEST_CASE("full-scale sine on a bin reads 0 dB in its band") {
  SpectrumAnalyzer s;
  const double bin_hz = testing::kFs / 2048.0;
  const double f = 40.0 * bin_hz;  // ~861 Hz
  const auto x = testing::sine(f, 2048.0 / testing::kFs, 1.0, 0.4);
  const auto db = s.power_db(x);
  std::size_t band = 0;
  for (std::size_t b = 0; b < s.band_count(); ++b) {
    if (db[b] > db[band]) band = b;
  }
  CHECK(std::abs(std::log2(s.band_centers()[band] / f)) < 1.0 / 24.0);
  // Hann leakage of an on-bin sine: power 1 at the bin, 1/4 at each neighbor.
  const double lo = 50.0 * std::exp2(static_cast<double>(band) / 24.0);
  const double hi = lo * std::exp2(1.0 / 24.0);
  const auto first = static_cast<int>(std::ceil(lo / bin_hz));
  const auto last = static_cast<int>(std::ceil(hi / bin_hz));
  double expected = 0.0;
  for (int k = first; k < last; ++k) expected += k == 40 ? 1.0 : (std::abs(k - 40) == 1 ? 0.25 : 0.0);
  expected /= last - first;
  CHECK(db[band] == doctest::Approx(10.0 * std::log10(expected)).epsilon(1e-6));
  CHECK(db[band] > -3.1);
  const auto silent = s.power_db(std::vector<double>(2048, 0.0));
  for (double v : silent) CHECK(v == -120.0);
}

}
