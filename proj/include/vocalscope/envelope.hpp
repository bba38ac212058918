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

// Cosine-series envelopes and analytic band-pass impulse responses.
//
// Every envelope here shares the same support T = K * c_mag / f_c (K = 5),
// so comparison windows are bandwidth-matched to the six-term series.

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vocalscope {

/// Number of cosine terms beyond the constant one in the six-term series.
inline constexpr int kSixTermOrder = 5;

/// Published coefficients a_0..a_5 of the six-term envelope.
inline constexpr std::array<double, 6> kSixTermCoefficients = {
    0.2624710164, 0.4265335164, 0.2250165621,
    0.0726831633, 0.0125124215, 0.0007833203};

/// Default bandwidth/carrier stretch.
inline constexpr double kDefaultStretch = 1.05;

enum class EnvelopeKind { six_term, hann, blackman, nuttall, kaiser };

std::string_view to_string(EnvelopeKind kind);

/// Parses "six_term" (also "six-term", "sixterm"), "hann", "blackman",
/// "nuttall", "kaiser". Throws std::invalid_argument on anything else.
EnvelopeKind parse_envelope_kind(std::string_view name);

/// Envelope family plus its one free parameter (Kaiser beta).
struct WindowSpec {
  EnvelopeKind kind = EnvelopeKind::six_term;
  double kaiser_beta = 12.0;

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

/// Human-readable name including the Kaiser beta, e.g. "kaiser(12)".
std::string describe(const WindowSpec& spec);

struct CosineSeriesEnvelope {
  std::vector<double> coefficients;
  int terms = kSixTermOrder;
  double carrier_hz = 0.0;
  double stretch = kDefaultStretch;

  double support_s() const { return terms * stretch / carrier_hz; }
};

CosineSeriesEnvelope six_term_envelope(double carrier_hz,
                                       double stretch = kDefaultStretch);

/// sum_k a_k cos(2 pi k f_c t / (K c_mag)). Defined for all t; callers
/// truncate to |t| <= T/2.
double envelope_value(double t, const CosineSeriesEnvelope& env);

/// Support of every envelope family for a carrier, in seconds.
double support_seconds(double carrier_hz, double stretch);

/// 2 * floor(T f_s / 2) + 1 samples on a symmetric grid through t = 0.
std::size_t support_length(double carrier_hz, double stretch,
                           double sample_rate_hz);

/// Value of the chosen window family at time t for support T (peak 1 at 0,
/// even). Returns 0 outside |t| <= T/2.
double window_value(const WindowSpec& spec, double t, double support_s);

/// Cosine-series coefficients for the series-type families. Kaiser is not a
/// cosine series and throws std::invalid_argument.
std::vector<double> cosine_coefficients(EnvelopeKind kind);

struct AnalyticImpulseResponse {
  std::vector<std::complex<double>> samples;
  double sample_rate_hz = 0.0;
  double center_hz = 0.0;

  std::size_t length() const { return samples.size(); }
  std::size_t center_index() const { return samples.size() / 2; }
  /// Time of sample i relative to the center tap.
  double time_of(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(center_index())) /
           sample_rate_hz;
  }
};

/// w(t) = w_e(t) exp(j 2 pi f_c t) sampled on the symmetric grid.
/// Throws std::invalid_argument unless 0 < f_c < f_s / 2 and c_mag > 0.
AnalyticImpulseResponse analytic_impulse_response(
    double carrier_hz, double stretch, double sample_rate_hz,
    const WindowSpec& spec = {});

/// Real window samples on the same grid as analytic_impulse_response.
std::vector<double> comparison_window(const WindowSpec& spec,
                                      double carrier_hz, double stretch,
                                      double sample_rate_hz);

}  // namespace vocalscope
