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

#include "vocalscope/envelope.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace vocalscope {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Nuttall's minimum-sidelobe four-term set; leaves a small endpoint residual.
constexpr std::array<double, 4> kNuttallCoefficients = {
    0.3635819, 0.4891775, 0.1365995, 0.0106411};

double cosine_series(const std::vector<double>& a, double phase) {
  // Smallest terms first.
  double sum = 0.0;
  for (std::size_t k = a.size(); k-- > 0;) {
    sum += a[k] * std::cos(static_cast<double>(k) * phase);
  }
  return sum;
}

void check_design_args(double carrier_hz, double stretch,
                       double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("sample rate must be positive");
  }
  if (!(carrier_hz > 0.0) || !(carrier_hz < sample_rate_hz / 2.0)) {
    throw std::invalid_argument(fmt::format(
        "carrier {} Hz must lie in (0, {}) Hz", carrier_hz,
        sample_rate_hz / 2.0));
  }
  if (!(stretch > 0.0)) {
    throw std::invalid_argument("stretch factor c_mag must be positive");
  }
}

}  // namespace

std::string_view to_string(EnvelopeKind kind) {
  switch (kind) {
    case EnvelopeKind::six_term: return "six_term";
    case EnvelopeKind::hann: return "hann";
    case EnvelopeKind::blackman: return "blackman";
    case EnvelopeKind::nuttall: return "nuttall";
    case EnvelopeKind::kaiser: return "kaiser";
  }
  return "unknown";
}

EnvelopeKind parse_envelope_kind(std::string_view name) {
  if (name == "six_term" || name == "six-term" || name == "sixterm") {
    return EnvelopeKind::six_term;
  }
  if (name == "hann") return EnvelopeKind::hann;
  if (name == "blackman") return EnvelopeKind::blackman;
  if (name == "nuttall") return EnvelopeKind::nuttall;
  if (name == "kaiser") return EnvelopeKind::kaiser;
  throw std::invalid_argument(fmt::format("unknown envelope kind '{}'", name));
}

std::string describe(const WindowSpec& spec) {
  if (spec.kind == EnvelopeKind::kaiser) {
    return fmt::format("kaiser({})", spec.kaiser_beta);
  }
  return std::string(to_string(spec.kind));
}

CosineSeriesEnvelope six_term_envelope(double carrier_hz, double stretch) {
  return CosineSeriesEnvelope{
      {kSixTermCoefficients.begin(), kSixTermCoefficients.end()},
      kSixTermOrder,
      carrier_hz,
      stretch};
}

double envelope_value(double t, const CosineSeriesEnvelope& env) {
  const double phase =
      kTwoPi * env.carrier_hz * t / (env.terms * env.stretch);
  return cosine_series(env.coefficients, phase);
}

double support_seconds(double carrier_hz, double stretch) {
  return kSixTermOrder * stretch / carrier_hz;
}

std::size_t support_length(double carrier_hz, double stretch,
                           double sample_rate_hz) {
  const double half = support_seconds(carrier_hz, stretch) * sample_rate_hz / 2.0;
  // Guard against T f_s / 2 landing a hair below an integer.
  const auto half_taps = static_cast<std::size_t>(std::floor(half + 1e-9));
  return 2 * half_taps + 1;
}

std::vector<double> cosine_coefficients(EnvelopeKind kind) {
  switch (kind) {
    case EnvelopeKind::six_term:
      return {kSixTermCoefficients.begin(), kSixTermCoefficients.end()};
    case EnvelopeKind::hann: return {0.5, 0.5};
    case EnvelopeKind::blackman: return {0.42, 0.5, 0.08};
    case EnvelopeKind::nuttall:
      return {kNuttallCoefficients.begin(), kNuttallCoefficients.end()};
    case EnvelopeKind::kaiser: break;
  }
  throw std::invalid_argument("kaiser window is not a cosine series");
}

double window_value(const WindowSpec& spec, double t, double support_s) {
  const double half = support_s / 2.0;
  if (std::abs(t) > half) return 0.0;
  if (spec.kind == EnvelopeKind::kaiser) {
    const double r = t / half;
    const double arg = spec.kaiser_beta * std::sqrt(std::max(0.0, 1.0 - r * r));
    return std::cyl_bessel_i(0.0, arg) / std::cyl_bessel_i(0.0, spec.kaiser_beta);
  }
  return cosine_series(cosine_coefficients(spec.kind), kTwoPi * t / support_s);
}

AnalyticImpulseResponse analytic_impulse_response(double carrier_hz,
                                                  double stretch,
                                                  double sample_rate_hz,
                                                  const WindowSpec& spec) {
  check_design_args(carrier_hz, stretch, sample_rate_hz);
  const auto window = comparison_window(spec, carrier_hz, stretch, sample_rate_hz);

  AnalyticImpulseResponse response;
  response.sample_rate_hz = sample_rate_hz;
  response.center_hz = carrier_hz;
  response.samples.resize(window.size());
  const auto center = static_cast<long>(window.size() / 2);
  for (std::size_t i = 0; i < window.size(); ++i) {
    const long offset = static_cast<long>(i) - center;
    const double t = static_cast<double>(offset) / sample_rate_hz;
    const double phase = kTwoPi * carrier_hz * t;
    response.samples[i] = window[i] * std::polar(1.0, phase);
  }
  // The carrier is exactly 1 at the center tap.
  response.samples[static_cast<std::size_t>(center)] = {window[center], 0.0};
  return response;
}

std::vector<double> comparison_window(const WindowSpec& spec,
                                      double carrier_hz, double stretch,
                                      double sample_rate_hz) {
  check_design_args(carrier_hz, stretch, sample_rate_hz);
  const double support = support_seconds(carrier_hz, stretch);
  const std::size_t length = support_length(carrier_hz, stretch, sample_rate_hz);
  const auto center = static_cast<long>(length / 2);

  std::vector<double> values(length);
  std::vector<double> coefficients;
  if (spec.kind != EnvelopeKind::kaiser) {
    coefficients = cosine_coefficients(spec.kind);
  }
  for (long i = 0; i <= center; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    double v = 0.0;
    if (spec.kind == EnvelopeKind::kaiser) {
      v = window_value(spec, t, support);
    } else {
      v = cosine_series(coefficients, kTwoPi * t / support);
    }
    // Fill both halves from the same evaluation: exact even symmetry.
    values[static_cast<std::size_t>(center + i)] = v;
    values[static_cast<std::size_t>(center - i)] = v;
  }
  return values;
}

}  // namespace vocalscope
