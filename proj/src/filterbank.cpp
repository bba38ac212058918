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

#include "vocalscope/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace vocalscope {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::size_t channel_count(double f_lo_hz, double f_hi_hz, int per_octave) {
  if (f_hi_hz <= f_lo_hz) return 1;
  const double steps = per_octave * std::log2(f_hi_hz / f_lo_hz);
  return static_cast<std::size_t>(std::ceil(steps - 1e-9)) + 1;
}

ChannelBank::ChannelBank(const BankSpec& spec) : spec_(spec) {
  if (spec.per_octave < 1) {
    throw std::invalid_argument("channels per octave must be at least 1");
  }
  if (!(spec.f_lo_hz > 0.0) || spec.f_hi_hz < spec.f_lo_hz) {
    throw std::invalid_argument(fmt::format(
        "invalid bank range [{}, {}] Hz", spec.f_lo_hz, spec.f_hi_hz));
  }
  const std::size_t count = channel_count(spec.f_lo_hz, spec.f_hi_hz, spec.per_octave);
  const double top =
      spec.f_lo_hz * std::exp2(static_cast<double>(count - 1) / spec.per_octave);
  if (!(top < spec.sample_rate_hz / 2.0)) {
    throw std::invalid_argument(fmt::format(
        "top channel {} Hz is not below Nyquist {} Hz", top,
        spec.sample_rate_hz / 2.0));
  }

  channels_.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    Channel ch;
    ch.index = static_cast<int>(m);
    ch.center_hz = spec.f_lo_hz * std::exp2(static_cast<double>(m) / spec.per_octave);
    ch.response = analytic_impulse_response(ch.center_hz, spec.stretch,
                                            spec.sample_rate_hz, spec.window);
    const auto& taps = ch.response.samples;
    ch.reversed_re.resize(taps.size());
    ch.reversed_im.resize(taps.size());
    for (std::size_t i = 0; i < taps.size(); ++i) {
      ch.reversed_re[i] = taps[taps.size() - 1 - i].real();
      ch.reversed_im[i] = taps[taps.size() - 1 - i].imag();
    }
    channels_.push_back(std::move(ch));
  }
}

double ChannelBank::delta_omega(std::size_t k) const {
  if (channels_.size() < 2) {
    // Single channel: the spacing it would have to its upper neighbor.
    return kTwoPi * channels_.front().center_hz *
           (std::exp2(1.0 / spec_.per_octave) - 1.0);
  }
  const std::size_t lower = std::min(k, channels_.size() - 2);
  return kTwoPi * (channels_[lower + 1].center_hz - channels_[lower].center_hz);
}

long ChannelBank::max_half_length() const {
  long longest = 0;
  for (const auto& ch : channels_) longest = std::max(longest, ch.half_length());
  return longest;
}

ChannelBank design_bank(double f_lo_hz, double f_hi_hz, int per_octave,
                        double stretch, double sample_rate_hz,
                        const WindowSpec& window) {
  return ChannelBank(BankSpec{f_lo_hz, f_hi_hz, per_octave, stretch,
                              sample_rate_hz, window});
}

std::complex<double> filter_output(const Channel& channel,
                                   std::span<const double> x, long long n) {
  const long long c = channel.half_length();
  const auto length = static_cast<long long>(channel.reversed_re.size());
  const long long start = n - c;
  double re = 0.0;
  double im = 0.0;
  for (long long q = 0; q < length; ++q) {
    const long long i = start + q;
    if (i < 0 || i >= static_cast<long long>(x.size())) continue;
    re += channel.reversed_re[q] * x[i];
    im += channel.reversed_im[q] * x[i];
  }
  return {re, im};
}

FilterbankStream::FilterbankStream(std::shared_ptr<const ChannelBank> bank,
                                   const StreamOptions& options)
    : bank_(std::move(bank)), options_(options) {
  if (!bank_) throw std::invalid_argument("filterbank stream needs a bank");
  if (options_.hop_samples < 1) {
    throw std::invalid_argument("hop size must be at least one sample");
  }
  const double fs = bank_->sample_rate_hz();
  probes_.resize(bank_->size());
  reach_back_.resize(bank_->size());
  reach_ahead_.resize(bank_->size());
  for (std::size_t k = 0; k < bank_->size(); ++k) {
    const Channel& ch = bank_->channel(k);
    auto& probe = probes_[k];
    // Phase may advance less than pi between probes for IF below 2 f_c.
    probe.stride = std::max(1, static_cast<int>(std::floor(fs / (4.0 * ch.center_hz))));
    const double span = options_.smoothing_spans *
                        support_seconds(ch.center_hz, bank_->spec().stretch);
    probe.half_steps =
        std::max(1, static_cast<int>(std::lround(span * fs / (2.0 * probe.stride))));
    const int increments = 2 * probe.half_steps + 1;
    probe.weights.resize(static_cast<std::size_t>(increments));
    for (int j = 0; j < increments; ++j) {
      const double s = std::sin(std::numbers::pi * (j + 0.5) / increments);
      probe.weights[static_cast<std::size_t>(j)] = s * s;
    }

    const long long c = ch.half_length();
    long long ahead = c + 1;
    long long back = c;
    if (options_.smoothed_if) {
      ahead = std::max(ahead, c + static_cast<long long>(probe.half_steps + 1) * probe.stride);
      back = c + static_cast<long long>(probe.half_steps + 1) * probe.stride;
    }
    reach_ahead_[k] = ahead;
    reach_back_[k] = back;
    lookahead_ = std::max(lookahead_, ahead);
    warmup_reach_ = std::max(warmup_reach_, back);
  }
}

void FilterbankStream::push(std::span<const double> samples) {
  if (end_) throw std::logic_error("push after finish");
  buffer_.insert(buffer_.end(), samples.begin(), samples.end());
  received_ += static_cast<long long>(samples.size());
}

void FilterbankStream::finish() {
  if (end_) return;
  end_ = received_;
  // Real zeros keep the contiguous fast path valid near the end.
  buffer_.insert(buffer_.end(), static_cast<std::size_t>(lookahead_ + 2), 0.0);
}

void FilterbankStream::reset() {
  for (auto& probe : probes_) {
    probe.values.clear();
    probe.first = 0;
  }
  buffer_.clear();
  buffer_start_ = 0;
  received_ = 0;
  end_.reset();
  next_hop_ = 0;
}

double FilterbankStream::sample_at(long long i) const {
  if (i < 0) return 0.0;
  if (end_ && i >= *end_) return 0.0;
  const long long offset = i - buffer_start_;
  if (offset < 0 || offset >= static_cast<long long>(buffer_.size())) return 0.0;
  return buffer_[static_cast<std::size_t>(offset)];
}

std::complex<double> FilterbankStream::output_at(const Channel& channel,
                                                 long long n) const {
  const long long c = channel.half_length();
  const auto length = static_cast<long long>(channel.reversed_re.size());
  const long long start = n - c;
  const long long offset = start - buffer_start_;
  if (start >= 0 && offset >= 0 &&
      offset + length <= static_cast<long long>(buffer_.size())) {
    const double* x = buffer_.data() + offset;
    const double* hr = channel.reversed_re.data();
    const double* hi = channel.reversed_im.data();
    double re = 0.0;
    double im = 0.0;
    for (long long q = 0; q < length; ++q) {
      re += hr[q] * x[q];
      im += hi[q] * x[q];
    }
    return {re, im};
  }
  double re = 0.0;
  double im = 0.0;
  for (long long q = 0; q < length; ++q) {
    const double v = sample_at(start + q);
    re += channel.reversed_re[static_cast<std::size_t>(q)] * v;
    im += channel.reversed_im[static_cast<std::size_t>(q)] * v;
  }
  return {re, im};
}

std::optional<double> FilterbankStream::smoothed_if(std::size_t k, long long n) {
  auto& probe = probes_[k];
  const Channel& ch = bank_->channel(k);
  const long long center = floor_div(n, probe.stride);
  const long long lo = center - probe.half_steps;
  const long long hi = center + probe.half_steps + 1;

  if (probe.values.empty() || lo < probe.first ||
      lo > probe.first + static_cast<long long>(probe.values.size())) {
    probe.values.clear();
    probe.first = lo;
  }
  while (probe.first < lo) {
    probe.values.pop_front();
    ++probe.first;
  }
  while (probe.first + static_cast<long long>(probe.values.size()) <= hi) {
    const long long index = probe.first + static_cast<long long>(probe.values.size());
    probe.values.push_back(output_at(ch, index * probe.stride));
  }

  const auto count = static_cast<std::size_t>(hi - lo + 1);
  double peak = 0.0;
  for (std::size_t j = 0; j < count; ++j) peak = std::max(peak, std::abs(probe.values[j]));
  const double floor =
      std::max(kMinValidMagnitude, peak * std::pow(10.0, kRelativeMagnitudeFloorDb / 20.0));

  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < count; ++j) {
    const auto& a = probe.values[j];
    const auto& b = probe.values[j + 1];
    if (std::abs(a) < floor || std::abs(b) < floor) {
      return std::nullopt;
    }
    weighted += probe.weights[j] * std::arg(b * std::conj(a));
    total += probe.weights[j];
  }
  const double fs = bank_->sample_rate_hz();
  return weighted / total * fs / (2.0 * std::numbers::pi * probe.stride);
}

bool FilterbankStream::ready(long long n) const {
  if (end_) return n < *end_;
  return received_ > n + lookahead_;
}

void FilterbankStream::trim(long long next_instant) {
  const long long keep_from = next_instant - warmup_reach_ - 1;
  const long long excess = keep_from - buffer_start_;
  if (excess > 1 << 16) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + excess);
    buffer_start_ += excess;
  }
}

std::optional<HopOutput> FilterbankStream::pop() {
  const long long n = next_hop_;
  if (!ready(n)) return std::nullopt;

  const double fs = bank_->sample_rate_hz();
  HopOutput out;
  out.sample_index = n;
  out.time_s = static_cast<double>(n) / fs;
  out.warmup = n < warmup_reach_;
  out.tail = end_.has_value() && n + lookahead_ >= *end_;
  out.pairs.resize(bank_->size());
  if (options_.smoothed_if) out.smoothed_if_hz.resize(bank_->size());

  for (std::size_t k = 0; k < bank_->size(); ++k) {
    const Channel& ch = bank_->channel(k);
    auto& pair = out.pairs[k];
    pair.channel_index = ch.index;
    pair.hop_time_s = out.time_s;
    pair.warmup = n < ch.half_length();
    pair.y_n = output_at(ch, n);
    pair.y_np1 = output_at(ch, n + 1);
    if (options_.smoothed_if) out.smoothed_if_hz[k] = smoothed_if(k, n);
  }

  next_hop_ += options_.hop_samples;
  trim(next_hop_);
  return out;
}

std::vector<HopOutput> process_hop(std::shared_ptr<const ChannelBank> bank,
                                   std::span<const double> audio,
                                   int hop_samples, bool smoothed_if) {
  StreamOptions options;
  options.hop_samples = hop_samples;
  options.smoothed_if = smoothed_if;
  FilterbankStream stream(std::move(bank), options);
  stream.push(audio);
  stream.finish();
  std::vector<HopOutput> hops;
  while (auto hop = stream.pop()) hops.push_back(std::move(*hop));
  return hops;
}

}  // namespace vocalscope
