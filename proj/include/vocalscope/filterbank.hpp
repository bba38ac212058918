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

#include <complex>
#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vocalscope/envelope.hpp"

namespace vocalscope {

/// Outputs below this magnitude (full scale = 1) carry no usable phase.
inline constexpr double kMinValidMagnitude = 1e-12;
/// Outputs this far below the strongest output they are compared with carry
/// only window leakage.
inline constexpr double kRelativeMagnitudeFloorDb = -140.0;

struct BankSpec {
  double f_lo_hz = 80.0;
  double f_hi_hz = 5000.0;
  int per_octave = 6;
  double stretch = kDefaultStretch;
  double sample_rate_hz = 44100.0;
  WindowSpec window;
};

struct Channel {
  int index = 0;
  double center_hz = 0.0;
  AnalyticImpulseResponse response;
  // Taps in reverse order, split into real/imaginary parts, so an output is
  // a pair of forward dot products over a contiguous input span.
  std::vector<double> reversed_re;
  std::vector<double> reversed_im;

  long half_length() const { return static_cast<long>(response.center_index()); }
};

/// channels_per_octave * log2(f_hi / f_lo), rounded up, plus one.
std::size_t channel_count(double f_lo_hz, double f_hi_hz, int per_octave);

class ChannelBank {
 public:
  /// Throws std::invalid_argument for an empty/inverted range, a top channel
  /// at or above Nyquist, or per_octave < 1.
  explicit ChannelBank(const BankSpec& spec);

  const BankSpec& spec() const { return spec_; }
  std::size_t size() const { return channels_.size(); }
  const Channel& channel(std::size_t k) const { return channels_.at(k); }
  std::span<const Channel> channels() const { return channels_; }
  double center_hz(std::size_t k) const { return channels_.at(k).center_hz; }
  double sample_rate_hz() const { return spec_.sample_rate_hz; }

  /// 2 pi (f_{k+1} - f_k) in rad/s. The top channel reuses its lower pair.
  double delta_omega(std::size_t k) const;

  long max_half_length() const;

 private:
  BankSpec spec_;
  std::vector<Channel> channels_;
};

ChannelBank design_bank(double f_lo_hz, double f_hi_hz, int per_octave,
                        double stretch, double sample_rate_hz,
                        const WindowSpec& window = {});

/// Centered convolution of x with the channel response at sample n; input
/// outside [0, x.size()) reads as zero.
std::complex<double> filter_output(const Channel& channel,
                                   std::span<const double> x, long long n);

struct ChannelOutputPair {
  int channel_index = 0;
  std::complex<double> y_n;
  std::complex<double> y_np1;
  double hop_time_s = 0.0;
  /// The response window reached before the start of the stream.
  bool warmup = false;
};

struct StreamOptions {
  int hop_samples = 220;
  /// Compute the hop-smoothed instantaneous frequency used by the
  /// fixed-point search.
  bool smoothed_if = true;
  /// Length of the Hann smoothing window in envelope supports.
  double smoothing_spans = 2.0;
};

struct HopOutput {
  long long sample_index = 0;
  double time_s = 0.0;
  /// Some channel's window (including smoothing) reached before sample 0.
  bool warmup = false;
  /// Some channel's window reached past the end of a finished stream.
  bool tail = false;
  std::vector<ChannelOutputPair> pairs;
  /// Hann-weighted mean phase-advance rate around the hop instant, in Hz;
  /// empty when StreamOptions::smoothed_if is off.
  std::vector<std::optional<double>> smoothed_if_hz;
};

/// Streaming evaluation of the bank at hop instants n = 0, hop, 2 hop, ...
/// Outputs equal the direct centered convolution sampled at (n, n + 1).
/// A hop is released once the input reaches n + lookahead_samples().
class FilterbankStream {
 public:
  FilterbankStream(std::shared_ptr<const ChannelBank> bank,
                   const StreamOptions& options);

  void push(std::span<const double> samples);
  /// Marks the end of input; remaining instants before the end are released
  /// with zero padding.
  void finish();
  std::optional<HopOutput> pop();
  void reset();

  long long lookahead_samples() const { return lookahead_; }
  long long samples_received() const { return received_; }
  const ChannelBank& bank() const { return *bank_; }
  const StreamOptions& options() const { return options_; }
  /// Probe spacing and half-width (in probes) of channel k's smoothing.
  int probe_stride(std::size_t k) const { return probes_.at(k).stride; }
  int probe_half_steps(std::size_t k) const { return probes_.at(k).half_steps; }

 private:
  struct ProbeState {
    int stride = 1;
    int half_steps = 1;
    std::vector<double> weights;
    long long first = 0;  // probe index of values.front()
    std::deque<std::complex<double>> values;
  };

  double sample_at(long long i) const;
  std::complex<double> output_at(const Channel& channel, long long n) const;
  std::optional<double> smoothed_if(std::size_t k, long long n);
  bool ready(long long n) const;
  void trim(long long next_instant);

  std::shared_ptr<const ChannelBank> bank_;
  StreamOptions options_;
  std::vector<ProbeState> probes_;
  std::vector<long long> reach_back_;
  std::vector<long long> reach_ahead_;
  long long lookahead_ = 0;
  long long warmup_reach_ = 0;

  std::vector<double> buffer_;
  long long buffer_start_ = 0;
  long long received_ = 0;
  std::optional<long long> end_;
  long long next_hop_ = 0;
};

/// Offline convenience: all hop instants n < audio.size().
std::vector<HopOutput> process_hop(std::shared_ptr<const ChannelBank> bank,
                                   std::span<const double> audio,
                                   int hop_samples, bool smoothed_if = false);

}  // namespace vocalscope
