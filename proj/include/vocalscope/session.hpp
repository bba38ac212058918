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

// Session state owned by the analysis thread: monitoring/stopped mode, the
// input ring buffer, work and reference audio, SPL calibration and the
// persisted key=value configuration.

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vocalscope/level_meter.hpp"

namespace vocalscope {

enum class Mode { monitoring, stopped };
std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

struct SessionConfig {
  std::filesystem::path work_directory;
  std::filesystem::path reference_path;
  std::optional<SplCalibration> calibration;
  double calibration_level_db = 70.0;
  double salience_threshold_db = 15.0;
  int hop_samples = 220;
};

/// Unknown keys are an error; missing keys keep their defaults.
SessionConfig parse_session_config(std::string_view text);
std::string format_session_config(const SessionConfig& config);
SessionConfig read_session_config(const std::filesystem::path& path);
void write_session_config(const std::filesystem::path& path, const SessionConfig& config);

/// Fixed-capacity history of the most recent samples.
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity);
  void push(std::span<const double> samples);
  void clear();
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return data_.size(); }
  bool empty() const { return size_ == 0; }
  /// Oldest first.
  std::vector<double> snapshot() const;

 private:
  std::vector<double> data_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
};

inline constexpr double kRingSeconds = 60.0;

/// "work_YYYYMMDD_HHMMSS_mmm.wav" (UTC), with "_N" appended until the name
/// is free in `directory`.
std::filesystem::path unique_work_path(const std::filesystem::path& directory,
                                       std::chrono::system_clock::time_point now);

/// Receives playback requests; the service has no audio device of its own.
class PlaybackSink {
 public:
  virtual ~PlaybackSink() = default;
  virtual void play(std::span<const double> samples, double sample_rate_hz) = 0;
};

/// Records what would have been played.
class NullPlaybackSink : public PlaybackSink {
 public:
  void play(std::span<const double> samples, double sample_rate_hz) override;
  std::size_t plays() const { return plays_; }
  std::size_t last_length() const { return last_length_; }

 private:
  std::size_t plays_ = 0;
  std::size_t last_length_ = 0;
};

inline const std::vector<std::string>& session_commands() {
  static const std::vector<std::string> kCommands = {
      "REC.START", "SAVE.WORK", "STOP",      "PLAY.WORK", "PLAY.REF", "QUIT",
      "SET.WORK",  "LOAD.REF",  "CAL.VOICE", "CAL.REF",   "CAL.LEVEL"};
  return kCommands;
}

struct CommandOutcome {
  bool ok = false;
  std::string error;
  nlohmann::json result = nlohmann::json::object();
};

class Session {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  Session(SessionConfig config, double sample_rate_hz, Mode start_mode,
          std::shared_ptr<PlaybackSink> sink, Clock clock = {});

  Mode mode() const { return mode_; }
  bool quit_requested() const { return quit_; }
  const SessionConfig& config() const { return config_; }
  const RingBuffer& ring() const { return ring_; }
  bool has_reference() const { return !reference_.empty(); }

  /// Records input while monitoring; ignored when stopped.
  void on_input(std::span<const double> samples);

  /// Whether each command would be accepted right now, given the meter.
  nlohmann::json availability(const LevelMeter& meter) const;
  /// Runs a command. Calibration commands read and update the meter.
  /// Rejections leave the state unchanged.
  CommandOutcome execute(std::string_view command, const nlohmann::json& arg, LevelMeter& meter);

  nlohmann::json state_json(const LevelMeter& meter) const;
  /// Persists the config after a change when a path is set.
  void set_config_path(std::optional<std::filesystem::path> path) { config_path_ = std::move(path); }

 private:
  std::optional<std::string> check(std::string_view command, const nlohmann::json& arg,
                                   const LevelMeter& meter) const;
  void persist();
  std::string timestamp() const;

  SessionConfig config_;
  double fs_;
  Mode mode_;
  std::shared_ptr<PlaybackSink> sink_;
  Clock clock_;
  RingBuffer ring_;
  std::vector<double> reference_;
  std::optional<std::filesystem::path> config_path_;
  std::optional<std::filesystem::path> last_saved_;
  bool quit_ = false;
};

}  // namespace vocalscope
