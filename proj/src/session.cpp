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

#include "vocalscope/session.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "vocalscope/wav_io.hpp"

namespace vocalscope {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::tm utc(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm out{};
  gmtime_r(&secs, &out);
  return out;
}

bool needs_arg(std::string_view command) {
  return command == "SET.WORK" || command == "LOAD.REF" || command == "CAL.LEVEL";
}

}  // namespace

std::string_view to_string(Mode mode) {
  return mode == Mode::monitoring ? "monitoring" : "stopped";
}

Mode parse_mode(std::string_view name) {
  if (name == "monitoring") return Mode::monitoring;
  if (name == "stopped") return Mode::stopped;
  throw std::invalid_argument(fmt::format("unknown mode '{}'", name));
}

SessionConfig parse_session_config(std::string_view text) {
  SessionConfig config;
  std::optional<double> offset;
  std::optional<double> reference;
  std::string stamp;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(fmt::format("config line {}: expected key = value", line_no));
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    try {
      if (key == "work_directory") {
        config.work_directory = value;
      } else if (key == "reference") {
        config.reference_path = value;
      } else if (key == "calibration_offset_db") {
        offset = std::stod(value);
      } else if (key == "calibration_reference_db") {
        reference = std::stod(value);
      } else if (key == "calibration_timestamp") {
        stamp = value;
      } else if (key == "calibration_level_db") {
        config.calibration_level_db = std::stod(value);
      } else if (key == "salience_threshold_db") {
        config.salience_threshold_db = std::stod(value);
      } else if (key == "hop_samples") {
        config.hop_samples = std::stoi(value);
      } else {
        throw std::runtime_error(fmt::format("config line {}: unknown key '{}'", line_no, key));
      }
    } catch (const std::logic_error&) {
      throw std::runtime_error(fmt::format("config line {}: bad value for '{}'", line_no, key));
    }
  }
  if (offset) {
    config.calibration = SplCalibration{*offset, reference.value_or(config.calibration_level_db), stamp};
  }
  return config;
}

std::string format_session_config(const SessionConfig& config) {
  std::string out = "# vocalscope session\n";
  out += fmt::format("work_directory = {}\n", config.work_directory.string());
  out += fmt::format("reference = {}\n", config.reference_path.string());
  if (config.calibration) {
    out += fmt::format("calibration_offset_db = {}\n", config.calibration->offset_db);
    out += fmt::format("calibration_reference_db = {}\n", config.calibration->reference_spl_db);
    out += fmt::format("calibration_timestamp = {}\n", config.calibration->timestamp);
  }
  out += fmt::format("calibration_level_db = {}\n", config.calibration_level_db);
  out += fmt::format("salience_threshold_db = {}\n", config.salience_threshold_db);
  out += fmt::format("hop_samples = {}\n", config.hop_samples);
  return out;
}

SessionConfig read_session_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_session_config(buffer.str());
}

void write_session_config(const std::filesystem::path& path, const SessionConfig& config) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write config '{}'", path.string()));
  out << format_session_config(config);
}

RingBuffer::RingBuffer(std::size_t capacity) : data_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ring buffer capacity must be positive");
}

void RingBuffer::push(std::span<const double> samples) {
  if (samples.size() >= data_.size()) {
    samples = samples.last(data_.size());
  }
  for (const double x : samples) {
    data_[head_] = x;
    head_ = (head_ + 1) % data_.size();
  }
  size_ = std::min(data_.size(), size_ + samples.size());
}

void RingBuffer::clear() {
  head_ = 0;
  size_ = 0;
}

std::vector<double> RingBuffer::snapshot() const {
  std::vector<double> out(size_);
  const std::size_t start = (head_ + data_.size() - size_) % data_.size();
  for (std::size_t i = 0; i < size_; ++i) out[i] = data_[(start + i) % data_.size()];
  return out;
}

std::filesystem::path unique_work_path(const std::filesystem::path& directory,
                                       std::chrono::system_clock::time_point now) {
  const std::tm t = utc(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::string stem = fmt::format("work_{:04}{:02}{:02}_{:02}{:02}{:02}_{:03}", t.tm_year + 1900,
                                       t.tm_mon + 1, t.tm_mday, t.tm_hour, t.tm_min, t.tm_sec, ms);
  auto candidate = directory / (stem + ".wav");
  for (int n = 1; std::filesystem::exists(candidate); ++n) {
    candidate = directory / fmt::format("{}_{}.wav", stem, n);
  }
  return candidate;
}

void NullPlaybackSink::play(std::span<const double> samples, double) {
  ++plays_;
  last_length_ = samples.size();
}

Session::Session(SessionConfig config, double sample_rate_hz, Mode start_mode,
                 std::shared_ptr<PlaybackSink> sink, Clock clock)
    : config_(std::move(config)),
      fs_(sample_rate_hz),
      mode_(start_mode),
      sink_(sink ? std::move(sink) : std::make_shared<NullPlaybackSink>()),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::system_clock::now(); })),
      ring_(static_cast<std::size_t>(kRingSeconds * sample_rate_hz)) {
  if (!config_.reference_path.empty()) {
    try {
      reference_ = load_mono(config_.reference_path, fs_).samples;
    } catch (const std::exception&) {
      reference_.clear();
    }
  }
}

void Session::on_input(std::span<const double> samples) {
  if (mode_ == Mode::monitoring) ring_.push(samples);
}

std::string Session::timestamp() const {
  const std::tm t = utc(clock_());
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", t.tm_year + 1900, t.tm_mon + 1,
                     t.tm_mday, t.tm_hour, t.tm_min, t.tm_sec);
}

std::optional<std::string> Session::check(std::string_view command, const nlohmann::json& arg,
                                          const LevelMeter& meter) const {
  const bool monitoring = mode_ == Mode::monitoring;
  if (command == "REC.START") {
    if (monitoring) return "already monitoring";
  } else if (command == "STOP") {
    if (!monitoring) return "already stopped";
  } else if (command == "SAVE.WORK") {
    if (config_.work_directory.empty()) return "no work directory set";
    if (ring_.empty()) return "input buffer is empty";
  } else if (command == "PLAY.WORK") {
    if (monitoring) return "playback needs the stopped state";
    if (ring_.empty()) return "input buffer is empty";
  } else if (command == "PLAY.REF") {
    if (monitoring) return "playback needs the stopped state";
    if (reference_.empty()) return "no reference loaded";
  } else if (command == "QUIT") {
  } else if (command == "SET.WORK" || command == "LOAD.REF") {
    if (!arg.is_null() && (!arg.is_string() || arg.get<std::string>().empty())) {
      return "argument must be a path";
    }
  } else if (command == "CAL.VOICE" || command == "CAL.REF") {
    if (!monitoring) return "calibration needs the monitoring state";
    const auto variance = meter.slow_variance();
    if (!variance) return "not enough signal yet to judge stability";
    if (!(*variance < kMaxStableVariance)) {
      return fmt::format("signal unstable: slow-level variance {:.3f} dB^2", *variance);
    }
  } else if (command == "CAL.LEVEL") {
    if (!arg.is_null()) {
      const auto levels = default_reference_levels();
      if (!arg.is_number() ||
          std::find(levels.begin(), levels.end(), arg.get<double>()) == levels.end()) {
        return "argument must be one of 60, 65, 70, 75, 80";
      }
    }
  } else {
    return fmt::format("unknown command '{}'", command);
  }
  return std::nullopt;
}

nlohmann::json Session::availability(const LevelMeter& meter) const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& c : session_commands()) out[c] = !check(c, nullptr, meter).has_value();
  return out;
}

void Session::persist() {
  if (config_path_) write_session_config(*config_path_, config_);
}

CommandOutcome Session::execute(std::string_view command, const nlohmann::json& arg,
                                LevelMeter& meter) {
  CommandOutcome out;
  if (needs_arg(command) && arg.is_null()) {
    out.error = fmt::format("{} needs an argument", command);
    return out;
  }
  if (auto why = check(command, arg, meter)) {
    out.error = fmt::format("rejected in state {}: {}", to_string(mode_), *why);
    return out;
  }
  try {
    if (command == "REC.START") {
      ring_.clear();
      mode_ = Mode::monitoring;
    } else if (command == "STOP") {
      mode_ = Mode::stopped;
    } else if (command == "SAVE.WORK") {
      const auto path = unique_work_path(config_.work_directory, clock_());
      const auto samples = ring_.snapshot();
      write_wav(path, samples, fs_, 24);
      last_saved_ = path;
      out.result = {{"path", path.string()},
                    {"samples", samples.size()},
                    {"bytes", std::filesystem::file_size(path)}};
    } else if (command == "PLAY.WORK") {
      const auto samples = ring_.snapshot();
      sink_->play(samples, fs_);
      out.result = {{"samples", samples.size()}, {"duration_s", samples.size() / fs_}};
    } else if (command == "PLAY.REF") {
      sink_->play(reference_, fs_);
      out.result = {{"samples", reference_.size()}, {"duration_s", reference_.size() / fs_}};
    } else if (command == "QUIT") {
      quit_ = true;
    } else if (command == "SET.WORK") {
      const std::filesystem::path dir = arg.get<std::string>();
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (!std::filesystem::is_directory(dir)) {
        out.error = fmt::format("'{}' is not a usable directory", dir.string());
        return out;
      }
      const auto probe = dir / ".vocalscope_probe";
      {
        std::ofstream f(probe);
        if (!f) {
          out.error = fmt::format("directory '{}' is not writable", dir.string());
          return out;
        }
      }
      std::filesystem::remove(probe, ec);
      config_.work_directory = dir;
      persist();
      out.result = {{"work_directory", dir.string()}};
    } else if (command == "LOAD.REF") {
      const std::filesystem::path path = arg.get<std::string>();
      auto audio = load_mono(path, fs_);
      reference_ = std::move(audio.samples);
      config_.reference_path = path;
      persist();
      out.result = {{"path", path.string()}, {"samples", reference_.size()}};
    } else if (command == "CAL.VOICE" || command == "CAL.REF") {
      auto cal = calibrate_spl(meter.last().dbfs_c_slow, config_.calibration_level_db,
                               meter.slow_variance(), default_reference_levels(), timestamp());
      meter.set_calibration(cal);
      config_.calibration = cal;
      persist();
      out.result = {{"offset_db", cal.offset_db},
                    {"reference_spl_db", cal.reference_spl_db},
                    {"source", command == "CAL.VOICE" ? "voice" : "reference"}};
    } else if (command == "CAL.LEVEL") {
      config_.calibration_level_db = arg.get<double>();
      persist();
      out.result = {{"calibration_level_db", config_.calibration_level_db}};
    }
  } catch (const CalibrationRejected& e) {
    out.error = e.what();
    return out;
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  out.ok = true;
  return out;
}

nlohmann::json Session::state_json(const LevelMeter& meter) const {
  nlohmann::json calibration = nullptr;
  if (config_.calibration) {
    calibration = {{"offset_db", config_.calibration->offset_db},
                   {"reference_spl_db", config_.calibration->reference_spl_db},
                   {"timestamp", config_.calibration->timestamp}};
  }
  return {{"mode", to_string(mode_)},
          {"work_directory", config_.work_directory.string()},
          {"reference_loaded", !reference_.empty()},
          {"buffer_samples", ring_.size()},
          {"buffer_s", ring_.size() / fs_},
          {"calibration_level_db", config_.calibration_level_db},
          {"calibration", calibration},
          {"available", availability(meter)},
          {"last_saved", last_saved_ ? nlohmann::json(last_saved_->string()) : nlohmann::json(nullptr)}};
}

}  // namespace vocalscope
