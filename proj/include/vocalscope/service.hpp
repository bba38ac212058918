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

// The streaming service: an audio source thread feeding an analysis thread
// that owns the session, publishing frames to subscribers through bounded
// drop-oldest queues.

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vocalscope/analyzer.hpp"
#include "vocalscope/protocol.hpp"
#include "vocalscope/session.hpp"

namespace vocalscope {

class AudioSource {
 public:
  virtual ~AudioSource() = default;
  /// Fills up to out.size() samples; 0 means the source has ended.
  virtual std::size_t read(std::span<double> out) = 0;
  virtual double sample_rate_hz() const = 0;
  virtual std::string describe() const = 0;
};

/// A WAV file, mixed down and resampled to the analysis rate.
class FileSource : public AudioSource {
 public:
  FileSource(const std::filesystem::path& path, double sample_rate_hz);
  std::size_t read(std::span<double> out) override;
  double sample_rate_hz() const override { return fs_; }
  std::string describe() const override { return "file:" + path_.string(); }

 private:
  std::filesystem::path path_;
  double fs_;
  std::vector<double> samples_;
  std::size_t position_ = 0;
};

/// A cosine, endless unless a duration is given.
class ToneSource : public AudioSource {
 public:
  ToneSource(double freq_hz, double amplitude, double sample_rate_hz,
             std::optional<double> duration_s = std::nullopt);
  std::size_t read(std::span<double> out) override;
  double sample_rate_hz() const override { return fs_; }
  std::string describe() const override;

 private:
  double freq_hz_;
  double amplitude_;
  double fs_;
  std::optional<long long> remaining_;
  long long n_ = 0;
};

class SilenceSource : public AudioSource {
 public:
  explicit SilenceSource(double sample_rate_hz, std::optional<double> duration_s = std::nullopt);
  std::size_t read(std::span<double> out) override;
  double sample_rate_hz() const override { return fs_; }
  std::string describe() const override { return "silence"; }

 private:
  double fs_;
  std::optional<long long> remaining_;
};

/// "tone:<hz>[:<amplitude>]", "silence", or a WAV path. Throws FormatError or
/// std::invalid_argument.
std::unique_ptr<AudioSource> make_source(const std::string& spec, double sample_rate_hz);

/// One client's outbound queue. Frames beyond the bound drop the oldest
/// frame; control-class messages (hello, ack, state, eos) are never dropped.
class Subscriber {
 public:
  Subscriber(std::uint64_t id, SubscribeRequest request);

  std::uint64_t id() const { return id_; }
  SubscribeRequest request() const;
  /// Activates frame delivery with the given options.
  void subscribe(const SubscribeRequest& request);
  bool wants_frames() const;

  void push_frame(std::shared_ptr<const std::string> message);
  void push_control(std::shared_ptr<const std::string> message);
  std::optional<std::shared_ptr<const std::string>> try_pop();
  /// Blocks up to `timeout`; empty on timeout or close.
  std::optional<std::shared_ptr<const std::string>> pop(std::chrono::milliseconds timeout);
  void close();
  bool closed() const;
  std::size_t dropped_frames() const;

  /// Called after every enqueue, outside the lock.
  void set_notify(std::function<void()> notify);

 private:
  struct Item {
    std::shared_ptr<const std::string> message;
    bool frame = false;
  };
  void notify();

  const std::uint64_t id_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  SubscribeRequest request_;
  bool active_ = false;
  bool closed_ = false;
  std::deque<Item> queue_;
  std::size_t queued_frames_ = 0;
  std::size_t dropped_ = 0;
  std::function<void()> notify_;
};

struct ServiceOptions {
  AnalyzerConfig analyzer;
  SessionConfig session;
  std::optional<std::filesystem::path> config_path;
  Mode start_mode = Mode::monitoring;
  /// Pace the source at real time instead of as fast as possible.
  bool realtime = false;
  std::size_t block_samples = 512;
};

class StreamService {
 public:
  StreamService(ServiceOptions options, std::unique_ptr<AudioSource> source,
                std::shared_ptr<PlaybackSink> sink = nullptr);
  ~StreamService();
  StreamService(const StreamService&) = delete;
  StreamService& operator=(const StreamService&) = delete;

  void start();
  /// Stops both threads and closes every subscriber.
  void stop();
  /// Blocks until QUIT or stop().
  void wait();
  bool running() const { return running_; }
  /// Set by QUIT or stop().
  bool stopping() const { return stopping_; }
  /// True once a finite source has been fully analyzed.
  bool source_ended() const { return source_ended_; }

  /// Registers a client and queues its hello. Frames flow after subscribe.
  std::shared_ptr<Subscriber> connect();
  void disconnect(std::uint64_t id);

  /// Queued for the analysis thread; the ack goes to `reply_to`.
  void submit(ControlRequest request, std::shared_ptr<Subscriber> reply_to);

  nlohmann::json hello() const;
  double frame_rate_hz() const;
  std::uint64_t frames_published() const { return published_; }
  const ChannelBank& bank() const { return analyzer_->bank(); }

 private:
  struct Block {
    std::vector<double> samples;
    bool end = false;
  };
  struct PendingCommand {
    ControlRequest request;
    std::shared_ptr<Subscriber> reply_to;
  };

  void source_loop();
  void analysis_loop();
  void run_commands();
  void publish(const AnalysisFrame& frame);
  void broadcast_control(const nlohmann::json& message);
  void update_state_snapshot();

  ServiceOptions options_;
  std::unique_ptr<AudioSource> source_;
  std::unique_ptr<Analyzer> analyzer_;
  std::unique_ptr<Session> session_;

  std::mutex intake_mutex_;
  std::condition_variable intake_cv_;
  std::deque<Block> intake_;
  std::deque<PendingCommand> commands_;

  mutable std::mutex subscribers_mutex_;
  std::vector<std::shared_ptr<Subscriber>> subscribers_;
  std::uint64_t next_id_ = 1;

  mutable std::mutex state_mutex_;
  nlohmann::json state_snapshot_;

  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::atomic<bool> paused_{false};
  std::atomic<bool> source_ended_{false};
  std::atomic<std::uint64_t> published_{0};
  std::mutex wait_mutex_;
  std::condition_variable wait_cv_;
  std::thread source_thread_;
  std::thread analysis_thread_;
};

}  // namespace vocalscope
