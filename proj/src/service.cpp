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

#include "vocalscope/service.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "vocalscope/wav_io.hpp"

namespace vocalscope {
namespace {

constexpr std::size_t kMaxIntakeBlocksOffline = 64;

std::shared_ptr<const std::string> shared_text(const nlohmann::json& message) {
  return std::make_shared<const std::string>(message.dump());
}

}  // namespace

FileSource::FileSource(const std::filesystem::path& path, double sample_rate_hz)
    : path_(path), fs_(sample_rate_hz), samples_(load_mono(path, sample_rate_hz).samples) {}

std::size_t FileSource::read(std::span<double> out) {
  const std::size_t n = std::min(out.size(), samples_.size() - position_);
  std::copy_n(samples_.begin() + static_cast<long>(position_), n, out.begin());
  position_ += n;
  return n;
}

ToneSource::ToneSource(double freq_hz, double amplitude, double sample_rate_hz,
                       std::optional<double> duration_s)
    : freq_hz_(freq_hz), amplitude_(amplitude), fs_(sample_rate_hz) {
  if (!(freq_hz > 0.0) || freq_hz >= sample_rate_hz / 2.0) {
    throw std::invalid_argument(fmt::format("tone frequency {} Hz out of range", freq_hz));
  }
  if (duration_s) remaining_ = std::llround(*duration_s * sample_rate_hz);
}

std::size_t ToneSource::read(std::span<double> out) {
  std::size_t n = out.size();
  if (remaining_) n = static_cast<std::size_t>(std::min<long long>(*remaining_, static_cast<long long>(n)));
  const double w = 2.0 * std::numbers::pi * freq_hz_ / fs_;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = amplitude_ * std::cos(w * static_cast<double>(n_ + static_cast<long long>(i)));
  }
  n_ += static_cast<long long>(n);
  if (remaining_) *remaining_ -= static_cast<long long>(n);
  return n;
}

std::string ToneSource::describe() const {
  return fmt::format("tone:{}:{}", freq_hz_, amplitude_);
}

SilenceSource::SilenceSource(double sample_rate_hz, std::optional<double> duration_s)
    : fs_(sample_rate_hz) {
  if (duration_s) remaining_ = std::llround(*duration_s * sample_rate_hz);
}

std::size_t SilenceSource::read(std::span<double> out) {
  std::size_t n = out.size();
  if (remaining_) n = static_cast<std::size_t>(std::min<long long>(*remaining_, static_cast<long long>(n)));
  std::fill_n(out.begin(), n, 0.0);
  if (remaining_) *remaining_ -= static_cast<long long>(n);
  return n;
}

std::unique_ptr<AudioSource> make_source(const std::string& spec, double sample_rate_hz) {
  if (spec == "silence") return std::make_unique<SilenceSource>(sample_rate_hz);
  if (spec.rfind("tone:", 0) == 0) {
    const std::string rest = spec.substr(5);
    const auto colon = rest.find(':');
    try {
      const double hz = std::stod(rest.substr(0, colon));
      const double amp = colon == std::string::npos ? 0.5 : std::stod(rest.substr(colon + 1));
      return std::make_unique<ToneSource>(hz, amp, sample_rate_hz);
    } catch (const std::logic_error&) {
      throw std::invalid_argument(fmt::format("bad tone source '{}'", spec));
    }
  }
  return std::make_unique<FileSource>(spec, sample_rate_hz);
}

Subscriber::Subscriber(std::uint64_t id, SubscribeRequest request)
    : id_(id), request_(request) {}

SubscribeRequest Subscriber::request() const {
  std::lock_guard lock(mutex_);
  return request_;
}

void Subscriber::subscribe(const SubscribeRequest& request) {
  std::lock_guard lock(mutex_);
  request_ = request;
  active_ = true;
}

bool Subscriber::wants_frames() const {
  std::lock_guard lock(mutex_);
  return active_ && !closed_;
}

void Subscriber::push_frame(std::shared_ptr<const std::string> message) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    while (queued_frames_ >= request_.queue) {
      auto it = std::find_if(queue_.begin(), queue_.end(), [](const Item& i) { return i.frame; });
      queue_.erase(it);
      --queued_frames_;
      ++dropped_;
    }
    queue_.push_back({std::move(message), true});
    ++queued_frames_;
  }
  cv_.notify_all();
  notify();
}

void Subscriber::push_control(std::shared_ptr<const std::string> message) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    queue_.push_back({std::move(message), false});
  }
  cv_.notify_all();
  notify();
}

std::optional<std::shared_ptr<const std::string>> Subscriber::try_pop() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  Item item = std::move(queue_.front());
  queue_.pop_front();
  if (item.frame) --queued_frames_;
  return std::move(item.message);
}

std::optional<std::shared_ptr<const std::string>> Subscriber::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!cv_.wait_for(lock, timeout, [this] { return !queue_.empty() || closed_; })) return std::nullopt;
  if (queue_.empty()) return std::nullopt;
  Item item = std::move(queue_.front());
  queue_.pop_front();
  if (item.frame) --queued_frames_;
  return std::move(item.message);
}

void Subscriber::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
  notify();
}

bool Subscriber::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t Subscriber::dropped_frames() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

void Subscriber::set_notify(std::function<void()> notify) {
  std::lock_guard lock(mutex_);
  notify_ = std::move(notify);
}

void Subscriber::notify() {
  std::function<void()> fn;
  {
    std::lock_guard lock(mutex_);
    fn = notify_;
  }
  if (fn) fn();
}

StreamService::StreamService(ServiceOptions options, std::unique_ptr<AudioSource> source,
                             std::shared_ptr<PlaybackSink> sink)
    : options_(std::move(options)), source_(std::move(source)) {
  if (!source_) throw std::invalid_argument("service needs an audio source");
  if (source_->sample_rate_hz() != options_.analyzer.bank.sample_rate_hz) {
    throw std::invalid_argument("source rate differs from the analysis rate");
  }
  if (options_.block_samples == 0) throw std::invalid_argument("block size must be positive");
  options_.analyzer.phase_maps = true;
  analyzer_ = std::make_unique<Analyzer>(options_.analyzer);
  session_ = std::make_unique<Session>(options_.session, options_.analyzer.bank.sample_rate_hz,
                                       options_.start_mode, std::move(sink));
  session_->set_config_path(options_.config_path);
  analyzer_->level_meter().set_calibration(options_.session.calibration);
  paused_ = options_.start_mode == Mode::stopped;
  update_state_snapshot();
}

StreamService::~StreamService() { stop(); }

void StreamService::start() {
  if (running_) return;
  running_ = true;
  stopping_ = false;
  analysis_thread_ = std::thread([this] { analysis_loop(); });
  source_thread_ = std::thread([this] { source_loop(); });
}

void StreamService::stop() {
  stopping_ = true;
  intake_cv_.notify_all();
  if (source_thread_.joinable()) source_thread_.join();
  if (analysis_thread_.joinable()) analysis_thread_.join();
  std::vector<std::shared_ptr<Subscriber>> subs;
  {
    std::lock_guard lock(subscribers_mutex_);
    subs = subscribers_;
  }
  for (auto& s : subs) s->close();
  {
    std::lock_guard lock(wait_mutex_);
    running_ = false;
  }
  wait_cv_.notify_all();
}

void StreamService::wait() {
  std::unique_lock lock(wait_mutex_);
  wait_cv_.wait(lock, [this] { return !running_ || stopping_; });
}

double StreamService::frame_rate_hz() const {
  return options_.analyzer.bank.sample_rate_hz / options_.analyzer.hop_samples;
}

std::shared_ptr<Subscriber> StreamService::connect() {
  std::shared_ptr<Subscriber> sub;
  {
    std::lock_guard lock(subscribers_mutex_);
    sub = std::make_shared<Subscriber>(next_id_++, SubscribeRequest{});
    subscribers_.push_back(sub);
  }
  sub->push_control(shared_text(hello()));
  return sub;
}

void StreamService::disconnect(std::uint64_t id) {
  std::lock_guard lock(subscribers_mutex_);
  std::erase_if(subscribers_, [id](const auto& s) {
    if (s->id() != id) return false;
    s->close();
    return true;
  });
}

void StreamService::submit(ControlRequest request, std::shared_ptr<Subscriber> reply_to) {
  {
    std::lock_guard lock(intake_mutex_);
    commands_.push_back({std::move(request), std::move(reply_to)});
  }
  intake_cv_.notify_all();
}

nlohmann::json StreamService::hello() const {
  const auto& cfg = options_.analyzer;
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& ch : analyzer_->bank().channels()) centers.push_back(ch.center_hz);
  nlohmann::json state;
  {
    std::lock_guard lock(state_mutex_);
    state = state_snapshot_;
  }
  const auto& table = analyzer_->calibration();
  return {{"type", "hello"},
          {"schema", kSchemaVersion},
          {"service", "vocalscope"},
          {"source", source_->describe()},
          {"sample_rate_hz", cfg.bank.sample_rate_hz},
          {"hop_samples", cfg.hop_samples},
          {"frame_rate_hz", frame_rate_hz()},
          {"envelope", describe(cfg.bank.window)},
          {"c_mag", cfg.bank.stretch},
          {"bank", {{"f_lo_hz", cfg.bank.f_lo_hz}, {"per_octave", cfg.bank.per_octave},
                    {"centers_hz", centers}}},
          {"spectrum", {{"f_lo_hz", 50.0}, {"per_octave", 24}, {"bands", 176}}},
          {"waveform_points", kWireWaveformPoints},
          {"salience_threshold_db", cfg.salience_threshold_db},
          {"snr_table", {{"reference", to_string(table.setup.reference)},
                         {"min_db", table.min_snr_db()},
                         {"max_db", table.max_snr_db()}}},
          {"calibration", state.value("calibration", nlohmann::json(nullptr))},
          {"commands", session_commands()},
          {"state", state}};
}

void StreamService::update_state_snapshot() {
  auto state = session_->state_json(analyzer_->level_meter());
  std::lock_guard lock(state_mutex_);
  state_snapshot_ = std::move(state);
}

void StreamService::broadcast_control(const nlohmann::json& message) {
  const auto text = shared_text(message);
  std::vector<std::shared_ptr<Subscriber>> subs;
  {
    std::lock_guard lock(subscribers_mutex_);
    subs = subscribers_;
  }
  for (auto& s : subs) s->push_control(text);
}

void StreamService::publish(const AnalysisFrame& frame) {
  const std::uint64_t seq = published_++;
  std::vector<std::shared_ptr<Subscriber>> subs;
  {
    std::lock_guard lock(subscribers_mutex_);
    subs = subscribers_;
  }
  std::shared_ptr<const std::string> plain;
  std::shared_ptr<const std::string> with_maps;
  for (auto& s : subs) {
    if (!s->wants_frames()) continue;
    const auto req = s->request();
    if (req.fps > 0.0) {
      const auto every = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::llround(frame_rate_hz() / req.fps)));
      if (seq % every != 0) continue;
    }
    auto& text = req.phase_maps ? with_maps : plain;
    if (!text) text = shared_text(encode_frame(frame, seq, req.phase_maps));
    s->push_frame(text);
  }
}

void StreamService::run_commands() {
  std::deque<PendingCommand> pending;
  {
    std::lock_guard lock(intake_mutex_);
    pending.swap(commands_);
  }
  for (auto& cmd : pending) {
    auto& meter = analyzer_->level_meter();
    const auto outcome = session_->execute(cmd.request.command, cmd.request.arg, meter);
    paused_ = session_->mode() == Mode::stopped;
    update_state_snapshot();
    nlohmann::json ack = {{"type", "ack"},
                          {"id", cmd.request.id},
                          {"command", cmd.request.command},
                          {"ok", outcome.ok},
                          {"result", outcome.result},
                          {"state", session_->state_json(meter)}};
    if (!outcome.ok) ack["error"] = outcome.error;
    if (cmd.reply_to) cmd.reply_to->push_control(shared_text(ack));
    if (outcome.ok) {
      nlohmann::json state = {{"type", "state"}, {"state", session_->state_json(meter)}};
      broadcast_control(state);
    }
  }
}

void StreamService::source_loop() {
  const double fs = source_->sample_rate_hz();
  auto t0 = std::chrono::steady_clock::now();
  long long produced = 0;
  std::vector<double> block(options_.block_samples);
  while (!stopping_) {
    if (paused_) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      t0 = std::chrono::steady_clock::now();
      produced = 0;
      continue;
    }
    if (!options_.realtime) {
      std::unique_lock lock(intake_mutex_);
      intake_cv_.wait(lock, [this] { return intake_.size() < kMaxIntakeBlocksOffline || stopping_; });
      if (stopping_) break;
    }
    const std::size_t n = source_->read(block);
    {
      std::lock_guard lock(intake_mutex_);
      if (n == 0) {
        intake_.push_back({{}, true});
      } else {
        intake_.emplace_back(Block{std::vector<double>(block.begin(), block.begin() + static_cast<long>(n)), false});
      }
    }
    intake_cv_.notify_all();
    if (n == 0) break;
    produced += static_cast<long long>(n);
    if (options_.realtime) {
      std::this_thread::sleep_until(t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                             std::chrono::duration<double>(produced / fs)));
    }
  }
}

void StreamService::analysis_loop() {
  long long since_snapshot = 0;
  const auto snapshot_every = static_cast<long long>(options_.analyzer.bank.sample_rate_hz);
  while (true) {
    std::optional<Block> block;
    bool have_commands = false;
    {
      std::unique_lock lock(intake_mutex_);
      intake_cv_.wait(lock, [this] { return !intake_.empty() || !commands_.empty() || stopping_; });
      if (stopping_) break;
      have_commands = !commands_.empty();
      if (!have_commands && !intake_.empty()) {
        block = std::move(intake_.front());
        intake_.pop_front();
      }
    }
    intake_cv_.notify_all();
    if (have_commands) {
      run_commands();
      if (session_->quit_requested()) break;
      continue;
    }
    if (!block) continue;
    if (block->end) {
      analyzer_->finish();
      while (auto frame = analyzer_->pop()) publish(*frame);
      source_ended_ = true;
      update_state_snapshot();
      broadcast_control({{"type", "eos"}, {"frames", published_.load()}});
      continue;
    }
    if (session_->mode() != Mode::monitoring) continue;
    session_->on_input(block->samples);
    analyzer_->push(block->samples);
    while (auto frame = analyzer_->pop()) publish(*frame);
    since_snapshot += static_cast<long long>(block->samples.size());
    if (since_snapshot >= snapshot_every) {
      since_snapshot = 0;
      update_state_snapshot();
    }
  }
  stopping_ = true;
  intake_cv_.notify_all();
  {
    std::lock_guard lock(wait_mutex_);
  }
  wait_cv_.notify_all();
}

}  // namespace vocalscope
