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

// Offline front end: analyze, calibrate-snr, bench, dump-window.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include "vocalscope/analyzer.hpp"
#include "vocalscope/wav_io.hpp"

using namespace vocalscope;

namespace {

constexpr int kExitFormat = 2;
constexpr int kExitCalibration = 3;

struct CommonOptions {
  double hop_ms = 5.0;
  double f_lo = 80.0;
  double f_hi = 5000.0;
  int per_octave = 6;
  double c_mag = kDefaultStretch;
  double salience_db = kDefaultSalienceThresholdDb;
  std::string envelope = "six_term";
  std::string calibration;
};

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("--hop-ms", o.hop_ms, "Hop size in milliseconds")->capture_default_str();
  app.add_option("--f-lo", o.f_lo, "Lowest channel center (Hz)")->capture_default_str();
  app.add_option("--f-hi", o.f_hi, "Highest frequency to cover (Hz)")->capture_default_str();
  app.add_option("--per-octave", o.per_octave, "Channels per octave")->capture_default_str();
  app.add_option("--c-mag", o.c_mag, "Envelope stretch factor")->capture_default_str();
  app.add_option("--salience-db", o.salience_db, "Salience threshold for the best candidate")
      ->capture_default_str();
  app.add_option("--envelope", o.envelope, "six_term, hann, blackman, nuttall or kaiser")
      ->capture_default_str();
  app.add_option("--calibration", o.calibration, "SNR calibration table (default: built in)");
}

AnalyzerConfig analyzer_config(const CommonOptions& o, double fs = 44100.0) {
  AnalyzerConfig cfg;
  cfg.bank.f_lo_hz = o.f_lo;
  cfg.bank.f_hi_hz = o.f_hi;
  cfg.bank.per_octave = o.per_octave;
  cfg.bank.stretch = o.c_mag;
  cfg.bank.sample_rate_hz = fs;
  cfg.bank.window.kind = parse_envelope_kind(o.envelope);
  cfg.hop_samples = hop_samples_from_ms(o.hop_ms, fs);
  cfg.salience_threshold_db = o.salience_db;
  return cfg;
}

std::shared_ptr<const CalibrationTable> load_table(const CommonOptions& o) {
  if (o.calibration.empty()) return nullptr;
  std::ifstream in(o.calibration);
  if (!in) throw std::runtime_error(fmt::format("cannot open calibration '{}'", o.calibration));
  return std::make_shared<CalibrationTable>(read_calibration(in));
}

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

std::string csv_header() { return "t_s,f1,snr1,f2,snr2,f3,snr3,f4,snr4,salience,best"; }

std::string csv_row(const AnalysisFrame& frame, double fs) {
  std::string row = fmt::format("{}", static_cast<double>(frame.sample_index) / fs);
  for (std::size_t i = 0; i < kMaxCandidates; ++i) {
    if (i < frame.candidates.size()) {
      row += fmt::format(",{},{}", frame.candidates[i].freq_hz, frame.candidates[i].snr_db);
    } else {
      row += ",,";
    }
  }
  row += fmt::format(",{},", frame.salience_db);
  if (frame.best) row += fmt::format("{}", frame.best->candidate.freq_hz);
  return row;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::trunc);
      if (!file_) throw std::runtime_error(fmt::format("cannot write '{}'", path));
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int run_analyze(const CommonOptions& o, const std::string& input, const std::string& output) {
  MonoAudio audio;
  try {
    audio = load_mono(input, 44100.0);
  } catch (const FormatError& e) {
    fmt::print(stderr, "format error: {}\n", e.what());
    return kExitFormat;
  } catch (const std::runtime_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFormat;
  }
  const auto cfg = analyzer_config(o, audio.sample_rate_hz);
  auto config = cfg;
  config.spectrum = false;
  config.aligned_waveform = false;
  const auto frames = analyze_signal(config, audio.samples, load_table(o));
  Output out(output);
  auto& s = out.stream();
  s << csv_header() << '\n';
  for (const auto& f : frames) s << csv_row(f, audio.sample_rate_hz) << '\n';
  return 0;
}

struct CalibrateArgs {
  std::string output;
  std::string curve;
  std::string reference = "in_band";
  double grid_min = 0.0;
  double grid_max = 80.0;
  double grid_step = 5.0;
  double tolerance = 0.02;
  double duration = 2.0;
  std::uint64_t seed = 1;
  std::string created;
};

std::string today() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm t{};
  gmtime_r(&now, &t);
  return fmt::format("{:04}-{:02}-{:02}", t.tm_year + 1900, t.tm_mon + 1, t.tm_mday);
}

int run_calibrate(const CommonOptions& o, const CalibrateArgs& a) {
  const auto cfg = analyzer_config(o);
  CalibrationSetup setup;
  setup.window = cfg.bank.window;
  setup.stretch = cfg.bank.stretch;
  setup.per_octave = cfg.bank.per_octave;
  setup.hop_samples = cfg.hop_samples;
  setup.reference = parse_snr_reference(a.reference);
  setup.duration_s = a.duration;
  setup.seed = a.seed;
  std::vector<double> grid;
  for (double s = a.grid_min; s <= a.grid_max + 1e-9; s += a.grid_step) grid.push_back(s);
  CalibrationOptions options;
  options.monotone_tolerance = a.tolerance;
  options.created = a.created.empty() ? today() : a.created;

  CalibrationReport report;
  try {
    report = calibrate(setup, grid, options);
  } catch (const CalibrationError& e) {
    fmt::print(stderr, "calibration failed: {}\n", e.what());
    return kExitCalibration;
  }

  if (!a.curve.empty()) {
    Output curve(a.curve);
    auto& s = curve.stream();
    s << "true_snr_db,variation,pooled,verified_snr_db,error_db,flagged\n";
    for (const auto& p : report.points) {
      const std::optional<double> err =
          p.verified_snr_db ? std::optional<double>(*p.verified_snr_db - p.true_snr_db) : std::nullopt;
      s << fmt::format("{},{},{},{},{},{}\n", p.true_snr_db, p.variation, p.pooled ? 1 : 0,
                       opt(p.verified_snr_db), opt(err), p.flagged ? 1 : 0);
    }
  }
  for (const auto& p : report.points) {
    if (!p.flagged) continue;
    if (p.verified_snr_db) {
      fmt::print(stderr, "warning: {} dB point{} re-estimates as {:.2f} dB\n", p.true_snr_db,
                 p.pooled ? " (pooled)" : "", *p.verified_snr_db);
    } else {
      fmt::print(stderr, "warning: {} dB point pooled\n", p.true_snr_db);
    }
  }
  fmt::print(stderr, "{} knots, max verification error {:.2f} dB\n", report.table.knots.size(),
             report.max_abs_error_db);
  Output out(a.output);
  write_calibration(out.stream(), report.table);
  return 0;
}

struct BenchResult {
  std::string name;
  int hop = 0;
  std::size_t channels = 0;
  double seconds = 0.0;
  double realtime_factor = 0.0;
  std::optional<double> floor;
};

std::vector<double> bench_signal(double seconds) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> x(static_cast<std::size_t>(seconds * 44100.0));
  for (std::size_t n = 0; n < x.size(); ++n) {
    x[n] = 0.3 * std::cos(2.0 * std::numbers::pi * 220.0 * static_cast<double>(n) / 44100.0) + noise(rng);
  }
  return x;
}

double time_it(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// One channel (plus its upper neighbor for group delay) through
// attributes and SNR.
double bench_single(const std::vector<double>& x, int hop, double c_mag,
                    const CalibrationTable& table) {
  BankSpec spec;
  spec.f_lo_hz = 120.0;
  spec.f_hi_hz = 120.0 * std::exp2(1.0 / 6.0);
  spec.stretch = c_mag;
  auto bank = std::make_shared<const ChannelBank>(spec);
  return time_it([&] {
    StreamOptions so;
    so.hop_samples = hop;
    so.smoothed_if = false;
    FilterbankStream stream(bank, so);
    ChannelSnrTracker tracker(bank->size(), table.setup.window_frames);
    stream.push(x);
    stream.finish();
    while (auto h = stream.pop()) {
      auto frame = assemble_attribute_frame(*bank, *h);
      tracker.update(frame, table);
    }
  });
}

int run_bench(const CommonOptions& o, double seconds, const std::string& csv_path) {
  const auto cfg = analyzer_config(o);
  const auto x = bench_signal(seconds);
  const auto table = load_table(o) ? load_table(o) : default_calibration(cfg.geometry());
  std::vector<BenchResult> results;

  results.push_back({"single_channel", cfg.hop_samples, 2, 0.0, 0.0, 50.0});
  results.back().seconds = bench_single(x, cfg.hop_samples, cfg.bank.stretch, *table);

  {
    BenchResult r{"full_bank", cfg.hop_samples, 0, 0.0, 0.0, 1.0};
    r.seconds = time_it([&] {
      Analyzer analyzer(cfg, table);
      r.channels = analyzer.bank().size();
      analyzer.push(x);
      analyzer.finish();
      while (analyzer.pop()) {
      }
    });
    results.push_back(r);
  }

  {
    // Audio-rate mode on a shorter excerpt; informational.
    const std::vector<double> excerpt(x.begin(), x.begin() + static_cast<long>(std::min<std::size_t>(x.size(), 22050)));
    BenchResult r{"single_channel_hop1", 1, 2, 0.0, 0.0, std::nullopt};
    CalibrationTable hop1 = *table;
    hop1.setup.hop_samples = 1;
    r.seconds = bench_single(excerpt, 1, cfg.bank.stretch, hop1) * static_cast<double>(x.size()) /
                static_cast<double>(excerpt.size());
    results.push_back(r);
  }

  for (auto& r : results) r.realtime_factor = seconds / r.seconds;

  fmt::print("machine: {} hardware threads; input {} s at 44100 Hz; hop {} samples\n",
             std::thread::hardware_concurrency(), seconds, cfg.hop_samples);
  for (const auto& r : results) {
    std::string verdict = "info";
    if (r.floor) verdict = r.realtime_factor >= *r.floor ? "PASS" : "FAIL";
    fmt::print("{:<22} hop {:>4}  channels {:>2}  {:9.1f}x real time  [{}{}]\n", r.name, r.hop,
               r.channels, r.realtime_factor, verdict,
               r.floor ? fmt::format(" >= {}x", *r.floor) : std::string());
  }
  if (!csv_path.empty()) {
    Output out(csv_path);
    out.stream() << "name,hop_samples,channels,seconds,realtime_factor,floor\n";
    for (const auto& r : results) {
      out.stream() << fmt::format("{},{},{},{},{},{}\n", r.name, r.hop, r.channels, r.seconds,
                                  r.realtime_factor, opt(r.floor));
    }
  }
  return 0;
}

int run_dump_window(const std::string& envelope, double fc, double c_mag, double fs,
                    const std::string& output) {
  WindowSpec spec;
  spec.kind = parse_envelope_kind(envelope);
  const auto h = analytic_impulse_response(fc, c_mag, fs, spec);
  Output out(output);
  auto& s = out.stream();
  s << "t_s,real,imag\n";
  for (std::size_t i = 0; i < h.length(); ++i) {
    s << fmt::format("{},{},{}\n", h.time_of(i), h.samples[i].real(), h.samples[i].imag());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vocalscope: f0 candidate analysis with phase attributes"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string input;
  std::string output;

  auto* analyze = app.add_subcommand("analyze", "Candidate trajectories of a WAV file as CSV");
  add_common(*analyze, common);
  analyze->add_option("input", input, "Input WAV file")->required();
  analyze->add_option("-o,--output", output, "Output CSV (default stdout)");

  CalibrateArgs cal;
  auto* calibrate_cmd = app.add_subcommand("calibrate-snr", "Regenerate the SNR calibration table");
  add_common(*calibrate_cmd, common);
  calibrate_cmd->add_option("-o,--output", cal.output, "Table file (default stdout)");
  calibrate_cmd->add_option("--curve", cal.curve, "Measured curve CSV");
  calibrate_cmd->add_option("--reference", cal.reference, "in_band or full_band")->capture_default_str();
  calibrate_cmd->add_option("--grid-min", cal.grid_min)->capture_default_str();
  calibrate_cmd->add_option("--grid-max", cal.grid_max)->capture_default_str();
  calibrate_cmd->add_option("--grid-step", cal.grid_step)->capture_default_str();
  calibrate_cmd->add_option("--monotone-tolerance", cal.tolerance,
                            "Relative rise pooled before failing")->capture_default_str();
  calibrate_cmd->add_option("--duration", cal.duration, "Mixture length (s)")->capture_default_str();
  calibrate_cmd->add_option("--seed", cal.seed)->capture_default_str();
  calibrate_cmd->add_option("--created", cal.created, "Date recorded in the table");

  double bench_seconds = 4.0;
  std::string bench_csv;
  auto* bench = app.add_subcommand("bench", "Throughput in multiples of real time");
  add_common(*bench, common);
  bench->add_option("--seconds", bench_seconds, "Signal length")->capture_default_str();
  bench->add_option("--csv", bench_csv, "Also write results as CSV");

  std::string win_kind = "six_term";
  double win_fc = 441.0;
  double win_cmag = kDefaultStretch;
  double win_fs = 44100.0;
  auto* dump = app.add_subcommand("dump-window", "Analytic impulse response as CSV");
  dump->add_option("--envelope", win_kind)->capture_default_str();
  dump->add_option("--fc", win_fc, "Carrier frequency (Hz)")->capture_default_str();
  dump->add_option("--c-mag", win_cmag)->capture_default_str();
  dump->add_option("--fs", win_fs)->capture_default_str();
  dump->add_option("-o,--output", output, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*analyze) return run_analyze(common, input, output);
    if (*calibrate_cmd) return run_calibrate(common, cal);
    if (*bench) return run_bench(common, bench_seconds, bench_csv);
    if (*dump) return run_dump_window(win_kind, win_fc, win_cmag, win_fs, output);
  } catch (const CalibrationMismatch& e) {
    fmt::print(stderr, "calibration mismatch: {}\n", e.what());
    return kExitCalibration;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "invalid argument: {}\n", e.what());
    return kExitFormat;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
