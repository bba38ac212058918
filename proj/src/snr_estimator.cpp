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

#include "vocalscope/snr_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace vocalscope {
namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::runtime_error("median of an empty series");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

ChannelBank calibration_bank(const CalibrationSetup& setup) {
  BankSpec spec;
  spec.f_lo_hz = setup.channel_hz;
  spec.f_hi_hz = setup.channel_hz * std::exp2(1.0 / setup.per_octave);
  spec.per_octave = setup.per_octave;
  spec.stretch = setup.stretch;
  spec.sample_rate_hz = setup.sample_rate_hz;
  spec.window = setup.window;
  return ChannelBank(spec);
}

// Noise standard deviation giving the requested SNR under the setup's
// reference definition, for a unit-amplitude cosine.
double noise_sigma(const CalibrationSetup& setup, const ChannelBank& bank, double snr_db) {
  const double ratio = std::pow(10.0, snr_db / 10.0);
  if (setup.reference == SnrReference::full_band) {
    return std::sqrt(0.5 / ratio);
  }
  const auto& response = bank.channel(0).response;
  std::complex<double> gain{0.0, 0.0};
  double energy = 0.0;
  for (std::size_t i = 0; i < response.length(); ++i) {
    const double t = response.time_of(i);
    gain += response.samples[i] *
            std::polar(1.0, -2.0 * std::numbers::pi * setup.tone_hz * t);
    energy += std::norm(response.samples[i]);
  }
  // Output powers: cosine -> |H(f)|^2 / 4, white noise -> sigma^2 sum |h|^2.
  return std::sqrt(std::norm(gain) / (4.0 * energy * ratio));
}

}  // namespace

VariationMeasure mix_variation(std::span<const double> norm_inst_freq,
                               std::span<const double> norm_group_delay,
                               int window_frames, int channel_index) {
  if (window_frames < 2) {
    throw std::invalid_argument("variation window needs at least two frames");
  }
  const auto w = static_cast<std::size_t>(window_frames);
  if (norm_inst_freq.size() < w || norm_group_delay.size() < w) {
    throw std::invalid_argument(fmt::format(
        "insufficient frames: need {}, have {} / {}", window_frames,
        norm_inst_freq.size(), norm_group_delay.size()));
  }
  const auto nu = norm_inst_freq.last(w);
  const auto tau = norm_group_delay.last(w);
  double sum = 0.0;
  for (std::size_t m = 1; m < w; ++m) {
    const double dn = nu[m] - nu[m - 1];
    const double dt = tau[m] - tau[m - 1];
    sum += (dn * dn + dt * dt) / 2.0;
  }
  return {channel_index, std::sqrt(sum / static_cast<double>(w - 1)), window_frames};
}

std::string_view to_string(SnrReference reference) {
  return reference == SnrReference::in_band ? "in_band" : "full_band";
}

SnrReference parse_snr_reference(std::string_view name) {
  if (name == "in_band") return SnrReference::in_band;
  if (name == "full_band") return SnrReference::full_band;
  throw std::invalid_argument(fmt::format("unknown SNR reference '{}'", name));
}

double CalibrationTable::min_snr_db() const {
  return knots.empty() ? 0.0 : knots.front().snr_db;
}

double CalibrationTable::max_snr_db() const {
  return knots.empty() ? 0.0 : knots.back().snr_db;
}

bool CalibrationTable::any_flagged() const {
  return std::any_of(knots.begin(), knots.end(),
                     [](const CalibrationKnot& k) { return k.flagged; });
}

void check_compatible(const CalibrationTable& table, const AnalysisGeometry& g) {
  const auto& s = table.setup;
  auto fail = [](const std::string& field, const std::string& table_value,
                 const std::string& wanted) {
    throw CalibrationMismatch(fmt::format(
        "calibration table {} is {}, analysis uses {}", field, table_value, wanted));
  };
  if (!(s.window == g.window)) fail("envelope", describe(s.window), describe(g.window));
  if (std::abs(s.stretch - g.stretch) > 1e-12 * g.stretch) {
    fail("c_mag", fmt::format("{}", s.stretch), fmt::format("{}", g.stretch));
  }
  if (s.sample_rate_hz != g.sample_rate_hz) {
    fail("sample rate", fmt::format("{}", s.sample_rate_hz), fmt::format("{}", g.sample_rate_hz));
  }
  if (s.per_octave != g.per_octave) {
    fail("channels per octave", std::to_string(s.per_octave), std::to_string(g.per_octave));
  }
  if (s.hop_samples != g.hop_samples) {
    fail("hop", std::to_string(s.hop_samples), std::to_string(g.hop_samples));
  }
  if (s.window_frames != g.window_frames) {
    fail("window frames", std::to_string(s.window_frames), std::to_string(g.window_frames));
  }
  if (table.knots.size() < 2) throw CalibrationMismatch("calibration table has fewer than two knots");
}

bool is_compatible(const CalibrationTable& table, const AnalysisGeometry& geometry) {
  try {
    check_compatible(table, geometry);
    return true;
  } catch (const CalibrationMismatch&) {
    return false;
  }
}

double estimate_snr(const VariationMeasure& variation, const CalibrationTable& table) {
  const auto& knots = table.knots;
  if (knots.size() < 2) throw CalibrationMismatch("calibration table has fewer than two knots");
  const double v = variation.value;
  if (v >= knots.front().variation) return knots.front().snr_db;
  if (v <= knots.back().variation) return kSnrCeilingDb;
  const double lv = std::log(v);
  // Variation decreases along the table.
  auto it = std::lower_bound(knots.begin(), knots.end(), v,
                             [](const CalibrationKnot& k, double value) {
                               return k.variation > value;
                             });
  const auto& hi = *it;          // variation <= v
  const auto& lo = *(it - 1);    // variation > v
  if (hi.variation == v) return std::min(hi.snr_db, kSnrCeilingDb);
  const double a = std::log(lo.variation);
  const double b = std::log(hi.variation);
  const double frac = (lv - a) / (b - a);
  return std::min(lo.snr_db + frac * (hi.snr_db - lo.snr_db), kSnrCeilingDb);
}

double estimate_snr(const VariationMeasure& variation, const CalibrationTable& table,
                    const AnalysisGeometry& geometry) {
  check_compatible(table, geometry);
  return estimate_snr(variation, table);
}

std::vector<double> mixture_variations(const CalibrationSetup& setup, double snr_db,
                                       std::uint64_t seed) {
  auto bank = std::make_shared<const ChannelBank>(calibration_bank(setup));
  const double sigma = noise_sigma(setup, *bank, snr_db);

  const auto count = static_cast<std::size_t>(std::lround(setup.duration_s * setup.sample_rate_hz));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double phase = phase_dist(rng);
  const double omega = 2.0 * std::numbers::pi * setup.tone_hz / setup.sample_rate_hz;
  std::vector<double> x(count);
  for (std::size_t n = 0; n < count; ++n) {
    x[n] = std::cos(omega * static_cast<double>(n) + phase) + sigma * noise(rng);
  }

  StreamOptions options;
  options.hop_samples = setup.hop_samples;
  options.smoothed_if = false;
  FilterbankStream stream(bank, options);
  stream.push(x);
  stream.finish();

  std::vector<double> nu;
  std::vector<double> tau;
  std::vector<double> variations;
  while (auto hop = stream.pop()) {
    if (hop->warmup || hop->tail) continue;
    const auto frame = assemble_attribute_frame(*bank, *hop);
    const auto& attr = frame.channels[0];
    if (!attr.norm_inst_freq || !attr.norm_group_delay) {
      nu.clear();
      tau.clear();
      continue;
    }
    nu.push_back(*attr.norm_inst_freq);
    tau.push_back(*attr.norm_group_delay);
    if (nu.size() >= static_cast<std::size_t>(setup.window_frames)) {
      variations.push_back(mix_variation(nu, tau, setup.window_frames).value);
    }
  }
  if (variations.empty()) {
    throw std::runtime_error("calibration mixture too short for one variation window");
  }
  return variations;
}

double measure_variation(const CalibrationSetup& setup, double snr_db, std::uint64_t seed) {
  return median_of(mixture_variations(setup, snr_db, seed));
}

double measure_snr(const CalibrationSetup& setup, const CalibrationTable& table,
                   double snr_db, std::uint64_t seed) {
  auto variations = mixture_variations(setup, snr_db, seed);
  for (auto& v : variations) {
    v = estimate_snr(VariationMeasure{0, v, setup.window_frames}, table);
  }
  return median_of(std::move(variations));
}

std::vector<double> default_snr_grid() {
  std::vector<double> grid;
  for (int db = 0; db <= 80; db += 5) grid.push_back(db);
  return grid;
}

CalibrationReport calibrate(const CalibrationSetup& setup, std::span<const double> snr_grid,
                            const CalibrationOptions& options) {
  if (snr_grid.size() < 2 || !std::is_sorted(snr_grid.begin(), snr_grid.end()) ||
      snr_grid.front() > 10.0 || snr_grid.back() < 80.0) {
    throw std::invalid_argument("SNR grid must ascend and cover [10, 80] dB");
  }
  for (std::size_t i = 1; i < snr_grid.size(); ++i) {
    const double step = snr_grid[i] - snr_grid[i - 1];
    if (step <= 0.0 || step > 5.0 + 1e-9) {
      throw std::invalid_argument("SNR grid steps must be positive and at most 5 dB");
    }
  }

  CalibrationReport report;
  report.points.resize(snr_grid.size());
  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    report.points[i].true_snr_db = snr_grid[i];
    report.points[i].variation = measure_variation(setup, snr_grid[i], setup.seed);
  }

  std::vector<CalibrationPoint> offending;
  for (std::size_t i = 1; i < report.points.size(); ++i) {
    if (report.points[i].variation >
        report.points[i - 1].variation * (1.0 + options.monotone_tolerance)) {
      offending.push_back(report.points[i - 1]);
      offending.push_back(report.points[i]);
    }
  }
  if (!offending.empty()) {
    std::string detail;
    for (std::size_t i = 0; i + 1 < offending.size(); i += 2) {
      detail += fmt::format(" [{} dB: {:.6g} -> {} dB: {:.6g}]", offending[i].true_snr_db,
                            offending[i].variation, offending[i + 1].true_snr_db,
                            offending[i + 1].variation);
    }
    throw CalibrationError("measured variation is not monotone in SNR:" + detail,
                           std::move(offending));
  }

  // Pool adjacent violators in log(variation) so the table strictly decreases.
  struct Block {
    double log_sum = 0.0;
    double snr_sum = 0.0;
    std::size_t first = 0;
    std::size_t count = 0;
    double mean() const { return log_sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    blocks.push_back({std::log(report.points[i].variation), report.points[i].true_snr_db, i, 1});
    while (blocks.size() >= 2 && blocks.back().mean() >= blocks[blocks.size() - 2].mean()) {
      Block last = blocks.back();
      blocks.pop_back();
      auto& prev = blocks.back();
      prev.log_sum += last.log_sum;
      prev.snr_sum += last.snr_sum;
      prev.count += last.count;
    }
  }
  if (blocks.size() < 2) {
    throw CalibrationError("measured variation is flat over the whole grid", report.points);
  }

  auto& table = report.table;
  table.setup = setup;
  table.created = options.created;
  for (const auto& block : blocks) {
    const bool pooled = block.count > 1;
    for (std::size_t i = block.first; i < block.first + block.count; ++i) {
      report.points[i].pooled = pooled;
    }
    table.knots.push_back({std::exp(block.mean()),
                           block.snr_sum / static_cast<double>(block.count), pooled});
  }

  if (options.verify) {
    for (std::size_t i = 0; i < report.points.size(); ++i) {
      auto& point = report.points[i];
      point.verified_snr_db =
          measure_snr(setup, table, point.true_snr_db, options.verify_seed);
      const double error = *point.verified_snr_db - point.true_snr_db;
      report.max_abs_error_db = std::max(report.max_abs_error_db, std::abs(error));
      point.flagged = std::abs(error) > options.error_tolerance_db;
    }
    std::size_t i = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t j = 0; j < blocks[b].count; ++j, ++i) {
        if (report.points[i].flagged) table.knots[b].flagged = true;
      }
    }
  }
  for (auto& point : report.points) point.flagged = point.flagged || point.pooled;
  return report;
}

void write_calibration(std::ostream& out, const CalibrationTable& table) {
  out << format_calibration(table);
}

std::string format_calibration(const CalibrationTable& table) {
  const auto& s = table.setup;
  std::string text = "# vocalscope SNR calibration table\n";
  auto kv = [&text](std::string_view key, const auto& value) {
    text += fmt::format("{} = {}\n", key, value);
  };
  kv("version", table.version);
  kv("envelope", to_string(s.window.kind));
  kv("kaiser_beta", s.window.kaiser_beta);
  kv("c_mag", s.stretch);
  kv("sample_rate_hz", s.sample_rate_hz);
  kv("per_octave", s.per_octave);
  kv("hop_samples", s.hop_samples);
  kv("window_frames", s.window_frames);
  kv("tone_hz", s.tone_hz);
  kv("channel_hz", s.channel_hz);
  kv("snr_reference", to_string(s.reference));
  kv("duration_s", s.duration_s);
  kv("seed", s.seed);
  kv("created", table.created.empty() ? std::string("unknown") : table.created);
  kv("knots", table.knots.size());
  text += "[knots]\nvariation,snr_db,flagged\n";
  for (const auto& knot : table.knots) {
    text += fmt::format("{},{},{}\n", knot.variation, knot.snr_db, knot.flagged ? 1 : 0);
  }
  return text;
}

CalibrationTable read_calibration(std::istream& in) {
  CalibrationTable table;
  std::map<std::string, std::string> header;
  std::string line;
  bool in_knots = false;
  bool saw_columns = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!in_knots) {
      if (t == "[knots]") {
        in_knots = true;
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error(fmt::format("calibration line {}: expected key = value", line_no));
      }
      header[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
      continue;
    }
    if (!saw_columns) {
      if (t != "variation,snr_db,flagged") {
        throw std::runtime_error(fmt::format("calibration line {}: bad knot header", line_no));
      }
      saw_columns = true;
      continue;
    }
    std::istringstream row(t);
    CalibrationKnot knot;
    char c1 = 0;
    char c2 = 0;
    int flag = 0;
    if (!(row >> knot.variation >> c1 >> knot.snr_db >> c2 >> flag) || c1 != ',' || c2 != ',') {
      throw std::runtime_error(fmt::format("calibration line {}: bad knot row", line_no));
    }
    knot.flagged = flag != 0;
    table.knots.push_back(knot);
  }

  auto get = [&header](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw std::runtime_error("calibration table lacks '" + key + "'");
    return it->second;
  };
  try {
    table.version = std::stoi(get("version"));
    if (table.version != kCalibrationVersion) {
      throw std::runtime_error(fmt::format("unsupported calibration version {}", table.version));
    }
    auto& s = table.setup;
    s.window.kind = parse_envelope_kind(get("envelope"));
    s.window.kaiser_beta = std::stod(get("kaiser_beta"));
    s.stretch = std::stod(get("c_mag"));
    s.sample_rate_hz = std::stod(get("sample_rate_hz"));
    s.per_octave = std::stoi(get("per_octave"));
    s.hop_samples = std::stoi(get("hop_samples"));
    s.window_frames = std::stoi(get("window_frames"));
    s.tone_hz = std::stod(get("tone_hz"));
    s.channel_hz = std::stod(get("channel_hz"));
    s.reference = parse_snr_reference(get("snr_reference"));
    s.duration_s = std::stod(get("duration_s"));
    s.seed = std::stoull(get("seed"));
    table.created = get("created");
    if (std::stoul(get("knots")) != table.knots.size()) {
      throw std::runtime_error("calibration knot count does not match header");
    }
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("calibration header: ") + e.what());
  }
  for (std::size_t i = 1; i < table.knots.size(); ++i) {
    if (!(table.knots[i].variation < table.knots[i - 1].variation) ||
        !(table.knots[i].snr_db > table.knots[i - 1].snr_db)) {
      throw std::runtime_error("calibration knots are not monotone");
    }
  }
  if (table.knots.size() < 2) throw std::runtime_error("calibration table has fewer than two knots");
  return table;
}

CalibrationTable parse_calibration(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_calibration(in);
}

ChannelSnrTracker::ChannelSnrTracker(std::size_t channels, int window_frames)
    : window_frames_(window_frames), history_(channels) {
  if (window_frames < 2) throw std::invalid_argument("variation window needs at least two frames");
}

void ChannelSnrTracker::update(AttributeFrame& frame, const CalibrationTable& table) {
  if (frame.channels.size() != history_.size()) {
    throw std::invalid_argument("attribute frame does not match tracker channel count");
  }
  const auto w = static_cast<std::size_t>(window_frames_);
  for (std::size_t k = 0; k < history_.size(); ++k) {
    auto& h = history_[k];
    auto& attr = frame.channels[k];
    if (attr.norm_inst_freq && attr.norm_group_delay) {
      h.norm_if.push_back(*attr.norm_inst_freq);
      h.norm_gd.push_back(*attr.norm_group_delay);
      if (h.norm_if.size() > w) {
        h.norm_if.erase(h.norm_if.begin());
        h.norm_gd.erase(h.norm_gd.begin());
      }
      ++h.valid_run;
    } else {
      h.norm_if.clear();
      h.norm_gd.clear();
      h.valid_run = 0;
    }
    if (auto v = variation(k)) attr.snr_db = estimate_snr(*v, table);
  }
}

std::optional<VariationMeasure> ChannelSnrTracker::variation(std::size_t k) const {
  const auto& h = history_.at(k);
  if (h.valid_run < window_frames_) return std::nullopt;
  return mix_variation(h.norm_if, h.norm_gd, window_frames_, static_cast<int>(k));
}

void ChannelSnrTracker::reset() {
  for (auto& h : history_) {
    h.norm_if.clear();
    h.norm_gd.clear();
    h.valid_run = 0;
  }
}

}  // namespace vocalscope
