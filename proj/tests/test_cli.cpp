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

#include <doctest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "vocalscope/snr_estimator.hpp"
#include "vocalscope/wav_io.hpp"

using namespace vocalscope;

namespace {

int run(const std::string& args) {
  const std::string cmd = fmt::format("'{}' {} >/dev/null 2>&1", VOCALSCOPE_CLI, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("analyze writes one record per hop") {
  testing::TempDir dir;
  write_wav(dir / "a.wav", testing::sine(220.0, 1.0, 0.5), 44100.0, 24);
  REQUIRE(run(fmt::format("analyze '{}' -o '{}'", (dir / "a.wav").string(), (dir / "a.csv").string())) == 0);
  const auto rows = read_csv(dir / "a.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == std::vector<std::string>{"t_s", "f1", "snr1", "f2", "snr2", "f3", "snr3", "f4",
                                            "snr4", "salience", "best"});
  CHECK(rows.size() - 1 == (44100 + 219) / 220);
  double prev_t = -1.0;
  int checked = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 11);
    const double t = std::stod(rows[i][0]);
    CHECK(t > prev_t);
    prev_t = t;
    // Past warm-up and before the tail.
    if (t < 0.2 || t > 0.8) continue;
    REQUIRE_FALSE(rows[i][10].empty());
    CHECK(std::abs(std::stod(rows[i][10]) - 220.0) <= 1.0);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("silence gives empty candidate fields") {
  testing::TempDir dir;
  write_wav(dir / "s.wav", std::vector<double>(22050, 0.0), 44100.0, 16);
  REQUIRE(run(fmt::format("analyze '{}' -o '{}'", (dir / "s.wav").string(), (dir / "s.csv").string())) == 0);
  const auto rows = read_csv(dir / "s.csv");
  REQUIRE(rows.size() > 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 11);
    for (std::size_t c = 1; c <= 8; ++c) CHECK(rows[i][c].empty());
    CHECK(rows[i][10].empty());
  }
}

TEST_CASE("a glide reads as a rising best frequency") {
  testing::TempDir dir;
  write_wav(dir / "g.wav", testing::glide(200.0, 400.0, 2.0), 44100.0, 24);
  REQUIRE(run(fmt::format("analyze '{}' -o '{}'", (dir / "g.wav").string(), (dir / "g.csv").string())) == 0);
  const auto rows = read_csv(dir / "g.csv");
  double prev = 0.0;
  int checked = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double t = std::stod(rows[i][0]);
    if (t < 0.2 || t > 1.8 || rows[i][10].empty()) continue;
    const double best = std::stod(rows[i][10]);
    const double expected = 200.0 + 100.0 * t;
    CHECK(best == doctest::Approx(expected).epsilon(0.02));
    CHECK(best >= prev * 0.98);
    prev = best;
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("analyze is deterministic") {
  testing::TempDir dir;
  write_wav(dir / "v.wav", testing::vowel(180.0, 0.8), 44100.0, 24);
  const auto in = (dir / "v.wav").string();
  REQUIRE(run(fmt::format("analyze '{}' -o '{}'", in, (dir / "1.csv").string())) == 0);
  REQUIRE(run(fmt::format("analyze '{}' -o '{}'", in, (dir / "2.csv").string())) == 0);
  CHECK(slurp(dir / "1.csv") == slurp(dir / "2.csv"));
}

TEST_CASE("exit codes") {
  testing::TempDir dir;
  CHECK(run("analyze /nonexistent/file.wav") == 2);
  std::ofstream(dir / "junk.wav") << "RIFF1234WAVEfmt ";
  CHECK(run(fmt::format("analyze '{}'", (dir / "junk.wav").string())) == 2);
  CHECK(run("analyze") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("--help") == 0);

  write_wav(dir / "a.wav", testing::sine(220.0, 0.2), 44100.0, 16);
  const auto table = (std::filesystem::path(VOCALSCOPE_SOURCE_DIR) / "data/snr_six_term_44100.cal").string();
  CHECK(run(fmt::format("analyze --calibration '{}' '{}' -o '{}'", table, (dir / "a.wav").string(),
                        (dir / "ok.csv").string())) == 0);
  CHECK(run(fmt::format("analyze --calibration '{}' --hop-ms 10 '{}'", table, (dir / "a.wav").string())) == 3);
  CHECK(run(fmt::format("calibrate-snr --monotone-tolerance -0.5 -o '{}'", (dir / "bad.cal").string())) == 3);
  CHECK_FALSE(std::filesystem::exists(dir / "bad.cal"));
}

TEST_CASE("calibrate-snr writes a table and a curve") {
  testing::TempDir dir;
  REQUIRE(run(fmt::format("calibrate-snr --envelope hann --created t -o '{}' --curve '{}'",
                          (dir / "h.cal").string(), (dir / "h.csv").string())) == 0);
  std::ifstream in(dir / "h.cal");
  const auto table = read_calibration(in);
  CHECK(table.knots.size() >= 15);
  CHECK(table.min_snr_db() <= 10.0);
  CHECK(table.max_snr_db() == 80.0);
  CHECK(table.any_flagged());
  const auto curve = read_csv(dir / "h.csv");
  CHECK(curve[0].front() == "true_snr_db");
  CHECK(curve.size() == table.knots.size() + 1);
}

TEST_CASE("dump-window") {
  testing::TempDir dir;
  REQUIRE(run(fmt::format("dump-window --fc 441 -o '{}'", (dir / "w.csv").string())) == 0);
  const auto rows = read_csv(dir / "w.csv");
  REQUIRE(rows.size() == 526);
  CHECK(rows[0] == std::vector<std::string>{"t_s", "real", "imag"});
  CHECK(std::stod(rows[263][0]) == 0.0);
  CHECK(std::stod(rows[263][1]) == 1.0);
  CHECK(std::stod(rows[263][2]) == 0.0);
  for (std::size_t r : {1u, 525u}) {
    CHECK(std::hypot(std::stod(rows[r][1]), std::stod(rows[r][2])) < 1e-6);
  }
  CHECK(run("dump-window --fc 30000") == 2);
}

TEST_CASE("bench reports both throughputs") {
  testing::TempDir dir;
  REQUIRE(run(fmt::format("bench --seconds 1 --csv '{}'", (dir / "b.csv").string())) == 0);
  const auto rows = read_csv(dir / "b.csv");
  REQUIRE(rows.size() >= 3);
  std::string all;
  for (const auto& r : rows) all += r[0] + ";";
  CHECK(all.find("single_channel") != std::string::npos);
  CHECK(all.find("full_bank") != std::string::npos);
}

}
