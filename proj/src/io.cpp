// Copyright 2026 The omtrir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "omtrir/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "omtrir/error.hpp"

namespace omtrir::io {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes little endian");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

std::string extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > buf.size()) throw Error("truncated WAV file " + path.string());
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

double parse_number(const std::string& s, const std::filesystem::path& path, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  while (end != nullptr && (*end == ' ' || *end == '\t')) ++end;
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error("bad number '" + s + "' at " + path.string() + ":" + std::to_string(line));
  }
  return v;
}

void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& x, double fs) {
  if (!(fs > 0.0) || fs != std::floor(fs) || fs > 4294967295.0) {
    throw Error("WAV needs a positive integer sample rate, got " + format_double(fs));
  }
  const auto n = static_cast<std::uint32_t>(x.size());
  const std::uint32_t data_bytes = n * 8;
  std::string buf;
  buf += "RIFF";
  put<std::uint32_t>(buf, 4 + (8 + 18) + (8 + 4) + (8 + data_bytes));
  buf += "WAVE";
  buf += "fmt ";
  put<std::uint32_t>(buf, 18);
  put<std::uint16_t>(buf, kFormatFloat);
  put<std::uint16_t>(buf, 1);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(fs));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(fs) * 8);
  put<std::uint16_t>(buf, 8);
  put<std::uint16_t>(buf, 64);
  put<std::uint16_t>(buf, 0);
  buf += "fact";
  put<std::uint32_t>(buf, 4);
  put<std::uint32_t>(buf, n);
  buf += "data";
  put<std::uint32_t>(buf, data_bytes);
  for (Eigen::Index i = 0; i < x.size(); ++i) put<double>(buf, x[i]);
  write_text(path, buf);
}

Signal read_wav(const std::filesystem::path& path) {
  const std::string buf = read_text(path);
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0) {
    throw Error(path.string() + " is not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id = buf.substr(pos, 4);
    const auto size = get<std::uint32_t>(buf, pos + 4, path);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = get<std::uint16_t>(buf, body, path);
      channels = get<std::uint16_t>(buf, body + 2, path);
      rate = get<std::uint32_t>(buf, body + 4, path);
      bits = get<std::uint16_t>(buf, body + 14, path);
      if (format == 0xFFFE && size >= 26) format = get<std::uint16_t>(buf, body + 24, path);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw Error(path.string() + ": data chunk before fmt chunk");
      if (channels != 1) throw Error(path.string() + ": only mono WAV is supported");
      if (body + size > buf.size()) throw Error("truncated WAV file " + path.string());
      Signal s;
      s.sample_rate = rate;
      if (format == kFormatFloat && bits == 64) {
        s.samples.resize(size / 8);
        for (Eigen::Index i = 0; i < s.samples.size(); ++i) {
          s.samples[i] = get<double>(buf, body + 8 * i, path);
        }
      } else if (format == kFormatFloat && bits == 32) {
        s.samples.resize(size / 4);
        for (Eigen::Index i = 0; i < s.samples.size(); ++i) {
          s.samples[i] = get<float>(buf, body + 4 * i, path);
        }
      } else if (format == kFormatPcm && bits == 16) {
        s.samples.resize(size / 2);
        for (Eigen::Index i = 0; i < s.samples.size(); ++i) {
          s.samples[i] = get<std::int16_t>(buf, body + 2 * i, path) / 32768.0;
        }
      } else {
        throw Error(path.string() + ": unsupported WAV sample format");
      }
      return s;
    }
    pos = body + size + (size & 1);
  }
  throw Error(path.string() + ": no data chunk");
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_signal(const std::filesystem::path& path, const Eigen::VectorXd& samples,
                  double sample_rate) {
  const std::string ext = extension(path);
  if (ext == ".wav") {
    write_wav(path, samples, sample_rate);
  } else if (ext == ".csv") {
    std::string out;
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
      out += format_double(samples[i]);
      out += '\n';
    }
    write_text(path, out);
  } else {
    throw Error("unsupported signal format '" + ext + "' for " + path.string() +
                " (use .csv or .wav)");
  }
}

Signal read_signal(const std::filesystem::path& path) {
  const std::string ext = extension(path);
  if (ext == ".wav") return read_wav(path);
  if (ext != ".csv") {
    throw Error("unsupported signal format '" + ext + "' for " + path.string() +
                " (use .csv or .wav)");
  }
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() > 1 && m.rows() > 1) throw Error(path.string() + ": expected a single column");
  Signal s;
  s.samples = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  return s;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                         : comma - start);
      cell.erase(0, cell.find_first_not_of(" \t"));
      row.push_back(parse_number(cell, path, lineno));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error("ragged row at " + path.string() + ":" + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(path.string() + " holds no values");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace omtrir::io
