// Copyright (c) 2026 The fdrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0.txt
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file output.hpp
 * @brief CSV and JSON writers, SHA-256 checksums and the run manifest.
 *
 * Numbers are written with 17 significant digits so every double round-trips.
 * Files are opened in binary mode: line endings are LF on every platform.
 */

#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"

namespace fdrlab::io {

using json = nlohmann::json;

inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    write_fields(header);
  }

  void row(const std::vector<double>& values) {
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += ',';
      line += format_double(values[i]);
    }
    line += '\n';
    out_ << line;
  }

  const std::filesystem::path& path() const { return path_; }

  void close() {
    out_.close();
    if (!out_) throw Error("failed writing " + path_.string());
  }

 private:
  void write_fields(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) line += ',';
      line += fields[i];
    }
    out_ << line << '\n';
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

/// Rows of [re, im] pairs.
inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

inline std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    s += digits[data[i] >> 4];
    s += digits[data[i] & 0xF];
  }
  return s;
}

inline std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  return to_hex(md.data(), len);
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

struct RunManifest {
  std::string tool = "fdrlab";
  std::string version;
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double wall_clock_seconds = 0.0;
  std::string started_at;
  std::vector<std::filesystem::path> outputs;

  /// Serializes with a checksum for every listed output.
  json to_json() const {
    json files = json::object();
    for (const auto& p : outputs) files[p.filename().string()] = sha256_file(p);
    return json{{"tool", tool},
                {"version", version},
                {"command", command},
                {"config_hash", config_hash},
                {"seed", seed},
                {"threads", threads},
                {"started_at", started_at},
                {"wall_clock_seconds", wall_clock_seconds},
                {"outputs", files}};
  }
};

}  // namespace fdrlab::io
