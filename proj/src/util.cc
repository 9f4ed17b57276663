/* Copyright 2026 The latrack Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "latrack/util.h"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "latrack/core.h"

namespace latrack {

std::uint64_t SplitSeed(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (key + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitSeed(std::uint64_t seed, std::string_view key) {
  return SplitSeed(seed, Fnv1a(key));
}

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexDigest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string FileDigest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return HexDigest(Fnv1a(bytes));
}

namespace {

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ',')) {
    tok = Trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

double ToDouble(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) {
    throw ValidationError("config key '" + key + "': not a number: " + s);
  }
  return v;
}

long long ToInt(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) {
    throw ValidationError("config key '" + key + "': not an integer: " + s);
  }
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(std::string_view text) {
  KeyValueConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key = value");
    }
    std::string key = Trim(std::string_view(line).substr(0, eq));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": empty key");
    }
    cfg.values_[key] = Trim(std::string_view(line).substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return Parse(text);
}

std::string KeyValueConfig::GetString(const std::string& key,
                                      const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::GetDouble(const std::string& key,
                                 double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : ToDouble(key, it->second);
}

long long KeyValueConfig::GetInt(const std::string& key,
                                 long long fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : ToInt(key, it->second);
}

std::uint64_t KeyValueConfig::GetSeed(const std::string& key,
                                      std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (!s.empty() && s[0] != '-') v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) {
    throw ValidationError("config key '" + key + "': not a seed: " + s);
  }
  return v;
}

std::vector<double> KeyValueConfig::GetDoubles(
    const std::string& key, std::vector<double> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& tok : SplitList(it->second)) out.push_back(ToDouble(key, tok));
  return out;
}

std::vector<int> KeyValueConfig::GetInts(const std::string& key,
                                         std::vector<int> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<int> out;
  for (const auto& tok : SplitList(it->second)) {
    out.push_back(static_cast<int>(ToInt(key, tok)));
  }
  return out;
}

std::vector<int> KeyValueConfig::GetIntRange(const std::string& key,
                                             std::vector<int> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto colon = it->second.find(':');
  if (colon == std::string::npos) return GetInts(key, fallback);
  const long long lo = ToInt(key, Trim(it->second.substr(0, colon)));
  const long long hi = ToInt(key, Trim(it->second.substr(colon + 1)));
  if (hi < lo) throw ValidationError("config key '" + key + "': empty range");
  std::vector<int> out;
  for (long long v = lo; v <= hi; ++v) out.push_back(static_cast<int>(v));
  return out;
}

std::string KeyValueConfig::Canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace latrack
