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

#ifndef LATRACK_UTIL_H_
#define LATRACK_UTIL_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace latrack {

// Timestamps closer than this are treated as simultaneous when comparing a
// world time against a tracker time. Keeps f/κ + L comparisons exact at the
// grid points users care about.
inline constexpr double kTimeTolerance = 1e-9;

inline bool AtOrBefore(double t, double deadline) {
  return t <= deadline + kTimeTolerance;
}

// splitmix64 finalizer; derives independent child seeds from (seed, key).
std::uint64_t SplitSeed(std::uint64_t seed, std::uint64_t key);
std::uint64_t SplitSeed(std::uint64_t seed, std::string_view key);

using Rng = std::mt19937_64;

// FNV-1a, used for config hashes and file digests in manifests.
std::uint64_t Fnv1a(std::string_view bytes);
std::string HexDigest(std::uint64_t h);
std::string FileDigest(const std::string& path);

// "key = value" text with '#' comments. Later keys override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig Parse(std::string_view text);
  static KeyValueConfig Load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) {
    values_[key] = std::move(value);
  }

  std::string GetString(const std::string& key,
                        const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  long long GetInt(const std::string& key, long long fallback) const;
  // Unsigned 64-bit value; seeds span the full range.
  std::uint64_t GetSeed(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> GetDoubles(const std::string& key,
                                 std::vector<double> fallback) const;
  std::vector<int> GetInts(const std::string& key,
                           std::vector<int> fallback) const;
  // Accepts "a:b" ranges as well as comma lists, e.g. "1:3" -> {1,2,3}.
  std::vector<int> GetIntRange(const std::string& key,
                               std::vector<int> fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string Canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace latrack

#endif  // LATRACK_UTIL_H_
