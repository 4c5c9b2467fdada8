#pragma once

// Shared helpers for building small observation stores in tests.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "netrecon/obsdata.hpp"

namespace testutil {

inline netrecon::NodeUniverse universe_of(std::uint32_t n) {
  netrecon::NodeUniverse u;
  for (std::uint32_t i = 0; i < n; ++i) u.add("v" + std::to_string(i));
  return u;
}

// Counts with the given explicit pairs; single mode, undirected.
inline netrecon::ObservationCounts dense_counts(
    std::uint32_t n,
    const std::map<std::pair<std::uint32_t, std::uint32_t>, netrecon::Counts>& c,
    std::uint32_t default_trials = 0) {
  std::map<netrecon::EntryKey, netrecon::Counts> entries;
  for (const auto& [key, value] : c) entries[{key.first, key.second, 0}] = value;
  return netrecon::ObservationCounts(universe_of(n), false, 1, {default_trials},
                                     std::move(entries));
}

inline netrecon::ObservationCounts random_counts(std::mt19937_64& gen, std::uint32_t n,
                                                 std::uint32_t max_trials, bool directed,
                                                 std::uint32_t modes) {
  std::uniform_int_distribution<std::uint32_t> trials_dist(0, max_trials);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<netrecon::EntryKey, netrecon::Counts> entries;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      for (std::uint32_t m = 0; m < modes; ++m) {
        if (unit(gen) < 0.25) continue;  // exercise the default-trials path
        const std::uint32_t trials = trials_dist(gen);
        std::uniform_int_distribution<std::uint32_t> events_dist(0, trials);
        entries[{i, j, m}] = netrecon::Counts{events_dist(gen), trials};
      }
    }
  std::vector<std::uint32_t> defaults;
  for (std::uint32_t m = 0; m < modes; ++m) defaults.push_back(trials_dist(gen));
  return netrecon::ObservationCounts(universe_of(n), directed, modes, std::move(defaults),
                                     std::move(entries));
}

inline double rate(std::mt19937_64& gen, double lo = 0.05, double hi = 0.95) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

}  // namespace testutil
