#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "netrecon/errors.hpp"

namespace netrecon {

// Opaque node labels mapped to dense indices in first-appearance order.
// Indices are frozen once observation data has been attached.
class NodeUniverse {
 public:
  std::uint32_t add(const std::string& label);          // insert-or-get
  std::uint32_t require(const std::string& label) const;  // throws ContractError
  std::optional<std::uint32_t> find(const std::string& label) const;
  const std::string& label(std::uint32_t index) const;
  const std::vector<std::string>& labels() const { return labels_; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(labels_.size()); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// One (events, trials) cell: E positive observations out of N looks.
struct Counts {
  std::uint32_t events = 0;
  std::uint32_t trials = 0;
  friend auto operator<=>(const Counts&, const Counts&) = default;
};

// Key of an explicit counts entry. For undirected data u < v; for directed
// data (u, v) is reporter -> target.
struct EntryKey {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  std::uint32_t mode = 0;
  friend auto operator<=>(const EntryKey&, const EntryKey&) = default;
};

// Immutable store of repeated edge observations: explicit (pair, mode)
// entries plus a per-mode default trial count for every absent pair.
class ObservationCounts {
 public:
  ObservationCounts(NodeUniverse universe, bool directed, std::uint32_t modes,
                    std::vector<std::uint32_t> default_trials,
                    std::map<EntryKey, Counts> entries);

  const NodeUniverse& universe() const { return universe_; }
  std::uint32_t n() const { return universe_.size(); }
  std::uint64_t pair_count() const {
    return std::uint64_t{n()} * (n() - 1) / 2;
  }
  bool directed() const { return directed_; }
  std::uint32_t modes() const { return modes_; }
  std::uint32_t default_trials(std::uint32_t mode = 0) const;
  const std::map<EntryKey, Counts>& entries() const { return entries_; }

  // Effective (E, N) for an ordered (directed) or canonicalized (undirected)
  // node pair; absent pairs resolve to (0, default_trials(mode)).
  Counts effective(std::uint32_t u, std::uint32_t v, std::uint32_t mode = 0) const;

  // Common trial count when every pair/mode shares one N (single mode only).
  std::optional<std::uint32_t> common_trials() const;

 private:
  NodeUniverse universe_;
  bool directed_ = false;
  std::uint32_t modes_ = 1;
  std::vector<std::uint32_t> default_trials_;
  std::map<EntryKey, Counts> entries_;
};

struct CountsParseOptions {
  bool directed = false;
  std::uint32_t modes = 1;
  // When non-empty, overrides any #default_N directives (one value per mode).
  std::vector<std::uint32_t> default_trials;
  // Extra labels appended to the universe after first-appearance parsing.
  std::vector<std::string> extra_nodes;
};

// Counts table: lines "[mode] u v E N" (mode column only when modes > 1),
// '#'-comments, and "#default_N [mode] value" directives.
ObservationCounts parse_counts(std::istream& in, const CountsParseOptions& options = {});

// Snapshot log: lines "snapshot_id u v". E = number of distinct snapshots
// containing the pair, N = number of distinct snapshot ids in the log
// (overridable when the log is known to omit empty snapshots).
ObservationCounts parse_snapshot_log(std::istream& in,
                                     const std::vector<std::string>& extra_nodes = {},
                                     std::optional<std::uint32_t> trials_override = {});

// Serialize in the counts-table format; parse_counts(write_counts(x)) has the
// same effective counts as x.
void write_counts(const ObservationCounts& counts, std::ostream& out);

// Pairs grouped by identical observation signature. Exchangeable models only
// need one posterior value per class.
struct PairClass {
  // Per mode: (E, N) under canonical pair order, then the reverse orientation
  // when the data are directed.
  std::vector<Counts> signature;
  std::uint64_t member_count = 0;
  std::pair<std::uint32_t, std::uint32_t> representative{0, 0};
  // Sorted linear pair indices. Empty iff implicit_default: that class owns
  // every pair not claimed by another class.
  std::vector<std::uint64_t> members;
  bool implicit_default = false;
};

class PairClassSet {
 public:
  static PairClassSet build(const ObservationCounts& counts);
  // Single class covering all pairs (used for externally loaded posteriors).
  static PairClassSet single_default(std::uint32_t n);
  // Classes from explicit member lists (linear pair indices); uncovered pairs
  // form an implicit default class. Signatures stay empty, so class sets built
  // this way support posterior storage and sampling, not model fitting.
  static PairClassSet from_members(std::uint32_t n,
                                   const std::vector<std::vector<std::uint64_t>>& members);

  std::uint32_t n() const { return n_; }
  std::uint64_t pair_count() const { return std::uint64_t{n_} * (n_ - 1) / 2; }
  const std::vector<PairClass>& classes() const { return classes_; }
  std::size_t class_of(std::uint32_t i, std::uint32_t j) const;
  std::ptrdiff_t default_class() const { return default_class_; }
  // Sorted linear indices of pairs belonging to non-default classes.
  const std::vector<std::uint64_t>& default_excluded() const { return default_excluded_; }

  static std::uint64_t pair_index(std::uint32_t n, std::uint32_t i, std::uint32_t j);
  static std::pair<std::uint32_t, std::uint32_t> pair_from_index(std::uint32_t n,
                                                                 std::uint64_t k);

 private:
  std::uint32_t n_ = 0;
  std::vector<PairClass> classes_;
  std::unordered_map<std::uint64_t, std::uint32_t> pair_class_;
  std::ptrdiff_t default_class_ = -1;
  std::vector<std::uint64_t> default_excluded_;
};

std::shared_ptr<const PairClassSet> pair_classes(const ObservationCounts& counts);

}  // namespace netrecon
