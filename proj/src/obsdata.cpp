#include "netrecon/obsdata.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace netrecon {

std::uint32_t NodeUniverse::add(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  const auto idx = static_cast<std::uint32_t>(labels_.size());
  labels_.push_back(label);
  index_.emplace(label, idx);
  return idx;
}

std::uint32_t NodeUniverse::require(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw ContractError("unknown node label '" + label + "'");
  return it->second;
}

std::optional<std::uint32_t> NodeUniverse::find(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& NodeUniverse::label(std::uint32_t index) const {
  if (index >= labels_.size()) throw ContractError("node index out of range");
  return labels_[index];
}

ObservationCounts::ObservationCounts(NodeUniverse universe, bool directed,
                                     std::uint32_t modes,
                                     std::vector<std::uint32_t> default_trials,
                                     std::map<EntryKey, Counts> entries)
    : universe_(std::move(universe)),
      directed_(directed),
      modes_(modes),
      default_trials_(std::move(default_trials)),
      entries_(std::move(entries)) {
  if (universe_.size() < 2) throw ValidationError("need at least 2 nodes");
  if (modes_ == 0) throw ContractError("modes must be >= 1");
  if (default_trials_.empty()) default_trials_.assign(modes_, 0);
  if (default_trials_.size() != modes_)
    throw ContractError("default trials list must have one value per mode");
  for (const auto& [key, c] : entries_) {
    if (key.u == key.v) throw ValidationError("self loop in entries");
    if (key.u >= n() || key.v >= n()) throw ContractError("entry node index out of range");
    if (key.mode >= modes_) throw ContractError("entry mode out of range");
    if (!directed_ && key.u > key.v)
      throw ContractError("undirected entries must be stored with u < v");
    if (c.events > c.trials) throw ValidationError("events exceed trials");
  }
}

std::uint32_t ObservationCounts::default_trials(std::uint32_t mode) const {
  if (mode >= modes_) throw ContractError("mode out of range");
  return default_trials_[mode];
}

Counts ObservationCounts::effective(std::uint32_t u, std::uint32_t v,
                                    std::uint32_t mode) const {
  if (u == v) throw ContractError("self pair has no observations");
  if (u >= n() || v >= n()) throw ContractError("node index out of range");
  if (mode >= modes_) throw ContractError("mode out of range");
  EntryKey key{u, v, mode};
  if (!directed_ && u > v) key = EntryKey{v, u, mode};
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  return Counts{0, default_trials_[mode]};
}

std::optional<std::uint32_t> ObservationCounts::common_trials() const {
  if (modes_ != 1) return std::nullopt;
  std::optional<std::uint32_t> common;
  const std::uint64_t directional = directed_ ? 2 * pair_count() : pair_count();
  if (entries_.size() < directional) common = default_trials_[0];
  for (const auto& [key, c] : entries_) {
    if (common && c.trials != *common) return std::nullopt;
    common = c.trials;
  }
  return common;
}

namespace {

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

std::uint32_t parse_u32(const std::string& tok, const char* what, std::size_t line) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(tok, &pos);
    if (pos != tok.size() || v < 0 || v > 0xFFFFFFFFll) throw std::invalid_argument(tok);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw ParseError(std::string("expected nonnegative integer for ") + what + ", got '" +
                         tok + "'",
                     line);
  }
}

}  // namespace

ObservationCounts parse_counts(std::istream& in, const CountsParseOptions& options) {
  if (options.modes == 0) throw ContractError("modes must be >= 1");
  if (!options.default_trials.empty() && options.default_trials.size() != options.modes)
    throw ContractError("default trials list must have one value per mode");

  NodeUniverse universe;
  std::map<EntryKey, Counts> entries;
  std::map<EntryKey, std::size_t> first_seen;
  std::vector<std::optional<std::uint32_t>> directive(options.modes);

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const auto toks = tokens_of(line);
    if (toks[0] == "#default_N") {
      if (toks.size() == 2) {
        const auto value = parse_u32(toks[1], "default trials", lineno);
        for (auto& d : directive) d = value;
      } else if (toks.size() == 3) {
        const auto mode = parse_u32(toks[1], "mode", lineno);
        if (mode >= options.modes) throw ParseError("directive mode out of range", lineno);
        directive[mode] = parse_u32(toks[2], "default trials", lineno);
      } else {
        throw ParseError("#default_N takes [mode] value", lineno);
      }
      continue;
    }
    if (toks[0][0] == '#') continue;  // comment

    const std::size_t expected = options.modes > 1 ? 5 : 4;
    if (toks.size() != expected)
      throw ParseError("expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(toks.size()),
                       lineno);
    std::size_t at = 0;
    std::uint32_t mode = 0;
    if (options.modes > 1) {
      mode = parse_u32(toks[at++], "mode", lineno);
      if (mode >= options.modes) throw ParseError("mode out of range", lineno);
    }
    const std::string& lu = toks[at++];
    const std::string& lv = toks[at++];
    if (lu == lv) throw ParseError("self loop '" + lu + "'", lineno);
    const auto e = parse_u32(toks[at++], "events", lineno);
    const auto nn = parse_u32(toks[at++], "trials", lineno);
    if (e > nn) throw ValidationError("events " + std::to_string(e) + " exceed trials " +
                                          std::to_string(nn),
                                      lineno);
    std::uint32_t u = universe.add(lu);
    std::uint32_t v = universe.add(lv);
    if (!options.directed && u > v) std::swap(u, v);
    const EntryKey key{u, v, mode};
    if (auto it = first_seen.find(key); it != first_seen.end())
      throw ConflictError("duplicate entry for pair ('" + lu + "', '" + lv +
                              "') first seen at line " + std::to_string(it->second),
                          lineno);
    first_seen.emplace(key, lineno);
    entries.emplace(key, Counts{e, nn});
  }

  for (const auto& label : options.extra_nodes) universe.add(label);

  std::vector<std::uint32_t> defaults(options.modes, 0);
  for (std::uint32_t m = 0; m < options.modes; ++m) {
    if (!options.default_trials.empty())
      defaults[m] = options.default_trials[m];
    else if (directive[m])
      defaults[m] = *directive[m];
  }
  return ObservationCounts(std::move(universe), options.directed, options.modes,
                           std::move(defaults), std::move(entries));
}

ObservationCounts parse_snapshot_log(std::istream& in,
                                     const std::vector<std::string>& extra_nodes,
                                     std::optional<std::uint32_t> trials_override) {
  NodeUniverse universe;
  std::set<std::string> snapshots;
  // Track which snapshots contain each pair; duplicates within one snapshot
  // collapse (set semantics).
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::set<std::string>> seen;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const auto toks = tokens_of(line);
    if (toks[0][0] == '#') continue;
    if (toks.size() != 3)
      throw ParseError("expected 3 fields (snapshot u v), got " + std::to_string(toks.size()),
                       lineno);
    if (toks[1] == toks[2]) throw ParseError("self loop '" + toks[1] + "'", lineno);
    snapshots.insert(toks[0]);
    std::uint32_t u = universe.add(toks[1]);
    std::uint32_t v = universe.add(toks[2]);
    if (u > v) std::swap(u, v);
    seen[{u, v}].insert(toks[0]);
  }
  for (const auto& label : extra_nodes) universe.add(label);

  const auto observed = static_cast<std::uint32_t>(snapshots.size());
  const std::uint32_t trials = trials_override.value_or(observed);
  if (trials < observed)
    throw ValidationError("trial override " + std::to_string(trials) +
                          " below the number of distinct snapshots " +
                          std::to_string(observed));

  std::map<EntryKey, Counts> entries;
  for (const auto& [pair, snaps] : seen)
    entries.emplace(EntryKey{pair.first, pair.second, 0},
                    Counts{static_cast<std::uint32_t>(snaps.size()), trials});
  return ObservationCounts(std::move(universe), false, 1, {trials}, std::move(entries));
}

void write_counts(const ObservationCounts& counts, std::ostream& out) {
  out << "#netrecon counts directed=" << (counts.directed() ? 1 : 0)
      << " modes=" << counts.modes() << "\n";
  if (counts.modes() == 1) {
    out << "#default_N " << counts.default_trials(0) << "\n";
  } else {
    for (std::uint32_t m = 0; m < counts.modes(); ++m)
      out << "#default_N " << m << " " << counts.default_trials(m) << "\n";
  }
  const auto& universe = counts.universe();
  for (const auto& [key, c] : counts.entries()) {
    if (counts.modes() > 1) out << key.mode << " ";
    out << universe.label(key.u) << " " << universe.label(key.v) << " " << c.events << " "
        << c.trials << "\n";
  }
}

std::uint64_t PairClassSet::pair_index(std::uint32_t n, std::uint32_t i, std::uint32_t j) {
  if (i == j || i >= n || j >= n) throw ContractError("bad pair");
  if (i > j) std::swap(i, j);
  const std::uint64_t i64 = i;
  return i64 * n - i64 * (i64 + 1) / 2 + (j - i - 1);
}

std::pair<std::uint32_t, std::uint32_t> PairClassSet::pair_from_index(std::uint32_t n,
                                                                      std::uint64_t k) {
  // Row start offsets are monotone; locate row i then column j.
  const double nd = n;
  auto i = static_cast<std::uint32_t>(
      std::floor(nd - 0.5 - std::sqrt((nd - 0.5) * (nd - 0.5) - 2.0 * static_cast<double>(k))));
  auto row_start = [n](std::uint64_t i64) { return i64 * n - i64 * (i64 + 1) / 2; };
  while (i > 0 && row_start(i) > k) --i;
  while (row_start(i + 1) <= k) ++i;
  const auto j = static_cast<std::uint32_t>(k - row_start(i) + i + 1);
  return {i, j};
}

PairClassSet PairClassSet::build(const ObservationCounts& counts) {
  PairClassSet out;
  const std::uint32_t n = counts.n();
  out.n_ = n;

  // Collect the unordered pairs that carry any explicit entry.
  std::set<std::pair<std::uint32_t, std::uint32_t>> entry_pairs;
  for (const auto& [key, c] : counts.entries()) {
    const auto p = std::minmax({key.u, key.v});
    entry_pairs.emplace(p.first, p.second);
  }

  auto signature_of = [&](std::uint32_t i, std::uint32_t j) {
    std::vector<Counts> sig;
    sig.reserve(counts.modes() * (counts.directed() ? 2 : 1));
    for (std::uint32_t m = 0; m < counts.modes(); ++m) {
      sig.push_back(counts.effective(i, j, m));
      if (counts.directed()) sig.push_back(counts.effective(j, i, m));
    }
    return sig;
  };

  std::vector<Counts> default_sig;
  for (std::uint32_t m = 0; m < counts.modes(); ++m) {
    default_sig.push_back(Counts{0, counts.default_trials(m)});
    if (counts.directed()) default_sig.push_back(Counts{0, counts.default_trials(m)});
  }

  std::map<std::vector<Counts>, std::vector<std::uint64_t>> groups;
  for (const auto& [i, j] : entry_pairs)
    groups[signature_of(i, j)].push_back(pair_index(n, i, j));

  const std::uint64_t total = out.pair_count();
  const std::uint64_t absent = total - entry_pairs.size();

  // Pairs absent from the entries share the default signature; they merge
  // with any explicit group carrying that same signature.
  const bool has_default = absent > 0;
  if (has_default) groups[default_sig];  // ensure the class exists

  out.classes_.reserve(groups.size());
  for (auto& [sig, members] : groups) {
    PairClass cls;
    cls.signature = sig;
    std::sort(members.begin(), members.end());
    if (has_default && sig == default_sig) {
      cls.implicit_default = true;
      cls.member_count = absent + members.size();
      // Members stay implicit: every pair not excluded below belongs here.
    } else {
      cls.member_count = members.size();
      cls.members = members;
      cls.representative = pair_from_index(n, members.front());
    }
    const auto cls_id = static_cast<std::uint32_t>(out.classes_.size());
    for (std::uint64_t k : members) out.pair_class_.emplace(k, cls_id);
    if (cls.implicit_default) out.default_class_ = cls_id;
    out.classes_.push_back(std::move(cls));
  }

  if (out.default_class_ >= 0) {
    for (const auto& cls : out.classes_)
      if (!cls.implicit_default)
        out.default_excluded_.insert(out.default_excluded_.end(), cls.members.begin(),
                                     cls.members.end());
    std::sort(out.default_excluded_.begin(), out.default_excluded_.end());
    // Smallest pair index not claimed by an explicit class.
    std::uint64_t rep = 0;
    for (std::uint64_t k : out.default_excluded_) {
      if (k != rep) break;
      ++rep;
    }
    out.classes_[out.default_class_].representative = pair_from_index(n, rep);
  }
  return out;
}

PairClassSet PairClassSet::single_default(std::uint32_t n) {
  if (n < 2) throw ContractError("need at least 2 nodes");
  PairClassSet out;
  out.n_ = n;
  PairClass cls;
  cls.signature = {Counts{0, 0}};
  cls.member_count = out.pair_count();
  cls.representative = {0, 1};
  cls.implicit_default = true;
  out.classes_.push_back(std::move(cls));
  out.default_class_ = 0;
  return out;
}

PairClassSet PairClassSet::from_members(std::uint32_t n,
                                        const std::vector<std::vector<std::uint64_t>>& members) {
  if (n < 2) throw ContractError("need at least 2 nodes");
  PairClassSet out;
  out.n_ = n;
  const std::uint64_t total = out.pair_count();
  for (const auto& group : members) {
    if (group.empty()) throw ContractError("empty pair class");
    PairClass cls;
    cls.members = group;
    std::sort(cls.members.begin(), cls.members.end());
    if (cls.members.back() >= total) throw ContractError("pair index out of range");
    cls.member_count = cls.members.size();
    cls.representative = pair_from_index(n, cls.members.front());
    const auto cls_id = static_cast<std::uint32_t>(out.classes_.size());
    for (std::uint64_t k : cls.members)
      if (!out.pair_class_.emplace(k, cls_id).second)
        throw ConflictError("pair assigned to two classes");
    out.default_excluded_.insert(out.default_excluded_.end(), cls.members.begin(),
                                 cls.members.end());
    out.classes_.push_back(std::move(cls));
  }
  std::sort(out.default_excluded_.begin(), out.default_excluded_.end());
  if (out.default_excluded_.size() < total) {
    PairClass cls;
    cls.implicit_default = true;
    cls.member_count = total - out.default_excluded_.size();
    std::uint64_t rep = 0;
    for (std::uint64_t k : out.default_excluded_) {
      if (k != rep) break;
      ++rep;
    }
    cls.representative = pair_from_index(n, rep);
    out.default_class_ = static_cast<std::ptrdiff_t>(out.classes_.size());
    out.classes_.push_back(std::move(cls));
  } else {
    out.default_excluded_.clear();
  }
  return out;
}

std::size_t PairClassSet::class_of(std::uint32_t i, std::uint32_t j) const {
  const auto k = pair_index(n_, i, j);
  if (auto it = pair_class_.find(k); it != pair_class_.end()) return it->second;
  if (default_class_ < 0) throw ContractError("pair not covered by any class");
  return static_cast<std::size_t>(default_class_);
}

std::shared_ptr<const PairClassSet> pair_classes(const ObservationCounts& counts) {
  return std::make_shared<const PairClassSet>(PairClassSet::build(counts));
}

}  // namespace netrecon
