#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aeromap/features.hpp"

namespace aeromap {

int hamming(const Descriptor256& a, const Descriptor256& b) noexcept;

struct MatchPair {
  int query_idx = 0;
  int train_idx = 0;
  int distance = 0;

  bool operator==(const MatchPair&) const = default;
};

/// Best and second-best neighbours of one query descriptor.
struct Knn2 {
  std::optional<MatchPair> best;
  std::optional<MatchPair> second;
};

/// Exact two nearest neighbours by Hamming distance, ties to the lower train
/// index. Throws EmptyTrainSet when `train` is empty.
Knn2 brute_force_knn2(const Descriptor256& query, std::span<const Descriptor256> train,
                      int query_idx = 0);

inline constexpr int kIndexKeyBits = 16;

/// Multi-table binary hash index. Each table projects a descriptor onto a
/// fixed, seeded subset of 16 bit positions; buckets are stored in CSR form
/// (one offset array of 2^16 + 1 entries per table). Immutable once built.
class BinaryIndex {
 public:
  BinaryIndex() = default;

  static BinaryIndex build(std::span<const Descriptor256> descs, int n_tables,
                           std::uint64_t seed);

  std::size_t size() const noexcept { return descs_.size(); }
  bool empty() const noexcept { return descs_.empty(); }
  int table_count() const noexcept { return static_cast<int>(bit_positions_.size()); }

  const std::array<int, kIndexKeyBits>& bit_positions(int table) const {
    return bit_positions_[table];
  }

  std::uint16_t key(int table, const Descriptor256& d) const noexcept;

  /// Indices stored in the bucket `key` of `table`.
  std::span<const std::uint32_t> bucket(int table, std::uint16_t key) const;

  /// Multi-probe lookup (exact bucket + all 16 one-bit neighbours per table),
  /// exact re-ranking of the candidate union, brute-force fallback when
  /// fewer than two candidates are found.
  Knn2 knn2(const Descriptor256& query, int query_idx = 0) const;

  std::span<const Descriptor256> descriptors() const noexcept { return descs_; }

  bool same_structure(const BinaryIndex& other) const;

 private:
  std::vector<Descriptor256> descs_;
  std::vector<std::array<int, kIndexKeyBits>> bit_positions_;
  std::vector<std::vector<std::uint32_t>> offsets_;  // per table, 2^16 + 1
  std::vector<std::vector<std::uint32_t>> entries_;  // per table, size()
};

inline BinaryIndex build_index(std::span<const Descriptor256> descs, int n_tables,
                               std::uint64_t seed) {
  return BinaryIndex::build(descs, n_tables, seed);
}

inline Knn2 index_knn2(const BinaryIndex& index, const Descriptor256& query,
                       int query_idx = 0) {
  return index.knn2(query, query_idx);
}

/// Keeps `best` iff there is no second neighbour or best < ratio * second.
/// A best distance of 0 with a second of 0 is an ambiguous duplicate and is
/// dropped.
std::vector<MatchPair> ratio_filter(std::span<const Knn2> pairs, double ratio = 0.75);

struct MatchConfig {
  int n_tables = 8;
  int key_bits = kIndexKeyBits;
  double ratio = 0.75;
  bool cross_check = true;
  std::uint64_t seed = 1;
  /// Use exact brute-force neighbours instead of the hash index (oracle and
  /// baseline runs).
  bool exact = false;
};

/// Features plus their hash index, built once per frame and reused for both
/// matching directions.
struct IndexedFeatures {
  FeatureSet features;
  BinaryIndex index;
};

IndexedFeatures index_features(FeatureSet features, const MatchConfig& cfg);

/// Query -> train matching: knn2 per query, ratio test, optional mutual
/// cross-check; sorted by ascending distance (ties by query index).
std::vector<MatchPair> match_frames(const IndexedFeatures& query, const IndexedFeatures& train,
                                    const MatchConfig& cfg);

std::vector<MatchPair> match_frames(const FeatureSet& query, const FeatureSet& train,
                                    const MatchConfig& cfg);

}  // namespace aeromap
