#include "aeromap/matching.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <random>
#include <unordered_map>

#include "aeromap/error.hpp"

namespace aeromap {
namespace {

constexpr std::size_t kBucketsPerTable = std::size_t{1} << kIndexKeyBits;

// Keeps the two smallest (distance, index) pairs.
struct TopTwo {
  int best_idx = -1;
  int best_d = 0;
  int second_idx = -1;
  int second_d = 0;

  void offer(int idx, int d) {
    auto less = [](int da, int ia, int db, int ib) { return da < db || (da == db && ia < ib); };
    if (best_idx < 0 || less(d, idx, best_d, best_idx)) {
      second_idx = best_idx;
      second_d = best_d;
      best_idx = idx;
      best_d = d;
    } else if (second_idx < 0 || less(d, idx, second_d, second_idx)) {
      second_idx = idx;
      second_d = d;
    }
  }

  Knn2 result(int query_idx) const {
    Knn2 r;
    if (best_idx >= 0) r.best = MatchPair{query_idx, best_idx, best_d};
    if (second_idx >= 0) r.second = MatchPair{query_idx, second_idx, second_d};
    return r;
  }
};

}  // namespace

int hamming(const Descriptor256& a, const Descriptor256& b) noexcept {
  return std::popcount(a.words[0] ^ b.words[0]) + std::popcount(a.words[1] ^ b.words[1]) +
         std::popcount(a.words[2] ^ b.words[2]) + std::popcount(a.words[3] ^ b.words[3]);
}

Knn2 brute_force_knn2(const Descriptor256& query, std::span<const Descriptor256> train,
                      int query_idx) {
  if (train.empty()) throw Error(ErrorCode::EmptyTrainSet, "brute-force matching needs a train set");
  TopTwo top;
  for (std::size_t i = 0; i < train.size(); ++i) {
    top.offer(static_cast<int>(i), hamming(query, train[i]));
  }
  return top.result(query_idx);
}

BinaryIndex BinaryIndex::build(std::span<const Descriptor256> descs, int n_tables,
                               std::uint64_t seed) {
  if (n_tables < 1) throw Error(ErrorCode::InvalidConfig, "index needs at least one table");
  BinaryIndex index;
  index.descs_.assign(descs.begin(), descs.end());
  index.bit_positions_.resize(n_tables);
  index.offsets_.resize(n_tables);
  index.entries_.resize(n_tables);

  std::mt19937_64 rng(seed);
  std::array<int, 256> positions{};
  for (int t = 0; t < n_tables; ++t) {
    std::iota(positions.begin(), positions.end(), 0);
    for (int j = 0; j < kIndexKeyBits; ++j) {
      const auto pick = j + static_cast<int>(rng() % static_cast<std::uint64_t>(256 - j));
      std::swap(positions[j], positions[pick]);
      index.bit_positions_[t][j] = positions[j];
    }

    const std::size_t n = index.descs_.size();
    std::vector<std::uint16_t> keys(n);
    auto& offsets = index.offsets_[t];
    offsets.assign(kBucketsPerTable + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      keys[i] = index.key(t, index.descs_[i]);
      ++offsets[keys[i] + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    auto& entries = index.entries_[t];
    entries.resize(n);
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) entries[cursor[keys[i]]++] = static_cast<std::uint32_t>(i);
  }
  return index;
}

std::uint16_t BinaryIndex::key(int table, const Descriptor256& d) const noexcept {
  std::uint16_t k = 0;
  const auto& pos = bit_positions_[table];
  for (int j = 0; j < kIndexKeyBits; ++j) {
    k |= static_cast<std::uint16_t>(d.bit(pos[j])) << j;
  }
  return k;
}

std::span<const std::uint32_t> BinaryIndex::bucket(int table, std::uint16_t key) const {
  const auto& off = offsets_[table];
  const auto& ent = entries_[table];
  return {ent.data() + off[key], ent.data() + off[key + 1]};
}

Knn2 BinaryIndex::knn2(const Descriptor256& query, int query_idx) const {
  if (descs_.empty()) return {};
  std::vector<std::uint8_t> seen(descs_.size(), 0);
  std::size_t distinct = 0;
  TopTwo top;
  for (int t = 0; t < table_count(); ++t) {
    const std::uint16_t k = key(t, query);
    for (int probe = -1; probe < kIndexKeyBits; ++probe) {
      const std::uint16_t pk =
          probe < 0 ? k : static_cast<std::uint16_t>(k ^ (std::uint16_t{1} << probe));
      for (std::uint32_t idx : bucket(t, pk)) {
        if (seen[idx]) continue;
        seen[idx] = 1;
        ++distinct;
        top.offer(static_cast<int>(idx), hamming(query, descs_[idx]));
      }
    }
  }
  if (distinct < 2) return brute_force_knn2(query, descs_, query_idx);
  return top.result(query_idx);
}

bool BinaryIndex::same_structure(const BinaryIndex& other) const {
  return descs_ == other.descs_ && bit_positions_ == other.bit_positions_ &&
         offsets_ == other.offsets_ && entries_ == other.entries_;
}

std::vector<MatchPair> ratio_filter(std::span<const Knn2> pairs, double ratio) {
  std::vector<MatchPair> kept;
  for (const Knn2& p : pairs) {
    if (!p.best) continue;
    if (!p.second || p.best->distance < ratio * p.second->distance) kept.push_back(*p.best);
  }
  return kept;
}

IndexedFeatures index_features(FeatureSet features, const MatchConfig& cfg) {
  IndexedFeatures out;
  out.features = std::move(features);
  if (!cfg.exact && !out.features.descriptors.empty()) {
    out.index = BinaryIndex::build(out.features.descriptors, cfg.n_tables, cfg.seed);
  }
  return out;
}

std::vector<MatchPair> match_frames(const IndexedFeatures& query, const IndexedFeatures& train,
                                    const MatchConfig& cfg) {
  const auto& qd = query.features.descriptors;
  const auto& td = train.features.descriptors;
  if (qd.empty() || td.empty()) return {};

  auto nearest = [&](const Descriptor256& d, int idx, const IndexedFeatures& in) {
    return (cfg.exact || in.index.empty()) ? brute_force_knn2(d, in.features.descriptors, idx)
                                           : in.index.knn2(d, idx);
  };

  std::vector<Knn2> knn;
  knn.reserve(qd.size());
  for (std::size_t i = 0; i < qd.size(); ++i) knn.push_back(nearest(qd[i], static_cast<int>(i), train));
  std::vector<MatchPair> kept = ratio_filter(knn, cfg.ratio);

  if (cfg.cross_check) {
    std::unordered_map<int, int> reverse_best;
    std::erase_if(kept, [&](const MatchPair& m) {
      auto it = reverse_best.find(m.train_idx);
      if (it == reverse_best.end()) {
        const Knn2 r = nearest(td[m.train_idx], m.train_idx, query);
        it = reverse_best.emplace(m.train_idx, r.best ? r.best->train_idx : -1).first;
      }
      return it->second != m.query_idx;
    });
  }

  std::sort(kept.begin(), kept.end(), [](const MatchPair& a, const MatchPair& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.query_idx < b.query_idx;
  });
  return kept;
}

std::vector<MatchPair> match_frames(const FeatureSet& query, const FeatureSet& train,
                                    const MatchConfig& cfg) {
  return match_frames(index_features(query, cfg), index_features(train, cfg), cfg);
}

}  // namespace aeromap
