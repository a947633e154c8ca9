#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pushsim/pagemodel.hpp"
#include "pushsim/simulator.hpp"

namespace pushsim {

// Manifest for a page: stylesheets first, then everything else, each part in
// the order a reference pull load discovers the resources (100 ms RTT,
// 100 Mbit/s, no slow start). Root excluded.
PushManifest build_manifest(const DependencyTree& page);

// ─── Cache digest ───
// Bloom filter over resource urls, used to avoid pushing what the client
// already has. Bit positions come from double hashing (h1 + i*h2 mod m), so
// equal parameters and insertions give bit-identical digests everywhere.

class CacheDigest {
  public:
    // Throws ValidationError unless bits >= 8 and hash_count >= 1.
    CacheDigest(int64_t bits, int hash_count);

    // Sizes the filter for n_expected entries at target_fpr, with the bit
    // count clamped up to the 8-bit minimum.
    static CacheDigest with_recommended_size(int64_t n_expected, double target_fpr);

    void insert(const std::string& url);
    bool may_contain(const std::string& url) const;  // never false for inserted

    int64_t bit_count() const { return m_; }
    int hash_count() const { return k_; }
    int64_t inserted_count() const { return n_; }

    // Layout: 0x01, hash count as u32 big-endian, bit count as u64 big-endian,
    // then the bit array packed LSB-first within each byte. The insertion
    // count is not part of the wire format.
    std::vector<uint8_t> serialize() const;
    static CacheDigest deserialize(const std::vector<uint8_t>& bytes);

  private:
    int64_t m_;
    int k_;
    int64_t n_ = 0;
    std::vector<uint8_t> bits_;
};

// Optimal Bloom sizing: m = ceil(-n ln p / (ln 2)^2), k = round(m/n * ln 2),
// k at least 1. Unclamped; CacheDigest enforces its own minimum size.
std::pair<int64_t, int> recommended_digest_size(int64_t n_expected,
                                                double target_fpr);

// Drops every manifest entry whose url the digest may contain; keeps order.
PushManifest filter_manifest(const PushManifest& manifest,
                             const DependencyTree& page,
                             const CacheDigest& digest);

// FNV-1a, the digest's base hash. Exposed so interoperability tests can pin it.
uint64_t fnv1a64(const std::string& data);

} // namespace pushsim
