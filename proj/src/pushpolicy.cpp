#include "pushsim/pushpolicy.hpp"

#include <cmath>
#include <set>
#include <string>

#include "pushsim/errors.hpp"

namespace pushsim {

// ─── Manifest construction ───

PushManifest build_manifest(const DependencyTree& page) {
    SimConfig reference;
    reference.mode = SimMode::pull;
    reference.link = LinkParams{0.1, 1e8};
    SimResult run = simulate(page, reference);

    PushManifest out;
    const std::string& root = page.root().id;
    for (const auto& [t, id] : run.discoveries)
        if (id != root && page.resource(id).kind == ResourceKind::css)
            out.ids.push_back(id);
    for (const auto& [t, id] : run.discoveries)
        if (id != root && page.resource(id).kind != ResourceKind::css)
            out.ids.push_back(id);
    return out;
}

PushManifest filter_manifest(const PushManifest& manifest,
                             const DependencyTree& page,
                             const CacheDigest& digest) {
    PushManifest out;
    for (const std::string& id : manifest.ids)
        if (!digest.may_contain(page.resource(id).url))
            out.ids.push_back(id);
    return out;
}

// ─── Hashing ───

uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

uint64_t splitmix64_mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

struct HashPair {
    uint64_t h1;
    uint64_t h2;
};

HashPair digest_hashes(const std::string& url) {
    uint64_t base = fnv1a64(url);
    return HashPair{splitmix64_mix(base),
                    splitmix64_mix(base ^ 0x9E3779B97F4A7C15ULL) | 1ULL};
}

} // namespace

// ─── CacheDigest ───

CacheDigest::CacheDigest(int64_t bits, int hash_count) : m_(bits), k_(hash_count) {
    if (m_ < 8) throw ValidationError("digest needs at least 8 bits");
    if (k_ < 1) throw ValidationError("digest needs at least one hash");
    bits_.assign(static_cast<std::size_t>((m_ + 7) / 8), 0);
}

CacheDigest CacheDigest::with_recommended_size(int64_t n_expected,
                                               double target_fpr) {
    auto [m, k] = recommended_digest_size(n_expected, target_fpr);
    return CacheDigest(std::max<int64_t>(m, 8), k);
}

void CacheDigest::insert(const std::string& url) {
    HashPair h = digest_hashes(url);
    for (int i = 0; i < k_; ++i) {
        uint64_t idx = (h.h1 + static_cast<uint64_t>(i) * h.h2) %
                       static_cast<uint64_t>(m_);
        bits_[idx / 8] |= static_cast<uint8_t>(1u << (idx % 8));
    }
    n_ += 1;
}

bool CacheDigest::may_contain(const std::string& url) const {
    HashPair h = digest_hashes(url);
    for (int i = 0; i < k_; ++i) {
        uint64_t idx = (h.h1 + static_cast<uint64_t>(i) * h.h2) %
                       static_cast<uint64_t>(m_);
        if ((bits_[idx / 8] & (1u << (idx % 8))) == 0) return false;
    }
    return true;
}

std::vector<uint8_t> CacheDigest::serialize() const {
    std::vector<uint8_t> out;
    out.reserve(13 + bits_.size());
    out.push_back(0x01);
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<uint8_t>(static_cast<uint32_t>(k_) >> shift));
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<uint8_t>(static_cast<uint64_t>(m_) >> shift));
    out.insert(out.end(), bits_.begin(), bits_.end());
    return out;
}

CacheDigest CacheDigest::deserialize(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 13) throw ParseError("digest blob too short");
    if (bytes[0] != 0x01) throw ParseError("unsupported digest version");
    uint32_t k = 0;
    for (int i = 1; i <= 4; ++i) k = (k << 8) | bytes[static_cast<std::size_t>(i)];
    uint64_t m = 0;
    for (int i = 5; i <= 12; ++i) m = (m << 8) | bytes[static_cast<std::size_t>(i)];
    if (k < 1 || k > 1'000'000) throw ParseError("digest hash count out of range");
    if (m < 8 || m > (1ULL << 40)) throw ParseError("digest bit count out of range");
    std::size_t expect = 13 + static_cast<std::size_t>((m + 7) / 8);
    if (bytes.size() != expect) throw ParseError("digest blob length mismatch");

    CacheDigest out(static_cast<int64_t>(m), static_cast<int>(k));
    std::copy(bytes.begin() + 13, bytes.end(), out.bits_.begin());
    return out;
}

std::pair<int64_t, int> recommended_digest_size(int64_t n_expected,
                                                double target_fpr) {
    if (n_expected <= 0)
        throw ValidationError("digest sizing needs a positive entry count");
    if (!(target_fpr > 0.0) || !(target_fpr < 1.0))
        throw ValidationError("digest false-positive target must be in (0, 1)");

    double ln2 = std::log(2.0);
    double m_real = -static_cast<double>(n_expected) * std::log(target_fpr) /
                    (ln2 * ln2);
    auto m = static_cast<int64_t>(std::ceil(m_real));
    if (m < 1) m = 1;
    auto k = static_cast<int>(
        std::llround(static_cast<double>(m) / static_cast<double>(n_expected) * ln2));
    if (k < 1) k = 1;
    return {m, k};
}

} // namespace pushsim
