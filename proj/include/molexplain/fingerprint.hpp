#pragma once
// Extended connectivity fingerprints (Morgan algorithm) with bit -> atom
// provenance.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "molexplain/chem.hpp"

namespace molexplain::fingerprint {

struct FingerprintConfig {
  int radius = 1;
  std::size_t n_bits = 1024;  // power of two; identifiers are folded by masking

  void validate() const;
};

// One circular substructure that set a bit.
struct Environment {
  int center;
  int radius;
  std::vector<int> atoms;  // sorted

  friend bool operator==(const Environment&, const Environment&) = default;
};

class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(std::size_t n_bits) : bits_(n_bits, false) {}

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t bit) const { return bits_[bit]; }
  // Sorted indices of set bits.
  std::vector<std::size_t> on_bits() const;
  std::size_t count() const;
  const std::map<std::size_t, std::vector<Environment>>& provenance() const { return provenance_; }

  // 0/1 vector for network input.
  std::vector<double> dense() const;

  void add(std::size_t bit, Environment env);

  friend bool operator==(const Fingerprint& a, const Fingerprint& b) { return a.bits_ == b.bits_; }

 private:
  std::vector<bool> bits_;
  std::map<std::size_t, std::vector<Environment>> provenance_;
};

// Fixed 64-bit mixing of a word sequence (splitmix64 finaliser chained over
// the words from a constant seed). Platform independent.
std::uint64_t hash_words(std::span<const std::uint64_t> words);

// Per-atom identifiers for each round 0..radius (rounds[r][atom]).
std::vector<std::vector<std::uint64_t>> atom_identifiers(const chem::MolecularGraph& g, int radius);

// Each round hashes (round, own identifier, sorted (bond order, neighbour
// identifier) pairs). Environments whose bond set already appeared (at an
// earlier round, or at the same round with a smaller identifier) are dropped.
Fingerprint ecfp(const chem::MolecularGraph& g, const FingerprintConfig& cfg);

// Union of provenance atom sets per requested bit; unset bits map to {}.
std::map<std::size_t, std::vector<int>> atoms_for_bits(const Fingerprint& fp, std::span<const std::size_t> bits);

}  // namespace molexplain::fingerprint
