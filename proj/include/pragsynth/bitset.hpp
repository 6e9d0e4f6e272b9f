#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pragsynth {

// Fixed-width bitset sized at runtime; one bit per concept.
class ConceptSet {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  ConceptSet() = default;
  explicit ConceptSet(std::size_t width, bool value = false)
      : width_(width), words_((width + kWordBits - 1) / kWordBits, 0) {
    if (value) {
      for (Word& w : words_) w = ~Word{0};
      trim();
    }
  }

  std::size_t width() const noexcept { return width_; }

  bool test(std::size_t i) const {
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
  }
  void set(std::size_t i, bool value = true) {
    const Word mask = Word{1} << (i % kWordBits);
    if (value) {
      words_[i / kWordBits] |= mask;
    } else {
      words_[i / kWordBits] &= ~mask;
    }
  }

  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (Word w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool none() const noexcept {
    for (Word w : words_) {
      if (w) return false;
    }
    return true;
  }

  // popcount(*this & other) without materializing the intersection.
  std::size_t count_and(const ConceptSet& other) const noexcept {
    std::size_t c = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      c += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
    }
    return c;
  }

  ConceptSet& operator&=(const ConceptSet& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    return *this;
  }
  ConceptSet& operator|=(const ConceptSet& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }
  ConceptSet operator~() const {
    ConceptSet out = *this;
    for (Word& w : out.words_) w = ~w;
    out.trim();
    return out;
  }
  friend ConceptSet operator&(ConceptSet a, const ConceptSet& b) { return a &= b; }
  friend ConceptSet operator|(ConceptSet a, const ConceptSet& b) { return a |= b; }
  friend ConceptSet operator^(ConceptSet a, const ConceptSet& b) {
    for (std::size_t i = 0; i < a.words_.size(); ++i) a.words_[i] ^= b.words_[i];
    return a;
  }

  bool is_subset_of(const ConceptSet& other) const noexcept {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] & ~other.words_[i]) return false;
    }
    return true;
  }

  // Calls f(index) for every set bit in ascending order.
  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      Word w = words_[wi];
      while (w) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(w));
        f(wi * kWordBits + bit);
        w &= w - 1;
      }
    }
  }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

  const std::vector<Word>& words() const noexcept { return words_; }

  // Lowercase hex, least significant word first, 16 digits per word.
  std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(words_.size() * 16);
    for (Word w : words_) {
      for (int shift = 60; shift >= 0; shift -= 4) {
        out += kDigits[(w >> shift) & 0xF];
      }
    }
    return out;
  }

  static bool from_hex(std::size_t width, const std::string& hex, ConceptSet& out) {
    ConceptSet s(width);
    if (hex.size() != s.words_.size() * 16) return false;
    for (std::size_t wi = 0; wi < s.words_.size(); ++wi) {
      Word w = 0;
      for (std::size_t k = 0; k < 16; ++k) {
        const char c = hex[wi * 16 + k];
        Word d;
        if (c >= '0' && c <= '9') {
          d = static_cast<Word>(c - '0');
        } else if (c >= 'a' && c <= 'f') {
          d = static_cast<Word>(c - 'a' + 10);
        } else {
          return false;
        }
        w = (w << 4) | d;
      }
      s.words_[wi] = w;
    }
    ConceptSet trimmed = s;
    trimmed.trim();
    if (trimmed != s) return false;
    out = std::move(s);
    return true;
  }

  friend bool operator==(const ConceptSet&, const ConceptSet&) = default;

 private:
  void trim() {
    const std::size_t rem = width_ % kWordBits;
    if (rem != 0 && !words_.empty()) {
      words_.back() &= (Word{1} << rem) - 1;
    }
  }

  std::size_t width_ = 0;
  std::vector<Word> words_;
};

}  // namespace pragsynth
