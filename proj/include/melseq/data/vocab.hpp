#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace melseq::data {

// Fixed character inventory: id 0 = padding, id 1 = end-of-sequence, then
// letters, digits, space and basic punctuation. The mapping is a bijection
// over the symbol list.
class CharVocab {
public:
    CharVocab();

    int size() const { return static_cast<int>(symbols_.size()); }
    int pad_id() const { return 0; }
    int eos_id() const { return 1; }

    // -1 when the character is not in the vocabulary
    int id(char c) const;
    bool contains(char c) const { return id(c) >= 0; }
    char symbol(int id) const;

    // Appends the terminal eos id. Input must already be normalized.
    std::vector<int> encode(const std::string& normalized) const;
    // Drops pad/eos.
    std::string decode(std::span<const int> ids) const;

private:
    std::vector<char> symbols_;  // [2..) are printable characters
    std::array<int, 256> index_;
};

// Lowercase, map curly quotes and en/em dashes to ASCII, collapse runs of
// whitespace, drop anything outside the vocabulary. Throws when the result
// is empty.
std::string normalize_text(const std::string& s, const CharVocab& v);

}  // namespace melseq::data
