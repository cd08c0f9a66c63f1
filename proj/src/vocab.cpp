#include "melseq/data/vocab.hpp"

#include <cctype>
#include <stdexcept>

namespace melseq::data {

CharVocab::CharVocab() {
    symbols_ = {'\0', '\1'};  // pad, eos placeholders
    for (char c = 'a'; c <= 'z'; ++c) symbols_.push_back(c);
    for (char c = '0'; c <= '9'; ++c) symbols_.push_back(c);
    for (char c : std::string(" !\"'(),-.:;?")) symbols_.push_back(c);
    index_.fill(-1);
    for (int i = 2; i < static_cast<int>(symbols_.size()); ++i)
        index_[static_cast<unsigned char>(symbols_[i])] = i;
}

int CharVocab::id(char c) const { return index_[static_cast<unsigned char>(c)]; }

char CharVocab::symbol(int id) const {
    if (id < 0 || id >= size())
        throw std::out_of_range("CharVocab::symbol: id " + std::to_string(id));
    return symbols_[id];
}

std::vector<int> CharVocab::encode(const std::string& normalized) const {
    std::vector<int> out;
    out.reserve(normalized.size() + 1);
    for (char c : normalized) {
        int i = id(c);
        if (i < 0)
            throw std::logic_error(std::string("CharVocab::encode: unmapped character '") + c +
                                   "' (text not normalized?)");
        out.push_back(i);
    }
    out.push_back(eos_id());
    return out;
}

std::string CharVocab::decode(std::span<const int> ids) const {
    std::string out;
    for (int i : ids)
        if (i > 1) out.push_back(symbol(i));
    return out;
}

std::string normalize_text(const std::string& s, const CharVocab& v) {
    std::string mapped;
    mapped.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        // common UTF-8 punctuation -> ASCII
        if (c == 0xe2 && i + 2 < s.size()) {
            unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
            unsigned char c2 = static_cast<unsigned char>(s[i + 2]);
            if (c1 == 0x80) {
                if (c2 == 0x98 || c2 == 0x99) {  // curly single quotes
                    mapped.push_back('\'');
                    i += 2;
                    continue;
                }
                if (c2 == 0x9c || c2 == 0x9d) {  // curly double quotes
                    mapped.push_back('"');
                    i += 2;
                    continue;
                }
                if (c2 == 0x93 || c2 == 0x94) {  // en/em dash
                    mapped.push_back('-');
                    i += 2;
                    continue;
                }
            }
        }
        mapped.push_back(static_cast<char>(std::tolower(c)));
    }

    std::string out;
    bool pending_space = false;
    for (char c : mapped) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (!v.contains(c)) continue;
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    if (out.empty()) throw std::invalid_argument("normalize_text: no usable characters in input");
    return out;
}

}  // namespace melseq::data
