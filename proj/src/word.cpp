#include "hypdrift/word.hpp"

#include <stdexcept>

namespace hypdrift::word {

bool is_reduced(std::string_view w) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!is_letter(w[i]))
            return false;
        if (i > 0 && w[i - 1] == inverse_letter(w[i]))
            return false;
    }
    return true;
}

std::string reduce(std::string_view w) {
    std::string out;
    out.reserve(w.size());
    for (char c : w) {
        if (!is_letter(c))
            throw std::invalid_argument("word: invalid letter '" + std::string(1, c) + "'");
        push_reduced(out, c);
    }
    return out;
}

std::string inverse(std::string_view w) {
    std::string out(w.rbegin(), w.rend());
    for (char& c : out)
        c = inverse_letter(c);
    return out;
}

std::string concat(std::string_view a, std::string_view b) {
    std::string out(a);
    for (char c : b)
        push_reduced(out, c);
    return out;
}

std::size_t common_prefix(std::string_view a, std::string_view b) {
    std::size_t n = 0;
    while (n < a.size() && n < b.size() && a[n] == b[n])
        ++n;
    return n;
}

std::string parse_pretty(std::string_view text) {
    static constexpr std::string_view kInvMark = "⁻¹";
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (!is_letter(c))
            throw std::invalid_argument("word: cannot parse '" + std::string(text) + "'");
        ++i;
        if (text.substr(i, kInvMark.size()) == kInvMark) {
            c = inverse_letter(c);
            i += kInvMark.size();
        }
        out.push_back(c);
    }
    return out;
}

std::string pretty(std::string_view w) {
    std::string out;
    for (char c : w) {
        if (c >= 'A' && c <= 'Z') {
            out.push_back(inverse_letter(c));
            out += "⁻¹";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace hypdrift::word
