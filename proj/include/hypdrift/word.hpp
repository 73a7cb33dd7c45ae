#pragma once

// Free-group words. A generator is a lowercase letter, its inverse the
// matching uppercase letter ("A" is a^-1).

#include <cstddef>
#include <string>
#include <string_view>

namespace hypdrift::word {

inline bool is_letter(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline char inverse_letter(char c) {
    return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A')
                                  : static_cast<char>(c - 'A' + 'a');
}

bool is_reduced(std::string_view w);

/// Free reduction; throws std::invalid_argument on a non-letter.
std::string reduce(std::string_view w);

/// Appends one letter to a reduced word, cancelling if needed.
inline void push_reduced(std::string& w, char c) {
    if (!w.empty() && w.back() == inverse_letter(c))
        w.pop_back();
    else
        w.push_back(c);
}

std::string inverse(std::string_view w);

/// reduce(a b) for reduced a, b.
std::string concat(std::string_view a, std::string_view b);

std::size_t common_prefix(std::string_view a, std::string_view b);

/// Word metric distance between reduced words x and y, i.e. |x^-1 y|.
inline std::size_t distance(std::string_view x, std::string_view y) {
    return x.size() + y.size() - 2 * common_prefix(x, y);
}

/// Parses the human form "ab⁻¹a" (and plain "abA") into letters.
std::string parse_pretty(std::string_view text);

/// Renders "aB" as "ab⁻¹".
std::string pretty(std::string_view w);

}  // namespace hypdrift::word
