#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logsearch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a format or invariant (bad row, bad manifest, ...).
class FormatError : public Error {
  public:
    using Error::Error;
};

namespace text {

struct CodePoint {
    char32_t value;
    std::size_t length;  // bytes consumed
};

// Decodes one UTF-8 sequence at `pos`. Invalid bytes decode as U+FFFD with length 1.
inline CodePoint decode(std::string_view s, std::size_t pos) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char c = byte(pos);
    if (c < 0x80) {
        return {c, 1};
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
        len = 2;
        cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
        len = 3;
        cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
        len = 4;
        cp = c & 0x07;
    } else {
        return {0xFFFD, 1};
    }
    if (pos + len > s.size()) {
        return {0xFFFD, 1};
    }
    for (std::size_t i = 1; i < len; ++i) {
        unsigned char cc = byte(pos + i);
        if ((cc & 0xC0) != 0x80) {
            return {0xFFFD, 1};
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    return {cp, len};
}

inline void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool valid_utf8(std::string_view s) {
    for (std::size_t i = 0; i < s.size();) {
        auto cp = decode(s, i);
        if (cp.value == 0xFFFD && cp.length == 1 && static_cast<unsigned char>(s[i]) >= 0x80) {
            return false;
        }
        i += cp.length;
    }
    return true;
}

inline std::vector<std::string> code_points(std::string_view s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        auto cp = decode(s, i);
        out.emplace_back(s.substr(i, cp.length));
        i += cp.length;
    }
    return out;
}

inline std::size_t length(std::string_view s) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); i += decode(s, i).length) {
        ++n;
    }
    return n;
}

inline bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

// ASCII letters plus non-ASCII code points outside the common punctuation and
// symbol blocks. Good enough for German/Latin text; not a Unicode database.
inline bool is_letter(char32_t c) {
    if (c < 0x80) {
        return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    }
    if (c == 0xFFFD) {
        return false;
    }
    if (c < 0xC0) {
        return c == 0xAA || c == 0xB5 || c == 0xBA;
    }
    if (c == 0xD7 || c == 0xF7) {
        return false;
    }
    if ((c >= 0x2000 && c <= 0x2BFF) || (c >= 0x3000 && c <= 0x303F) ||
        (c >= 0xFE30 && c <= 0xFE4F) || (c >= 0xFF00 && c <= 0xFF20)) {
        return false;
    }
    return true;
}

inline bool is_alnum(char32_t c) { return is_digit(c) || is_letter(c); }

inline bool has_digit(std::string_view s) {
    for (char ch : s) {
        if (ch >= '0' && ch <= '9') {
            return true;
        }
    }
    return false;
}

inline bool has_letter(std::string_view s) {
    for (std::size_t i = 0; i < s.size();) {
        auto cp = decode(s, i);
        if (is_letter(cp.value)) {
            return true;
        }
        i += cp.length;
    }
    return false;
}

inline char32_t fold_char(char32_t c) {
    if (c >= U'A' && c <= U'Z') {
        return c + 32;
    }
    // Latin-1 supplement capitals (Ä Ö Ü ...), excluding the multiplication sign.
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) {
        return c + 32;
    }
    return c;
}

/// Case-folds ASCII and Latin-1 letters; everything else passes through.
inline std::string fold(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        auto cp = decode(s, i);
        if (cp.value < 0x80) {
            out.push_back(static_cast<char>(fold_char(cp.value)));
        } else if (cp.value == 0xFFFD && cp.length == 1) {
            out.push_back(s[i]);
        } else {
            encode(fold_char(cp.value), out);
        }
        i += cp.length;
    }
    return out;
}

inline bool iequals(std::string_view a, std::string_view b) { return fold(a) == fold(b); }

inline std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) {
        return {};
    }
    auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i != 0) {
            out.append(sep);
        }
        out.append(parts[i]);
    }
    return out;
}

/// 64-bit FNV-1a over raw bytes.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace text
}  // namespace logsearch
