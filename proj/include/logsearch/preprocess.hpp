#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "logsearch/record.hpp"
#include "logsearch/text.hpp"

namespace logsearch {

enum class TokenKind { Word, Code, Numeric };

inline std::string_view to_string(TokenKind kind) {
    switch (kind) {
    case TokenKind::Word:
        return "Word";
    case TokenKind::Code:
        return "Code";
    case TokenKind::Numeric:
        return "Numeric";
    }
    return "?";
}

struct Token {
    std::string surface;
    std::string normalized;
    TokenKind kind = TokenKind::Word;
    std::size_t begin = 0;  // byte offsets into the source text
    std::size_t end = 0;

    friend bool operator==(const Token&, const Token&) = default;
};

/// Letters and digits mixed -> Code; digits without letters -> Numeric; else Word.
inline TokenKind classify_token(std::string_view surface) {
    bool digit = text::has_digit(surface);
    if (!digit) {
        return TokenKind::Word;
    }
    return text::has_letter(surface) ? TokenKind::Code : TokenKind::Numeric;
}

inline TokenKind classify_token(const Token& token) { return classify_token(token.surface); }

namespace detail {
inline bool is_inner_separator(char32_t c) { return c == U'.' || c == U'-' || c == U'_' || c == U'/'; }
}  // namespace detail

/// Splits text into maximal alphanumeric runs. The separators . - _ / stay inside
/// a token only when an alphanumeric character sits on both sides.
inline std::vector<Token> tokenize(std::string_view source) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < source.size()) {
        auto cp = text::decode(source, i);
        if (!text::is_alnum(cp.value)) {
            i += cp.length;
            continue;
        }
        std::size_t begin = i;
        std::size_t end = i + cp.length;
        while (end < source.size()) {
            auto next = text::decode(source, end);
            if (text::is_alnum(next.value)) {
                end += next.length;
                continue;
            }
            if (detail::is_inner_separator(next.value) && end + next.length < source.size()) {
                auto after = text::decode(source, end + next.length);
                if (text::is_alnum(after.value)) {
                    end += next.length + after.length;
                    continue;
                }
            }
            break;
        }
        Token t;
        t.surface = std::string(source.substr(begin, end - begin));
        t.normalized = t.surface;
        t.kind = classify_token(t.surface);
        t.begin = begin;
        t.end = end;
        tokens.push_back(std::move(t));
        i = end;
    }
    return tokens;
}

struct NormalizationConfig {
    std::set<std::string> stopwords;  // stored case-folded
    std::map<std::string, std::string> lemma_table;
    bool preserve_case = true;

    bool is_stopword(std::string_view word) const { return stopwords.count(text::fold(word)) != 0; }

    void add_stopword(std::string_view word) { stopwords.insert(text::fold(word)); }
};

/// Minimal German list: articles, common prepositions and their contractions,
/// coordinating conjunctions.
inline std::set<std::string> default_german_stopwords() {
    static const char* const words[] = {
        // articles
        "der", "die", "das", "den", "dem", "des", "ein", "eine", "einen", "einem", "einer", "eines",
        // prepositions
        "an", "auf", "aus", "bei", "bis", "durch", "für", "gegen", "hinter", "in", "mit", "nach",
        "neben", "ohne", "seit", "über", "um", "unter", "von", "vor", "während", "wegen", "zu",
        "zwischen", "am", "im", "ins", "vom", "beim", "zum", "zur", "ab",
        // coordinating conjunctions
        "und", "oder", "aber", "denn", "sondern", "sowie", "doch",
    };
    std::set<std::string> out;
    for (const char* w : words) {
        out.insert(w);
    }
    return out;
}

inline NormalizationConfig default_normalization() {
    NormalizationConfig cfg;
    cfg.stopwords = default_german_stopwords();
    return cfg;
}

/// Drops stopwords and applies the lemma table to Word tokens. Code and Numeric
/// tokens pass through untouched.
inline std::vector<Token> normalize(std::vector<Token> tokens, const NormalizationConfig& config) {
    std::vector<Token> out;
    out.reserve(tokens.size());
    for (auto& t : tokens) {
        if (t.kind != TokenKind::Word) {
            out.push_back(std::move(t));
            continue;
        }
        if (config.is_stopword(t.surface)) {
            continue;
        }
        auto it = config.lemma_table.find(t.surface);
        t.normalized = it != config.lemma_table.end() ? it->second : t.surface;
        if (!config.preserve_case) {
            t.normalized = text::fold(t.normalized);
        }
        out.push_back(std::move(t));
    }
    return out;
}

/// One term per line; blank lines and '#' comments ignored.
inline std::set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open stopword file '" + path + "'");
    }
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        auto term = text::trim(std::string_view(line).substr(0, hash));
        if (!term.empty()) {
            out.insert(text::fold(term));
        }
    }
    return out;
}

/// Two-column delimited file: surface, lemma. No header.
inline std::map<std::string, std::string> load_lemma_table(const std::string& path, char delim = '\t') {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open lemma table '" + path + "'");
    }
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (text::trim(line).empty() || line.front() == '#') {
            continue;
        }
        auto cols = text::split(line, delim);
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
            throw FormatError("lemma table row " + std::to_string(row) + ": expected two columns");
        }
        out[cols[0]] = cols[1];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Context expansion

struct ExpansionReport {
    std::size_t attributes_expanded = 0;
    std::size_t mentions_expanded = 0;
    std::vector<std::string> unknown_attributes;
};

struct ExpandedRecord {
    Record record;
    ExpansionReport report;
};

namespace detail {

// True when the tokens right before `pos` equal `insertion` (case-insensitive).
inline bool preceded_by(const std::vector<Token>& tokens, std::size_t pos, const std::vector<Token>& insertion) {
    if (insertion.empty()) {
        return true;
    }
    if (pos < insertion.size()) {
        return false;
    }
    std::size_t start = pos - insertion.size();
    for (std::size_t k = 0; k < insertion.size(); ++k) {
        if (!text::iequals(tokens[start + k].surface, insertion[k].surface)) {
            return false;
        }
    }
    return true;
}

inline std::string expand_mentions(std::string_view source, const Dictionary& dict, std::size_t& inserted) {
    if (dict.empty()) {
        return std::string(source);
    }
    auto tokens = tokenize(source);
    std::string out;
    out.reserve(source.size());
    std::size_t copied = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& tok = tokens[i];
        std::string insertion;
        if (const auto* e = dict.find_short(tok.surface)) {
            insertion = e->description;
        } else if (const auto* e = dict.find_long(tok.surface)) {
            insertion = e->description + " " + e->short_id;
        } else {
            continue;
        }
        if (preceded_by(tokens, i, tokenize(insertion))) {
            continue;
        }
        out.append(source.substr(copied, tok.begin - copied));
        out.append(insertion);
        out.push_back(' ');
        copied = tok.begin;
        ++inserted;
    }
    out.append(source.substr(copied));
    return out;
}

}  // namespace detail

/// Inserts the dictionary description before every in-text short-ID mention
/// and "description short_id" before every literal long-ID mention.
inline std::string expand_query_text(std::string_view source, const Dictionary& dict) {
    std::size_t inserted = 0;
    return detail::expand_mentions(source, dict, inserted);
}

/// Context expansion of one record. Attribute long IDs contribute
/// "description short_id" at the start of the title; in-text IDs get their
/// description inserted in place. Idempotent.
inline ExpandedRecord expand_record(const Record& record, const Dictionary& dict) {
    ExpandedRecord out{record, {}};
    auto& r = out.record;
    auto& report = out.report;

    r.title = detail::expand_mentions(record.title, dict, report.mentions_expanded);
    for (auto& f : r.body) {
        f.text = detail::expand_mentions(f.text, dict, report.mentions_expanded);
    }

    std::vector<std::string> pieces;
    std::unordered_set<std::string> seen;
    for (const auto& attr : record.attributes) {
        if (!seen.insert(text::fold(attr)).second) {
            continue;
        }
        const auto* e = dict.find_long(attr);
        if (e == nullptr) {
            report.unknown_attributes.push_back(attr);
            continue;
        }
        pieces.push_back(e->description + " " + e->short_id);
        ++report.attributes_expanded;
    }
    if (pieces.empty()) {
        return out;
    }
    auto prefix = text::join(pieces, " ");
    auto prefix_tokens = tokenize(prefix);
    auto title_tokens = tokenize(r.title);
    bool present = title_tokens.size() >= prefix_tokens.size();
    for (std::size_t k = 0; present && k < prefix_tokens.size(); ++k) {
        present = text::iequals(title_tokens[k].surface, prefix_tokens[k].surface);
    }
    if (!present) {
        r.title = r.title.empty() ? prefix : prefix + " " + r.title;
    }
    return out;
}

}  // namespace logsearch
