#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "logsearch/preprocess.hpp"
#include "logsearch/record.hpp"
#include "logsearch/text.hpp"

namespace logsearch {

enum class CorpusFormat { Delimited, JsonLines };

inline CorpusFormat parse_corpus_format(std::string_view name) {
    if (name == "tsv" || name == "delimited" || name == "csv") {
        return CorpusFormat::Delimited;
    }
    if (name == "jsonl" || name == "json-lines" || name == "ndjson") {
        return CorpusFormat::JsonLines;
    }
    throw Error("unknown corpus format '" + std::string(name) + "' (expected delimited or json-lines)");
}

/// Guesses the format from the file extension; anything but .jsonl/.ndjson is delimited.
inline CorpusFormat corpus_format_for(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    return (ext == ".jsonl" || ext == ".ndjson") ? CorpusFormat::JsonLines : CorpusFormat::Delimited;
}

namespace detail {

// Delimited cells escape backslash, tab, CR, LF and the delimiter with a backslash.
inline std::string escape_cell(std::string_view cell, char delim) {
    std::string out;
    out.reserve(cell.size());
    for (char c : cell) {
        switch (c) {
        case '\\':
            out += "\\\\";
            break;
        case '\t':
            out += "\\t";
            break;
        case '\n':
            out += "\\n";
            break;
        case '\r':
            out += "\\r";
            break;
        default:
            if (c == delim) {
                out.push_back('\\');
            }
            out.push_back(c);
        }
    }
    return out;
}

inline std::vector<std::string> split_escaped(std::string_view line, char delim) {
    std::vector<std::string> cells(1);
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '\\' && i + 1 < line.size()) {
            char n = line[++i];
            switch (n) {
            case 't':
                cells.back().push_back('\t');
                break;
            case 'n':
                cells.back().push_back('\n');
                break;
            case 'r':
                cells.back().push_back('\r');
                break;
            default:
                cells.back().push_back(n);
            }
        } else if (c == delim) {
            cells.emplace_back();
        } else {
            cells.back().push_back(c);
        }
    }
    return cells;
}

inline std::string row_label(std::size_t row) { return "row " + std::to_string(row); }

inline std::int64_t parse_timestamp(std::string_view cell, std::size_t row) {
    auto s = text::trim(cell);
    bool ok = !s.empty() && s.size() <= 18;
    for (char c : s) {
        ok = ok && c >= '0' && c <= '9';
    }
    if (!ok) {
        throw FormatError("invalid timestamp '" + std::string(cell) + "' at " + row_label(row));
    }
    return std::stoll(std::string(s));
}

inline void validate_record(const Record& r, std::size_t row,
                            std::unordered_map<std::string, std::size_t>& seen) {
    if (r.id.empty()) {
        throw FormatError("missing id at " + row_label(row));
    }
    if (r.timestamp < 0) {
        throw FormatError("invalid timestamp at " + row_label(row));
    }
    auto [it, fresh] = seen.emplace(r.id, row);
    if (!fresh) {
        throw FormatError("duplicate id '" + r.id + "' at " + row_label(row) + " (first seen at " +
                          row_label(it->second) + ")");
    }
    auto check = [&](const std::string& s) {
        if (!text::valid_utf8(s)) {
            throw FormatError("invalid UTF-8 at " + row_label(row));
        }
    };
    check(r.id);
    check(r.title);
    for (const auto& a : r.attributes) {
        check(a);
    }
    for (const auto& f : r.body) {
        check(f.name);
        check(f.text);
    }
}

inline Record record_from_json(const nlohmann::ordered_json& j, std::size_t row) {
    if (!j.is_object()) {
        throw FormatError("expected a JSON object at " + row_label(row));
    }
    Record r;
    r.id = j.value("id", std::string{});
    if (!j.contains("timestamp")) {
        throw FormatError("invalid timestamp at " + row_label(row));
    }
    const auto& ts = j.at("timestamp");
    if (ts.is_number_unsigned()) {
        r.timestamp = static_cast<std::int64_t>(ts.get<std::uint64_t>());
    } else if (ts.is_string()) {
        r.timestamp = parse_timestamp(ts.get<std::string>(), row);
    } else {
        throw FormatError("invalid timestamp '" + ts.dump() + "' at " + row_label(row));
    }
    r.title = j.value("title", std::string{});
    if (j.contains("attributes")) {
        r.attributes = j.at("attributes").get<std::vector<std::string>>();
    }
    if (j.contains("body")) {
        const auto& body = j.at("body");
        if (body.is_array()) {
            for (const auto& f : body) {
                r.body.push_back({f.at("name").get<std::string>(), f.at("text").get<std::string>()});
            }
        } else if (body.is_object()) {
            for (const auto& [name, value] : body.items()) {
                r.body.push_back({name, value.get<std::string>()});
            }
        } else {
            throw FormatError("body must be an array or object at " + row_label(row));
        }
    }
    return r;
}

}  // namespace detail

inline nlohmann::ordered_json record_to_json(const Record& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["timestamp"] = r.timestamp;
    j["attributes"] = r.attributes;
    j["title"] = r.title;
    auto body = nlohmann::ordered_json::array();
    for (const auto& f : r.body) {
        body.push_back({{"name", f.name}, {"text", f.text}});
    }
    j["body"] = std::move(body);
    return j;
}

/// Parses a record collection from a stream. Row numbers in errors are line
/// numbers (the delimited header is line 1).
inline std::vector<Record> parse_corpus(std::istream& in, CorpusFormat format, char delim = '\t') {
    std::vector<Record> records;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t row = 0;

    if (format == CorpusFormat::JsonLines) {
        while (std::getline(in, line)) {
            ++row;
            if (text::trim(line).empty()) {
                continue;
            }
            nlohmann::ordered_json j;
            try {
                j = nlohmann::ordered_json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw FormatError("malformed JSON at " + detail::row_label(row) + ": " + e.what());
            }
            Record r;
            try {
                r = detail::record_from_json(j, row);
            } catch (const nlohmann::json::exception& e) {
                throw FormatError("bad record at " + detail::row_label(row) + ": " + e.what());
            }
            detail::validate_record(r, row, seen);
            records.push_back(std::move(r));
        }
        return records;
    }

    if (!std::getline(in, line)) {
        return records;
    }
    ++row;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    auto header = detail::split_escaped(line, delim);
    int col_id = -1, col_ts = -1, col_title = -1, col_attr = -1;
    std::vector<std::pair<std::size_t, std::string>> field_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& name = header[c];
        if (name == "id") {
            col_id = static_cast<int>(c);
        } else if (name == "timestamp") {
            col_ts = static_cast<int>(c);
        } else if (name == "title") {
            col_title = static_cast<int>(c);
        } else if (name == "attributes") {
            col_attr = static_cast<int>(c);
        } else {
            field_cols.emplace_back(c, name);
        }
    }
    if (col_id < 0 || col_ts < 0 || col_title < 0 || col_attr < 0) {
        throw FormatError("corpus header must contain id, timestamp, title and attributes columns");
    }
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto cells = detail::split_escaped(line, delim);
        if (cells.size() != header.size()) {
            throw FormatError("expected " + std::to_string(header.size()) + " columns, found " +
                              std::to_string(cells.size()) + " at " + detail::row_label(row));
        }
        Record r;
        r.id = cells[static_cast<std::size_t>(col_id)];
        r.timestamp = detail::parse_timestamp(cells[static_cast<std::size_t>(col_ts)], row);
        r.title = cells[static_cast<std::size_t>(col_title)];
        const auto& attrs = cells[static_cast<std::size_t>(col_attr)];
        if (!attrs.empty()) {
            r.attributes = text::split(attrs, ';');
        }
        for (const auto& [c, name] : field_cols) {
            r.body.push_back({name, cells[c]});
        }
        detail::validate_record(r, row, seen);
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<Record> load_corpus(const std::filesystem::path& path, CorpusFormat format, char delim = '\t') {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open corpus '" + path.string() + "'");
    }
    return parse_corpus(in, format, delim);
}

inline std::vector<Record> load_corpus(const std::filesystem::path& path) {
    return load_corpus(path, corpus_format_for(path));
}

/// Writes a collection. The delimited format needs every record to carry the
/// same body field names in the same order.
inline void write_corpus(std::ostream& out, const std::vector<Record>& records, CorpusFormat format,
                         char delim = '\t') {
    if (format == CorpusFormat::JsonLines) {
        for (const auto& r : records) {
            out << record_to_json(r).dump() << '\n';
        }
        return;
    }
    std::vector<std::string> names;
    if (!records.empty()) {
        for (const auto& f : records.front().body) {
            names.push_back(f.name);
        }
    }
    auto cell = [&](std::string_view s) { return detail::escape_cell(s, delim); };
    std::string d(1, delim);
    std::vector<std::string> header{"id", "timestamp", "title", "attributes"};
    for (const auto& n : names) {
        header.push_back(cell(n));
    }
    out << text::join(header, d) << '\n';
    for (const auto& r : records) {
        if (r.body.size() != names.size()) {
            throw Error("record '" + r.id + "' has a different body layout; use json-lines");
        }
        std::vector<std::string> row{cell(r.id), std::to_string(r.timestamp), cell(r.title)};
        for (const auto& a : r.attributes) {
            if (a.empty() || a.find(';') != std::string::npos) {
                throw Error("attribute '" + a + "' of record '" + r.id + "' cannot be stored in a delimited cell");
            }
        }
        row.push_back(cell(text::join(r.attributes, ";")));
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (r.body[i].name != names[i]) {
                throw Error("record '" + r.id + "' has a different body layout; use json-lines");
            }
            row.push_back(cell(r.body[i].text));
        }
        out << text::join(row, d) << '\n';
    }
}

inline void save_corpus(const std::filesystem::path& path, const std::vector<Record>& records, CorpusFormat format,
                        char delim = '\t') {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write corpus '" + path.string() + "'");
    }
    write_corpus(out, records, format, delim);
}

// ---------------------------------------------------------------------------
// Functional-location dictionary

inline std::vector<FunctionalLocationEntry> parse_dictionary(std::istream& in, char delim = '\t') {
    std::vector<FunctionalLocationEntry> entries;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t row = 0;
    if (!std::getline(in, line)) {
        return entries;
    }
    ++row;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    auto header = detail::split_escaped(line, delim);
    if (header != std::vector<std::string>{"long_id", "short_id", "description"}) {
        throw FormatError("dictionary header must be long_id, short_id, description");
    }
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto cells = detail::split_escaped(line, delim);
        if (cells.size() != 3) {
            throw FormatError("expected 3 columns at " + detail::row_label(row));
        }
        FunctionalLocationEntry e{cells[0], cells[1], cells[2]};
        if (e.long_id.empty()) {
            throw FormatError("empty long_id at " + detail::row_label(row));
        }
        if (e.short_id.empty()) {
            throw FormatError("empty short_id at " + detail::row_label(row));
        }
        if (text::trim(e.description).empty()) {
            throw FormatError("empty description at " + detail::row_label(row));
        }
        auto [it, fresh] = seen.emplace(text::fold(e.long_id), row);
        if (!fresh) {
            throw FormatError("duplicate long_id '" + e.long_id + "' at " + detail::row_label(row) +
                              " (first seen at " + detail::row_label(it->second) + ")");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::vector<FunctionalLocationEntry> load_dictionary(const std::filesystem::path& path, char delim = '\t') {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open dictionary '" + path.string() + "'");
    }
    return parse_dictionary(in, delim);
}

inline void write_dictionary(std::ostream& out, const std::vector<FunctionalLocationEntry>& entries,
                             char delim = '\t') {
    std::string d(1, delim);
    out << "long_id" << d << "short_id" << d << "description" << '\n';
    for (const auto& e : entries) {
        out << detail::escape_cell(e.long_id, delim) << d << detail::escape_cell(e.short_id, delim) << d
            << detail::escape_cell(e.description, delim) << '\n';
    }
}

inline void save_dictionary(const std::filesystem::path& path, const std::vector<FunctionalLocationEntry>& entries,
                            char delim = '\t') {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write dictionary '" + path.string() + "'");
    }
    write_dictionary(out, entries, delim);
}

// ---------------------------------------------------------------------------
// Corpus profile

struct TokenKindShares {
    double word = 0.0;
    double code = 0.0;
    double numeric = 0.0;
};

struct CorpusStats {
    std::size_t record_count = 0;
    std::size_t bucket_width = 1;
    std::map<std::size_t, std::size_t> length_histogram;  // bucket start -> records
    std::size_t token_count = 0;
    TokenKindShares token_kind_shares;
};

/// Record lengths are code points of title plus body fields (no separators);
/// token shares cover every token of the unexpanded text.
inline CorpusStats corpus_stats(const std::vector<Record>& records, std::size_t bucket_width) {
    if (bucket_width < 1) {
        throw Error("bucket width must be >= 1");
    }
    CorpusStats stats;
    stats.record_count = records.size();
    stats.bucket_width = bucket_width;
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& r : records) {
        std::size_t len = text::length(r.title);
        for (const auto& f : r.body) {
            len += text::length(f.text);
        }
        ++stats.length_histogram[(len / bucket_width) * bucket_width];

        auto count_tokens = [&](std::string_view s) {
            for (const auto& t : tokenize(s)) {
                ++counts[static_cast<int>(t.kind)];
            }
        };
        count_tokens(r.title);
        for (const auto& f : r.body) {
            count_tokens(f.text);
        }
    }
    stats.token_count = counts[0] + counts[1] + counts[2];
    if (stats.token_count > 0) {
        auto total = static_cast<double>(stats.token_count);
        stats.token_kind_shares.word = static_cast<double>(counts[static_cast<int>(TokenKind::Word)]) / total;
        stats.token_kind_shares.code = static_cast<double>(counts[static_cast<int>(TokenKind::Code)]) / total;
        stats.token_kind_shares.numeric = static_cast<double>(counts[static_cast<int>(TokenKind::Numeric)]) / total;
    }
    return stats;
}

inline nlohmann::ordered_json to_json(const CorpusStats& s) {
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& [start, count] : s.length_histogram) {
        hist.push_back({{"from", start}, {"to", start + s.bucket_width - 1}, {"count", count}});
    }
    return {{"record_count", s.record_count},
            {"bucket_width", s.bucket_width},
            {"length_histogram", hist},
            {"token_count", s.token_count},
            {"token_kind_shares",
             {{"Word", s.token_kind_shares.word},
              {"Code", s.token_kind_shares.code},
              {"Numeric", s.token_kind_shares.numeric}}}};
}

}  // namespace logsearch
