#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "logsearch/text.hpp"

namespace logsearch {

/// A named free-text field of a record body ("Meldung", "Massnahme", ...).
struct Field {
    std::string name;
    std::string text;

    friend bool operator==(const Field&, const Field&) = default;
};

/// One semi-structured log entry.
struct Record {
    std::string id;
    std::int64_t timestamp = 0;           // UTC epoch seconds
    std::vector<std::string> attributes;  // long functional-location IDs
    std::string title;
    std::vector<Field> body;

    friend bool operator==(const Record&, const Record&) = default;

    /// Title and body fields joined by newlines, the text that gets indexed.
    std::string full_text() const {
        std::string out = title;
        for (const auto& f : body) {
            out.push_back('\n');
            out.append(f.text);
        }
        return out;
    }
};

struct FunctionalLocationEntry {
    std::string long_id;
    std::string short_id;
    std::string description;

    friend bool operator==(const FunctionalLocationEntry&, const FunctionalLocationEntry&) = default;
};

/// Immutable functional-location dictionary with case-insensitive lookups by
/// long and short ID. When several entries share a short ID the first wins.
class Dictionary {
  public:
    Dictionary() = default;

    explicit Dictionary(std::vector<FunctionalLocationEntry> entries) : entries_(std::move(entries)) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (!by_long_.emplace(text::fold(e.long_id), i).second) {
                throw FormatError("duplicate long_id '" + e.long_id + "' in dictionary");
            }
            by_short_.emplace(text::fold(e.short_id), i);
        }
    }

    const std::vector<FunctionalLocationEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    const FunctionalLocationEntry* find_long(std::string_view id) const { return find(by_long_, id); }
    const FunctionalLocationEntry* find_short(std::string_view id) const { return find(by_short_, id); }

  private:
    const FunctionalLocationEntry* find(const std::unordered_map<std::string, std::size_t>& map,
                                        std::string_view id) const {
        auto it = map.find(text::fold(id));
        return it == map.end() ? nullptr : &entries_[it->second];
    }

    std::vector<FunctionalLocationEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_long_;
    std::unordered_map<std::string, std::size_t> by_short_;
};

}  // namespace logsearch
