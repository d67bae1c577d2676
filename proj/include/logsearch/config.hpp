#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "logsearch/text.hpp"

namespace logsearch {

/// "key = value" text configuration. '#' starts a comment; blank lines are
/// ignored; later keys override earlier ones.
class ConfigFile {
  public:
    ConfigFile() = default;

    static ConfigFile parse(std::istream& in) {
        ConfigFile cfg;
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            ++row;
            auto hash = line.find('#');
            auto body = text::trim(std::string_view(line).substr(0, hash));
            if (body.empty()) {
                continue;
            }
            auto eq = body.find('=');
            if (eq == std::string_view::npos) {
                throw FormatError("config line " + std::to_string(row) + ": expected 'key = value'");
            }
            auto key = text::trim(body.substr(0, eq));
            if (key.empty()) {
                throw FormatError("config line " + std::to_string(row) + ": empty key");
            }
            cfg.values_[std::string(key)] = std::string(text::trim(body.substr(eq + 1)));
        }
        return cfg;
    }

    static ConfigFile load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            throw Error("cannot open config file '" + path.string() + "'");
        }
        return parse(in);
    }

    std::optional<std::string> get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    std::string get_or(const std::string& key, std::string fallback) const { return get(key).value_or(fallback); }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

inline bool parse_switch(std::string_view v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "off" || v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw Error("expected on/off, got '" + std::string(v) + "'");
}

inline std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') {
        return std::nullopt;
    }
    return std::string(v);
}

}  // namespace logsearch
