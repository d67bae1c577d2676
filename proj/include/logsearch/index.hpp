#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "logsearch/corpus.hpp"
#include "logsearch/embedding.hpp"
#include "logsearch/preprocess.hpp"
#include "logsearch/record.hpp"

namespace logsearch {

inline constexpr int kIndexFormatVersion = 1;
inline constexpr std::string_view kIndexFormatName = "logsearch-index";

class ProviderMismatchError : public Error {
  public:
    using Error::Error;
};

struct IndexConfig {
    NormalizationConfig normalization = default_normalization();
    bool expand_documents = true;
};

inline nlohmann::json to_json(const IndexConfig& c) {
    return {{"expand_documents", c.expand_documents},
            {"preserve_case", c.normalization.preserve_case},
            {"stopwords", c.normalization.stopwords},
            {"lemma_table", c.normalization.lemma_table}};
}

inline IndexConfig index_config_from_json(const nlohmann::json& j) {
    IndexConfig c;
    c.expand_documents = j.at("expand_documents").get<bool>();
    c.normalization.preserve_case = j.at("preserve_case").get<bool>();
    c.normalization.stopwords = j.at("stopwords").get<std::set<std::string>>();
    c.normalization.lemma_table = j.at("lemma_table").get<std::map<std::string, std::string>>();
    return c;
}

/// Postings key of a normalized term: Word terms keep case, Code/Numeric fold.
inline std::string posting_key(std::string_view term) {
    return classify_token(term) == TokenKind::Word ? std::string(term) : text::fold(term);
}

/// Smoothed idf, always positive.
inline double smoothed_idf(std::size_t doc_count, std::size_t df) {
    return std::log((1.0 + static_cast<double>(doc_count)) / (1.0 + static_cast<double>(df))) + 1.0;
}

using Postings = std::vector<std::uint32_t>;

/// Lowercased per-document term views used by the keyword and BM25 baselines.
struct LexicalView {
    std::vector<std::set<std::string>> keyword_terms;  // folded, stopwords dropped
    std::unordered_map<std::string, Postings> keyword_postings;
    std::vector<std::map<std::string, std::size_t>> bm25_counts;  // lemmatized then folded
    std::vector<std::size_t> bm25_length;
    std::unordered_map<std::string, std::size_t> bm25_df;
    double bm25_avg_length = 0.0;
};

/// Immutable search index over a record collection.
class Index {
  public:
    std::size_t doc_count() const { return records_.size(); }
    std::size_t dim() const { return dim_; }
    const ProviderSpec& provider_spec() const { return provider_spec_; }
    const std::string& provider_fingerprint() const { return fingerprint_; }
    const IndexConfig& config() const { return config_; }
    const Dictionary& dictionary() const { return dictionary_; }

    const std::vector<Record>& records() const { return records_; }
    const Record& record(std::size_t doc) const { return records_[doc]; }
    std::int64_t timestamp(std::size_t doc) const { return records_[doc].timestamp; }

    std::optional<std::size_t> find(std::string_view record_id) const {
        auto it = by_id_.find(std::string(record_id));
        if (it == by_id_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    const std::map<std::string, Postings>& postings() const { return postings_; }

    const Postings* postings_for(std::string_view key) const {
        auto it = postings_.find(std::string(key));
        return it == postings_.end() ? nullptr : &it->second;
    }

    /// Case-folded view over all postings, used for exact-match lookups.
    const Postings* exact_postings_for(std::string_view folded) const {
        auto it = exact_postings_.find(std::string(folded));
        return it == exact_postings_.end() ? nullptr : &it->second;
    }

    std::size_t df(std::string_view key) const {
        const auto* p = postings_for(key);
        return p == nullptr ? 0 : p->size();
    }

    double idf(std::string_view term) const { return smoothed_idf(doc_count(), df(posting_key(term))); }

    std::span<const float> doc_vector(std::size_t doc) const {
        return std::span<const float>(vectors_).subspan(doc * dim_, dim_);
    }

    const std::vector<std::string>& doc_terms(std::size_t doc) const { return doc_terms_[doc]; }

    const LexicalView& lexical(bool expanded) const { return expanded ? lexical_expanded_ : lexical_raw_; }

    /// Throws ProviderMismatchError when `provider` is not the one the index was built with.
    void check_provider(const EmbeddingProvider& provider) const {
        if (provider.fingerprint() != fingerprint_) {
            throw ProviderMismatchError("provider fingerprint mismatch: index built with " + fingerprint_ +
                                        ", query provider is " + provider.fingerprint());
        }
        if (provider.dim() != dim_) {
            throw ProviderMismatchError("dimension mismatch: index dim " + std::to_string(dim_) +
                                        ", provider dim " + std::to_string(provider.dim()));
        }
    }

    /// Reconstructs the provider recorded in the manifest and verifies it.
    std::unique_ptr<EmbeddingProvider> open_provider() const {
        auto p = make_provider(provider_spec_);
        check_provider(*p);
        return p;
    }

  private:
    friend Index build_index(std::vector<Record>, const Dictionary&, const EmbeddingProvider&, const IndexConfig&);
    friend Index load_index(const std::filesystem::path&);

    void finish();
    LexicalView make_lexical_view(bool expanded) const;

    std::vector<Record> records_;
    Dictionary dictionary_;
    IndexConfig config_;
    ProviderSpec provider_spec_;
    std::string fingerprint_;
    std::size_t dim_ = 0;
    std::map<std::string, Postings> postings_;
    std::vector<float> vectors_;
    std::vector<std::vector<std::string>> doc_terms_;

    // derived on build and load
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, Postings> exact_postings_;
    LexicalView lexical_raw_;
    LexicalView lexical_expanded_;
};

namespace detail {

inline void add_posting(Postings& list, std::uint32_t doc) {
    if (list.empty() || list.back() != doc) {
        list.push_back(doc);
    }
}

inline Postings merge_postings(const Postings& a, const Postings& b) {
    Postings out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace detail

inline LexicalView Index::make_lexical_view(bool expanded) const {
    LexicalView view;
    const auto n = records_.size();
    view.keyword_terms.resize(n);
    view.bm25_counts.resize(n);
    view.bm25_length.resize(n);
    std::size_t total_length = 0;
    for (std::size_t d = 0; d < n; ++d) {
        std::string body = expanded ? expand_record(records_[d], dictionary_).record.full_text() : records_[d].full_text();
        for (const auto& t : tokenize(body)) {
            auto folded = text::fold(t.surface);
            if (!(t.kind == TokenKind::Word && config_.normalization.is_stopword(t.surface))) {
                view.keyword_terms[d].insert(folded);
            }
            std::string lemma = t.surface;
            if (t.kind == TokenKind::Word) {
                auto it = config_.normalization.lemma_table.find(t.surface);
                if (it != config_.normalization.lemma_table.end()) {
                    lemma = it->second;
                }
            }
            ++view.bm25_counts[d][text::fold(lemma)];
            ++view.bm25_length[d];
        }
        total_length += view.bm25_length[d];
        for (const auto& term : view.keyword_terms[d]) {
            detail::add_posting(view.keyword_postings[term], static_cast<std::uint32_t>(d));
        }
        for (const auto& [term, _] : view.bm25_counts[d]) {
            ++view.bm25_df[term];
        }
    }
    view.bm25_avg_length = n == 0 ? 0.0 : static_cast<double>(total_length) / static_cast<double>(n);
    return view;
}

inline void Index::finish() {
    by_id_.clear();
    for (std::size_t d = 0; d < records_.size(); ++d) {
        by_id_.emplace(records_[d].id, d);
    }
    exact_postings_.clear();
    for (const auto& [term, list] : postings_) {
        auto& slot = exact_postings_[text::fold(term)];
        slot = slot.empty() ? list : detail::merge_postings(slot, list);
    }
    lexical_raw_ = make_lexical_view(false);
    lexical_expanded_ = make_lexical_view(true);
}

/// Builds the index: per record expand, tokenize, normalize; boolean postings
/// over all tokens; TF-IDF weighted document vectors over Word and Code terms.
inline Index build_index(std::vector<Record> records, const Dictionary& dictionary, const EmbeddingProvider& provider,
                         const IndexConfig& config = {}) {
    if (records.empty()) {
        throw Error("cannot build index: empty collection");
    }
    {
        std::unordered_map<std::string, std::size_t> seen;
        for (std::size_t i = 0; i < records.size(); ++i) {
            detail::validate_record(records[i], i + 1, seen);
        }
    }
    Index idx;
    idx.records_ = std::move(records);
    idx.dictionary_ = dictionary;
    idx.config_ = config;
    idx.provider_spec_ = provider.spec();
    idx.fingerprint_ = provider.fingerprint();
    idx.dim_ = provider.dim();

    const auto n = idx.records_.size();
    std::vector<std::map<std::string, std::size_t>> counts(n);
    idx.doc_terms_.resize(n);
    for (std::size_t d = 0; d < n; ++d) {
        const auto& r = idx.records_[d];
        std::string body = config.expand_documents ? expand_record(r, dictionary).record.full_text() : r.full_text();
        for (const auto& t : normalize(tokenize(body), config.normalization)) {
            detail::add_posting(idx.postings_[posting_key(t.normalized)], static_cast<std::uint32_t>(d));
            if (t.kind != TokenKind::Numeric) {
                ++counts[d][t.normalized];
            }
        }
        for (const auto& [term, _] : counts[d]) {
            idx.doc_terms_[d].push_back(term);
        }
    }

    idx.vectors_.assign(n * idx.dim_, 0.0F);
    for (std::size_t d = 0; d < n; ++d) {
        auto v = embed_document(counts[d], [&](std::string_view t) { return idx.idf(t); }, provider);
        std::copy(v.begin(), v.end(), idx.vectors_.begin() + static_cast<std::ptrdiff_t>(d * idx.dim_));
    }
    idx.finish();
    return idx;
}

// ---------------------------------------------------------------------------
// Persistence
//
// Directory layout (format version 1):
//   manifest.json     format name, version, doc count, dim, provider spec and
//                     fingerprint, config snapshot and its hash, file names
//   docstore.jsonl    one record per line, index order
//   postings.jsonl    {"term": ..., "docs": [ordinals]} sorted by term
//   doc_terms.jsonl   {"id": ..., "terms": [...]} index order
//   vectors.f32       doc_count x dim little-endian float32, row-major
//   dictionary.tsv    functional-location dictionary

namespace detail {

inline std::string config_hash(const IndexConfig& config) {
    return text::hex64(text::fnv1a64(to_json(config).dump()));
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << content;
    if (!out) {
        throw Error("write failed for '" + path.string() + "'");
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot read '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace detail

inline void save_index(const Index& idx, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json manifest;
    manifest["format"] = kIndexFormatName;
    manifest["version"] = kIndexFormatVersion;
    manifest["doc_count"] = idx.doc_count();
    manifest["dim"] = idx.dim();
    manifest["provider"] = to_json(idx.provider_spec());
    manifest["provider_fingerprint"] = idx.provider_fingerprint();
    manifest["config"] = to_json(idx.config());
    manifest["config_hash"] = detail::config_hash(idx.config());
    manifest["files"] = {{"docstore", "docstore.jsonl"},
                         {"postings", "postings.jsonl"},
                         {"doc_terms", "doc_terms.jsonl"},
                         {"vectors", "vectors.f32"},
                         {"dictionary", "dictionary.tsv"}};
    detail::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::ostringstream docstore;
    write_corpus(docstore, idx.records(), CorpusFormat::JsonLines);
    detail::write_text_file(dir / "docstore.jsonl", docstore.str());

    std::ostringstream postings;
    for (const auto& [term, list] : idx.postings()) {
        postings << nlohmann::json{{"term", term}, {"docs", list}}.dump() << '\n';
    }
    detail::write_text_file(dir / "postings.jsonl", postings.str());

    std::ostringstream terms;
    for (std::size_t d = 0; d < idx.doc_count(); ++d) {
        terms << nlohmann::json{{"id", idx.record(d).id}, {"terms", idx.doc_terms(d)}}.dump() << '\n';
    }
    detail::write_text_file(dir / "doc_terms.jsonl", terms.str());

    std::string bytes;
    bytes.reserve(idx.doc_count() * idx.dim() * 4);
    for (std::size_t d = 0; d < idx.doc_count(); ++d) {
        for (float f : idx.doc_vector(d)) {
            auto u = std::bit_cast<std::uint32_t>(f);
            for (int k = 0; k < 4; ++k) {
                bytes.push_back(static_cast<char>((u >> (8 * k)) & 0xFF));
            }
        }
    }
    detail::write_text_file(dir / "vectors.f32", bytes);

    std::ostringstream dict;
    write_dictionary(dict, idx.dictionary().entries());
    detail::write_text_file(dir / "dictionary.tsv", dict.str());
}

inline Index load_index(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(detail::read_text_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed index manifest: ") + e.what());
    }
    if (manifest.value("format", std::string{}) != kIndexFormatName) {
        throw FormatError("not a logsearch index: " + (dir / "manifest.json").string());
    }
    int version = manifest.value("version", -1);
    if (version != kIndexFormatVersion) {
        throw FormatError("unsupported index version " + std::to_string(version) + " (supported versions: " +
                          std::to_string(kIndexFormatVersion) + ")");
    }

    Index idx;
    try {
        idx.dim_ = manifest.at("dim").get<std::size_t>();
        idx.provider_spec_ = provider_spec_from_json(manifest.at("provider"));
        idx.fingerprint_ = manifest.at("provider_fingerprint").get<std::string>();
        idx.config_ = index_config_from_json(manifest.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed index manifest: ") + e.what());
    }
    if (manifest.value("config_hash", std::string{}) != detail::config_hash(idx.config_)) {
        throw FormatError("index manifest config hash does not match its config snapshot");
    }
    if (idx.provider_spec_.dim != idx.dim_) {
        throw FormatError("dimension mismatch: manifest dim " + std::to_string(idx.dim_) + " but provider dim " +
                          std::to_string(idx.provider_spec_.dim));
    }
    const auto n = manifest.at("doc_count").get<std::size_t>();

    {
        std::istringstream in(detail::read_text_file(dir / "docstore.jsonl"));
        idx.records_ = parse_corpus(in, CorpusFormat::JsonLines);
    }
    if (idx.records_.size() != n || n == 0) {
        throw FormatError("docstore holds " + std::to_string(idx.records_.size()) + " records, manifest says " +
                          std::to_string(n));
    }

    {
        std::istringstream in(detail::read_text_file(dir / "postings.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("term") || !j.contains("docs")) {
                throw FormatError("corrupt postings file");
            }
            auto list = j.at("docs").get<Postings>();
            for (std::size_t k = 0; k < list.size(); ++k) {
                if (list[k] >= n || (k > 0 && list[k] <= list[k - 1])) {
                    throw FormatError("corrupt postings for term '" + j.at("term").get<std::string>() + "'");
                }
            }
            idx.postings_.emplace(j.at("term").get<std::string>(), std::move(list));
        }
    }

    {
        std::istringstream in(detail::read_text_file(dir / "doc_terms.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            auto j = nlohmann::json::parse(line, nullptr, false);
            auto d = idx.doc_terms_.size();
            if (j.is_discarded() || d >= n || j.value("id", std::string{}) != idx.records_[d].id) {
                throw FormatError("corrupt doc_terms file");
            }
            idx.doc_terms_.push_back(j.at("terms").get<std::vector<std::string>>());
        }
        if (idx.doc_terms_.size() != n) {
            throw FormatError("corrupt doc_terms file: expected " + std::to_string(n) + " rows");
        }
    }

    {
        auto bytes = detail::read_text_file(dir / "vectors.f32");
        const std::size_t expected = n * idx.dim_ * 4;
        if (bytes.size() != expected) {
            if (bytes.size() % (n * 4) == 0) {
                throw FormatError("dimension mismatch: manifest dim " + std::to_string(idx.dim_) +
                                  " but vectors file holds " + std::to_string(bytes.size() / (n * 4)) +
                                  " components per document");
            }
            throw FormatError("corrupt or truncated vectors file: expected " + std::to_string(expected) +
                              " bytes, found " + std::to_string(bytes.size()));
        }
        idx.vectors_.resize(n * idx.dim_);
        for (std::size_t i = 0; i < idx.vectors_.size(); ++i) {
            std::uint32_t u = 0;
            for (int k = 0; k < 4; ++k) {
                u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + static_cast<std::size_t>(k)]))
                     << (8 * k);
            }
            float f = std::bit_cast<float>(u);
            if (!std::isfinite(f)) {
                throw FormatError("corrupt vectors file: non-finite component");
            }
            idx.vectors_[i] = f;
        }
    }

    {
        std::istringstream in(detail::read_text_file(dir / "dictionary.tsv"));
        idx.dictionary_ = Dictionary(parse_dictionary(in));
    }
    idx.finish();
    return idx;
}

}  // namespace logsearch
