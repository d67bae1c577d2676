#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "logsearch/text.hpp"

namespace logsearch {

using Vector = std::vector<float>;

// ---------------------------------------------------------------------------
// Character n-grams

/// fastText-style subword features: the term wrapped in '<' '>', every
/// substring of n_min..n_max code points ordered by length then position,
/// followed by the whole wrapped term as one extra feature.
inline std::vector<std::string> char_ngrams(std::string_view term, std::size_t n_min = 3, std::size_t n_max = 5) {
    std::vector<std::string> out;
    if (term.empty()) {
        return out;
    }
    std::string wrapped = "<" + std::string(term) + ">";
    auto cps = text::code_points(wrapped);
    for (std::size_t n = n_min; n <= n_max; ++n) {
        if (n > cps.size()) {
            break;
        }
        for (std::size_t i = 0; i + n <= cps.size(); ++i) {
            std::string g;
            for (std::size_t k = i; k < i + n; ++k) {
                g += cps[k];
            }
            out.push_back(std::move(g));
        }
    }
    out.push_back(std::move(wrapped));
    return out;
}

// ---------------------------------------------------------------------------
// Hash mixing
//
// Feature vectors of the hashed provider are bit-exact across platforms:
//   h     = FNV-1a-64(feature UTF-8 bytes)       offset 0xcbf29ce484222325, prime 0x100000001b3
//   base  = splitmix64(seed XOR h)
//   z_j   = splitmix64(base + j)                  j = 0 .. dim-1
//   c_j   = (z_j >> 11) * 2^-53 * 2 - 1          in [-1, 1)
// splitmix64(x): x += 0x9e3779b97f4a7c15;
//                x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9;
//                x = (x ^ (x >> 27)) * 0x94d049bb133111eb;
//                return x ^ (x >> 31);

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double unit_interval(std::uint64_t z) { return static_cast<double>(z >> 11) * 0x1.0p-53; }

inline double feature_component(std::uint64_t seed, std::uint64_t feature_hash, std::size_t j) {
    std::uint64_t base = splitmix64(seed ^ feature_hash);
    return unit_interval(splitmix64(base + j)) * 2.0 - 1.0;
}

// ---------------------------------------------------------------------------
// Vector helpers (float storage, double accumulation)

inline double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return s;
}

inline double l2_norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

/// Cosine similarity; 0 when either side is the zero vector.
inline double cosine(std::span<const float> a, std::span<const float> b) {
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot(a, b) / (na * nb);
}

inline Vector normalized(const std::vector<double>& acc) {
    double norm = 0.0;
    for (double v : acc) {
        norm += v * v;
    }
    norm = std::sqrt(norm);
    Vector out(acc.size(), 0.0F);
    if (norm == 0.0 || !std::isfinite(norm)) {
        return out;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
}

inline bool is_zero(std::span<const float> v) {
    for (float x : v) {
        if (x != 0.0F) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Providers

/// Serializable description of a provider, enough to reconstruct it.
struct ProviderSpec {
    std::string kind = "hashed";  // hashed | file
    std::uint64_t seed = 1;       // hashed seed, or OOV fallback seed for file
    std::size_t dim = 300;
    std::string path;  // file provider only

    friend bool operator==(const ProviderSpec&, const ProviderSpec&) = default;
};

inline nlohmann::json to_json(const ProviderSpec& s) {
    nlohmann::json j{{"kind", s.kind}, {"seed", s.seed}, {"dim", s.dim}};
    if (s.kind == "file") {
        j["path"] = s.path;
    }
    return j;
}

inline ProviderSpec provider_spec_from_json(const nlohmann::json& j) {
    ProviderSpec s;
    s.kind = j.at("kind").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.dim = j.at("dim").get<std::size_t>();
    s.path = j.value("path", std::string{});
    return s;
}

/// Maps terms to unit vectors (or the zero vector). Vectors are memoized; the
/// returned span stays valid for the provider's lifetime. Thread-safe.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    std::size_t dim() const { return dim_; }
    const std::string& fingerprint() const { return fingerprint_; }
    virtual ProviderSpec spec() const = 0;

    std::span<const float> vector(std::string_view term) const {
        {
            std::shared_lock lock(mutex_);
            auto it = cache_.find(std::string(term));
            if (it != cache_.end()) {
                return it->second;
            }
        }
        Vector v = compute(term);
        std::unique_lock lock(mutex_);
        auto [it, _] = cache_.try_emplace(std::string(term), std::move(v));
        return it->second;
    }

  protected:
    EmbeddingProvider(std::size_t dim, std::string fingerprint) : dim_(dim), fingerprint_(std::move(fingerprint)) {}

    virtual Vector compute(std::string_view term) const = 0;

  private:
    std::size_t dim_;
    std::string fingerprint_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<std::string, Vector> cache_;
};

/// Deterministic stand-in for a subword embedding model: a term's vector is the
/// normalized mean of pseudo-random feature vectors over its character n-grams,
/// so terms sharing n-grams (a word and its shortening) point the same way.
class HashedProvider final : public EmbeddingProvider {
  public:
    HashedProvider(std::uint64_t seed, std::size_t dim)
        : EmbeddingProvider(check_dim(dim), make_fingerprint(seed, dim)), seed_(seed) {}

    ProviderSpec spec() const override { return {"hashed", seed_, dim(), {}}; }

    std::uint64_t seed() const { return seed_; }

  protected:
    Vector compute(std::string_view term) const override {
        std::vector<double> acc(dim(), 0.0);
        auto grams = char_ngrams(term);
        if (grams.empty()) {
            return Vector(dim(), 0.0F);
        }
        for (const auto& g : grams) {
            std::uint64_t h = text::fnv1a64(g);
            std::uint64_t base = splitmix64(seed_ ^ h);
            for (std::size_t j = 0; j < acc.size(); ++j) {
                acc[j] += unit_interval(splitmix64(base + j)) * 2.0 - 1.0;
            }
        }
        for (double& v : acc) {
            v /= static_cast<double>(grams.size());
        }
        return normalized(acc);
    }

  private:
    static std::size_t check_dim(std::size_t dim) {
        if (dim < 8) {
            throw Error("embedding dimension must be >= 8, got " + std::to_string(dim));
        }
        return dim;
    }

    static std::string make_fingerprint(std::uint64_t seed, std::size_t dim) {
        return "hashed-" +
               text::hex64(text::fnv1a64("hashed-ngram-v1;seed=" + std::to_string(seed) +
                                         ";dim=" + std::to_string(dim) + ";ngrams=3-5"));
    }

    std::uint64_t seed_;
};

/// Word vectors from a text file ("count dim" header, then "token c1 .. c_dim"
/// per line). Out-of-vocabulary terms fall back to a HashedProvider.
class FileProvider final : public EmbeddingProvider {
  public:
    FileProvider(const std::filesystem::path& path, std::uint64_t fallback_seed)
        : FileProvider(read_file(path), path, fallback_seed) {}

    ProviderSpec spec() const override { return {"file", fallback_->seed(), dim(), path_}; }

    std::size_t vocabulary_size() const { return table_.size(); }

  protected:
    Vector compute(std::string_view term) const override {
        auto it = table_.find(std::string(term));
        if (it != table_.end()) {
            return it->second;
        }
        auto v = fallback_->vector(term);
        return Vector(v.begin(), v.end());
    }

  private:
    struct Parsed {
        std::size_t dim = 0;
        std::string content_hash;
        std::unordered_map<std::string, Vector> table;
    };

    FileProvider(Parsed parsed, const std::filesystem::path& path, std::uint64_t fallback_seed)
        : EmbeddingProvider(parsed.dim, "file-" + text::hex64(text::fnv1a64(
                                                      "file-vectors-v1;content=" + parsed.content_hash +
                                                      ";fallback_seed=" + std::to_string(fallback_seed)))),
          path_(path.string()),
          table_(std::move(parsed.table)),
          fallback_(std::make_unique<HashedProvider>(fallback_seed, parsed.dim)) {}

    static Parsed read_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw Error("cannot open word-vector file '" + path.string() + "'");
        }
        std::stringstream buf;
        buf << in.rdbuf();
        std::string content = buf.str();

        Parsed p;
        p.content_hash = text::hex64(text::fnv1a64(content));
        std::istringstream lines(content);
        std::string line;
        if (!std::getline(lines, line)) {
            throw FormatError("word-vector file is empty");
        }
        std::size_t count = 0;
        {
            std::istringstream header(line);
            if (!(header >> count >> p.dim)) {
                throw FormatError("word-vector header must be 'count dim'");
            }
        }
        if (p.dim < 8) {
            throw FormatError("word-vector dimension must be >= 8");
        }
        std::size_t row = 1;
        while (std::getline(lines, line)) {
            ++row;
            if (text::trim(line).empty()) {
                continue;
            }
            std::istringstream cells(line);
            std::string token;
            cells >> token;
            std::vector<double> acc;
            std::string cell;
            while (cells >> cell) {
                double v = 0.0;
                try {
                    std::size_t used = 0;
                    v = std::stod(cell, &used);
                    if (used != cell.size()) {
                        throw FormatError("");
                    }
                } catch (const std::exception&) {
                    throw FormatError("non-numeric component '" + cell + "' at line " + std::to_string(row));
                }
                if (!std::isfinite(v)) {
                    throw FormatError("non-finite component at line " + std::to_string(row));
                }
                acc.push_back(v);
            }
            if (acc.size() != p.dim) {
                throw FormatError("dimension mismatch at line " + std::to_string(row) + ": expected " +
                                  std::to_string(p.dim) + ", found " + std::to_string(acc.size()));
            }
            p.table.insert_or_assign(token, normalized(acc));
        }
        if (p.table.size() != count) {
            throw FormatError("word-vector header announces " + std::to_string(count) + " rows, found " +
                              std::to_string(p.table.size()));
        }
        return p;
    }

    std::string path_;
    std::unordered_map<std::string, Vector> table_;
    std::unique_ptr<HashedProvider> fallback_;
};

inline std::unique_ptr<EmbeddingProvider> hashed_provider(std::uint64_t seed, std::size_t dim) {
    return std::make_unique<HashedProvider>(seed, dim);
}

inline std::unique_ptr<EmbeddingProvider> file_provider(const std::filesystem::path& path, std::uint64_t fallback_seed) {
    return std::make_unique<FileProvider>(path, fallback_seed);
}

inline std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec) {
    if (spec.kind == "hashed") {
        return hashed_provider(spec.seed, spec.dim);
    }
    if (spec.kind == "file") {
        auto p = file_provider(spec.path, spec.seed);
        if (p->dim() != spec.dim) {
            throw Error("dimension mismatch: provider file has dim " + std::to_string(p->dim()) + ", expected " +
                        std::to_string(spec.dim));
        }
        return p;
    }
    throw Error("unknown provider kind '" + spec.kind + "'");
}

// ---------------------------------------------------------------------------
// Query and document vectors

/// Unweighted mean of term vectors, normalized. Zero vector for no terms.
inline Vector embed_query(const std::vector<std::string>& terms, const EmbeddingProvider& provider) {
    std::vector<double> acc(provider.dim(), 0.0);
    for (const auto& t : terms) {
        auto v = provider.vector(t);
        for (std::size_t j = 0; j < acc.size(); ++j) {
            acc[j] += v[j];
        }
    }
    if (!terms.empty()) {
        for (double& x : acc) {
            x /= static_cast<double>(terms.size());
        }
    }
    return normalized(acc);
}

/// TF-IDF weighted mean of term vectors, normalized. `idf` is any callable
/// string_view -> double. Summation follows the map's sorted term order.
template <typename IdfFn>
    requires std::invocable<IdfFn, std::string_view>
Vector embed_document(const std::map<std::string, std::size_t>& term_counts, IdfFn&& idf,
                      const EmbeddingProvider& provider) {
    std::vector<double> acc(provider.dim(), 0.0);
    double mass = 0.0;
    for (const auto& [term, tf] : term_counts) {
        double w = static_cast<double>(tf) * static_cast<double>(idf(std::string_view(term)));
        if (w <= 0.0) {
            continue;
        }
        auto v = provider.vector(term);
        for (std::size_t j = 0; j < acc.size(); ++j) {
            acc[j] += w * v[j];
        }
        mass += w;
    }
    if (mass <= 0.0) {
        return Vector(provider.dim(), 0.0F);
    }
    for (double& x : acc) {
        x /= mass;
    }
    return normalized(acc);
}

inline Vector embed_document(const std::map<std::string, std::size_t>& term_counts,
                             const std::map<std::string, double>& idf, const EmbeddingProvider& provider) {
    return embed_document(
        term_counts,
        [&](std::string_view t) {
            auto it = idf.find(std::string(t));
            return it == idf.end() ? 0.0 : it->second;
        },
        provider);
}

}  // namespace logsearch
