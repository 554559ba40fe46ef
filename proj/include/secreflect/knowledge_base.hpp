#pragma once

// The security knowledge base: lexical TF-IDF retrieval over stored
// (code, insight) entries, near-duplicate merging, and JSONL persistence.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "secreflect/domain.hpp"

namespace secreflect {

struct KnowledgeEntry {
    std::string id;          // sha256(code + "\n" + insight)
    std::string task_digest; // sha256(task prompt)
    std::string code;
    std::string insight;
    std::vector<std::string> cwe_tags;
    std::string created_at; // RFC 3339
    std::uint64_t use_count = 0;

    // Text the entry is indexed under.
    std::string document() const { return code + "\n" + insight; }

    friend bool operator==(const KnowledgeEntry&, const KnowledgeEntry&) = default;
};

std::string entry_id(std::string_view code, std::string_view insight);

// Lowercased terms: split on non-alphanumerics, then on camelCase
// boundaries ("parseHTTPHeader" -> parse, http, header).
std::vector<std::string> tokenize(std::string_view text);

// Sparse, L2-normalized term weights. Empty for text without terms.
class TermVector {
public:
    TermVector() = default;
    // Normalizes the given nonnegative weights.
    explicit TermVector(std::map<std::string, double> weights);

    const std::map<std::string, double>& weights() const noexcept { return weights_; }
    bool empty() const noexcept { return weights_.empty(); }
    double norm() const;

private:
    std::map<std::string, double> weights_;
};

double cosine(const TermVector& a, const TermVector& b);

// Document frequencies over a set of documents.
class CorpusStats {
public:
    CorpusStats() = default;
    void add_document(std::string_view text);

    std::size_t documents() const noexcept { return documents_; }
    std::size_t document_frequency(const std::string& term) const;
    // Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1.
    double idf(const std::string& term) const;

private:
    std::size_t documents_ = 0;
    std::unordered_map<std::string, std::size_t> df_;
};

// Raw term frequency scaled by idf, then normalized.
TermVector vectorize(std::string_view text, const CorpusStats& stats);

struct ScoredEntry {
    KnowledgeEntry entry;
    double score = 0.0;
};

struct RetrievalResult {
    std::vector<ScoredEntry> hits; // nonincreasing score, ties by ascending id
    std::string query_digest;

    bool empty() const noexcept { return hits.empty(); }
    double top_score() const noexcept { return hits.empty() ? 0.0 : hits.front().score; }
};

// Scores within this distance of a threshold count as meeting it, so an
// exact-text query still clears threshold 1.0 despite rounding.
inline constexpr double kScoreTolerance = 1e-12;

struct Inserted {
    std::string id;
};
struct Merged {
    std::string id;
};
using UpdateResult = std::variant<Inserted, Merged>;

// Thread-safe store. Readers share; update/persist/clear are exclusive.
// Retrieval scores against an immutable index snapshot, rebuilt lazily after
// mutation.
class KnowledgeBase {
public:
    using Clock = std::function<std::chrono::system_clock::time_point()>;

    explicit KnowledgeBase(double dedup_threshold = 0.90, Clock clock = {});

    KnowledgeBase(const KnowledgeBase&) = delete;
    KnowledgeBase& operator=(const KnowledgeBase&) = delete;

    // Retrieve(x, y): query text is task prompt + "\n" + candidate code.
    RetrievalResult retrieve(const CodeTask& task, const Candidate& candidate, int k,
                             double threshold);
    RetrievalResult retrieve_text(std::string_view query, int k, double threshold);

    // UpdateRAG(x, y). Throws UsageError on empty insight.
    UpdateResult update(const CodeTask& task, const Candidate& final_candidate,
                        std::string_view insight, std::vector<std::string> cwe_tags);

    std::size_t size() const;
    std::vector<KnowledgeEntry> entries() const;
    void clear();

    double dedup_threshold() const noexcept { return dedup_threshold_; }
    void set_dedup_threshold(double threshold);

    // One JSON object per line; written atomically.
    void persist(const std::filesystem::path& path) const;
    std::string serialize() const;
    // Replaces the contents with the file's entries. A malformed line throws
    // KbFormatError naming it and leaves the store untouched.
    void load(const std::filesystem::path& path);
    void load_text(std::string_view text);

    // Adds entries whose id is not already present; returns how many.
    std::size_t import_entries(const std::vector<KnowledgeEntry>& incoming);

private:
    struct Index;
    std::shared_ptr<const Index> snapshot() const;
    std::shared_ptr<const Index> snapshot_locked() const;

    double dedup_threshold_;
    Clock clock_;
    mutable std::shared_mutex mutex_;
    std::vector<KnowledgeEntry> entries_;
    mutable std::shared_ptr<const Index> index_;
};

// Parses a KB file body without touching any store.
std::vector<KnowledgeEntry> parse_kb_text(std::string_view text);
std::string kb_record(const KnowledgeEntry& entry);

} // namespace secreflect
