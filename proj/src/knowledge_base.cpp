#include "secreflect/knowledge_base.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "secreflect/errors.hpp"
#include "secreflect/util.hpp"

namespace secreflect {

std::string entry_id(std::string_view code, std::string_view insight) {
    std::string joined;
    joined.reserve(code.size() + insight.size() + 1);
    joined.append(code).append("\n").append(insight);
    return sha256_hex(joined);
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }

void split_camel(std::string_view word, std::vector<std::string>& out) {
    std::size_t start = 0;
    for (std::size_t i = 1; i < word.size(); ++i) {
        const char prev = word[i - 1];
        const char cur = word[i];
        const bool lower_to_upper = (is_lower(prev) || std::isdigit(static_cast<unsigned char>(prev))) &&
                                    is_upper(cur);
        // "HTTPHeader": boundary before the 'H' that starts "Header".
        const bool acronym_end =
            is_upper(prev) && is_upper(cur) && i + 1 < word.size() && is_lower(word[i + 1]);
        if (lower_to_upper || acronym_end) {
            out.emplace_back(word.substr(start, i - start));
            start = i;
        }
    }
    out.emplace_back(word.substr(start));
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_alnum(text[i]))
            ++i;
        const std::size_t start = i;
        while (i < text.size() && is_alnum(text[i]))
            ++i;
        if (i > start) {
            const auto first = tokens.size();
            split_camel(text.substr(start, i - start), tokens);
            for (auto it = tokens.begin() + static_cast<std::ptrdiff_t>(first); it != tokens.end(); ++it)
                for (auto& c : *it)
                    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return tokens;
}

TermVector::TermVector(std::map<std::string, double> weights) : weights_(std::move(weights)) {
    std::erase_if(weights_, [](const auto& kv) { return kv.second <= 0.0; });
    const double n = norm();
    if (n > 0.0)
        for (auto& [term, w] : weights_)
            w /= n;
}

double TermVector::norm() const {
    double sum = 0.0;
    for (const auto& [term, w] : weights_)
        sum += w * w;
    return std::sqrt(sum);
}

double cosine(const TermVector& a, const TermVector& b) {
    const auto& small = a.weights().size() <= b.weights().size() ? a.weights() : b.weights();
    const auto& large = a.weights().size() <= b.weights().size() ? b.weights() : a.weights();
    double dot = 0.0;
    for (const auto& [term, w] : small) {
        auto it = large.find(term);
        if (it != large.end())
            dot += w * it->second;
    }
    return std::clamp(dot, 0.0, 1.0);
}

void CorpusStats::add_document(std::string_view text) {
    ++documents_;
    auto terms = tokenize(text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& t : terms)
        ++df_[t];
}

std::size_t CorpusStats::document_frequency(const std::string& term) const {
    auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
}

double CorpusStats::idf(const std::string& term) const {
    const double n = static_cast<double>(documents_);
    const double df = static_cast<double>(document_frequency(term));
    return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

TermVector vectorize(std::string_view text, const CorpusStats& stats) {
    std::map<std::string, double> tf;
    for (auto& t : tokenize(text))
        tf[t] += 1.0;
    for (auto& [term, w] : tf)
        w *= stats.idf(term);
    return TermVector(std::move(tf));
}

struct KnowledgeBase::Index {
    CorpusStats stats;
    std::vector<std::string> ids; // by position
    // term -> (position, weight) postings
    std::unordered_map<std::string, std::vector<std::pair<std::size_t, double>>> postings;

    explicit Index(const std::vector<KnowledgeEntry>& entries) {
        std::vector<std::string> docs;
        docs.reserve(entries.size());
        for (const auto& e : entries) {
            docs.push_back(e.document());
            stats.add_document(docs.back());
            ids.push_back(e.id);
        }
        for (std::size_t pos = 0; pos < docs.size(); ++pos) {
            const TermVector v = vectorize(docs[pos], stats);
            for (const auto& [term, w] : v.weights())
                postings[term].emplace_back(pos, w);
        }
    }

    // Accumulates dot products through the postings lists.
    std::vector<std::pair<std::size_t, double>> score(std::string_view query, int k,
                                                      double threshold) const {
        const TermVector q = vectorize(query, stats);
        std::vector<double> acc(ids.size(), 0.0);
        for (const auto& [term, qw] : q.weights()) {
            auto it = postings.find(term);
            if (it == postings.end())
                continue;
            for (const auto& [pos, w] : it->second)
                acc[pos] += qw * w;
        }
        std::vector<std::pair<std::size_t, double>> hits;
        for (std::size_t pos = 0; pos < acc.size(); ++pos) {
            const double s = std::clamp(acc[pos], 0.0, 1.0);
            if (!q.empty() && s > 0.0 && s + kScoreTolerance >= threshold)
                hits.emplace_back(pos, s);
        }
        std::sort(hits.begin(), hits.end(), [this](const auto& a, const auto& b) {
            if (a.second != b.second)
                return a.second > b.second;
            return ids[a.first] < ids[b.first];
        });
        if (hits.size() > static_cast<std::size_t>(k))
            hits.resize(static_cast<std::size_t>(k));
        return hits;
    }
};

KnowledgeBase::KnowledgeBase(double dedup_threshold, Clock clock)
    : dedup_threshold_(dedup_threshold), clock_(std::move(clock)) {
    set_dedup_threshold(dedup_threshold);
    if (!clock_)
        clock_ = [] { return std::chrono::system_clock::now(); };
}

void KnowledgeBase::set_dedup_threshold(double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw UsageError("dedup threshold must lie in [0, 1]");
    std::unique_lock lock(mutex_);
    dedup_threshold_ = threshold;
}

std::shared_ptr<const KnowledgeBase::Index> KnowledgeBase::snapshot_locked() const {
    if (!index_)
        index_ = std::make_shared<const Index>(entries_);
    return index_;
}

std::shared_ptr<const KnowledgeBase::Index> KnowledgeBase::snapshot() const {
    {
        std::shared_lock lock(mutex_);
        if (index_)
            return index_;
    }
    std::unique_lock lock(mutex_);
    return snapshot_locked();
}

RetrievalResult KnowledgeBase::retrieve(const CodeTask& task, const Candidate& candidate, int k,
                                        double threshold) {
    return retrieve_text(task.prompt_code + "\n" + candidate.code, k, threshold);
}

RetrievalResult KnowledgeBase::retrieve_text(std::string_view query, int k, double threshold) {
    if (k < 1)
        throw UsageError("retrieval k must be >= 1");
    if (threshold < 0.0 || threshold > 1.0)
        throw UsageError("retrieval threshold must lie in [0, 1]");

    RetrievalResult result;
    result.query_digest = sha256_hex(query);

    const auto index = snapshot();
    const auto hits = index->score(query, k, threshold);
    if (hits.empty())
        return result;

    std::unique_lock lock(mutex_);
    for (const auto& [pos, score] : hits) {
        const auto& id = index->ids[pos];
        // The store may have been cleared or reloaded since the snapshot.
        auto it = std::find_if(entries_.begin(), entries_.end(),
                               [&](const KnowledgeEntry& e) { return e.id == id; });
        if (it == entries_.end())
            continue;
        ++it->use_count;
        result.hits.push_back({*it, score});
    }
    return result;
}

UpdateResult KnowledgeBase::update(const CodeTask& task, const Candidate& final_candidate,
                                   std::string_view insight, std::vector<std::string> cwe_tags) {
    if (trim(insight).empty())
        throw UsageError("knowledge update rejected: insight is empty");

    KnowledgeEntry entry;
    entry.code = final_candidate.code;
    entry.insight = std::string(insight);
    entry.id = entry_id(entry.code, entry.insight);
    entry.task_digest = sha256_hex(task.prompt_code);
    std::sort(cwe_tags.begin(), cwe_tags.end());
    cwe_tags.erase(std::unique(cwe_tags.begin(), cwe_tags.end()), cwe_tags.end());
    entry.cwe_tags = std::move(cwe_tags);

    std::unique_lock lock(mutex_);
    for (auto& existing : entries_) {
        if (existing.id == entry.id) {
            ++existing.use_count;
            return Merged{existing.id};
        }
    }
    const auto index = snapshot_locked();
    const auto best = index->score(entry.document(), 1, dedup_threshold_);
    if (!best.empty()) {
        auto& target = entries_[best.front().first];
        ++target.use_count;
        return Merged{target.id};
    }
    entry.created_at = format_rfc3339(clock_());
    entries_.push_back(entry);
    index_.reset();
    return Inserted{entry.id};
}

std::size_t KnowledgeBase::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::vector<KnowledgeEntry> KnowledgeBase::entries() const {
    std::shared_lock lock(mutex_);
    return entries_;
}

void KnowledgeBase::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
    index_.reset();
}

std::string kb_record(const KnowledgeEntry& e) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["task_digest"] = e.task_digest;
    j["code"] = e.code;
    j["insight"] = e.insight;
    j["cwe_tags"] = e.cwe_tags;
    j["created_at"] = e.created_at;
    j["use_count"] = e.use_count;
    return j.dump();
}

std::string KnowledgeBase::serialize() const {
    std::shared_lock lock(mutex_);
    std::string out;
    for (const auto& e : entries_) {
        out += kb_record(e);
        out += '\n';
    }
    return out;
}

void KnowledgeBase::persist(const std::filesystem::path& path) const {
    write_file_atomic(path, serialize());
}

namespace {

KnowledgeEntry parse_record(const std::string& line, std::size_t line_no) {
    auto fail = [&](const std::string& why) -> KbFormatError {
        return KbFormatError("knowledge base line " + std::to_string(line_no) + ": " + why, line_no);
    };
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
        throw fail("not a valid JSON record");
    }
    if (!j.is_object())
        throw fail("record is not an object");
    KnowledgeEntry e;
    try {
        e.id = j.at("id").get<std::string>();
        e.task_digest = j.at("task_digest").get<std::string>();
        e.code = j.at("code").get<std::string>();
        e.insight = j.at("insight").get<std::string>();
        e.cwe_tags = j.at("cwe_tags").get<std::vector<std::string>>();
        e.created_at = j.at("created_at").get<std::string>();
        e.use_count = j.at("use_count").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& ex) {
        throw fail(std::string("bad field: ") + ex.what());
    }
    if (e.insight.empty())
        throw fail("empty insight");
    if (e.id != entry_id(e.code, e.insight))
        throw fail("id does not match the digest of code and insight");
    return e;
}

} // namespace

std::vector<KnowledgeEntry> parse_kb_text(std::string_view text) {
    std::vector<KnowledgeEntry> out;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        const bool terminated = nl != std::string_view::npos;
        std::string line(text.substr(pos, terminated ? nl - pos : std::string_view::npos));
        pos = terminated ? nl + 1 : text.size();
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty())
            continue;
        auto e = parse_record(line, line_no);
        if (!seen.insert(e.id).second)
            throw KbFormatError("knowledge base line " + std::to_string(line_no) +
                                    ": duplicate id " + e.id,
                                line_no);
        out.push_back(std::move(e));
    }
    return out;
}

void KnowledgeBase::load_text(std::string_view text) {
    auto parsed = parse_kb_text(text);
    std::unique_lock lock(mutex_);
    entries_ = std::move(parsed);
    index_.reset();
}

void KnowledgeBase::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw KbFormatError("knowledge base file not found: " + path.string(), 0);
    load_text(read_file(path));
}

std::size_t KnowledgeBase::import_entries(const std::vector<KnowledgeEntry>& incoming) {
    std::unique_lock lock(mutex_);
    std::unordered_set<std::string> have;
    for (const auto& e : entries_)
        have.insert(e.id);
    std::size_t added = 0;
    for (const auto& e : incoming) {
        if (have.insert(e.id).second) {
            entries_.push_back(e);
            ++added;
        }
    }
    if (added)
        index_.reset();
    return added;
}

} // namespace secreflect
