#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "textforge/errors.hpp"
#include "textforge/io.hpp"
#include "textforge/random.hpp"
#include "textforge/text_norm.hpp"

namespace textforge {

enum class Provenance { original, generated };

inline std::string_view to_string(Provenance p) {
    return p == Provenance::original ? "original" : "generated";
}

/// Where a generated document came from.
struct GenerationMeta {
    std::string backend_id;
    std::string intended_label;
    std::string prompt_word;
    std::uint64_t seed = 0;

    bool operator==(const GenerationMeta&) const = default;
};

struct Document {
    std::string id;
    std::string text;
    std::string label;
    Provenance provenance = Provenance::original;
    std::optional<GenerationMeta> gen_meta;  // present iff provenance == generated

    bool operator==(const Document&) const = default;
};

/// Immutable ordered set of labeled documents plus the class list.
///
/// Class order is first appearance in the data unless an explicit list is
/// given. Per-class subcorpora keep the full class list, so every corpus
/// carries at least two classes even when its documents use only one.
class LabeledCorpus {
public:
    LabeledCorpus() = default;

    LabeledCorpus(std::vector<Document> documents, std::vector<std::string> classes)
        : documents_(std::move(documents)), classes_(std::move(classes)) {
        validate();
    }

    /// Infers the class list from labels in first-appearance order.
    static LabeledCorpus from_documents(std::vector<Document> documents) {
        std::vector<std::string> classes;
        std::unordered_set<std::string> seen;
        for (const auto& d : documents)
            if (seen.insert(d.label).second) classes.push_back(d.label);
        return LabeledCorpus(std::move(documents), std::move(classes));
    }

    const std::vector<Document>& documents() const noexcept { return documents_; }
    const std::vector<std::string>& classes() const noexcept { return classes_; }
    std::size_t size() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return documents_.empty(); }
    const Document& operator[](std::size_t i) const { return documents_[i]; }

    std::optional<std::size_t> find_class(std::string_view label) const {
        for (std::size_t i = 0; i < classes_.size(); ++i)
            if (classes_[i] == label) return i;
        return std::nullopt;
    }

    std::size_t class_index(std::string_view label) const {
        if (auto i = find_class(label)) return *i;
        throw DataError("unknown class label '" + std::string(label) + "'");
    }

    std::vector<std::size_t> label_indices() const {
        std::vector<std::size_t> out;
        out.reserve(documents_.size());
        for (const auto& d : documents_) out.push_back(class_index(d.label));
        return out;
    }

    /// Documents of one class; keeps the full class list.
    LabeledCorpus subcorpus(std::string_view label) const {
        class_index(label);
        std::vector<Document> docs;
        for (const auto& d : documents_)
            if (d.label == label) docs.push_back(d);
        return LabeledCorpus(std::move(docs), classes_);
    }

    /// Same documents under a different (superset) class list.
    LabeledCorpus with_classes(std::vector<std::string> classes) const {
        return LabeledCorpus(documents_, std::move(classes));
    }

    bool operator==(const LabeledCorpus&) const = default;

private:
    void validate() const {
        if (classes_.size() < 2)
            throw DataError("a corpus needs at least 2 classes, got " +
                            std::to_string(classes_.size()));
        std::unordered_set<std::string> class_set;
        for (const auto& c : classes_) {
            if (c.empty()) throw DataError("empty class label");
            if (!class_set.insert(c).second) throw DataError("duplicate class '" + c + "'");
        }
        std::unordered_set<std::string_view> ids;
        for (const auto& d : documents_) {
            if (d.id.empty()) throw DataError("document with empty id");
            if (!ids.insert(d.id).second) throw DataError("duplicate document id '" + d.id + "'");
            if (!class_set.contains(d.label))
                throw DataError("document '" + d.id + "' has label '" + d.label +
                                "' outside the class list");
            if ((d.provenance == Provenance::generated) != d.gen_meta.has_value())
                throw DataError("document '" + d.id +
                                "': gen_meta must be present exactly for generated documents");
        }
    }

    std::vector<Document> documents_;
    std::vector<std::string> classes_;
};

/// Concatenation; ids must stay unique and class lists must agree.
inline LabeledCorpus concat(const LabeledCorpus& a, const LabeledCorpus& b) {
    if (a.classes() != b.classes()) throw DataError("cannot merge corpora with different classes");
    std::vector<Document> docs = a.documents();
    docs.insert(docs.end(), b.documents().begin(), b.documents().end());
    return LabeledCorpus(std::move(docs), a.classes());
}

struct ClassStats {
    std::vector<std::string> classes;
    std::vector<std::size_t> doc_counts;
    std::vector<std::size_t> token_counts;
    double imbalance_ratio = 1.0;  // max / min over classes with documents

    json to_json() const {
        json per_class = json::array();
        for (std::size_t i = 0; i < classes.size(); ++i)
            per_class.push_back(
                {{"label", classes[i]}, {"documents", doc_counts[i]}, {"tokens", token_counts[i]}});
        return {{"classes", per_class}, {"imbalance_ratio", imbalance_ratio}};
    }
};

inline ClassStats class_stats(const LabeledCorpus& corpus) {
    ClassStats s;
    s.classes = corpus.classes();
    s.doc_counts.assign(s.classes.size(), 0);
    s.token_counts.assign(s.classes.size(), 0);
    for (const auto& d : corpus.documents()) {
        const auto c = corpus.class_index(d.label);
        ++s.doc_counts[c];
        s.token_counts[c] += tokenize(d.text).size();
    }
    std::size_t lo = 0, hi = 0;
    for (auto n : s.doc_counts) {
        if (n == 0) continue;
        lo = lo == 0 ? n : std::min(lo, n);
        hi = std::max(hi, n);
    }
    s.imbalance_ratio = lo == 0 ? 1.0 : static_cast<double>(hi) / static_cast<double>(lo);
    return s;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

enum class CorpusFormat { jsonl, csv };

inline CorpusFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

namespace detail {

inline json document_to_json(const Document& d) {
    json j = {{"id", d.id},
              {"text", d.text},
              {"label", d.label},
              {"provenance", std::string(to_string(d.provenance))}};
    if (d.gen_meta) {
        j["gen_meta"] = {{"backend_id", d.gen_meta->backend_id},
                         {"intended_label", d.gen_meta->intended_label},
                         {"prompt_word", d.gen_meta->prompt_word},
                         {"seed", d.gen_meta->seed}};
    }
    return j;
}

inline std::string required_string(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw DataError(where + ": missing \"" + key + "\"");
    if (!it->is_string()) throw DataError(where + ": \"" + key + "\" must be a string");
    return it->get<std::string>();
}

inline Document document_from_json(const json& j, std::size_t index, const std::string& where) {
    if (!j.is_object()) throw DataError(where + ": record is not a JSON object");
    Document d;
    if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError(where + ": \"id\" must be a string");
        d.id = it->get<std::string>();
    }
    if (d.id.empty()) d.id = "doc-" + std::to_string(index);
    d.text = required_string(j, "text", where);
    d.label = required_string(j, "label", where);
    if (d.label.empty()) throw DataError(where + ": empty label");

    if (auto it = j.find("provenance"); it != j.end()) {
        const auto p = it->is_string() ? it->get<std::string>() : std::string();
        if (p == "original") d.provenance = Provenance::original;
        else if (p == "generated") d.provenance = Provenance::generated;
        else throw DataError(where + ": provenance must be \"original\" or \"generated\"");
    }
    if (auto it = j.find("gen_meta"); it != j.end() && !it->is_null()) {
        const auto& m = *it;
        if (!m.is_object()) throw DataError(where + ": gen_meta must be an object");
        GenerationMeta meta;
        meta.backend_id = required_string(m, "backend_id", where + " gen_meta");
        meta.intended_label = required_string(m, "intended_label", where + " gen_meta");
        meta.prompt_word = required_string(m, "prompt_word", where + " gen_meta");
        auto s = m.find("seed");
        if (s == m.end() || !s->is_number_integer() || s->is_number_float())
            throw DataError(where + ": gen_meta.seed must be an integer");
        if (s->is_number_unsigned()) meta.seed = s->get<std::uint64_t>();
        else if (s->get<std::int64_t>() >= 0) meta.seed = static_cast<std::uint64_t>(s->get<std::int64_t>());
        else throw DataError(where + ": gen_meta.seed must be non-negative");
        d.gen_meta = std::move(meta);
    }
    return d;
}

// RFC 4180 records: quoted fields may contain commas, quotes ("") and newlines.
// Each record carries the 1-based line number it starts on.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(std::string_view s) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false, field_started = false;
    std::size_t line = 1, row_line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.emplace_back(row_line, std::move(row));
        row.clear();
        row_line = line;
    };

    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < s.size() && s[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started && !field.empty())
                    throw DataError("line " + std::to_string(line) + ": stray quote in CSV field");
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                ++line;
                end_row();
                break;
            default:
                field += c;
                field_started = true;
        }
    }
    if (in_quotes) throw DataError("line " + std::to_string(row_line) + ": unterminated quoted field");
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

inline void check_text(const Document& d, const std::string& where) {
    if (tokenize(d.text).empty()) throw DataError(where + ": empty text");
}

inline LabeledCorpus build_corpus(std::vector<Document> docs,
                                  std::optional<std::vector<std::string>> classes,
                                  const std::string& source) {
    if (docs.empty()) throw DataError("'" + source + "' contains no records");
    try {
        if (classes) return LabeledCorpus(std::move(docs), std::move(*classes));
        return LabeledCorpus::from_documents(std::move(docs));
    } catch (const DataError& e) {
        throw DataError("'" + source + "': " + e.what());
    }
}

}  // namespace detail

inline LabeledCorpus parse_jsonl(std::string_view contents,
                                 std::optional<std::vector<std::string>> classes = std::nullopt,
                                 const std::string& source = "<memory>") {
    std::vector<Document> docs;
    std::size_t line_no = 0, begin = 0;
    while (begin <= contents.size()) {
        auto end = contents.find('\n', begin);
        if (end == std::string_view::npos) end = contents.size();
        const auto line = contents.substr(begin, end - begin);
        ++line_no;
        begin = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (end == contents.size()) break;
            continue;
        }
        const std::string where = source + " line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            throw DataError(where + ": malformed JSON record");
        }
        docs.push_back(detail::document_from_json(j, docs.size(), where));
        detail::check_text(docs.back(), where);
        if (end == contents.size()) break;
    }
    return detail::build_corpus(std::move(docs), std::move(classes), source);
}

inline LabeledCorpus parse_csv(std::string_view contents,
                               std::optional<std::vector<std::string>> classes = std::nullopt,
                               const std::string& source = "<memory>") {
    const auto rows = detail::parse_csv(contents);
    if (rows.empty()) throw DataError("'" + source + "' contains no records");
    const auto& header = rows.front().second;
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    };
    const auto text_col = column("text"), label_col = column("label"), id_col = column("id");
    if (!text_col || !label_col)
        throw DataError(source + " line 1: CSV header must contain text and label columns");

    std::vector<Document> docs;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [line, fields] = rows[r];
        const std::string where = source + " line " + std::to_string(line);
        if (fields.size() != header.size())
            throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        Document d;
        if (id_col) d.id = fields[*id_col];
        if (d.id.empty()) d.id = "doc-" + std::to_string(docs.size());
        d.text = fields[*text_col];
        d.label = fields[*label_col];
        if (d.label.empty()) throw DataError(where + ": empty label");
        detail::check_text(d, where);
        docs.push_back(std::move(d));
    }
    return detail::build_corpus(std::move(docs), std::move(classes), source);
}

/// Loads a corpus. Missing ids become "doc-<record index>". An explicit class
/// list fixes the class order and allows files that use only some classes.
inline LabeledCorpus load_corpus(const std::filesystem::path& path,
                                 std::optional<CorpusFormat> format = std::nullopt,
                                 std::optional<std::vector<std::string>> classes = std::nullopt) {
    const std::string contents = read_file(path);
    const auto fmt = format.value_or(format_from_path(path));
    if (fmt == CorpusFormat::csv) return parse_csv(contents, std::move(classes), path.string());
    return parse_jsonl(contents, std::move(classes), path.string());
}

inline std::string to_jsonl(const LabeledCorpus& corpus) {
    std::string out;
    for (const auto& d : corpus.documents()) {
        out += detail::document_to_json(d).dump();
        out += '\n';
    }
    return out;
}

/// Always writes JSON lines.
inline void save_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path) {
    write_file_atomic(path, to_jsonl(corpus));
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct CorpusSplit {
    LabeledCorpus train;
    LabeledCorpus test;
};

/// Per class, round(test_fraction * count) documents (at least 1, at most
/// count - 1) go to the test side. Both sides keep the corpus order.
inline CorpusSplit stratified_split(const LabeledCorpus& corpus, double test_fraction,
                                    std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw DataError("test fraction must be in (0, 1)");
    const auto& classes = corpus.classes();
    std::vector<std::vector<std::size_t>> members(classes.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        members[corpus.class_index(corpus[i].label)].push_back(i);

    std::vector<bool> is_test(corpus.size(), false);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        auto& idx = members[c];
        if (idx.size() < 2)
            throw DataError("class '" + classes[c] + "' has " + std::to_string(idx.size()) +
                            " document(s); splitting needs at least 2");
        Rng rng(derive_seed(seed, c));
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[uniform_index(rng, i + 1)]);
        auto n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(idx.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
        for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = true;
    }
    std::vector<Document> train, test;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        (is_test[i] ? test : train).push_back(corpus[i]);
    return {LabeledCorpus(std::move(train), classes), LabeledCorpus(std::move(test), classes)};
}

}  // namespace textforge
