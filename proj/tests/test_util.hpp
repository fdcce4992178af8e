#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "textforge/corpus.hpp"

namespace tf_test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("textforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline textforge::Document doc(std::string id, std::string text, std::string label) {
    return {std::move(id), std::move(text), std::move(label), textforge::Provenance::original, std::nullopt};
}

inline textforge::Document generated(std::string id, std::string text, std::string label,
                                     std::string intended = {}) {
    if (intended.empty()) intended = label;
    return {std::move(id), std::move(text), std::move(label), textforge::Provenance::generated,
            textforge::GenerationMeta{"test-backend", std::move(intended), "p", 1}};
}

/// Corpus from (text, label) pairs with ids d0, d1, ...
inline textforge::LabeledCorpus corpus_of(const std::vector<std::pair<std::string, std::string>>& rows,
                                          std::vector<std::string> classes = {}) {
    std::vector<textforge::Document> docs;
    for (std::size_t i = 0; i < rows.size(); ++i)
        docs.push_back(doc("d" + std::to_string(i), rows[i].first, rows[i].second));
    if (classes.empty()) return textforge::LabeledCorpus::from_documents(std::move(docs));
    return textforge::LabeledCorpus(std::move(docs), std::move(classes));
}

}  // namespace tf_test
