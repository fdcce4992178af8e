#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "textforge/errors.hpp"
#include "textforge/io.hpp"

namespace textforge {

/// counts[i][j] = documents of true class i predicted as j.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t n) : n_(n), counts_(n * n, 0) {}

    static ConfusionMatrix from(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                                std::size_t n_classes) {
        if (gold.size() != pred.size()) throw DimensionError("gold and predictions differ in length");
        ConfusionMatrix m(n_classes);
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (gold[i] >= n_classes || pred[i] >= n_classes)
                throw DataError("class index out of range at position " + std::to_string(i));
            ++m.counts_[gold[i] * n_classes + pred[i]];
        }
        return m;
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t operator()(std::size_t truth, std::size_t predicted) const {
        return counts_[truth * n_ + predicted];
    }
    std::size_t& operator()(std::size_t truth, std::size_t predicted) {
        return counts_[truth * n_ + predicted];
    }

    std::size_t total() const {
        std::size_t s = 0;
        for (auto c : counts_) s += c;
        return s;
    }
    std::size_t trace() const {
        std::size_t s = 0;
        for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
        return s;
    }
    std::size_t row_sum(std::size_t i) const {
        std::size_t s = 0;
        for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j);
        return s;
    }
    std::size_t column_sum(std::size_t j) const {
        std::size_t s = 0;
        for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, j);
        return s;
    }

    json to_json() const {
        json rows = json::array();
        for (std::size_t i = 0; i < n_; ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < n_; ++j) row.push_back((*this)(i, j));
            rows.push_back(std::move(row));
        }
        return rows;
    }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> counts_;
};

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const ClassScores&) const = default;
};

struct EvaluationReport {
    std::vector<std::string> labels;
    ConfusionMatrix confusion;
    double micro_f1 = 0.0;  // equals accuracy
    double macro_f1 = 0.0;  // unweighted over all classes
    double mcc = 0.0;
    std::vector<ClassScores> per_class;
    // Quantities that hit a zero denominator and were set to 0,
    // e.g. "precision[neg]" or "mcc".
    std::vector<std::string> zero_division;

    json to_json() const {
        json per = json::array();
        for (std::size_t c = 0; c < per_class.size(); ++c)
            per.push_back({{"label", labels[c]},
                           {"precision", per_class[c].precision},
                           {"recall", per_class[c].recall},
                           {"f1", per_class[c].f1}});
        return {{"micro_f1", micro_f1},  {"macro_f1", macro_f1},           {"mcc", mcc},
                {"per_class", per},      {"confusion", confusion.to_json()}, {"zero_division", zero_division}};
    }

    static EvaluationReport from_json(const json& j) {
        EvaluationReport r;
        r.micro_f1 = j.at("micro_f1").get<double>();
        r.macro_f1 = j.at("macro_f1").get<double>();
        r.mcc = j.at("mcc").get<double>();
        for (const auto& p : j.at("per_class")) {
            r.labels.push_back(p.at("label").get<std::string>());
            r.per_class.push_back({p.at("precision").get<double>(), p.at("recall").get<double>(),
                                   p.at("f1").get<double>()});
        }
        const auto& rows = j.at("confusion");
        r.confusion = ConfusionMatrix(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t k = 0; k < rows[i].size(); ++k) r.confusion(i, k) = rows[i][k].get<std::size_t>();
        if (auto z = j.find("zero_division"); z != j.end()) r.zero_division = z->get<std::vector<std::string>>();
        return r;
    }
};

inline EvaluationReport evaluate(const ConfusionMatrix& cm, std::vector<std::string> labels = {}) {
    const std::size_t n = cm.size();
    if (labels.empty())
        for (std::size_t c = 0; c < n; ++c) labels.push_back(std::to_string(c));
    if (labels.size() != n) throw DimensionError("label list does not match the class count");

    EvaluationReport r;
    r.labels = std::move(labels);
    r.confusion = cm;
    const std::size_t total = cm.total();
    if (total == 0) throw DataError("cannot evaluate an empty prediction set");
    r.micro_f1 = static_cast<double>(cm.trace()) / static_cast<double>(total);

    double f1_sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t tp = cm(c, c);
        const std::size_t predicted = cm.column_sum(c);
        const std::size_t actual = cm.row_sum(c);
        ClassScores s;
        if (predicted > 0) s.precision = static_cast<double>(tp) / static_cast<double>(predicted);
        else r.zero_division.push_back("precision[" + r.labels[c] + "]");
        if (actual > 0) s.recall = static_cast<double>(tp) / static_cast<double>(actual);
        else r.zero_division.push_back("recall[" + r.labels[c] + "]");
        // 2TP / (2TP + FP + FN), identical to 2PR / (P + R) when defined.
        const std::size_t denom = predicted + actual;
        if (tp > 0) s.f1 = static_cast<double>(2 * tp) / static_cast<double>(denom);
        else if (denom == 0) r.zero_division.push_back("f1[" + r.labels[c] + "]");
        f1_sum += s.f1;
        r.per_class.push_back(s);
    }
    r.macro_f1 = f1_sum / static_cast<double>(n);

    // Multiclass MCC from the confusion-matrix marginals.
    const double s = static_cast<double>(total);
    const double correct = static_cast<double>(cm.trace());
    double pt = 0.0, pp = 0.0, tt = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double p = static_cast<double>(cm.column_sum(k));
        const double t = static_cast<double>(cm.row_sum(k));
        pt += p * t;
        pp += p * p;
        tt += t * t;
    }
    const double denom = (s * s - pp) * (s * s - tt);
    if (denom > 0.0) r.mcc = (correct * s - pt) / std::sqrt(denom);
    else r.zero_division.push_back("mcc");
    return r;
}

inline EvaluationReport evaluate(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                                 std::size_t n_classes, std::vector<std::string> labels = {}) {
    if (gold.empty()) throw DataError("cannot evaluate an empty prediction set");
    return evaluate(ConfusionMatrix::from(gold, pred, n_classes), std::move(labels));
}

/// Per (gold, predicted) cell: documents both models placed there, and
/// documents only one of them did.
struct AgreementReport {
    std::size_t n_classes = 0;
    ConfusionMatrix both;
    ConfusionMatrix only_a;
    ConfusionMatrix only_b;

    /// Off-diagonal documents both models got wrong the same way.
    std::size_t shared_errors() const {
        std::size_t s = 0;
        for (std::size_t i = 0; i < n_classes; ++i)
            for (std::size_t j = 0; j < n_classes; ++j)
                if (i != j) s += both(i, j);
        return s;
    }

    /// Documents in the cell for at least one model.
    std::size_t union_count(std::size_t truth, std::size_t predicted) const {
        return both(truth, predicted) + only_a(truth, predicted) + only_b(truth, predicted);
    }

    std::size_t disagreements() const {
        std::size_t s = 0;
        for (std::size_t i = 0; i < n_classes; ++i)
            for (std::size_t j = 0; j < n_classes; ++j) s += only_a(i, j);
        return s;
    }

    json to_json(const std::vector<std::string>& labels = {}) const {
        json j = {{"both", both.to_json()},
                  {"only_a", only_a.to_json()},
                  {"only_b", only_b.to_json()},
                  {"shared_errors", shared_errors()},
                  {"disagreements", disagreements()}};
        if (!labels.empty()) j["labels"] = labels;
        return j;
    }
};

inline AgreementReport agreement(std::span<const std::size_t> gold, std::span<const std::size_t> pred_a,
                                 std::span<const std::size_t> pred_b, std::size_t n_classes) {
    if (gold.size() != pred_a.size() || gold.size() != pred_b.size())
        throw DimensionError("gold and prediction lists differ in length");
    AgreementReport r{n_classes, ConfusionMatrix(n_classes), ConfusionMatrix(n_classes),
                      ConfusionMatrix(n_classes)};
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] >= n_classes || pred_a[i] >= n_classes || pred_b[i] >= n_classes)
            throw DataError("class index out of range at position " + std::to_string(i));
        if (pred_a[i] == pred_b[i]) {
            ++r.both(gold[i], pred_a[i]);
        } else {
            ++r.only_a(gold[i], pred_a[i]);
            ++r.only_b(gold[i], pred_b[i]);
        }
    }
    return r;
}

}  // namespace textforge
