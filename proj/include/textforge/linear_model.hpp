#pragma once

// One-vs-rest L2-regularized logistic regression. Each binary problem
//   J(w, b) = C * sum_i s_i * log(1 + exp(-z_i (w.x_i + b))) + 0.5 * |w|^2
// (bias unregularized, z_i = +1 for the class, -1 otherwise, s_i = sample
// weight) is minimized by full-batch gradient descent with Armijo
// backtracking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "textforge/errors.hpp"
#include "textforge/io.hpp"
#include "textforge/vectorizer.hpp"

namespace textforge {

struct ClassTrainingInfo {
    std::size_t iterations = 0;
    double final_objective = 0.0;
    bool converged = false;
    std::vector<double> objective_trace;  // initial objective, then one entry per accepted step
};

class LinearModel {
public:
    static constexpr int kFormatVersion = 1;

    LinearModel() = default;

    /// All-zero model.
    LinearModel(std::vector<std::string> classes, std::size_t dimension)
        : classes_(std::move(classes)),
          dimension_(dimension),
          weights_(classes_.size(), std::vector<double>(dimension, 0.0)),
          biases_(classes_.size(), 0.0),
          training_(classes_.size()) {
        if (classes_.empty()) throw DataError("a model needs at least one class");
    }

    const std::vector<std::string>& classes() const noexcept { return classes_; }
    std::size_t n_classes() const noexcept { return classes_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }

    std::span<const double> weights(std::size_t c) const { return weights_.at(c); }
    std::span<double> weights(std::size_t c) { return weights_.at(c); }
    double bias(std::size_t c) const { return biases_.at(c); }
    void set_bias(std::size_t c, double b) { biases_.at(c) = b; }

    const std::vector<ClassTrainingInfo>& training_info() const noexcept { return training_; }
    std::vector<ClassTrainingInfo>& training_info() noexcept { return training_; }

    const std::string& vectorizer_fingerprint() const noexcept { return fingerprint_; }
    void set_vectorizer_fingerprint(std::string fp) { fingerprint_ = std::move(fp); }

    /// Raw decision values w_c.x + b_c in class order.
    std::vector<double> predict_scores(const SparseVector& x) const {
        check_input(x);
        std::vector<double> scores(classes_.size());
        for (std::size_t c = 0; c < classes_.size(); ++c) scores[c] = x.dot(weights_[c]) + biases_[c];
        return scores;
    }

    /// Argmax of the scores; ties go to the lowest class index.
    std::size_t predict(const SparseVector& x) const {
        const auto scores = predict_scores(x);
        std::size_t best = 0;
        for (std::size_t c = 1; c < scores.size(); ++c)
            if (scores[c] > scores[best]) best = c;
        return best;
    }

    std::vector<std::size_t> predict(std::span<const SparseVector> xs) const {
        std::vector<std::size_t> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(predict(x));
        return out;
    }

    json to_json() const {
        json info = json::array();
        for (const auto& t : training_)
            info.push_back({{"iterations", t.iterations},
                            {"final_objective", t.final_objective},
                            {"converged", t.converged}});
        return {{"format", "textforge-linear-model"},
                {"version", kFormatVersion},
                {"classes", classes_},
                {"dimension", dimension_},
                {"vectorizer_fingerprint", fingerprint_},
                {"weights", weights_},
                {"biases", biases_},
                {"training", info}};
    }

    static LinearModel from_json(const json& j) {
        try {
            if (j.at("format") != "textforge-linear-model") throw DataError("not a model file");
            if (j.at("version") != kFormatVersion)
                throw DataError("unsupported model version " + j.at("version").dump());
            LinearModel m(j.at("classes").get<std::vector<std::string>>(),
                          j.at("dimension").get<std::size_t>());
            m.fingerprint_ = j.at("vectorizer_fingerprint").get<std::string>();
            m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
            m.biases_ = j.at("biases").get<std::vector<double>>();
            if (m.weights_.size() != m.classes_.size() || m.biases_.size() != m.classes_.size())
                throw DataError("weights/biases do not match the class count");
            for (const auto& w : m.weights_)
                if (w.size() != m.dimension_) throw DataError("weight vector has wrong dimension");
            if (auto it = j.find("training"); it != j.end() && it->size() == m.classes_.size()) {
                for (std::size_t c = 0; c < m.classes_.size(); ++c) {
                    const auto& t = (*it)[c];
                    m.training_[c].iterations = t.at("iterations").get<std::size_t>();
                    m.training_[c].final_objective = t.at("final_objective").get<double>();
                    m.training_[c].converged = t.at("converged").get<bool>();
                }
            }
            return m;
        } catch (const json::exception& e) {
            throw DataError(std::string("malformed model: ") + e.what());
        }
    }

    void save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }

    /// Loads a model and checks it was trained against `vectorizer`.
    static LinearModel load(const std::filesystem::path& path, const TfIdfVectorizer& vectorizer) {
        auto m = from_json(read_json_file(path));
        m.check_vectorizer(vectorizer);
        return m;
    }

    void check_vectorizer(const TfIdfVectorizer& vectorizer) const {
        const auto fp = vectorizer.fingerprint();
        if (fp != fingerprint_)
            throw FingerprintError("model was trained against vectorizer " + fingerprint_ +
                                   " but vectorizer " + fp + " was supplied");
        if (vectorizer.dimension() != dimension_)
            throw DimensionError("vectorizer dimension does not match the model");
    }

private:
    void check_input(const SparseVector& x) const {
        if (!x.empty() && x.entries.back().index >= dimension_)
            throw DimensionError("feature index " + std::to_string(x.entries.back().index) +
                                 " outside model dimension " + std::to_string(dimension_));
    }

    std::vector<std::string> classes_;
    std::size_t dimension_ = 0;
    std::vector<std::vector<double>> weights_;
    std::vector<double> biases_;
    std::vector<ClassTrainingInfo> training_;
    std::string fingerprint_;
};

struct TrainConfig {
    std::size_t max_iter = 2500;
    double tol = 1e-6;  // stop once the relative objective decrease drops below this
    double C = 1.0;
    // The optimizer is deterministic and does not consume randomness; the
    // seed is recorded for run bookkeeping.
    std::uint64_t seed = 0;
    std::optional<LinearModel> warm_start;
    // Per-class sample weights, empty = unweighted.
    std::vector<double> class_weights;
    // Worker threads for the per-class problems; 0 picks the hardware count.
    std::size_t threads = 0;

    void validate() const {
        if (max_iter < 1) throw DataError("max_iter must be >= 1");
        if (!(C > 0.0) || !std::isfinite(C)) throw DataError("C must be positive");
        if (!(tol >= 0.0)) throw DataError("tol must be >= 0");
    }
};

namespace detail {

// log(1 + exp(-t)) without overflow.
inline double logistic_loss(double t) {
    return t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

}  // namespace detail

/// One binary one-vs-rest subproblem.
class BinaryLogisticObjective {
public:
    BinaryLogisticObjective(std::span<const SparseVector> X, std::vector<double> targets,
                            std::vector<double> sample_weights, std::size_t dimension, double C)
        : X_(X),
          z_(std::move(targets)),
          s_(std::move(sample_weights)),
          dimension_(dimension),
          C_(C) {
        if (z_.size() != X_.size() || s_.size() != X_.size())
            throw DimensionError("targets/weights do not match the number of examples");
    }

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return X_.size(); }

    double value(std::span<const double> w, double b) const {
        double loss = 0.0;
        for (std::size_t i = 0; i < X_.size(); ++i)
            loss += s_[i] * detail::logistic_loss(z_[i] * (X_[i].dot(w) + b));
        return C_ * loss + 0.5 * squared_norm(w);
    }

    /// Fills the gradient and returns the objective value.
    double value_and_gradient(std::span<const double> w, double b, std::span<double> grad_w,
                              double& grad_b) const {
        std::vector<double> margins(X_.size());
        for (std::size_t i = 0; i < X_.size(); ++i) margins[i] = X_[i].dot(w) + b;
        return gradient_from_margins(w, margins, grad_w, grad_b);
    }

    double gradient_from_margins(std::span<const double> w, std::span<const double> margins,
                                 std::span<double> grad_w, double& grad_b) const {
        std::copy(w.begin(), w.end(), grad_w.begin());
        grad_b = 0.0;
        double loss = 0.0;
        for (std::size_t i = 0; i < X_.size(); ++i) {
            const double t = z_[i] * margins[i];
            loss += s_[i] * detail::logistic_loss(t);
            const double r = -C_ * s_[i] * z_[i] / (1.0 + std::exp(t));
            grad_b += r;
            for (const auto& e : X_[i].entries) grad_w[e.index] += r * e.value;
        }
        return C_ * loss + 0.5 * squared_norm(w);
    }

    /// Minimizes in place from (w, b); returns per-class bookkeeping.
    ClassTrainingInfo minimize(std::span<double> w, double& b, std::size_t max_iter,
                               double tol) const {
        constexpr double kArmijo = 1e-4;
        constexpr double kShrink = 0.5;
        constexpr double kInitialStep = 1.0;
        constexpr double kMinStep = 1e-20;

        const std::size_t n = X_.size();
        std::vector<double> margins(n), direction(n), trial(n), grad(dimension_);
        for (std::size_t i = 0; i < n; ++i) margins[i] = X_[i].dot(w) + b;

        ClassTrainingInfo info;
        double grad_b = 0.0;
        double f = gradient_from_margins(w, margins, grad, grad_b);
        info.objective_trace.push_back(f);

        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            double g2 = grad_b * grad_b;
            for (double g : grad) g2 += g * g;
            if (g2 == 0.0) {
                info.converged = true;
                break;
            }
            // Margins move linearly along the descent direction, so each
            // trial step costs O(n + V) instead of a full pass over X.
            for (std::size_t i = 0; i < n; ++i) direction[i] = X_[i].dot(grad) + grad_b;

            double step = kInitialStep, f_new = f;
            bool accepted = false;
            while (step >= kMinStep) {
                double loss = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    trial[i] = margins[i] - step * direction[i];
                    loss += s_[i] * detail::logistic_loss(z_[i] * trial[i]);
                }
                double reg = 0.0;
                for (std::size_t j = 0; j < dimension_; ++j) {
                    const double v = w[j] - step * grad[j];
                    reg += v * v;
                }
                f_new = C_ * loss + 0.5 * reg;
                if (f_new <= f - kArmijo * step * g2) {
                    accepted = true;
                    break;
                }
                step *= kShrink;
            }
            if (!accepted) {
                info.converged = true;
                break;
            }
            for (std::size_t j = 0; j < dimension_; ++j) w[j] -= step * grad[j];
            b -= step * grad_b;
            margins.swap(trial);
            ++info.iterations;
            info.objective_trace.push_back(f_new);

            const double rel = (f - f_new) / std::max(f, std::numeric_limits<double>::min());
            f = f_new;
            if (rel < tol) {
                info.converged = true;
                break;
            }
            if (iter + 1 < max_iter) gradient_from_margins(w, margins, grad, grad_b);
        }
        info.final_objective = f;
        return info;
    }

private:
    static double squared_norm(std::span<const double> w) {
        double s = 0.0;
        for (double v : w) s += v * v;
        return s;
    }

    std::span<const SparseVector> X_;
    std::vector<double> z_;
    std::vector<double> s_;
    std::size_t dimension_;
    double C_;
};

namespace detail {

inline BinaryLogisticObjective make_binary_problem(std::span<const SparseVector> X,
                                                   std::span<const std::size_t> y, std::size_t c,
                                                   std::size_t dimension, const TrainConfig& config) {
    std::vector<double> z(X.size()), s(X.size(), 1.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        z[i] = y[i] == c ? 1.0 : -1.0;
        if (!config.class_weights.empty()) s[i] = config.class_weights[y[i]];
    }
    return BinaryLogisticObjective(X, std::move(z), std::move(s), dimension, config.C);
}

}  // namespace detail

/// Trains one binary problem per class. Every class must occur in y.
inline LinearModel train(std::span<const SparseVector> X, std::span<const std::size_t> y,
                         std::vector<std::string> classes, std::size_t dimension,
                         const TrainConfig& config = {}) {
    config.validate();
    if (X.size() != y.size()) throw DimensionError("X and y have different lengths");
    if (X.empty()) throw DataError("empty training set");
    const std::size_t n_classes = classes.size();
    if (n_classes < 2) throw DataError("training needs at least 2 classes");
    if (!config.class_weights.empty() && config.class_weights.size() != n_classes)
        throw DimensionError("class_weights length does not match the class count");

    std::vector<std::size_t> counts(n_classes, 0);
    for (auto label : y) {
        if (label >= n_classes) throw DataError("class index " + std::to_string(label) + " out of range");
        ++counts[label];
    }
    for (std::size_t c = 0; c < n_classes; ++c)
        if (counts[c] == 0) throw DataError("class '" + classes[c] + "' has no training examples");

    for (const auto& x : X) {
        std::uint32_t prev = 0;
        for (std::size_t k = 0; k < x.entries.size(); ++k) {
            const auto& e = x.entries[k];
            if (e.index >= dimension) throw DimensionError("feature index outside dimension");
            if (k > 0 && e.index <= prev) throw DataError("sparse indices must be strictly increasing");
            if (!std::isfinite(e.value)) throw DataError("non-finite feature value");
            prev = e.index;
        }
    }

    LinearModel model(classes, dimension);
    if (config.warm_start) {
        const auto& ws = *config.warm_start;
        if (ws.dimension() != dimension || ws.n_classes() != n_classes)
            throw DimensionError("warm-start model does not match dimension/class count");
        if (ws.classes() != classes) throw DataError("warm-start model has a different class order");
        for (std::size_t c = 0; c < n_classes; ++c) {
            std::copy(ws.weights(c).begin(), ws.weights(c).end(), model.weights(c).begin());
            model.set_bias(c, ws.bias(c));
        }
        model.set_vectorizer_fingerprint(ws.vectorizer_fingerprint());
    }

    auto solve = [&](std::size_t c) {
        const auto problem = detail::make_binary_problem(X, y, c, dimension, config);
        double b = model.bias(c);
        model.training_info()[c] = problem.minimize(model.weights(c), b, config.max_iter, config.tol);
        model.set_bias(c, b);
    };

    std::size_t threads = config.threads ? config.threads : std::thread::hardware_concurrency();
    threads = std::clamp<std::size_t>(threads, 1, n_classes);
    if (threads == 1) {
        for (std::size_t c = 0; c < n_classes; ++c) solve(c);
        return model;
    }
    std::vector<std::exception_ptr> errors(n_classes);
    std::vector<std::thread> pool;
    std::mutex next_mutex;
    std::size_t next = 0;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t c;
                {
                    std::lock_guard lock(next_mutex);
                    if (next >= n_classes) return;
                    c = next++;
                }
                try {
                    solve(c);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return model;
}

/// Vectorizes `corpus`, trains on it and stamps the vectorizer fingerprint.
inline LinearModel train_on_corpus(const LabeledCorpus& corpus, const TfIdfVectorizer& vectorizer,
                                   const TrainConfig& config = {}) {
    const auto X = vectorizer.transform(corpus);
    const auto y = corpus.label_indices();
    auto model = train(X, y, corpus.classes(), vectorizer.dimension(), config);
    model.set_vectorizer_fingerprint(vectorizer.fingerprint());
    return model;
}

/// Objective of class c's binary problem at the model's current parameters.
inline double binary_objective(const LinearModel& model, std::span<const SparseVector> X,
                               std::span<const std::size_t> y, std::size_t c,
                               const TrainConfig& config = {}) {
    const auto problem = detail::make_binary_problem(X, y, c, model.dimension(), config);
    return problem.value(model.weights(c), model.bias(c));
}

}  // namespace textforge
