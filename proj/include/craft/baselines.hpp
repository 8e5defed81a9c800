#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "craft/corpus.hpp"
#include "craft/forecaster.hpp"
#include "craft/params.hpp"
#include "craft/vocab.hpp"

namespace craft {

// TF-IDF over training comments, one comment = one document.
// idf(tok) = ln((1+D)/(1+df(tok))) + 1, frozen after fit.
class TfidfVectorizer {
public:
    static TfidfVectorizer fit(const Corpus& train) {
        if (train.conversations.empty()) fail(ErrorKind::data_validation, "empty tf-idf corpus");
        TfidfVectorizer v;
        std::map<std::string, std::size_t> df;
        std::size_t n_docs = 0;
        for (const auto& conv : train.conversations) {
            for (const auto& cm : conv.comments) {
                ++n_docs;
                std::map<std::string, bool> seen;
                for (const auto& tok : tokenize(cm.text))
                    if (!seen[tok]) {
                        seen[tok] = true;
                        ++df[tok];
                    }
            }
        }
        for (const auto& [tok, count] : df) {
            v.index_.emplace(tok, v.idf_.size());
            v.idf_.push_back(std::log(double(1 + n_docs) / double(1 + count)) + 1.0);
        }
        return v;
    }

    std::size_t dim() const { return idf_.size(); }

    double idf(const std::string& tok) const {
        auto it = index_.find(tok);
        return it == index_.end() ? 0.0 : idf_[it->second];
    }

    // TF-IDF of the given comments treated as one document, L2-normalized.
    std::vector<double> transform(const std::vector<std::string>& texts) const {
        std::vector<double> vec(dim(), 0.0);
        for (const auto& text : texts)
            for (const auto& tok : tokenize(text)) {
                auto it = index_.find(tok);
                if (it != index_.end()) vec[it->second] += idf_[it->second];
            }
        double norm = 0;
        for (double x : vec) norm += x * x;
        if (norm > 0) {
            norm = std::sqrt(norm);
            for (double& x : vec) x /= norm;
        }
        return vec;
    }

private:
    std::map<std::string, std::size_t> index_;
    std::vector<double> idf_;
};

// Logistic regression trained full-batch with the shared Adam optimizer
// and L2 weight decay.
class LinearClassifier {
public:
    void train(const std::vector<std::vector<double>>& features,
               const std::vector<double>& targets, std::size_t epochs = 200,
               double lr = 0.05, double l2 = 1e-4) {
        if (features.empty() || features.size() != targets.size())
            fail(ErrorKind::data_validation, "bad logistic regression training set");
        std::size_t dim = features[0].size();
        store_ = ParamStore<double>{};
        store_.add("w", Mat<double>::zeros(1, dim));
        store_.add("b", Mat<double>::zeros(1, 1));
        for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
            Mat<double>& gw = store_.grad("w");
            Mat<double>& gb = store_.grad("b");
            const Mat<double>& w = store_.value("w");
            double inv_n = 1.0 / double(features.size());
            for (std::size_t i = 0; i < features.size(); ++i) {
                double err = predict(features[i]) - targets[i];
                for (std::size_t j = 0; j < dim; ++j)
                    gw.data[j] += inv_n * err * features[i][j];
                gb.data[0] += inv_n * err;
            }
            for (std::size_t j = 0; j < dim; ++j) gw.data[j] += l2 * w.data[j];
            adam_step(store_, lr, 0.0);
        }
    }

    double predict(const std::vector<double>& x) const {
        const Mat<double>& w = store_.value("w");
        double z = store_.value("b").data[0];
        for (std::size_t j = 0; j < x.size() && j < w.size(); ++j) z += w.data[j] * x[j];
        return 1.0 / (1.0 + std::exp(-z));
    }

private:
    ParamStore<double> store_;
};

enum class BowKind { fixed, cumulative, sliding };

inline std::string bow_name(BowKind k, std::size_t window) {
    switch (k) {
        case BowKind::fixed: return "bow_fixed";
        case BowKind::cumulative: return "bow_cumulative";
        case BowKind::sliding: return "bow_sliding_w" + std::to_string(window);
    }
    return "bow";
}

// Bag-of-words forecaster. Fixed scores the first comment-reply pair
// once; cumulative refits features on all comments seen so far; sliding
// uses the last W comments. Training mirrors the forecaster's
// final-context supervision.
class BowForecaster {
public:
    static BowForecaster fit(BowKind kind, std::size_t window, const Corpus& train) {
        if (kind == BowKind::sliding && window == 0)
            fail(ErrorKind::config, "sliding window size must be >= 1");
        BowForecaster f;
        f.kind_ = kind;
        f.window_ = window;
        f.tfidf_ = TfidfVectorizer::fit(train);
        std::vector<std::vector<double>> features;
        std::vector<double> targets;
        for (const auto& conv : train.conversations) {
            if (!conv.labeled()) fail(ErrorKind::data_validation, "baseline needs labeled data");
            std::size_t h = conv.horizon();
            features.push_back(f.tfidf_.transform(f.window_texts(conv, h)));
            targets.push_back(conv.label == Label::derail ? 1.0 : 0.0);
        }
        f.clf_.train(features, targets);
        return f;
    }

    // Score after comment n (1-based) of the conversation.
    double score_at(const Conversation& conv, std::size_t n) const {
        return clf_.predict(tfidf_.transform(window_texts(conv, n)));
    }

    // One score per horizon comment; fixed-window models emit a single
    // score (no online behavior).
    ForecastTrace trace(const Conversation& conv, double threshold) const {
        std::size_t h = conv.labeled() ? conv.horizon() : conv.comments.size();
        if (h == 0) fail(ErrorKind::data_validation, "empty horizon: " + conv.id);
        ForecastTrace t;
        t.conversation_id = conv.id;
        t.model_name = bow_name(kind_, window_);
        t.threshold = threshold;
        if (kind_ == BowKind::fixed) {
            t.push_score(score_at(conv, std::min<std::size_t>(2, h)));
        } else {
            for (std::size_t n = 1; n <= h; ++n) t.push_score(score_at(conv, n));
        }
        return t;
    }

    ThresholdChoice tune(const Corpus& dev) const {
        std::vector<std::pair<double, bool>> conv_scores;
        std::vector<double> all_scores;
        for (const auto& conv : dev.conversations) {
            ForecastTrace t = trace(conv, 0.5);
            conv_scores.emplace_back(t.max_score(), conv.label == Label::derail);
            all_scores.insert(all_scores.end(), t.scores.begin(), t.scores.end());
        }
        return tune_threshold_from_scores(conv_scores, all_scores);
    }

    BowKind kind() const { return kind_; }

private:
    std::vector<std::string> window_texts(const Conversation& conv, std::size_t n) const {
        std::size_t first = 1;
        switch (kind_) {
            case BowKind::fixed:
                if (conv.comments.size() < 2)
                    fail(ErrorKind::data_validation,
                         "conversation shorter than window: " + conv.id);
                first = 1;
                n = 2;
                break;
            case BowKind::cumulative:
                first = 1;
                break;
            case BowKind::sliding:
                first = n >= window_ ? n - window_ + 1 : 1;
                break;
        }
        std::vector<std::string> texts;
        for (std::size_t i = first; i <= n; ++i) texts.push_back(conv.comments[i - 1].text);
        return texts;
    }

    BowKind kind_ = BowKind::cumulative;
    std::size_t window_ = 1;
    TfidfVectorizer tfidf_;
    LinearClassifier clf_;
};

}  // namespace craft
