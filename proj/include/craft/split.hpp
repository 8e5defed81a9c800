#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "craft/corpus.hpp"

namespace craft {

struct SplitSpec {
    double train = 0.8;
    double dev = 0.1;
    double test = 0.1;
    std::uint64_t seed = 0;
};

struct Splits {
    Corpus train;
    Corpus dev;
    Corpus test;
};

// Pair-preserving split. Paired conversations move as one unit so both
// members land in the same split. Units are assigned greedily in shuffled
// order: dev fills first, then test, remainder goes to train.
inline Splits split_corpus(const Corpus& corpus, const SplitSpec& spec) {
    if (corpus.kind != CorpusKind::labeled)
        fail(ErrorKind::data_validation, "split_corpus requires a labeled corpus");
    if (spec.train <= 0 || spec.dev <= 0 || spec.test <= 0 ||
        std::abs(spec.train + spec.dev + spec.test - 1.0) > 1e-9)
        fail(ErrorKind::config, "split fractions must be positive and sum to 1");
    std::size_t n = corpus.conversations.size();
    if (n < 10) fail(ErrorKind::data_validation, "corpus too small to split");

    // Units: indices of conversations sharing a pair_id, or singletons.
    std::map<std::string, std::vector<std::size_t>> paired;
    std::vector<std::vector<std::size_t>> units;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = corpus.conversations[i];
        if (c.pair_id)
            paired[*c.pair_id].push_back(i);
        else
            units.push_back({i});
    }
    for (auto& [pid, idxs] : paired) units.push_back(idxs);

    std::mt19937_64 rng(spec.seed);
    std::shuffle(units.begin(), units.end(), rng);

    std::size_t dev_quota = static_cast<std::size_t>(std::floor(spec.dev * double(n)));
    std::size_t test_quota = static_cast<std::size_t>(std::floor(spec.test * double(n)));

    Splits out;
    out.train.kind = out.dev.kind = out.test.kind = CorpusKind::labeled;
    for (const auto& unit : units) {
        Corpus* dst = &out.train;
        if (out.dev.conversations.size() < dev_quota)
            dst = &out.dev;
        else if (out.test.conversations.size() < test_quota)
            dst = &out.test;
        for (std::size_t i : unit) dst->conversations.push_back(corpus.conversations[i]);
    }
    return out;
}

}  // namespace craft
