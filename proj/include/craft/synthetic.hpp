#pragma once

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "craft/corpus.hpp"

namespace craft {

// Synthetic conversations with a planted order-sensitive escalation signal.
//
// A derail conversation of length N places marker A in comment N-2,
// directly before marker B in comment N-1, with the attack at index N.
// Its civil partner reuses the same pre-attack comments but moves the
// marker-A comment one position earlier (swapping it with the filler at
// N-3), so marker B is no longer preceded by marker A. The two horizons
// have identical token-unigram content and end with the same marker-B
// comment; only the adjacency of A and B separates the classes. The
// escalation ends 1 comment before the attack.
inline constexpr std::size_t kSyntheticEscalationGap = 1;

namespace synth_detail {

inline const std::vector<std::string>& filler_pool() {
    static const std::vector<std::string> pool = {
        "tree", "rock", "lake", "wind", "moss", "sand", "fern", "cloud",
        "reed", "dust", "pine", "mist", "shell", "stone", "brook", "leaf"};
    return pool;
}

inline const std::string kMarkerA = "veer";
inline const std::string kMarkerB = "flare";
inline const std::vector<std::string> kAttackWords = {"attack", "insult", "rage"};

struct Gen {
    std::mt19937 rng;
    explicit Gen(std::uint64_t seed) : rng(static_cast<std::uint32_t>(seed)) {}

    std::size_t pick(std::size_t lo, std::size_t hi) {  // inclusive
        return lo + rng() % (hi - lo + 1);
    }

    std::vector<std::string> topic() {
        const auto& pool = filler_pool();
        std::vector<std::string> t;
        while (t.size() < 6) {
            const std::string& w = pool[pick(0, pool.size() - 1)];
            if (std::find(t.begin(), t.end(), w) == t.end()) t.push_back(w);
        }
        return t;
    }

    std::string filler_text(const std::vector<std::string>& topic) {
        std::size_t len = pick(4, 7);
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            if (i) s += " ";
            s += topic[pick(0, topic.size() - 1)];
        }
        return s;
    }

    std::string marker_text(const std::vector<std::string>& topic, const std::string& marker) {
        std::string s = filler_text(topic);
        // marker inserted at a random word boundary
        std::vector<std::string> words;
        std::size_t pos = 0;
        while (pos < s.size()) {
            auto sp = s.find(' ', pos);
            if (sp == std::string::npos) sp = s.size();
            words.push_back(s.substr(pos, sp - pos));
            pos = sp + 1;
        }
        words.insert(words.begin() + static_cast<long>(pick(0, words.size())), marker);
        std::string out;
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (i) out += " ";
            out += words[i];
        }
        return out;
    }

    std::string attack_text(const std::vector<std::string>& topic) {
        std::string s = kAttackWords[pick(0, kAttackWords.size() - 1)];
        s += " " + kAttackWords[pick(0, kAttackWords.size() - 1)];
        s += " " + topic[pick(0, topic.size() - 1)];
        return s;
    }
};

inline Comment make_comment(const std::string& conv_id, std::size_t idx,
                            std::int64_t ts, const std::string& author,
                            std::string text) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s.c%02zu", conv_id.c_str(), idx);
    return Comment{buf, author, ts, std::move(text)};
}

}  // namespace synth_detail

// Deterministic given (n_conversations, seed). Labeled mode emits n/2
// derail/civil pairs sharing pair_id; unlabeled mode emits the same
// conversation shapes without labels or pairing.
inline Corpus generate_synthetic(std::size_t n_conversations, std::uint64_t seed,
                                 CorpusKind mode) {
    using namespace synth_detail;
    if (n_conversations < 2)
        fail(ErrorKind::config, "synthetic corpus needs at least 2 conversations");
    if (mode == CorpusKind::labeled && n_conversations % 2 != 0)
        fail(ErrorKind::config, "labeled synthetic corpus needs an even conversation count");

    Gen gen(seed);
    Corpus corpus;
    corpus.kind = mode;

    auto make_texts = [&](const std::vector<std::string>& topic, std::size_t n,
                          bool escalating) {
        // escalating layout: marker A at n-2 directly before marker B at
        // n-1; civil layout: the same comments with A moved back to n-3
        std::vector<std::string> texts(n);
        for (std::size_t i = 0; i < n - 1; ++i) {
            std::size_t idx = i + 1;  // 1-based
            if (idx == n - 2)
                texts[i] = gen.marker_text(topic, kMarkerA);
            else if (idx == n - 1)
                texts[i] = gen.marker_text(topic, kMarkerB);
            else
                texts[i] = gen.filler_text(topic);
        }
        if (!escalating) std::swap(texts[n - 4], texts[n - 3]);
        texts[n - 1] = escalating ? gen.attack_text(topic) : gen.filler_text(topic);
        return texts;
    };

    auto make_conversation = [&](const std::string& id, std::size_t n, bool escalating,
                                 std::vector<std::string> texts) {
        Conversation c;
        c.id = id;
        std::int64_t ts = 1500000000 + static_cast<std::int64_t>(gen.pick(0, 86400));
        for (std::size_t i = 0; i < n; ++i) {
            char author[8];
            std::snprintf(author, sizeof(author), "u%zu", gen.pick(0, 3));
            c.comments.push_back(make_comment(id, i + 1, ts, author, std::move(texts[i])));
            ts += static_cast<std::int64_t>(gen.pick(600, 21600));
        }
        if (mode == CorpusKind::labeled) {
            c.label = escalating ? Label::derail : Label::civil;
            if (escalating) c.attack_index = n;
        }
        return c;
    };

    if (mode == CorpusKind::labeled) {
        std::size_t pairs = n_conversations / 2;
        for (std::size_t p = 0; p < pairs; ++p) {
            auto topic = gen.topic();
            std::size_t n = gen.pick(5, 10);
            char pid[32], did[32], cid[32];
            std::snprintf(pid, sizeof(pid), "pair%06zu", p);
            std::snprintf(did, sizeof(did), "conv%06zu", 2 * p);
            std::snprintf(cid, sizeof(cid), "conv%06zu", 2 * p + 1);

            auto derail_texts = make_texts(topic, n, true);
            // civil partner: same pre-attack comments with marker A moved
            // one position earlier, plus a civil ending
            std::vector<std::string> civil_texts = derail_texts;
            std::swap(civil_texts[n - 4], civil_texts[n - 3]);
            civil_texts[n - 1] = gen.filler_text(topic);

            Conversation d = make_conversation(did, n, true, std::move(derail_texts));
            Conversation v = make_conversation(cid, n, false, std::move(civil_texts));
            d.pair_id = pid;
            v.pair_id = pid;
            corpus.conversations.push_back(std::move(d));
            corpus.conversations.push_back(std::move(v));
        }
    } else {
        for (std::size_t i = 0; i < n_conversations; ++i) {
            auto topic = gen.topic();
            std::size_t n = gen.pick(5, 10);
            bool escalating = gen.pick(0, 1) == 0;
            char id[32];
            std::snprintf(id, sizeof(id), "conv%06zu", i);
            corpus.conversations.push_back(
                make_conversation(id, n, escalating, make_texts(topic, n, escalating)));
        }
    }
    return corpus;
}

}  // namespace craft
