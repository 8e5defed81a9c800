#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "craft/corpus.hpp"
#include "craft/error.hpp"

namespace craft {

using TokenSeq = std::vector<std::size_t>;

// Lowercase, split on whitespace, and split each of .,!?;:'"() out as its
// own token.
inline std::vector<std::string> tokenize(const std::string& text) {
    static const std::string punct = ".,!?;:'\"()";
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char ch : text) {
        if (std::isspace(ch)) {
            flush();
        } else if (punct.find(static_cast<char>(ch)) != std::string::npos) {
            flush();
            out.emplace_back(1, static_cast<char>(ch));
        } else {
            cur.push_back(static_cast<char>(std::tolower(ch)));
        }
    }
    flush();
    return out;
}

class Vocabulary {
public:
    static constexpr std::size_t PAD = 0;
    static constexpr std::size_t SOS = 1;
    static constexpr std::size_t EOS = 2;
    static constexpr std::size_t UNK = 3;

    Vocabulary() {
        for (const char* t : {"<pad>", "<sos>", "<eos>", "<unk>"}) add(t);
    }

    std::size_t add(const std::string& token) {
        auto it = token_to_id_.find(token);
        if (it != token_to_id_.end()) return it->second;
        std::size_t id = id_to_token_.size();
        token_to_id_.emplace(token, id);
        id_to_token_.push_back(token);
        return id;
    }

    std::size_t id(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? UNK : it->second;
    }

    const std::string& token(std::size_t id) const { return id_to_token_.at(id); }
    std::size_t size() const { return id_to_token_.size(); }

    void save(const std::string& path) const {
        std::ofstream os(path);
        if (!os) fail(ErrorKind::missing_file, "cannot write vocabulary: " + path);
        for (const auto& t : id_to_token_) os << t << "\n";
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream is(path);
        if (!is) fail(ErrorKind::missing_file, "cannot open vocabulary: " + path);
        Vocabulary v;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            if (lineno < 4) {
                const char* expected[] = {"<pad>", "<sos>", "<eos>", "<unk>"};
                if (line != expected[lineno])
                    fail(ErrorKind::data_validation,
                         path + ": reserved token line " + std::to_string(lineno + 1) +
                             " must be " + expected[lineno]);
            } else {
                v.add(line);
            }
            ++lineno;
        }
        if (lineno < 4) fail(ErrorKind::data_validation, path + ": missing reserved tokens");
        return v;
    }

private:
    std::unordered_map<std::string, std::size_t> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// Tokens with frequency >= min_freq, ordered by descending frequency then
// lexicographically.
inline Vocabulary build_vocab(const Corpus& corpus, std::size_t min_freq = 2) {
    if (corpus.conversations.empty()) fail(ErrorKind::data_validation, "empty corpus");
    std::map<std::string, std::size_t> freq;
    for (const auto& conv : corpus.conversations)
        for (const auto& cm : conv.comments)
            for (const auto& tok : tokenize(cm.text)) ++freq[tok];
    std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [tok, n] : entries)
        if (n >= min_freq) v.add(tok);
    return v;
}

// Lowercase + tokenize, truncate to max_tokens-1, append EOS. OOV -> UNK.
inline TokenSeq encode(const std::string& text, const Vocabulary& vocab,
                       std::size_t max_tokens = 40) {
    TokenSeq out;
    for (const auto& tok : tokenize(text)) {
        if (out.size() + 1 >= max_tokens) break;
        out.push_back(vocab.id(tok));
    }
    out.push_back(Vocabulary::EOS);
    return out;
}

inline std::string decode(const TokenSeq& seq, const Vocabulary& vocab) {
    std::string out;
    for (std::size_t id : seq) {
        if (id == Vocabulary::EOS) break;
        if (!out.empty()) out += " ";
        out += vocab.token(id);
    }
    return out;
}

}  // namespace craft
