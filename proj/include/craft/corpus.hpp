#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "craft/error.hpp"

namespace craft {

struct Comment {
    std::string id;
    std::string author;
    std::int64_t timestamp = 0;  // seconds since epoch
    std::string text;
};

enum class Label { derail, civil };

struct Conversation {
    std::string id;
    std::vector<Comment> comments;
    std::optional<Label> label;
    std::optional<std::size_t> attack_index;  // 1-based
    std::optional<std::string> pair_id;

    bool labeled() const { return label.has_value(); }

    // Comments a forecaster is allowed to score: c_1..c_{e-1} for derail,
    // c_1..c_{N-1} for civil. The event comment itself is never scored.
    std::size_t horizon() const {
        if (label == Label::derail) return *attack_index - 1;
        return comments.size() - 1;
    }
};

enum class CorpusKind { labeled, unlabeled };

struct Corpus {
    std::vector<Conversation> conversations;
    CorpusKind kind = CorpusKind::unlabeled;
};

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Validates a single conversation against the type invariants.
inline void validate_conversation(const Conversation& c, CorpusKind kind,
                                  std::size_t max_comments = 10) {
    auto bad = [&](const std::string& rule) {
        fail(ErrorKind::data_validation, "conversation '" + c.id + "': " + rule);
    };
    if (c.comments.empty()) bad("no comments");
    if (c.comments.size() > max_comments)
        bad("more than " + std::to_string(max_comments) + " comments");
    std::int64_t prev_ts = -1;
    for (const auto& cm : c.comments) {
        if (trim(cm.text).empty()) bad("empty comment text (comment '" + cm.id + "')");
        if (cm.timestamp < 0) bad("negative timestamp");
        if (prev_ts >= 0 && cm.timestamp < prev_ts) bad("comments not ordered by timestamp");
        prev_ts = cm.timestamp;
    }
    if (kind == CorpusKind::unlabeled) {
        if (c.label || c.attack_index) bad("unlabeled corpus carries labels");
        return;
    }
    if (!c.label) bad("missing label in labeled corpus");
    if (*c.label == Label::derail) {
        if (!c.attack_index) bad("derail label without attack_index");
        if (*c.attack_index < 2) bad("context empty before attack");
        if (*c.attack_index > c.comments.size()) bad("attack_index beyond last comment");
    } else {
        if (c.attack_index) bad("label/field mismatch: civil conversation with attack_index");
        if (c.comments.size() < 2) bad("civil conversation with fewer than 2 comments");
    }
}

inline Conversation conversation_from_json(const nlohmann::json& j) {
    Conversation c;
    c.id = j.at("id").get<std::string>();
    if (j.contains("pair_id") && !j["pair_id"].is_null())
        c.pair_id = j["pair_id"].get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) {
        std::string lab = j["label"].get<std::string>();
        if (lab == "derail")
            c.label = Label::derail;
        else if (lab == "civil")
            c.label = Label::civil;
        else
            fail(ErrorKind::data_validation, "conversation '" + c.id + "': unknown label '" + lab + "'");
    }
    if (j.contains("attack_index") && !j["attack_index"].is_null())
        c.attack_index = j["attack_index"].get<std::size_t>();
    for (const auto& cj : j.at("comments")) {
        Comment cm;
        cm.id = cj.at("id").get<std::string>();
        cm.author = cj.at("author").get<std::string>();
        cm.timestamp = cj.at("timestamp").get<std::int64_t>();
        cm.text = cj.at("text").get<std::string>();
        c.comments.push_back(std::move(cm));
    }
    return c;
}

inline nlohmann::ordered_json conversation_to_json(const Conversation& c) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["pair_id"] = c.pair_id ? nlohmann::ordered_json(*c.pair_id) : nullptr;
    if (c.label)
        j["label"] = (*c.label == Label::derail) ? "derail" : "civil";
    else
        j["label"] = nullptr;
    j["attack_index"] = c.attack_index ? nlohmann::ordered_json(*c.attack_index) : nullptr;
    j["comments"] = nlohmann::ordered_json::array();
    for (const auto& cm : c.comments) {
        nlohmann::ordered_json cj;
        cj["id"] = cm.id;
        cj["author"] = cm.author;
        cj["timestamp"] = cm.timestamp;
        cj["text"] = cm.text;
        j["comments"].push_back(std::move(cj));
    }
    return j;
}

// One conversation per line. Reports the line number on malformed JSON and
// the conversation id on invariant violations.
inline Corpus load_jsonl(const std::string& path, CorpusKind kind,
                         std::size_t max_comments = 10) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::missing_file, "cannot open corpus file: " + path);
    Corpus corpus;
    corpus.kind = kind;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::data_validation,
                 path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
        }
        Conversation c;
        try {
            c = conversation_from_json(j);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::data_validation,
                 path + ":" + std::to_string(lineno) + ": schema error: " + e.what());
        }
        validate_conversation(c, kind, max_comments);
        if (!seen_ids.insert(c.id).second)
            fail(ErrorKind::data_validation, "duplicate conversation id '" + c.id + "'");
        corpus.conversations.push_back(std::move(c));
    }
    return corpus;
}

inline void save_jsonl(const std::string& path, const Corpus& corpus) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::missing_file, "cannot write corpus file: " + path);
    for (const auto& c : corpus.conversations) os << conversation_to_json(c).dump() << "\n";
}

}  // namespace craft
