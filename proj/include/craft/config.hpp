#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "craft/error.hpp"

namespace craft {

enum class Mode { craft, craft_minus_ce, no_pretrain };

inline std::string mode_name(Mode m) {
    switch (m) {
        case Mode::craft: return "craft";
        case Mode::craft_minus_ce: return "craft_minus_ce";
        case Mode::no_pretrain: return "no_pretrain";
    }
    return "craft";
}

inline Mode mode_from_name(const std::string& s) {
    if (s == "craft") return Mode::craft;
    if (s == "craft_minus_ce") return Mode::craft_minus_ce;
    if (s == "no_pretrain") return Mode::no_pretrain;
    fail(ErrorKind::config, "unknown mode: " + s);
}

struct RunConfig {
    std::size_t embed_dim = 64;
    std::size_t utt_hidden = 64;
    std::size_t ctx_hidden = 64;
    std::size_t mlp_hidden = 64;
    std::size_t min_freq = 2;
    std::size_t max_tokens_per_comment = 40;
    std::size_t max_comments = 10;
    double lr = 1e-3;
    double clip = 5.0;
    std::size_t pretrain_epochs = 10;
    std::size_t finetune_epochs = 10;
    std::size_t batch_size = 10;
    std::uint64_t seed = 1;
    double leaky_slope = 0.01;
    Mode mode = Mode::craft;

    void validate() const {
        if (!embed_dim || !utt_hidden || !ctx_hidden || !mlp_hidden)
            fail(ErrorKind::config, "model dimensions must be positive");
        if (!max_tokens_per_comment || !max_comments || !batch_size)
            fail(ErrorKind::config, "size limits must be positive");
        if (lr <= 0) fail(ErrorKind::config, "lr must be positive");
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["embed_dim"] = embed_dim;
        j["utt_hidden"] = utt_hidden;
        j["ctx_hidden"] = ctx_hidden;
        j["mlp_hidden"] = mlp_hidden;
        j["min_freq"] = min_freq;
        j["max_tokens_per_comment"] = max_tokens_per_comment;
        j["max_comments"] = max_comments;
        j["lr"] = lr;
        j["clip"] = clip;
        j["pretrain_epochs"] = pretrain_epochs;
        j["finetune_epochs"] = finetune_epochs;
        j["batch_size"] = batch_size;
        j["seed"] = seed;
        j["leaky_slope"] = leaky_slope;
        j["mode"] = mode_name(mode);
        return j;
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        c.embed_dim = j.value("embed_dim", c.embed_dim);
        c.utt_hidden = j.value("utt_hidden", c.utt_hidden);
        c.ctx_hidden = j.value("ctx_hidden", c.ctx_hidden);
        c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
        c.min_freq = j.value("min_freq", c.min_freq);
        c.max_tokens_per_comment = j.value("max_tokens_per_comment", c.max_tokens_per_comment);
        c.max_comments = j.value("max_comments", c.max_comments);
        c.lr = j.value("lr", c.lr);
        c.clip = j.value("clip", c.clip);
        c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
        c.finetune_epochs = j.value("finetune_epochs", c.finetune_epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.seed = j.value("seed", c.seed);
        c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
        if (j.contains("mode")) c.mode = mode_from_name(j["mode"].get<std::string>());
        return c;
    }

    // key=value lines; '#' starts a comment.
    void apply_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) fail(ErrorKind::missing_file, "cannot open config file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::string t;
            for (char ch : line)
                if (!std::isspace(static_cast<unsigned char>(ch))) t += ch;
            if (t.empty()) continue;
            auto eq = t.find('=');
            if (eq == std::string::npos)
                fail(ErrorKind::config,
                     path + ":" + std::to_string(lineno) + ": expected key=value");
            set(t.substr(0, eq), t.substr(eq + 1));
        }
    }

    void set(const std::string& key, const std::string& value) {
        auto u = [&] { return static_cast<std::size_t>(std::stoull(value)); };
        auto d = [&] { return std::stod(value); };
        if (key == "embed_dim") embed_dim = u();
        else if (key == "utt_hidden") utt_hidden = u();
        else if (key == "ctx_hidden") ctx_hidden = u();
        else if (key == "mlp_hidden") mlp_hidden = u();
        else if (key == "min_freq") min_freq = u();
        else if (key == "max_tokens_per_comment") max_tokens_per_comment = u();
        else if (key == "max_comments") max_comments = u();
        else if (key == "lr") lr = d();
        else if (key == "clip") clip = d();
        else if (key == "pretrain_epochs") pretrain_epochs = u();
        else if (key == "finetune_epochs") finetune_epochs = u();
        else if (key == "batch_size") batch_size = u();
        else if (key == "seed") seed = std::stoull(value);
        else if (key == "leaky_slope") leaky_slope = d();
        else if (key == "mode") mode = mode_from_name(value);
        else fail(ErrorKind::config, "unknown config key: " + key);
    }
};

}  // namespace craft
