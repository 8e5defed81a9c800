#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "craft/forecaster.hpp"

namespace craft {

inline nlohmann::ordered_json trace_to_json(const ForecastTrace& t) {
    nlohmann::ordered_json j;
    j["id"] = t.conversation_id;
    j["model"] = t.model_name;
    j["scores"] = t.scores;
    j["trigger_index"] = t.trigger_index ? nlohmann::ordered_json(*t.trigger_index) : nullptr;
    j["decision"] = t.positive ? "positive" : "negative";
    j["threshold"] = t.threshold;
    return j;
}

inline ForecastTrace trace_from_json(const nlohmann::json& j) {
    ForecastTrace t;
    t.conversation_id = j.at("id").get<std::string>();
    t.model_name = j.value("model", std::string("craft"));
    t.threshold = j.at("threshold").get<double>();
    t.scores = j.at("scores").get<std::vector<double>>();
    if (j.contains("trigger_index") && !j["trigger_index"].is_null())
        t.trigger_index = j["trigger_index"].get<std::size_t>();
    t.positive = j.at("decision").get<std::string>() == "positive";
    return t;
}

inline void save_traces(const std::string& path, const std::vector<ForecastTrace>& traces) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::missing_file, "cannot write traces: " + path);
    for (const auto& t : traces) os << trace_to_json(t).dump() << "\n";
}

inline std::vector<ForecastTrace> load_traces(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::missing_file, "cannot open traces: " + path);
    std::vector<ForecastTrace> traces;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            traces.push_back(trace_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::data_validation,
                 path + ":" + std::to_string(lineno) + ": bad trace line: " + e.what());
        }
    }
    return traces;
}

// FNV-1a over file bytes; used to tie artifacts to their inputs.
inline std::string file_hash(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::missing_file, "cannot hash missing file: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!is) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

inline void write_manifest(const std::string& artifact_path, nlohmann::ordered_json manifest) {
    std::ofstream os(artifact_path + ".manifest.json");
    if (!os) fail(ErrorKind::missing_file, "cannot write manifest for: " + artifact_path);
    os << manifest.dump(2) << "\n";
}

inline nlohmann::json read_manifest(const std::string& artifact_path) {
    std::ifstream is(artifact_path + ".manifest.json");
    if (!is) fail(ErrorKind::missing_file, "missing manifest for: " + artifact_path);
    return nlohmann::json::parse(is);
}

}  // namespace craft
