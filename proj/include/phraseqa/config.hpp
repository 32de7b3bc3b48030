#pragma once

// Runtime settings: compiled defaults, overridden by a JSON config file,
// then by PHRASEQA_<KEY> environment variables, then by CLI flags.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "phraseqa/dense_index.hpp"
#include "phraseqa/service.hpp"

namespace phraseqa {

struct Settings {
    IndexConfig index;
    AskOptions ask;
    std::string host = "0.0.0.0";
    int port = 8080;
    std::size_t eval_threads = 1;
    bool skip_malformed = false;
};

/// Keys accepted in config files; env var names are PHRASEQA_ + upper(key).
std::vector<std::string> setting_keys();

/// Throws Error on unknown keys or ill-typed values.
void apply_config(Settings& s, const nlohmann::json& obj);
void apply_config_file(Settings& s, const std::filesystem::path& path);

using EnvLookup = std::function<const char*(const char*)>;
void apply_env(Settings& s, const EnvLookup& lookup);
void apply_env(Settings& s);

nlohmann::json settings_to_json(const Settings& s);

} // namespace phraseqa
