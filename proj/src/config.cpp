#include "phraseqa/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <type_traits>

#include "phraseqa/error.hpp"

namespace phraseqa {

using json = nlohmann::json;

namespace {

struct Field {
    std::function<void(Settings&, const json&)> set;
    std::function<json(const Settings&)> get;
};

template <typename T>
T as(const json& v, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                throw Error("setting '" + key + "' must be a boolean");
            }
        } else if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && v.get<long long>() < 0) {
                throw Error("setting '" + key + "' must be non-negative");
            }
            if (!v.is_number_integer()) {
                throw Error("setting '" + key + "' must be an integer");
            }
        } else if constexpr (std::is_arithmetic_v<T>) {
            if (!v.is_number()) {
                throw Error("setting '" + key + "' must be a number");
            }
        }
        return v.get<T>();
    } catch (const json::exception& e) {
        throw Error("setting '" + key + "': " + e.what());
    }
}

#define PHRASEQA_FIELD(key, member, type)                                                    \
    {                                                                                        \
        key, Field {                                                                         \
            [](Settings& s, const json& v) { s.member = as<type>(v, key); },                 \
            [](const Settings& s) { return json(s.member); }                                 \
        }                                                                                    \
    }

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = {
        PHRASEQA_FIELD("k", ask.k, std::size_t),
        PHRASEQA_FIELD("nprobe", ask.nprobe, std::size_t),
        PHRASEQA_FIELD("lambda", ask.lambda, double),
        PHRASEQA_FIELD("rerank_depth", ask.rerank_depth, std::size_t),
        PHRASEQA_FIELD("w_recency", ask.metadata.recency, double),
        PHRASEQA_FIELD("w_impact", ask.metadata.impact, double),
        PHRASEQA_FIELD("w_external", ask.metadata.external, double),
        PHRASEQA_FIELD("tau_days", ask.metadata.tau_days, double),
        PHRASEQA_FIELD("entity_top_k", ask.entity_top_k, std::size_t),
        PHRASEQA_FIELD("bm25_k1", ask.bm25.k1, double),
        PHRASEQA_FIELD("bm25_b", ask.bm25.b, double),
        PHRASEQA_FIELD("num_centroids", index.num_centroids, std::size_t),
        PHRASEQA_FIELD("kmeans_iters", index.kmeans_iters, std::size_t),
        PHRASEQA_FIELD("seed", index.seed, std::uint64_t),
        PHRASEQA_FIELD("dense_dim", index.encoder.dense_dim, std::size_t),
        PHRASEQA_FIELD("sparse_dim", index.encoder.sparse_dim, std::uint32_t),
        PHRASEQA_FIELD("context_weight", index.encoder.context_weight, float),
        PHRASEQA_FIELD("encoder_seed", index.encoder.seed, std::uint64_t),
        PHRASEQA_FIELD("max_phrase_len", index.encoder.max_phrase_len, std::size_t),
        PHRASEQA_FIELD("host", host, std::string),
        PHRASEQA_FIELD("port", port, int),
        PHRASEQA_FIELD("eval_threads", eval_threads, std::size_t),
        PHRASEQA_FIELD("skip_malformed", skip_malformed, bool),
    };
    return table;
}

#undef PHRASEQA_FIELD

} // namespace

std::vector<std::string> setting_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : fields()) {
        keys.push_back(k);
    }
    return keys;
}

void apply_config(Settings& s, const json& obj) {
    if (!obj.is_object()) {
        throw Error("config must be a JSON object");
    }
    for (const auto& [key, value] : obj.items()) {
        auto it = fields().find(key);
        if (it == fields().end()) {
            throw Error("unknown setting '" + key + "'");
        }
        it->second.set(s, value);
    }
}

void apply_config_file(Settings& s, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
    apply_config(s, j);
}

void apply_env(Settings& s, const EnvLookup& lookup) {
    for (const auto& [key, field] : fields()) {
        std::string var = "PHRASEQA_" + key;
        for (char& c : var) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        const char* raw = lookup(var.c_str());
        if (raw == nullptr) {
            continue;
        }
        // Numbers and booleans parse as JSON; anything else is a string.
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = std::string(raw);
        }
        if (key == "host" && !value.is_string()) {
            value = std::string(raw);
        }
        try {
            field.set(s, value);
        } catch (const Error& e) {
            throw Error(var + ": " + e.what());
        }
    }
}

void apply_env(Settings& s) {
    apply_env(s, [](const char* name) { return std::getenv(name); });
}

json settings_to_json(const Settings& s) {
    json j = json::object();
    for (const auto& [key, field] : fields()) {
        j[key] = field.get(s);
    }
    return j;
}

} // namespace phraseqa
