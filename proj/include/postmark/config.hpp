#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "postmark/backends.hpp"
#include "postmark/errors.hpp"
#include "postmark/io.hpp"
#include "postmark/selection.hpp"

namespace postmark {

// Layered configuration with dotted keys ("embedder.transport", ...).
// Precedence: command-line flags > environment (POSTMARK_EMBEDDER_TRANSPORT)
// > config file (nested JSON) > built-in defaults.
class ConfigLayers {
public:
    void load_config_file(const std::filesystem::path& path) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(read_file_bytes(path));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
        if (!doc.is_object()) throw FormatError(path.string() + ": config must be a JSON object");
        flatten("", doc);
    }

    void set_from_cli(const std::string& key, const std::string& value) { cli_[key] = value; }

    std::string get(const std::string& key, const std::string& fallback) const {
        if (const auto it = cli_.find(key); it != cli_.end()) return it->second;
        if (const char* env = std::getenv(env_name(key).c_str())) {
            if (*env != '\0') return env;
        }
        if (const auto it = file_.find(key); it != file_.end()) return it->second;
        return fallback;
    }

    double get_double(const std::string& key, double fallback) const {
        const std::string raw = get(key, "");
        if (raw.empty()) return fallback;
        try {
            return std::stod(raw);
        } catch (const std::exception&) {
            throw InputError("config value '" + key + "' is not a number: " + raw);
        }
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const std::string raw = get(key, "");
        if (raw.empty()) return fallback;
        try {
            return std::stoll(raw);
        } catch (const std::exception&) {
            throw InputError("config value '" + key + "' is not an integer: " + raw);
        }
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
        const std::string raw = get(key, "");
        if (raw.empty()) return fallback;
        try {
            return std::stoull(raw);
        } catch (const std::exception&) {
            throw InputError("config value '" + key + "' is not an unsigned integer: " + raw);
        }
    }

    static std::string env_name(const std::string& key) {
        std::string name = "POSTMARK_";
        for (char c : key) {
            name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(
                                                static_cast<unsigned char>(c))));
        }
        return name;
    }

private:
    void flatten(const std::string& prefix, const nlohmann::json& node) {
        for (const auto& [key, value] : node.items()) {
            const std::string full = prefix.empty() ? key : prefix + "." + key;
            if (value.is_object()) {
                flatten(full, value);
            } else if (value.is_string()) {
                file_[full] = value.get<std::string>();
            } else {
                file_[full] = value.dump();
            }
        }
    }

    std::map<std::string, std::string> file_;
    std::map<std::string, std::string> cli_;
};

// Concrete settings resolved from the layers.
struct RunConfig {
    BackendDescriptor embedder;
    BackendDescriptor inserter;
    BackendDescriptor attacker;
    bool attacker_configured = false;
    InsertionPolicy policy;
    double tau = kDefaultMatchTau;
    int max_repair_passes = kDefaultMaxRepairPasses;
    int parallelism = 1;
};

inline Transport parse_transport(const std::string& s) {
    if (s == "mock") return Transport::mock;
    if (s == "remote" || s == "remote-http") return Transport::remote_http;
    throw InputError("transport must be 'mock' or 'remote', got '" + s + "'");
}

inline BackendDescriptor resolve_backend(const ConfigLayers& layers, const std::string& section,
                                         BackendKind kind) {
    BackendDescriptor d;
    d.kind = kind;
    d.transport = parse_transport(layers.get(section + ".transport", "mock"));
    d.endpoint = layers.get(section + ".endpoint", "");
    d.model_id = layers.get(section + ".model", "");
    d.auth_token_env = layers.get(section + ".auth_env", "");
    d.timeout_seconds = layers.get_double("http.timeout", 30.0);
    d.max_retries = static_cast<int>(layers.get_int("http.max_retries", 2));
    d.retry_backoff_seconds = layers.get_double("http.retry_backoff", 0.25);
    d.seed = layers.get_uint(section + ".seed", 0);
    if (kind == BackendKind::embedding) {
        d.dimension = static_cast<int>(layers.get_int(section + ".dimension", 256));
    }
    return d;
}

inline RunConfig resolve_run_config(const ConfigLayers& layers) {
    RunConfig cfg;
    cfg.embedder = resolve_backend(layers, "embedder", BackendKind::embedding);
    cfg.inserter = resolve_backend(layers, "inserter", BackendKind::instruction);
    if (cfg.inserter.transport == Transport::mock && cfg.inserter.model_id.empty()) {
        cfg.inserter.model_id = "inserter-oracle";
    }
    cfg.attacker = resolve_backend(layers, "attacker", BackendKind::instruction);
    cfg.attacker_configured = !layers.get("attacker.transport", "").empty() ||
                              !layers.get("attacker.model", "").empty() ||
                              !layers.get("attacker.endpoint", "").empty();
    if (cfg.attacker.transport == Transport::mock && cfg.attacker.model_id.empty()) {
        cfg.attacker.model_id = "paraphrase-identity";
    }
    cfg.policy.insertion_ratio = layers.get_double("policy.ratio", 0.12);
    cfg.policy.k_prime_multiplier = layers.get_double("policy.k_multiplier", 2.0);
    cfg.policy.sublist_size = static_cast<int>(layers.get_int("policy.sublist", 10));
    cfg.tau = layers.get_double("policy.tau", kDefaultMatchTau);
    cfg.max_repair_passes =
        static_cast<int>(layers.get_int("policy.max_repair_passes", kDefaultMaxRepairPasses));
    cfg.parallelism = static_cast<int>(layers.get_int("parallelism", 1));
    if (cfg.parallelism < 1) throw InputError("parallelism must be >= 1");
    cfg.policy.validate();
    if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) throw InputError("tau must be in (0, 1]");
    return cfg;
}

}  // namespace postmark
