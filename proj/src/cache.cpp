#include "ape/cache.hpp"

#include "ape/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ape {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::string ResponseCache::path_for(const std::string& key) const {
    return (fs::path(dir_) / (key + ".json")).string();
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void ResponseCache::put(const std::string& key, const std::string& value) {
    std::lock_guard<std::mutex> lock(mu_);
    const std::string path = path_for(key);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << value;
    }
    fs::rename(tmp, path);
}

std::string canonical_request_key(const std::string& op, const std::string& model,
                                  const GenerationRequest& request) {
    json j;
    j["op"] = op;
    j["model"] = model;
    j["prefix"] = request.prompt.prefix;
    j["suffix"] = request.prompt.suffix ? json(*request.prompt.suffix) : json(nullptr);
    j["n"] = request.n;
    j["temperature"] = request.temperature;
    j["max_tokens"] = request.max_tokens;
    j["stop"] = request.stop_sequences;
    j["seed"] = request.seed ? json(*request.seed) : json(nullptr);
    return sha256_hex(j.dump());
}

CachingBackend::CachingBackend(std::shared_ptr<ModelBackend> inner,
                               std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

GenerationResult CachingBackend::run_cached(
    const char* op, const GenerationRequest& request,
    GenerationResult (ModelBackend::*fn)(const GenerationRequest&)) {
    const std::string key = canonical_request_key(op, spec().name, request);
    if (auto stored = cache_->get(key)) {
        try {
            json j = json::parse(*stored);
            GenerationResult result;
            result.texts = j.at("texts").get<std::vector<std::string>>();
            result.usage.prompt_tokens = j.at("prompt_tokens").get<long>();
            result.usage.completion_tokens = j.at("completion_tokens").get<long>();
            result.cached = true;
            return result;
        } catch (const json::exception& e) {
            std::cerr << "[ape] corrupt cache entry " << key << ": " << e.what()
                      << " (treating as miss)\n";
        }
    }
    GenerationResult result = (inner_.get()->*fn)(request);
    json j;
    j["texts"] = result.texts;
    j["prompt_tokens"] = result.usage.prompt_tokens;
    j["completion_tokens"] = result.usage.completion_tokens;
    cache_->put(key, j.dump());
    return result;
}

GenerationResult CachingBackend::complete(const GenerationRequest& request) {
    return run_cached("complete", request, &ModelBackend::complete);
}

GenerationResult CachingBackend::infill(const GenerationRequest& request) {
    return run_cached("infill", request, &ModelBackend::infill);
}

double CachingBackend::logprob(const RenderedPrompt& prompt, const std::string& continuation) {
    json key_doc;
    key_doc["op"] = "logprob";
    key_doc["model"] = spec().name;
    key_doc["prefix"] = prompt.prefix;
    key_doc["suffix"] = prompt.suffix ? json(*prompt.suffix) : json(nullptr);
    key_doc["continuation"] = continuation;
    const std::string key = sha256_hex(key_doc.dump());
    if (auto stored = cache_->get(key)) {
        try {
            return json::parse(*stored).at("logprob").get<double>();
        } catch (const json::exception& e) {
            std::cerr << "[ape] corrupt cache entry " << key << ": " << e.what()
                      << " (treating as miss)\n";
        }
    }
    double lp = inner_->logprob(prompt, continuation);
    json j;
    j["logprob"] = lp;
    cache_->put(key, j.dump());
    return lp;
}

} // namespace ape
