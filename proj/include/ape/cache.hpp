#pragma once

#include "ape/backend.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace ape {

/// SHA-256 of bytes as lowercase hex.
std::string sha256_hex(std::string_view bytes);

/// Content-addressed on-disk store: one JSON file per key under dir/.
/// Concurrent reads, exclusive writes; a corrupt entry reads as a miss.
class ResponseCache {
public:
    explicit ResponseCache(std::string dir);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& value);

    const std::string& dir() const { return dir_; }

private:
    std::string path_for(const std::string& key) const;

    std::string dir_;
    mutable std::mutex mu_;
};

/// Wraps any backend with persistent response caching. Cache hits return
/// byte-identical results with cached=true, reporting the original usage
/// but adding nothing to the ledger.
class CachingBackend : public ModelBackend {
public:
    CachingBackend(std::shared_ptr<ModelBackend> inner, std::shared_ptr<ResponseCache> cache);

    const ModelSpec& spec() const override { return inner_->spec(); }
    GenerationResult complete(const GenerationRequest& request) override;
    GenerationResult infill(const GenerationRequest& request) override;
    double logprob(const RenderedPrompt& prompt, const std::string& continuation) override;

private:
    GenerationResult run_cached(const char* op, const GenerationRequest& request,
                                GenerationResult (ModelBackend::*fn)(const GenerationRequest&));

    std::shared_ptr<ModelBackend> inner_;
    std::shared_ptr<ResponseCache> cache_;
};

/// Canonical request encoding used for cache keys.
std::string canonical_request_key(const std::string& op, const std::string& model,
                                  const GenerationRequest& request);

} // namespace ape
