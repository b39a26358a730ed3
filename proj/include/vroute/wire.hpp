#pragma once

// Line-delimited JSON protocol for out-of-process model servers. Each request
// is one object with an "op" field:
//   {"op":"describe"}
//   {"op":"embed_image","image_ref":"..."}
//   {"op":"embed_texts","prompts":["...", ...]}
//   {"op":"logprobs","image_ref":"...","prompts":["...", ...]}
// Responses are {"ok":true, ...payload} or {"ok":false,"error":"..."}.

#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vroute/scoring.hpp"

namespace vroute {

class Transport {
public:
    virtual ~Transport() = default;
    /// Sends one request line and returns the matching response line.
    virtual std::string exchange(const std::string& request) = 0;
};

/// Answers protocol requests against a local backend.
class WireServer {
public:
    explicit WireServer(Backend& backend) : backend_(backend) {}
    std::string handle(const std::string& request);
    /// Reads requests until end of input.
    void serve(std::istream& in, std::ostream& out);

private:
    Backend& backend_;
};

class InProcessTransport final : public Transport {
public:
    explicit InProcessTransport(Backend& backend) : server_(backend) {}
    std::string exchange(const std::string& request) override { return server_.handle(request); }

private:
    WireServer server_;
};

/// Spawns `argv` and talks to it over its stdin/stdout.
class PipeTransport final : public Transport {
public:
    explicit PipeTransport(const std::vector<std::string>& argv);
    ~PipeTransport() override;
    PipeTransport(const PipeTransport&) = delete;
    PipeTransport& operator=(const PipeTransport&) = delete;

    std::string exchange(const std::string& request) override;

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// Backend client over any transport. Calls are serialized per client.
class WireBackend final : public Backend {
public:
    explicit WireBackend(std::unique_ptr<Transport> transport);

    BackendCapabilities capabilities() const override { return caps_; }
    std::vector<double> embed_image(const std::string& image_ref) override;
    Matrix embed_texts(const std::vector<std::string>& prompts) override;
    std::vector<std::vector<double>> logprobs(const std::string& image_ref,
                                              const std::vector<std::string>& prompts) override;

private:
    std::string call(const std::string& request);

    std::unique_ptr<Transport> transport_;
    BackendCapabilities caps_;
    std::mutex mutex_;
};

}  // namespace vroute
