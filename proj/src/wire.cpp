#include "vroute/wire.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "vroute/errors.hpp"

namespace vroute {

using json = nlohmann::json;

namespace {

json ok(json payload) {
    payload["ok"] = true;
    return payload;
}

json require_ok(const std::string& line) {
    json r;
    try {
        r = json::parse(line);
    } catch (const json::parse_error& e) {
        throw BackendError(std::string("malformed backend response: ") + e.what());
    }
    if (!r.is_object() || !r.value("ok", false))
        throw BackendError("backend error: " + (r.is_object() ? r.value("error", std::string("unknown")) : line));
    return r;
}

}  // namespace

std::string WireServer::handle(const std::string& request) {
    try {
        const json req = json::parse(request);
        const std::string op = req.at("op").get<std::string>();
        if (op == "describe") {
            const auto c = backend_.capabilities();
            return ok({{"name", c.name},
                       {"family", to_string(c.family)},
                       {"dim", c.dim},
                       {"concurrent_calls", c.concurrent_calls},
                       {"token_span", c.token_span}})
                .dump();
        }
        // Only the operations of the declared family are served.
        const ModelFamily family = backend_.capabilities().family;
        const bool contrastive_op = op == "embed_image" || op == "embed_texts";
        if ((contrastive_op && family != ModelFamily::contrastive) || (op == "logprobs" && family != ModelFamily::generative))
            return json{{"ok", false}, {"error", "op '" + op + "' not served by a " + to_string(family) + " backend"}}.dump();
        if (op == "embed_image")
            return ok({{"embedding", backend_.embed_image(req.at("image_ref").get<std::string>())}}).dump();
        if (op == "embed_texts") {
            const Matrix m = backend_.embed_texts(req.at("prompts").get<std::vector<std::string>>());
            json rows = json::array();
            for (std::size_t r = 0; r < m.rows; ++r) rows.push_back(std::vector<double>(m.row(r), m.row(r) + m.cols));
            return ok({{"embeddings", rows}}).dump();
        }
        if (op == "logprobs")
            return ok({{"logprobs", backend_.logprobs(req.at("image_ref").get<std::string>(),
                                                      req.at("prompts").get<std::vector<std::string>>())}})
                .dump();
        return json{{"ok", false}, {"error", "unknown op '" + op + "'"}}.dump();
    } catch (const std::exception& e) {
        return json{{"ok", false}, {"error", e.what()}}.dump();
    }
}

void WireServer::serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out << handle(line) << '\n';
        out.flush();
    }
}

PipeTransport::PipeTransport(const std::vector<std::string>& argv) {
    if (argv.empty()) throw InvalidInput("backend command is empty");
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) throw BackendError(std::string("pipe: ") + std::strerror(errno));
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw BackendError(std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    signal(SIGPIPE, SIG_IGN);
}

PipeTransport::~PipeTransport() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
}

std::string PipeTransport::exchange(const std::string& request) {
    std::string line = request;
    line.push_back('\n');
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("write to backend failed: ") + std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string response = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return response;
        }
        char chunk[65536];
        const ssize_t n = read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw BackendError("backend process closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

WireBackend::WireBackend(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {
    const json r = require_ok(call(json{{"op", "describe"}}.dump()));
    caps_.name = r.value("name", std::string("remote"));
    caps_.family = model_family_from_string(r.at("family").get<std::string>());
    caps_.dim = r.value("dim", std::size_t{0});
    caps_.concurrent_calls = false;
    caps_.token_span = r.value("token_span", std::string("full"));
}

std::string WireBackend::call(const std::string& request) {
    std::lock_guard lock(mutex_);
    return transport_->exchange(request);
}

std::vector<double> WireBackend::embed_image(const std::string& image_ref) {
    const json r = require_ok(call(json{{"op", "embed_image"}, {"image_ref", image_ref}}.dump()));
    auto v = r.at("embedding").get<std::vector<double>>();
    if (caps_.dim != 0 && v.size() != caps_.dim) throw BackendError("embedding width does not match describe");
    return v;
}

Matrix WireBackend::embed_texts(const std::vector<std::string>& prompts) {
    const json r = require_ok(call(json{{"op", "embed_texts"}, {"prompts", prompts}}.dump()));
    const auto rows = r.at("embeddings").get<std::vector<std::vector<double>>>();
    Matrix m(rows.size(), rows.empty() ? caps_.dim : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols) throw BackendError("ragged text embeddings");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i));
    }
    return m;
}

std::vector<std::vector<double>> WireBackend::logprobs(const std::string& image_ref,
                                                       const std::vector<std::string>& prompts) {
    const json r =
        require_ok(call(json{{"op", "logprobs"}, {"image_ref", image_ref}, {"prompts", prompts}}.dump()));
    return r.at("logprobs").get<std::vector<std::vector<double>>>();
}

}  // namespace vroute
