#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include "cartoforge/orchestrator/orchestrator.hpp"

namespace cartoforge::service {

struct ServeOptions {
    std::filesystem::path runs_dir;
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 8080;
    std::size_t max_inspiration_bytes = 20u << 20;
    std::size_t max_data_bytes = 100u << 20;
    /// Providers for runs started over the API; llm::make_provider when empty.
    orchestrator::ProviderFactory provider_factory;
    /// How long a verdict POST waits for the run worker to take it.
    double verdict_timeout_seconds = 30;
};

/// HTTP API over a runs directory. Each run started or resumed here is
/// advanced by its own worker thread; verdicts reach it through a mailbox.
class ApiServer {
public:
    explicit ApiServer(ServeOptions options);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds the socket; returns the port. Error{IoError} when it cannot.
    int bind();
    /// Serves until stop(). Binds first if needed.
    void listen();
    /// bind() plus listen() on a background thread.
    void start();
    /// Closes the socket, ends event streams and joins the run workers.
    void stop();
    int port() const noexcept;

    /// Blocks until the worker of `run_id` has nothing left to do (terminated
    /// or awaiting a verdict). False on timeout or when no worker exists.
    bool wait_idle(const std::string& run_id, double timeout_seconds);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cartoforge::service
