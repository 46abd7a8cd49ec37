#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cartoforge {

enum class ErrorKind {
    // style-core
    MalformedJson,
    SchemaViolation,
    MissingBackground,
    UnknownElement,
    IllegalVariableForCategory,
    // prompt-kit
    MissingPlaceholder,
    NoJsonFound,
    EmptyReply,
    // llm-gateway
    ProviderTimeout,
    ProviderHttpError,
    ReplayMiss,
    // style-compiler
    IncompleteSheet,
    SourceBindingMissing,
    UndecodableImage,
    // map-renderer
    MissingIcon,
    EmptyViewport,
    AdapterNotFound,
    AdapterFailed,
    BadOutputSize,
    // style-metrics
    EmptyImage,
    BinMismatch,
    ZeroHistogram,
    // orchestrator
    SessionTerminated,
    AwaitingHumanVerdict,
    CorruptSession,
    InvalidStylesheet,
    // shared
    InvalidArgument,
    IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above.
/// `status` is only meaningful for ProviderHttpError (HTTP status) and
/// AdapterFailed (process exit code); `detail` holds a response body or
/// captured stderr for those two.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, int status = 0, std::string detail = {})
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind),
          status_(status),
          detail_(std::move(detail)) {}

    ErrorKind kind() const noexcept { return kind_; }
    int status() const noexcept { return status_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    int status_;
    std::string detail_;
};

}  // namespace cartoforge
