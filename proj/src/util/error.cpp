#include "cartoforge/error.hpp"

namespace cartoforge {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedJson: return "MalformedJson";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::MissingBackground: return "MissingBackground";
        case ErrorKind::UnknownElement: return "UnknownElement";
        case ErrorKind::IllegalVariableForCategory: return "IllegalVariableForCategory";
        case ErrorKind::MissingPlaceholder: return "MissingPlaceholder";
        case ErrorKind::NoJsonFound: return "NoJsonFound";
        case ErrorKind::EmptyReply: return "EmptyReply";
        case ErrorKind::ProviderTimeout: return "ProviderTimeout";
        case ErrorKind::ProviderHttpError: return "ProviderHttpError";
        case ErrorKind::ReplayMiss: return "ReplayMiss";
        case ErrorKind::IncompleteSheet: return "IncompleteSheet";
        case ErrorKind::SourceBindingMissing: return "SourceBindingMissing";
        case ErrorKind::UndecodableImage: return "UndecodableImage";
        case ErrorKind::MissingIcon: return "MissingIcon";
        case ErrorKind::EmptyViewport: return "EmptyViewport";
        case ErrorKind::AdapterNotFound: return "AdapterNotFound";
        case ErrorKind::AdapterFailed: return "AdapterFailed";
        case ErrorKind::BadOutputSize: return "BadOutputSize";
        case ErrorKind::EmptyImage: return "EmptyImage";
        case ErrorKind::BinMismatch: return "BinMismatch";
        case ErrorKind::ZeroHistogram: return "ZeroHistogram";
        case ErrorKind::SessionTerminated: return "SessionTerminated";
        case ErrorKind::AwaitingHumanVerdict: return "AwaitingHumanVerdict";
        case ErrorKind::CorruptSession: return "CorruptSession";
        case ErrorKind::InvalidStylesheet: return "InvalidStylesheet";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace cartoforge
