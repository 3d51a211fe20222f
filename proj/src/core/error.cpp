#include "roughcast/error.hpp"

namespace roughcast {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::schema: return "schema";
    case Errc::parse: return "parse";
    case Errc::validation: return "validation";
    case Errc::config: return "config";
    case Errc::invalid_design: return "invalid-design";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::empty_dataset: return "empty-dataset";
    case Errc::batch_too_small: return "batch-too-small";
    case Errc::divergence: return "divergence";
    case Errc::undefined_metric: return "undefined-metric";
    case Errc::leakage: return "leakage";
    case Errc::search_failed: return "search-failed";
    case Errc::contract: return "contract";
    case Errc::corrupt_file: return "corrupt-file";
    case Errc::io: return "io";
    case Errc::not_found: return "not-found";
    }
    return "unknown";
}

static std::string decorate(Errc code, const std::string& message, std::optional<std::size_t> line)
{
    std::string out(to_string(code));
    out += " error";
    if (line) {
        out += " (line " + std::to_string(*line) + ")";
    }
    out += ": ";
    out += message;
    return out;
}

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line)
{
}

void fail(Errc code, const std::string& message)
{
    throw Error(code, message);
}

} // namespace roughcast
