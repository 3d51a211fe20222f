#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roughcast {

enum class Errc {
    schema,
    parse,
    validation,
    config,
    invalid_design,
    insufficient_data,
    empty_dataset,
    batch_too_small,
    divergence,
    undefined_metric,
    leakage,
    search_failed,
    contract,
    corrupt_file,
    io,
    not_found,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries one of the codes above so that
// callers (CLI, HTTP layer, tests) can dispatch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    Errc code_;
    std::optional<std::size_t> line_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

} // namespace roughcast
