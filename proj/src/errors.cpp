// Copyright 2026-present the livemod project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "livemod/errors.h"

#include <fmt/format.h>

namespace livemod {

std::string_view
error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::INVALID_ARGUMENT:
            return "invalid-argument";
        case ErrorCode::CONFLICT:
            return "conflict";
        case ErrorCode::DEGENERATE_INPUT:
            return "degenerate-input";
        case ErrorCode::PARSE_ERROR:
            return "parse-error";
        case ErrorCode::VALIDATION_ERROR:
            return "validation-error";
        case ErrorCode::CORRUPT_SNAPSHOT:
            return "corrupt-snapshot";
        case ErrorCode::CONTRACT_VIOLATION:
            return "contract-violation";
        case ErrorCode::IO_ERROR:
            return "io-error";
        case ErrorCode::CONFIG_ERROR:
            return "config-error";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", error_code_name(code), message)), code_(code), detail_(message) {
}

void
throw_error(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace livemod
