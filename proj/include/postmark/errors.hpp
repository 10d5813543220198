#pragma once

#include <stdexcept>
#include <string>

namespace postmark {

// Process exit codes shared by the CLI and the error hierarchy below.
enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 2,    // usage errors, malformed files, empty datasets
    kExitKey = 3,      // table/backend fingerprint mismatches
    kExitBackend = 4,  // transport failures, bad backend responses
};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input: invalid arguments, missing files, empty datasets.
struct InputError : Error {
    using Error::Error;
};

// Unparseable or corrupt on-disk data (reported with file/line context).
struct FormatError : InputError {
    using InputError::InputError;
};

// Key material problems: a table bound to a different embedder, or a
// word-embedding cache built under another fingerprint.
struct KeyError : Error {
    using Error::Error;
};

// Remote transport failures and malformed or empty backend responses.
struct BackendError : Error {
    using Error::Error;
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const KeyError*>(&e)) return kExitKey;
    if (dynamic_cast<const BackendError*>(&e)) return kExitBackend;
    if (dynamic_cast<const InputError*>(&e)) return kExitInput;
    return 1;
}

}  // namespace postmark
