#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "irds/errors.hpp"
#include "irds/registry.hpp"

namespace irds::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_unknown_dataset = 2;
inline constexpr int exit_unsupported = 3;
inline constexpr int exit_all_missing = 4;
inline constexpr int exit_bad_arguments = 5;
inline constexpr int exit_unsupported_platform = 6;
inline constexpr int exit_hash_mismatch = 7;
inline constexpr int exit_network = 8;

int exit_code_for(ErrorKind kind);

/// Builds the registry once global flags have fixed the environment.
using RegistryFactory = std::function<Registry(const Environment&)>;

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const RegistryFactory& make_registry = Registry::builtin);

}  // namespace irds::cli
