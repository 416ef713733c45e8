#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "emrecon/field.hpp"

namespace emrecon {

using Metadata = std::map<std::string, std::string>;

struct Container {
    std::map<std::string, FieldVariant> fields;
    Metadata metadata;
};

/// Write fields + flat string metadata to an EMEC container file. All fields
/// must share one GridShape. Values are stored as little-endian f32, row-major
/// with x fastest; vector fields interleave components per node.
void write_container(const std::filesystem::path& path,
                     const std::map<std::string, FieldVariant>& fields,
                     const Metadata& metadata = {});

/// Read an EMEC container. Throws std::runtime_error with a distinct message
/// for bad magic, unsupported version, and truncated payloads.
Container read_container(const std::filesystem::path& path);

}  // namespace emrecon
