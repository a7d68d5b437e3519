#pragma once

#include <optional>
#include <string>

#include "pipewarden/script_ref.hpp"
#include "pipewarden/workflow.hpp"

namespace pipewarden {

// One `uses:` occurrence with its parsed reference and revision kind.
// Unparsable raw strings leave `ref` empty and classify as Invalid.
struct ScriptUsage {
  UsageLocation location;
  std::string raw_uses;
  std::optional<ScriptRef> ref;
  RefKind kind = RefKind::Unresolved;
  std::optional<std::string> parse_error;

  const RepositoryRef* repository() const {
    return ref ? ref->repository() : nullptr;
  }
  const DockerImageRef* docker_image() const {
    return ref ? ref->docker_image() : nullptr;
  }

  bool operator==(const ScriptUsage&) const = default;
};

// Parses and classifies one raw usage against optional metadata.
ScriptUsage resolve_usage(const RawUsage& raw_usage,
                          const ScriptMetadata* metadata);

}  // namespace pipewarden
