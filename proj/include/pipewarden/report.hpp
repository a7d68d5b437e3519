#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pipewarden/rules.hpp"
#include "pipewarden/stats.hpp"

namespace pipewarden {

enum class ReportFormat { Json, Text, Sarif };

std::optional<ReportFormat> report_format_from_string(std::string_view text);

struct ToolInfo {
  std::string name = "pipewarden";
  std::string version;
};

struct RenderError {
  std::string message;  // unsupported format
};

using RenderResult = std::variant<std::string, RenderError>;

// Renders findings. Byte-deterministic for identical inputs. The JSON form
// carries a "tool" block only when `tool` is given (the CLI always passes
// it); the library default is the bare findings document.
RenderResult render_findings(const std::vector<Finding>& findings,
                             ReportFormat format,
                             const std::optional<ToolInfo>& tool = {});

// Renders corpus statistics (json or text; SARIF has no stats form).
RenderResult render_stats(const CorpusStats& stats, ReportFormat format);

}  // namespace pipewarden
