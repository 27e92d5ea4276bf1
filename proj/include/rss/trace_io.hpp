#pragma once

#include <iosfwd>
#include <string>

#include "rss/config.hpp"
#include "rss/engine.hpp"

namespace rss {

inline constexpr int kTraceFormatVersion = 1;

struct LoadedTrace {
  RunConfig config;
  ExecutionTrace trace;
};

// One top-level key per line; the "generated_at" line is the only one that
// depends on the wall clock.
void WriteTrace(std::ostream& out, const ExecutionTrace& trace, const RunConfig& config,
                const std::string& timestamp);
std::string TraceToString(const ExecutionTrace& trace, const RunConfig& config, const std::string& timestamp);

// Throws ConfigError on malformed files or unsupported versions.
LoadedTrace ReadTrace(std::istream& in);
LoadedTrace ReadTraceFile(const std::string& path);

// UTC, ISO 8601 to the second.
std::string UtcTimestamp();

Json PolynomialToJson(const SeparablePolynomial& p);
SeparablePolynomial PolynomialFromJson(const Json& j);

}  // namespace rss
