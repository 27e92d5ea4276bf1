#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rss {

// A decision variable in R^D.
using Point = Eigen::VectorXd;

// Agents are indexed 0..n-1.
using AgentId = int;
using AgentSet = std::vector<AgentId>;

// Caller violated an operation's contract (bad dimension, bad parameter).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A graph connectivity requirement does not hold. Used both for topology
// construction and for the privacy construction's induced-subgraph check.
class ConnectivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration or trace file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kArtifactVersion = "0.3.0";

}  // namespace rss
