#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "a2a/net.hpp"
#include "a2a/tensor.hpp"

namespace a2a {

// Named-parameter archive, magic "A2AP": every checkpoint records the
// config hash of the run that produced it so mixed model suites are
// rejected before inference.
struct ParamArchive {
  uint64_t config_hash = 0;
  std::vector<std::pair<std::string, Tensor>> entries;

  void add(std::string name, Tensor t);
  const Tensor* find(const std::string& name) const;
};

void write_params(const ParamArchive& a, const std::string& path);
ParamArchive read_params(const std::string& path);

// Collect live parameters into an archive (float32 payload on disk).
ParamArchive snapshot(const std::vector<net::Param*>& params, uint64_t config_hash);

// Copy archive values into live parameters by name. The archive must match
// the parameter list exactly: missing or extra names and shape mismatches
// all throw.
void load_into(const ParamArchive& a, const std::vector<net::Param*>& params);

}  // namespace a2a
