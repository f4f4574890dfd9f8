#pragma once

#include <string>

#include "dcf/joint.hpp"

namespace dcf {

// Versioned JSON model documents: a config block plus named parameter tensors
// stored row-major; loading validates every shape against the config.

std::string mdn_to_json(const MdnModel& model);
MdnModel mdn_from_json(const std::string& text);

std::string cdc_to_json(const CdcModel& model);
CdcModel cdc_from_json(const std::string& text);

// Bundle directory: manifest.json naming the asset order and per-asset
// marginal files plus the copula file.
void save_bundle(const ModelBundle& bundle, const std::string& dir);
ModelBundle load_bundle(const std::string& dir);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dcf
