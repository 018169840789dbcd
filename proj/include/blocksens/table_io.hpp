// SPDX-License-Identifier: Apache-2.0
//
// Serialization of truth tables and spectra.
//
// JSON:   {"arity": n, "values": [v_0, ..., v_{2^n - 1}]}
// Binary: 8-byte little-endian unsigned arity, then 2^n little-endian IEEE-754
//         doubles in index order.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "blocksens/boolfn.hpp"
#include "json.hpp"

namespace blocksens {

/// Arity plus raw values; either a truth table or a spectrum.
struct TableData {
  int arity = 0;
  std::vector<double> values;
};

nlohmann::json table_to_json(const TableData& data);
TableData table_from_json(const nlohmann::json& j);

std::string encode_binary(const TableData& data);
TableData decode_binary(const std::string& bytes);

/// Format chosen by extension: ".bin" is binary, anything else JSON.
TableData read_table_file(const std::filesystem::path& path);
std::string encode_table_file(const std::filesystem::path& path,
                              const TableData& data);

inline TableData to_data(const TruthTable& f) {
  return {f.arity(), {f.values().begin(), f.values().end()}};
}
inline TableData to_data(const FourierSpectrum& s) {
  return {s.arity, s.coefficients};
}

}  // namespace blocksens
