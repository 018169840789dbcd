// SPDX-License-Identifier: Apache-2.0
#include "blocksens/table_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace blocksens {

namespace {

void validate(const TableData& data) {
  if (data.arity < 1 || data.arity > kMaxArity)
    throw std::invalid_argument("table arity out of range");
  if (data.values.size() != (std::size_t{1} << data.arity))
    throw std::invalid_argument("table has " + std::to_string(data.values.size()) +
                                " values, arity " + std::to_string(data.arity) +
                                " needs " +
                                std::to_string(std::size_t{1} << data.arity));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

}  // namespace

nlohmann::json table_to_json(const TableData& data) {
  validate(data);
  return nlohmann::json{{"arity", data.arity}, {"values", data.values}};
}

TableData table_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("arity") || !j.contains("values"))
    throw std::invalid_argument("table JSON needs \"arity\" and \"values\"");
  TableData data;
  data.arity = j.at("arity").get<int>();
  data.values = j.at("values").get<std::vector<double>>();
  validate(data);
  return data;
}

std::string encode_binary(const TableData& data) {
  validate(data);
  std::string out;
  out.reserve(8 + 8 * data.values.size());
  put_u64(out, static_cast<std::uint64_t>(data.arity));
  for (double v : data.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

TableData decode_binary(const std::string& bytes) {
  if (bytes.size() < 8) throw std::invalid_argument("binary table truncated");
  const std::uint64_t arity = get_u64(bytes, 0);
  if (arity < 1 || arity > static_cast<std::uint64_t>(kMaxArity))
    throw std::invalid_argument("binary table arity out of range");
  const std::size_t count = std::size_t{1} << arity;
  if (bytes.size() != 8 + 8 * count)
    throw std::invalid_argument("binary table has wrong length for arity " +
                                std::to_string(arity));
  TableData data;
  data.arity = static_cast<int>(arity);
  data.values.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    data.values[i] = std::bit_cast<double>(get_u64(bytes, 8 + 8 * i));
  return data;
}

TableData read_table_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (path.extension() == ".bin") return decode_binary(buffer.str());
  return table_from_json(nlohmann::json::parse(buffer.str()));
}

std::string encode_table_file(const std::filesystem::path& path,
                              const TableData& data) {
  if (path.extension() == ".bin") return encode_binary(data);
  return table_to_json(data).dump() + "\n";
}

}  // namespace blocksens
