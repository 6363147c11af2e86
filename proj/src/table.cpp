#include "diccae/table.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "diccae/errors.hpp"

namespace diccae {
namespace {

constexpr char kDiceMagic[4] = {'D', 'I', 'C', 'E'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<U>((u << 8) | p[i]);
  return static_cast<T>(u);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}


bool EmbeddingTable::fully_labeled() const {
  return std::none_of(labels.begin(), labels.end(), [](std::int64_t l) { return l < 0; });
}

void EmbeddingTable::validate() const {
  if (labels.size() != features.rows()) {
    throw Error(ErrorCode::kShape, "table has " + std::to_string(labels.size()) + " labels for " +
                                       std::to_string(features.rows()) + " rows");
  }
  if (!features.all_finite()) throw Error(ErrorCode::kFormat, "table has non-finite features");
}

void write_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  table.validate();
  std::string buf;
  buf.reserve(kHeaderBytes + table.n() * 8 + table.features.size() * 4);
  buf.append(kDiceMagic, 4);
  put_le<std::uint32_t>(buf, kDiceVersion);
  put_le<std::uint64_t>(buf, table.n());
  put_le<std::uint64_t>(buf, table.d());
  for (std::int64_t l : table.labels) put_le<std::int64_t>(buf, l);
  for (double v : table.features.values())
    put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  write_file_atomic(path, buf);
}

EmbeddingTable read_table(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  if (size < 4) throw Error(ErrorCode::kTruncated, path.string() + ": truncated before magic");
  if (std::memcmp(p, kDiceMagic, 4) != 0)
    throw Error(ErrorCode::kBadMagic, path.string() + ": not a DICE file");
  if (size < kHeaderBytes) throw Error(ErrorCode::kTruncated, path.string() + ": truncated header");
  const auto version = get_le<std::uint32_t>(p + 4);
  if (version != kDiceVersion) {
    throw Error(ErrorCode::kVersion, path.string() + ": DICE version " + std::to_string(version) +
                                         ", expected " + std::to_string(kDiceVersion));
  }
  const auto n = get_le<std::uint64_t>(p + 8);
  const auto d = get_le<std::uint64_t>(p + 16);
  const std::size_t remaining = size - kHeaderBytes;
  // Guard each product against overflow before comparing with the file size.
  if (n > remaining / 8 || (d != 0 && n > (remaining - n * 8) / 4 / d))
    throw Error(ErrorCode::kTruncated, path.string() + ": truncated payload");
  const std::size_t expected = n * 8 + n * d * 4;
  if (remaining != expected)
    throw Error(ErrorCode::kFormat, path.string() + ": trailing bytes after payload");

  EmbeddingTable table;
  table.labels.resize(n);
  const unsigned char* cursor = p + kHeaderBytes;
  for (std::size_t i = 0; i < n; ++i, cursor += 8) table.labels[i] = get_le<std::int64_t>(cursor);
  table.features = Matrix(n, d);
  for (double& v : table.features.values()) {
    v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(cursor)));
    cursor += 4;
  }
  table.validate();
  return table;
}

void write_table_csv(const EmbeddingTable& table, const std::filesystem::path& path) {
  table.validate();
  std::ostringstream out;
  out << "id,label";
  for (std::size_t c = 0; c < table.d(); ++c) out << ",f" << c;
  out << '\n';
  char num[32];
  for (std::size_t r = 0; r < table.n(); ++r) {
    out << r << ',' << table.labels[r];
    for (double v : table.features.row(r)) {
      std::snprintf(num, sizeof num, "%.9g", v);
      out << ',' << num;
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

EmbeddingTable read_table_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, path.string() + ": missing header");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2 || line.rfind("id,label", 0) != 0)
    throw Error(ErrorCode::kFormat, path.string() + ": header must start with id,label");
  const std::size_t d = columns - 2;
  std::vector<std::int64_t> labels;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns)
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) +
                                          ": expected " + std::to_string(columns) + " fields");
    try {
      labels.push_back(std::stoll(cells[1]));
      for (std::size_t c = 2; c < columns; ++c) values.push_back(std::stod(cells[c]));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) +
                                          ": unparsable number");
    }
  }
  EmbeddingTable table;
  const std::size_t n = labels.size();
  table.labels = std::move(labels);
  table.features = Matrix(n, d, std::move(values));
  table.validate();
  return table;
}

EmbeddingTable quantize_to_float(EmbeddingTable table) {
  for (double& v : table.features.values()) v = static_cast<double>(static_cast<float>(v));
  return table;
}

}  // namespace diccae
