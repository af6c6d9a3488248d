#include "core/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace veloreg {

static_assert(std::endian::native == std::endian::little,
              "volume files are little-endian; big-endian hosts are not supported");

namespace {

using nlohmann::json;

std::string strip_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return s.substr(0, s.size() - suffix.size());
  }
  return s;
}

void write_header(const std::string& base, const VolumeHeader& h) {
  json j;
  j["dims"] = h.dims;
  j["dtype"] = h.dtype;
  j["order"] = h.order;
  j["domain"] = h.domain;
  std::ofstream out(base + ".json");
  if (!out) fail(Errc::io, "cannot open for writing: " + base + ".json");
  out << j.dump(2) << "\n";
  if (!out) fail(Errc::io, "write failed: " + base + ".json");
}

VolumeHeader read_header(const std::string& base) {
  std::ifstream in(base + ".json");
  if (!in) fail(Errc::io, "missing header sidecar: " + base + ".json");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::bad_format, "malformed header " + base + ".json: " + e.what());
  }
  VolumeHeader h;
  try {
    h.dims = j.at("dims").get<std::array<int, 3>>();
    h.dtype = j.at("dtype").get<std::string>();
    h.order = j.at("order").get<std::string>();
    h.domain = j.at("domain").get<std::string>();
  } catch (const json::exception& e) {
    fail(Errc::bad_format, "incomplete header " + base + ".json: " + e.what());
  }
  if (h.dtype != "f32" && h.dtype != "u16") {
    fail(Errc::bad_format, "unknown dtype '" + h.dtype + "' in " + base + ".json");
  }
  if (h.order != "x3-fastest") {
    fail(Errc::bad_format, "unknown order tag '" + h.order + "' in " + base + ".json");
  }
  if (h.domain != "2pi") {
    fail(Errc::bad_format, "unknown domain tag '" + h.domain + "' in " + base + ".json");
  }
  return h;
}

void write_payload(const std::string& base, const void* data, std::size_t bytes) {
  std::ofstream out(base + ".raw", std::ios::binary);
  if (!out) fail(Errc::io, "cannot open for writing: " + base + ".raw");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) fail(Errc::io, "write failed: " + base + ".raw");
}

std::vector<char> read_payload(const std::string& base, std::size_t expected_bytes) {
  std::ifstream in(base + ".raw", std::ios::binary | std::ios::ate);
  if (!in) fail(Errc::io, "missing payload: " + base + ".raw");
  const auto actual = static_cast<std::size_t>(in.tellg());
  if (actual != expected_bytes) {
    fail(Errc::bad_format, "payload size mismatch for " + base + ".raw: header implies " +
                               std::to_string(expected_bytes) + " bytes, file has " + std::to_string(actual));
  }
  std::vector<char> buf(expected_bytes);
  in.seekg(0);
  in.read(buf.data(), static_cast<std::streamsize>(expected_bytes));
  if (!in) fail(Errc::io, "read failed: " + base + ".raw");
  return buf;
}

}  // namespace

std::string volume_base_path(const std::string& path) {
  return strip_suffix(strip_suffix(path, ".raw"), ".json");
}

void write_volume(const ScalarField& f, const std::string& path) {
  const std::string base = volume_base_path(path);
  write_header(base, {f.grid.dims, "f32", "x3-fastest", "2pi"});
  write_payload(base, f.values.data(), f.values.size() * sizeof(float));
}

void write_volume(const LabelMap& m, const std::string& path) {
  const std::string base = volume_base_path(path);
  write_header(base, {m.grid.dims, "u16", "x3-fastest", "2pi"});
  write_payload(base, m.labels.data(), m.labels.size() * sizeof(std::uint16_t));
}

Volume read_volume(const std::string& path) {
  const std::string base = volume_base_path(path);
  const VolumeHeader h = read_header(base);
  const Grid g = make_grid(h.dims);
  const std::size_t n = static_cast<std::size_t>(g.size());
  if (h.dtype == "f32") {
    ScalarField f(g);
    const auto buf = read_payload(base, n * sizeof(float));
    std::memcpy(f.values.data(), buf.data(), buf.size());
    f.validate(("volume " + base).c_str());
    return f;
  }
  LabelMap m(g);
  const auto buf = read_payload(base, n * sizeof(std::uint16_t));
  std::memcpy(m.labels.data(), buf.data(), buf.size());
  return m;
}

ScalarField read_scalar_volume(const std::string& path) {
  Volume v = read_volume(path);
  if (!std::holds_alternative<ScalarField>(v)) {
    fail(Errc::bad_format, "expected an f32 volume at " + path);
  }
  return std::get<ScalarField>(std::move(v));
}

LabelMap read_label_volume(const std::string& path) {
  Volume v = read_volume(path);
  if (!std::holds_alternative<LabelMap>(v)) {
    fail(Errc::bad_format, "expected a u16 label volume at " + path);
  }
  return std::get<LabelMap>(std::move(v));
}

}  // namespace veloreg
