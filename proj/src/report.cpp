#include "exfact/report.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>

namespace exfact {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw Error("table row width does not match the header");
  rows.push_back(std::move(row));
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += csv_cell(cells[i]);
  }
  return line + "\n";
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + p.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw IoError("write failed for " + p.string());
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out = csv_line(t.columns);
  for (const auto& r : t.rows) out += csv_line(r);
  return out;
}

void RunManifest::add(const std::string& key, nlohmann::ordered_json value, std::string provenance) {
  for (auto& h : headline) {
    if (h.key == key) throw Error("duplicate headline key " + key);
  }
  headline.push_back({key, std::move(value), std::move(provenance)});
}

const Headline* RunManifest::find(const std::string& key) const {
  for (const auto& h : headline) {
    if (h.key == key) return &h;
  }
  return nullptr;
}

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw Error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_artifact(RunManifest& m, const std::filesystem::path& dir, const std::string& name, const std::string& content) {
  write_file(dir / name, content);
  m.files.push_back({name, sha256_hex(content), content.size()});
}

std::string plot_data(const std::string& x_name, const std::string& y_name, const std::vector<double>& x,
                      const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("plot data columns differ in length");
  std::string out = "# " + x_name + " " + y_name + "\n";
  for (std::size_t i = 0; i < x.size(); ++i) out += format_number(x[i]) + " " + format_number(y[i]) + "\n";
  return out;
}

nlohmann::ordered_json manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["software"] = m.software;
  j["version"] = m.version;
  j["kind"] = to_string(m.kind);
  j["status"] = m.status;
  j["exit_code"] = m.exit_code;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::ordered_json head = nlohmann::ordered_json::object();
  for (const auto& h : m.headline) head[h.key] = h.value;
  j["headline"] = head;
  nlohmann::ordered_json prov = nlohmann::ordered_json::object();
  for (const auto& h : m.headline) {
    if (!h.provenance.empty()) prov[h.key] = h.provenance;
  }
  j["provenance"] = prov;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = files;
  return j;
}

namespace {

std::string value_text(const nlohmann::ordered_json& v) {
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

void emit_report(RunManifest& m, const std::filesystem::path& dir, ReportFormat format) {
  if (format == ReportFormat::csv) {
    Table t{{"key", "value", "provenance"}, {}};
    for (const auto& h : m.headline) t.add({h.key, value_text(h.value), h.provenance});
    write_artifact(m, dir, "summary.csv", to_csv(t));
    return;
  }
  std::string s = m.software + " " + m.version + "  " + to_string(m.kind) + "  status: " + m.status + "\n\n";
  std::size_t width = 0;
  for (const auto& h : m.headline) width = std::max(width, h.key.size());
  for (const auto& h : m.headline) {
    s += h.key + std::string(width - h.key.size() + 2, ' ') + value_text(h.value);
    if (!h.provenance.empty()) s += "  [" + h.provenance + "]";
    s += "\n";
  }
  s += "\nfiles:\n";
  for (const auto& f : m.files) s += "  " + f.path + "  " + f.sha256 + "\n";
  write_artifact(m, dir, "summary.txt", s);
}

void write_manifest(const RunManifest& m, const std::filesystem::path& dir) {
  write_file(dir / "manifest.json", dump(manifest_json(m)));
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.timings) t[k] = v;
  write_file(dir / "timings.json", dump(t));
}

}  // namespace exfact
