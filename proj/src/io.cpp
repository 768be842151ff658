#include "bed/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bed/errors.hpp"

namespace bed {

using nlohmann::json;

std::vector<DatasetExample> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<DatasetExample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    DatasetExample ex;
    try {
      ex.id = j.at("id").get<std::string>();
      ex.text = j.at("text").get<std::string>();
      for (const auto& t : j.at("triples")) {
        if (!t.is_array() || t.size() != 3) {
          throw DataError("triple must be a 3-element array");
        }
        ex.triples.push_back({t[0].get<std::string>(),
                              t[1].get<std::string>(),
                              t[2].get<std::string>()});
      }
    } catch (const json::exception& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void save_dataset(const std::vector<DatasetExample>& data,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& ex : data) {
    json triples = json::array();
    for (const auto& t : ex.triples) {
      triples.push_back({t.h, t.r, t.t});
    }
    json j{{"id", ex.id}, {"text", ex.text}, {"triples", std::move(triples)}};
    out << j.dump() << "\n";
  }
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_run_config(const std::string& out_dir, const std::string& subcommand,
                      const json& settings) {
  ensure_dir(out_dir);
  const std::string path = out_dir + "/config.json";
  json merged = json::object();
  if (std::filesystem::exists(path)) {
    try {
      merged = json::parse(read_file(path));
    } catch (const json::parse_error&) {
      merged = json::object();
    }
  }
  merged[subcommand] = settings;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << merged.dump(2) << "\n";
}

}  // namespace bed
