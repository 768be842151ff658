#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bed/types.hpp"

namespace bed {

// One dataset line: {"id", "text", "triples": [["h","r","t"], ...]}.
struct DatasetExample {
  std::string id;
  std::string text;
  std::vector<Triple> triples;
};

std::vector<DatasetExample> load_dataset(const std::string& path);
void save_dataset(const std::vector<DatasetExample>& data,
                  const std::string& path);

// Merges `settings` into <out_dir>/config.json under the subcommand key, so
// a run directory keeps the resolved configuration of everything that wrote
// into it.
void write_run_config(const std::string& out_dir, const std::string& subcommand,
                      const nlohmann::json& settings);

void ensure_dir(const std::string& path);

std::string read_file(const std::string& path);

}  // namespace bed
