#pragma once

#include <string>
#include <vector>

#include "golomb/schema.hpp"

namespace golomb {

// File formats are SGD-compatible: a JSON array of schema objects and a JSON
// array of dialogue objects. Unknown fields (dialogue acts, service calls,
// service results) are ignored on load.

std::vector<ServiceSchema> load_schemas(const std::string& path);
std::vector<Dialogue> load_dialogues(const std::string& path);

std::vector<ServiceSchema> parse_schemas(const std::string& json_text,
                                         const std::string& origin = "<text>");
std::vector<Dialogue> parse_dialogues(const std::string& json_text,
                                      const std::string& origin = "<text>");

std::string schemas_to_json(const std::vector<ServiceSchema>& schemas);
std::string dialogues_to_json(const std::vector<Dialogue>& dialogues);

void save_schemas(const std::vector<ServiceSchema>& schemas,
                  const std::string& path);
void save_dialogues(const std::vector<Dialogue>& dialogues,
                    const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace golomb
