#pragma once

#include <string>

#include "augur/augur.hpp"

namespace augur_test {

inline std::string data_path(const std::string& relative) { return std::string(AUGUR_DATA_DIR) + "/" + relative; }

inline augur::NetworkDescriptor load_network(const std::string& name) {
  return augur::parse_descriptor(augur::read_text_file(data_path("networks/" + name + ".prototxt")));
}

}  // namespace augur_test
