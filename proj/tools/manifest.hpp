#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gexp {

/**
 * Run record written next to a command's outputs: tool version, the
 * command line, resolved parameters, inputs (with size and FNV-1a hash)
 * and the output file names. Contains nothing time-dependent, so two
 * identical runs produce identical manifests.
 */
class Manifest {
public:
    Manifest(std::string command, int argc, char** argv);

    nlohmann::ordered_json& parameters() { return doc_["parameters"]; }
    void set_seed(unsigned long long seed) { doc_["seed"] = seed; }
    void add_input(const std::string& role, const std::string& path);
    void add_output(const std::string& name);
    void note(const std::string& key, nlohmann::ordered_json value);

    void write(const std::string& dir) const;

private:
    nlohmann::ordered_json doc_;
};

}  // namespace gexp
