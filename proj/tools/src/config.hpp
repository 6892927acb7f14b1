#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nnseg/segmenter.hpp"
#include "nnseg/stabilizer.hpp"

namespace nnseg::cli {

enum class KeyKind { Real, Integer, Text, Choice };

struct KeySpec {
    std::string name;
    std::string default_value;
    KeyKind kind;
    std::string help;
    std::vector<std::string> choices;
};

/// Every configurable key, with defaults and documentation.
const std::vector<KeySpec>& schema();
const KeySpec& key_spec(std::string_view name);

/// Resolved configuration: defaults, overridden by a `key=value` file,
/// overridden by command-line flags.
class Config {
public:
    Config();

    /// Validates the key against the schema and the value against its kind.
    void set(const std::string& key, const std::string& value, std::string_view origin);
    void load_file(const std::filesystem::path& path);

    const std::string& text(const std::string& key) const;
    double real(const std::string& key) const;
    int integer(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;

    /// `key=value` lines for the given keys, in the given order.
    std::vector<std::string> describe(const std::vector<std::string>& keys) const;

private:
    std::map<std::string, std::string> values_;
};

StabilizeParams stabilize_params(const Config& c);
ClipFlowParams flow_params(const Config& c);
SegmentConfig segment_config(const Config& c);
AggregationMode aggregation_mode(const Config& c);

} // namespace nnseg::cli
