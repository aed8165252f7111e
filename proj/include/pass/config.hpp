#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pass/experiment.hpp"
#include "pass/synthgen.hpp"

namespace pass {

/// Flat key=value text with optional [section] headers; a key inside
/// [pretrain] is stored as "pretrain.key". '#' starts a comment.
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in, const std::string& origin = "<config>");
    static ConfigFile load(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const { return values_; }
    bool empty() const { return values_.empty(); }

private:
    std::map<std::string, std::string> values_;
};

/// A named, string-convertible view of one configuration field.
struct ConfigField {
    std::string key;  // "section.name"
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

std::vector<ConfigField> config_fields(ExperimentConfig& config);
std::vector<ConfigField> config_fields(CorpusSpec& spec);

/// Assigns every value of `file` to its field. Keys may omit the section when
/// the name is unambiguous. Throws UsageError on unknown keys or bad values.
void apply_config(const ConfigFile& file, const std::vector<ConfigField>& fields);

// One "key = value" line per field, in field order, with [section] headers.
std::string render_config(const std::vector<ConfigField>& fields);

}  // namespace pass
