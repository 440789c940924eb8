#pragma once

#include <map>
#include <string>

namespace adashift {

/// Exit status contract: 0 success, 1 experiment failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

namespace cli_detail {

/// Typed access over the merged (defaults < config file < flags) settings.
class Settings {
  public:
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string str(const std::string& key, const std::string& fallback) const;
    double real(const std::string& key, double fallback) const;
    long long integer(const std::string& key, long long fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    const std::map<std::string, std::string>& all() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace cli_detail

}  // namespace adashift
