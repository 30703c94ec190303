#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gbl/backup.hpp"
#include "gbl/learner.hpp"

namespace gbl::cli {

/// Bad flags, config keys or values; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string env;  // `Name:p1:p2`
    LearnerConfig learner;
    BackupConfig backup;
    std::filesystem::path out = "runs";
    std::vector<std::uint64_t> seeds{0};
    std::uint32_t jobs = 1;
    bool emit_plots = false;
};

/// `a..b` (inclusive) and comma lists, e.g. `0..4` or `1,3,7..9`.
std::vector<std::uint64_t> parse_seeds(std::string_view text);

/// Flat INI: `[section]` headers and `key = value` lines; `#`/`;` comments.
/// Keys come back as `section.key`. Throws UsageError with the line number.
std::map<std::string, std::string> read_ini(std::istream& is);

/// Resolved config as INI with every key, in a fixed order.
std::string format_config(const RunConfig& cfg);

/// Runs training for every seed and writes the per-seed outputs plus
/// summary.json under cfg.out. Returns the final eval return per seed.
std::vector<double> train_all(const RunConfig& cfg);

/// Entry point; returns the process exit code (0 ok, 2 usage, 1 runtime).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gbl::cli
