#pragma once

#include "hjblab/run.hpp"

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hjblab {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    double seconds = 0.0;
    nlohmann::json detail;
};

struct SelftestReport {
    std::vector<CriterionResult> criteria;
    /// FNV-1a digest over the numeric artifacts (every artifact except manifest and timings).
    std::string digest;
    double seconds = 0.0;
    bool passed = false;
};

/// Combined FNV-1a digest of the named files under `dir`, in the given order.
std::string artifact_digest(const std::string& dir, const std::vector<std::string>& names);

/**
 * The acceptance battery over the built-in scenarios. Writes numeric
 * artifacts, one check per criterion, and a digest; when `out_dir` already
 * holds a digest from an earlier run, the reproducibility criterion also
 * requires it to match.
 */
SelftestReport run_selftest(RunManifest& manifest, std::ostream& log);

}  // namespace hjblab
