// Runs the selftest battery twice into fresh directories and prints one
// PASS/FAIL line per acceptance criterion.

#include "hjblab/parallel.hpp"
#include "hjblab/selftest.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace hjblab;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

SelftestReport battery(const fs::path& dir, unsigned threads, std::vector<std::string>& artifacts)
{
    fs::remove_all(dir);
    set_thread_count(threads);
    RunManifest m("selftest", dir.string());
    std::ostringstream log;
    SelftestReport r = run_selftest(m, log);
    m.finish();
    artifacts = m.artifacts();
    return r;
}

}  // namespace

int main()
{
    const fs::path root = fs::temp_directory_path() / "hjblab_acceptance";
    std::vector<std::string> first_files, second_files;
    const SelftestReport first = battery(root / "first", 1, first_files);
    const SelftestReport second = battery(root / "second", 2, second_files);

    std::vector<std::string> differing;
    for (const auto& name : first_files)
        if (slurp(root / "first" / name) != slurp(root / "second" / name))
            differing.push_back(name);
    const bool same_files = first_files == second_files && differing.empty();

    bool all = true;
    for (std::size_t k = 0; k < first.criteria.size(); ++k) {
        const auto& a = first.criteria[k];
        bool pass = a.passed && second.criteria[k].passed;
        std::string note = a.title;
        if (a.id == 9) {
            pass = pass && same_files && first.digest == second.digest && first.seconds < 300.0 &&
                   second.seconds < 300.0;
            std::ostringstream os;
            os << a.title << ": digests " << first.digest << " / " << second.digest << ", "
               << first_files.size() << " artifacts, runtimes " << static_cast<int>(first.seconds) << " s / "
               << static_cast<int>(second.seconds) << " s";
            for (const auto& d : differing)
                os << ", differs: " << d;
            note = os.str();
        } else if (!pass) {
            note += ": " + (a.passed ? second.criteria[k].detail : a.detail).dump();
        }
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << a.id << ": " << note << "\n";
        all = all && pass;
    }
    fs::remove_all(root);
    return all ? 0 : 1;
}
