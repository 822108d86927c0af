// Acceptance suite: runs every built-in criterion at full scale with pinned
// seeds and prints one PASS/FAIL line each. Exit code is the failure count.

#include <cstdio>
#include <filesystem>

#include "loggas/validate.hpp"

int main(int argc, char** argv) {
    loggas::ValidateOptions opt;
    opt.out_dir = std::filesystem::temp_directory_path() / "loggas_acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--quick") opt.quick = true;
        else if (arg == "--out" && i + 1 < argc) opt.out_dir = argv[++i];
        else if (arg == "--threads" && i + 1 < argc) opt.threads = std::atoi(argv[++i]);
    }
    return loggas::cmd_validate(opt);
}
