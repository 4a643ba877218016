#pragma once

// Shared plumbing for the command line tools: GRIDBANK_HOME defaults and
// human-friendly printing of wire values.

#include "gridbank/canonical.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

namespace gridbank::tools {

inline std::filesystem::path home_dir()
{
    if (const char* home = std::getenv("GRIDBANK_HOME"))
        return home;
    return ".";
}

inline std::string default_path(const char* leaf)
{
    return (home_dir() / leaf).string();
}

inline void print_value(const Value& v)
{
    std::cout << v.encode() << "\n";
}

} // namespace gridbank::tools
