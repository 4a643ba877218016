#pragma once

#include "gridbank/canonical.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>

namespace gridbank {

/// Append-only event log: one canonical-text record per line. The journal is
/// the bank's only persistent state; startup replays it to rebuild memory.
class Journal {
public:
    virtual ~Journal() = default;
    virtual void append(const Value& event) = 0;
};

/// Discards events; used by in-memory ledgers in tests.
class NullJournal final : public Journal {
public:
    void append(const Value&) override {}
};

class FileJournal final : public Journal {
public:
    explicit FileJournal(std::filesystem::path path);

    void append(const Value& event) override;

    /// Streams events from an existing journal file. A truncated final line
    /// (torn write during a crash) is dropped; anything else malformed
    /// aborts with a diagnostic.
    static void replay(const std::filesystem::path& path,
                       const std::function<void(const Value&)>& apply);

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mutex_;
};

} // namespace gridbank
