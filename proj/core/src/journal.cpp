#include "gridbank/journal.hpp"

#include "gridbank/errors.hpp"

namespace gridbank {

FileJournal::FileJournal(std::filesystem::path path)
    : path_(std::move(path))
    , out_(path_, std::ios::app)
{
    if (!out_)
        fail(Errc::IoError, "cannot open journal " + path_.string());
}

void FileJournal::append(const Value& event)
{
    std::lock_guard lock(mutex_);
    out_ << event.encode() << '\n';
    out_.flush();
    if (!out_)
        fail(Errc::IoError, "journal write failed: " + path_.string());
}

void FileJournal::replay(const std::filesystem::path& path,
                         const std::function<void(const Value&)>& apply)
{
    std::ifstream in(path);
    if (!in)
        return; // nothing persisted yet
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        bool last = in.peek() == std::ifstream::traits_type::eof();
        try {
            apply(Value::parse(line));
        } catch (const std::exception& e) {
            if (last)
                break; // torn final line from a crash mid-append
            fail(Errc::IoError,
                 "corrupt journal " + path.string() + " line " + std::to_string(line_no) + ": " +
                     e.what());
        }
    }
}

} // namespace gridbank
