#include <cstdio>
#include <fstream>
#include <sstream>

#include "gdepth/errors.hpp"
#include "gdepth/io.hpp"

namespace gdepth {

void write_file_atomic(const std::string& path, const std::string& bytes) {
    // Runs that share an output directory share this temp name too, but the
    // tools always write into per-run directories, so a fixed suffix keeps
    // the leftover-file story simple: at most one ".tmp" per artifact.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw IoError("write failure on " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on " + path);
    return buf.str();
}

}  // namespace gdepth
