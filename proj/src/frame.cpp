#include "mods/frame.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mods {

std::string_view to_string(DetectorKind kind)
{
    switch (kind) {
    case DetectorKind::MSER: return "mser";
    case DetectorKind::HESSAFF: return "hessaff";
    case DetectorKind::DOG: return "dog";
    }
    return "unknown";
}

std::optional<DetectorKind> parse_detector(std::string_view name)
{
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "mser")
        return DetectorKind::MSER;
    if (s == "hessaff" || s == "hessian-affine" || s == "ha")
        return DetectorKind::HESSAFF;
    if (s == "dog" || s == "sift")
        return DetectorKind::DOG;
    return std::nullopt;
}

void write_frames(std::ostream& out, const std::vector<AffineFrame>& frames)
{
    char buf[256];
    for (const auto& f : frames) {
        std::snprintf(buf, sizeof buf, "%.6f %.6f %.9g %.9g %.9g %.9g %.9g %s %d\n", f.x, f.y, f.a11,
            f.a12, f.a21, f.a22, f.scale, std::string(to_string(f.detector)).c_str(), f.view_id);
        out << buf;
    }
}

std::vector<AffineFrame> read_frames(std::istream& in)
{
    std::vector<AffineFrame> frames;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream ls(line);
        AffineFrame f;
        std::string det;
        if (!(ls >> f.x >> f.y >> f.a11 >> f.a12 >> f.a21 >> f.a22 >> f.scale >> det >> f.view_id))
            throw std::runtime_error("read_frames: malformed line: " + line);
        auto kind = parse_detector(det);
        if (!kind)
            throw std::runtime_error("read_frames: unknown detector '" + det + "'");
        f.detector = *kind;
        frames.push_back(f);
    }
    return frames;
}

}  // namespace mods
