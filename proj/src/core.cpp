#include "dtr/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dtr {

History build_history(const Trajectory& t, int stage) {
    if (stage != 1 && stage != 2) {
        throw std::invalid_argument("build_history: stage must be 1 or 2");
    }
    History h;
    h.stage = stage;
    if (stage == 1) {
        h.h = t.o1;
        return h;
    }
    h.h.reserve(t.o1.size() + t.o2.size() + 2);
    h.h.insert(h.h.end(), t.o1.begin(), t.o1.end());
    h.h.push_back(t.y1);
    h.h.insert(h.h.end(), t.o2.begin(), t.o2.end());
    h.h.push_back(static_cast<double>(t.a1));
    return h;
}

std::vector<Violation> validate(const Dataset& d) {
    std::vector<Violation> out;
    if (!(d.positivity_floor > 0.0)) {
        out.push_back({0, "positivity_floor", "positivity floor must be > 0"});
    }
    for (std::size_t i = 0; i < d.trajectories.size(); ++i) {
        const Trajectory& t = d.trajectories[i];
        auto flag = [&](const char* field, const std::string& msg) {
            out.push_back({i, field, msg});
        };
        if (t.a1 != 1 && t.a1 != -1) flag("a1", "action must be -1 or +1");
        if (t.a2 != 1 && t.a2 != -1) flag("a2", "action must be -1 or +1");
        if (!(t.pi1 >= d.positivity_floor) || !(t.pi1 <= 1.0)) {
            flag("pi1", "propensity outside [floor, 1]");
        }
        if (!(t.pi2 >= d.positivity_floor) || !(t.pi2 <= 1.0)) {
            flag("pi2", "propensity outside [floor, 1]");
        }
        if (!(t.y1 > 0.0)) flag("y1", "reward must be positive after offset");
        if (!(t.y2 > 0.0)) flag("y2", "reward must be positive after offset");
        if (static_cast<int>(t.o1.size()) != d.p1) flag("o1", "dimension mismatch");
        if (static_cast<int>(t.o2.size()) != d.p2) flag("o2", "dimension mismatch");
        for (double v : {t.y1, t.y2, t.pi1, t.pi2}) {
            if (!std::isfinite(v)) {
                flag("finite", "non-finite field");
                break;
            }
        }
    }
    return out;
}

Dataset apply_offset(const Dataset& d, double c) {
    Dataset out = d;
    out.offset += c;
    for (Trajectory& t : out.trajectories) {
        t.y1 += c;
        t.y2 += c;
        if (!(t.y1 > 0.0) || !(t.y2 > 0.0)) {
            throw std::invalid_argument("apply_offset: shifted reward not positive");
        }
    }
    return out;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    for (int j = 0; j < d.p1; ++j) f << "o1_" << j << ",";
    f << "a1,y1,";
    for (int j = 0; j < d.p2; ++j) f << "o2_" << j << ",";
    f << "a2,y2,pi1,pi2\n";
    for (const Trajectory& t : d.trajectories) {
        for (int j = 0; j < d.p1; ++j) f << fmt_double(t.o1[j]) << ",";
        f << t.a1 << "," << fmt_double(t.y1) << ",";
        for (int j = 0; j < d.p2; ++j) f << fmt_double(t.o2[j]) << ",";
        f << t.a2 << "," << fmt_double(t.y2) << ","
          << fmt_double(t.pi1) << "," << fmt_double(t.pi2) << "\n";
    }
    if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

Dataset read_csv(const std::string& path, double positivity_floor, double offset) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("read_csv: empty file");

    const std::vector<std::string> header = split_line(line);
    int p1 = 0;
    while (p1 < static_cast<int>(header.size()) &&
           header[p1] == "o1_" + std::to_string(p1)) {
        ++p1;
    }
    const int o2_start = p1 + 2;
    int p2 = 0;
    while (o2_start + p2 < static_cast<int>(header.size()) &&
           header[o2_start + p2] == "o2_" + std::to_string(p2)) {
        ++p2;
    }
    const std::size_t expected = static_cast<std::size_t>(p1 + p2 + 6);
    if (header.size() != expected || header[p1] != "a1" || header.back() != "pi2") {
        throw std::runtime_error("read_csv: unexpected header in " + path);
    }

    Dataset d;
    d.p1 = p1;
    d.p2 = p2;
    d.positivity_floor = positivity_floor;
    d.offset = offset;
    std::size_t row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<std::string> v = split_line(line);
        if (v.size() != expected) {
            throw std::runtime_error("read_csv: bad field count at line " +
                                     std::to_string(row));
        }
        Trajectory t;
        std::size_t k = 0;
        try {
            for (int j = 0; j < p1; ++j) t.o1.push_back(std::stod(v[k++]));
            t.a1 = std::stoi(v[k++]);
            t.y1 = std::stod(v[k++]);
            for (int j = 0; j < p2; ++j) t.o2.push_back(std::stod(v[k++]));
            t.a2 = std::stoi(v[k++]);
            t.y2 = std::stod(v[k++]);
            t.pi1 = std::stod(v[k++]);
            t.pi2 = std::stod(v[k++]);
        } catch (const std::exception&) {
            throw std::runtime_error("read_csv: unparsable value at line " +
                                     std::to_string(row));
        }
        d.trajectories.push_back(std::move(t));
    }
    return d;
}

}  // namespace dtr
