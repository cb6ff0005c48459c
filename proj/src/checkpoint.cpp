#include "xdef/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace xdef::ckpt {

namespace {
constexpr const char* kMagic = "xdefckpt 1";
}

void save(std::ostream& out, const std::vector<std::pair<std::string, const Value*>>& arrays) {
    out << kMagic << "\n";
    for (const auto& [name, v] : arrays) {
        out << "array " << name << " " << v->shape.size();
        for (int e : v->shape) out << " " << e;
        out << "\n";
        char buf[40];
        for (std::size_t i = 0; i < v->size(); ++i) {
            std::snprintf(buf, sizeof buf, "%a", v->data[i]);
            out << buf << (i + 1 == v->size() ? "" : " ");
        }
        out << "\n";
    }
    out << "end\n";
}

void load(std::istream& in, const std::vector<std::pair<std::string, Value*>>& arrays) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw std::runtime_error("checkpoint: bad or missing header");

    std::map<std::string, Value> parsed;
    while (std::getline(in, line)) {
        if (line == "end") break;
        std::istringstream head(line);
        std::string tag, name;
        std::size_t ndim;
        head >> tag >> name >> ndim;
        if (tag != "array" || head.fail())
            throw std::runtime_error("checkpoint: malformed array header: " + line);
        std::vector<int> shape(ndim);
        for (std::size_t i = 0; i < ndim; ++i) head >> shape[i];
        if (head.fail()) throw std::runtime_error("checkpoint: malformed shape for " + name);
        Value v = Value::zeros(shape);
        if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing data for " + name);
        const char* p = line.c_str();
        char* endp = nullptr;
        for (std::size_t i = 0; i < v.size(); ++i) {
            v.data[i] = std::strtod(p, &endp);
            if (endp == p) throw std::runtime_error("checkpoint: short data row for " + name);
            p = endp;
        }
        parsed.emplace(name, std::move(v));
    }

    for (const auto& [name, dst] : arrays) {
        auto it = parsed.find(name);
        if (it == parsed.end()) throw std::runtime_error("checkpoint: missing array " + name);
        if (it->second.shape != dst->shape)
            throw std::runtime_error("checkpoint: shape mismatch for " + name + " (expected " +
                                     diff::shape_str(dst->shape) + ", got " +
                                     diff::shape_str(it->second.shape) + ")");
        *dst = it->second;
    }
}

void save_file(const std::string& path, const std::vector<std::pair<std::string, const Value*>>& arrays) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    save(out, arrays);
}

void load_file(const std::string& path, const std::vector<std::pair<std::string, Value*>>& arrays) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    load(in, arrays);
}

}  // namespace xdef::ckpt
