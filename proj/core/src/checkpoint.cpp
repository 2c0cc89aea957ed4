#include "fkan/checkpoint.hpp"

#include "fkan/error.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fkan::nn {

void write_checkpoint(std::ostream& out, const ParameterSet& params)
{
    out << "fkan-checkpoint " << kCheckpointVersion << '\n';
    char buf[40];
    for (const auto& p : params.items()) {
        out << p.name << ' ' << p.value.rows() << ' ' << p.value.cols();
        for (double v : p.value.data()) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
}

ParameterSet read_checkpoint(std::istream& in)
{
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "fkan-checkpoint") {
        throw std::runtime_error("checkpoint: missing header");
    }
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    ParameterSet params;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string name;
        std::size_t r = 0;
        std::size_t c = 0;
        if (!(row >> name >> r >> c)) throw std::runtime_error("checkpoint: malformed line '" + line + "'");
        std::vector<double> values;
        values.reserve(r * c);
        std::string tok;
        while (row >> tok) values.push_back(std::stod(tok));
        if (values.size() != r * c) {
            throw std::runtime_error("checkpoint: " + name + " declares " + std::to_string(r) + "x" +
                                     std::to_string(c) + " but holds " + std::to_string(values.size()) + " values");
        }
        params.add(name, ad::Tensor(r, c, std::move(values)));
    }
    return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
    write_checkpoint(out, params);
}

ParameterSet load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
    return read_checkpoint(in);
}

void restore(ParameterSet& target, const ParameterSet& source)
{
    for (std::size_t i = 0; i < target.size(); ++i) {
        auto& t = target[i];
        const auto& s = source[source.index(t.name)];
        if (s.value.shape() != t.value.shape()) {
            throw ShapeError("checkpoint: " + t.name + " has shape " + ad::to_string(s.value.shape()) +
                             ", expected " + ad::to_string(t.value.shape()));
        }
        t.value = s.value;
    }
}

} // namespace fkan::nn
