#include "rarepath/path_space.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace rarepath {

namespace {

void check_dim(int dim)
{
    if (dim != 1 && dim != 2) throw std::invalid_argument("trajectory dimension must be 1 or 2");
}

void append_number(std::string& out, double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
}

double parse_number(std::string_view s)
{
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw std::invalid_argument("malformed number '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace

Trajectory::Trajectory(int dim) : dim_(dim) { check_dim(dim); }

Trajectory::Trajectory(int dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords))
{
    check_dim(dim);
    if (coords_.size() % static_cast<std::size_t>(dim_) != 0)
        throw std::invalid_argument("coordinate count is not a multiple of the dimension");
}

void Trajectory::push_back(Point p)
{
    if (p.size() != static_cast<std::size_t>(dim_)) throw std::invalid_argument("point dimension mismatch");
    coords_.insert(coords_.end(), p.begin(), p.end());
}

void Trajectory::validate() const
{
    if (empty()) throw std::invalid_argument("trajectory must hold at least one collision point");
    for (double c : coords_)
        if (!std::isfinite(c)) throw std::invalid_argument("trajectory has a non-finite coordinate");
}

namespace detail {
void check_chain_input(int spec_dim, const Trajectory& x)
{
    if (x.dim() != spec_dim) throw std::invalid_argument("trajectory dimension does not match the chain");
    x.validate();
}
} // namespace detail

std::string to_line(const Trajectory& x)
{
    std::string out = std::to_string(x.dim());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.push_back(';');
        const Point p = x.point(i);
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (k) out.push_back(',');
            append_number(out, p[k]);
        }
    }
    return out;
}

Trajectory trajectory_from_line(std::string_view line)
{
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    const auto fields = split(line, ';');
    if (fields.size() < 2) throw std::invalid_argument("trajectory line needs a dimension and a point");
    const double d = parse_number(fields[0]);
    const int dim = static_cast<int>(d);
    if (d != dim) throw std::invalid_argument("dimension must be an integer");
    Trajectory x(dim);
    for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto comps = split(fields[i], ',');
        if (comps.size() != static_cast<std::size_t>(dim)) throw std::invalid_argument("point dimension mismatch");
        for (auto c : comps) x.push_back(parse_number(c));
    }
    x.validate();
    return x;
}

void write_csv(std::ostream& os, std::span<const Trajectory> trajectories)
{
    const int dim = trajectories.empty() ? 1 : trajectories.front().dim();
    os << "traj_id,step";
    for (int k = 0; k < dim; ++k) os << ",c" << k;
    os << '\n';
    std::string row;
    for (std::size_t t = 0; t < trajectories.size(); ++t) {
        const auto& x = trajectories[t];
        if (x.dim() != dim) throw std::invalid_argument("mixed dimensions in one CSV");
        for (std::size_t i = 0; i < x.size(); ++i) {
            row = std::to_string(t) + "," + std::to_string(i + 1);
            for (double c : x.point(i)) {
                row.push_back(',');
                append_number(row, c);
            }
            os << row << '\n';
        }
    }
}

std::vector<Trajectory> read_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) return {};
    const auto header = split(line, ',');
    if (header.size() < 3 || header[0] != "traj_id" || header[1] != "step")
        throw std::invalid_argument("unexpected trajectory CSV header");
    const int dim = static_cast<int>(header.size()) - 2;
    std::vector<Trajectory> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != header.size()) throw std::invalid_argument("ragged trajectory CSV row");
        const auto id = static_cast<std::size_t>(parse_number(f[0]));
        const auto step = static_cast<std::size_t>(parse_number(f[1]));
        if (id == out.size()) out.emplace_back(dim);
        if (id + 1 != out.size() || step != out.back().size() + 1)
            throw std::invalid_argument("trajectory CSV rows out of order");
        for (std::size_t k = 2; k < f.size(); ++k) out.back().push_back(parse_number(f[k]));
    }
    for (const auto& x : out) x.validate();
    return out;
}

} // namespace rarepath
