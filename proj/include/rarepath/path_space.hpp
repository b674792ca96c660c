#pragma once

// Trajectories of chains killed in finite time, and the generic log-density
// of an inhomogeneous absorbed chain that every model density is built on.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rarepath {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

using Point = std::span<const double>;

/// Ordered collision points x_1..x_n in R^d. The last stored point is the
/// absorption collision; the resting state is implied by truncation.
/// Storage is 0-based: point(0) is x_1.
class Trajectory {
public:
    explicit Trajectory(int dim = 1);
    Trajectory(int dim, std::vector<double> coords);

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return coords_.size() / static_cast<std::size_t>(dim_); }
    bool empty() const noexcept { return coords_.empty(); }

    Point point(std::size_t i) const noexcept
    {
        return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    Point back() const noexcept { return point(size() - 1); }

    /// 1D convenience accessor.
    double operator[](std::size_t i) const noexcept { return coords_[i]; }

    void push_back(Point p);
    void push_back(double x) { coords_.push_back(x); }
    void push_back(double x, double y)
    {
        coords_.push_back(x);
        coords_.push_back(y);
    }
    void clear() noexcept { coords_.clear(); }
    void reserve(std::size_t points) { coords_.reserve(points * static_cast<std::size_t>(dim_)); }

    const std::vector<double>& coords() const noexcept { return coords_; }

    /// Throws std::invalid_argument on the empty trajectory or a non-finite
    /// coordinate.
    void validate() const;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

private:
    int dim_;
    std::vector<double> coords_;
};

/// Requirements on an inhomogeneous killed chain: a birth point, per-step
/// absorption probabilities a_i (a_0 = 0 implicitly), and per-step transition
/// log-densities log q_i. Steps are 1-based.
template <class S>
concept AbsorbedChain = requires(const S& s, std::size_t step, Point p) {
    { s.dim() } -> std::convertible_to<int>;
    { s.source() } -> std::convertible_to<Point>;
    { s.absorption_prob(step, p) } -> std::convertible_to<double>;
    { s.log_transition_density(step, p, p) } -> std::convertible_to<double>;
};

/// Type-erased chain description, for tests and ad-hoc chains. Model code
/// uses dedicated chain structs.
struct AbsorbedChainSpec {
    std::vector<double> source_point;
    std::function<double(std::size_t, Point)> absorption;
    std::function<double(std::size_t, Point, Point)> log_transition;

    int dim() const noexcept { return static_cast<int>(source_point.size()); }
    Point source() const noexcept { return source_point; }
    double absorption_prob(std::size_t step, Point y) const { return absorption(step, y); }
    double log_transition_density(std::size_t step, Point from, Point to) const
    {
        return log_transition(step, from, to);
    }
};

/// Separated contributions of the absorbed-chain log-density.
struct ChainLogTerms {
    double transitions = 0.0; ///< sum of log q_i(y_{i-1}, y_i)
    double absorption = 0.0;  ///< sum of log(1 - a_{i-1}(y_{i-1})) plus log a_n(y_n)
    double total() const noexcept { return transitions + absorption; }
};

namespace detail {
inline double log_survival(double a) { return a >= 1.0 ? neg_inf : std::log1p(-a); }
inline double log_prob(double a) { return a <= 0.0 ? neg_inf : std::log(a); }
void check_chain_input(int spec_dim, const Trajectory& x);
} // namespace detail

/// log f_n(y) = sum_{i=1}^{n} [log(1 - a_{i-1}(y_{i-1})) + log q_i(y_{i-1}, y_i)] + log a_n(y_n),
/// with y_0 the source and a_0 = 0. Returns -inf as soon as a factor vanishes.
template <AbsorbedChain S>
ChainLogTerms log_pdf_absorbed_chain_terms(const S& chain, const Trajectory& x)
{
    detail::check_chain_input(chain.dim(), x);
    ChainLogTerms terms;
    const std::size_t n = x.size();
    Point prev = chain.source();
    for (std::size_t i = 1; i <= n; ++i) {
        const Point cur = x.point(i - 1);
        if (i > 1) {
            terms.absorption += detail::log_survival(chain.absorption_prob(i - 1, prev));
            if (terms.absorption == neg_inf) return terms;
        }
        const double lq = chain.log_transition_density(i, prev, cur);
        if (!(lq > neg_inf)) {
            terms.transitions = neg_inf;
            return terms;
        }
        terms.transitions += lq;
        prev = cur;
    }
    terms.absorption += detail::log_prob(chain.absorption_prob(n, prev));
    return terms;
}

template <AbsorbedChain S>
double log_pdf_absorbed_chain(const S& chain, const Trajectory& x)
{
    return log_pdf_absorbed_chain_terms(chain, x).total();
}

// Serialization. Line format: "d;x1_1,...,x1_d;x2_1,...". Numbers use the
// shortest representation that round-trips exactly.

std::string to_line(const Trajectory& x);
Trajectory trajectory_from_line(std::string_view line);

/// Columnar CSV: header "traj_id,step,c0[,c1]" and one row per collision
/// point; step is 1-based.
void write_csv(std::ostream& os, std::span<const Trajectory> trajectories);
std::vector<Trajectory> read_csv(std::istream& is);

} // namespace rarepath
