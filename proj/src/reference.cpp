#include "bpsre/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bpsre {

namespace {

struct Skeleton {
    std::vector<double> path;  // B(i/steps), i = 0..steps
    double last_zero = 0.0;
};

// Offset back from the right end of a bridge piece of length dt to its
// last zero, given |right| = x > 0 and |left| = y >= 0. With r = T/(dt-T)
// the first-passage density of the time-reversed bridge is inverse
// Gaussian with mean x/y and shape x^2/dt (Levy when y = 0).
double last_zero_offset(double x, double y, double dt, Philox& rng) {
    const double shape = x * x / dt;
    double r = 0.0;
    if (y == 0.0 || x / y > 1e10 * std::max(shape, 1.0)) {
        const double z = standard_normal(rng);
        r = shape / (z * z);
    } else {
        r = sample_inverse_gaussian(x / y, shape, rng);
    }
    if (!std::isfinite(r)) {
        return dt;
    }
    return dt * r / (1.0 + r);
}

void sample_skeleton(std::uint64_t steps, Philox& rng, Skeleton& out) {
    if (steps < 2) {
        throw std::invalid_argument("meander needs at least 2 steps");
    }
    const double dt = 1.0 / static_cast<double>(steps);
    const double scale = std::sqrt(dt);
    out.path.resize(steps + 1);
    out.path[0] = 0.0;
    double b = 0.0;
    for (std::uint64_t i = 1; i <= steps; ++i) {
        b += scale * standard_normal(rng);
        out.path[i] = b;
    }

    for (std::uint64_t i = steps; i >= 1; --i) {
        const double left = out.path[i - 1];
        const double right = out.path[i];
        const double t_right = static_cast<double>(i) * dt;
        if (right == 0.0) {
            out.last_zero = t_right;
            return;
        }
        bool hit = left == 0.0 || (left < 0.0) != (right < 0.0);
        if (!hit) {
            // Bridge between same-sign endpoints touches 0 w.p. exp(-2ab/dt).
            const double p = std::exp(-2.0 * left * right / dt);
            hit = p > 1e-300 && rng.uniform() < p;
        }
        if (hit) {
            const double offset = last_zero_offset(std::abs(right), std::abs(left), dt, rng);
            out.last_zero = std::clamp(t_right - offset, t_right - dt, t_right);
            return;
        }
    }
    out.last_zero = 0.0;
}

// Fills |B| at increasing times u >= last_zero given the skeleton. Each grid
// piece is a Brownian bridge conditioned to avoid zero; the piece starting
// at the last zero is a Bessel(3) bridge, sampled as the norm of a 3d
// Brownian bridge. Points in one piece are drawn sequentially (Markov).
class BridgeFiller {
  public:
    BridgeFiller(const Skeleton& s, std::uint64_t steps, Philox& rng)
        : s_(s), steps_(steps), dt_(1.0 / static_cast<double>(steps)), rng_(rng) {}

    double at(double u) {
        const auto i = std::min<std::uint64_t>(
            static_cast<std::uint64_t>(std::floor(u * static_cast<double>(steps_))), steps_ - 1);
        if (i != piece_) {
            enter(i);
        }
        const double e = static_cast<double>(i + 1) * dt_;
        const double b = std::abs(s_.path[i + 1]);
        if (u >= e || b == 0.0) {
            return b;
        }
        if (u <= c_) {
            return x_;
        }
        const double r = (u - c_) / (e - c_);
        const double sd = std::sqrt((u - c_) * (e - u) / (e - c_));
        if (bessel_) {
            double norm2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double target = k == 0 ? b : 0.0;
                v_[k] += r * (target - v_[k]) + sd * standard_normal(rng_);
                norm2 += v_[k] * v_[k];
            }
            x_ = std::sqrt(norm2);
        } else {
            const double mean = x_ + r * (b - x_);
            for (;;) {
                const double y = mean + sd * standard_normal(rng_);
                if (y <= 0.0) {
                    continue;
                }
                const double keep = -std::expm1(-2.0 * x_ * y / (u - c_)) *
                                    -std::expm1(-2.0 * y * b / (e - u));
                if (rng_.uniform() < keep) {
                    x_ = y;
                    break;
                }
            }
        }
        c_ = u;
        return x_;
    }

  private:
    void enter(std::uint64_t i) {
        piece_ = i;
        const double left = static_cast<double>(i) * dt_;
        bessel_ = left <= s_.last_zero;
        c_ = bessel_ ? s_.last_zero : left;
        x_ = bessel_ ? 0.0 : std::abs(s_.path[i]);
        v_[0] = v_[1] = v_[2] = 0.0;
    }

    const Skeleton& s_;
    std::uint64_t steps_;
    double dt_;
    Philox& rng_;
    std::uint64_t piece_ = static_cast<std::uint64_t>(-1);
    bool bessel_ = false;
    double c_ = 0.0;
    double x_ = 0.0;
    double v_[3] = {0.0, 0.0, 0.0};
};

}  // namespace

double MeanderPath::at(double t) const {
    const double pos = std::clamp(t, 0.0, 1.0) * static_cast<double>(steps);
    const auto i = static_cast<std::uint64_t>(std::floor(pos));
    if (i >= steps) {
        return values.back();
    }
    const double w = pos - static_cast<double>(i);
    return values[i] + w * (values[i + 1] - values[i]);
}

double sample_inverse_gaussian(double mean, double shape, Philox& rng) {
    const double z = standard_normal(rng);
    const double y = z * z;
    const double my = mean * y;
    // mean - mean^2 y / (2 shape) * (...), rearranged to avoid cancellation.
    const double x = mean - 2.0 * mean * my / (my + std::sqrt(my * my + 4.0 * mean * shape * y));
    if (rng.uniform() <= mean / (mean + x)) {
        return x;
    }
    return mean * mean / x;
}

MeanderPath sample_meander(std::uint64_t steps, Philox& rng) {
    Skeleton s;
    sample_skeleton(steps, rng, s);
    MeanderPath out;
    out.steps = steps;
    out.last_zero = s.last_zero;
    out.values.resize(steps + 1);
    BridgeFiller fill(s, steps, rng);
    const double zeta = s.last_zero;
    const double scale = 1.0 / std::sqrt(1.0 - zeta);
    out.values[0] = 0.0;
    for (std::uint64_t k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(steps);
        out.values[k] = fill.at(zeta + t * (1.0 - zeta)) * scale;
    }
    return out;
}

std::vector<double> sample_meander_at(std::uint64_t steps, std::span<const double> times,
                                      Philox& rng) {
    thread_local Skeleton s;
    sample_skeleton(steps, rng, s);
    for (double t : times) {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw std::domain_error("meander time outside [0,1]");
        }
    }
    // Bridge points must be drawn in time order.
    std::vector<std::size_t> order(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    BridgeFiller fill(s, steps, rng);
    const double zeta = s.last_zero;
    const double scale = 1.0 / std::sqrt(1.0 - zeta);
    std::vector<double> out(times.size(), 0.0);
    for (std::size_t i : order) {
        if (times[i] > 0.0) {
            out[i] = fill.at(zeta + times[i] * (1.0 - zeta)) * scale;
        }
    }
    return out;
}

double rayleigh_cdf(double x) {
    if (!(x > 0.0)) {
        return 0.0;
    }
    return -std::expm1(-0.5 * x * x);
}

}  // namespace bpsre
