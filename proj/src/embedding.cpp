#include "bpsre/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmf_ops.hpp"

namespace bpsre {

namespace {

void check_unit(double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw std::domain_error("argument outside [0,1]");
    }
}

void require_critical_mu(const EmbeddedLawView& view) {
    if (std::abs(view.mu.mean() - 1.0) > 1e-12) {
        throw std::invalid_argument("embedded law identities need mean(mu) = 1");
    }
}

std::vector<double> law_pmf(const OffspringLaw& law, const char* which) {
    if (law.kind() != OffspringLaw::Kind::explicit_pmf) {
        throw UnsupportedVariant(std::string("embedded pmf needs an explicit pmf for ") + which);
    }
    return law.weights();
}

}  // namespace

std::uint64_t default_gap_truncation(const GapLaw& gaps) {
    return gaps.truncation_point(1e-12, 1'000'000);
}

TruncatedValue g_tilde(const EmbeddedLawView& view, double s, std::uint64_t d_truncation) {
    check_unit(s);
    double sum = 0.0;
    double comp = 0.0;
    double iterate = s;  // f_mu^{o(d-1)}(s)
    for (std::uint64_t d = 1; d <= d_truncation; ++d) {
        const double p = view.gaps.probability(d);
        if (p > 0.0) {
            const double y = p * iterate - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        iterate = view.mu.pgf(iterate);
    }
    return {std::clamp(sum, 0.0, 1.0), view.gaps.tail(d_truncation)};
}

TruncatedValue embedded_pgf(const EmbeddedLawView& view, double s, std::uint64_t d_truncation) {
    const auto g = g_tilde(view, s, d_truncation);
    // |f_nu(x) - f_nu(y)| <= A_nu |x - y| on [0,1].
    return {view.nu.pgf(g.value), g.residual * std::max(1.0, view.nu.mean())};
}

double embedded_mean(const EmbeddedLawView& view) {
    require_critical_mu(view);
    return view.nu.mean();
}

double embedded_sigma(const EmbeddedLawView& view) {
    require_critical_mu(view);
    return view.nu.sigma() + view.mu.sigma() * (view.gaps.mean() - 1.0) / view.nu.mean();
}

EmbeddedMoments embedded_moments_numeric(const EmbeddedLawView& view, std::uint64_t d_truncation) {
    const auto d = derivatives_at_one(
        [&](double s) { return embedded_pgf(view, s, d_truncation).value; });
    return {d.first, d.second / (d.first * d.first), view.gaps.tail(d_truncation)};
}

double g_tilde_slope_numeric(const EmbeddedLawView& view, std::uint64_t d_truncation) {
    return derivatives_at_one([&](double s) { return g_tilde(view, s, d_truncation).value; }).first;
}

EmbeddedPmf embedded_pmf(const EmbeddedLawView& view, std::uint64_t d_truncation,
                         std::size_t support_cutoff) {
    const auto nu = law_pmf(view.nu, "nu");
    const auto mu = law_pmf(view.mu, "mu");

    // Mixture over d of the (d-1)-step line-size pmf.
    std::vector<double> line{0.0, 1.0};
    std::vector<double> mixture(support_cutoff + 1, 0.0);
    for (std::uint64_t d = 1; d <= d_truncation; ++d) {
        const double p = view.gaps.probability(d);
        if (p > 0.0) {
            for (std::size_t j = 0; j < line.size() && j <= support_cutoff; ++j) {
                mixture[j] += p * line[j];
            }
        }
        if (d < d_truncation) {
            line = detail::compound(line, mu, support_cutoff);
        }
    }
    EmbeddedPmf out;
    out.pmf = detail::compound(nu, mixture, support_cutoff);
    out.pmf.resize(support_cutoff + 1, 0.0);
    double total = 0.0;
    for (double w : out.pmf) {
        total += w;
    }
    out.residual_mass = std::max(0.0, 1.0 - total);
    return out;
}

EmbeddedKappa embedded_kappa(const EmbeddedLawView& view, std::uint64_t a,
                             std::uint64_t d_truncation, std::size_t support_cutoff) {
    require_critical_mu(view);
    const auto pmf = embedded_pmf(view, d_truncation, support_cutoff);
    const double mean = view.nu.mean();
    const double norm = mean * mean;

    double captured_all = 0.0;
    double captured_tail = 0.0;
    for (std::size_t j = 0; j < pmf.pmf.size(); ++j) {
        const double w = static_cast<double>(j) * static_cast<double>(j) * pmf.pmf[j];
        captured_all += w;
        if (j >= a) {
            captured_tail += w;
        }
    }
    // E X^2 = f''(1) + f'(1) = A^2 sigma~ + A.
    const double second_moment = norm * embedded_sigma(view) + mean;
    EmbeddedKappa out;
    out.value = captured_tail / norm;
    out.residual = std::max(0.0, (second_moment - captured_all) / norm);
    out.residual_mass = pmf.residual_mass;
    return out;
}

}  // namespace bpsre
