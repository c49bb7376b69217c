#include "gwcoal/offspring.hpp"

#include <cmath>

namespace gwcoal {

OffspringLaw::OffspringLaw(std::vector<double> pmf, double rate)
    : pmf_(std::move(pmf)), rate_(rate) {
    if (pmf_.empty()) throw std::invalid_argument("OffspringLaw: empty pmf");
    if (!(rate_ > 0.0)) throw std::invalid_argument("OffspringLaw: rate must be positive");
    double sum = 0.0;
    for (double p : pmf_) {
        if (p < 0.0) throw std::invalid_argument("OffspringLaw: negative probability");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("OffspringLaw: pmf does not sum to 1");
    const double p0 = pmf_[0];
    const double p1 = pmf_.size() > 1 ? pmf_[1] : 0.0;
    if (!(p0 + p1 < 1.0 - 1e-12))
        throw std::invalid_argument("OffspringLaw: p0 + p1 must be < 1");

    mean_ = 0.0;
    for (std::size_t j = 0; j < pmf_.size(); ++j) mean_ += static_cast<double>(j) * pmf_[j];

    cdf_.resize(pmf_.size());
    size_biased_cdf_.resize(pmf_.size());
    double c = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < pmf_.size(); ++j) {
        c += pmf_[j];
        cdf_[j] = c;
        sb += static_cast<double>(j) * pmf_[j] / mean_;
        size_biased_cdf_[j] = sb;
    }
    cdf_.back() = 1.0;
    size_biased_cdf_.back() = 1.0;
}

double OffspringLaw::factorial_moment(int j) const {
    if (j < 1) throw std::invalid_argument("factorial_moment: j >= 1 required");
    if (j > support_bound()) return 0.0;
    double m = 0.0;
    for (std::size_t i = static_cast<std::size_t>(j); i < pmf_.size(); ++i) {
        double ff = 1.0;
        for (int l = 0; l < j; ++l) ff *= static_cast<double>(i) - l;
        m += ff * pmf_[i];
    }
    return m;
}

double OffspringLaw::pgf(double theta, double headroom) const {
    if (theta < 0.0 || theta > 1.0 + headroom)
        throw std::domain_error("pgf: theta outside [0, 1 + headroom]");
    double acc = 0.0;
    for (std::size_t j = pmf_.size(); j-- > 0;) acc = acc * theta + pmf_[j];
    return acc;
}

double OffspringLaw::u(double theta, double headroom) const { return pgf(theta, headroom) - theta; }

double OffspringLaw::u_prime(double theta, double headroom) const {
    if (theta < 0.0 || theta > 1.0 + headroom)
        throw std::domain_error("u_prime: theta outside [0, 1 + headroom]");
    double acc = 0.0;
    for (std::size_t j = pmf_.size(); j-- > 1;) acc = acc * theta + static_cast<double>(j) * pmf_[j];
    return acc - 1.0;
}

namespace {
int sample_from_cdf(const std::vector<double>& cdf, Rng& rng) {
    const double x = rng.uniform();
    for (std::size_t j = 0; j < cdf.size(); ++j)
        if (x < cdf[j]) return static_cast<int>(j);
    return static_cast<int>(cdf.size()) - 1;
}
}  // namespace

int OffspringLaw::sample(Rng& rng) const { return sample_from_cdf(cdf_, rng); }

int OffspringLaw::sample_size_biased(Rng& rng) const { return sample_from_cdf(size_biased_cdf_, rng); }

bool OffspringLaw::is_birth_death() const {
    for (std::size_t j = 0; j < pmf_.size(); ++j)
        if (j != 0 && j != 2 && pmf_[j] != 0.0) return false;
    return true;
}

OffspringLaw OffspringFamily::at_horizon(double T) const {
    if (!(T > 0.0)) throw std::invalid_argument("OffspringFamily: horizon must be positive");
    if (const auto* bd = std::get_if<BirthDeathFamily>(&kind_)) {
        if (!(bd->beta > 0.0) || bd->alpha < 0.0)
            throw std::invalid_argument("BirthDeathFamily: need beta > 0, alpha >= 0");
        const double r = bd->alpha + bd->beta;
        return OffspringLaw({bd->alpha / r, 0.0, bd->beta / r}, r);
    }
    if (const auto* ex = std::get_if<ExplicitFamily>(&kind_)) {
        return OffspringLaw(ex->pmf, ex->rate);
    }
    const auto& nc = std::get<NearCriticalTernaryFamily>(kind_);
    if (!(nc.sigma2 > 0.0)) throw std::invalid_argument("NearCriticalTernary: sigma2 must be positive");
    const double mean = 1.0 + nc.mu / T;
    double s2 = nc.sigma2;
    if (s2 > mean) {
        // p1 would be negative. Pinning p1 = 0 changes the second factorial
        // moment to 1 + mu/T; that drift is O(1/T) only when sigma2 <= 1.
        if (nc.sigma2 > 1.0)
            throw std::invalid_argument("NearCriticalTernary: (mu, sigma2, T) give no valid pmf");
        s2 = mean;
    }
    double p2 = 0.5 * s2;
    double p1 = mean - s2;
    double p0 = 1.0 - p1 - p2;
    if (std::fabs(p1) < 1e-14) p1 = 0.0;
    if (!(p0 >= 0.0 && p0 <= 1.0 && p1 <= 1.0 && p2 <= 1.0 && mean > 0.0))
        throw std::invalid_argument("NearCriticalTernary: (mu, sigma2, T) give no valid pmf");
    p0 = 1.0 - p1 - p2;  // absorb rounding
    return OffspringLaw({p0, p1, p2}, nc.rate);
}

}  // namespace gwcoal
