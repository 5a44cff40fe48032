#include "jsq/oracle.hpp"

#include "jsq/regime.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace jsq
{
    namespace
    {
        void check_mmn(std::int64_t n, double lambda_total)
        {
            if (n < 1)
            {
                throw ValidationError("M/M/N needs at least one server");
            }
            if (!(lambda_total > 0.0) || !(lambda_total < static_cast<double>(n)))
            {
                throw ValidationError("M/M/N needs 0 < lambda < N (got lambda=" + std::to_string(lambda_total) +
                                      ", N=" + std::to_string(n) + ")");
            }
        }

        struct MmnLogLaw
        {
            double log_lambda;
            double log_rho;
            double log_w_n; // log(lambda^N / N!)
            double log_z;
            std::int64_t n;

            double log_pi(std::int64_t k) const
            {
                if (k <= n)
                {
                    return static_cast<double>(k) * log_lambda - std::lgamma(static_cast<double>(k) + 1.0) - log_z;
                }
                return log_w_n + static_cast<double>(k - n) * log_rho - log_z;
            }
        };

        MmnLogLaw mmn_law(std::int64_t n, double lambda_total)
        {
            check_mmn(n, lambda_total);
            MmnLogLaw law{};
            law.n = n;
            law.log_lambda = std::log(lambda_total);
            law.log_rho = std::log(lambda_total / static_cast<double>(n));
            law.log_w_n = static_cast<double>(n) * law.log_lambda - std::lgamma(static_cast<double>(n) + 1.0);

            // Z = sum_{k<N} lambda^k/k! + w_N / (1 - rho), summed in log space.
            std::vector<double> terms;
            terms.reserve(static_cast<std::size_t>(n) + 1);
            for (std::int64_t k = 0; k < n; ++k)
            {
                terms.push_back(static_cast<double>(k) * law.log_lambda - std::lgamma(static_cast<double>(k) + 1.0));
            }
            terms.push_back(law.log_w_n - std::log1p(-lambda_total / static_cast<double>(n)));
            const double m = *std::max_element(terms.begin(), terms.end());
            double s = 0.0;
            for (double t : terms)
            {
                s += std::exp(t - m);
            }
            law.log_z = m + std::log(s);
            return law;
        }
    }

    double mmn_tail_beyond(std::int64_t n, double lambda_total, std::int64_t k_max)
    {
        const MmnLogLaw law = mmn_law(n, lambda_total);
        const double rho = lambda_total / static_cast<double>(n);
        if (k_max >= n)
        {
            return std::exp(law.log_pi(k_max + 1) - std::log1p(-rho));
        }
        double below = 0.0;
        for (std::int64_t k = 0; k <= k_max; ++k)
        {
            below += std::exp(law.log_pi(k));
        }
        return std::max(0.0, 1.0 - below);
    }

    std::vector<double> mmn_stationary(std::int64_t n, double lambda_total, std::int64_t k_max)
    {
        const MmnLogLaw law = mmn_law(n, lambda_total);
        if (k_max < 0)
        {
            throw ValidationError("k_max must be non-negative");
        }
        if (k_max == 0)
        {
            // Tail beyond k >= N is pi_{k+1} / (1 - rho).
            const double rho = lambda_total / static_cast<double>(n);
            const double log_target = std::log(1e-12) + std::log1p(-rho);
            std::int64_t k = n;
            if (law.log_pi(n + 1) > log_target)
            {
                k = n + static_cast<std::int64_t>(std::ceil((log_target - law.log_pi(n + 1)) / law.log_rho));
            }
            k_max = std::max<std::int64_t>(k, 1);
        }
        // Ratio recursion outward from the mode keeps neighbouring terms in exact balance.
        const std::int64_t top = std::max(k_max, n);
        const auto mode = static_cast<std::int64_t>(std::min(std::floor(lambda_total), static_cast<double>(n)));
        std::vector<double> w(static_cast<std::size_t>(top) + 1, 0.0);
        auto at = [&](std::int64_t k) -> double& { return w[static_cast<std::size_t>(k)]; };
        at(mode) = 1.0;
        for (std::int64_t k = mode + 1; k <= top; ++k)
        {
            at(k) = at(k - 1) * lambda_total / static_cast<double>(std::min(k, n));
        }
        for (std::int64_t k = mode - 1; k >= 0; --k)
        {
            at(k) = at(k + 1) * static_cast<double>(std::min(k + 1, n)) / lambda_total;
        }
        double z = at(n) / (1.0 - lambda_total / static_cast<double>(n));
        for (std::int64_t k = 0; k < n; ++k)
        {
            z += at(k);
        }
        w.resize(static_cast<std::size_t>(k_max) + 1);
        for (auto& v : w)
        {
            v /= z;
        }
        return w;
    }

    double mmn_wait_probability(std::int64_t n, double lambda_total)
    {
        const MmnLogLaw law = mmn_law(n, lambda_total);
        return std::exp(law.log_pi(n) - std::log1p(-lambda_total / static_cast<double>(n)));
    }

    double mmn_mean_waiting(std::int64_t n, double lambda_total)
    {
        // sum_{j>=0} j pi_N rho^j = pi_N rho / (1 - rho)^2
        const MmnLogLaw law = mmn_law(n, lambda_total);
        const double rho = lambda_total / static_cast<double>(n);
        return std::exp(law.log_pi(n)) * rho / ((1.0 - rho) * (1.0 - rho));
    }

    double mmn_mean_total(std::int64_t n, double lambda_total)
    {
        // E[S] = E[busy] + E[waiting] and E[busy] = lambda by flow balance.
        return lambda_total + mmn_mean_waiting(n, lambda_total);
    }

    double JsqExactSolution::mean_total() const
    {
        double m = 0.0;
        for (std::size_t k = 0; k < total_marginal.size(); ++k)
        {
            m += static_cast<double>(k) * total_marginal[k];
        }
        return m;
    }

    double JsqExactSolution::mean_busy() const
    {
        double m = 0.0;
        for (std::size_t k = 0; k < idle_marginal.size(); ++k)
        {
            m += static_cast<double>(n - static_cast<std::int64_t>(k)) * idle_marginal[k];
        }
        return m;
    }

    double JsqExactSolution::idle_probability(std::int64_t k) const
    {
        if (k < 0 || k >= static_cast<std::int64_t>(idle_marginal.size()))
        {
            return 0.0;
        }
        return idle_marginal[static_cast<std::size_t>(k)];
    }

    JsqExactSolution jsq_exact_small(std::int64_t n, double lambda_total, std::int64_t cap, double max_boundary_mass)
    {
        if (n < 1 || n > 3)
        {
            throw ValidationError("exact JSQ solve supports 1 to 3 servers");
        }
        if (!(lambda_total > 0.0) || !std::isfinite(lambda_total))
        {
            throw ValidationError("arrival rate must be positive and finite");
        }
        if (!(lambda_total < static_cast<double>(n)))
        {
            throw ValidationError("exact JSQ solve needs lambda < n");
        }
        if (cap < 2)
        {
            throw ValidationError("truncation cap must be at least 2");
        }

        // Enumerate non-increasing queue-length vectors with total <= cap.
        using Key = std::vector<std::int64_t>;
        std::vector<Key> states;
        std::map<Key, std::size_t> index;
        Key cur(static_cast<std::size_t>(n), 0);
        auto enumerate = [&](auto&& self, std::size_t pos, std::int64_t bound, std::int64_t left) -> void {
            if (pos == cur.size())
            {
                index.emplace(cur, states.size());
                states.push_back(cur);
                return;
            }
            for (std::int64_t v = 0; v <= std::min(bound, left); ++v)
            {
                cur[pos] = v;
                self(self, pos + 1, v, left - v);
            }
        };
        enumerate(enumerate, 0, cap, cap);
        if (states.size() > 1'000'000)
        {
            throw ValidationError("truncated state space exceeds 10^6 states; lower the cap");
        }

        const auto m = static_cast<Eigen::Index>(states.size());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(states.size() * static_cast<std::size_t>(2 * n + 2));
        auto sorted = [](Key k) {
            std::sort(k.begin(), k.end(), std::greater<>());
            return k;
        };
        // Row 0 of A = G^T is replaced by the normalisation sum(pi) = 1.
        auto add = [&](std::size_t from, std::size_t to, double rate) {
            if (to != 0)
            {
                trip.emplace_back(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from), rate);
            }
            if (from != 0)
            {
                trip.emplace_back(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(from), -rate);
            }
        };
        for (std::size_t i = 0; i < states.size(); ++i)
        {
            const Key& s = states[i];
            std::int64_t total = 0;
            for (auto v : s)
            {
                total += v;
            }
            if (total < cap)
            {
                Key t = s;
                ++t.back(); // shortest queue (ties are exchangeable)
                add(i, index.at(sorted(t)), lambda_total);
            }
            for (std::size_t j = 0; j < s.size(); ++j)
            {
                if (s[j] > 0)
                {
                    Key t = s;
                    --t[j];
                    add(i, index.at(sorted(t)), 1.0);
                }
            }
            trip.emplace_back(0, static_cast<Eigen::Index>(i), 1.0);
        }
        Eigen::SparseMatrix<double> a(m, m);
        a.setFromTriplets(trip.begin(), trip.end());
        a.makeCompressed();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        rhs(0) = 1.0;

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success)
        {
            throw std::runtime_error("sparse LU factorisation of the truncated generator failed");
        }
        const Eigen::VectorXd x = lu.solve(rhs);

        JsqExactSolution out;
        out.n = n;
        out.lambda_total = lambda_total;
        out.cap = cap;
        out.states = std::move(states);
        out.pi.resize(out.states.size());
        out.total_marginal.assign(static_cast<std::size_t>(cap) + 1, 0.0);
        out.idle_marginal.assign(static_cast<std::size_t>(n) + 1, 0.0);
        out.q2_marginal.assign(static_cast<std::size_t>(n) + 1, 0.0);
        for (std::size_t i = 0; i < out.states.size(); ++i)
        {
            const double p = std::max(0.0, x(static_cast<Eigen::Index>(i)));
            out.pi[i] = p;
            std::int64_t total = 0;
            std::int64_t idle = 0;
            std::int64_t q2 = 0;
            for (auto v : out.states[i])
            {
                total += v;
                idle += v == 0 ? 1 : 0;
                q2 += v >= 2 ? 1 : 0;
            }
            out.total_marginal[static_cast<std::size_t>(total)] += p;
            out.idle_marginal[static_cast<std::size_t>(idle)] += p;
            out.q2_marginal[static_cast<std::size_t>(q2)] += p;
            if (total >= cap - 1)
            {
                out.boundary_mass += p;
            }
        }
        if (!(out.boundary_mass < max_boundary_mass))
        {
            std::ostringstream os;
            os << "truncation at cap=" << cap << " leaves boundary mass " << out.boundary_mass << " >= "
               << max_boundary_mass << "; increase the cap";
            throw TruncationError(os.str(), out.boundary_mass);
        }
        return out;
    }

    double bd_geometric(double up, double down, std::int64_t k)
    {
        if (!(up > 0.0) || !(down > 0.0))
        {
            throw ValidationError("birth-death rates must be positive");
        }
        const double rho = up / down;
        if (!(rho < 1.0))
        {
            throw ValidationError("birth-death chain is not positive recurrent (up >= down)");
        }
        if (k < 0)
        {
            throw ValidationError("state must be non-negative");
        }
        return (1.0 - rho) * std::pow(rho, static_cast<double>(k));
    }
}
