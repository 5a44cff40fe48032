#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace jsq
{
    /// Raised when the probability mass near the truncation cap is too large to ignore.
    class TruncationError : public std::runtime_error
    {
    public:
        TruncationError(const std::string& what, double boundary_mass)
            : std::runtime_error(what), boundary_mass_(boundary_mass)
        {
        }
        double boundary_mass() const noexcept { return boundary_mass_; }

    private:
        double boundary_mass_;
    };

    /// Stationary law pi_0..pi_{k_max} of the M/M/N queue with arrival rate lambda_total and
    /// unit service rates. Computed in log space, so large N does not overflow N^N / N!.
    /// k_max = 0 picks the smallest k_max whose truncated tail is below 1e-12.
    std::vector<double> mmn_stationary(std::int64_t n, double lambda_total, std::int64_t k_max = 0);

    /// P(S > k_max) for the M/M/N stationary law.
    double mmn_tail_beyond(std::int64_t n, double lambda_total, std::int64_t k_max);
    double mmn_mean_total(std::int64_t n, double lambda_total);
    /// E[(S - N)^+], the mean number waiting.
    double mmn_mean_waiting(std::int64_t n, double lambda_total);
    /// P(S >= N), the Erlang-C delay probability.
    double mmn_wait_probability(std::int64_t n, double lambda_total);

    /// Stationary law of the JSQ chain with n <= 3 servers, truncated at `cap` total tasks
    /// (arrivals that would exceed the cap are dropped).
    struct JsqExactSolution
    {
        std::int64_t n = 0;
        double lambda_total = 0.0;
        std::int64_t cap = 0;
        /// Queue lengths per state, longest first.
        std::vector<std::vector<std::int64_t>> states;
        std::vector<double> pi;
        /// Mass on states with total >= cap - 1.
        double boundary_mass = 0.0;
        std::vector<double> total_marginal; // index S
        std::vector<double> idle_marginal;  // index I
        std::vector<double> q2_marginal;    // index Q2

        double mean_total() const;
        double mean_busy() const;
        double idle_probability(std::int64_t k) const;
    };

    /// Solves pi G = 0, sum pi = 1 for the truncated generator with a sparse LU factorisation.
    /// Throws TruncationError when boundary_mass >= max_boundary_mass.
    JsqExactSolution jsq_exact_small(std::int64_t n, double lambda_total, std::int64_t cap,
                                     double max_boundary_mass = 1e-9);

    /// (1 - rho) rho^k with rho = up / down; rejects rho >= 1.
    double bd_geometric(double up, double down, std::int64_t k);
}
