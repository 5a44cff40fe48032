#pragma once

#include "jsq/diffusion.hpp"
#include "jsq/estimators.hpp"
#include "jsq/occupancy.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace jsq
{
    enum class OutputFormat
    {
        csv,
        ndjson,
    };

    OutputFormat parse_format(std::string_view text);

    enum class CheckStatus
    {
        none,
        pass,
        fail,
    };

    std::string_view to_string(CheckStatus s) noexcept;

    /// One line of a result table. Empty optionals print as empty CSV fields / JSON null.
    struct ResultRow
    {
        std::string scenario;
        std::optional<std::int64_t> n;
        std::optional<double> beta;
        std::optional<double> eps;
        std::optional<double> b_const;
        std::optional<std::uint64_t> seed;
        std::string quantity;
        std::optional<double> t;
        double value = 0.0;
        std::optional<double> std_err;
        std::optional<std::size_t> n_units;
        std::string method;
        std::optional<double> reference;
        CheckStatus status = CheckStatus::none;
        std::string note;
    };

    /// Fills value, std_err, n_units and method from an estimate.
    ResultRow& set_estimate(ResultRow& row, const StationaryEstimate& e);

    extern const std::vector<std::string> kResultColumns;

    /// Shortest round-trip decimal form; identical on every run.
    std::string format_number(double v);

    /// RFC-4180 quoting: fields with a comma, quote or line break are quoted, quotes doubled.
    std::string csv_field(std::string_view s);

    class ResultWriter
    {
    public:
        ResultWriter(std::ostream& out, OutputFormat format, std::string build_tag);

        /// Comment lines ("# ...") ahead of the data; CSV only, NDJSON skips them.
        void comment(std::string_view line);
        void write(const ResultRow& row);

    private:
        std::ostream& out_;
        OutputFormat format_;
        std::string build_;
        bool header_done_ = false;
    };

    /// Path rows (series, time, value); the schema shared by SDE and CTMC paths.
    struct PathPoint
    {
        std::string series;
        double time = 0.0;
        double value = 0.0;
    };

    void write_path(std::ostream& out, OutputFormat format, const std::vector<PathPoint>& points);

    std::vector<PathPoint> path_points(const DiffusionPath& path, const std::string& series = "x");
    std::vector<PathPoint> path_points(const std::vector<ScaledObservation>& path);

    /// Build identifier compiled into the binary (git describe of the source tree).
    std::string_view build_tag() noexcept;
}
