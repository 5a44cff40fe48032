#include "jsq/io.hpp"

#include "jsq/regime.hpp"

#include "json.hpp"

#include <array>
#include <charconv>
#include <cmath>

#ifndef JSQLAB_BUILD_TAG
#define JSQLAB_BUILD_TAG "unknown"
#endif

namespace jsq
{
    std::string_view build_tag() noexcept { return JSQLAB_BUILD_TAG; }

    OutputFormat parse_format(std::string_view text)
    {
        if (text == "csv")
        {
            return OutputFormat::csv;
        }
        if (text == "ndjson")
        {
            return OutputFormat::ndjson;
        }
        throw ValidationError("unknown output format '" + std::string(text) + "' (expected csv or ndjson)");
    }

    std::string_view to_string(CheckStatus s) noexcept
    {
        switch (s)
        {
        case CheckStatus::pass:
            return "pass";
        case CheckStatus::fail:
            return "fail";
        case CheckStatus::none:
            break;
        }
        return "";
    }

    ResultRow& set_estimate(ResultRow& row, const StationaryEstimate& e)
    {
        row.value = e.value;
        row.std_err = e.std_err;
        row.n_units = e.n_units;
        row.method = std::string(to_string(e.method));
        return row;
    }

    const std::vector<std::string> kResultColumns = {
        "scenario", "n",     "beta",    "eps",     "b_const", "seed",      "build",  "quantity",
        "t",        "value", "std_err", "n_units", "method",  "reference", "status", "note",
    };

    std::string format_number(double v)
    {
        if (std::isnan(v))
        {
            return "nan";
        }
        if (std::isinf(v))
        {
            return v > 0 ? "inf" : "-inf";
        }
        std::array<char, 32> buf{};
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        return std::string(buf.data(), res.ptr);
    }

    std::string csv_field(std::string_view s)
    {
        if (s.find_first_of(",\"\r\n") == std::string_view::npos)
        {
            return std::string(s);
        }
        std::string out = "\"";
        for (char c : s)
        {
            if (c == '"')
            {
                out += '"';
            }
            out += c;
        }
        out += '"';
        return out;
    }

    namespace
    {
        template <class T>
        std::string opt(const std::optional<T>& v)
        {
            if (!v)
            {
                return "";
            }
            if constexpr (std::is_floating_point_v<T>)
            {
                return format_number(*v);
            }
            else
            {
                return std::to_string(*v);
            }
        }

        template <class T>
        nlohmann::json opt_json(const std::optional<T>& v)
        {
            return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        }

        // JSON has no inf/nan; keep them as strings.
        nlohmann::json number_json(double v)
        {
            return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_number(v));
        }
    }

    ResultWriter::ResultWriter(std::ostream& out, OutputFormat format, std::string build_tag)
        : out_(out), format_(format), build_(std::move(build_tag))
    {
    }

    void ResultWriter::comment(std::string_view line)
    {
        if (format_ == OutputFormat::csv)
        {
            out_ << "# " << line << '\n';
        }
    }

    void ResultWriter::write(const ResultRow& row)
    {
        if (format_ == OutputFormat::ndjson)
        {
            nlohmann::ordered_json j;
            j["scenario"] = row.scenario;
            j["n"] = opt_json(row.n);
            j["beta"] = opt_json(row.beta);
            j["eps"] = opt_json(row.eps);
            j["b_const"] = opt_json(row.b_const);
            j["seed"] = opt_json(row.seed);
            j["build"] = build_;
            j["quantity"] = row.quantity;
            j["t"] = opt_json(row.t);
            j["value"] = number_json(row.value);
            j["std_err"] = row.std_err ? number_json(*row.std_err) : nlohmann::json(nullptr);
            j["n_units"] = opt_json(row.n_units);
            j["method"] = row.method;
            j["reference"] = opt_json(row.reference);
            j["status"] = std::string(to_string(row.status));
            j["note"] = row.note;
            out_ << j.dump() << '\n';
            return;
        }
        if (!header_done_)
        {
            for (std::size_t i = 0; i < kResultColumns.size(); ++i)
            {
                out_ << (i ? "," : "") << kResultColumns[i];
            }
            out_ << '\n';
            header_done_ = true;
        }
        const std::array<std::string, 16> fields = {
            row.scenario,
            opt(row.n),
            opt(row.beta),
            opt(row.eps),
            opt(row.b_const),
            opt(row.seed),
            build_,
            row.quantity,
            opt(row.t),
            format_number(row.value),
            opt(row.std_err),
            opt(row.n_units),
            row.method,
            opt(row.reference),
            std::string(to_string(row.status)),
            row.note,
        };
        for (std::size_t i = 0; i < fields.size(); ++i)
        {
            out_ << (i ? "," : "") << csv_field(fields[i]);
        }
        out_ << '\n';
    }

    void write_path(std::ostream& out, OutputFormat format, const std::vector<PathPoint>& points)
    {
        if (format == OutputFormat::csv)
        {
            out << "series,time,value\n";
        }
        for (const auto& p : points)
        {
            if (format == OutputFormat::csv)
            {
                out << csv_field(p.series) << ',' << format_number(p.time) << ',' << format_number(p.value) << '\n';
            }
            else
            {
                nlohmann::ordered_json j;
                j["series"] = p.series;
                j["time"] = p.time;
                j["value"] = p.value;
                out << j.dump() << '\n';
            }
        }
    }

    std::vector<PathPoint> path_points(const DiffusionPath& path, const std::string& series)
    {
        std::vector<PathPoint> out;
        out.reserve(path.times.size());
        for (std::size_t i = 0; i < path.times.size(); ++i)
        {
            out.push_back({series, path.times[i], path.values[i]});
        }
        return out;
    }

    std::vector<PathPoint> path_points(const std::vector<ScaledObservation>& path)
    {
        std::vector<PathPoint> out;
        out.reserve(path.size() * 3);
        for (const auto& o : path)
        {
            out.push_back({"x", o.t_diff, o.x});
        }
        for (const auto& o : path)
        {
            out.push_back({"idle_scaled", o.t_diff, o.i_scaled});
        }
        for (const auto& o : path)
        {
            out.push_back({"q2_scaled", o.t_diff, o.q2_scaled});
        }
        return out;
    }
}
