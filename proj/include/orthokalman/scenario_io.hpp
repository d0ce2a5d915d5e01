#pragma once

// Scenario files (JSON) and result tables (CSV).
//
// Scenario file:
//   { "name": "...", "seed": 7,
//     "steps": [ { "n": 4,                                   (first step only, optional)
//                  "evolve":  { "n": 2, "H": [[...]], "F": [[...]], "c": [...], "K": cov },
//                  "observe": { "G": [[...]], "o": [...], "C": cov } }, ... ],
//     "commands": [ "filter_all", "smooth", {"forget": 3}, {"rollback": 1}, {"predict_to": 15} ],
//     "truth": [[...], ...] }                               (optional)
//   cov = { "type": "C" | "W" | "C_inverse" | "w", "data": [[...]] or [...] }
// Matrices are row-major nested arrays; "H" may be omitted.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "orthokalman/covariance.hpp"
#include "orthokalman/scenarios.hpp"

namespace orthokalman::io {

using nlohmann::json;

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
    throw ScenarioError(where + ": " + what);
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) {
        fail(where, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        fail(where, "non-finite number");
    }
    return v;
}

inline const json& member(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        fail(where, std::string("missing \"") + key + "\"");
    }
    return j.at(key);
}

inline Index count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 1) {
        fail(where, "expected a positive integer");
    }
    return static_cast<Index>(j.get<std::int64_t>());
}

}  // namespace detail

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

inline Matrix matrix_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) {
        detail::fail(where, "expected a non-empty array of rows");
    }
    const auto rows = static_cast<Index>(j.size());
    Index cols = -1;
    Matrix m;
    for (Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        const std::string rw = where + "[" + std::to_string(i) + "]";
        if (!row.is_array() || row.empty()) {
            detail::fail(rw, "expected a non-empty array of numbers");
        }
        if (cols < 0) {
            cols = static_cast<Index>(row.size());
            m.resize(rows, cols);
        } else if (static_cast<Index>(row.size()) != cols) {
            detail::fail(rw, "row has " + std::to_string(row.size()) + " entries, expected " +
                                 std::to_string(cols));
        }
        for (Index c = 0; c < cols; ++c) {
            m(i, c) = detail::number(row[static_cast<std::size_t>(c)],
                                     rw + "[" + std::to_string(c) + "]");
        }
    }
    return m;
}

inline Vector vector_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) {
        detail::fail(where, "expected an array of numbers");
    }
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Index>(i)) = detail::number(j[i], where + "[" + std::to_string(i) + "]");
    }
    return v;
}

inline json covariance_to_json(const CovarianceSpec& spec) {
    json out;
    out["type"] = to_string(spec.kind());
    if (spec.kind() == CovarianceKind::DiagonalWeights) {
        out["data"] = vector_to_json(spec.data().col(0));
    } else {
        out["data"] = matrix_to_json(spec.data());
    }
    return out;
}

inline CovarianceSpec covariance_from_json(const json& j, const std::string& where) {
    const json& type = detail::member(j, "type", where);
    const json& data = detail::member(j, "data", where);
    if (!type.is_string()) {
        detail::fail(where + ".type", "expected a string");
    }
    const std::string t = type.get<std::string>();
    try {
        if (t == "C") {
            return CovarianceSpec::explicit_covariance(matrix_from_json(data, where + ".data"));
        }
        if (t == "W") {
            return CovarianceSpec::inverse_factor(matrix_from_json(data, where + ".data"));
        }
        if (t == "C_inverse") {
            return CovarianceSpec::inverse_covariance(matrix_from_json(data, where + ".data"));
        }
        if (t == "w") {
            return CovarianceSpec::diagonal_weights(vector_from_json(data, where + ".data"));
        }
    } catch (const ScenarioError&) {
        throw;
    } catch (const Error& e) {
        detail::fail(where, e.what());
    }
    detail::fail(where + ".type", "unknown covariance type \"" + t + "\"");
}

inline json command_to_json(const Command& c) {
    switch (c.kind) {
        case CommandKind::FilterAll: return "filter_all";
        case CommandKind::Smooth: return "smooth";
        case CommandKind::Forget: return json{{"forget", c.step}};
        case CommandKind::Rollback: return json{{"rollback", c.step}};
        case CommandKind::PredictTo: return json{{"predict_to", c.step}};
    }
    return nullptr;
}

inline Command command_from_json(const json& j, const std::string& where) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "filter_all") {
            return Command::filter_all();
        }
        if (s == "smooth") {
            return Command::smooth();
        }
        detail::fail(where, "unknown command \"" + s + "\"");
    }
    if (j.is_object() && j.size() == 1) {
        const auto it = j.begin();
        if (!it.value().is_number_integer()) {
            detail::fail(where + "." + it.key(), "expected a step index");
        }
        const auto step = it.value().get<StepIndex>();
        if (it.key() == "forget") {
            return Command::forget(step);
        }
        if (it.key() == "rollback") {
            return Command::rollback(step);
        }
        if (it.key() == "predict_to") {
            return Command::predict_to(step);
        }
        detail::fail(where, "unknown command \"" + it.key() + "\"");
    }
    detail::fail(where, "expected a command name or a one-key object");
}

inline json to_json(const Scenario& s) {
    json out;
    out["name"] = s.name;
    out["seed"] = s.seed;
    json steps = json::array();
    for (const StepInput& st : s.steps) {
        json j = json::object();
        if (st.dim) {
            j["n"] = *st.dim;
        }
        if (st.evolution) {
            const Evolution& e = *st.evolution;
            json ev;
            ev["n"] = e.dim;
            if (e.H) {
                ev["H"] = matrix_to_json(*e.H);
            }
            ev["F"] = matrix_to_json(e.F);
            ev["c"] = vector_to_json(e.c);
            ev["K"] = covariance_to_json(e.K);
            j["evolve"] = std::move(ev);
        }
        if (st.observation) {
            const Observation& o = *st.observation;
            j["observe"] = json{{"G", matrix_to_json(o.G)},
                                {"o", vector_to_json(o.o)},
                                {"C", covariance_to_json(o.C)}};
        }
        steps.push_back(std::move(j));
    }
    out["steps"] = std::move(steps);
    json commands = json::array();
    for (const Command& c : s.commands) {
        commands.push_back(command_to_json(c));
    }
    out["commands"] = std::move(commands);
    if (!s.truth.empty()) {
        json truth = json::array();
        for (const Vector& t : s.truth) {
            truth.push_back(vector_to_json(t));
        }
        out["truth"] = std::move(truth);
    }
    return out;
}

inline Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) {
        detail::fail("scenario", "expected an object");
    }
    Scenario s;
    if (j.contains("name")) {
        if (!j["name"].is_string()) {
            detail::fail("name", "expected a string");
        }
        s.name = j["name"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
            detail::fail("seed", "expected an integer");
        }
        s.seed = j["seed"].get<std::uint64_t>();
    }
    const json& steps = detail::member(j, "steps", "scenario");
    if (!steps.is_array()) {
        detail::fail("steps", "expected an array");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const std::string where = "steps[" + std::to_string(i) + "]";
        const json& js = steps[i];
        if (!js.is_object()) {
            detail::fail(where, "expected an object");
        }
        StepInput st;
        if (js.contains("n")) {
            st.dim = detail::count(js["n"], where + ".n");
        }
        if (js.contains("evolve")) {
            const json& ev = js["evolve"];
            const std::string w = where + ".evolve";
            std::optional<Matrix> h;
            if (ev.contains("H")) {
                h = matrix_from_json(ev["H"], w + ".H");
            }
            st.evolution = Evolution{detail::count(detail::member(ev, "n", w), w + ".n"), h,
                                     matrix_from_json(detail::member(ev, "F", w), w + ".F"),
                                     vector_from_json(detail::member(ev, "c", w), w + ".c"),
                                     covariance_from_json(detail::member(ev, "K", w), w + ".K")};
        }
        if (js.contains("observe")) {
            const json& ob = js["observe"];
            const std::string w = where + ".observe";
            st.observation =
                Observation{matrix_from_json(detail::member(ob, "G", w), w + ".G"),
                            vector_from_json(detail::member(ob, "o", w), w + ".o"),
                            covariance_from_json(detail::member(ob, "C", w), w + ".C")};
        }
        s.steps.push_back(std::move(st));
    }
    if (j.contains("commands")) {
        const json& cmds = j["commands"];
        if (!cmds.is_array()) {
            detail::fail("commands", "expected an array");
        }
        for (std::size_t i = 0; i < cmds.size(); ++i) {
            s.commands.push_back(command_from_json(cmds[i], "commands[" + std::to_string(i) + "]"));
        }
    }
    if (j.contains("truth")) {
        const json& truth = j["truth"];
        if (!truth.is_array()) {
            detail::fail("truth", "expected an array");
        }
        for (std::size_t i = 0; i < truth.size(); ++i) {
            s.truth.push_back(vector_from_json(truth[i], "truth[" + std::to_string(i) + "]"));
        }
    }
    validate(s);
    return s;
}

/// Parses scenario text. Syntax errors report line and column.
inline Scenario parse_scenario(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(e.what());
    }
    return scenario_from_json(j);
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario(buf.str());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path + ": " + e.what());
    }
}

inline std::string dump_scenario(const Scenario& s) { return to_json(s).dump(1) + "\n"; }

// ---------------------------------------------------------------------------
// CSV

/// 17 significant digits; NaN as the literal "NaN".
inline std::string format_double(double v) {
    if (std::isnan(v)) {
        return "NaN";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr std::string_view kResultHeader =
    "step,component,truth,filtered,filtered_sigma,smoothed,smoothed_sigma";

inline void write_csv(std::ostream& out, const RunResult& result) {
    out << kResultHeader << '\n';
    for (const StepResult& r : result.steps) {
        Index dim = 0;
        if (r.filtered) {
            dim = r.filtered->state.size();
        } else if (r.smoothed) {
            dim = r.smoothed->state.size();
        } else if (r.truth) {
            dim = r.truth->size();
        }
        const Vector fs = r.filtered ? r.filtered->standard_deviations() : Vector();
        const Vector ss = r.smoothed ? r.smoothed->standard_deviations() : Vector();
        for (Index c = 0; c < dim; ++c) {
            out << r.index << ',' << c << ','
                << format_double(r.truth ? (*r.truth)(c) : kNaN) << ','
                << format_double(r.filtered ? r.filtered->state(c) : kNaN) << ','
                << format_double(r.filtered ? fs(c) : kNaN) << ','
                << format_double(r.smoothed ? r.smoothed->state(c) : kNaN) << ','
                << format_double(r.smoothed ? ss(c) : kNaN) << '\n';
        }
    }
}

inline void write_perf_csv(std::ostream& out, const PerfResult& result, Index group, Index steps) {
    out << "group,first_step,last_step,seconds_per_step\n";
    for (std::size_t g = 0; g < result.group_seconds_per_step.size(); ++g) {
        const Index first = static_cast<Index>(g) * group;
        const Index last = std::min(first + group, steps) - 1;
        out << g << ',' << first << ',' << last << ','
            << format_double(result.group_seconds_per_step[g]) << '\n';
    }
}

}  // namespace orthokalman::io
