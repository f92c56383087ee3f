#pragma once

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cyclicsem/error.hpp"
#include "cyclicsem/linalg.hpp"

namespace cyclicsem {

/// Named results of one command, renderable as text or JSON.
struct Report {
    using Matrix = std::vector<std::vector<double>>;
    using Value = std::variant<double, std::vector<double>, Matrix, std::string, bool>;

    struct Entry {
        std::string name;
        Value value;
        std::string formula;

        friend bool operator==(const Entry&, const Entry&) = default;
    };

    std::string command;
    std::map<std::string, std::string> inputs;
    std::vector<Entry> results;
    std::vector<std::string> warnings;
    std::vector<std::string> notes;

    friend bool operator==(const Report&, const Report&) = default;

    void add(std::string name, double v, std::string formula = {}) {
        results.push_back({std::move(name), v, std::move(formula)});
    }
    void add(std::string name, const VectorXd& v, std::string formula = {}) {
        results.push_back({std::move(name), std::vector<double>(v.data(), v.data() + v.size()), std::move(formula)});
    }
    void add(std::string name, const MatrixXd& m, std::string formula = {}) {
        Matrix rows(static_cast<std::size_t>(m.rows()));
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index k = 0; k < m.cols(); ++k) {
                rows[static_cast<std::size_t>(i)].push_back(m(i, k));
            }
        }
        results.push_back({std::move(name), std::move(rows), std::move(formula)});
    }
    void add_text(std::string name, std::string v, std::string formula = {}) {
        results.push_back({std::move(name), std::move(v), std::move(formula)});
    }
    void add_flag(std::string name, bool v, std::string formula = {}) {
        results.push_back({std::move(name), v, std::move(formula)});
    }

    [[nodiscard]] const Entry* find(const std::string& name) const {
        for (const auto& e : results) {
            if (e.name == name) {
                return &e;
            }
        }
        return nullptr;
    }
    [[nodiscard]] double scalar(const std::string& name) const {
        const auto* e = find(name);
        if (!e || !std::holds_alternative<double>(e->value)) {
            throw Error(ErrorKind::InvalidArgument, "report has no scalar '" + name + "'");
        }
        return std::get<double>(e->value);
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json res = nlohmann::json::array();
        for (const auto& e : results) {
            nlohmann::json item = {{"name", e.name}};
            std::visit(
                [&item](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        item["kind"] = "scalar";
                    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                        item["kind"] = "vector";
                    } else if constexpr (std::is_same_v<T, Matrix>) {
                        item["kind"] = "matrix";
                    } else if constexpr (std::is_same_v<T, std::string>) {
                        item["kind"] = "text";
                    } else {
                        item["kind"] = "flag";
                    }
                    item["value"] = v;
                },
                e.value);
            if (!e.formula.empty()) {
                item["formula"] = e.formula;
            }
            res.push_back(std::move(item));
        }
        return {{"command", command}, {"inputs", inputs}, {"results", res}, {"warnings", warnings}, {"notes", notes}};
    }

    static Report from_json(const nlohmann::json& j) {
        Report r;
        r.command = j.at("command").get<std::string>();
        r.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.notes = j.at("notes").get<std::vector<std::string>>();
        for (const auto& item : j.at("results")) {
            Entry e;
            e.name = item.at("name").get<std::string>();
            e.formula = item.value("formula", std::string{});
            const auto kind = item.at("kind").get<std::string>();
            const auto& v = item.at("value");
            if (kind == "scalar") {
                e.value = v.get<double>();
            } else if (kind == "vector") {
                e.value = v.get<std::vector<double>>();
            } else if (kind == "matrix") {
                e.value = v.get<Matrix>();
            } else if (kind == "text") {
                e.value = v.get<std::string>();
            } else if (kind == "flag") {
                e.value = v.get<bool>();
            } else {
                throw Error(ErrorKind::ParseError, "unknown report entry kind '" + kind + "'");
            }
            r.results.push_back(std::move(e));
        }
        return r;
    }

    /// Four decimals; very small magnitudes switch to scientific notation.
    static std::string format_number(double v) {
        std::ostringstream out;
        const double mag = std::abs(v);
        if (v != 0.0 && (mag < 1e-4 || mag >= 1e7)) {
            out << std::scientific << std::setprecision(4) << v;
        } else {
            out << std::fixed << std::setprecision(4) << v;
        }
        return out.str();
    }

    [[nodiscard]] std::string to_text() const {
        std::ostringstream out;
        out << "== " << command << " ==\n";
        for (const auto& [k, v] : inputs) {
            out << "  input " << k << ": " << v << '\n';
        }
        auto join = [](const std::vector<double>& xs) {
            std::string s = "[";
            for (std::size_t i = 0; i < xs.size(); ++i) {
                s += (i ? ", " : "") + format_number(xs[i]);
            }
            return s + "]";
        };
        for (const auto& e : results) {
            out << "  " << e.name << " = ";
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        out << format_number(v);
                    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                        out << join(v);
                    } else if constexpr (std::is_same_v<T, Matrix>) {
                        out << '[';
                        for (std::size_t i = 0; i < v.size(); ++i) {
                            out << (i ? ", " : "") << join(v[i]);
                        }
                        out << ']';
                    } else if constexpr (std::is_same_v<T, std::string>) {
                        out << v;
                    } else {
                        out << (v ? "true" : "false");
                    }
                },
                e.value);
            if (!e.formula.empty()) {
                out << "    [" << e.formula << "]";
            }
            out << '\n';
        }
        for (const auto& w : warnings) {
            out << "  warning: " << w << '\n';
        }
        for (const auto& n : notes) {
            out << "  note: " << n << '\n';
        }
        return out.str();
    }
};

} // namespace cyclicsem
