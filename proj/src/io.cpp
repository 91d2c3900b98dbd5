#include "cascount/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cascount/errors.hpp"

namespace cascount {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Field {
    std::string_view text;
    std::size_t column; // 1-based
};

struct Line {
    std::size_t number; // 1-based
    std::vector<Field> fields;
};

std::vector<Line> split_csv(std::string_view text) {
    std::vector<Line> lines;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        ++number;
        if (!raw.empty()) {
            Line line{number, {}};
            std::size_t start = 0;
            for (;;) {
                const std::size_t comma = raw.find(',', start);
                const std::size_t stop = comma == std::string_view::npos ? raw.size() : comma;
                std::string_view field = raw.substr(start, stop - start);
                while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
                while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
                line.fields.push_back({field, start + 1});
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
            lines.push_back(std::move(line));
        }
        pos = end + 1;
    }
    return lines;
}

std::int64_t parse_int(const Field& f, const Line& line, const std::string& source,
                       const char* what) {
    std::int64_t value = 0;
    const auto* first = f.text.data();
    const auto* last = first + f.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || f.text.empty()) {
        throw ParseError(source, line.number, f.column,
                         std::string("expected an integer ") + what + ", got '" +
                             std::string(f.text) + "'");
    }
    return value;
}

double parse_real(const Field& f, const Line& line, const std::string& source, const char* what) {
    const std::string copy(f.text);
    char* end = nullptr;
    const double value = std::strtod(copy.c_str(), &end);
    if (copy.empty() || end != copy.c_str() + copy.size()) {
        throw ParseError(source, line.number, f.column,
                         std::string("expected a number ") + what + ", got '" + copy + "'");
    }
    return value;
}

// Converts a byte offset into 1-based line and column.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, column] = locate(text, offset);
        throw ParseError(source, line, column, "invalid JSON");
    }
}

// Semantic error in a parsed JSON document. `key` names the offending
// member when there is one, so that readers holding the text can point at it.
class JsonFieldError : public ParseError {
public:
    JsonFieldError(const std::string& source, std::string key, const std::string& message)
        : ParseError(source, 0, 0, message), key_(std::move(key)), message_(message) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }
    [[nodiscard]] const std::string& message() const noexcept { return message_; }

private:
    std::string key_;
    std::string message_;
};

template <typename T>
T json_get(const json& doc, const char* key, const std::string& source) {
    if (!doc.is_object() || !doc.contains(key)) {
        throw JsonFieldError(source, "", std::string("missing key \"") + key + "\"");
    }
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw JsonFieldError(source, key, std::string("key \"") + key + "\" has the wrong type");
    }
}

// Parses `path` and runs `convert`, turning field errors into located ones.
template <typename Convert>
auto read_json_document(const std::string& path, Convert&& convert) {
    const std::string text = read_text_file(path);
    const json doc = parse_json_text(text, path);
    try {
        return convert(doc);
    } catch (const JsonFieldError& e) {
        std::size_t offset = text.find('{');
        if (!e.key().empty()) {
            const std::size_t at = text.find("\"" + e.key() + "\"");
            if (at != std::string::npos) offset = at;
        }
        const auto [line, column] = locate(text, offset == std::string::npos ? 0 : offset);
        throw ParseError(path, line, column, e.message());
    }
}

} // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

ordered_json model_to_json(const ModelSpec& model) {
    ordered_json doc;
    const auto K = static_cast<Eigen::Index>(model.K());
    doc["K"] = model.K();
    doc["mu"] = std::vector<double>(model.mu.data(), model.mu.data() + K);
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < K; ++i) {
        std::vector<double> row(static_cast<std::size_t>(K));
        for (Eigen::Index j = 0; j < K; ++j) row[static_cast<std::size_t>(j)] = model.A(i, j);
        rows.push_back(row);
    }
    doc["A"] = rows;
    doc["phi"] = model.phi;
    ordered_json kernel;
    kernel["kind"] = "exponential";
    kernel["tau"] = model.kernel.tau;
    if (model.kernel.t_max != kernel_horizon(model.kernel.tau)) kernel["t_max"] = model.kernel.t_max;
    doc["kernel"] = kernel;
    return doc;
}

ModelSpec model_from_json(const json& doc, const std::string& source) {
    const auto K = json_get<std::size_t>(doc, "K", source);
    const auto mu = json_get<std::vector<double>>(doc, "mu", source);
    const auto A = json_get<std::vector<std::vector<double>>>(doc, "A", source);
    const auto phi = json_get<double>(doc, "phi", source);
    const auto kernel = json_get<json>(doc, "kernel", source);
    const auto kind = json_get<std::string>(kernel, "kind", source);
    if (kind != "exponential") {
        throw JsonFieldError(source, "kind", "unsupported kernel kind \"" + kind + "\"");
    }
    const auto tau = json_get<double>(kernel, "tau", source);
    if (mu.size() != K || A.size() != K) {
        throw JsonFieldError(source, mu.size() != K ? "mu" : "A", "mu and A must have K = " + std::to_string(K) + " rows");
    }
    ModelSpec model;
    const auto k = static_cast<Eigen::Index>(K);
    model.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), k);
    model.A = Eigen::MatrixXd(k, k);
    for (std::size_t i = 0; i < K; ++i) {
        if (A[i].size() != K) {
            throw JsonFieldError(source, "A", "row " + std::to_string(i + 1) + " of A has " +
                                               std::to_string(A[i].size()) + " entries");
        }
        for (std::size_t j = 0; j < K; ++j) {
            model.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = A[i][j];
        }
    }
    model.phi = phi;
    try {
        model.kernel = kernel.contains("t_max")
                           ? Kernel::exponential(tau, json_get<int>(kernel, "t_max", source))
                           : Kernel::exponential(tau);
        model.validate();
    } catch (const std::logic_error& e) {
        throw JsonFieldError(source, "", e.what());
    }
    return model;
}

ModelSpec read_model(const std::string& path) {
    return read_json_document(path, [&](const json& doc) { return model_from_json(doc, path); });
}

void write_model(const std::string& path, const ModelSpec& model) {
    write_text_file(path, model_to_json(model).dump(2) + "\n");
}

ordered_json fit_result_to_json(const FitResult& fit) {
    ordered_json doc = model_to_json(fit.model);
    doc["log_likelihood"] = fit.log_likelihood;
    doc["iterations"] = fit.iterations;
    doc["converged"] = fit.converged;
    doc["gradient_norm"] = fit.gradient_norm;
    doc["poisson"] = fit.poisson;
    return doc;
}

void write_fit_result(const std::string& path, const FitResult& fit) {
    write_text_file(path, fit_result_to_json(fit).dump(2) + "\n");
}

CountSeries parse_counts_csv(const std::string& text, const std::string& source) {
    const auto lines = split_csv(text);
    if (lines.empty()) throw ParseError(source, 1, 1, "empty counts file");
    const Line& header = lines.front();
    if (header.fields.size() < 2 || header.fields[0].text != "t") {
        throw ParseError(source, header.number, 1, "header must be t,c1,...,cK");
    }
    const std::size_t K = header.fields.size() - 1;
    for (std::size_t c = 1; c <= K; ++c) {
        if (header.fields[c].text != "c" + std::to_string(c)) {
            throw ParseError(source, header.number, header.fields[c].column,
                             "expected column name c" + std::to_string(c));
        }
    }
    const std::size_t T = lines.size() - 1;
    if (T == 0) throw ParseError(source, header.number, 1, "no time bins");
    CountSeries counts(K, T);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const Line& line = lines[r];
        if (line.fields.size() != K + 1) {
            throw ParseError(source, line.number, 1,
                             "expected " + std::to_string(K + 1) + " fields, found " +
                                 std::to_string(line.fields.size()));
        }
        const std::int64_t t = parse_int(line.fields[0], line, source, "time index");
        if (t != static_cast<std::int64_t>(r)) {
            throw ParseError(source, line.number, line.fields[0].column,
                             "time index " + std::to_string(t) + " breaks contiguity (expected " +
                                 std::to_string(r) + ")");
        }
        for (std::size_t c = 0; c < K; ++c) {
            const std::int64_t v = parse_int(line.fields[c + 1], line, source, "count");
            if (v < 0) {
                throw ParseError(source, line.number, line.fields[c + 1].column,
                                 "counts must be non-negative");
            }
            counts(c, r - 1) = v;
        }
    }
    return counts;
}

CountSeries read_counts_csv(const std::string& path) {
    return parse_counts_csv(read_text_file(path), path);
}

std::string format_counts_csv(const CountSeries& counts) {
    std::ostringstream out;
    out << 't';
    for (std::size_t i = 0; i < counts.K(); ++i) out << ",c" << i + 1;
    out << '\n';
    for (std::size_t t = 0; t < counts.T(); ++t) {
        out << t + 1;
        for (std::size_t i = 0; i < counts.K(); ++i) out << ',' << counts(i, t);
        out << '\n';
    }
    return out.str();
}

void write_counts_csv(const std::string& path, const CountSeries& counts) {
    write_text_file(path, format_counts_csv(counts));
}

std::string format_decomposition_csv(const CascadeDecomposition& d) {
    std::ostringstream out;
    out << "i,t,j,s," << (d.mode == DecompositionMode::sampled ? "count" : "expected") << '\n';
    std::size_t next = 0;
    for (std::size_t i = 0; i < d.K(); ++i) {
        for (std::size_t t = 0; t < d.T(); ++t) {
            out << i + 1 << ',' << t + 1 << ",0,0," << format_double(d.background(i, t)) << '\n';
            while (next < d.triggered.size() && d.triggered[next].i == i && d.triggered[next].t == t) {
                const auto& e = d.triggered[next++];
                out << i + 1 << ',' << t + 1 << ',' << e.j + 1 << ',' << e.s + 1 << ','
                    << format_double(e.value) << '\n';
            }
        }
    }
    return out.str();
}

CascadeDecomposition parse_decomposition_csv(const std::string& text, const std::string& source) {
    const auto lines = split_csv(text);
    if (lines.empty()) throw ParseError(source, 1, 1, "empty decomposition file");
    const Line& header = lines.front();
    CascadeDecomposition d;
    const bool shape_ok = header.fields.size() == 5 && header.fields[0].text == "i" &&
                          header.fields[1].text == "t" && header.fields[2].text == "j" &&
                          header.fields[3].text == "s";
    if (!shape_ok) throw ParseError(source, header.number, 1, "header must be i,t,j,s,<value>");
    if (header.fields[4].text == "count") {
        d.mode = DecompositionMode::sampled;
    } else if (header.fields[4].text == "expected") {
        d.mode = DecompositionMode::expected;
    } else {
        throw ParseError(source, header.number, header.fields[4].column,
                         "value column must be 'count' or 'expected'");
    }

    struct Row {
        std::size_t i, t, j, s;
        double value;
    };
    std::vector<Row> rows;
    std::size_t K = 0;
    std::size_t T = 0;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const Line& line = lines[r];
        if (line.fields.size() != 5) {
            throw ParseError(source, line.number, 1, "expected 5 fields");
        }
        std::int64_t idx[4];
        const char* names[4] = {"component i", "time t", "component j", "time s"};
        for (int k = 0; k < 4; ++k) idx[k] = parse_int(line.fields[k], line, source, names[k]);
        const double value = parse_real(line.fields[4], line, source, "value");
        const bool background = idx[2] == 0 && idx[3] == 0;
        if (idx[0] < 1 || idx[1] < 1 || (!background && (idx[2] < 1 || idx[3] < 1))) {
            throw ParseError(source, line.number, 1, "indices must be 1-based");
        }
        if (!background && idx[3] >= idx[1]) {
            throw ParseError(source, line.number, line.fields[3].column,
                             "source time must precede target time");
        }
        rows.push_back({static_cast<std::size_t>(idx[0]), static_cast<std::size_t>(idx[1]),
                        static_cast<std::size_t>(idx[2]), static_cast<std::size_t>(idx[3]), value});
        K = std::max(K, rows.back().i);
        T = std::max(T, rows.back().t);
    }
    d.background = Grid<double>(K, T, 0.0);
    for (const auto& row : rows) {
        if (row.j == 0) {
            d.background(row.i - 1, row.t - 1) = row.value;
        } else {
            d.triggered.push_back({row.i - 1, row.t - 1, row.j - 1, row.s - 1, row.value});
        }
    }
    return d;
}

void write_decomposition_csv(const std::string& path, const CascadeDecomposition& decomposition) {
    write_text_file(path, format_decomposition_csv(decomposition));
}

CascadeDecomposition read_decomposition_csv(const std::string& path) {
    return parse_decomposition_csv(read_text_file(path), path);
}

void write_grid_csv(const std::string& path, const Grid<double>& grid) {
    std::ostringstream out;
    out << 's';
    for (std::size_t i = 0; i < grid.rows(); ++i) out << ",c" << i + 1;
    out << '\n';
    for (std::size_t t = 0; t < grid.cols(); ++t) {
        out << t + 1;
        for (std::size_t i = 0; i < grid.rows(); ++i) out << ',' << format_double(grid(i, t));
        out << '\n';
    }
    write_text_file(path, out.str());
}

ExperimentConfig experiment_config_from_json(const json& doc, const std::string& source) {
    if (!doc.is_object()) throw JsonFieldError(source, "", "experiment config must be an object");
    ExperimentConfig c;
    auto optional = [&](const char* key, auto& target) {
        if (!doc.contains(key)) return;
        using T = std::decay_t<decltype(target)>;
        target = json_get<T>(doc, key, source);
    };
    optional("K", c.K);
    optional("T_grid", c.T_grid);
    optional("phi_grid", c.phi_grid);
    optional("repetitions", c.repetitions);
    optional("mu", c.mu);
    optional("gamma_mean", c.gamma_mean);
    optional("gamma_shape", c.gamma_shape);
    optional("tau", c.tau);
    optional("base_seed", c.base_seed);
    optional("burn_in", c.burn_in);
    optional("gradient_tolerance", c.gradient_tolerance);
    optional("max_iterations", c.max_iterations);
    optional("n_quantiles", c.n_quantiles);
    try {
        c.validate();
    } catch (const std::domain_error& e) {
        throw JsonFieldError(source, "", e.what());
    }
    return c;
}

ExperimentConfig read_experiment_config(const std::string& path) {
    return read_json_document(path,
                              [&](const json& doc) { return experiment_config_from_json(doc, path); });
}

} // namespace cascount
