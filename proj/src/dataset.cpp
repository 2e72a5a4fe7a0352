#include "metamob/dataset.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace metamob {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, size_t row, const std::string& col) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("csv: bad value '" + s + "' in column '" + col +
                                 "', row " + std::to_string(row));
    }
}

} // namespace

IpdDataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_line(line);

    int y_col = -1, trt_col = -1, trial_col = -1;
    std::vector<int> cov_cols;
    std::vector<std::string> cov_names;
    for (size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "y") y_col = static_cast<int>(c);
        else if (header[c] == "trt") trt_col = static_cast<int>(c);
        else if (header[c] == "trial") trial_col = static_cast<int>(c);
        else {
            cov_cols.push_back(static_cast<int>(c));
            cov_names.push_back(header[c]);
        }
    }
    if (y_col < 0 || trt_col < 0 || trial_col < 0)
        throw std::runtime_error("csv: header must contain y, trt, trial");

    std::vector<double> y;
    std::vector<int> trt, trial;
    std::vector<std::vector<double>> cov(cov_cols.size());
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error("csv: row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) +
                                     " fields, expected " +
                                     std::to_string(header.size()));
        y.push_back(parse_double(fields[static_cast<size_t>(y_col)], row, "y"));
        trt.push_back(static_cast<int>(
            parse_double(fields[static_cast<size_t>(trt_col)], row, "trt")));
        trial.push_back(static_cast<int>(
            parse_double(fields[static_cast<size_t>(trial_col)], row, "trial")));
        for (size_t j = 0; j < cov_cols.size(); ++j)
            cov[j].push_back(parse_double(
                fields[static_cast<size_t>(cov_cols[j])], row, cov_names[j]));
    }

    IpdDataset data;
    const auto N = static_cast<Eigen::Index>(y.size());
    data.y = Eigen::Map<VectorXd>(y.data(), N);
    data.trt = Eigen::Map<VectorXi>(trt.data(), N);
    data.trial = Eigen::Map<VectorXi>(trial.data(), N);
    data.X.resize(N, static_cast<Eigen::Index>(cov_cols.size()));
    for (size_t j = 0; j < cov_cols.size(); ++j)
        data.X.col(static_cast<Eigen::Index>(j)) =
            Eigen::Map<VectorXd>(cov[j].data(), N);
    data.covariate_names = cov_names;
    data.validate();
    return data;
}

IpdDataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    return read_csv(in);
}

void write_csv(const IpdDataset& data, std::ostream& out) {
    out << "y,trt,trial";
    for (const auto& name : data.covariate_names) out << ',' << name;
    out << '\n';
    out << std::setprecision(10);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << data.y[i] << ',' << data.trt[i] << ',' << data.trial[i];
        for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << data.X(i, j);
        out << '\n';
    }
}

void write_csv_file(const IpdDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot open " + path);
    write_csv(data, out);
}

} // namespace metamob
