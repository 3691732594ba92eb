#include "wafl/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace wafl {

double window_average(const std::vector<MetricsRecord>& records, int node, int lo, int hi) {
    if (lo > hi) throw InputError("window_average: empty epoch range");
    double sum = 0.0;
    int n = 0;
    for (const auto& r : records) {
        if (r.node == node && r.epoch >= lo && r.epoch <= hi) {
            sum += r.accuracy;
            ++n;
        }
    }
    if (n == 0)
        throw InputError("window_average: no evaluations for node " + std::to_string(node) +
                         " in [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
    return sum / double(n);
}

namespace {

// Average ranks, ties sharing the mean rank.
std::vector<double> ranks(std::span<const double> xs) {
    std::vector<size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(xs.size());
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double mean_rank = 0.5 * double(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) r[idx[k]] = mean_rank;
        i = j + 1;
    }
    return r;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    const double n = double(xs.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.8f", v);
    return buf;
}

}  // namespace

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw InputError("spearman: need two equal-length series");
    const auto rx = ranks(xs);
    const auto ry = ranks(ys);
    const double rho = pearson(rx, ry);
    if (std::isnan(rho)) return std::nullopt;
    return rho;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& records) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os << "epoch,node,accuracy,loss,distance_fc1,flow_l2_sum,flow_local_l2\n";
    for (const auto& r : records) {
        os << r.epoch << ',' << r.node << ',' << fmt_num(r.accuracy) << ',' << fmt_num(r.loss)
           << ',';
        if (r.distance_fc1) os << fmt_num(*r.distance_fc1);
        os << ',' << fmt_num(r.flow_l2_sum) << ',' << fmt_num(r.flow_local_l2) << '\n';
    }
    if (!os) throw FormatError("write failed: " + path.string());
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) ||
        line != "epoch,node,accuracy,loss,distance_fc1,flow_l2_sum,flow_local_l2")
        throw FormatError(path.string() + ": unexpected metrics header");
    std::vector<MetricsRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        MetricsRecord r;
        auto next = [&]() {
            if (!std::getline(ss, field, ','))
                throw FormatError(path.string() + ": short row: " + line);
            return field;
        };
        r.epoch = std::stoi(next());
        r.node = std::stoi(next());
        r.accuracy = std::stod(next());
        r.loss = std::stod(next());
        const std::string d = next();
        if (!d.empty()) r.distance_fc1 = std::stod(d);
        r.flow_l2_sum = std::stod(next());
        r.flow_local_l2 = std::stod(next());
        out.push_back(r);
    }
    return out;
}

void write_confusion_json(const std::filesystem::path& path, const ConfusionMatrix& cm) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : cm.counts) {
        nlohmann::json r = nlohmann::json::array();
        for (int64_t c : row) r.push_back(c);
        rows.push_back(r);
    }
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os << rows.dump() << '\n';
    if (!os) throw FormatError("write failed: " + path.string());
}

}  // namespace wafl
