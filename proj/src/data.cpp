#include "mgce/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace mgce {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r' && ch != '"') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

} // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error(path + ": empty file");
    const auto header = split_line(line);
    int label_idx = -1;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == label_column) label_idx = static_cast<int>(c);
    if (label_idx < 0)
        throw std::runtime_error(path + ": missing label column '" +
                                 label_column + "'");

    Dataset ds;
    ds.name = path;
    ds.d = static_cast<int>(header.size()) - 1;
    std::unordered_map<std::string, int> label_map;

    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ": row " + std::to_string(row) +
                                     " has " + std::to_string(cells.size()) +
                                     " cells, expected " +
                                     std::to_string(header.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (static_cast<int>(c) == label_idx) {
                auto [it, inserted] = label_map.try_emplace(
                    cells[c], static_cast<int>(label_map.size()));
                if (inserted) ds.class_names.push_back(cells[c]);
                ds.labels.push_back(it->second);
            } else {
                double v = 0.0;
                const char* b = cells[c].data();
                const char* e = b + cells[c].size();
                while (b != e && (*b == ' ' || *b == '\t')) ++b;
                auto [p, ec] = std::from_chars(b, e, v);
                if (ec != std::errc{} || p != e)
                    throw std::runtime_error(
                        path + ": row " + std::to_string(row) +
                        ", column '" + header[c] + "': cannot parse '" +
                        cells[c] + "' as a number");
                ds.features.push_back(v);
            }
        }
    }
    ds.k = static_cast<int>(label_map.size());
    if (ds.labels.empty()) throw std::runtime_error(path + ": no data rows");
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    for (int j = 0; j < ds.d; ++j) os << 'f' << j << ',';
    os << "label\n";
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.row(i)[j]);
            os << buf << ',';
        }
        os << (ds.labels[i] < static_cast<int>(ds.class_names.size())
                   ? ds.class_names[ds.labels[i]]
                   : std::to_string(ds.labels[i]))
           << '\n';
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

void align_labels(const Dataset& reference, Dataset& ds) {
    std::unordered_map<std::string, int> index;
    for (std::size_t c = 0; c < reference.class_names.size(); ++c)
        index.emplace(reference.class_names[c], static_cast<int>(c));
    for (auto& label : ds.labels) {
        const auto& name = ds.class_names.at(label);
        const auto it = index.find(name);
        if (it == index.end())
            throw std::runtime_error(ds.name + ": class '" + name +
                                     "' absent from " + reference.name);
        label = it->second;
    }
    ds.class_names = reference.class_names;
    ds.k = reference.k;
}

void standardize(Dataset& train, std::vector<Dataset*> others) {
    const int d = train.d;
    const double n = static_cast<double>(train.size());
    if (train.size() == 0) throw std::invalid_argument("empty training set");
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i)
        for (int j = 0; j < d; ++j) mean[j] += train.row(i)[j];
    for (int j = 0; j < d; ++j) mean[j] /= n;
    for (std::size_t i = 0; i < train.size(); ++i)
        for (int j = 0; j < d; ++j) {
            const double dev = train.row(i)[j] - mean[j];
            sd[j] += dev * dev;
        }
    for (int j = 0; j < d; ++j) sd[j] = std::sqrt(sd[j] / n);

    auto apply = [&](Dataset& ds) {
        if (ds.d != d) throw std::invalid_argument("dimension mismatch");
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double* r = ds.features.data() + i * d;
            for (int j = 0; j < d; ++j) {
                r[j] -= mean[j];
                if (sd[j] > 0.0) r[j] /= sd[j];
            }
        }
    };
    apply(train);
    for (Dataset* ds : others) apply(*ds);
}

std::vector<bool> inject_symmetric_noise(Dataset& ds, double eta,
                                         std::uint64_t seed) {
    if (ds.k < 2) throw std::invalid_argument("need k >= 2");
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("eta must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> other(0, ds.k - 2);
    std::vector<bool> flipped(ds.size(), false);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (coin(rng) >= eta) continue;
        int draw = other(rng);
        if (draw >= ds.labels[i]) ++draw; // never the original label
        ds.labels[i] = draw;
        flipped[i] = true;
    }
    return flipped;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    if (spec.val_fraction < 0.0 || spec.val_fraction >= 1.0)
        throw std::domain_error("val_fraction must lie in [0, 1)");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(spec.seed);
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t n_val =
        static_cast<std::size_t>(spec.val_fraction * ds.size());
    auto take = [&](std::size_t begin, std::size_t end) {
        Dataset out;
        out.k = ds.k;
        out.d = ds.d;
        out.name = ds.name;
        out.class_names = ds.class_names;
        out.features.reserve((end - begin) * ds.d);
        out.labels.reserve(end - begin);
        for (std::size_t idx = begin; idx < end; ++idx) {
            const std::size_t i = order[idx];
            out.features.insert(out.features.end(), ds.row(i),
                                ds.row(i) + ds.d);
            out.labels.push_back(ds.labels[i]);
        }
        return out;
    };
    return {take(n_val, ds.size()), take(0, n_val)};
}

Dataset synth_gaussian_mixture(int k, int d, int n, double separation,
                               std::uint64_t seed) {
    if (k < 1 || d < 1 || n < 1)
        throw std::invalid_argument("k, d, n must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Class means: random unit directions scaled by the separation.
    std::vector<std::vector<double>> means(k, std::vector<double>(d));
    for (auto& m : means) {
        double norm = 0.0;
        for (double& v : m) {
            v = gauss(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : m) v = separation * v / (norm > 0.0 ? norm : 1.0);
    }

    Dataset ds;
    ds.k = k;
    ds.d = d;
    ds.name = "synth-gmm";
    ds.features.reserve(static_cast<std::size_t>(n) * d);
    ds.labels.reserve(n);
    for (int i = 0; i < n; ++i) {
        const int y = i % k; // balanced classes
        for (int j = 0; j < d; ++j)
            ds.features.push_back(means[y][j] + gauss(rng));
        ds.labels.push_back(y);
    }
    for (int c = 0; c < k; ++c) ds.class_names.push_back(std::to_string(c));
    return ds;
}

} // namespace mgce
