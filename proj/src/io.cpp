#include "diffres/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace diffres {

namespace {

bool skip_line(const std::string& line) {
    auto first = line.find_first_not_of(" \t\r");
    return first == std::string::npos || line[first] == '#';
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

double parse_double(const std::string& cell, const std::string& path, int no) {
    try {
        size_t used = 0;
        double v = std::stod(cell, &used);
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw Error(path + ":" + std::to_string(no) + ": malformed value '" + cell + "'");
    }
}

}  // namespace

PointSet read_points_csv(const std::string& path, bool has_label_column) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (skip_line(line)) continue;
        auto cells = split(line);
        // tolerate a header row
        if (rows.empty() && !cells.empty() && cells[0].find_first_of("0123456789-+.") != 0) continue;
        std::vector<double> vals;
        for (const auto& c : cells) vals.push_back(parse_double(c, path, no));
        if (has_label_column) {
            if (vals.size() < 2) throw Error(path + ":" + std::to_string(no) + ": expected coordinates and a label");
            double y = vals.back();
            if (y != std::floor(y) || y < kUnlabeled) throw Error(path + ":" + std::to_string(no) + ": invalid label");
            labels.push_back(static_cast<int>(y));
            vals.pop_back();
        }
        if (!rows.empty() && vals.size() != rows[0].size())
            throw Error(path + ":" + std::to_string(no) + ": inconsistent column count");
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw Error(path + ": no points");
    PointSet ps{Matrix(rows.size(), rows[0].size()), labels};
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) ps.coords(i, j) = rows[i][j];
    ps.validate();
    return ps;
}

void write_points_csv(std::ostream& os, const PointSet& ps) {
    for (int j = 0; j < ps.dim(); ++j) os << (j ? "," : "") << "x" << j + 1;
    if (ps.has_labels()) os << ",label";
    os << '\n' << std::setprecision(17);
    for (int i = 0; i < ps.size(); ++i) {
        for (int j = 0; j < ps.dim(); ++j) os << (j ? "," : "") << ps.coords(i, j);
        if (ps.has_labels()) os << ',' << ps.labels[i];
        os << '\n';
    }
}

void write_weights_csv(std::ostream& os, const SparseWeights& w) {
    os << "i,j,w\n" << std::setprecision(17);
    for (int i = 0; i < w.size(); ++i)
        for (long e = w.row_begin(i); e < w.row_end(i); ++e) os << i << ',' << w.cols()[e] << ',' << w.values()[e] << '\n';
}

SparseWeights read_weights_csv(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::tuple<int, int, double>> t;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (skip_line(line) || line.rfind("i,", 0) == 0) continue;
        auto cells = split(line);
        if (cells.size() != 3) throw Error(path + ":" + std::to_string(no) + ": expected i,j,w");
        t.emplace_back(static_cast<int>(parse_double(cells[0], path, no)), static_cast<int>(parse_double(cells[1], path, no)),
                       parse_double(cells[2], path, no));
    }
    return SparseWeights::from_triplets(n, std::move(t));
}

nlohmann::json params_to_json(const DiffResNetParams& p) {
    nlohmann::json j;
    j["architecture"] = {{"feature_dim", p.arch.feature_dim},
                         {"num_classes", p.arch.num_classes},
                         {"blocks", p.arch.blocks},
                         {"use_fc2", p.arch.use_fc2},
                         {"dropout_rate", p.arch.dropout_rate}};
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& [name, a] : p.named_maps()) {
        std::vector<double> w;
        for (Eigen::Index r = 0; r < a->weight.rows(); ++r)
            for (Eigen::Index c = 0; c < a->weight.cols(); ++c) w.push_back(a->weight(r, c));
        tensors.push_back({{"name", name + ".weight"}, {"rows", a->weight.rows()}, {"cols", a->weight.cols()}, {"data", w}});
        std::vector<double> b(a->bias.data(), a->bias.data() + a->bias.size());
        tensors.push_back({{"name", name + ".bias"}, {"rows", a->bias.size()}, {"cols", 1}, {"data", b}});
    }
    j["tensors"] = tensors;
    return j;
}

DiffResNetParams params_from_json(const nlohmann::json& j) {
    try {
        const auto& a = j.at("architecture");
        Architecture arch{a.at("feature_dim").get<int>(), a.at("num_classes").get<int>(), a.at("blocks").get<int>(),
                          a.at("use_fc2").get<bool>(), a.at("dropout_rate").get<double>()};
        Rng rng(0);
        DiffResNetParams p = init_params(arch, rng);
        std::vector<double> flat;
        for (const auto& t : j.at("tensors")) {
            auto data = t.at("data").get<std::vector<double>>();
            if (static_cast<long>(data.size()) != t.at("rows").get<long>() * t.at("cols").get<long>())
                throw Error("tensor " + t.at("name").get<std::string>() + " has inconsistent size");
            flat.insert(flat.end(), data.begin(), data.end());
        }
        p.assign(Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size())));
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed parameter file: ") + e.what());
    }
}

void write_ratio_trace_csv(std::ostream& os, const RatioTrace& tr) {
    os << "step,D,L,ratio\n" << std::setprecision(12);
    for (size_t k = 0; k < tr.step.size(); ++k) os << tr.step[k] << ',' << tr.D[k] << ',' << tr.L[k] << ',' << tr.ratio[k] << '\n';
}

std::string config_hash(const nlohmann::json& config) {
    std::string s = config.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace diffres
