#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mfpca/error.hpp"
#include "mfpca/model.hpp"

namespace mfpca {

namespace {

// Reals are written with 17 significant digits so a load reproduces every bit.
std::string real(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

template <typename Vector>
void write_array(std::ostringstream& out, const Vector& v) {
    out << '[';
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(v.size()); ++i) {
        if (i) out << ',';
        out << real(v[i]);
    }
    out << ']';
}

void write_level(std::ostringstream& out, const Level& level) {
    out << "{\n    \"eigenvalues\": ";
    write_array(out, level.eigenvalues);
    out << ",\n    \"eigenfunctions\": [";
    for (Eigen::Index k = 0; k < level.size(); ++k) {
        out << (k ? ",\n      " : "\n      ");
        write_array(out, Eigen::VectorXd(level.eigenfunctions.col(k)));
    }
    out << (level.size() ? "\n    ]\n  }" : "]\n  }");
}

const nlohmann::json& require(const nlohmann::json& node, const char* field) {
    if (!node.is_object() || !node.contains(field)) {
        throw Error(ErrorKind::corrupt_model, std::string("missing field '") + field + "'");
    }
    return node.at(field);
}

std::vector<double> reals(const nlohmann::json& node, const char* field) {
    const auto& array = require(node, field);
    if (!array.is_array()) throw Error(ErrorKind::corrupt_model, std::string("field '") + field + "' is not an array");
    std::vector<double> out;
    for (const auto& v : array) {
        if (!v.is_number()) throw Error(ErrorKind::corrupt_model, std::string("field '") + field + "' holds a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

Level read_level(const nlohmann::json& node, std::size_t length) {
    const auto values = reals(node, "eigenvalues");
    const auto& functions = require(node, "eigenfunctions");
    if (!functions.is_array() || functions.size() != values.size()) {
        throw Error(ErrorKind::corrupt_model, "eigenfunction count differs from eigenvalue count");
    }
    Level level{Eigen::VectorXd(static_cast<Eigen::Index>(values.size())),
                Eigen::MatrixXd(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(values.size()))};
    for (std::size_t k = 0; k < values.size(); ++k) {
        level.eigenvalues(static_cast<Eigen::Index>(k)) = values[k];
        const auto& row = functions[k];
        if (!row.is_array() || row.size() != length) {
            throw Error(ErrorKind::corrupt_model, "eigenfunction " + std::to_string(k + 1) + " has the wrong length");
        }
        for (std::size_t l = 0; l < length; ++l) {
            if (!row[l].is_number()) throw Error(ErrorKind::corrupt_model, "eigenfunction holds a non-number");
            level.eigenfunctions(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = row[l].get<double>();
        }
    }
    return level;
}

} // namespace

std::string format_model(const MfpcaModel& model) {
    std::ostringstream out;
    out << "{\n  \"format\": \"mfpca-model\",\n  \"version\": " << model_format_version << ",\n";
    out << "  \"grid\": {\n    \"points\": ";
    write_array(out, model.grid.points);
    out << ",\n    \"weights\": ";
    write_array(out, model.grid.weights);
    out << "\n  },\n  \"mean\": ";
    write_array(out, model.mean);
    out << ",\n  \"level1\": ";
    write_level(out, model.level1);
    out << ",\n  \"level2\": ";
    write_level(out, model.level2);
    out << ",\n  \"sigma_e\": " << real(model.sigma_e) << ",\n";
    const auto& m = model.metadata;
    nlohmann::json selection = m.selection;
    out << "  \"metadata\": {\n"
        << "    \"selection\": " << selection.dump() << ",\n"
        << "    \"pve1_target\": " << real(m.pve1_target) << ",\n"
        << "    \"pve2_target\": " << real(m.pve2_target) << ",\n"
        << "    \"pve1\": " << real(m.pve1) << ",\n"
        << "    \"pve2\": " << real(m.pve2) << ",\n"
        << "    \"n_subjects\": " << m.n_subjects << ",\n"
        << "    \"n_curves\": " << m.n_curves << "\n  }\n}\n";
    return out.str();
}

void save_model(const MfpcaModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << format_model(model);
    if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

MfpcaModel parse_model(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::corrupt_model, std::string("not valid JSON: ") + e.what());
    }
    const auto& version = require(doc, "version");
    if (!version.is_number_integer() || version.get<int>() != model_format_version) {
        throw Error(ErrorKind::version, "model format version " + version.dump() + " is not supported (expected " +
                                            std::to_string(model_format_version) + ")");
    }
    MfpcaModel model;
    const auto& grid = require(doc, "grid");
    model.grid.points = reals(grid, "points");
    model.grid.weights = reals(grid, "weights");
    const std::size_t length = model.grid.points.size();
    const auto mean = reals(doc, "mean");
    model.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    model.level1 = read_level(require(doc, "level1"), length);
    model.level2 = read_level(require(doc, "level2"), length);
    const auto& sigma = require(doc, "sigma_e");
    if (!sigma.is_number()) throw Error(ErrorKind::corrupt_model, "sigma_e is not a number");
    model.sigma_e = sigma.get<double>();

    const auto& meta = require(doc, "metadata");
    try {
        model.metadata.selection = require(meta, "selection").get<std::string>();
        model.metadata.pve1_target = require(meta, "pve1_target").get<double>();
        model.metadata.pve2_target = require(meta, "pve2_target").get<double>();
        model.metadata.pve1 = require(meta, "pve1").get<double>();
        model.metadata.pve2 = require(meta, "pve2").get<double>();
        model.metadata.n_subjects = require(meta, "n_subjects").get<std::size_t>();
        model.metadata.n_curves = require(meta, "n_curves").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::corrupt_model, std::string("bad metadata: ") + e.what());
    }
    model.validate(ErrorKind::corrupt_model);
    return model;
}

MfpcaModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open model file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_model(buffer.str());
}

} // namespace mfpca
