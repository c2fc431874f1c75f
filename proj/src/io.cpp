#include "specbound/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <variant>

#include "json.hpp"

#include "specbound/errors.hpp"

namespace specbound {

namespace {

using nlohmann::json;

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

std::vector<double> read_blob(const std::filesystem::path& dir, const json& layer,
                              const std::string& name) {
    const std::string dtype = layer.at("dtype").get<std::string>();
    if (dtype != "f32le" && dtype != "f64le")
        throw DataError("layer '" + name + "': unknown dtype '" + dtype + "'");
    const std::size_t elem = dtype == "f32le" ? 4 : 8;
    const std::size_t count = layer.at("count").get<std::size_t>();
    const std::size_t offset = layer.at("offset").get<std::size_t>();
    const std::string blob = layer.at("blob").get<std::string>();
    const std::vector<unsigned char> bytes = read_file((dir / blob).string());
    if (offset + count * elem > bytes.size())
        throw DataError("layer '" + name + "': blob '" + blob + "' holds " +
                        std::to_string(bytes.size()) + " bytes, need " +
                        std::to_string(offset + count * elem));
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (elem == 4) {
            float f;
            std::memcpy(&f, bytes.data() + offset + 4 * i, 4);
            out[i] = static_cast<double>(f);
        } else {
            std::memcpy(&out[i], bytes.data() + offset + 8 * i, 8);
        }
    }
    return out;
}

}  // namespace

Network load_network(const std::string& manifest_path) {
    json doc;
    try {
        std::ifstream in(manifest_path);
        if (!in) throw DataError("cannot open manifest: " + manifest_path);
        in >> doc;
    } catch (const json::parse_error& e) {
        throw DataError("manifest parse error in " + manifest_path + ": " + e.what());
    }
    Network net;
    try {
        const json& input = doc.at("input");
        net.in_h = input.at("h").get<int>();
        net.in_w = input.at("w").get<int>();
        net.in_c = input.at("c").get<int>();
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest: bad input shape: ") + e.what());
    }
    const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
    for (const json& layer : doc.at("layers")) {
        const std::string name = layer.value("name", "?");
        try {
            const std::string kind = layer.at("kind").get<std::string>();
            if (kind == "maxpool2") {
                net.layers.emplace_back(MaxPool2{});
            } else if (kind == "conv2d") {
                ConvLayer cv(layer.at("a").get<int>(), layer.at("b").get<int>(),
                             layer.at("q").get<int>());
                const std::vector<double> vals = read_blob(dir, layer, name);
                if (vals.size() != cv.taps.size())
                    throw DataError("layer '" + name + "': count " + std::to_string(vals.size()) +
                                    " does not match b*a*q*q = " + std::to_string(cv.taps.size()));
                cv.taps = vals;
                net.layers.emplace_back(std::move(cv));
            } else if (kind == "fully_connected") {
                Matrix w(layer.at("rows").get<std::size_t>(), layer.at("cols").get<std::size_t>());
                const std::vector<double> vals = read_blob(dir, layer, name);
                if (vals.size() != w.data.size())
                    throw DataError("layer '" + name + "': count " + std::to_string(vals.size()) +
                                    " does not match rows*cols = " + std::to_string(w.data.size()));
                w.data = vals;
                net.layers.emplace_back(FcLayer{std::move(w)});
            } else {
                throw DataError("layer '" + name + "': unknown kind '" + kind + "'");
            }
        } catch (const json::exception& e) {
            throw DataError("layer '" + name + "': " + e.what());
        }
    }
    net.validate();
    return net;
}

void save_network(const Network& net, const std::string& manifest_path,
                  const std::string& dtype) {
    if (dtype != "f32le" && dtype != "f64le") throw UsageError("unknown dtype '" + dtype + "'");
    const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    json doc;
    doc["version"] = 1;
    doc["input"] = {{"h", net.in_h}, {"w", net.in_w}, {"c", net.in_c}};
    doc["layers"] = json::array();
    int idx = 0;
    for (const Layer& l : net.layers) {
        json entry;
        const std::string name = "layer" + std::to_string(idx++);
        entry["name"] = name;
        const std::vector<double>* vals = nullptr;
        if (const auto* cv = std::get_if<ConvLayer>(&l)) {
            entry["kind"] = "conv2d";
            entry["a"] = cv->in_ch;
            entry["b"] = cv->out_ch;
            entry["q"] = cv->q;
            entry["layout"] = "b_a_q_q";
            vals = &cv->taps;
        } else if (std::holds_alternative<MaxPool2>(l)) {
            entry["kind"] = "maxpool2";
        } else {
            const auto& fc = std::get<FcLayer>(l);
            entry["kind"] = "fully_connected";
            entry["rows"] = fc.w.rows;
            entry["cols"] = fc.w.cols;
            entry["layout"] = "row_major";
            vals = &fc.w.data;
        }
        if (vals) {
            const std::string blob = name + ".bin";
            entry["dtype"] = dtype;
            entry["blob"] = blob;
            entry["offset"] = 0;
            entry["count"] = vals->size();
            std::ofstream out(dir / blob, std::ios::binary);
            if (!out) throw DataError("cannot write blob: " + (dir / blob).string());
            for (double v : *vals) {
                if (dtype == "f32le") {
                    const float f = static_cast<float>(v);
                    out.write(reinterpret_cast<const char*>(&f), 4);
                } else {
                    out.write(reinterpret_cast<const char*>(&v), 8);
                }
            }
        }
        doc["layers"].push_back(entry);
    }
    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot write manifest: " + manifest_path);
    out << doc.dump(2) << "\n";
}

ArchSpec load_arch_spec(const std::string& path) {
    json doc;
    try {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open architecture file: " + path);
        in >> doc;
    } catch (const json::parse_error& e) {
        throw DataError("architecture parse error in " + path + ": " + e.what());
    }
    ArchSpec arch;
    try {
        arch.name = doc.at("name").get<std::string>();
        arch.h = doc.at("h").get<std::size_t>();
        for (const json& layer : doc.at("layers")) {
            LayerSpec ls;
            ls.name = layer.value("name", "?");
            const std::string kind = layer.at("kind").get<std::string>();
            if (kind == "conv2d" || kind == "locally_connected2d") {
                ls.kind = kind == "conv2d" ? LayerKind::conv2d : LayerKind::locally_connected2d;
                ls.a = layer.at("a").get<int>();
                ls.b = layer.at("b").get<int>();
                ls.q = layer.at("q").get<int>();
                ls.N = layer.at("N").get<int>();
            } else if (kind == "fully_connected") {
                ls.kind = LayerKind::fully_connected;
                ls.rows = layer.at("rows").get<std::size_t>();
                ls.cols = layer.at("cols").get<std::size_t>();
                ls.s = layer.value("s", std::size_t{0});
            } else {
                throw DataError("layer '" + ls.name + "': unknown kind '" + kind + "'");
            }
            arch.spec.layers.push_back(ls);
        }
    } catch (const json::exception& e) {
        throw DataError("architecture file " + path + ": " + e.what());
    }
    return arch;
}

LabeledDataset load_cifar10_binary(const std::string& path) {
    const std::vector<unsigned char> bytes = read_file(path);
    constexpr std::size_t record = 3073;
    if (bytes.size() % record != 0)
        throw DataError("cifar10: file length " + std::to_string(bytes.size()) +
                        " is not a multiple of 3073: " + path);
    const std::size_t m = bytes.size() / record;
    LabeledDataset data;
    data.images.reserve(m);
    data.labels.reserve(m);
    for (std::size_t r = 0; r < m; ++r) {
        const unsigned char* rec = bytes.data() + r * record;
        if (rec[0] > 9)
            throw DataError("cifar10: label " + std::to_string(rec[0]) + " out of range at record " +
                            std::to_string(r));
        data.labels.push_back(rec[0]);
        Image img(32, 32, 3);
        for (std::size_t i = 0; i < 3072; ++i) img.v[i] = rec[1 + i] / 255.0;
        data.images.push_back(std::move(img));
    }
    data.provenance.assign(m, "base");
    return data;
}

void save_cifar10_binary(const LabeledDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    for (std::size_t r = 0; r < data.size(); ++r) {
        const Image& img = data.images[r];
        if (img.h != 32 || img.w != 32 || img.c != 3)
            throw DataError("cifar10: image " + std::to_string(r) + " is not 32x32x3");
        const unsigned char label = static_cast<unsigned char>(data.labels[r]);
        out.write(reinterpret_cast<const char*>(&label), 1);
        for (double v : img.v) {
            const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            const unsigned char b = static_cast<unsigned char>(std::lround(clamped * 255.0));
            out.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    for (char& c : buf) {
        if (c == '\0') break;
        if (c == ',') c = '.';  // guard against comma-decimal locales
    }
    return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << header << "\n";
    for (const std::vector<double>& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << format_g17(row[i]);
        }
        out << "\n";
    }
}

}  // namespace specbound
