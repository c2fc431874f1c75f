#pragma once

#include <string>
#include <utility>
#include <vector>

#include "specbound/network.hpp"

namespace specbound {

// JSON manifest describing an ordered list of weight layers; tensor data
// lives in separate little-endian binary blobs (dtype f32le or f64le).
// Conv taps are stored [b][a][q][q] row-major; FC matrices row-major.
// load_network reassembles a runnable Network (input shape + maxpool2
// entries come from the manifest's non-weight records).
Network load_network(const std::string& manifest_path);
void save_network(const Network& net, const std::string& manifest_path,
                  const std::string& dtype = "f64le");

// Architecture description file: name, h (widest layer width), and layer
// table (conv2d: a, b, q, N; fully_connected: rows, cols, optional s).
struct ArchSpec {
    std::string name;
    NetworkSpec spec;
    std::size_t h = 0;
};
ArchSpec load_arch_spec(const std::string& path);

LabeledDataset load_cifar10_binary(const std::string& path);
void save_cifar10_binary(const LabeledDataset& data, const std::string& path);

// %.17g with '.' decimal point regardless of locale
std::string format_g17(double v);

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace specbound
