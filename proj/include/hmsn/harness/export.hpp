#pragma once

#include "hmsn/harness/model.hpp"

#include <string>
#include <vector>

namespace hmsn::harness {

// CSV "index,label,z0,...,z{d-1}", one row per image, using the evaluation
// pipeline of the model's config.
void export_embeddings(const Model& model, const Dataset& data, const std::string& path);
void write_embeddings_csv(const Representations& reps, const std::string& path);

// CSV "index,p0,...,p{d-1}".
void export_prototypes(const prototypes::PrototypeBank& bank, const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::string& path);

// SVG of the unit disk (dashed boundary), class-coloured embedding points
// and prototype markers. Both CSVs must carry exactly two coordinate
// columns; `prototypes_csv` may be empty.
void plot_disk(const std::string& embeddings_csv, const std::string& prototypes_csv, const std::string& out_path);
std::string render_disk_svg(const CsvTable& embeddings, const CsvTable* prototypes);

}  // namespace hmsn::harness
