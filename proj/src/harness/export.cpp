#include "hmsn/harness/export.hpp"

#include "hmsn/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hmsn::harness {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f << text;
  f.flush();
  if (!f) throw Error("write failed: " + path);
}

}  // namespace

void write_embeddings_csv(const Representations& r, const std::string& path) {
  std::string out = "index,label";
  for (Eigen::Index j = 0; j < r.reps.cols(); ++j) out += ",z" + std::to_string(j);
  out += '\n';
  for (Eigen::Index i = 0; i < r.reps.rows(); ++i) {
    out += std::to_string(i) + ',' + std::to_string(r.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < r.reps.cols(); ++j) out += ',' + num(r.reps(i, j));
    out += '\n';
  }
  write_file(path, out);
}

void export_embeddings(const Model& model, const Dataset& data, const std::string& path) {
  write_embeddings_csv(extract_representations(model, data, eval_pipeline(model.config)), path);
}

void export_prototypes(const prototypes::PrototypeBank& bank, const std::string& path) {
  std::string out = "index";
  for (int j = 0; j < bank.dim(); ++j) out += ",p" + std::to_string(j);
  out += '\n';
  for (int i = 0; i < bank.size(); ++i) {
    out += std::to_string(i);
    for (int j = 0; j < bank.dim(); ++j) out += ',' + num(bank.vectors(i, j));
    out += '\n';
  }
  write_file(path, out);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  CsvTable t;
  std::string line;
  std::size_t offset = 0;
  bool first = true;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      while (std::getline(ss, cell, ',')) t.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw FormatError("bad number '" + cell + "' in " + path, line_start);
      }
    }
    if (row.size() != t.header.size()) throw FormatError("wrong column count in " + path, line_start);
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

constexpr double kSize = 512.0;
constexpr double kCenter = 256.0;
constexpr double kRadius = 240.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
                                "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31"};

// Column index of the first coordinate; requires exactly two coordinates.
std::size_t coord_start(const CsvTable& t, std::size_t leading, const char* what) {
  if (t.header.size() != leading + 2)
    throw ShapeError(std::string(what) + " must have exactly 2 coordinate columns, got " +
                     std::to_string(static_cast<long>(t.header.size()) - static_cast<long>(leading)));
  return leading;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_disk_svg(const CsvTable& emb, const CsvTable* protos) {
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"512\" height=\"512\" viewBox=\"0 0 512 512\">\n";
  svg += "<rect width=\"" + px(kSize) + "\" height=\"" + px(kSize) + "\" fill=\"white\"/>\n";
  svg += "<circle cx=\"256.000\" cy=\"256.000\" r=\"240.000\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
  if (!emb.header.empty()) {
    const std::size_t c0 = coord_start(emb, 2, "embeddings");
    for (const auto& row : emb.rows) {
      const int label = static_cast<int>(row[1]);
      const std::size_t color = static_cast<std::size_t>(label < 0 ? 0 : label) % std::size(kPalette);
      svg += "<circle cx=\"" + px(kCenter + kRadius * row[c0]) + "\" cy=\"" + px(kCenter - kRadius * row[c0 + 1]) +
             "\" r=\"2.000\" fill=\"" + kPalette[color] + "\"/>\n";
    }
  }
  if (protos && !protos->header.empty()) {
    const std::size_t c0 = coord_start(*protos, 1, "prototypes");
    for (const auto& row : protos->rows) {
      const double x = kCenter + kRadius * row[c0];
      const double y = kCenter - kRadius * row[c0 + 1];
      svg += "<rect x=\"" + px(x - 4.0) + "\" y=\"" + px(y - 4.0) + "\" width=\"8.000\" height=\"8.000\" fill=\"red\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

void plot_disk(const std::string& embeddings_csv, const std::string& prototypes_csv, const std::string& out_path) {
  const CsvTable emb = read_csv(embeddings_csv);
  CsvTable protos;
  if (!prototypes_csv.empty()) protos = read_csv(prototypes_csv);
  write_file(out_path, render_disk_svg(emb, prototypes_csv.empty() ? nullptr : &protos));
}

}  // namespace hmsn::harness
