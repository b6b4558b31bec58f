#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "molexplain/datasets.hpp"
#include "molexplain/rng.hpp"

namespace molexplain::datasets {

namespace {

std::vector<std::string> split_cells(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  if (line.empty()) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

LabeledSet LabeledSet::select(const std::vector<std::size_t>& rows) const {
  LabeledSet out;
  out.task_names = task_names;
  out.labels = labels.select(rows);
  for (std::size_t r : rows) {
    out.smiles.push_back(smiles[r]);
    out.molecules.push_back(molecules[r]);
    if (!split.empty()) out.split.push_back(split[r]);
  }
  return out;
}

LabeledSet LabeledSet::subset(SplitTag tag) const {
  if (split.size() != molecules.size()) throw UserError("data set has not been split");
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < split.size(); ++r) {
    if (split[r] == tag) rows.push_back(r);
  }
  return select(rows);
}

TableFormat table_format_from_name(const std::string& name) {
  if (name == "smiles-tsv" || name == "tsv") return TableFormat::SmilesTsv;
  if (name == "csv") return TableFormat::Csv;
  throw UserError("unknown table format '" + name + "' (expected smiles-tsv or csv)");
}

TableLoad parse_table(const std::string& text, TableFormat format) {
  const char sep = format == TableFormat::Csv ? ',' : '\t';
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_cells(line, sep);
      break;
    }
  }
  if (header.empty()) throw UserError("table is empty");
  for (auto& h : header) h = trim(h);
  if (header[0] != "smiles") {
    throw UserError("table header must start with a 'smiles' column, found '" + header[0] + "'");
  }
  TableLoad out;
  out.set.task_names.assign(header.begin() + 1, header.end());
  const std::size_t tasks = out.set.task_names.size();
  out.set.labels = LabelMatrix(0, tasks);
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_cells(line, sep);
    if (cells.size() != header.size()) {
      throw UserError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    std::vector<std::int8_t> row(tasks, LabelMatrix::kMissing);
    for (std::size_t t = 0; t < tasks; ++t) {
      const std::string cell = trim(cells[t + 1]);
      if (cell.empty()) continue;
      if (cell == "0") {
        row[t] = 0;
      } else if (cell == "1") {
        row[t] = 1;
      } else {
        throw UserError("line " + std::to_string(line_no) + ": label '" + cell + "' is not 0, 1 or empty");
      }
    }
    const std::string smi = trim(cells[0]);
    chem::MolecularGraph g;
    try {
      g = chem::parse_smiles(smi);
    } catch (const UserError& e) {
      out.skipped.push_back({line_no, e.what()});
      continue;
    }
    if (g.empty()) {
      out.skipped.push_back({line_no, "empty molecule"});
      continue;
    }
    if (!seen.insert(smi).second) ++out.duplicates;
    out.set.smiles.push_back(smi);
    out.set.molecules.push_back(std::move(g));
    out.set.labels.append_row(row);
  }
  if (out.set.molecules.empty()) throw UserError("table has no valid rows");
  return out;
}

TableLoad load_table(const std::string& path, TableFormat format) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open table '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str(), format);
}

std::string format_table(const LabeledSet& set) {
  std::string out = "smiles";
  for (const std::string& t : set.task_names) out += "\t" + t;
  out += "\n";
  for (std::size_t r = 0; r < set.smiles.size(); ++r) {
    out += set.smiles[r];
    for (std::size_t t = 0; t < set.labels.tasks(); ++t) {
      out += "\t";
      if (!set.labels.missing(r, t)) out += std::to_string(set.labels.at(r, t));
    }
    out += "\n";
  }
  return out;
}

void write_table(const std::string& path, const LabeledSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write table '" + path + "'");
  out << format_table(set);
  if (!out) throw UserError("failed writing table '" + path + "'");
}

std::vector<SplitTag> split(const LabeledSet& set, const std::array<double, 3>& fractions, std::uint64_t seed,
                            bool stratify) {
  for (double f : fractions) {
    if (f < 0.0) throw UserError("split fractions must be non-negative");
  }
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw UserError("split fractions must sum to 1");

  const std::size_t n = set.size();
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < n; ++r) {
    const int key = stratify && set.labels.tasks() > 0 ? set.labels.at(r, 0) : 0;
    groups[key].push_back(r);
  }
  const auto parts = static_cast<std::size_t>(std::count_if(fractions.begin(), fractions.end(), [](double f) { return f > 0.0; }));
  std::vector<SplitTag> tags(n, SplitTag::Train);
  Rng rng(seed);
  for (auto& [key, rows] : groups) {
    if (stratify && rows.size() < parts) {
      throw UserError("class " + std::to_string(key) + " of task 0 has " + std::to_string(rows.size()) +
                      " samples, too few to stratify over " + std::to_string(parts) + " partitions");
    }
    rng.shuffle(rows);
    const auto m = static_cast<double>(rows.size());
    auto n_train = static_cast<std::size_t>(std::llround(m * fractions[0]));
    auto n_valid = static_cast<std::size_t>(std::llround(m * fractions[1]));
    n_train = std::min(n_train, rows.size());
    n_valid = std::min(n_valid, rows.size() - n_train);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      tags[rows[i]] = i < n_train ? SplitTag::Train : (i < n_train + n_valid ? SplitTag::Valid : SplitTag::Test);
    }
  }
  return tags;
}

}  // namespace molexplain::datasets
