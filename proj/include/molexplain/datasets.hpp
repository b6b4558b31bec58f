#pragma once
// Synthetic data sets (alcohol toy task, planted-substructure task), table
// ingestion and deterministic splits.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molexplain/chem.hpp"
#include "molexplain/labels.hpp"

namespace molexplain::datasets {

enum class SplitTag { Train, Valid, Test };

struct LabeledSet {
  std::vector<std::string> smiles;
  std::vector<chem::MolecularGraph> molecules;
  std::vector<std::string> task_names;
  LabelMatrix labels;
  std::vector<SplitTag> split;  // empty until split() is applied

  std::size_t size() const { return molecules.size(); }
  // Rows tagged `tag`, in original order.
  LabeledSet subset(SplitTag tag) const;
  LabeledSet select(const std::vector<std::size_t>& rows) const;
};

// Class counts default to the published toy-set ratio scaled to 5,000.
struct AlcoholConfig {
  std::size_t positives = 220;
  std::size_t negatives = 4627;  // no oxygen at all
  std::size_t acids = 153;       // carboxylic acids, no other hydroxy group
  int min_atoms = 4;             // heavy atoms of the emitted molecule
  int max_atoms = 12;
  double ring_probability = 0.3;
  std::optional<std::uint64_t> seed;

  void validate() const;
};

inline constexpr const char* kAlcoholSmarts = "[CX4][OH]";
inline constexpr const char* kCarboxylicAcidSmarts = "C(=O)[OH]";

// Label rule: hydroxy on a saturated carbon and no carboxylic acid.
bool alcohol_label(const chem::MolecularGraph& g);

// Molecules are emitted in class order: positives, negatives, acids.
LabeledSet generate_alcohol_set(const AlcoholConfig& cfg);

struct PlantedConfig {
  std::vector<std::string> patterns = {"N=N", "C1OC1", "[N+](=O)[O-]"};
  std::size_t positives = 2500;
  std::size_t negatives = 2500;
  int min_atoms = 6;
  int max_atoms = 14;
  double ring_probability = 0.3;
  std::optional<std::uint64_t> seed;
  int max_retries = 200;

  void validate() const;
};

// Positives carry one planted fragment (cycled through the list); negatives
// match none of the patterns. Scaffolds use C, N, O, S and halogens.
LabeledSet generate_planted_set(const PlantedConfig& cfg);

enum class TableFormat { SmilesTsv, Csv };

TableFormat table_format_from_name(const std::string& name);

struct SkippedRow {
  std::size_t line = 0;
  std::string reason;
};

struct TableLoad {
  LabeledSet set;
  std::vector<SkippedRow> skipped;
  std::size_t duplicates = 0;  // rows whose SMILES repeats an earlier row
};

// Header: smiles then one column per task; empty cells are masked labels.
TableLoad load_table(const std::string& path, TableFormat format);
TableLoad parse_table(const std::string& text, TableFormat format);

void write_table(const std::string& path, const LabeledSet& set);
std::string format_table(const LabeledSet& set);

// Deterministic train/valid/test tags. With stratify, each class of task 0
// (including missing) is divided separately.
std::vector<SplitTag> split(const LabeledSet& set, const std::array<double, 3>& fractions, std::uint64_t seed,
                            bool stratify);

}  // namespace molexplain::datasets
