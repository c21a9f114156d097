#pragma once

#include "herbrec/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace herbrec {

enum class CorpusFormat { clinical_tsv, public_tsv };

CorpusFormat corpus_format_from_name(const std::string& name);
const char* corpus_format_name(CorpusFormat f);

// Loading ---------------------------------------------------------------------

// public_tsv: `symptoms<TAB>herbs`, each a `;`-separated name list.
// clinical_tsv: record_id, gender, age, height_cm, weight_kg, history,
// symptoms, herbs; empty string marks an absent optional field.
Dataset load_prescriptions(const std::string& path, CorpusFormat format);
Dataset parse_prescriptions(std::istream& in, CorpusFormat format,
                            const std::string& origin);

void save_prescriptions(const Dataset& ds, const std::string& path);

// Filtering / splitting ---------------------------------------------------------

// Iterative removal of symptom-herb pairs occurring in fewer than min_count
// records. Each round recounts all pairs, then for every sub-threshold pair
// drops the member with the lower corpus frequency (ties drop the herb) from
// every record containing the pair; emptied records are discarded. Runs to
// fixpoint unless one_pass is set.
std::vector<PrescriptionRecord> kernel_filter(std::vector<PrescriptionRecord> records,
                                              long min_count = 10,
                                              bool one_pass = false);

// Random permutation split; |train| = round(train_fraction * N).
std::pair<std::vector<PrescriptionRecord>, std::vector<PrescriptionRecord>>
split_dataset(const std::vector<PrescriptionRecord>& records, double train_fraction,
              std::uint64_t seed);

// Co-occurrence graphs -----------------------------------------------------------

// Edge (i, j) iff items i, j appear together in >= threshold records.
std::pair<CoOccurrenceGraph, CoOccurrenceGraph>
build_cooccurrence_graphs(const std::vector<PrescriptionRecord>& records,
                          int n_symptoms, int n_herbs, long threshold);

// Knowledge graph ------------------------------------------------------------------

KnowledgeGraph load_kg(const std::string& path, const Vocabulary* vocab = nullptr);
KnowledgeGraph parse_kg(std::istream& in, const std::string& origin,
                        const Vocabulary* vocab = nullptr);
void save_kg(const KnowledgeGraph& kg, const std::string& path);

// Hierarchy labels ------------------------------------------------------------------

// `herb_name<TAB>role`; herbs not listed default to assistant_envoy.
HierarchyLabels load_hierarchy_labels(const std::string& path, const Vocabulary& vocab);
void save_hierarchy_labels(const HierarchyLabels& labels, const Vocabulary& vocab,
                           const std::string& path);

// Helpers ---------------------------------------------------------------------------

int age_to_bucket(double age_years);

// Per-herb occurrence counts over records (number of records containing the herb).
std::vector<long> herb_frequencies(const std::vector<PrescriptionRecord>& records,
                                   int n_herbs);

}  // namespace herbrec
