#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace herbrec {

enum class Gender { male, female, unknown };

// Patient attributes attached to a clinical record. Absent optional fields
// stay absent; they are never zero-filled.
struct PatientProfile {
    Gender gender = Gender::unknown;
    int age_bucket = 0;  // floor(age_years / 5)
    std::optional<double> height_cm;
    std::optional<double> weight_kg;
    std::vector<std::string> history;  // condition codes, sorted, unique

    std::optional<double> bmi() const {
        if (!height_cm || !weight_kg || *height_cm <= 0.0) return std::nullopt;
        const double h_m = *height_cm / 100.0;
        return *weight_kg / (h_m * h_m);
    }
};

// One patient visit: symptom set and prescribed herb set, ids resolved
// against the Vocabulary. Sets are stored sorted and duplicate-free.
struct PrescriptionRecord {
    std::string record_id;
    std::optional<PatientProfile> profile;
    std::vector<int> symptoms;
    std::vector<int> herbs;
};

// Stable bijections between names and dense ids, in first-seen order.
class Vocabulary {
public:
    int intern_symptom(const std::string& name);
    int intern_herb(const std::string& name);
    int symptom_id(const std::string& name) const;  // -1 when unknown
    int herb_id(const std::string& name) const;
    const std::string& symptom_name(int id) const { return symptom_names_.at(id); }
    const std::string& herb_name(int id) const { return herb_names_.at(id); }
    int n_symptoms() const { return static_cast<int>(symptom_names_.size()); }
    int n_herbs() const { return static_cast<int>(herb_names_.size()); }
    const std::vector<std::string>& symptom_names() const { return symptom_names_; }
    const std::vector<std::string>& herb_names() const { return herb_names_; }

    bool operator==(const Vocabulary& o) const {
        return symptom_names_ == o.symptom_names_ && herb_names_ == o.herb_names_;
    }

private:
    std::vector<std::string> symptom_names_, herb_names_;
    std::unordered_map<std::string, int> symptom_ids_, herb_ids_;
};

struct Dataset {
    std::vector<PrescriptionRecord> records;
    Vocabulary vocab;
    bool clinical = false;  // whether records carry profiles
};

// The 16 predefined entity kinds.
extern const std::vector<std::string> kEntityKinds;
bool is_known_entity_kind(const std::string& kind);

struct KgEntity {
    std::string name;
    std::string kind;
};

struct KgTriple {
    int head;
    int relation;
    int tail;
    bool operator==(const KgTriple& o) const {
        return head == o.head && relation == o.relation && tail == o.tail;
    }
};

// Typed triple store plus the anchor map tying herb vocabulary ids to their
// KG entities (matched by exact name).
struct KnowledgeGraph {
    std::vector<KgEntity> entities;          // index = entity id
    std::vector<std::string> relations;      // index = relation id
    std::vector<KgTriple> triples;
    std::map<int, int> herb_anchor;          // herb vocab id -> entity id

    int n_entities() const { return static_cast<int>(entities.size()); }
    int n_relations() const { return static_cast<int>(relations.size()); }

    void resolve_anchors(const Vocabulary& vocab);
    bool operator==(const KnowledgeGraph& o) const;
};

struct CoOccurrenceEdge {
    int a;
    int b;       // a < b
    long count;  // number of records where both appear
    bool operator==(const CoOccurrenceEdge& o) const {
        return a == o.a && b == o.b && count == o.count;
    }
};

// Undirected, self-loop-free co-occurrence graph over one item family.
struct CoOccurrenceGraph {
    int node_count = 0;
    long threshold = 1;
    std::vector<CoOccurrenceEdge> edges;  // sorted by (a, b)

    std::vector<std::vector<std::pair<int, long>>> adjacency() const;
};

enum class HerbRole { monarch, minister, assistant_envoy };

const char* role_name(HerbRole role);
HerbRole role_from_name(const std::string& name);

// Role tag per herb id; total on the vocabulary (missing entries default to
// assistant_envoy, the largest and least constrained class).
struct HierarchyLabels {
    std::vector<HerbRole> role;  // size = n_herbs

    static HierarchyLabels uniform_default(int n_herbs) {
        HierarchyLabels l;
        l.role.assign(n_herbs, HerbRole::assistant_envoy);
        return l;
    }
};

}  // namespace herbrec
