#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "polyrag/jsonl.hpp"
#include "polyrag/scorers.hpp"

namespace polyrag {

struct WeightProfile {
    std::string profile_id;
    // One weight per view, ordered relevance, utility, supplement,
    // authority, timeliness.
    std::array<double, 5> weights{};
    enum class Mode { linear, geometric } mode = Mode::linear;
    bool composibility = true;
    int k = 3;
    double eps = 0.3;
    int min_pts = 2;

    bool operator==(const WeightProfile&) const = default;
};

inline void validate_profile(const WeightProfile& p) {
    const std::string where = p.profile_id.empty() ? "profile" : "profile '" + p.profile_id + "'";
    double sum = 0.0;
    for (double w : p.weights) {
        if (!(w >= 0.0)) throw ConfigError(where + ": weights must be >= 0");
        sum += w;
    }
    if (sum <= 0.0) throw ConfigError(where + ": at least one weight must be > 0");
    if (p.k < 1) throw ConfigError(where + ": k must be >= 1");
    if (!(p.eps > 0.0)) throw ConfigError(where + ": eps must be > 0");
    if (p.min_pts < 1) throw ConfigError(where + ": min_pts must be >= 1");
}

inline Json profile_to_json(const WeightProfile& p) {
    Json j;
    j["profile_id"] = p.profile_id;
    j["weights"] = p.weights;
    j["mode"] = p.mode == WeightProfile::Mode::geometric ? "geometric" : "linear";
    j["composibility"] = p.composibility;
    j["k"] = p.k;
    j["eps"] = p.eps;
    j["min_pts"] = p.min_pts;
    return j;
}

inline WeightProfile profile_from_json(const Json& j, long line = -1) {
    WeightProfile p;
    p.profile_id = detail::need_string(j, "profile_id", line);
    const Json& w = detail::need_field(j, "weights", line);
    if (!w.is_array() || w.size() != 5)
        throw DataError("field 'weights' must be an array of 5 numbers", line);
    for (std::size_t i = 0; i < 5; ++i) {
        if (!w[i].is_number()) throw DataError("field 'weights' must be an array of 5 numbers", line);
        p.weights[i] = w[i].get<double>();
    }
    const std::string mode = detail::need_string(j, "mode", line);
    if (mode == "linear") p.mode = WeightProfile::Mode::linear;
    else if (mode == "geometric") p.mode = WeightProfile::Mode::geometric;
    else throw DataError("field 'mode' must be linear|geometric", line);
    if (auto it = j.find("composibility"); it != j.end()) {
        if (!it->is_boolean()) throw DataError("field 'composibility' must be a boolean", line);
        p.composibility = it->get<bool>();
    }
    if (auto it = j.find("k"); it != j.end()) {
        if (!it->is_number_integer()) throw DataError("field 'k' must be an integer", line);
        p.k = it->get<int>();
    }
    if (auto it = j.find("eps"); it != j.end()) {
        if (!it->is_number()) throw DataError("field 'eps' must be a number", line);
        p.eps = it->get<double>();
    }
    if (auto it = j.find("min_pts"); it != j.end()) {
        if (!it->is_number_integer()) throw DataError("field 'min_pts' must be an integer", line);
        p.min_pts = it->get<int>();
    }
    try {
        validate_profile(p);
    } catch (const ConfigError& e) {
        throw DataError(e.what(), line);
    }
    return p;
}

inline std::map<std::string, WeightProfile> load_profiles(const std::filesystem::path& path) {
    std::map<std::string, WeightProfile> out;
    for (const auto& [line, j] : read_jsonl(path)) {
        WeightProfile p = profile_from_json(j, line);
        if (!out.emplace(p.profile_id, p).second)
            throw DataError("duplicate profile_id '" + p.profile_id + "'", line);
    }
    if (out.empty()) throw DataError("no profiles in " + path.string());
    return out;
}

inline void save_profiles(const std::map<std::string, WeightProfile>& profiles,
                          const std::filesystem::path& path) {
    std::vector<Json> rows;
    for (const auto& [_, p] : profiles) rows.push_back(profile_to_json(p));
    write_jsonl(path, rows);
}

// ---- Normalization ---------------------------------------------------------------

enum class NormMethod { fixed, minmax };

// minmax rescales across the query's candidates; fixed applies the view's
// own declared transform to each raw value.
template <typename FixedFn>
std::vector<double> normalize_scores(const std::vector<double>& raw, NormMethod method,
                                     FixedFn fixed_transform) {
    if (method == NormMethod::minmax) return minmax_normalize(raw);
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = fixed_transform(raw[i]);
    return out;
}

// ---- Integration -------------------------------------------------------------------

using ViewValues = std::map<View, double>;

namespace detail {

inline double view_value_or_throw(const ViewValues& values, View v, const std::string& doc_id) {
    auto it = values.find(v);
    if (it == values.end())
        throw DataError("missing score for view '" + std::string(view_name(v)) +
                        "' on document '" + doc_id + "'");
    return it->second;
}

} // namespace detail

// Weighted sum of the five views. Weights are used as given; a view with
// weight zero may be absent entirely.
inline double integrate_linear(const WeightProfile& profile, const std::string& doc_id,
                               const ViewValues& values) {
    double y = 0.0;
    for (std::size_t i = 0; i < kAllViews.size(); ++i) {
        if (profile.weights[i] == 0.0) continue;
        y += profile.weights[i] * detail::view_value_or_throw(values, kAllViews[i], doc_id);
    }
    return y;
}

inline constexpr double kGeometricFloor = 1e-6;

// Weighted geometric mean with weights renormalized to sum 1. Scores are
// floored at a small epsilon so a single zero view cannot veto a document.
inline double integrate_geometric(const WeightProfile& profile, const std::string& doc_id,
                                  const ViewValues& values) {
    const double wsum = std::accumulate(profile.weights.begin(), profile.weights.end(), 0.0);
    double y = 1.0;
    for (std::size_t i = 0; i < kAllViews.size(); ++i) {
        if (profile.weights[i] == 0.0) continue;
        const double v = std::clamp(
            detail::view_value_or_throw(values, kAllViews[i], doc_id), kGeometricFloor, 1.0);
        y *= std::pow(v, profile.weights[i] / wsum);
    }
    return y;
}

inline double integrate(const WeightProfile& profile, const std::string& doc_id,
                        const ViewValues& values) {
    return profile.mode == WeightProfile::Mode::geometric
               ? integrate_geometric(profile, doc_id, values)
               : integrate_linear(profile, doc_id, values);
}

// ---- Topic assignment -----------------------------------------------------------------

struct TopicAssignment {
    std::map<std::string, int> topic_of;

    int topic(const std::string& doc_id) const {
        auto it = topic_of.find(doc_id);
        if (it == topic_of.end()) throw DataError("no topic for document '" + doc_id + "'");
        return it->second;
    }
    std::size_t distinct_topics() const {
        std::set<int> t;
        for (const auto& [_, v] : topic_of) t.insert(v);
        return t.size();
    }
};

// Density clustering. Neighborhoods include the point itself; a point is
// core iff its neighborhood holds at least min_pts points. Cluster labels
// are assigned in seed order; border points go to their nearest core
// (smallest index on ties) so results do not depend on visit order.
// Returns -1 for noise.
template <typename DistFn>
std::vector<int> dbscan(std::size_t n, DistFn dist, double eps, int min_pts) {
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
    if (min_pts < 1) throw ConfigError("min_pts must be >= 1");

    std::vector<std::vector<std::size_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
        neighbors[i].push_back(i);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && dist(i, j) <= eps) neighbors[i].push_back(j);
    }
    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i)
        core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);

    std::vector<int> label(n, -1);
    int clusters = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || label[i] != -1) continue;
        const int id = clusters++;
        std::deque<std::size_t> queue{i};
        label[i] = id;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t v : neighbors[u]) {
                if (!core[v] || label[v] != -1) continue;
                label[v] = id;
                queue.push_back(v);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        double best = std::numeric_limits<double>::infinity();
        int best_label = -1;
        for (std::size_t j = 0; j < n; ++j) {
            if (!core[j]) continue;
            const double d = dist(i, j);
            if (d <= eps && d < best) {
                best = d;
                best_label = label[j];
            }
        }
        label[i] = best_label;
    }
    return label;
}

inline double cosine_distance_safe(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return std::max(0.0, 1.0 - dot / (std::sqrt(na) * std::sqrt(nb)));
}

// Clusters candidate documents by 1 - cosine over their embeddings. Noise
// documents become singleton topics numbered above the cluster range, in
// doc-id order.
inline TopicAssignment assign_topics(const std::vector<std::string>& doc_ids,
                                     const std::vector<std::vector<double>>& embeddings,
                                     double eps, int min_pts) {
    if (doc_ids.size() != embeddings.size())
        throw DataError("one embedding required per document");
    const std::size_t n = doc_ids.size();
    for (std::size_t i = 1; i < n; ++i)
        if (embeddings[i].size() != embeddings[0].size())
            throw DataError("embedding dimension mismatch among candidates");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return doc_ids[a] < doc_ids[b]; });

    const auto labels = dbscan(
        n,
        [&](std::size_t a, std::size_t b) {
            return cosine_distance_safe(embeddings[order[a]], embeddings[order[b]]);
        },
        eps, min_pts);

    int clusters = 0;
    for (int l : labels) clusters = std::max(clusters, l + 1);
    TopicAssignment out;
    int next_singleton = clusters;
    for (std::size_t i = 0; i < n; ++i) {
        const int topic = labels[i] >= 0 ? labels[i] : next_singleton++;
        out.topic_of[doc_ids[order[i]]] = topic;
    }
    return out;
}

// ---- Top-k selection ---------------------------------------------------------------------

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
    int topic_id = 0;

    bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
    std::string query_id;
    std::string profile_id;
    std::vector<RankedEntry> entries;

    bool operator==(const RankedList&) const = default;
};

// Unconstrained: global top-k by (score desc, doc_id asc). Constrained:
// cover each topic with its best document, best topics first, until
// min(k, #topics) are covered, then fill remaining slots globally and
// re-sort. The selected set always spans exactly min(k, #topics) topics.
inline RankedList select_topk(const std::map<std::string, double>& scores,
                              const TopicAssignment& topics, int k, bool composibility,
                              std::string query_id = "", std::string profile_id = "") {
    if (k < 1) throw ConfigError("k must be >= 1");

    std::vector<RankedEntry> all;
    all.reserve(scores.size());
    for (const auto& [doc_id, score] : scores)
        all.push_back({doc_id, score, topics.topic(doc_id)});
    auto before = [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    };
    std::sort(all.begin(), all.end(), before);

    RankedList out;
    out.query_id = std::move(query_id);
    out.profile_id = std::move(profile_id);
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());

    if (!composibility) {
        out.entries.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(want));
        return out;
    }

    std::map<int, RankedEntry> best_of_topic;
    for (const auto& e : all)
        if (!best_of_topic.count(e.topic_id)) best_of_topic[e.topic_id] = e;
    std::vector<RankedEntry> bests;
    for (const auto& [_, e] : best_of_topic) bests.push_back(e);
    std::sort(bests.begin(), bests.end(), before);

    const std::size_t cover = std::min<std::size_t>(want, bests.size());
    std::set<std::string> picked_ids;
    std::vector<RankedEntry> picked;
    for (std::size_t i = 0; i < cover; ++i) {
        picked.push_back(bests[i]);
        picked_ids.insert(bests[i].doc_id);
    }
    for (const auto& e : all) {
        if (picked.size() >= want) break;
        if (picked_ids.insert(e.doc_id).second) picked.push_back(e);
    }
    std::sort(picked.begin(), picked.end(), before);
    out.entries = std::move(picked);
    return out;
}

} // namespace polyrag
