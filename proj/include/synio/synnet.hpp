#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "synio/gpid.hpp"

namespace synio::net {

/// Weighted symmetric synergy matrix over an industry's inputs. Weights are
/// corrected synergy scores floored at 0; the diagonal is zero.
struct SynergyNetwork {
    std::string industry;
    int cluster = -1;
    std::vector<std::string> nodes;
    Eigen::MatrixXd weights;

    std::size_t node_count() const { return nodes.size(); }
    double strength(int i) const { return weights.row(i).sum(); }
};

/// Binary backbone of a synergy network. Retained edges carry their source
/// weights in `provenance`.
struct BackboneNetwork {
    std::string industry;
    int cluster = -1;
    std::vector<std::string> nodes;
    Eigen::MatrixXi adjacency;
    Eigen::MatrixXd provenance;
    bool swap_limited = false;  // null sampling could not swap (< 2 edges)

    std::size_t edge_count() const;
    std::vector<int> degrees() const;
};

struct BuildReport {
    std::size_t missing_pairs = 0;  // absent scores treated as weight 0
};

/// Scores are keyed by input pair (either order); missing pairs become weight
/// 0 and are counted in the report. Conflicting duplicates are an error.
SynergyNetwork build_synergy_network(const std::map<std::pair<std::string, std::string>, pid::PIDResult>& scores,
                                     const std::vector<std::string>& nodes, const std::string& industry, int cluster,
                                     BuildReport* report = nullptr);

// ---------------------------------------------------------------------------
// Backbone extraction
// ---------------------------------------------------------------------------

enum class BackboneFilter {
    noise_corrected,  // posterior-variance significance filter (default)
    disparity,        // per-endpoint weight-share filter
};

struct BackboneOptions {
    BackboneFilter filter = BackboneFilter::noise_corrected;
    /// Noise-corrected: edge kept iff score - delta * sdev > 0.
    double delta = 1.6448536269514722;  // one-sided 95% normal quantile
    /// Disparity: edge kept iff min endpoint p-value < alpha.
    double alpha = 0.05;
};

struct EdgeSignificance {
    int i = 0;
    int j = 0;
    double weight = 0.0;
    double score = 0.0;  // noise-corrected score, or min endpoint p-value
    double sdev = 0.0;   // noise-corrected only
    bool kept = false;
};

/// Per-edge filter diagnostics for every positive-weight edge (i < j).
std::vector<EdgeSignificance> edge_significance(const SynergyNetwork& net, const BackboneOptions& options = {});

/// Keeps the statistically significant edges; the result may be empty. An
/// all-zero network is an error.
BackboneNetwork extract_backbone(const SynergyNetwork& net, const BackboneOptions& options = {});

// ---------------------------------------------------------------------------
// Topology statistics
// ---------------------------------------------------------------------------

/// Principal eigenvector of the binary adjacency restricted to the largest
/// connected component (ties: lowest node index); other nodes get 0.
/// Nonnegative, unit Euclidean norm. Power iteration to 1e-10.
Eigen::VectorXd eigenvector_centrality(const BackboneNetwork& backbone);

/// Local clustering coefficient; nodes of degree < 2 get 0.
Eigen::VectorXd clustering_coefficients(const BackboneNetwork& backbone);

/// Largest eigenvalue of the weighted symmetric matrix (0 for a zero matrix).
double spectral_radius(const SynergyNetwork& net);

enum class NodeDistribution { strength, uniform };

struct VarianceResult {
    double value = 0.0;
    bool used_largest_component = false;
};

/// Variance of the node distribution under the effective-resistance distance:
/// half the double sum of p_i p_j Omega_ij. p is the normalized node strength
/// (or uniform over the support). Disconnected support falls back to the
/// largest component with a flag.
VarianceResult network_variance(const SynergyNetwork& net, NodeDistribution distribution = NodeDistribution::strength);

/// Same, with an explicit node distribution over the full node set; the
/// distribution must be supported inside one connected component.
double effective_resistance_variance(const Eigen::MatrixXd& weights, const Eigen::VectorXd& p);

/// Mean positive incident weight per node; isolated nodes get 0.
Eigen::VectorXd node_mean_synergy(const SynergyNetwork& net);

struct NetworkStats {
    std::vector<std::string> nodes;
    Eigen::VectorXd centrality;
    Eigen::VectorXd clustering;
    Eigen::VectorXd mean_synergy;
    double spectral_radius = 0.0;
    double network_variance = 0.0;
    bool variance_defined = false;
    bool variance_on_largest_component = false;
    bool backbone_empty = false;
};

NetworkStats compute_stats(const SynergyNetwork& net, const BackboneNetwork& backbone,
                           NodeDistribution distribution = NodeDistribution::strength);

// ---------------------------------------------------------------------------
// Null model and sector mixing
// ---------------------------------------------------------------------------

/// Degree-preserving double-edge-swap randomizations: 10x edge-count
/// attempted swaps per sample, self-loops and multi-edges rejected.
/// Deterministic per (seed, sample index). Inputs with < 2 edges come back as
/// flagged copies.
std::vector<BackboneNetwork> null_ensemble(const BackboneNetwork& backbone, int samples, std::uint64_t seed);

struct MixingProbabilities {
    // Unordered sector pair (first <= second) -> fraction of edges.
    std::map<std::pair<std::string, std::string>, double> probability;
    bool defined = false;  // false when the backbone has no edges
};

/// Every node must be mapped to a sector. Probabilities cover all unordered
/// pairs of the sectors present in the map and sum to 1 when edges exist.
MixingProbabilities sector_mixing(const BackboneNetwork& backbone,
                                  const std::map<std::string, std::string>& sector_of);

struct MixingCell {
    double empirical_mean = 0.0;
    double null_mean = 0.0;
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    std::string stars;
    bool defined = false;  // false: degenerate variance or too few observations
    std::size_t n_empirical = 0;
    std::size_t n_null = 0;
};

struct MixingSummary {
    std::map<std::pair<std::string, std::string>, MixingCell> cells;
};

/// Welch tests of empirical vs null mixing probabilities per sector pair.
/// Undefined networks are skipped; pairs absent from a network count as 0.
MixingSummary mixing_ttest(const std::vector<MixingProbabilities>& empirical,
                           const std::vector<MixingProbabilities>& null_samples);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string network_to_edge_list(const SynergyNetwork& net);       // node_i,node_j,weight
std::string backbone_to_edge_list(const BackboneNetwork& backbone);  // node_i,node_j,weight,source_weight
std::string network_header_json(const std::string& industry, int cluster, const std::vector<std::string>& nodes);
std::string stats_to_delimited(const NetworkStats& stats);  // node,centrality,clustering,mean_synergy
std::string stats_header_json(const NetworkStats& stats);
std::string mixing_summary_to_delimited(const MixingSummary& summary);

}  // namespace synio::net
