#include "synio/synnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <set>
#include <sstream>

#include "json.hpp"

#include "synio/common.hpp"
#include "synio/stats.hpp"

namespace synio::net {
namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey ordered(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

std::vector<EdgeKey> positive_edges(const Eigen::MatrixXd& w) {
    std::vector<EdgeKey> edges;
    for (int i = 0; i < w.rows(); ++i)
        for (int j = i + 1; j < w.cols(); ++j)
            if (w(i, j) > 0.0) edges.push_back({i, j});
    return edges;
}

std::vector<EdgeKey> backbone_edges(const Eigen::MatrixXi& adj) {
    std::vector<EdgeKey> edges;
    for (int i = 0; i < adj.rows(); ++i)
        for (int j = i + 1; j < adj.cols(); ++j)
            if (adj(i, j) != 0) edges.push_back({i, j});
    return edges;
}

// Connected components over an abstract neighbor test; returns the member
// lists sorted by node index.
template <typename Linked>
std::vector<std::vector<int>> components_of(int n, const std::vector<int>& nodes, Linked linked) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<char> eligible(static_cast<std::size_t>(n), 0);
    for (int v : nodes) eligible[static_cast<std::size_t>(v)] = 1;
    std::vector<std::vector<int>> comps;
    for (int start : nodes) {
        if (seen[static_cast<std::size_t>(start)]) continue;
        std::vector<int> comp;
        std::deque<int> queue{start};
        seen[static_cast<std::size_t>(start)] = 1;
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            comp.push_back(v);
            for (int u : nodes) {
                if (seen[static_cast<std::size_t>(u)] || !eligible[static_cast<std::size_t>(u)]) continue;
                if (linked(v, u)) {
                    seen[static_cast<std::size_t>(u)] = 1;
                    queue.push_back(u);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

// Largest component; ties broken by the lowest contained node index.
const std::vector<int>& pick_largest(const std::vector<std::vector<int>>& comps) {
    const std::vector<int>* best = &comps.front();
    for (const auto& c : comps) {
        if (c.size() > best->size() || (c.size() == best->size() && c.front() < best->front())) best = &c;
    }
    return *best;
}

// Dominant eigenpair of a symmetric nonnegative matrix via power iteration on
// the diagonally shifted matrix (keeps the spectrum nonnegative so the
// iteration cannot oscillate).
std::pair<double, Eigen::VectorXd> dominant_eigenpair(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    double shift = 0.0;
    for (int i = 0; i < n; ++i) shift = std::max(shift, m.row(i).sum());
    shift = std::max(shift, 1.0);
    Eigen::MatrixXd b = m + shift * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lambda = shift;
    for (int iter = 0; iter < 100000; ++iter) {
        Eigen::VectorXd next = b * v;
        double norm = next.norm();
        if (norm == 0.0) break;
        next /= norm;
        lambda = next.dot(b * next);
        if ((next - v).lpNorm<Eigen::Infinity>() < 1e-10) {
            v = next;
            break;
        }
        v = next;
    }
    return {lambda - shift, v.cwiseAbs()};
}

}  // namespace

std::size_t BackboneNetwork::edge_count() const {
    std::size_t count = 0;
    for (int i = 0; i < adjacency.rows(); ++i)
        for (int j = i + 1; j < adjacency.cols(); ++j)
            if (adjacency(i, j) != 0) ++count;
    return count;
}

std::vector<int> BackboneNetwork::degrees() const {
    std::vector<int> deg(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) deg[i] = adjacency.row(static_cast<int>(i)).sum();
    return deg;
}

SynergyNetwork build_synergy_network(const std::map<std::pair<std::string, std::string>, pid::PIDResult>& scores,
                                     const std::vector<std::string>& nodes, const std::string& industry, int cluster,
                                     BuildReport* report) {
    if (nodes.size() < 2) throw ValidationError("synergy network needs at least two nodes");
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!index.emplace(nodes[i], static_cast<int>(i)).second)
            throw ValidationError("duplicate node: " + nodes[i]);
    }
    for (const auto& [key, unused] : scores) {
        (void)unused;
        if (!index.count(key.first)) throw ValidationError("score references unknown node: " + key.first);
        if (!index.count(key.second)) throw ValidationError("score references unknown node: " + key.second);
        if (key.first == key.second) throw ValidationError("self-pair score: " + key.first);
    }

    SynergyNetwork net;
    net.industry = industry;
    net.cluster = cluster;
    net.nodes = nodes;
    const int n = static_cast<int>(nodes.size());
    net.weights = Eigen::MatrixXd::Zero(n, n);

    std::size_t missing = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            auto fwd = scores.find({nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)]});
            auto rev = scores.find({nodes[static_cast<std::size_t>(j)], nodes[static_cast<std::size_t>(i)]});
            if (fwd != scores.end() && rev != scores.end() &&
                fwd->second.synergy_corrected != rev->second.synergy_corrected) {
                throw ValidationError("conflicting duplicate scores for pair " + nodes[static_cast<std::size_t>(i)] +
                                      "," + nodes[static_cast<std::size_t>(j)]);
            }
            const pid::PIDResult* result = nullptr;
            if (fwd != scores.end())
                result = &fwd->second;
            else if (rev != scores.end())
                result = &rev->second;
            if (result == nullptr) {
                ++missing;
                continue;
            }
            double w = std::max(0.0, result->synergy_corrected);
            net.weights(i, j) = w;
            net.weights(j, i) = w;
        }
    }
    if (report != nullptr) report->missing_pairs = missing;
    return net;
}

std::vector<EdgeSignificance> edge_significance(const SynergyNetwork& net, const BackboneOptions& options) {
    const Eigen::MatrixXd& w = net.weights;
    std::vector<EdgeSignificance> out;
    auto edges = positive_edges(w);
    if (edges.empty()) return out;

    Eigen::VectorXd strength = w.rowwise().sum();
    const double total = w.sum();  // each undirected edge counted twice

    if (options.filter == BackboneFilter::disparity) {
        std::vector<int> degree(static_cast<std::size_t>(w.rows()), 0);
        for (const auto& [i, j] : edges) {
            ++degree[static_cast<std::size_t>(i)];
            ++degree[static_cast<std::size_t>(j)];
        }
        auto endpoint_p = [&](int node, double weight) {
            int k = degree[static_cast<std::size_t>(node)];
            if (k <= 1) return 1.0;
            return std::pow(1.0 - weight / strength(node), k - 1);
        };
        for (const auto& [i, j] : edges) {
            EdgeSignificance sig;
            sig.i = i;
            sig.j = j;
            sig.weight = w(i, j);
            sig.score = std::min(endpoint_p(i, sig.weight), endpoint_p(j, sig.weight));
            sig.sdev = 0.0;
            sig.kept = sig.score < options.alpha;
            out.push_back(sig);
        }
        return out;
    }

    for (const auto& [i, j] : edges) {
        EdgeSignificance sig;
        sig.i = i;
        sig.j = j;
        sig.weight = w(i, j);
        const double nij = sig.weight;
        const double ni = strength(i);
        const double nj = strength(j);
        const double kappa = total / (ni * nj);
        sig.score = (kappa * nij - 1.0) / (kappa * nij + 1.0);

        const double mean_prior = (ni * nj) / (total * total);
        const double var_prior =
            (ni * nj * (total - ni) * (total - nj)) / (total * total * total * total * (total - 1.0));
        double sdev = 0.0;
        if (std::isfinite(var_prior) && var_prior > 0.0) {
            const double alpha_prior = ((mean_prior * mean_prior / var_prior) * (1.0 - mean_prior)) - mean_prior;
            const double beta_prior = (alpha_prior / mean_prior) - alpha_prior;
            const double alpha_post = alpha_prior + nij;
            const double beta_post = total - nij + beta_prior;
            const double expected = alpha_post / (alpha_post + beta_post);
            const double variance_nij = expected * (1.0 - expected) * total;
            const double d = 1.0 / (ni * nj) - total * (ni + nj) / ((ni * nj) * (ni * nj));
            const double denom = (kappa * nij + 1.0) * (kappa * nij + 1.0);
            const double factor = (2.0 * (kappa + nij * d)) / denom;
            const double variance_cij = variance_nij * factor * factor;
            if (std::isfinite(variance_cij) && variance_cij > 0.0) sdev = std::sqrt(variance_cij);
        }
        sig.sdev = sdev;
        sig.kept = sig.score - options.delta * sig.sdev > 0.0;
        out.push_back(sig);
    }
    return out;
}

BackboneNetwork extract_backbone(const SynergyNetwork& net, const BackboneOptions& options) {
    if (net.weights.rows() != net.weights.cols() ||
        net.weights.rows() != static_cast<Eigen::Index>(net.nodes.size()))
        throw ValidationError("weight matrix does not match node list");
    if (positive_edges(net.weights).empty())
        throw DegenerateInputError("cannot extract a backbone from an all-zero network");

    BackboneNetwork bb;
    bb.industry = net.industry;
    bb.cluster = net.cluster;
    bb.nodes = net.nodes;
    const int n = static_cast<int>(net.nodes.size());
    bb.adjacency = Eigen::MatrixXi::Zero(n, n);
    bb.provenance = Eigen::MatrixXd::Zero(n, n);
    for (const auto& sig : edge_significance(net, options)) {
        if (!sig.kept) continue;
        bb.adjacency(sig.i, sig.j) = 1;
        bb.adjacency(sig.j, sig.i) = 1;
        bb.provenance(sig.i, sig.j) = sig.weight;
        bb.provenance(sig.j, sig.i) = sig.weight;
    }
    return bb;
}

Eigen::VectorXd eigenvector_centrality(const BackboneNetwork& backbone) {
    const int n = static_cast<int>(backbone.nodes.size());
    if (backbone.edge_count() == 0) throw ValidationError("eigenvector centrality needs at least one edge");

    std::vector<int> linked_nodes;
    for (int i = 0; i < n; ++i)
        if (backbone.adjacency.row(i).sum() > 0) linked_nodes.push_back(i);
    auto comps = components_of(n, linked_nodes,
                               [&](int a, int b) { return backbone.adjacency(a, b) != 0; });
    const std::vector<int>& comp = pick_largest(comps);

    const int m = static_cast<int>(comp.size());
    Eigen::MatrixXd sub(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) sub(a, b) = backbone.adjacency(comp[static_cast<std::size_t>(a)],
                                                                   comp[static_cast<std::size_t>(b)]);
    auto [lambda, vec] = dominant_eigenpair(sub);
    (void)lambda;
    vec /= vec.norm();

    Eigen::VectorXd centrality = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < m; ++a) centrality(comp[static_cast<std::size_t>(a)]) = vec(a);
    return centrality;
}

Eigen::VectorXd clustering_coefficients(const BackboneNetwork& backbone) {
    const int n = static_cast<int>(backbone.nodes.size());
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> nbrs;
        for (int j = 0; j < n; ++j)
            if (backbone.adjacency(i, j) != 0) nbrs.push_back(j);
        const int k = static_cast<int>(nbrs.size());
        if (k < 2) continue;
        int closed = 0;
        for (std::size_t a = 0; a < nbrs.size(); ++a)
            for (std::size_t b = a + 1; b < nbrs.size(); ++b)
                if (backbone.adjacency(nbrs[a], nbrs[b]) != 0) ++closed;
        coeff(i) = 2.0 * closed / (static_cast<double>(k) * (k - 1));
    }
    return coeff;
}

double spectral_radius(const SynergyNetwork& net) {
    if (net.weights.size() == 0 || net.weights.maxCoeff() <= 0.0) return 0.0;
    return dominant_eigenpair(net.weights).first;
}

double effective_resistance_variance(const Eigen::MatrixXd& weights, const Eigen::VectorXd& p) {
    const int n = static_cast<int>(weights.rows());
    if (p.size() != n) throw ValidationError("distribution length does not match node count");
    if ((p.array() < -1e-12).any()) throw ValidationError("distribution has negative mass");
    if (std::abs(p.sum() - 1.0) > 1e-9) throw ValidationError("distribution does not sum to 1");

    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    auto comps = components_of(n, all, [&](int a, int b) { return weights(a, b) > 0.0; });
    const std::vector<int>* home = nullptr;
    for (const auto& comp : comps) {
        bool holds_mass = false;
        for (int v : comp)
            if (p(v) > 0.0) holds_mass = true;
        if (!holds_mass) continue;
        if (home != nullptr) throw ValidationError("distribution spans disconnected components");
        home = &comp;
    }
    if (home == nullptr) return 0.0;  // no mass anywhere reachable

    const int m = static_cast<int>(home->size());
    Eigen::MatrixXd sub(m, m);
    Eigen::VectorXd q(m);
    for (int a = 0; a < m; ++a) {
        q(a) = p((*home)[static_cast<std::size_t>(a)]);
        for (int b = 0; b < m; ++b)
            sub(a, b) = weights((*home)[static_cast<std::size_t>(a)], (*home)[static_cast<std::size_t>(b)]);
    }
    Eigen::MatrixXd lap = Eigen::MatrixXd(sub.rowwise().sum().asDiagonal()) - sub;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success) throw Error("laplacian eigendecomposition failed");
    Eigen::VectorXd evals = solver.eigenvalues();
    const double cutoff = std::max(evals.cwiseAbs().maxCoeff(), 1.0) * 1e-12;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(m);
    for (int a = 0; a < m; ++a)
        if (evals(a) > cutoff) inv(a) = 1.0 / evals(a);
    Eigen::MatrixXd pinv = solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();

    double variance = 0.0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            variance += 0.5 * q(a) * q(b) * (pinv(a, a) + pinv(b, b) - 2.0 * pinv(a, b));
    return variance;
}

VarianceResult network_variance(const SynergyNetwork& net, NodeDistribution distribution) {
    const int n = static_cast<int>(net.nodes.size());
    std::vector<int> support;
    for (int i = 0; i < n; ++i)
        if (net.weights.row(i).sum() > 0.0) support.push_back(i);
    if (support.empty()) throw DegenerateInputError("network variance needs at least one positive weight");

    auto comps = components_of(n, support, [&](int a, int b) { return net.weights(a, b) > 0.0; });
    const std::vector<int>& comp = pick_largest(comps);

    VarianceResult result;
    result.used_largest_component = comp.size() != support.size();

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    if (distribution == NodeDistribution::uniform) {
        for (int v : comp) p(v) = 1.0 / static_cast<double>(comp.size());
    } else {
        double total = 0.0;
        for (int v : comp) total += net.weights.row(v).sum();
        for (int v : comp) p(v) = net.weights.row(v).sum() / total;
    }
    result.value = effective_resistance_variance(net.weights, p);
    return result;
}

Eigen::VectorXd node_mean_synergy(const SynergyNetwork& net) {
    const int n = static_cast<int>(net.nodes.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        int count = 0;
        for (int j = 0; j < n; ++j) {
            if (net.weights(i, j) > 0.0) {
                sum += net.weights(i, j);
                ++count;
            }
        }
        if (count > 0) mean(i) = sum / count;
    }
    return mean;
}

NetworkStats compute_stats(const SynergyNetwork& net, const BackboneNetwork& backbone,
                           NodeDistribution distribution) {
    if (net.nodes != backbone.nodes) throw ValidationError("network and backbone node lists differ");
    NetworkStats stats;
    stats.nodes = net.nodes;
    const int n = static_cast<int>(net.nodes.size());
    if (backbone.edge_count() == 0) {
        stats.backbone_empty = true;
        stats.centrality = Eigen::VectorXd::Zero(n);
    } else {
        stats.centrality = eigenvector_centrality(backbone);
    }
    stats.clustering = clustering_coefficients(backbone);
    stats.mean_synergy = node_mean_synergy(net);
    stats.spectral_radius = spectral_radius(net);
    try {
        VarianceResult var = network_variance(net, distribution);
        stats.network_variance = var.value;
        stats.variance_defined = true;
        stats.variance_on_largest_component = var.used_largest_component;
    } catch (const DegenerateInputError&) {
        stats.network_variance = 0.0;
        stats.variance_defined = false;
    }
    return stats;
}

std::vector<BackboneNetwork> null_ensemble(const BackboneNetwork& backbone, int samples, std::uint64_t seed) {
    if (samples < 0) throw ValidationError("sample count must be nonnegative");
    std::vector<BackboneNetwork> out;
    out.reserve(static_cast<std::size_t>(samples));
    const auto base_edges = backbone_edges(backbone.adjacency);
    const int n = static_cast<int>(backbone.nodes.size());

    if (base_edges.size() < 2) {
        for (int s = 0; s < samples; ++s) {
            BackboneNetwork copy = backbone;
            copy.swap_limited = true;
            out.push_back(std::move(copy));
        }
        return out;
    }

    for (int s = 0; s < samples; ++s) {
        Rng rng(derive_seed(seed, "null-sample", static_cast<std::uint64_t>(s)));
        std::vector<EdgeKey> edges = base_edges;
        std::set<EdgeKey> present(edges.begin(), edges.end());
        const std::size_t attempts = 10 * edges.size();
        for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
            std::size_t e1 = rng.next_below(edges.size());
            std::size_t e2 = rng.next_below(edges.size());
            bool crossed = (rng.next_u64() & 1) != 0;
            if (e1 == e2) continue;
            auto [a, b] = edges[e1];
            auto [c, d] = edges[e2];
            EdgeKey new1 = crossed ? ordered(a, c) : ordered(a, d);
            EdgeKey new2 = crossed ? ordered(b, d) : ordered(c, b);
            if (new1.first == new1.second || new2.first == new2.second) continue;
            if (new1 == new2 || present.count(new1) || present.count(new2)) continue;
            present.erase(edges[e1]);
            present.erase(edges[e2]);
            present.insert(new1);
            present.insert(new2);
            edges[e1] = new1;
            edges[e2] = new2;
        }

        BackboneNetwork sample;
        sample.industry = backbone.industry;
        sample.cluster = backbone.cluster;
        sample.nodes = backbone.nodes;
        sample.adjacency = Eigen::MatrixXi::Zero(n, n);
        sample.provenance = Eigen::MatrixXd::Zero(n, n);
        for (const auto& [i, j] : present) {
            sample.adjacency(i, j) = 1;
            sample.adjacency(j, i) = 1;
            sample.provenance(i, j) = 1.0;
            sample.provenance(j, i) = 1.0;
        }
        out.push_back(std::move(sample));
    }
    return out;
}

MixingProbabilities sector_mixing(const BackboneNetwork& backbone,
                                  const std::map<std::string, std::string>& sector_of) {
    std::vector<std::string> node_sector(backbone.nodes.size());
    std::set<std::string> sectors;
    for (std::size_t i = 0; i < backbone.nodes.size(); ++i) {
        auto it = sector_of.find(backbone.nodes[i]);
        if (it == sector_of.end()) throw ValidationError("no sector for node: " + backbone.nodes[i]);
        node_sector[i] = it->second;
        sectors.insert(it->second);
    }

    MixingProbabilities mixing;
    for (auto it = sectors.begin(); it != sectors.end(); ++it)
        for (auto jt = it; jt != sectors.end(); ++jt) mixing.probability[{*it, *jt}] = 0.0;

    auto edges = backbone_edges(backbone.adjacency);
    if (edges.empty()) return mixing;  // defined stays false

    for (const auto& [i, j] : edges) {
        std::string a = node_sector[static_cast<std::size_t>(i)];
        std::string b = node_sector[static_cast<std::size_t>(j)];
        if (b < a) std::swap(a, b);
        mixing.probability[{a, b}] += 1.0;
    }
    for (auto& [key, value] : mixing.probability) {
        (void)key;
        value /= static_cast<double>(edges.size());
    }
    mixing.defined = true;
    return mixing;
}

MixingSummary mixing_ttest(const std::vector<MixingProbabilities>& empirical,
                           const std::vector<MixingProbabilities>& null_samples) {
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& m : empirical)
        if (m.defined)
            for (const auto& [key, unused] : m.probability) {
                (void)unused;
                keys.insert(key);
            }
    for (const auto& m : null_samples)
        if (m.defined)
            for (const auto& [key, unused] : m.probability) {
                (void)unused;
                keys.insert(key);
            }

    auto collect = [](const std::vector<MixingProbabilities>& list, const std::pair<std::string, std::string>& key) {
        std::vector<double> values;
        for (const auto& m : list) {
            if (!m.defined) continue;
            auto it = m.probability.find(key);
            values.push_back(it == m.probability.end() ? 0.0 : it->second);
        }
        return values;
    };

    MixingSummary summary;
    for (const auto& key : keys) {
        MixingCell cell;
        std::vector<double> xs = collect(empirical, key);
        std::vector<double> ys = collect(null_samples, key);
        cell.n_empirical = xs.size();
        cell.n_null = ys.size();
        if (!xs.empty()) cell.empirical_mean = stats::mean(xs);
        if (!ys.empty()) cell.null_mean = stats::mean(ys);
        if (xs.size() >= 2 && ys.size() >= 2) {
            try {
                stats::WelchResult welch = stats::welch_t_test(xs, ys);
                cell.t = welch.t;
                cell.df = welch.df;
                cell.p_value = welch.p_value;
                cell.stars = stats::significance_stars(welch.p_value);
                cell.defined = true;
            } catch (const DegenerateInputError&) {
                cell.defined = false;  // zero variance on both sides
            }
        }
        summary.cells[key] = cell;
    }
    return summary;
}

std::string network_to_edge_list(const SynergyNetwork& net) {
    std::ostringstream out;
    out << "node_i,node_j,weight\n";
    for (const auto& [i, j] : positive_edges(net.weights)) {
        out << net.nodes[static_cast<std::size_t>(i)] << ',' << net.nodes[static_cast<std::size_t>(j)] << ','
            << format_double(net.weights(i, j)) << '\n';
    }
    return out.str();
}

std::string backbone_to_edge_list(const BackboneNetwork& backbone) {
    std::ostringstream out;
    out << "node_i,node_j,weight,source_weight\n";
    for (const auto& [i, j] : backbone_edges(backbone.adjacency)) {
        out << backbone.nodes[static_cast<std::size_t>(i)] << ',' << backbone.nodes[static_cast<std::size_t>(j)]
            << ",1," << format_double(backbone.provenance(i, j)) << '\n';
    }
    return out.str();
}

std::string network_header_json(const std::string& industry, int cluster, const std::vector<std::string>& nodes) {
    nlohmann::ordered_json header;
    header["industry"] = industry;
    header["cluster"] = cluster;
    header["nodes"] = nodes;
    return header.dump(2) + "\n";
}

std::string stats_to_delimited(const NetworkStats& stats) {
    std::ostringstream out;
    out << "node,centrality,clustering,mean_synergy\n";
    for (std::size_t i = 0; i < stats.nodes.size(); ++i) {
        const int row = static_cast<int>(i);
        out << stats.nodes[i] << ',' << format_double(stats.centrality(row)) << ','
            << format_double(stats.clustering(row)) << ',' << format_double(stats.mean_synergy(row)) << '\n';
    }
    return out.str();
}

std::string stats_header_json(const NetworkStats& stats) {
    nlohmann::ordered_json header;
    header["spectral_radius"] = stats.spectral_radius;
    header["network_variance"] = stats.network_variance;
    header["variance_defined"] = stats.variance_defined;
    header["variance_on_largest_component"] = stats.variance_on_largest_component;
    header["backbone_empty"] = stats.backbone_empty;
    return header.dump(2) + "\n";
}

std::string mixing_summary_to_delimited(const MixingSummary& summary) {
    std::ostringstream out;
    out << "sector_a,sector_b,empirical_mean,null_mean,t,df,p_value,stars,defined\n";
    for (const auto& [key, cell] : summary.cells) {
        out << key.first << ',' << key.second << ',' << format_double(cell.empirical_mean) << ','
            << format_double(cell.null_mean) << ',';
        if (cell.defined) {
            out << format_double(cell.t) << ',' << format_double(cell.df) << ',' << format_double(cell.p_value) << ','
                << cell.stars << ",1\n";
        } else {
            out << "nan,nan,nan,,0\n";
        }
    }
    return out.str();
}

}  // namespace synio::net
