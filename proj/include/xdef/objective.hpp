#pragma once

#include <string>
#include <vector>

namespace xdef::objective {

struct ConfWeights {
    double alpha = 0.4;
    double beta = 0.2;
    double gamma = 0.4;
};

// throws std::invalid_argument unless alpha+beta+gamma == 1 within 1e-9
void validate(const ConfWeights& w);

struct ConfidenceScore {
    double c_graph = 0.0;
    double c_temp = 0.0;
    double c_policy = 0.0;
    double total = 0.0;
    ConfWeights weights;
};

struct ShapingConfig {
    double lambda1 = 0.1;   // alignment coefficient
    double lambda2 = 0.05;  // confidence weight
};

// returns a warning string when the lambdas fall outside the recommended
// ranges (zero is allowed for ablations); empty string when fine
std::string shaping_range_warning(const ShapingConfig& c);

// squared L2 distance between two equal-dimension attribution vectors
double alignment_loss(const std::vector<double>& phi_policy, const std::vector<double>& phi_xai);

// structural completeness: sum of node importance inside the subgraph over
// the total; all-zero importance scores 0
double conf_graph(const std::vector<double>& node_importance, const std::vector<int>& subgraph_nodes);

// temporal concentration: 1 - H(I~)/log t (natural log); t = 1 scores 1
double conf_temporal(const std::vector<double>& normalized_importance);

// cosine similarity of the two nonnegative attribution vectors; either
// vector zero scores 0
double conf_policy(const std::vector<double>& phi_policy, const std::vector<double>& phi_xai);

ConfidenceScore confidence(double c_graph, double c_temp, double c_policy, const ConfWeights& w);

// r' = r_env - lambda1 * L_align + lambda2 * Conf
double shaped_reward(double r_env, double l_align, double conf, const ShapingConfig& c);

}  // namespace xdef::objective
