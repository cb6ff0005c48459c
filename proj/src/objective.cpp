#include "xdef/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xdef::objective {

void validate(const ConfWeights& w) {
    if (std::fabs(w.alpha + w.beta + w.gamma - 1.0) > 1e-9)
        throw std::invalid_argument("confidence weights must sum to 1");
    if (w.alpha < 0.0 || w.beta < 0.0 || w.gamma < 0.0)
        throw std::invalid_argument("confidence weights must be nonnegative");
}

std::string shaping_range_warning(const ShapingConfig& c) {
    std::string out;
    if (c.lambda1 != 0.0 && (c.lambda1 < 0.01 || c.lambda1 > 0.5))
        out += "lambda1=" + std::to_string(c.lambda1) + " outside recommended range [0.01,0.5]; ";
    if (c.lambda2 != 0.0 && (c.lambda2 < 0.01 || c.lambda2 > 0.3))
        out += "lambda2=" + std::to_string(c.lambda2) + " outside recommended range [0.01,0.3]; ";
    return out;
}

double alignment_loss(const std::vector<double>& phi_policy, const std::vector<double>& phi_xai) {
    if (phi_policy.size() != phi_xai.size())
        throw std::invalid_argument("alignment_loss: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < phi_policy.size(); ++i) {
        double d = phi_policy[i] - phi_xai[i];
        acc += d * d;
    }
    return acc;
}

double conf_graph(const std::vector<double>& node_importance, const std::vector<int>& subgraph_nodes) {
    double total = 0.0;
    for (double w : node_importance) total += w;
    if (total <= 0.0) return 0.0;
    double inside = 0.0;
    for (int v : subgraph_nodes) {
        if (v < 0 || v >= static_cast<int>(node_importance.size()))
            throw std::invalid_argument("conf_graph: node index out of range");
        inside += node_importance[static_cast<std::size_t>(v)];
    }
    return inside / total;
}

double conf_temporal(const std::vector<double>& normalized_importance) {
    std::size_t t = normalized_importance.size();
    if (t == 0) throw std::invalid_argument("conf_temporal: empty importance vector");
    if (t == 1) return 1.0;
    double h = 0.0;
    for (double p : normalized_importance)
        if (p > 0.0) h -= p * std::log(p);
    return 1.0 - h / std::log(static_cast<double>(t));
}

double conf_policy(const std::vector<double>& phi_policy, const std::vector<double>& phi_xai) {
    if (phi_policy.size() != phi_xai.size())
        throw std::invalid_argument("conf_policy: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < phi_policy.size(); ++i) {
        dot += phi_policy[i] * phi_xai[i];
        na += phi_policy[i] * phi_policy[i];
        nb += phi_xai[i] * phi_xai[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

ConfidenceScore confidence(double c_graph, double c_temp, double c_policy, const ConfWeights& w) {
    validate(w);
    ConfidenceScore s;
    s.c_graph = c_graph;
    s.c_temp = c_temp;
    s.c_policy = c_policy;
    s.weights = w;
    s.total = w.alpha * c_graph + w.beta * c_temp + w.gamma * c_policy;
    return s;
}

double shaped_reward(double r_env, double l_align, double conf, const ShapingConfig& c) {
    return r_env - c.lambda1 * l_align + c.lambda2 * conf;
}

}  // namespace xdef::objective
