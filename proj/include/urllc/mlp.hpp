/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The urllc-alloc Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "urllc/error.hpp"
#include "urllc/rng.hpp"

namespace urllc {

struct DenseLayer {
    Eigen::MatrixXd weight; // outputs x inputs
    Eigen::VectorXd bias;
};

/// Fully connected net: ReLU hidden layers, softmax output. Inputs are
/// multiplied by input_scale before the first layer. The same type holds
/// gradients (MlpGradient), where input_scale is unused.
struct MlpParams {
    double input_scale = 1.0;
    std::vector<DenseLayer> layers;

    Eigen::Index num_inputs() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
    Eigen::Index num_outputs() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
        return n;
    }

    MlpParams zeros_like() const {
        MlpParams z;
        z.input_scale = input_scale;
        for (const auto& l : layers)
            z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                                Eigen::VectorXd::Zero(l.bias.size())});
        return z;
    }

    // this += a * other
    void axpy(double a, const MlpParams& other) {
        if (other.layers.size() != layers.size()) throw invalid_input("MlpParams::axpy: layer count mismatch");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            layers[i].weight += a * other.layers[i].weight;
            layers[i].bias += a * other.layers[i].bias;
        }
    }

    double l1_norm() const {
        double s = 0.0;
        for (const auto& l : layers) s += l.weight.cwiseAbs().sum() + l.bias.cwiseAbs().sum();
        return s;
    }

    bool all_finite() const {
        for (const auto& l : layers)
            if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
        return std::isfinite(input_scale);
    }

    // Flat views, weights row-major then bias, layer by layer.
    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(parameter_count());
        for (const auto& l : layers) {
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
        }
        return out;
    }

    void unflatten(const std::vector<double>& flat) {
        if (flat.size() != parameter_count()) throw invalid_input("MlpParams::unflatten: size mismatch");
        std::size_t i = 0;
        for (auto& l : layers) {
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[i++];
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[i++];
        }
    }
};

using MlpGradient = MlpParams;

/// Cached forward quantities for one batch (rows = samples).
struct ForwardTrace {
    Eigen::MatrixXd input;                    // scaled input
    std::vector<Eigen::MatrixXd> pre;         // pre-activation of every layer
    std::vector<Eigen::MatrixXd> activation;  // ReLU outputs, then softmax output
};

struct ForwardResult {
    Eigen::MatrixXd fractions;
    ForwardTrace trace;
};

/// Row-wise softmax with max subtraction.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd out(z.rows(), z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double m = z.row(r).maxCoeff();
        out.row(r) = (z.row(r).array() - m).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

/// d softmax(z) / dz = diag(p) - p p^T for a single logit vector.
inline Eigen::MatrixXd softmax_jacobian(const Eigen::VectorXd& z) {
    const Eigen::VectorXd p = softmax_rows(z.transpose()).transpose();
    Eigen::MatrixXd j = -p * p.transpose();
    j.diagonal() += p;
    return j;
}

inline ForwardResult forward(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    if (params.layers.empty()) throw invalid_input("forward: network has no layers");
    if (inputs.cols() != params.num_inputs()) throw invalid_input("forward: input width does not match network");
    ForwardResult res;
    auto& tr = res.trace;
    tr.input = inputs * params.input_scale;
    const Eigen::MatrixXd* prev = &tr.input;
    const std::size_t last = params.layers.size() - 1;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Eigen::MatrixXd z = (*prev) * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        tr.pre.push_back(z);
        tr.activation.push_back(l == last ? softmax_rows(z) : Eigen::MatrixXd(z.cwiseMax(0.0)));
        prev = &tr.activation.back();
    }
    res.fractions = tr.activation.back();
    return res;
}

inline Eigen::MatrixXd forward_fractions(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    return forward(params, inputs).fractions;
}

/// Gradient of a scalar loss w.r.t. all weights and biases, given the
/// loss gradient w.r.t. the softmax outputs (same shape as the batch output).
inline MlpGradient backward(const MlpParams& params, const ForwardTrace& trace, const Eigen::MatrixXd& grad_output) {
    const std::size_t n_layers = params.layers.size();
    if (trace.pre.size() != n_layers || trace.activation.size() != n_layers)
        throw invalid_input("backward: trace does not match network depth");
    const Eigen::MatrixXd& out = trace.activation.back();
    if (grad_output.rows() != out.rows() || grad_output.cols() != out.cols())
        throw invalid_input("backward: upstream gradient shape mismatch");
    for (std::size_t l = 0; l < n_layers; ++l)
        if (trace.pre[l].cols() != params.layers[l].weight.rows())
            throw invalid_input("backward: trace does not match layer widths");

    MlpGradient grad = params.zeros_like();
    // Softmax: dz = p .* (g - <p, g>)
    const Eigen::VectorXd inner = out.cwiseProduct(grad_output).rowwise().sum();
    Eigen::MatrixXd dz = out.cwiseProduct(grad_output.colwise() - inner);

    for (std::size_t li = n_layers; li-- > 0;) {
        const Eigen::MatrixXd& a_prev = li == 0 ? trace.input : trace.activation[li - 1];
        grad.layers[li].weight = dz.transpose() * a_prev;
        grad.layers[li].bias = dz.colwise().sum().transpose();
        if (li > 0) {
            Eigen::MatrixXd da = dz * params.layers[li].weight;
            dz = da.cwiseProduct((trace.pre[li - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return grad;
}

/// He-uniform weights U(-b, b) with b = sqrt(6/fan_in) (std sqrt(2/fan_in)),
/// zero biases. The output layer's bound is multiplied by output_gain.
inline MlpParams init_mlp(Rng& rng, const std::vector<int>& sizes, double input_scale = 1.0,
                          double output_gain = 1.0) {
    if (sizes.size() < 2) throw invalid_input("init_mlp: need at least input and output sizes");
    for (int s : sizes)
        if (s < 1) throw invalid_input("init_mlp: layer sizes must be >= 1");
    MlpParams p;
    p.input_scale = input_scale;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double gain = l + 2 == sizes.size() ? output_gain : 1.0;
        const double bound = gain * std::sqrt(6.0 / sizes[l]);
        DenseLayer layer{Eigen::MatrixXd(sizes[l + 1], sizes[l]), Eigen::VectorXd::Zero(sizes[l + 1])};
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

inline double init_weight_std(int fan_in) { return std::sqrt(2.0 / fan_in); }

/// Power-allocation net for K users: K inputs, two hidden layers of width K,
/// K softmax outputs; inputs scaled by 1/Nt so gains are unit-mean.
///
/// The output layer starts at power_net_output_gain times the usual scale,
/// so the initial policy is close to an equal split. A full-scale random
/// output layer produces large early gradients that switch off most ReLU
/// units for good, after which the net can no longer react to the channel.
inline constexpr double power_net_output_gain = 0.1;

inline MlpParams init_power_net(Rng& rng, int num_users, int num_antennas) {
    if (num_users < 1) throw invalid_input("init_power_net: need at least one user");
    if (num_antennas < 1) throw invalid_input("init_power_net: need at least one antenna");
    return init_mlp(rng, {num_users, num_users, num_users, num_users}, 1.0 / num_antennas, power_net_output_gain);
}

// --- checkpoint text format ------------------------------------------------
//
//   urllc-mlp 1
//   input_scale <double>
//   layers <L>
//   layer <i> <rows> <cols>
//   <rows lines of cols weights>
//   <one line of rows biases>
//   ... repeated per layer
//
// Doubles are written with 17 significant digits (exact round trip).

inline void save_mlp(std::ostream& os, const MlpParams& p) {
    os.precision(17);
    os << "urllc-mlp 1\n";
    os << "input_scale " << p.input_scale << '\n';
    os << "layers " << p.layers.size() << '\n';
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        const auto& l = p.layers[i];
        os << "layer " << i << ' ' << l.weight.rows() << ' ' << l.weight.cols() << '\n';
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) os << (c ? " " : "") << l.weight(r, c);
            os << '\n';
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) os << (r ? " " : "") << l.bias(r);
        os << '\n';
    }
}

namespace detail {
inline void expect_token(std::istream& is, const std::string& want) {
    std::string tok;
    if (!(is >> tok) || tok != want) throw invalid_input("checkpoint: expected '" + want + "', got '" + tok + "'");
}

inline double read_double(std::istream& is) {
    std::string tok;
    if (!(is >> tok)) throw invalid_input("checkpoint: truncated numeric data");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw invalid_input("checkpoint: bad number '" + tok + "'");
    }
    if (used != tok.size() || !std::isfinite(v)) throw invalid_input("checkpoint: bad number '" + tok + "'");
    return v;
}

inline long read_count(std::istream& is, long max_value) {
    long v = -1;
    if (!(is >> v) || v < 0 || v > max_value) throw invalid_input("checkpoint: bad size field");
    return v;
}
} // namespace detail

inline MlpParams load_mlp(std::istream& is) {
    detail::expect_token(is, "urllc-mlp");
    if (detail::read_count(is, 1000) != 1) throw invalid_input("checkpoint: unsupported format version");
    MlpParams p;
    detail::expect_token(is, "input_scale");
    p.input_scale = detail::read_double(is);
    detail::expect_token(is, "layers");
    const long n_layers = detail::read_count(is, 64);
    if (n_layers == 0) throw invalid_input("checkpoint: no layers");
    for (long i = 0; i < n_layers; ++i) {
        detail::expect_token(is, "layer");
        if (detail::read_count(is, 64) != i) throw invalid_input("checkpoint: layer index out of order");
        const long rows = detail::read_count(is, 1 << 16);
        const long cols = detail::read_count(is, 1 << 16);
        if (rows == 0 || cols == 0) throw invalid_input("checkpoint: empty layer");
        if (!p.layers.empty() && p.layers.back().weight.rows() != cols)
            throw invalid_input("checkpoint: layer widths do not chain");
        DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
        for (long r = 0; r < rows; ++r)
            for (long c = 0; c < cols; ++c) l.weight(r, c) = detail::read_double(is);
        for (long r = 0; r < rows; ++r) l.bias(r) = detail::read_double(is);
        p.layers.push_back(std::move(l));
    }
    std::string extra;
    if (is >> extra) throw invalid_input("checkpoint: trailing data '" + extra + "'");
    return p;
}

inline void save_mlp_file(const std::string& path, const MlpParams& p) {
    std::ofstream os(path);
    if (!os) throw invalid_input("cannot open '" + path + "' for writing");
    save_mlp(os, p);
}

inline MlpParams load_mlp_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw invalid_input("cannot open checkpoint '" + path + "'");
    return load_mlp(is);
}

} // namespace urllc
