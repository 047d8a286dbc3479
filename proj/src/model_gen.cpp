// jadce - joint activity detection and channel estimation for grant-free access
// Copyright (C) 2026 the jadce authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "jadce/model_gen.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "jadce/io.hpp"
#include "jadce/rng.hpp"

namespace jadce {

void SystemConfig::validate() const {
    if (num_symbols < 1 || num_devices < 1 || num_antennas < 1)
        throw_invalid("system dimensions must be positive");
    if (!(p_active >= 0.0 && p_active <= 1.0))
        throw_invalid("p_active must lie in [0, 1]");
    if (std::isnan(snr_db))
        throw_invalid("snr_db must be a number or +inf");
}

SignatureKind signature_kind_from_string(const std::string &name) {
    if (name == "gaussian")
        return SignatureKind::gaussian;
    if (name == "binary")
        return SignatureKind::binary;
    if (name == "conditioned")
        return SignatureKind::conditioned;
    throw_invalid("unknown signature kind: " + name);
}

std::string to_string(SignatureKind kind) {
    switch (kind) {
    case SignatureKind::gaussian:
        return "gaussian";
    case SignatureKind::binary:
        return "binary";
    case SignatureKind::conditioned:
        return "conditioned";
    }
    return "?";
}

Mat lift_operator(const CMat &a) {
    require_finite(a, "operator");
    Eigen::Index r = a.rows(), c = a.cols();
    Mat out(2 * r, 2 * c);
    out.topLeftCorner(r, c) = a.real();
    out.topRightCorner(r, c) = -a.imag();
    out.bottomLeftCorner(r, c) = a.imag();
    out.bottomRightCorner(r, c) = a.real();
    return out;
}

Mat lift_signal(const CMat &a) {
    require_finite(a, "signal");
    Eigen::Index r = a.rows(), c = a.cols();
    Mat out(2 * r, c);
    out.topRows(r) = a.real();
    out.bottomRows(r) = a.imag();
    return out;
}

CMat unlift_operator(const Mat &a) {
    if (a.rows() % 2 != 0 || a.cols() % 2 != 0)
        throw_dims("lifted operator must have even dimensions");
    if (!is_lifted_operator(a))
        throw_invalid("matrix does not have the rotation-block structure of a lifted operator");
    Eigen::Index r = a.rows() / 2, c = a.cols() / 2;
    CMat out(r, c);
    out.real() = a.topLeftCorner(r, c);
    out.imag() = a.bottomLeftCorner(r, c);
    return out;
}

CMat unlift_signal(const Mat &a) {
    if (a.rows() % 2 != 0)
        throw_dims("lifted signal must have an even number of rows");
    Eigen::Index r = a.rows() / 2;
    CMat out(r, a.cols());
    out.real() = a.topRows(r);
    out.imag() = a.bottomRows(r);
    return out;
}

bool is_lifted_operator(const Mat &a, double tol) {
    if (a.rows() % 2 != 0 || a.cols() % 2 != 0)
        return false;
    Eigen::Index r = a.rows() / 2, c = a.cols() / 2;
    double dev = (a.topLeftCorner(r, c) - a.bottomRightCorner(r, c)).cwiseAbs().maxCoeff();
    double dev2 = (a.topRightCorner(r, c) + a.bottomLeftCorner(r, c)).cwiseAbs().maxCoeff();
    return std::max(dev, dev2) <= tol;
}

CMat gen_signature(SignatureKind kind, int num_symbols, int num_devices, std::uint64_t seed,
                   double kappa) {
    if (num_symbols < 1 || num_devices < 1)
        throw_invalid("signature dimensions must be positive");
    Rng rng = Rng::stream(seed, stream_domain::signature, 0);
    CMat s(num_symbols, num_devices);

    switch (kind) {
    case SignatureKind::gaussian:
        for (Eigen::Index j = 0; j < s.cols(); ++j)
            for (Eigen::Index i = 0; i < s.rows(); ++i)
                s(i, j) = rng.cnormal();
        return s;

    case SignatureKind::binary:
        for (Eigen::Index j = 0; j < s.cols(); ++j)
            for (Eigen::Index i = 0; i < s.rows(); ++i)
                s(i, j) = std::complex<double>(rng.sign(), 0.0);
        return s;

    case SignatureKind::conditioned: {
        if (!(kappa >= 1.0) || !std::isfinite(kappa))
            throw_invalid("conditioned signatures require kappa >= 1");
        for (Eigen::Index j = 0; j < s.cols(); ++j)
            for (Eigen::Index i = 0; i < s.rows(); ++i)
                s(i, j) = rng.cnormal();
        Eigen::BDCSVD<CMat> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::Index r = svd.singularValues().size();
        double smax = svd.singularValues()(0);
        Vec ramp(r);
        for (Eigen::Index j = 0; j < r; ++j) {
            double expo = (r > 1) ? static_cast<double>(j) / static_cast<double>(r - 1) : 0.0;
            ramp(j) = smax * std::pow(kappa, -expo);
        }
        return svd.matrixU() * ramp.asDiagonal() * svd.matrixV().adjoint();
    }
    }
    throw_invalid("unknown signature kind");
}

Sample gen_sample(const CMat &signature, const SystemConfig &cfg, std::uint64_t domain,
                  std::uint64_t index) {
    cfg.validate();
    if (signature.rows() != cfg.num_symbols || signature.cols() != cfg.num_devices)
        throw_dims("signature shape does not match the system config");

    int n = cfg.num_devices, m = cfg.num_antennas, l = cfg.num_symbols;
    Rng rng = Rng::stream(cfg.seed, domain, index);

    Sample s;
    s.activity.assign(static_cast<size_t>(n), 0);
    s.channel = CMat::Zero(n, m);
    for (int i = 0; i < n; ++i) {
        if (rng.bernoulli(cfg.p_active)) {
            s.activity[static_cast<size_t>(i)] = 1;
            for (int j = 0; j < m; ++j)
                s.channel(i, j) = rng.cnormal();
        }
    }

    s.x_lift = lift_signal(s.channel);
    Mat s_lift = lift_operator(signature);
    Mat signal = s_lift * s.x_lift; // == lift_signal(S * X), real-domain compute

    if (std::isinf(cfg.snr_db)) {
        s.sigma2 = 0.0;
        s.y_lift = std::move(signal);
        return s;
    }

    double snr_lin = std::pow(10.0, cfg.snr_db / 10.0);
    double power = signal.squaredNorm();
    if (power == 0.0)
        power = cfg.p_active * n * l * m; // ensemble fallback for an all-inactive draw
    s.sigma2 = power / (snr_lin * l * m);

    double noise_scale = std::sqrt(s.sigma2 / 2.0);
    Mat z(2 * l, m);
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < m; ++j) {
            z(i, j) = noise_scale * rng.normal();     // real part
            z(i + l, j) = noise_scale * rng.normal(); // imaginary part
        }
    }
    s.y_lift = signal + z;
    return s;
}

std::uint64_t Dataset::signature_hash() const { return hash_matrix(signature); }

Dataset gen_dataset(const CMat &signature, SignatureKind kind, double kappa,
                    const SystemConfig &cfg, std::uint64_t domain, int count) {
    if (count < 0)
        throw_invalid("sample count must be >= 0");
    Dataset ds;
    ds.config = cfg;
    ds.kind = kind;
    ds.kappa = kappa;
    ds.signature = signature;
    ds.s_lift = lift_operator(signature);
    ds.samples.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i)
        ds.samples.push_back(gen_sample(signature, cfg, domain, static_cast<std::uint64_t>(i)));
    return ds;
}

} // namespace jadce
